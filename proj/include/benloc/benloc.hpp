#pragma once

#include "benloc/common.hpp"
#include "benloc/config.hpp"
#include "benloc/graph.hpp"
#include "benloc/instance.hpp"
#include "benloc/learners.hpp"
#include "benloc/log_features.hpp"
#include "benloc/metrics.hpp"
#include "benloc/pipeline.hpp"
#include "benloc/splits.hpp"
#include "benloc/static_features.hpp"
#include "benloc/synth.hpp"
#include "benloc/tree.hpp"
