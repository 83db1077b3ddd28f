#pragma once

// Umbrella header: the whole topology-flexible SOM engine.

#include "toposom/accum.hpp"
#include "toposom/config.hpp"
#include "toposom/dataset.hpp"
#include "toposom/matrix.hpp"
#include "toposom/metrics.hpp"
#include "toposom/model_io.hpp"
#include "toposom/parallel.hpp"
#include "toposom/rng.hpp"
#include "toposom/sampling.hpp"
#include "toposom/stats.hpp"
#include "toposom/topology.hpp"
#include "toposom/trainer.hpp"
#include "toposom/tune.hpp"
