#pragma once

#include "firank/bench.hpp"
#include "firank/cdf.hpp"
#include "firank/checkpoint.hpp"
#include "firank/cost.hpp"
#include "firank/dataset.hpp"
#include "firank/error.hpp"
#include "firank/graph.hpp"
#include "firank/interaction_ops.hpp"
#include "firank/kernels.hpp"
#include "firank/layers.hpp"
#include "firank/metrics.hpp"
#include "firank/model.hpp"
#include "firank/model_io.hpp"
#include "firank/params.hpp"
#include "firank/preprocess.hpp"
#include "firank/rng.hpp"
#include "firank/schema.hpp"
#include "firank/svd.hpp"
#include "firank/synth.hpp"
#include "firank/tensor.hpp"
