#pragma once

// Umbrella header: the whole library.

#include "depthbench/core/grad_check.hpp"
#include "depthbench/core/ops.hpp"
#include "depthbench/core/random.hpp"
#include "depthbench/core/tensor.hpp"
#include "depthbench/data/dataset.hpp"
#include "depthbench/data/files.hpp"
#include "depthbench/mono/losses.hpp"
#include "depthbench/mono/model.hpp"
#include "depthbench/nn/blocks.hpp"
#include "depthbench/nn/params.hpp"
#include "depthbench/stereo/anynet.hpp"
#include "depthbench/stereo/losses.hpp"
#include "depthbench/train/checkpoint.hpp"
#include "depthbench/bench/compare.hpp"
#include "depthbench/bench/experiment.hpp"
#include "depthbench/bench/gen_data.hpp"
