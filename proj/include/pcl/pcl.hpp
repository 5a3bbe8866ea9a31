#pragma once

// Umbrella header.

#include "pcl/augment.hpp"
#include "pcl/config.hpp"
#include "pcl/consistency.hpp"
#include "pcl/core.hpp"
#include "pcl/data.hpp"
#include "pcl/geometry.hpp"
#include "pcl/i2g.hpp"
#include "pcl/image.hpp"
#include "pcl/image_io.hpp"
#include "pcl/metrics.hpp"
#include "pcl/nn/checkpoint.hpp"
#include "pcl/nn/model.hpp"
#include "pcl/nn/ops.hpp"
#include "pcl/nn/optim.hpp"
#include "pcl/nn/tensor.hpp"
#include "pcl/nn/train.hpp"
