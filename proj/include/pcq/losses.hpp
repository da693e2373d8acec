#pragma once

#include "pcq/tensor.hpp"

namespace pcq {

struct LossResult {
    double loss = 0.0;
    Tensor4 grad;  // d loss / d prediction
};

struct AdaptiveMseConfig {
    double beta = 0.01;  // bounding factor, in (0, 0.5)
};

// Class-balanced MSE for TDF targets: voxels at the truncation bound
// (target == 1) are weighted by w, all nearer voxels by 1 - w, where w is the
// proportion of targets strictly below 1 clamped to [beta, 1 - beta]. Mean
// over elements; exact analytic gradient.
LossResult adaptive_mse_loss(const Tensor4& target, const Tensor4& prediction,
                             const AdaptiveMseConfig& cfg);

struct FocalLossConfig {
    double alpha = 0.75;
    double gamma = 2.0;
    double clip_lo = 0.001;
    double clip_hi = 0.999;
};

// Focal loss over occupancy targets with clipped logs; an unnormalized sum.
// As in the grid metric, exactly-binary predictions bypass the modulating
// factor. The gradient of a clipped log is zero outside the clip bounds.
LossResult focal_loss_grad(const Tensor4& target, const Tensor4& prediction,
                           const FocalLossConfig& cfg);

}  // namespace pcq
