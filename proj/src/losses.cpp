#include "pcq/losses.hpp"

#include <algorithm>
#include <cmath>

#include "pcq/errors.hpp"

namespace pcq {

namespace {

void check_shapes(const Tensor4& target, const Tensor4& prediction) {
    if (!target.same_shape(prediction)) {
        throw ShapeMismatch("loss target and prediction shapes differ");
    }
}

}  // namespace

LossResult adaptive_mse_loss(const Tensor4& target, const Tensor4& prediction,
                             const AdaptiveMseConfig& cfg) {
    check_shapes(target, prediction);
    if (!(cfg.beta > 0.0 && cfg.beta < 0.5)) {
        throw InvalidArgument("adaptive MSE beta must lie in (0, 0.5)");
    }

    const std::size_t n = target.element_count();
    std::size_t near_count = 0;
    for (const double v : target.values) {
        if (v < 0.0 || v > 1.0) {
            throw InvalidArgument("adaptive MSE targets must lie in [0, 1]");
        }
        if (v < 1.0) {
            ++near_count;
        }
    }
    const double w = std::clamp(static_cast<double>(near_count) / static_cast<double>(n),
                                cfg.beta, 1.0 - cfg.beta);

    LossResult result;
    result.grad = Tensor4(prediction.channels, prediction.width, prediction.depth,
                          prediction.height);
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double xa = target.values[i];
        const double diff = xa - prediction.values[i];
        const double weight = xa == 1.0 ? w : 1.0 - w;
        total += weight * diff * diff;
        result.grad.values[i] = -2.0 * weight * diff * inv_n;
    }
    result.loss = total * inv_n;
    return result;
}

LossResult focal_loss_grad(const Tensor4& target, const Tensor4& prediction,
                           const FocalLossConfig& cfg) {
    check_shapes(target, prediction);
    if (!(cfg.clip_lo < cfg.clip_hi)) {
        throw InvalidArgument("clip_lo must be below clip_hi");
    }
    if (cfg.gamma < 0.0) {
        throw InvalidArgument("gamma must be non-negative");
    }

    LossResult result;
    result.grad = Tensor4(prediction.channels, prediction.width, prediction.depth,
                          prediction.height);
    double total = 0.0;
    for (std::size_t i = 0; i < target.element_count(); ++i) {
        const double xa = target.values[i];
        const double xb = prediction.values[i];
        if (xb < 0.0 || xb > 1.0) {
            throw InvalidArgument("focal loss expects predictions in [0, 1]");
        }

        const double pos = std::clamp(xb, cfg.clip_lo, cfg.clip_hi);
        const double neg = std::clamp(1.0 - xb, cfg.clip_lo, cfg.clip_hi);
        const bool pos_interior = xb > cfg.clip_lo && xb < cfg.clip_hi;
        const bool neg_interior = 1.0 - xb > cfg.clip_lo && 1.0 - xb < cfg.clip_hi;

        const bool exact_binary = xb == 0.0 || xb == 1.0;
        double occupied_factor = 1.0;
        double occupied_factor_grad = 0.0;
        double empty_factor = 1.0;
        double empty_factor_grad = 0.0;
        if (!exact_binary) {
            occupied_factor = std::pow(1.0 - xb, cfg.gamma);
            empty_factor = std::pow(xb, cfg.gamma);
            if (cfg.gamma > 0.0) {
                occupied_factor_grad = -cfg.gamma * std::pow(1.0 - xb, cfg.gamma - 1.0);
                empty_factor_grad = cfg.gamma * std::pow(xb, cfg.gamma - 1.0);
            }
        }

        const double log_pos = std::log(pos);
        const double log_neg = std::log(neg);
        total -= cfg.alpha * xa * occupied_factor * log_pos +
                 (1.0 - cfg.alpha) * (1.0 - xa) * empty_factor * log_neg;

        double grad = 0.0;
        grad -= cfg.alpha * xa *
                (occupied_factor_grad * log_pos + occupied_factor * (pos_interior ? 1.0 / pos : 0.0));
        grad -= (1.0 - cfg.alpha) * (1.0 - xa) *
                (empty_factor_grad * log_neg + empty_factor * (neg_interior ? -1.0 / neg : 0.0));
        result.grad.values[i] = grad;
    }
    result.loss = total;
    return result;
}

}  // namespace pcq
