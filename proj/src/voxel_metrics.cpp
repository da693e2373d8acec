#include "pcq/voxel_metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pcq/errors.hpp"

namespace pcq {

std::string to_string(Aggregation agg) {
    return agg == Aggregation::L1 ? "L1" : "L2";
}

Aggregation aggregation_from_string(const std::string& name) {
    if (name == "L1" || name == "l1") return Aggregation::L1;
    if (name == "L2" || name == "l2") return Aggregation::L2;
    throw InvalidArgument("unknown aggregation '" + name + "' (expected L1 or L2)");
}

namespace {

void check_same_shape(const VoxelGrid& a, const VoxelGrid& b) {
    if (a.size != b.size || a.values.size() != b.values.size()) {
        throw ShapeMismatch("voxel grids differ in size (" + std::to_string(a.size) + " vs " +
                            std::to_string(b.size) + ")");
    }
}

void check_binary(const VoxelGrid& g, const char* which) {
    if (g.repr != GridRepr::binary) {
        throw InvalidArgument(std::string(which) + " grid must use the binary representation");
    }
}

void check_clip(const VoxelMetricConfig& cfg) {
    if (!(cfg.clip_lo < cfg.clip_hi)) {
        throw InvalidArgument("clip_lo must be below clip_hi");
    }
}

inline double clip(double v, const VoxelMetricConfig& cfg) {
    return std::clamp(v, cfg.clip_lo, cfg.clip_hi);
}

// Core cross-entropy sum with a per-voxel weight callback; no normalization.
template <typename WeightFn>
double weighted_ce_sum(const VoxelGrid& a, const VoxelGrid& b, const VoxelMetricConfig& cfg,
                       WeightFn&& weight_at) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double xa = a.values[i];
        const double xb = b.values[i];
        const double w = weight_at(i);
        total -= w * xa * std::log(clip(xb, cfg)) +
                 (1.0 - w) * (1.0 - xa) * std::log(clip(1.0 - xb, cfg));
    }
    return total;
}

}  // namespace

double wbce(const VoxelGrid& a, const VoxelGrid& b, double alpha, const VoxelMetricConfig& cfg) {
    check_same_shape(a, b);
    check_binary(a, "reference");
    check_binary(b, "distorted");
    check_clip(cfg);
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1)");
    }
    const double sum = weighted_ce_sum(a, b, cfg, [alpha](std::size_t) { return alpha; });
    return sum / static_cast<double>(a.values.size());
}

double bce(const VoxelGrid& a, const VoxelGrid& b, const VoxelMetricConfig& cfg) {
    return wbce(a, b, 0.5, cfg);
}

double focal_loss(const VoxelGrid& a, const VoxelGrid& b, const VoxelMetricConfig& cfg) {
    check_same_shape(a, b);
    check_binary(a, "reference");
    check_clip(cfg);
    if (cfg.gamma < 0.0) {
        throw InvalidArgument("gamma must be non-negative");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double xa = a.values[i];
        const double xb = b.values[i];
        if (xb < 0.0 || xb > 1.0) {
            throw InvalidArgument("focal loss expects values in [0, 1]");
        }
        const bool exact_binary = xb == 0.0 || xb == 1.0;
        const double occupied_factor = exact_binary ? 1.0 : std::pow(1.0 - xb, cfg.gamma);
        const double empty_factor = exact_binary ? 1.0 : std::pow(xb, cfg.gamma);
        total -= cfg.alpha * xa * occupied_factor * std::log(clip(xb, cfg)) +
                 (1.0 - cfg.alpha) * (1.0 - xa) * empty_factor * std::log(clip(1.0 - xb, cfg));
    }
    return total;
}

double nabce(const VoxelGrid& a, const VoxelGrid& b, const VoxelMetricConfig& cfg) {
    check_same_shape(a, b);
    check_binary(a, "reference");
    check_binary(b, "distorted");
    check_clip(cfg);
    const int m = cfg.nabce_window;
    if (m < 1 || m % 2 == 0) {
        throw InvalidArgument("naBCE window must be an odd positive integer");
    }
    const int size = a.size;
    const int half = m / 2;

    // Inverse distances for all window offsets except the center.
    std::vector<double> inv_dist(static_cast<std::size_t>(m) * m * m, 0.0);
    for (int dz = -half; dz <= half; ++dz) {
        for (int dy = -half; dy <= half; ++dy) {
            for (int dx = -half; dx <= half; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                const std::size_t o = static_cast<std::size_t>(dx + half) +
                                      static_cast<std::size_t>(m) *
                                          (static_cast<std::size_t>(dy + half) +
                                           static_cast<std::size_t>(m) *
                                               static_cast<std::size_t>(dz + half));
                inv_dist[o] = 1.0 / std::sqrt(double(dx * dx + dy * dy + dz * dz));
            }
        }
    }

    std::vector<double> resemblance(a.values.size(), 0.0);
    double max_r = 0.0;
    for (int z = 0; z < size; ++z) {
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                const double occ = a.at(x, y, z);
                double r = 0.0;
                for (int dz = std::max(-half, -z); dz <= std::min(half, size - 1 - z); ++dz) {
                    for (int dy = std::max(-half, -y); dy <= std::min(half, size - 1 - y); ++dy) {
                        for (int dx = std::max(-half, -x); dx <= std::min(half, size - 1 - x);
                             ++dx) {
                            if (a.at(x + dx, y + dy, z + dz) == occ) {
                                r += inv_dist[static_cast<std::size_t>(dx + half) +
                                              static_cast<std::size_t>(m) *
                                                  (static_cast<std::size_t>(dy + half) +
                                                   static_cast<std::size_t>(m) *
                                                       static_cast<std::size_t>(dz + half))];
                            }
                        }
                    }
                }
                resemblance[a.index(x, y, z)] = r;
                max_r = std::max(max_r, r);
            }
        }
    }

    const double sum = weighted_ce_sum(a, b, cfg, [&](std::size_t i) {
        const double ratio = max_r > 0.0 ? resemblance[i] / max_r : 0.0;
        return std::max(1.0 - ratio, 0.001);
    });
    return sum / static_cast<double>(a.values.size());
}

double tdf_mse(const VoxelGrid& a, const VoxelGrid& b) {
    check_same_shape(a, b);
    if (a.repr != GridRepr::tdf || b.repr != GridRepr::tdf) {
        throw InvalidArgument("tdf_mse expects two TDF grids");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double diff = a.values[i] - b.values[i];
        total += diff * diff;
    }
    return total / static_cast<double>(a.values.size());
}

double aggregate_blocks(std::span<const double> values, Aggregation norm) {
    if (values.empty()) {
        throw InvalidArgument("cannot aggregate an empty block list");
    }
    double total = 0.0;
    for (const double v : values) {
        total += norm == Aggregation::L1 ? v : v * v;
    }
    const double mean = total / static_cast<double>(values.size());
    return norm == Aggregation::L1 ? mean : std::sqrt(mean);
}

}  // namespace pcq
