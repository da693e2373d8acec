#include "pcq/perceptual.hpp"

#include <cmath>
#include <limits>

#include "pcq/errors.hpp"
#include "pcq/stats.hpp"

namespace pcq {

double latent_mse(const Tensor4& ya, const Tensor4& yb, const FeatureSelector& sel) {
    if (!ya.same_shape(yb)) {
        throw ShapeMismatch("latent tensors differ in shape");
    }
    const std::size_t per_map = ya.spatial_count();
    std::size_t begin = 0;
    std::size_t end = ya.element_count();
    if (!sel.all) {
        if (sel.index < 0 || sel.index >= ya.channels) {
            throw InvalidArgument("feature map index " + std::to_string(sel.index) +
                                  " out of range [0, " + std::to_string(ya.channels) + ")");
        }
        begin = static_cast<std::size_t>(sel.index) * per_map;
        end = begin + per_map;
    }
    double total = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        const double diff = ya.values[i] - yb.values[i];
        total += diff * diff;
    }
    return total / static_cast<double>(end - begin);
}

double perceptual_distance(const PointCloud& a, const PointCloud& b,
                           const AutoencoderParams& params, const FeatureSelector& sel,
                           const PerceptualConfig& cfg) {
    if (a.empty() || b.empty()) {
        throw EmptyInput("perceptual distance requires non-empty clouds");
    }
    if (params.repr != GridRepr::binary && params.repr != GridRepr::tdf) {
        throw ReprMismatch("perceptual distance needs binary- or tdf-trained weights");
    }
    if (!sel.all && sel.index >= params.latent_channels()) {
        throw InvalidArgument("feature map index out of range");
    }
    if (cfg.block_size % 8 != 0) {
        throw InvalidArgument("perceptual block size must be divisible by 8");
    }

    const auto pairs = aligned_block_grids(a, b, cfg.block_size, params.repr, cfg.tdf);
    std::vector<double> block_values;
    block_values.reserve(pairs.size());
    for (const auto& [grid_a, grid_b] : pairs) {
        const Tensor4 ya = analysis_forward(to_tensor(grid_a), params);
        const Tensor4 yb = analysis_forward(to_tensor(grid_b), params);
        block_values.push_back(latent_mse(ya, yb, sel));
    }
    return aggregate_blocks(block_values, cfg.aggregation);
}

std::vector<FeatureUsage> detect_unused_features(const AutoencoderParams& params,
                                                 const std::vector<Tensor4>& probe,
                                                 double tol) {
    if (probe.empty()) {
        throw EmptyInput("feature-usage detection needs a non-empty probe set");
    }
    const int feature_count = params.latent_channels();
    std::vector<FeatureUsage> report(static_cast<std::size_t>(feature_count));
    for (auto& usage : report) {
        usage.min_value = std::numeric_limits<double>::infinity();
        usage.max_value = -std::numeric_limits<double>::infinity();
    }
    for (const Tensor4& block : probe) {
        const Tensor4 latent = analysis_forward(block, params);
        const std::size_t per_map = latent.spatial_count();
        for (int f = 0; f < feature_count; ++f) {
            auto& usage = report[static_cast<std::size_t>(f)];
            const std::size_t base = static_cast<std::size_t>(f) * per_map;
            for (std::size_t i = 0; i < per_map; ++i) {
                const double v = latent.values[base + i];
                usage.min_value = std::min(usage.min_value, v);
                usage.max_value = std::max(usage.max_value, v);
            }
        }
    }
    for (auto& usage : report) {
        usage.used = usage.max_value - usage.min_value >= tol;
    }
    return report;
}

int select_best_feature(const std::vector<std::vector<double>>& per_map_scores,
                        const std::vector<double>& mos) {
    if (per_map_scores.size() < 2) {
        throw InvalidArgument("feature selection needs at least two stimuli");
    }
    if (per_map_scores.size() != mos.size()) {
        throw ShapeMismatch("score matrix and mos vector differ in length");
    }
    bool mos_varies = false;
    for (const double m : mos) {
        if (std::isnan(m)) {
            throw InvalidArgument("mos vector contains NaN");
        }
        mos_varies = mos_varies || m != mos.front();
    }
    if (!mos_varies) {
        throw DegenerateInput("mos vector is constant");
    }
    const std::size_t feature_count = per_map_scores.front().size();
    for (const auto& row : per_map_scores) {
        if (row.size() != feature_count) {
            throw ShapeMismatch("ragged per-map score matrix");
        }
    }

    int best = -1;
    double best_corr = -1.0;
    std::vector<double> column(per_map_scores.size());
    for (std::size_t f = 0; f < feature_count; ++f) {
        for (std::size_t s = 0; s < per_map_scores.size(); ++s) {
            column[s] = per_map_scores[s][f];
        }
        double corr;
        try {
            corr = std::abs(pearson(column, mos));
        } catch (const DegenerateInput&) {
            continue;  // constant column: the map is unused
        }
        if (corr > best_corr) {
            best_corr = corr;
            best = static_cast<int>(f);
        }
    }
    if (best < 0) {
        throw NoUsableFeature("every feature map has constant scores");
    }
    return best;
}

}  // namespace pcq
