#pragma once

#include <vector>

#include "pcq/autoencoder.hpp"
#include "pcq/point_cloud.hpp"
#include "pcq/voxel_metrics.hpp"

namespace pcq {

// Either every latent feature map or a single one.
struct FeatureSelector {
    bool all = true;
    int index = 0;

    static FeatureSelector all_maps() { return {}; }
    static FeatureSelector single(int index) { return {false, index}; }
};

// Mean squared difference between latent tensors over the selected maps.
double latent_mse(const Tensor4& ya, const Tensor4& yb, const FeatureSelector& sel);

struct PerceptualConfig {
    int block_size = 64;
    TdfConfig tdf{};
    Aggregation aggregation = Aggregation::L1;
};

// Latent-space distance between two clouds: both are translated to a shared
// origin, partitioned over the union of occupied blocks (a block missing from
// one cloud voxelizes as empty), run through the analysis transform, and the
// per-block latent MSEs are aggregated. The synthesis transform is never
// evaluated.
double perceptual_distance(const PointCloud& a, const PointCloud& b,
                           const AutoencoderParams& params, const FeatureSelector& sel,
                           const PerceptualConfig& cfg = {});

struct FeatureUsage {
    bool used = false;
    double min_value = 0.0;
    double max_value = 0.0;
};

// A feature map is unused when its latent values vary by less than `tol`
// across every probe block.
std::vector<FeatureUsage> detect_unused_features(const AutoencoderParams& params,
                                                 const std::vector<Tensor4>& probe,
                                                 double tol = 1e-9);

// Index of the map whose scores correlate most strongly (|Pearson|) with the
// MOS values; ties go to the lowest index. Maps with constant scores are
// excluded as unused.
int select_best_feature(const std::vector<std::vector<double>>& per_map_scores,
                        const std::vector<double>& mos);

}  // namespace pcq
