#pragma once

#include <vector>

#include "pcq/point_cloud.hpp"

namespace pcq {

struct PsnrConfig {
    double resolution = 1.0;  // point-cloud resolution in voxel units, > 0
};

// Per-point unit normals from local quadric fits over the k nearest
// neighbors (query point included), oriented away from the neighborhood
// centroid. Rank-deficient fits fall back to the covariance plane normal;
// `plane_fallback`, when given, records which points fell back.
PointCloud estimate_normals(const PointCloud& cloud, int k = 9,
                            std::vector<bool>* plane_fallback = nullptr);

// Symmetric point-to-point MSE: max of the two directed mean squared
// nearest-neighbor distances.
double d1_mse(const PointCloud& a, const PointCloud& b);

// Symmetric point-to-plane MSE: the error vector is projected onto the
// normal of the point being measured. Both clouds must carry normals.
double d2_mse(const PointCloud& a, const PointCloud& b);

// 10 log10(peak^2 / mse) with peak = 3 * resolution. Returns +infinity for
// mse == 0.
double geometry_psnr(double mse, const PsnrConfig& cfg);

// Default PSNR resolution rule: 2^bit_depth - 1 when the reference carries
// bit-depth metadata, otherwise the longest bounding-box edge.
double default_resolution(const PointCloud& reference);

}  // namespace pcq
