#pragma once

#include <span>

#include "pcq/voxel_grid.hpp"

namespace pcq {

enum class Aggregation { L1, L2 };

std::string to_string(Aggregation agg);
Aggregation aggregation_from_string(const std::string& name);

struct VoxelMetricConfig {
    double alpha = 0.75;   // balancing weight in (0,1)
    double gamma = 2.0;    // focal exponent, >= 0
    double clip_lo = 0.001;
    double clip_hi = 0.999;
    int nabce_window = 5;  // odd window edge m
    Aggregation aggregation = Aggregation::L1;
};

// Eq.-style weighted binary cross entropy between occupancy grids, mean over
// voxels, log arguments clipped to [clip_lo, clip_hi]. Grid `a` supplies the
// reference occupancies.
double wbce(const VoxelGrid& a, const VoxelGrid& b, double alpha,
            const VoxelMetricConfig& cfg = {});

// wbce with alpha = 0.5.
double bce(const VoxelGrid& a, const VoxelGrid& b, const VoxelMetricConfig& cfg = {});

// Focal loss; an unnormalized sum, unlike wbce. `b` may hold occupancy
// probabilities in [0,1]. For exactly-binary values of `b` the modulating
// factor is taken as 1, so gamma only affects fractional values; on binary
// grids the result equals voxel_count * wbce(a, b, alpha).
double focal_loss(const VoxelGrid& a, const VoxelGrid& b, const VoxelMetricConfig& cfg = {});

// Neighborhood-adaptive BCE: the balancing weight per voxel u is
// max(1 - r_u / max(r), 0.001), where r_u sums inverse distances to voxels in
// the m^3 window around u (truncated at borders) sharing u's occupancy in `a`.
double nabce(const VoxelGrid& a, const VoxelGrid& b, const VoxelMetricConfig& cfg = {});

double tdf_mse(const VoxelGrid& a, const VoxelGrid& b);

// L1 = mean, L2 = root mean square.
double aggregate_blocks(std::span<const double> values, Aggregation norm);

}  // namespace pcq
