#pragma once

#include <cstdint>

#include "pcq/point_cloud.hpp"

namespace pcq {

enum class SyntheticShape { plane, sphere, box };

// Deterministic desk-scale stand-ins for scanned content: points sampled on
// a plane, sphere, or box surface inside [0, extent)^3, with mild jitter so
// surfaces are not axis-degenerate.
PointCloud synthetic_cloud(SyntheticShape shape, double extent, std::size_t point_count,
                           std::uint64_t seed);

// Round-robin over the three shapes.
PointCloud synthetic_cloud(std::size_t variant, double extent, std::size_t point_count,
                           std::uint64_t seed);

// Adds i.i.d. Gaussian coordinate noise, then clamps into [0, extent).
PointCloud add_jitter(const PointCloud& cloud, double sigma, double extent,
                      std::uint64_t seed);

}  // namespace pcq
