#include "pcq/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pcq/errors.hpp"
#include "pcq/rng.hpp"

namespace pcq {

namespace {

double clamp_into(double v, double extent) {
    return std::clamp(v, 0.0, std::nexttoward(extent, 0.0));
}

}  // namespace

PointCloud synthetic_cloud(SyntheticShape shape, double extent, std::size_t point_count,
                           std::uint64_t seed) {
    if (!(extent > 1.0) || point_count == 0) {
        throw InvalidArgument("synthetic clouds need extent > 1 and at least one point");
    }
    Rng rng(seed);
    PointCloud cloud;
    cloud.points.reserve(point_count);
    const double center = extent / 2.0;
    const double radius = extent * 0.35;

    for (std::size_t i = 0; i < point_count; ++i) {
        Point p;
        switch (shape) {
            case SyntheticShape::plane: {
                // Tilted plane through the center, with surface roughness.
                const double u = rng.uniform(0.1 * extent, 0.9 * extent);
                const double v = rng.uniform(0.1 * extent, 0.9 * extent);
                const double w = center + 0.15 * (u - center) + 0.1 * (v - center) +
                                 rng.normal(0.0, 0.15);
                p = {u, v, w};
                break;
            }
            case SyntheticShape::sphere: {
                const double z = rng.uniform(-1.0, 1.0);
                const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
                const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
                p = {center + radius * s * std::cos(phi), center + radius * s * std::sin(phi),
                     center + radius * z};
                break;
            }
            case SyntheticShape::box: {
                const int face = static_cast<int>(rng.uniform_index(6));
                const double u = rng.uniform(-radius, radius);
                const double v = rng.uniform(-radius, radius);
                const double axis_value = (face % 2 == 0) ? -radius : radius;
                switch (face / 2) {
                    case 0: p = {center + axis_value, center + u, center + v}; break;
                    case 1: p = {center + u, center + axis_value, center + v}; break;
                    default: p = {center + u, center + v, center + axis_value}; break;
                }
                break;
            }
        }
        p = {clamp_into(p.x, extent), clamp_into(p.y, extent), clamp_into(p.z, extent)};
        cloud.points.push_back(p);
    }
    return cloud;
}

PointCloud synthetic_cloud(std::size_t variant, double extent, std::size_t point_count,
                           std::uint64_t seed) {
    static constexpr SyntheticShape shapes[] = {SyntheticShape::plane, SyntheticShape::sphere,
                                                SyntheticShape::box};
    return synthetic_cloud(shapes[variant % 3], extent, point_count, seed);
}

PointCloud add_jitter(const PointCloud& cloud, double sigma, double extent,
                      std::uint64_t seed) {
    if (sigma < 0.0) {
        throw InvalidArgument("jitter sigma must be non-negative");
    }
    Rng rng(seed);
    PointCloud out;
    out.points.reserve(cloud.size());
    out.bit_depth = cloud.bit_depth;
    for (const Point& p : cloud.points) {
        out.points.push_back({clamp_into(p.x + rng.normal(0.0, sigma), extent),
                              clamp_into(p.y + rng.normal(0.0, sigma), extent),
                              clamp_into(p.z + rng.normal(0.0, sigma), extent)});
    }
    return out;
}

}  // namespace pcq
