#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace pcq {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double squared_norm() const { return dot(*this); }
    double norm() const { return std::sqrt(squared_norm()); }

    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : *this;
    }

    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

using Point = Vec3;

inline double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    const double dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

// Geometry-only point cloud in voxel units. Normals, when present, are unit
// vectors parallel to `points`. Attributes such as color are not kept.
struct PointCloud {
    std::vector<Point> points;
    std::vector<Vec3> normals;  // empty, or one unit vector per point
    std::optional<int> bit_depth;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }
};

}  // namespace pcq
