#pragma once

#include <cstddef>
#include <vector>

#include "pcq/voxel_grid.hpp"

namespace pcq {

// Dense (channels, width, depth, height) tensor. Within a channel the layout
// matches VoxelGrid: x-fastest, index = x + W * (y + D * z).
struct Tensor4 {
    int channels = 0;
    int width = 0;
    int depth = 0;
    int height = 0;
    std::vector<double> values;

    Tensor4() = default;
    Tensor4(int c, int w, int d, int h, double fill = 0.0)
        : channels(c), width(w), depth(d), height(h),
          values(static_cast<std::size_t>(c) * w * d * h, fill) {}

    std::size_t element_count() const { return values.size(); }
    std::size_t spatial_count() const {
        return static_cast<std::size_t>(width) * depth * height;
    }
    std::size_t index(int c, int x, int y, int z) const {
        return static_cast<std::size_t>(c) * spatial_count() + static_cast<std::size_t>(x) +
               static_cast<std::size_t>(width) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(depth) * z);
    }
    double at(int c, int x, int y, int z) const { return values[index(c, x, y, z)]; }
    double& at(int c, int x, int y, int z) { return values[index(c, x, y, z)]; }

    bool same_shape(const Tensor4& o) const {
        return channels == o.channels && width == o.width && depth == o.depth &&
               height == o.height;
    }
};

// Single-channel tensor view of a voxel grid (same value layout).
Tensor4 to_tensor(const VoxelGrid& grid);

}  // namespace pcq
