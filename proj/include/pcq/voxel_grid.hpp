#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pcq/point_cloud.hpp"

namespace pcq {

enum class GridRepr { binary, tdf, tsdf };

std::string to_string(GridRepr repr);
GridRepr grid_repr_from_string(const std::string& name);

// Dense cubic voxel grid. Values are stored x-fastest:
// index = x + size * (y + size * z).
struct VoxelGrid {
    int size = 0;
    GridRepr repr = GridRepr::binary;
    std::vector<double> values;

    VoxelGrid() = default;
    VoxelGrid(int size_, GridRepr repr_, double fill = 0.0)
        : size(size_), repr(repr_),
          values(static_cast<std::size_t>(size_) * size_ * size_, fill) {}

    std::size_t voxel_count() const { return values.size(); }
    std::size_t index(int x, int y, int z) const {
        return static_cast<std::size_t>(x) +
               static_cast<std::size_t>(size) *
                   (static_cast<std::size_t>(y) + static_cast<std::size_t>(size) * z);
    }
    double at(int x, int y, int z) const { return values[index(x, y, z)]; }
    double& at(int x, int y, int z) { return values[index(x, y, z)]; }
};

struct BlockOrigin {
    int x = 0;
    int y = 0;
    int z = 0;
    auto operator<=>(const BlockOrigin&) const = default;
};

// Partition of a cloud into cubic blocks; origins are multiples of
// block_size, block-local coordinates lie in [0, block_size).
struct BlockGrid {
    int block_size = 0;
    std::map<BlockOrigin, PointCloud> blocks;
};

struct TdfConfig {
    double upper_bound = 5.0;  // u in voxel units, >= 1
};

BlockGrid partition_blocks(const PointCloud& cloud, int block_size);

VoxelGrid voxelize_binary(const PointCloud& local, int size);

// Exact Euclidean distance (voxel units) from every voxel to its nearest
// occupied voxel; zero at occupied voxels.
std::vector<double> distance_transform(const VoxelGrid& occupancy);

VoxelGrid voxelize_tdf(const PointCloud& local, int size, const TdfConfig& cfg);

// As voxelize_tdf, with the sign taken from the orientation of the nearest
// point's normal relative to the voxel center (sign of zero is +).
VoxelGrid voxelize_tsdf(const PointCloud& local, int size, const TdfConfig& cfg);

// Debug dump: "PCQGRID <size> <repr>" then size^3 values in x-fastest order.
void write_grid(const VoxelGrid& grid, const std::filesystem::path& path);
VoxelGrid read_grid(const std::filesystem::path& path);

// Translates both clouds by the (floored) joint coordinate minimum so block
// alignment is shared, partitions each, and voxelizes over the union of
// occupied block origins. A block missing from one cloud voxelizes as empty:
// all zeros for binary, all ones (everything at the truncation bound) for
// tdf. Ordered by block origin.
std::vector<std::pair<VoxelGrid, VoxelGrid>> aligned_block_grids(const PointCloud& a,
                                                                 const PointCloud& b,
                                                                 int block_size, GridRepr repr,
                                                                 const TdfConfig& cfg = {});

}  // namespace pcq
