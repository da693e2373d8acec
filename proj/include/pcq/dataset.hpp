#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pcq/tensor.hpp"
#include "pcq/voxel_grid.hpp"

namespace pcq {

// Translates the cloud to the origin, partitions it, and voxelizes every
// occupied block as a single-channel tensor in the given representation
// (binary or tdf).
std::vector<Tensor4> blocks_from_cloud(const PointCloud& cloud, GridRepr repr, int block_size,
                                       const TdfConfig& cfg = {});

// Blocks from every .ply file in the directory, visited in name order.
// Throws EmptyInput when the directory holds no PLY files.
std::vector<Tensor4> load_training_blocks(const std::filesystem::path& dir, GridRepr repr,
                                          int block_size, const TdfConfig& cfg = {});

// Blocks from seeded synthetic shapes (planes, spheres, boxes), one cloud
// per shape variant.
std::vector<Tensor4> synthetic_training_blocks(std::size_t cloud_count, GridRepr repr,
                                               int block_size, const TdfConfig& cfg = {},
                                               std::uint64_t seed = 1);

}  // namespace pcq
