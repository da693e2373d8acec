#include "pcq/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "pcq/errors.hpp"
#include "pcq/ply_io.hpp"
#include "pcq/synthetic.hpp"

namespace pcq {

std::vector<Tensor4> blocks_from_cloud(const PointCloud& cloud, GridRepr repr, int block_size,
                                       const TdfConfig& cfg) {
    if (cloud.empty()) {
        throw EmptyInput("cannot build blocks from an empty cloud");
    }
    if (repr != GridRepr::binary && repr != GridRepr::tdf) {
        throw InvalidArgument("training blocks use the binary or tdf representation");
    }

    Vec3 lo = cloud.points.front();
    for (const Point& p : cloud.points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    }
    const Vec3 shift{std::floor(lo.x), std::floor(lo.y), std::floor(lo.z)};
    PointCloud shifted;
    shifted.points.reserve(cloud.size());
    for (const Point& p : cloud.points) {
        shifted.points.push_back(p - shift);
    }

    const BlockGrid blocks = partition_blocks(shifted, block_size);
    std::vector<Tensor4> tensors;
    tensors.reserve(blocks.blocks.size());
    for (const auto& [origin, local] : blocks.blocks) {
        const VoxelGrid grid = repr == GridRepr::binary
                                   ? voxelize_binary(local, block_size)
                                   : voxelize_tdf(local, block_size, cfg);
        tensors.push_back(to_tensor(grid));
    }
    return tensors;
}

std::vector<Tensor4> load_training_blocks(const std::filesystem::path& dir, GridRepr repr,
                                          int block_size, const TdfConfig& cfg) {
    if (!std::filesystem::is_directory(dir)) {
        throw IoError("'" + dir.string() + "' is not a directory");
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ply") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        throw EmptyInput("no .ply files in '" + dir.string() + "'");
    }

    std::vector<Tensor4> tensors;
    for (const auto& file : files) {
        std::vector<Tensor4> blocks = blocks_from_cloud(read_ply(file), repr, block_size, cfg);
        for (Tensor4& t : blocks) {
            tensors.push_back(std::move(t));
        }
    }
    return tensors;
}

std::vector<Tensor4> synthetic_training_blocks(std::size_t cloud_count, GridRepr repr,
                                               int block_size, const TdfConfig& cfg,
                                               std::uint64_t seed) {
    if (cloud_count == 0) {
        throw EmptyInput("synthetic dataset needs at least one cloud");
    }
    std::vector<Tensor4> tensors;
    const double extent = static_cast<double>(block_size);
    const std::size_t points_per_cloud =
        static_cast<std::size_t>(block_size) * block_size * 2;
    for (std::size_t i = 0; i < cloud_count; ++i) {
        const PointCloud cloud = synthetic_cloud(i, extent, points_per_cloud, seed + i);
        std::vector<Tensor4> blocks = blocks_from_cloud(cloud, repr, block_size, cfg);
        for (Tensor4& t : blocks) {
            tensors.push_back(std::move(t));
        }
    }
    return tensors;
}

}  // namespace pcq
