#include "pcq/voxel_grid.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "pcq/errors.hpp"
#include "pcq/kd_tree.hpp"
#include "pcq/parallel.hpp"

namespace pcq {

std::string to_string(GridRepr repr) {
    switch (repr) {
        case GridRepr::binary: return "binary";
        case GridRepr::tdf: return "tdf";
        case GridRepr::tsdf: return "tsdf";
    }
    return "binary";
}

GridRepr grid_repr_from_string(const std::string& name) {
    if (name == "binary") return GridRepr::binary;
    if (name == "tdf") return GridRepr::tdf;
    if (name == "tsdf") return GridRepr::tsdf;
    throw InvalidArgument("unknown grid representation '" + name + "'");
}

BlockGrid partition_blocks(const PointCloud& cloud, int block_size) {
    if (block_size < 2) {
        throw InvalidArgument("block_size must be >= 2");
    }
    BlockGrid grid;
    grid.block_size = block_size;
    const double bs = block_size;
    const bool with_normals = cloud.has_normals();
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud.points[i];
        if (p.x < 0.0 || p.y < 0.0 || p.z < 0.0) {
            throw InvalidArgument("partition_blocks requires non-negative coordinates");
        }
        const BlockOrigin origin{static_cast<int>(std::floor(p.x / bs)) * block_size,
                                 static_cast<int>(std::floor(p.y / bs)) * block_size,
                                 static_cast<int>(std::floor(p.z / bs)) * block_size};
        PointCloud& block = grid.blocks[origin];
        block.points.push_back({p.x - origin.x, p.y - origin.y, p.z - origin.z});
        if (with_normals) {
            block.normals.push_back(cloud.normals[i]);
        }
    }
    return grid;
}

VoxelGrid voxelize_binary(const PointCloud& local, int size) {
    if (size < 1) {
        throw InvalidArgument("grid size must be positive");
    }
    VoxelGrid grid(size, GridRepr::binary);
    for (const Point& p : local.points) {
        const int x = static_cast<int>(std::floor(p.x));
        const int y = static_cast<int>(std::floor(p.y));
        const int z = static_cast<int>(std::floor(p.z));
        if (x < 0 || y < 0 || z < 0 || x >= size || y >= size || z >= size) {
            throw InvalidArgument("point outside the block during voxelization");
        }
        grid.at(x, y, z) = 1.0;
    }
    return grid;
}

std::vector<double> distance_transform(const VoxelGrid& occupancy) {
    const int size = occupancy.size;
    std::vector<Point> occupied;
    for (int z = 0; z < size; ++z) {
        for (int y = 0; y < size; ++y) {
            for (int x = 0; x < size; ++x) {
                if (occupancy.at(x, y, z) != 0.0) {
                    occupied.push_back({static_cast<double>(x), static_cast<double>(y),
                                        static_cast<double>(z)});
                }
            }
        }
    }
    if (occupied.empty()) {
        throw EmptyBlock("distance transform of an all-empty grid");
    }

    const KdTree index(std::move(occupied));
    std::vector<double> distances(occupancy.voxel_count());
    parallel_for(static_cast<std::int64_t>(size), [&](std::int64_t z0, std::int64_t z1) {
        for (std::int64_t z = z0; z < z1; ++z) {
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    const Neighbor nn = index.nearest({static_cast<double>(x),
                                                       static_cast<double>(y),
                                                       static_cast<double>(z)});
                    distances[occupancy.index(x, y, static_cast<int>(z))] =
                        std::sqrt(nn.squared_distance);
                }
            }
        }
    });
    return distances;
}

namespace {

void check_tdf_config(const TdfConfig& cfg) {
    if (!(cfg.upper_bound >= 1.0)) {
        throw InvalidArgument("TDF upper bound must be >= 1");
    }
}

}  // namespace

VoxelGrid voxelize_tdf(const PointCloud& local, int size, const TdfConfig& cfg) {
    check_tdf_config(cfg);
    if (local.empty()) {
        throw EmptyBlock("cannot compute a TDF for an empty block");
    }
    const VoxelGrid occupancy = voxelize_binary(local, size);
    const std::vector<double> distances = distance_transform(occupancy);
    VoxelGrid grid(size, GridRepr::tdf);
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        grid.values[i] = std::min(distances[i], cfg.upper_bound) / cfg.upper_bound;
    }
    return grid;
}

VoxelGrid voxelize_tsdf(const PointCloud& local, int size, const TdfConfig& cfg) {
    check_tdf_config(cfg);
    if (!local.has_normals()) {
        throw InvalidArgument("TSDF voxelization requires per-point normals");
    }
    VoxelGrid grid = voxelize_tdf(local, size, cfg);
    grid.repr = GridRepr::tsdf;

    const KdTree index(local.points);
    parallel_for(static_cast<std::int64_t>(size), [&](std::int64_t z0, std::int64_t z1) {
        for (std::int64_t z = z0; z < z1; ++z) {
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    const Point center{x + 0.5, y + 0.5, z + 0.5};
                    const Neighbor nn = index.nearest(center);
                    const Vec3 offset = center - local.points[nn.index];
                    const double side = offset.dot(local.normals[nn.index]);
                    if (side < 0.0) {
                        grid.at(x, y, static_cast<int>(z)) *= -1.0;
                    }
                }
            }
        }
    });
    return grid;
}

void write_grid(const VoxelGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << "PCQGRID " << grid.size << ' ' << to_string(grid.repr) << '\n';
    std::string line;
    std::array<char, 32> buf;
    const std::size_t per_line = static_cast<std::size_t>(grid.size);
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), grid.values[i]);
        line.append(buf.data(), res.ptr);
        line.push_back((i + 1) % per_line == 0 ? '\n' : ' ');
        if (line.size() > 1 << 16) {
            out << line;
            line.clear();
        }
    }
    out << line;
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

std::vector<std::pair<VoxelGrid, VoxelGrid>> aligned_block_grids(const PointCloud& a,
                                                                 const PointCloud& b,
                                                                 int block_size, GridRepr repr,
                                                                 const TdfConfig& cfg) {
    if (a.empty() || b.empty()) {
        throw EmptyInput("block alignment requires two non-empty clouds");
    }
    if (repr == GridRepr::tsdf) {
        throw InvalidArgument("aligned block grids support binary and tdf only");
    }

    Vec3 lo = a.points.front();
    for (const Point& p : a.points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    }
    for (const Point& p : b.points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    }
    const Vec3 shift{std::floor(lo.x), std::floor(lo.y), std::floor(lo.z)};

    auto shifted = [&shift](const PointCloud& cloud) {
        PointCloud out;
        out.points.reserve(cloud.size());
        for (const Point& p : cloud.points) {
            out.points.push_back(p - shift);
        }
        return out;
    };
    const BlockGrid blocks_a = partition_blocks(shifted(a), block_size);
    const BlockGrid blocks_b = partition_blocks(shifted(b), block_size);

    const double empty_fill = repr == GridRepr::binary ? 0.0 : 1.0;
    auto grid_for = [&](const BlockGrid& grid, const BlockOrigin& origin) {
        const auto it = grid.blocks.find(origin);
        if (it == grid.blocks.end()) {
            return VoxelGrid(block_size, repr, empty_fill);
        }
        return repr == GridRepr::binary ? voxelize_binary(it->second, block_size)
                                        : voxelize_tdf(it->second, block_size, cfg);
    };

    std::vector<std::pair<VoxelGrid, VoxelGrid>> result;
    auto it_a = blocks_a.blocks.begin();
    auto it_b = blocks_b.blocks.begin();
    while (it_a != blocks_a.blocks.end() || it_b != blocks_b.blocks.end()) {
        BlockOrigin origin;
        if (it_b == blocks_b.blocks.end() ||
            (it_a != blocks_a.blocks.end() && it_a->first <= it_b->first)) {
            origin = it_a->first;
        } else {
            origin = it_b->first;
        }
        result.emplace_back(grid_for(blocks_a, origin), grid_for(blocks_b, origin));
        if (it_a != blocks_a.blocks.end() && it_a->first == origin) ++it_a;
        if (it_b != blocks_b.blocks.end() && it_b->first == origin) ++it_b;
    }
    return result;
}

VoxelGrid read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string magic, repr_name;
    int size = 0;
    if (!(in >> magic >> size >> repr_name) || magic != "PCQGRID" || size < 1) {
        throw ParseError("malformed PCQGRID header in '" + path.string() + "'");
    }
    VoxelGrid grid(size, grid_repr_from_string(repr_name));
    for (std::size_t i = 0; i < grid.voxel_count(); ++i) {
        if (!(in >> grid.values[i])) {
            throw ParseError("truncated PCQGRID body in '" + path.string() + "'");
        }
    }
    return grid;
}

}  // namespace pcq
