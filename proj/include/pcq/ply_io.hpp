#pragma once

#include <filesystem>

#include "pcq/point_cloud.hpp"

namespace pcq {

enum class PlyFormat { ascii, binary_little_endian };

// Reads the vertex element of an ascii 1.0 or binary_little_endian 1.0 PLY
// file. Requires x/y/z properties; loads nx/ny/nz as normals when present
// (re-normalized). All other properties and elements are skipped.
PointCloud read_ply(const std::filesystem::path& path);

// Writes x/y/z (and normals when present). Binary coordinates are 32-bit
// little-endian floats; ascii output keeps full double precision.
void write_ply(const PointCloud& cloud, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::ascii);

}  // namespace pcq
