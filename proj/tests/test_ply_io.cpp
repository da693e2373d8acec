#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "pcq/errors.hpp"
#include "pcq/ply_io.hpp"
#include "pcq/rng.hpp"

using namespace pcq;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("pcq_ply_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

std::filesystem::path write_text(const TempDir& dir, const std::string& name,
                                 const std::string& text) {
    const auto p = dir.path / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed, bool with_normals = false) {
    Rng rng(seed);
    PointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        cloud.points.push_back({rng.uniform(0.0, 512.0), rng.uniform(0.0, 512.0),
                                rng.uniform(0.0, 512.0)});
        if (with_normals) {
            Vec3 v{rng.normal(), rng.normal(), rng.normal()};
            cloud.normals.push_back(v.normalized());
        }
    }
    return cloud;
}

}  // namespace

TEST_CASE("ascii PLY with a single vertex") {
    TempDir dir;
    const auto p = write_text(dir, "one.ply",
                              "ply\n"
                              "format ascii 1.0\n"
                              "element vertex 1\n"
                              "property float x\n"
                              "property float y\n"
                              "property float z\n"
                              "end_header\n"
                              "1 2 3\n");
    const PointCloud cloud = read_ply(p);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.points[0] == Vec3{1.0, 2.0, 3.0});
    CHECK(!cloud.has_normals());
}

TEST_CASE("ascii round trip is bit-for-bit on coordinates") {
    TempDir dir;
    const PointCloud cloud = random_cloud(64, 99);
    const auto p = dir.path / "rt.ply";
    write_ply(cloud, p, PlyFormat::ascii);
    const PointCloud back = read_ply(p);
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(back.points[i] == cloud.points[i]);
    }
}

TEST_CASE("normals are written and re-read") {
    TempDir dir;
    const PointCloud cloud = random_cloud(8, 3, true);
    const auto p = dir.path / "n.ply";
    write_ply(cloud, p, PlyFormat::ascii);
    const PointCloud back = read_ply(p);
    REQUIRE(back.has_normals());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(back.normals[i].x == doctest::Approx(cloud.normals[i].x).epsilon(1e-12));
        CHECK(back.normals[i].norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("binary round trip keeps 32-bit float precision") {
    TempDir dir;
    const PointCloud cloud = random_cloud(128, 5);
    const auto pb = dir.path / "b.ply";
    write_ply(cloud, pb, PlyFormat::binary_little_endian);
    const PointCloud back = read_ply(pb);
    REQUIRE(back.size() == cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        CHECK(back.points[i].x == double(float(cloud.points[i].x)));
        CHECK(back.points[i].y == double(float(cloud.points[i].y)));
        CHECK(back.points[i].z == double(float(cloud.points[i].z)));
    }

    // ascii -> binary -> ascii is stable once values are float32.
    const auto pa = dir.path / "a.ply";
    write_ply(back, pa, PlyFormat::ascii);
    const PointCloud again = read_ply(pa);
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(again.points[i] == back.points[i]);
    }
}

TEST_CASE("header miscount raises ParseError") {
    TempDir dir;
    const auto p = write_text(dir, "short.ply",
                              "ply\n"
                              "format ascii 1.0\n"
                              "element vertex 10\n"
                              "property float x\n"
                              "property float y\n"
                              "property float z\n"
                              "end_header\n"
                              "1 2 3\n"
                              "4 5 6\n");
    CHECK_THROWS_AS(read_ply(p), ParseError);
}

TEST_CASE("binary_big_endian is rejected") {
    TempDir dir;
    const auto p = write_text(dir, "be.ply",
                              "ply\nformat binary_big_endian 1.0\n"
                              "element vertex 1\nproperty float x\nproperty float y\n"
                              "property float z\nend_header\n");
    CHECK_THROWS_AS(read_ply(p), UnsupportedFormat);
}

TEST_CASE("zero vertices raises EmptyInput") {
    TempDir dir;
    const auto p = write_text(dir, "zero.ply",
                              "ply\nformat ascii 1.0\nelement vertex 0\n"
                              "property float x\nproperty float y\nproperty float z\n"
                              "end_header\n");
    CHECK_THROWS_AS(read_ply(p), EmptyInput);
}

TEST_CASE("malformed header reports a line number") {
    TempDir dir;
    const auto p = write_text(dir, "bad.ply",
                              "ply\nformat ascii 1.0\nelement vertex\n"
                              "end_header\n");
    try {
        read_ply(p);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 3);
    }
}

TEST_CASE("unknown properties and foreign elements are skipped") {
    TempDir dir;
    const auto p = write_text(dir, "extra.ply",
                              "ply\n"
                              "format ascii 1.0\n"
                              "comment made by nobody\n"
                              "element vertex 2\n"
                              "property float x\n"
                              "property float y\n"
                              "property float z\n"
                              "property uchar red\n"
                              "element face 1\n"
                              "property list uchar int vertex_indices\n"
                              "end_header\n"
                              "1 2 3 255\n"
                              "4 5 6 128\n"
                              "3 0 1 0\n");
    const PointCloud cloud = read_ply(p);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.points[1] == Vec3{4.0, 5.0, 6.0});
}

TEST_CASE("one-point ascii write declares element vertex 1") {
    TempDir dir;
    PointCloud cloud;
    cloud.points.push_back({1.0, 2.0, 3.0});
    const auto p = dir.path / "hdr.ply";
    write_ply(cloud, p, PlyFormat::ascii);
    std::ifstream in(p);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("element vertex 1\n") != std::string::npos);
}

TEST_CASE("normals emit nx ny nz properties") {
    TempDir dir;
    const PointCloud cloud = random_cloud(2, 8, true);
    const auto p = dir.path / "nrm.ply";
    write_ply(cloud, p, PlyFormat::ascii);
    std::ifstream in(p);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("property double nx") != std::string::npos);
    CHECK(text.find("property double nz") != std::string::npos);
}

TEST_CASE("writing an empty cloud is refused") {
    TempDir dir;
    CHECK_THROWS_AS(write_ply(PointCloud{}, dir.path / "e.ply", PlyFormat::ascii), EmptyInput);
}

TEST_CASE("binary little endian vertices parse with foreign leading element") {
    TempDir dir;
    // A leading element with a list property exercises binary skipping.
    std::string header =
        "ply\nformat binary_little_endian 1.0\n"
        "element junk 1\n"
        "property list uchar float samples\n"
        "element vertex 1\n"
        "property float x\nproperty float y\nproperty float z\n"
        "end_header\n";
    std::string body;
    body.push_back(char(2));  // two list items
    const float values[] = {1.5f, 2.5f, 7.0f, 8.0f, 9.0f};
    body.append(reinterpret_cast<const char*>(values), sizeof(values));
    const auto p = write_text(dir, "mixed.ply", header + body);
    const PointCloud cloud = read_ply(p);
    REQUIRE(cloud.size() == 1);
    CHECK(cloud.points[0] == Vec3{7.0, 8.0, 9.0});
}
