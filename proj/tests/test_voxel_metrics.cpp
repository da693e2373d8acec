#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pcq/errors.hpp"
#include "pcq/rng.hpp"
#include "pcq/voxel_metrics.hpp"

using namespace pcq;

namespace {

VoxelGrid random_binary(int size, double density, Rng& rng) {
    VoxelGrid g(size, GridRepr::binary);
    for (double& v : g.values) v = rng.uniform() < density ? 1.0 : 0.0;
    return g;
}

VoxelGrid constant_grid(int size, double value, GridRepr repr = GridRepr::binary) {
    VoxelGrid g(size, repr);
    for (double& v : g.values) v = value;
    return g;
}

// Direct per-voxel evaluation of the neighborhood-adaptive weights.
double nabce_oracle(const VoxelGrid& a, const VoxelGrid& b, int m, double clip_lo,
                    double clip_hi) {
    const int size = a.size;
    const int half = m / 2;
    std::vector<double> r(a.values.size(), 0.0);
    double max_r = 0.0;
    for (int z = 0; z < size; ++z)
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                double acc = 0.0;
                for (int dz = -half; dz <= half; ++dz)
                    for (int dy = -half; dy <= half; ++dy)
                        for (int dx = -half; dx <= half; ++dx) {
                            if (dx == 0 && dy == 0 && dz == 0) continue;
                            const int nx = x + dx, ny = y + dy, nz = z + dz;
                            if (nx < 0 || ny < 0 || nz < 0 || nx >= size || ny >= size ||
                                nz >= size)
                                continue;
                            if (a.at(nx, ny, nz) == a.at(x, y, z)) {
                                acc += 1.0 / std::sqrt(double(dx * dx + dy * dy + dz * dz));
                            }
                        }
                r[a.index(x, y, z)] = acc;
                max_r = std::max(max_r, acc);
            }

    double total = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        const double alpha_u = std::max(1.0 - (max_r > 0.0 ? r[i] / max_r : 0.0), 0.001);
        const double xb_pos = std::clamp(b.values[i], clip_lo, clip_hi);
        const double xb_neg = std::clamp(1.0 - b.values[i], clip_lo, clip_hi);
        total -= alpha_u * a.values[i] * std::log(xb_pos) +
                 (1.0 - alpha_u) * (1.0 - a.values[i]) * std::log(xb_neg);
    }
    return total / double(a.values.size());
}

}  // namespace

TEST_CASE("wbce on identical grids is the clipped agreement level") {
    const int size = 4;
    const double n = size * size * size;
    Rng rng(3);
    const VoxelGrid a = random_binary(size, 0.4, rng);
    double occupied = 0.0;
    for (const double v : a.values) occupied += v;

    const double alpha = 0.7;
    const double expected =
        -(alpha * occupied * std::log(0.999) + (1.0 - alpha) * (n - occupied) * std::log(0.999)) /
        n;
    CHECK(wbce(a, a, alpha) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("wbce all-ones vs all-zeros hits the clip floor") {
    const VoxelGrid a = constant_grid(4, 1.0);
    const VoxelGrid b = constant_grid(4, 0.0);
    // Every voxel contributes -0.75 log(0.001).
    CHECK(wbce(a, b, 0.75) == doctest::Approx(-0.75 * std::log(0.001)).epsilon(1e-12));
    CHECK(wbce(a, b, 0.75) == doctest::Approx(5.18103).epsilon(1e-4));
}

TEST_CASE("bce is wbce at alpha one half") {
    Rng rng(17);
    const VoxelGrid a = random_binary(6, 0.3, rng);
    const VoxelGrid b = random_binary(6, 0.3, rng);
    CHECK(bce(a, b) == wbce(a, b, 0.5));
}

TEST_CASE("focal loss is gamma-invariant on binary grids and equals N x wbce") {
    Rng rng(23);
    const VoxelGrid a = random_binary(8, 0.25, rng);
    const VoxelGrid b = random_binary(8, 0.25, rng);
    const double n = double(a.values.size());

    VoxelMetricConfig cfg;
    cfg.alpha = 0.75;
    cfg.gamma = 2.0;
    const double reference = focal_loss(a, b, cfg);
    for (const double gamma : {0.5, 1.0, 4.0}) {
        cfg.gamma = gamma;
        CHECK(focal_loss(a, b, cfg) == doctest::Approx(reference).epsilon(1e-15));
    }
    CHECK(reference == doctest::Approx(n * wbce(a, b, 0.75)).epsilon(1e-12));
}

TEST_CASE("focal loss on a probabilistic grid applies the modulating factor") {
    const VoxelGrid a = constant_grid(4, 1.0);
    VoxelGrid b = constant_grid(4, 0.5);
    b.repr = GridRepr::binary;  // probability payload in a binary-tagged grid
    VoxelMetricConfig cfg;
    cfg.alpha = 0.5;
    cfg.gamma = 2.0;
    const double n = double(a.values.size());
    // Per voxel: 0.5 * 0.25 * (-log 0.5).
    CHECK(focal_loss(a, b, cfg) ==
          doctest::Approx(n * 0.5 * 0.25 * -std::log(0.5)).epsilon(1e-12));
}

TEST_CASE("nabce matches the brute-force oracle on random 8^3 grids") {
    Rng rng(29);
    VoxelMetricConfig cfg;
    for (int trial = 0; trial < 4; ++trial) {
        const VoxelGrid a = random_binary(8, 0.3, rng);
        const VoxelGrid b = random_binary(8, 0.3, rng);
        const double expected = nabce_oracle(a, b, cfg.nabce_window, cfg.clip_lo, cfg.clip_hi);
        CHECK(nabce(a, b, cfg) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("nabce weights floor at 0.001 on a uniform grid") {
    // All-occupied A: interior voxels reach max resemblance, so their weight
    // floors; the metric is then dominated by near-zero-weight terms.
    const VoxelGrid a = constant_grid(7, 1.0);
    const VoxelGrid b = constant_grid(7, 1.0);
    const double value = nabce(a, b, {});
    // Every term is -alpha_u log(0.999) with alpha_u in [0.001, 1].
    CHECK(value > 0.0);
    CHECK(value <= -std::log(0.999) + 1e-12);
    const double interior_only = -0.001 * std::log(0.999);
    CHECK(value >= interior_only);
}

TEST_CASE("tdf mse basics and oracle") {
    const VoxelGrid zero = constant_grid(5, 0.0, GridRepr::tdf);
    const VoxelGrid one = constant_grid(5, 1.0, GridRepr::tdf);
    CHECK(tdf_mse(zero, zero) == 0.0);
    CHECK(tdf_mse(zero, one) == 1.0);

    Rng rng(41);
    VoxelGrid a(6, GridRepr::tdf), b(6, GridRepr::tdf);
    for (double& v : a.values) v = rng.uniform();
    for (double& v : b.values) v = rng.uniform();
    double expected = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        expected += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    }
    expected /= double(a.values.size());
    CHECK(tdf_mse(a, b) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(tdf_mse(a, b) == tdf_mse(b, a));
}

TEST_CASE("tdf mse rejects non-tdf grids and shape mismatches") {
    const VoxelGrid bin = constant_grid(4, 0.0);
    const VoxelGrid tdf4 = constant_grid(4, 0.0, GridRepr::tdf);
    const VoxelGrid tdf5 = constant_grid(5, 0.0, GridRepr::tdf);
    CHECK_THROWS_AS(tdf_mse(bin, tdf4), InvalidArgument);
    CHECK_THROWS_AS(tdf_mse(tdf4, tdf5), ShapeMismatch);
    CHECK_THROWS_AS(wbce(tdf4, tdf4, 0.5), InvalidArgument);
}

TEST_CASE("block aggregation") {
    const std::vector<double> constant{0.7, 0.7, 0.7};
    CHECK(aggregate_blocks(constant, Aggregation::L1) == doctest::Approx(0.7));
    CHECK(aggregate_blocks(constant, Aggregation::L2) == doctest::Approx(0.7));

    const std::vector<double> pair{0.0, 2.0};
    CHECK(aggregate_blocks(pair, Aggregation::L1) == 1.0);
    CHECK(aggregate_blocks(pair, Aggregation::L2) == doctest::Approx(std::sqrt(2.0)));

    Rng rng(55);
    std::vector<double> values;
    for (int i = 0; i < 20; ++i) values.push_back(rng.uniform());
    CHECK(aggregate_blocks(values, Aggregation::L2) >=
          aggregate_blocks(values, Aggregation::L1));

    CHECK_THROWS_AS(aggregate_blocks(std::vector<double>{}, Aggregation::L1), InvalidArgument);
}
