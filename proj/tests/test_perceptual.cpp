#include <doctest.h>

#include <cmath>

#include "pcq/errors.hpp"
#include "pcq/perceptual.hpp"
#include "pcq/rng.hpp"
#include "pcq/synthetic.hpp"

using namespace pcq;

namespace {

Tensor4 random_tensor(int c, int s, std::uint64_t seed) {
    Rng rng(seed);
    Tensor4 t(c, s, s, s);
    for (double& v : t.values) v = rng.uniform(-1.0, 1.0);
    return t;
}

TrainConfig toy_config() {
    TrainConfig cfg;
    cfg.channels = {2, 3, 4};
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("latent mse basics and naive oracle") {
    const Tensor4 a = random_tensor(4, 3, 1);
    CHECK(latent_mse(a, a, FeatureSelector::all_maps()) == 0.0);

    const Tensor4 b = random_tensor(4, 3, 2);
    double expected = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        expected += (a.values[i] - b.values[i]) * (a.values[i] - b.values[i]);
    }
    expected /= double(a.values.size());
    CHECK(latent_mse(a, b, FeatureSelector::all_maps()) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("all-map mse is the mean of per-map mses") {
    const Tensor4 a = random_tensor(4, 3, 3);
    const Tensor4 b = random_tensor(4, 3, 4);
    double sum = 0.0;
    for (int f = 0; f < 4; ++f) {
        sum += latent_mse(a, b, FeatureSelector::single(f));
    }
    CHECK(latent_mse(a, b, FeatureSelector::all_maps()) ==
          doctest::Approx(sum / 4.0).epsilon(1e-12));
}

TEST_CASE("single selector on a one-map tensor equals the all selector") {
    const Tensor4 a = random_tensor(1, 4, 5);
    const Tensor4 b = random_tensor(1, 4, 6);
    CHECK(latent_mse(a, b, FeatureSelector::single(0)) ==
          latent_mse(a, b, FeatureSelector::all_maps()));
}

TEST_CASE("latent mse validates selector and shapes") {
    const Tensor4 a = random_tensor(4, 3, 7);
    CHECK_THROWS_AS(latent_mse(a, a, FeatureSelector::single(4)), InvalidArgument);
    CHECK_THROWS_AS(latent_mse(a, random_tensor(3, 3, 8), FeatureSelector::all_maps()),
                    ShapeMismatch);
}

TEST_CASE("perceptual distance of a cloud against itself is exactly zero") {
    const AutoencoderParams params = init_params(GridRepr::tdf, toy_config());
    const PointCloud cloud = synthetic_cloud(SyntheticShape::sphere, 32.0, 1500, 9);
    PerceptualConfig cfg;
    cfg.block_size = 16;
    CHECK(perceptual_distance(cloud, cloud, params, FeatureSelector::all_maps(), cfg) == 0.0);
}

TEST_CASE("perceptual distance is symmetric") {
    const AutoencoderParams params = init_params(GridRepr::binary, toy_config());
    const PointCloud a = synthetic_cloud(SyntheticShape::plane, 32.0, 1200, 10);
    const PointCloud b = add_jitter(a, 1.0, 32.0, 11);
    PerceptualConfig cfg;
    cfg.block_size = 16;
    const double ab = perceptual_distance(a, b, params, FeatureSelector::all_maps(), cfg);
    const double ba = perceptual_distance(b, a, params, FeatureSelector::all_maps(), cfg);
    CHECK(ab == ba);
    CHECK(ab > 0.0);
}

TEST_CASE("perceptual distance rejects tsdf weights and bad block sizes") {
    AutoencoderParams params = init_params(GridRepr::binary, toy_config());
    const PointCloud cloud = synthetic_cloud(SyntheticShape::box, 32.0, 800, 12);
    params.repr = GridRepr::tsdf;
    CHECK_THROWS_AS(
        perceptual_distance(cloud, cloud, params, FeatureSelector::all_maps(), {}),
        ReprMismatch);
    params.repr = GridRepr::binary;
    PerceptualConfig cfg;
    cfg.block_size = 20;  // not divisible by 8
    CHECK_THROWS_AS(
        perceptual_distance(cloud, cloud, params, FeatureSelector::all_maps(), cfg),
        InvalidArgument);
}

TEST_CASE("a zeroed channel is flagged unused") {
    AutoencoderParams params = init_params(GridRepr::binary, toy_config());
    ConvLayer& last = params.analysis.back();
    // Zero the weights and bias that produce feature map 2.
    for (int i = 0; i < last.in_channels; ++i) {
        for (int k = 0; k < 125; ++k) {
            last.weights[last.weight_index(2, i, k / 25, (k / 5) % 5, k % 5)] = 0.0;
        }
    }
    last.bias[2] = 0.0;

    std::vector<Tensor4> probe;
    for (std::uint64_t s = 0; s < 3; ++s) {
        Rng rng(100 + s);
        Tensor4 t(1, 16, 16, 16);
        for (double& v : t.values) v = rng.uniform() < 0.3 ? 1.0 : 0.0;
        probe.push_back(std::move(t));
    }
    const auto report = detect_unused_features(params, probe);
    REQUIRE(report.size() == 4);
    CHECK(!report[2].used);
    CHECK(report[0].used);
    CHECK(report[1].used);
    CHECK(report[3].used);
}

TEST_CASE("dense random weights leave no unused maps") {
    const AutoencoderParams params = init_params(GridRepr::binary, toy_config());
    std::vector<Tensor4> probe;
    Rng rng(55);
    Tensor4 t(1, 16, 16, 16);
    for (double& v : t.values) v = rng.uniform() < 0.4 ? 1.0 : 0.0;
    probe.push_back(std::move(t));
    const auto report = detect_unused_features(params, probe);
    for (const FeatureUsage& usage : report) {
        CHECK(usage.used);
    }
}

TEST_CASE("empty probe set is rejected") {
    const AutoencoderParams params = init_params(GridRepr::binary, toy_config());
    CHECK_THROWS_AS(detect_unused_features(params, {}), EmptyInput);
}

TEST_CASE("select_best_feature recovers a planted perfect map") {
    Rng rng(77);
    const std::size_t stimuli = 40;
    const std::size_t maps = 6;
    std::vector<double> mos;
    std::vector<std::vector<double>> scores(stimuli, std::vector<double>(maps));
    for (std::size_t s = 0; s < stimuli; ++s) {
        mos.push_back(rng.uniform(1.0, 5.0));
        for (std::size_t f = 0; f < maps; ++f) {
            scores[s][f] = rng.uniform();
        }
        scores[s][3] = mos.back();  // planted copy of the MOS
    }
    CHECK(select_best_feature(scores, mos) == 3);
}

TEST_CASE("identical maps tie to index zero; unused maps are excluded") {
    Rng rng(78);
    const std::size_t stimuli = 25;
    std::vector<double> mos;
    std::vector<std::vector<double>> equal_scores(stimuli, std::vector<double>(4));
    std::vector<std::vector<double>> with_constant(stimuli, std::vector<double>(3));
    for (std::size_t s = 0; s < stimuli; ++s) {
        mos.push_back(rng.uniform(1.0, 5.0));
        const double v = rng.uniform();
        for (std::size_t f = 0; f < 4; ++f) equal_scores[s][f] = v;
        with_constant[s] = {1.0, mos.back() + rng.normal(0.0, 0.05), rng.uniform()};
    }
    CHECK(select_best_feature(equal_scores, mos) == 0);
    CHECK(select_best_feature(with_constant, mos) == 1);

    std::vector<std::vector<double>> all_constant(stimuli, std::vector<double>{2.0, 3.0});
    CHECK_THROWS_AS(select_best_feature(all_constant, mos), NoUsableFeature);
}
