#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcq/losses.hpp"
#include "pcq/tensor.hpp"

namespace pcq {

enum class LayerKind { conv, transposed_conv };
enum class Activation { relu, sigmoid };
enum class LossKind { focal, adaptive_mse };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// One 3D convolution or transposed convolution. Kernel 5 and stride 2 are
// fixed; convolutions halve each spatial dimension, transposed convolutions
// double them.
struct ConvLayer {
    LayerKind kind = LayerKind::conv;
    int in_channels = 0;
    int out_channels = 0;
    Activation activation = Activation::relu;
    std::vector<double> weights;  // [out][in][kz][ky][kx]
    std::vector<double> bias;     // [out]

    static constexpr int kernel = 5;
    static constexpr int stride = 2;
    static constexpr int padding = 2;
    static constexpr int output_padding = 1;  // transposed only

    std::size_t weight_count() const {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel * kernel;
    }
    std::size_t weight_index(int o, int i, int kz, int ky, int kx) const {
        return (((static_cast<std::size_t>(o) * in_channels + i) * kernel + kz) * kernel + ky) *
                   kernel +
               kx;
    }
};

struct TrainConfig {
    std::array<int, 3> channels{16, 32, 16};  // per analysis layer; latent F = channels[2]
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int batch_size = 8;
    int steps = 500;
    std::uint64_t seed = 1;
    LossKind loss = LossKind::focal;
    double alpha = 0.75;   // focal
    double gamma = 2.0;    // focal
    double beta = 0.01;    // adaptive MSE bound
    double clip_lo = 0.001;
    double clip_hi = 0.999;
};

// Three-layer analysis and synthesis transforms plus the training snapshot.
struct AutoencoderParams {
    GridRepr repr = GridRepr::binary;
    std::vector<ConvLayer> analysis;
    std::vector<ConvLayer> synthesis;
    TrainConfig config;

    int latent_channels() const { return analysis.empty() ? 0 : analysis.back().out_channels; }
};

// Fan-in scaled uniform initialization from the config seed; biases zero.
AutoencoderParams init_params(GridRepr repr, const TrainConfig& cfg);

Tensor4 conv_forward(const ConvLayer& layer, const Tensor4& input);

// Latent tensor (F feature maps, each spatial dimension divided by 8).
Tensor4 analysis_forward(const Tensor4& input, const AutoencoderParams& params);

// Reconstruction in (0,1); each spatial dimension multiplied by 8.
Tensor4 synthesis_forward(const Tensor4& latent, const AutoencoderParams& params);

struct LayerGrads {
    std::vector<double> weights;
    std::vector<double> bias;
};

// Forward pass that keeps per-layer inputs and pre-activations for backward.
struct ForwardTrace {
    std::vector<Tensor4> layer_inputs;          // input of each layer, in order
    std::vector<Tensor4> layer_preactivations;  // conv output before activation
    Tensor4 output;
    bool recorded = false;
};

ForwardTrace forward_trace(const Tensor4& input, const AutoencoderParams& params);

// Exact parameter gradients for all six layers given d loss / d output.
// Order matches analysis then synthesis. Throws InvalidState when the trace
// was not recorded.
std::vector<LayerGrads> backward(const ForwardTrace& trace, const AutoencoderParams& params,
                                 const Tensor4& output_grad);

struct TrainResult {
    AutoencoderParams params;
    std::vector<double> loss_history;  // one mean batch loss per step
};

// Adam training over the block dataset; deterministic given cfg.seed.
TrainResult train(const std::vector<Tensor4>& blocks, GridRepr repr, const TrainConfig& cfg);

// Checkpoint: magic "PCQAE1\n", a length-prefixed JSON header, then raw
// little-endian float32 arrays in header order.
void save_params(const AutoencoderParams& params, const std::filesystem::path& path);
AutoencoderParams load_params(const std::filesystem::path& path);

}  // namespace pcq
