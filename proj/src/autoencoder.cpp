#include "pcq/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "pcq/errors.hpp"
#include "pcq/parallel.hpp"
#include "pcq/rng.hpp"

namespace pcq {

using json = nlohmann::json;

std::string to_string(LossKind kind) {
    return kind == LossKind::focal ? "focal" : "adaptive_mse";
}

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "focal") return LossKind::focal;
    if (name == "adaptive_mse" || name == "adaptive-mse") return LossKind::adaptive_mse;
    throw InvalidArgument("unknown loss '" + name + "'");
}

namespace {

constexpr int K = ConvLayer::kernel;
constexpr int S = ConvLayer::stride;
constexpr int P = ConvLayer::padding;

inline double activate(Activation act, double v) {
    return act == Activation::relu ? (v > 0.0 ? v : 0.0) : 1.0 / (1.0 + std::exp(-v));
}

inline double activation_grad_from_output(Activation act, double out) {
    // Both activations expose their derivative through the output value.
    return act == Activation::relu ? (out > 0.0 ? 1.0 : 0.0) : out * (1.0 - out);
}

void check_cubic(const Tensor4& t) {
    if (t.width != t.depth || t.depth != t.height) {
        throw ShapeMismatch("expected a cubic tensor");
    }
}

Tensor4 conv_forward_raw(const ConvLayer& layer, const Tensor4& input) {
    check_cubic(input);
    if (input.channels != layer.in_channels) {
        throw ShapeMismatch("layer expects " + std::to_string(layer.in_channels) +
                            " input channels, got " + std::to_string(input.channels));
    }
    const int in_size = input.width;
    if (in_size % 2 != 0) {
        throw ShapeMismatch("convolution input size must be even");
    }
    const int out_size = in_size / 2;
    Tensor4 out(layer.out_channels, out_size, out_size, out_size);

    const std::int64_t slabs = static_cast<std::int64_t>(layer.out_channels) * out_size;
    parallel_for(slabs, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t s = s0; s < s1; ++s) {
            const int o = static_cast<int>(s / out_size);
            const int oz = static_cast<int>(s % out_size);
            const int kz_lo = std::max(0, P - S * oz);
            const int kz_hi = std::min(K - 1, in_size - 1 - S * oz + P);
            for (int oy = 0; oy < out_size; ++oy) {
                const int ky_lo = std::max(0, P - S * oy);
                const int ky_hi = std::min(K - 1, in_size - 1 - S * oy + P);
                for (int ox = 0; ox < out_size; ++ox) {
                    const int kx_lo = std::max(0, P - S * ox);
                    const int kx_hi = std::min(K - 1, in_size - 1 - S * ox + P);
                    double acc = layer.bias[static_cast<std::size_t>(o)];
                    for (int i = 0; i < layer.in_channels; ++i) {
                        for (int kz = kz_lo; kz <= kz_hi; ++kz) {
                            for (int ky = ky_lo; ky <= ky_hi; ++ky) {
                                const double* in_row =
                                    &input.values[input.index(i, 0, S * oy + ky - P,
                                                              S * oz + kz - P)];
                                const double* w_row =
                                    &layer.weights[layer.weight_index(o, i, kz, ky, 0)];
                                for (int kx = kx_lo; kx <= kx_hi; ++kx) {
                                    acc += in_row[S * ox + kx - P] * w_row[kx];
                                }
                            }
                        }
                    }
                    out.at(o, ox, oy, oz) = acc;
                }
            }
        }
    });
    return out;
}

Tensor4 transposed_conv_forward_raw(const ConvLayer& layer, const Tensor4& input) {
    check_cubic(input);
    if (input.channels != layer.in_channels) {
        throw ShapeMismatch("layer expects " + std::to_string(layer.in_channels) +
                            " input channels, got " + std::to_string(input.channels));
    }
    const int in_size = input.width;
    const int out_size = in_size * 2;
    Tensor4 out(layer.out_channels, out_size, out_size, out_size);

    const std::int64_t slabs = static_cast<std::int64_t>(layer.out_channels) * out_size;
    parallel_for(slabs, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t s = s0; s < s1; ++s) {
            const int o = static_cast<int>(s / out_size);
            const int z = static_cast<int>(s % out_size);
            for (int y = 0; y < out_size; ++y) {
                for (int x = 0; x < out_size; ++x) {
                    double acc = layer.bias[static_cast<std::size_t>(o)];
                    // Valid kernel offsets satisfy (coord + P - k) = stride * in_coord.
                    for (int kz = (z + P) % S; kz < K; kz += S) {
                        const int iz = (z + P - kz) / S;
                        if (iz < 0 || iz >= in_size) continue;
                        for (int ky = (y + P) % S; ky < K; ky += S) {
                            const int iy = (y + P - ky) / S;
                            if (iy < 0 || iy >= in_size) continue;
                            for (int kx = (x + P) % S; kx < K; kx += S) {
                                const int ix = (x + P - kx) / S;
                                if (ix < 0 || ix >= in_size) continue;
                                for (int i = 0; i < layer.in_channels; ++i) {
                                    acc += input.at(i, ix, iy, iz) *
                                           layer.weights[layer.weight_index(o, i, kz, ky, kx)];
                                }
                            }
                        }
                    }
                    out.at(o, x, y, z) = acc;
                }
            }
        }
    });
    return out;
}

void apply_activation(Activation act, Tensor4& t) {
    for (double& v : t.values) {
        v = activate(act, v);
    }
}

// d loss / d input of a strided convolution, given d loss / d pre-activation.
Tensor4 conv_input_grad(const ConvLayer& layer, const Tensor4& out_grad, int in_size) {
    Tensor4 grad(layer.in_channels, in_size, in_size, in_size);
    const int out_size = in_size / 2;
    const std::int64_t slabs = static_cast<std::int64_t>(layer.in_channels) * in_size;
    parallel_for(slabs, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t s = s0; s < s1; ++s) {
            const int i = static_cast<int>(s / in_size);
            const int iz = static_cast<int>(s % in_size);
            for (int iy = 0; iy < in_size; ++iy) {
                for (int ix = 0; ix < in_size; ++ix) {
                    double acc = 0.0;
                    for (int kz = (iz + P) % S; kz < K; kz += S) {
                        const int oz = (iz + P - kz) / S;
                        if (oz < 0 || oz >= out_size) continue;
                        for (int ky = (iy + P) % S; ky < K; ky += S) {
                            const int oy = (iy + P - ky) / S;
                            if (oy < 0 || oy >= out_size) continue;
                            for (int kx = (ix + P) % S; kx < K; kx += S) {
                                const int ox = (ix + P - kx) / S;
                                if (ox < 0 || ox >= out_size) continue;
                                for (int o = 0; o < layer.out_channels; ++o) {
                                    acc += out_grad.at(o, ox, oy, oz) *
                                           layer.weights[layer.weight_index(o, i, kz, ky, kx)];
                                }
                            }
                        }
                    }
                    grad.at(i, ix, iy, iz) = acc;
                }
            }
        }
    });
    return grad;
}

LayerGrads conv_param_grads(const ConvLayer& layer, const Tensor4& input,
                            const Tensor4& out_grad) {
    LayerGrads grads;
    grads.weights.assign(layer.weight_count(), 0.0);
    grads.bias.assign(static_cast<std::size_t>(layer.out_channels), 0.0);
    const int in_size = input.width;
    const int out_size = out_grad.width;

    parallel_for(layer.out_channels, [&](std::int64_t o0, std::int64_t o1) {
        for (std::int64_t ol = o0; ol < o1; ++ol) {
            const int o = static_cast<int>(ol);
            double bias_acc = 0.0;
            double* w_grad = &grads.weights[layer.weight_index(o, 0, 0, 0, 0)];
            for (int oz = 0; oz < out_size; ++oz) {
                for (int oy = 0; oy < out_size; ++oy) {
                    for (int ox = 0; ox < out_size; ++ox) {
                        const double g = out_grad.at(o, ox, oy, oz);
                        bias_acc += g;
                        if (g == 0.0) continue;
                        for (int i = 0; i < layer.in_channels; ++i) {
                            for (int kz = 0; kz < K; ++kz) {
                                const int iz = S * oz + kz - P;
                                if (iz < 0 || iz >= in_size) continue;
                                for (int ky = 0; ky < K; ++ky) {
                                    const int iy = S * oy + ky - P;
                                    if (iy < 0 || iy >= in_size) continue;
                                    const double* in_row = &input.values[input.index(i, 0, iy, iz)];
                                    double* w_row = &w_grad[((static_cast<std::size_t>(i) * K +
                                                              kz) * K + ky) * K];
                                    for (int kx = 0; kx < K; ++kx) {
                                        const int ix = S * ox + kx - P;
                                        if (ix < 0 || ix >= in_size) continue;
                                        w_row[kx] += g * in_row[ix];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            grads.bias[static_cast<std::size_t>(o)] = bias_acc;
        }
    });
    return grads;
}

// d loss / d input of a transposed convolution: a stride-2 gather over the
// output gradient, the mirror of conv_forward.
Tensor4 transposed_conv_input_grad(const ConvLayer& layer, const Tensor4& out_grad,
                                   int in_size) {
    Tensor4 grad(layer.in_channels, in_size, in_size, in_size);
    const int out_size = in_size * 2;
    const std::int64_t slabs = static_cast<std::int64_t>(layer.in_channels) * in_size;
    parallel_for(slabs, [&](std::int64_t s0, std::int64_t s1) {
        for (std::int64_t s = s0; s < s1; ++s) {
            const int i = static_cast<int>(s / in_size);
            const int iz = static_cast<int>(s % in_size);
            for (int iy = 0; iy < in_size; ++iy) {
                for (int ix = 0; ix < in_size; ++ix) {
                    double acc = 0.0;
                    for (int kz = 0; kz < K; ++kz) {
                        const int z = S * iz + kz - P;
                        if (z < 0 || z >= out_size) continue;
                        for (int ky = 0; ky < K; ++ky) {
                            const int y = S * iy + ky - P;
                            if (y < 0 || y >= out_size) continue;
                            for (int kx = 0; kx < K; ++kx) {
                                const int x = S * ix + kx - P;
                                if (x < 0 || x >= out_size) continue;
                                for (int o = 0; o < layer.out_channels; ++o) {
                                    acc += out_grad.at(o, x, y, z) *
                                           layer.weights[layer.weight_index(o, i, kz, ky, kx)];
                                }
                            }
                        }
                    }
                    grad.at(i, ix, iy, iz) = acc;
                }
            }
        }
    });
    return grad;
}

LayerGrads transposed_conv_param_grads(const ConvLayer& layer, const Tensor4& input,
                                       const Tensor4& out_grad) {
    LayerGrads grads;
    grads.weights.assign(layer.weight_count(), 0.0);
    grads.bias.assign(static_cast<std::size_t>(layer.out_channels), 0.0);
    const int in_size = input.width;
    const int out_size = out_grad.width;

    parallel_for(layer.out_channels, [&](std::int64_t o0, std::int64_t o1) {
        for (std::int64_t ol = o0; ol < o1; ++ol) {
            const int o = static_cast<int>(ol);
            double bias_acc = 0.0;
            for (std::size_t idx = out_grad.spatial_count() * static_cast<std::size_t>(o);
                 idx < out_grad.spatial_count() * static_cast<std::size_t>(o + 1); ++idx) {
                bias_acc += out_grad.values[idx];
            }
            grads.bias[static_cast<std::size_t>(o)] = bias_acc;

            double* w_grad = &grads.weights[layer.weight_index(o, 0, 0, 0, 0)];
            for (int iz = 0; iz < in_size; ++iz) {
                for (int iy = 0; iy < in_size; ++iy) {
                    for (int ix = 0; ix < in_size; ++ix) {
                        for (int i = 0; i < layer.in_channels; ++i) {
                            const double in_v = input.at(i, ix, iy, iz);
                            if (in_v == 0.0) continue;
                            for (int kz = 0; kz < K; ++kz) {
                                const int z = S * iz + kz - P;
                                if (z < 0 || z >= out_size) continue;
                                for (int ky = 0; ky < K; ++ky) {
                                    const int y = S * iy + ky - P;
                                    if (y < 0 || y >= out_size) continue;
                                    double* w_row = &w_grad[((static_cast<std::size_t>(i) * K +
                                                              kz) * K + ky) * K];
                                    const double* g_row = &out_grad.values[out_grad.index(o, 0, y, z)];
                                    for (int kx = 0; kx < K; ++kx) {
                                        const int x = S * ix + kx - P;
                                        if (x < 0 || x >= out_size) continue;
                                        w_row[kx] += in_v * g_row[x];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    return grads;
}

ConvLayer make_layer(LayerKind kind, int in_channels, int out_channels, Activation act) {
    ConvLayer layer;
    layer.kind = kind;
    layer.in_channels = in_channels;
    layer.out_channels = out_channels;
    layer.activation = act;
    layer.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * K * K * K, 0.0);
    layer.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
    return layer;
}

}  // namespace

AutoencoderParams init_params(GridRepr repr, const TrainConfig& cfg) {
    if (repr == GridRepr::tsdf) {
        throw InvalidArgument("autoencoders are trained on binary or tdf grids");
    }
    for (const int c : cfg.channels) {
        if (c < 1) {
            throw InvalidArgument("channel counts must be positive");
        }
    }
    AutoencoderParams params;
    params.repr = repr;
    params.config = cfg;
    const auto [c0, c1, c2] = cfg.channels;
    params.analysis.push_back(make_layer(LayerKind::conv, 1, c0, Activation::relu));
    params.analysis.push_back(make_layer(LayerKind::conv, c0, c1, Activation::relu));
    params.analysis.push_back(make_layer(LayerKind::conv, c1, c2, Activation::relu));
    params.synthesis.push_back(make_layer(LayerKind::transposed_conv, c2, c1, Activation::relu));
    params.synthesis.push_back(make_layer(LayerKind::transposed_conv, c1, c0, Activation::relu));
    params.synthesis.push_back(make_layer(LayerKind::transposed_conv, c0, 1, Activation::sigmoid));

    Rng rng(cfg.seed);
    auto init_layer = [&rng](ConvLayer& layer) {
        const double bound =
            1.0 / std::sqrt(static_cast<double>(layer.in_channels) * K * K * K);
        for (double& w : layer.weights) {
            w = rng.uniform(-bound, bound);
        }
    };
    for (ConvLayer& layer : params.analysis) init_layer(layer);
    for (ConvLayer& layer : params.synthesis) init_layer(layer);
    return params;
}

Tensor4 conv_forward(const ConvLayer& layer, const Tensor4& input) {
    Tensor4 out = layer.kind == LayerKind::conv ? conv_forward_raw(layer, input)
                                                : transposed_conv_forward_raw(layer, input);
    apply_activation(layer.activation, out);
    return out;
}

Tensor4 analysis_forward(const Tensor4& input, const AutoencoderParams& params) {
    check_cubic(input);
    if (input.width % 8 != 0) {
        throw ShapeMismatch("analysis input size must be divisible by 8");
    }
    Tensor4 current = input;
    for (const ConvLayer& layer : params.analysis) {
        current = conv_forward(layer, current);
    }
    return current;
}

Tensor4 synthesis_forward(const Tensor4& latent, const AutoencoderParams& params) {
    Tensor4 current = latent;
    for (const ConvLayer& layer : params.synthesis) {
        current = conv_forward(layer, current);
    }
    return current;
}

ForwardTrace forward_trace(const Tensor4& input, const AutoencoderParams& params) {
    check_cubic(input);
    if (input.width % 8 != 0) {
        throw ShapeMismatch("autoencoder input size must be divisible by 8");
    }
    ForwardTrace trace;
    Tensor4 current = input;
    auto run_layer = [&](const ConvLayer& layer) {
        trace.layer_inputs.push_back(current);
        Tensor4 pre = layer.kind == LayerKind::conv ? conv_forward_raw(layer, current)
                                                    : transposed_conv_forward_raw(layer, current);
        current = pre;
        apply_activation(layer.activation, current);
        trace.layer_preactivations.push_back(std::move(pre));
    };
    for (const ConvLayer& layer : params.analysis) run_layer(layer);
    for (const ConvLayer& layer : params.synthesis) run_layer(layer);
    trace.output = current;
    trace.recorded = true;
    return trace;
}

std::vector<LayerGrads> backward(const ForwardTrace& trace, const AutoencoderParams& params,
                                 const Tensor4& output_grad) {
    if (!trace.recorded) {
        throw InvalidState("backward requires a recorded forward trace");
    }
    std::vector<const ConvLayer*> layers;
    for (const ConvLayer& l : params.analysis) layers.push_back(&l);
    for (const ConvLayer& l : params.synthesis) layers.push_back(&l);
    if (layers.size() != trace.layer_inputs.size()) {
        throw InvalidState("forward trace does not match the parameter set");
    }
    if (!output_grad.same_shape(trace.output)) {
        throw ShapeMismatch("output gradient shape does not match the forward output");
    }

    std::vector<LayerGrads> grads(layers.size());
    Tensor4 upstream = output_grad;
    for (std::size_t li = layers.size(); li-- > 0;) {
        const ConvLayer& layer = *layers[li];
        const Tensor4& pre = trace.layer_preactivations[li];

        // Chain through the activation; both derivatives come from the output.
        Tensor4 pre_grad = upstream;
        for (std::size_t i = 0; i < pre_grad.values.size(); ++i) {
            const double out_v = activate(layer.activation, pre.values[i]);
            pre_grad.values[i] *= activation_grad_from_output(layer.activation, out_v);
        }

        const Tensor4& input = trace.layer_inputs[li];
        if (layer.kind == LayerKind::conv) {
            grads[li] = conv_param_grads(layer, input, pre_grad);
            if (li > 0) {
                upstream = conv_input_grad(layer, pre_grad, input.width);
            }
        } else {
            grads[li] = transposed_conv_param_grads(layer, input, pre_grad);
            if (li > 0) {
                upstream = transposed_conv_input_grad(layer, pre_grad, input.width);
            }
        }
    }
    return grads;
}

namespace {

struct AdamState {
    std::vector<LayerGrads> m;
    std::vector<LayerGrads> v;
};

AdamState make_adam_state(const std::vector<const ConvLayer*>& layers) {
    AdamState state;
    state.m.resize(layers.size());
    state.v.resize(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        state.m[i].weights.assign(layers[i]->weight_count(), 0.0);
        state.m[i].bias.assign(layers[i]->bias.size(), 0.0);
        state.v[i].weights.assign(layers[i]->weight_count(), 0.0);
        state.v[i].bias.assign(layers[i]->bias.size(), 0.0);
    }
    return state;
}

void adam_update(std::vector<double>& param, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, const TrainConfig& cfg,
                 double bias_correction1, double bias_correction2) {
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        const double m_hat = m[i] / bias_correction1;
        const double v_hat = v[i] / bias_correction2;
        param[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

}  // namespace

TrainResult train(const std::vector<Tensor4>& blocks, GridRepr repr, const TrainConfig& cfg) {
    if (blocks.empty()) {
        throw EmptyInput("training requires at least one block");
    }
    const int size = blocks.front().width;
    for (const Tensor4& b : blocks) {
        if (b.channels != 1 || b.width != size || b.depth != size || b.height != size) {
            throw ShapeMismatch("all training blocks must be single-channel cubes of one size");
        }
    }
    if (cfg.batch_size < 1 || cfg.steps < 1) {
        throw InvalidArgument("batch_size and steps must be positive");
    }

    TrainResult result;
    result.params = init_params(repr, cfg);
    AutoencoderParams& params = result.params;

    std::vector<ConvLayer*> layers;
    for (ConvLayer& l : params.analysis) layers.push_back(&l);
    for (ConvLayer& l : params.synthesis) layers.push_back(&l);
    std::vector<const ConvLayer*> const_layers(layers.begin(), layers.end());
    AdamState adam = make_adam_state(const_layers);

    Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(blocks.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);
    std::size_t cursor = 0;

    const AdaptiveMseConfig mse_cfg{cfg.beta};
    const FocalLossConfig focal_cfg{cfg.alpha, cfg.gamma, cfg.clip_lo, cfg.clip_hi};

    for (int step = 0; step < cfg.steps; ++step) {
        std::vector<LayerGrads> batch_grads(layers.size());
        for (std::size_t li = 0; li < layers.size(); ++li) {
            batch_grads[li].weights.assign(layers[li]->weight_count(), 0.0);
            batch_grads[li].bias.assign(layers[li]->bias.size(), 0.0);
        }

        double batch_loss = 0.0;
        const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
        for (int b = 0; b < cfg.batch_size; ++b) {
            if (cursor == order.size()) {
                shuffle_rng.shuffle(order);
                cursor = 0;
            }
            const Tensor4& block = blocks[order[cursor++]];

            const ForwardTrace trace = forward_trace(block, params);
            const LossResult loss = cfg.loss == LossKind::focal
                                        ? focal_loss_grad(block, trace.output, focal_cfg)
                                        : adaptive_mse_loss(block, trace.output, mse_cfg);
            batch_loss += loss.loss * inv_batch;

            const std::vector<LayerGrads> grads = backward(trace, params, loss.grad);
            for (std::size_t li = 0; li < grads.size(); ++li) {
                for (std::size_t i = 0; i < grads[li].weights.size(); ++i) {
                    batch_grads[li].weights[i] += grads[li].weights[i] * inv_batch;
                }
                for (std::size_t i = 0; i < grads[li].bias.size(); ++i) {
                    batch_grads[li].bias[i] += grads[li].bias[i] * inv_batch;
                }
            }
        }

        if (!std::isfinite(batch_loss)) {
            throw TrainingDiverged("training loss is not finite", step);
        }
        result.loss_history.push_back(batch_loss);

        const double t = static_cast<double>(step + 1);
        const double bc1 = 1.0 - std::pow(cfg.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg.beta2, t);
        for (std::size_t li = 0; li < layers.size(); ++li) {
            adam_update(layers[li]->weights, batch_grads[li].weights, adam.m[li].weights,
                        adam.v[li].weights, cfg, bc1, bc2);
            adam_update(layers[li]->bias, batch_grads[li].bias, adam.m[li].bias,
                        adam.v[li].bias, cfg, bc1, bc2);
        }
    }
    return result;
}

namespace {

json layer_to_json(const ConvLayer& layer) {
    return json{{"kind", layer.kind == LayerKind::conv ? "conv" : "transposed_conv"},
                {"in_channels", layer.in_channels},
                {"out_channels", layer.out_channels},
                {"kernel", ConvLayer::kernel},
                {"stride", ConvLayer::stride},
                {"activation", layer.activation == Activation::relu ? "relu" : "sigmoid"}};
}

ConvLayer layer_from_json(const json& j) {
    ConvLayer layer;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "conv") layer.kind = LayerKind::conv;
    else if (kind == "transposed_conv") layer.kind = LayerKind::transposed_conv;
    else throw ParseError("unknown layer kind '" + kind + "'");
    layer.in_channels = j.at("in_channels").get<int>();
    layer.out_channels = j.at("out_channels").get<int>();
    if (j.at("kernel").get<int>() != ConvLayer::kernel ||
        j.at("stride").get<int>() != ConvLayer::stride) {
        throw ParseError("checkpoint layer geometry is not kernel 5 / stride 2");
    }
    const std::string act = j.at("activation").get<std::string>();
    if (act == "relu") layer.activation = Activation::relu;
    else if (act == "sigmoid") layer.activation = Activation::sigmoid;
    else throw ParseError("unknown activation '" + act + "'");
    if (layer.in_channels < 1 || layer.out_channels < 1) {
        throw ParseError("checkpoint layer has non-positive channel counts");
    }
    layer.weights.assign(layer.weight_count(), 0.0);
    layer.bias.assign(static_cast<std::size_t>(layer.out_channels), 0.0);
    return layer;
}

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"channels", cfg.channels},
                {"learning_rate", cfg.learning_rate},
                {"beta1", cfg.beta1},
                {"beta2", cfg.beta2},
                {"epsilon", cfg.epsilon},
                {"batch_size", cfg.batch_size},
                {"steps", cfg.steps},
                {"seed", cfg.seed},
                {"loss", to_string(cfg.loss)},
                {"alpha", cfg.alpha},
                {"gamma", cfg.gamma},
                {"beta", cfg.beta},
                {"clip_lo", cfg.clip_lo},
                {"clip_hi", cfg.clip_hi}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    j.at("channels").get_to(cfg.channels);
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.beta1 = j.at("beta1").get<double>();
    cfg.beta2 = j.at("beta2").get<double>();
    cfg.epsilon = j.at("epsilon").get<double>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.steps = j.at("steps").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.loss = loss_kind_from_string(j.at("loss").get<std::string>());
    cfg.alpha = j.at("alpha").get<double>();
    cfg.gamma = j.at("gamma").get<double>();
    cfg.beta = j.at("beta").get<double>();
    cfg.clip_lo = j.at("clip_lo").get<double>();
    cfg.clip_hi = j.at("clip_hi").get<double>();
    return cfg;
}

constexpr char kMagic[] = "PCQAE1\n";
constexpr std::size_t kMagicLen = 7;

void write_f32_array(std::ostream& out, const std::vector<double>& values) {
    std::vector<float> f(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        f[i] = static_cast<float>(values[i]);
    }
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(float)));
}

void read_f32_array(std::istream& in, std::vector<double>& values) {
    std::vector<float> f(values.size());
    if (!in.read(reinterpret_cast<char*>(f.data()),
                 static_cast<std::streamsize>(f.size() * sizeof(float)))) {
        throw ParseError("checkpoint truncated inside a weight array");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<double>(f[i]);
    }
}

}  // namespace

void save_params(const AutoencoderParams& params, const std::filesystem::path& path) {
    json header;
    header["repr"] = to_string(params.repr);
    header["train_config"] = train_config_to_json(params.config);
    header["layers"] = json::array();
    json arrays = json::array();
    for (std::size_t i = 0; i < params.analysis.size(); ++i) {
        header["layers"].push_back(layer_to_json(params.analysis[i]));
        arrays.push_back("analysis." + std::to_string(i) + ".weights");
        arrays.push_back("analysis." + std::to_string(i) + ".bias");
    }
    for (std::size_t i = 0; i < params.synthesis.size(); ++i) {
        header["layers"].push_back(layer_to_json(params.synthesis[i]));
        arrays.push_back("synthesis." + std::to_string(i) + ".weights");
        arrays.push_back("synthesis." + std::to_string(i) + ".bias");
    }
    header["arrays"] = arrays;

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    const std::string header_text = header.dump();
    const auto header_len = static_cast<std::uint32_t>(header_text.size());
    out.write(kMagic, kMagicLen);
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const ConvLayer& layer : params.analysis) {
        write_f32_array(out, layer.weights);
        write_f32_array(out, layer.bias);
    }
    for (const ConvLayer& layer : params.synthesis) {
        write_f32_array(out, layer.weights);
        write_f32_array(out, layer.bias);
    }
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

AutoencoderParams load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    char magic[kMagicLen];
    if (!in.read(magic, kMagicLen) || std::memcmp(magic, kMagic, kMagicLen) != 0) {
        throw ParseError("'" + path.string() + "' is not a PCQAE1 checkpoint");
    }
    std::uint32_t header_len = 0;
    if (!in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len))) {
        throw ParseError("checkpoint truncated in header length");
    }
    std::string header_text(header_len, '\0');
    if (!in.read(header_text.data(), header_len)) {
        throw ParseError("checkpoint truncated in header");
    }
    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    AutoencoderParams params;
    try {
        params.repr = grid_repr_from_string(header.at("repr").get<std::string>());
        params.config = train_config_from_json(header.at("train_config"));
        const json& layers = header.at("layers");
        if (layers.size() != 6) {
            throw ParseError("checkpoint must declare exactly 6 layers");
        }
        for (std::size_t i = 0; i < 3; ++i) {
            params.analysis.push_back(layer_from_json(layers[i]));
        }
        for (std::size_t i = 3; i < 6; ++i) {
            params.synthesis.push_back(layer_from_json(layers[i]));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("checkpoint header is incomplete: ") + e.what());
    }

    for (ConvLayer& layer : params.analysis) {
        read_f32_array(in, layer.weights);
        read_f32_array(in, layer.bias);
    }
    for (ConvLayer& layer : params.synthesis) {
        read_f32_array(in, layer.weights);
        read_f32_array(in, layer.bias);
    }
    return params;
}

}  // namespace pcq
