#pragma once

// Tiny bias-free fully connected networks (the "fully fused" MLP shape):
// ReLU on hidden layers, a configurable activation on the output layer.
//
// Accumulation order is fixed: each output neuron sums its inputs in
// ascending index order starting from 0. Batched and single-input inference
// are therefore bit-identical.

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ngpc/binary_io.hpp"
#include "ngpc/common.hpp"
#include "ngpc/encoding.hpp"

namespace ngpc {

enum class Activation : std::uint8_t { None = 0, ReLU = 1, Exponential = 2, Sigmoid = 3 };

[[nodiscard]] inline float activate(Activation a, float z) noexcept {
    switch (a) {
        case Activation::None: return z;
        case Activation::ReLU: return z > 0.0f ? z : 0.0f;
        case Activation::Exponential: return std::exp(z);
        case Activation::Sigmoid: return 1.0f / (1.0f + std::exp(-z));
    }
    return z;
}

/// d(activation)/dz expressed through the pre-activation z and output y.
[[nodiscard]] inline float activation_derivative(Activation a, float z, float y) noexcept {
    switch (a) {
        case Activation::None: return 1.0f;
        case Activation::ReLU: return z > 0.0f ? 1.0f : 0.0f;
        case Activation::Exponential: return y;
        case Activation::Sigmoid: return y * (1.0f - y);
    }
    return 1.0f;
}

[[nodiscard]] inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::None: return "none";
        case Activation::ReLU: return "relu";
        case Activation::Exponential: return "exp";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "?";
}

class MlpModel {
public:
    /// Zero-initialized network with the given layer widths [in, h..., out].
    explicit MlpModel(std::vector<std::uint32_t> widths, Activation output = Activation::None,
                      Activation hidden = Activation::ReLU)
        : widths_(std::move(widths)), hidden_(hidden), output_(output) {
        if (widths_.size() < 2) throw ConfigError("an MLP needs at least an input and an output width");
        for (auto w : widths_)
            if (w == 0) throw ConfigError("layer widths must be positive");
        weights_.resize(widths_.size() - 1);
        for (std::size_t k = 0; k < weights_.size(); ++k)
            weights_[k].assign(static_cast<std::size_t>(widths_[k + 1]) * widths_[k], 0.0f);
    }

    /// [in, width x hidden_layers, out]: "layers=N" means N hidden layers.
    static std::vector<std::uint32_t> shape(std::uint32_t in, std::uint32_t hidden_layers, std::uint32_t out,
                                            std::uint32_t width = 64) {
        std::vector<std::uint32_t> w{in};
        for (std::uint32_t i = 0; i < hidden_layers; ++i) w.push_back(width);
        w.push_back(out);
        return w;
    }

    /// Weights uniform in +-sqrt(6 / (fan_in + fan_out)).
    static MlpModel xavier(std::vector<std::uint32_t> widths, std::uint64_t seed,
                           Activation output = Activation::None) {
        MlpModel m(std::move(widths), output);
        Rng rng(seed);
        for (std::size_t k = 0; k < m.weights_.size(); ++k) {
            const float bound = std::sqrt(6.0f / static_cast<float>(m.widths_[k] + m.widths_[k + 1]));
            for (auto& w : m.weights_[k]) w = rng.uniform(-bound, bound);
        }
        return m;
    }

    [[nodiscard]] const std::vector<std::uint32_t>& widths() const noexcept { return widths_; }
    [[nodiscard]] std::size_t layer_count() const noexcept { return weights_.size(); }
    [[nodiscard]] std::uint32_t input_width() const noexcept { return widths_.front(); }
    [[nodiscard]] std::uint32_t output_width() const noexcept { return widths_.back(); }
    [[nodiscard]] Activation hidden_activation() const noexcept { return hidden_; }
    [[nodiscard]] Activation output_activation() const noexcept { return output_; }
    [[nodiscard]] Activation activation(std::size_t layer) const noexcept {
        return layer + 1 == weights_.size() ? output_ : hidden_;
    }

    /// Row-major (rows = widths[k+1], cols = widths[k]).
    [[nodiscard]] std::span<const float> weights(std::size_t k) const { return weights_.at(k); }
    [[nodiscard]] std::span<float> weights(std::size_t k) { return weights_.at(k); }

    [[nodiscard]] std::size_t parameter_count() const noexcept {
        std::size_t n = 0;
        for (const auto& w : weights_) n += w.size();
        return n;
    }

    [[nodiscard]] bool all_finite() const noexcept {
        for (const auto& layer : weights_)
            for (float w : layer)
                if (!std::isfinite(w)) return false;
        return true;
    }

    bool operator==(const MlpModel& o) const {
        if (widths_ != o.widths_ || hidden_ != o.hidden_ || output_ != o.output_) return false;
        for (std::size_t k = 0; k < weights_.size(); ++k)
            for (std::size_t i = 0; i < weights_[k].size(); ++i)
                if (std::bit_cast<std::uint32_t>(weights_[k][i]) != std::bit_cast<std::uint32_t>(o.weights_[k][i]))
                    return false;
        return true;
    }

private:
    std::vector<std::uint32_t> widths_;
    Activation hidden_;
    Activation output_;
    std::vector<std::vector<float>> weights_;
};

namespace detail {

/// y = W x with ascending-index accumulation per output row.
inline void matvec(std::span<const float> w, std::span<const float> x, std::span<float> y) noexcept {
    const std::size_t in = x.size();
    for (std::size_t o = 0; o < y.size(); ++o) {
        const float* row = w.data() + o * in;
        float acc = 0.0f;
        for (std::size_t i = 0; i < in; ++i) acc += row[i] * x[i];
        y[o] = acc;
    }
}

inline void check_input(const MlpModel& model, std::span<const float> input) {
    if (input.size() != model.input_width())
        throw ConfigError("MLP input has width " + std::to_string(input.size()) + ", expected " +
                          std::to_string(model.input_width()));
    for (float v : input)
        if (!std::isfinite(v)) throw DomainError("non-finite MLP input");
}

}  // namespace detail

/// Per-layer activations kept for the backward pass.
struct MlpTrace {
    std::vector<std::vector<float>> pre;   // z_k, one per layer
    std::vector<std::vector<float>> post;  // a_0 = input, a_{k+1} = act(z_k)
};

inline void mlp_forward_trace(const MlpModel& model, std::span<const float> input, MlpTrace& trace) {
    detail::check_input(model, input);
    const std::size_t layers = model.layer_count();
    trace.pre.resize(layers);
    trace.post.resize(layers + 1);
    trace.post[0].assign(input.begin(), input.end());
    for (std::size_t k = 0; k < layers; ++k) {
        auto& z = trace.pre[k];
        auto& a = trace.post[k + 1];
        z.resize(model.widths()[k + 1]);
        a.resize(z.size());
        detail::matvec(model.weights(k), trace.post[k], z);
        const Activation act = model.activation(k);
        for (std::size_t o = 0; o < z.size(); ++o) a[o] = activate(act, z[o]);
    }
}

[[nodiscard]] inline std::vector<float> mlp_forward(const MlpModel& model, std::span<const float> input) {
    detail::check_input(model, input);
    std::vector<float> cur(input.begin(), input.end());
    std::vector<float> next;
    for (std::size_t k = 0; k < model.layer_count(); ++k) {
        next.resize(model.widths()[k + 1]);
        detail::matvec(model.weights(k), cur, next);
        const Activation act = model.activation(k);
        for (float& v : next) v = activate(act, v);
        cur.swap(next);
    }
    return cur;
}

/// Packed inputs (input_width floats each) to packed outputs, input order.
[[nodiscard]] inline std::vector<float> mlp_forward_batch(const MlpModel& model, std::span<const float> inputs,
                                                          unsigned threads = 1) {
    const std::size_t in = model.input_width();
    const std::size_t out = model.output_width();
    if (inputs.size() % in != 0) throw ConfigError("packed MLP inputs are not a multiple of the input width");
    const std::size_t n = inputs.size() / in;
    std::vector<float> result(n * out);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                const auto y = mlp_forward(model, inputs.subspan(i * in, in));
                std::copy(y.begin(), y.end(), result.begin() + static_cast<std::ptrdiff_t>(i * out));
            } catch (const std::exception& e) {
                throw BatchError(i, e.what());
            }
        }
    });
    return result;
}

struct MlpGradients {
    std::vector<std::vector<float>> weights;  // same layout as the model
    std::vector<float> input;

    static MlpGradients zeros_like(const MlpModel& model) {
        MlpGradients g;
        g.weights.resize(model.layer_count());
        for (std::size_t k = 0; k < model.layer_count(); ++k) g.weights[k].assign(model.weights(k).size(), 0.0f);
        g.input.assign(model.input_width(), 0.0f);
        return g;
    }

    /// Elementwise sum of weight gradients (input gradients are per-sample and
    /// are not summed).
    MlpGradients& operator+=(const MlpGradients& o) {
        for (std::size_t k = 0; k < weights.size(); ++k)
            for (std::size_t i = 0; i < weights[k].size(); ++i) weights[k][i] += o.weights[k][i];
        return *this;
    }
};

/// Reverse-mode pass for one input given d(loss)/d(output). Weight gradients
/// are added into `grads`; grads.input is overwritten with d(loss)/d(input).
inline void mlp_backward_accumulate(const MlpModel& model, const MlpTrace& trace, std::span<const float> upstream,
                                    MlpGradients& grads) {
    if (upstream.size() != model.output_width()) throw ConfigError("upstream gradient has wrong width");
    const std::size_t layers = model.layer_count();
    std::vector<float> delta(upstream.begin(), upstream.end());
    std::vector<float> prev;
    for (std::size_t k = layers; k-- > 0;) {
        const auto& z = trace.pre[k];
        const auto& y = trace.post[k + 1];
        const Activation act = model.activation(k);
        for (std::size_t o = 0; o < delta.size(); ++o) delta[o] *= activation_derivative(act, z[o], y[o]);

        const auto& x = trace.post[k];
        const std::size_t in = x.size();
        auto& gw = grads.weights[k];
        for (std::size_t o = 0; o < delta.size(); ++o) {
            const float d = delta[o];
            float* row = gw.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += d * x[i];
        }

        const auto w = model.weights(k);
        prev.assign(in, 0.0f);
        for (std::size_t o = 0; o < delta.size(); ++o) {
            const float d = delta[o];
            const float* row = w.data() + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * d;
        }
        delta.swap(prev);
    }
    grads.input = std::move(delta);
}

[[nodiscard]] inline MlpGradients mlp_backward(const MlpModel& model, std::span<const float> input,
                                               std::span<const float> upstream) {
    MlpTrace trace;
    mlp_forward_trace(model, input, trace);
    auto grads = MlpGradients::zeros_like(model);
    mlp_backward_accumulate(model, trace, upstream, grads);
    return grads;
}

// ---------------------------------------------------------------------------
// Plain gradient descent
// ---------------------------------------------------------------------------

inline void sgd_step(MlpModel& model, const MlpGradients& grads, float learning_rate) {
    if (grads.weights.size() != model.layer_count()) throw ConfigError("gradient does not match model");
    for (std::size_t k = 0; k < model.layer_count(); ++k) {
        auto w = model.weights(k);
        if (grads.weights[k].size() != w.size()) throw ConfigError("gradient does not match model");
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= learning_rate * grads.weights[k][i];
    }
}

template <typename Scalar>
void sgd_step(BasicFeatureTable<Scalar>& table, std::span<const float> dense_grad, float learning_rate) {
    auto data = table.data();
    if (dense_grad.size() != data.size()) throw ConfigError("gradient does not match table");
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = Scalar(static_cast<float>(data[i]) - learning_rate * dense_grad[i]);
}

template <typename Scalar>
void sgd_step(BasicFeatureTable<Scalar>& table, const TableGradient& grad, float learning_rate) {
    for (const auto& [key, g] : grad.rows) {
        auto row = table.entry(key.first, key.second);
        for (std::size_t f = 0; f < row.size(); ++f)
            row[f] = Scalar(static_cast<float>(row[f]) - learning_rate * g[f]);
    }
}

template <typename Scalar>
void sgd_step(MlpModel& model, BasicFeatureTable<Scalar>& table, const MlpGradients& mlp_grads,
              std::span<const float> table_grad, float learning_rate) {
    sgd_step(model, mlp_grads, learning_rate);
    sgd_step(table, table_grad, learning_rate);
}

// ---------------------------------------------------------------------------
// Checkpoints
//
//   "NGMLP001", u32 layer-width count, u32 widths[],
//   u8 hidden activation, u8 output activation, u16 reserved,
//   f32 weights, layer by layer, row-major; u64 FNV-1a checksum
// ---------------------------------------------------------------------------

inline void write_checkpoint(std::ostream& os, const MlpModel& model) {
    io::Writer w;
    w.bytes("NGMLP001");
    w.u(static_cast<std::uint32_t>(model.widths().size()));
    for (auto v : model.widths()) w.u(v);
    w.u(static_cast<std::uint8_t>(model.hidden_activation()));
    w.u(static_cast<std::uint8_t>(model.output_activation()));
    w.u(std::uint16_t{0});
    for (std::size_t k = 0; k < model.layer_count(); ++k) w.f32s(model.weights(k));
    w.finish(os);
}

[[nodiscard]] inline MlpModel read_checkpoint(std::istream& is) {
    io::Reader r(is);
    r.expect("NGMLP001");
    const auto n = r.u<std::uint32_t>();
    if (n < 2 || n > 1024) throw io::FormatError("implausible layer count");
    std::vector<std::uint32_t> widths(n);
    for (auto& v : widths) v = r.u<std::uint32_t>();
    const auto hidden = r.u<std::uint8_t>();
    const auto output = r.u<std::uint8_t>();
    if (hidden > 3 || output > 3) throw io::FormatError("unknown activation");
    (void)r.u<std::uint16_t>();
    MlpModel m(std::move(widths), static_cast<Activation>(output), static_cast<Activation>(hidden));
    for (std::size_t k = 0; k < m.layer_count(); ++k)
        for (float& v : m.weights(k)) v = r.f32();
    r.done();
    return m;
}

}  // namespace ngpc
