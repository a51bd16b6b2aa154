#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mixsent/autograd.hpp"
#include "mixsent/rng.hpp"

namespace mixsent::nn {

using ag::Tensor;

enum class Mode { train, eval };

// Per-forward settings. Dropout masks are drawn from rng in train mode.
struct Context {
    Mode mode = Mode::eval;
    Rng* rng = nullptr;

    bool training() const { return mode == Mode::train; }
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
    bool trainable = true;  // false for running statistics
};

using TensorList = std::vector<NamedTensor>;

// Initializers.
void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng);
void orthogonal(Tensor& t, std::size_t rows, std::size_t cols, std::size_t col_offset, Rng& rng);
void uniform_fill(Tensor& t, double lo, double hi, Rng& rng);

class Embedding {
public:
    Embedding() = default;
    Embedding(std::size_t vocab_size, std::size_t dim, Rng& rng);

    // indices: batch * len entries, row-major. Output (batch x len x dim).
    Tensor forward(std::span<const std::int32_t> indices, std::size_t batch, std::size_t len) const;

    void collect(const std::string& prefix, TensorList& out) const;

    Tensor table;
    bool freeze_pad = true;
};

class Dense {
public:
    Dense() = default;
    Dense(std::size_t in, std::size_t out, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, TensorList& out) const;

    Tensor weight;  // (in x out)
    Tensor bias;    // (out)
};

class BatchNorm {
public:
    static constexpr double epsilon = 1e-5;
    static constexpr double momentum = 0.9;

    BatchNorm() = default;
    explicit BatchNorm(std::size_t features);

    // x is (B x features). Train mode normalizes with batch statistics and
    // updates the running averages; eval mode uses the running averages.
    Tensor forward(const Tensor& x, const Context& ctx);
    void collect(const std::string& prefix, TensorList& out) const;

    Tensor gamma;
    Tensor beta;
    Tensor running_mean;
    Tensor running_var;
};

// Inverted dropout; identity in eval mode or when rate == 0.
Tensor dropout(const Tensor& x, double rate, const Context& ctx);

// Dense -> BatchNorm -> ReLU -> Dropout. Batch norm is optional.
class DenseBlock {
public:
    DenseBlock() = default;
    DenseBlock(std::size_t in, std::size_t out, double dropout_rate, bool batch_norm, Rng& rng);

    Tensor forward(const Tensor& x, const Context& ctx);
    void collect(const std::string& prefix, TensorList& out) const;

    Dense dense;
    BatchNorm norm;
    bool use_norm = true;
    double rate = 0.0;
};

// Valid temporal convolution with bias and ReLU: (B x L x d) -> (B x (L-w+1) x F).
class Conv1d {
public:
    Conv1d() = default;
    Conv1d(std::size_t width, std::size_t in_dim, std::size_t filters, Rng& rng);

    Tensor forward(const Tensor& x) const;
    Tensor forward_linear(const Tensor& x) const;  // before ReLU
    void collect(const std::string& prefix, TensorList& out) const;

    std::size_t width = 0;
    Tensor filters;  // (width x in_dim x F)
    Tensor bias;     // (F)
};

// (B x L x F) -> (B x floor((L-size)/stride)+1 x F)
Tensor maxpool1d(const Tensor& x, std::size_t size = 2, std::size_t stride = 2);

// (B x L x H) -> (B x H)
Tensor global_maxpool(const Tensor& x);

// Gates packed as [input, forget, cell, output] along the last axis.
class Lstm {
public:
    Lstm() = default;
    Lstm(std::size_t in_dim, std::size_t units, Rng& rng);

    // (B x L x d) -> (B x L x H); h and c start at zero.
    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, TensorList& out) const;

    std::size_t units = 0;
    Tensor input_kernel;      // (d x 4H)
    Tensor recurrent_kernel;  // (H x 4H)
    Tensor bias;              // (4H)
};

// Gates packed as [update, reset, candidate]. h_t = z*h + (1-z)*candidate.
class Gru {
public:
    Gru() = default;
    Gru(std::size_t in_dim, std::size_t units, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, TensorList& out) const;

    std::size_t units = 0;
    Tensor input_kernel;      // (d x 3H)
    Tensor recurrent_kernel;  // (H x 3H)
    Tensor bias;              // (3H)
};

struct AttentionOutput {
    Tensor context;  // (B x H)
    Tensor weights;  // (B x L)
};

// Additive scoring e_i = v . tanh(W h_i + b), softmax over time, weighted sum.
class AdditiveAttention {
public:
    AdditiveAttention() = default;
    AdditiveAttention(std::size_t hidden, std::size_t attention_dim, Rng& rng);

    AttentionOutput forward(const Tensor& h) const;
    void collect(const std::string& prefix, TensorList& out) const;

    Tensor weight;  // (H x A)
    Tensor bias;    // (A)
    Tensor score;   // (A x 1)
};

struct FocalLossConfig {
    double gamma = 2.0;
    std::vector<double> class_weights;  // alpha per class
};

inline constexpr double kProbabilityClamp = 1e-12;

// mean_i -alpha[y_i] * (1 - p_i)^gamma * log(p_i), p_i = probs[i, y_i] clamped.
Tensor focal_loss(const Tensor& probs, std::span<const std::size_t> targets, const FocalLossConfig& config);

// Inverse-frequency weights N / (C * n_c); classes absent from the labels get 1.
std::vector<double> inverse_frequency_weights(std::span<const std::size_t> labels, std::size_t num_classes);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    // One update over params using their current gradients. Tensors
    // without a gradient buffer are treated as having zero gradient.
    void step(std::span<Tensor> params);

    std::uint64_t steps() const { return t_; }
    const AdamConfig& config() const { return config_; }
    void set_lr(double lr) { config_.lr = lr; }

private:
    AdamConfig config_;
    std::uint64_t t_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace mixsent::nn
