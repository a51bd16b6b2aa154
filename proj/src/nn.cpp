#include "mixsent/nn.hpp"

#include <cmath>

#include "mixsent/error.hpp"

namespace mixsent::nn {

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    uniform_fill(t, -limit, limit, rng);
}

void uniform_fill(Tensor& t, double lo, double hi, Rng& rng) {
    for (double& v : t.mutable_data()) v = rng.uniform(lo, hi);
}

// Fills the (rows x cols) block of a 2-D tensor starting at col_offset with
// an orthogonal matrix obtained by Gram-Schmidt on Gaussian draws.
void orthogonal(Tensor& t, std::size_t rows, std::size_t cols, std::size_t col_offset, Rng& rng) {
    if (t.rank() != 2 || rows > t.dim(0) || col_offset + cols > t.dim(1)) {
        fail(ErrorCode::shape, "orthogonal: block does not fit " + ag::to_string(t.shape()));
    }
    const bool by_columns = rows >= cols;
    const std::size_t count = by_columns ? cols : rows;  // vectors to orthonormalize
    const std::size_t length = by_columns ? rows : cols;
    std::vector<std::vector<double>> basis;
    while (basis.size() < count) {
        std::vector<double> vec(length);
        for (double& x : vec) x = rng.normal();
        for (const auto& q : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < length; ++i) dot += vec[i] * q[i];
            for (std::size_t i = 0; i < length; ++i) vec[i] -= dot * q[i];
        }
        double norm = 0.0;
        for (double x : vec) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;  // degenerate draw, resample
        for (double& x : vec) x /= norm;
        basis.push_back(std::move(vec));
    }
    auto data = t.mutable_data();
    const std::size_t stride = t.dim(1);
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t i = 0; i < length; ++i) {
            const std::size_t r = by_columns ? i : k;
            const std::size_t c = by_columns ? k : i;
            data[r * stride + col_offset + c] = basis[k][i];
        }
    }
}

Embedding::Embedding(std::size_t vocab_size, std::size_t dim, Rng& rng)
    : table(Tensor::zeros({vocab_size, dim}, true)) {
    uniform_fill(table, -0.25, 0.25, rng);
    auto data = table.mutable_data();
    std::fill_n(data.begin(), dim, 0.0);
}

Tensor Embedding::forward(std::span<const std::int32_t> indices, std::size_t batch, std::size_t len) const {
    return ag::gather_rows(table, indices, {batch, len}, freeze_pad ? 0 : -1);
}

void Embedding::collect(const std::string& prefix, TensorList& out) const {
    out.push_back({prefix + ".table", table, true});
}

Dense::Dense(std::size_t in, std::size_t out, Rng& rng)
    : weight(Tensor::zeros({in, out}, true)), bias(Tensor::zeros({out}, true)) {
    glorot_uniform(weight, in, out, rng);
}

Tensor Dense::forward(const Tensor& x) const { return ag::add(ag::matmul(x, weight), bias); }

void Dense::collect(const std::string& prefix, TensorList& out) const {
    out.push_back({prefix + ".weight", weight, true});
    out.push_back({prefix + ".bias", bias, true});
}

BatchNorm::BatchNorm(std::size_t features)
    : gamma(Tensor::full({features}, 1.0, true)),
      beta(Tensor::zeros({features}, true)),
      running_mean(Tensor::zeros({features})),
      running_var(Tensor::full({features}, 1.0)) {}

Tensor BatchNorm::forward(const Tensor& x, const Context& ctx) {
    if (x.rank() != 2 || x.dim(1) != gamma.numel()) {
        fail(ErrorCode::shape, "batch_norm: expected (Bx" + std::to_string(gamma.numel()) + "), got " +
                                   ag::to_string(x.shape()));
    }
    if (!ctx.training()) {
        const Tensor centered = ag::sub(x, running_mean.detach());
        const Tensor denom = ag::sqrt(ag::add_scalar(running_var.detach(), epsilon));
        return ag::add(ag::mul(ag::div(centered, denom), gamma), beta);
    }
    if (x.dim(0) < 2) fail(ErrorCode::invalid_argument, "batch_norm: batch of size 1 has undefined variance in train mode");

    const Tensor mu = ag::mean(x, 0);
    const Tensor centered = ag::sub(x, mu);
    const Tensor var = ag::mean(ag::mul(centered, centered), 0);
    const Tensor normalized = ag::div(centered, ag::sqrt(ag::add_scalar(var, epsilon)));

    auto rm = running_mean.mutable_data();
    auto rv = running_var.mutable_data();
    for (std::size_t i = 0; i < rm.size(); ++i) {
        rm[i] = momentum * rm[i] + (1.0 - momentum) * mu.data()[i];
        rv[i] = momentum * rv[i] + (1.0 - momentum) * var.data()[i];
    }
    return ag::add(ag::mul(normalized, gamma), beta);
}

void BatchNorm::collect(const std::string& prefix, TensorList& out) const {
    out.push_back({prefix + ".gamma", gamma, true});
    out.push_back({prefix + ".beta", beta, true});
    out.push_back({prefix + ".running_mean", running_mean, false});
    out.push_back({prefix + ".running_var", running_var, false});
}

Tensor dropout(const Tensor& x, double rate, const Context& ctx) {
    if (rate < 0.0 || rate >= 1.0) fail(ErrorCode::invalid_argument, "dropout: rate must lie in [0, 1)");
    if (!ctx.training() || rate == 0.0) return x;
    if (ctx.rng == nullptr) fail(ErrorCode::invalid_argument, "dropout: train mode requires a random generator");
    const double keep_scale = 1.0 / (1.0 - rate);
    std::vector<double> mask(x.numel());
    for (double& m : mask) m = ctx.rng->uniform01() >= rate ? keep_scale : 0.0;
    return ag::mul(x, Tensor::from(x.shape(), std::move(mask)));
}

DenseBlock::DenseBlock(std::size_t in, std::size_t out, double dropout_rate, bool batch_norm, Rng& rng)
    : dense(in, out, rng), use_norm(batch_norm), rate(dropout_rate) {
    if (rate < 0.0 || rate >= 1.0) fail(ErrorCode::invalid_argument, "dense block: dropout rate must lie in [0, 1)");
    if (use_norm) norm = BatchNorm(out);
}

Tensor DenseBlock::forward(const Tensor& x, const Context& ctx) {
    Tensor h = dense.forward(x);
    if (use_norm) h = norm.forward(h, ctx);
    return dropout(ag::relu(h), rate, ctx);
}

void DenseBlock::collect(const std::string& prefix, TensorList& out) const {
    dense.collect(prefix + ".dense", out);
    if (use_norm) norm.collect(prefix + ".bn", out);
}

Conv1d::Conv1d(std::size_t w, std::size_t in_dim, std::size_t filter_count, Rng& rng)
    : width(w), filters(Tensor::zeros({w, in_dim, filter_count}, true)), bias(Tensor::zeros({filter_count}, true)) {
    glorot_uniform(filters, w * in_dim, w * filter_count, rng);
}

Tensor Conv1d::forward_linear(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(2) != filters.dim(1)) {
        fail(ErrorCode::shape, "conv1d: expected (BxLx" + std::to_string(filters.dim(1)) + "), got " +
                                   ag::to_string(x.shape()));
    }
    const std::size_t len = x.dim(1);
    if (len < width) {
        fail(ErrorCode::shape, "conv1d: sequence length " + std::to_string(len) + " shorter than filter width " +
                                   std::to_string(width));
    }
    const std::size_t out_len = len - width + 1, in_dim = filters.dim(1), count = filters.dim(2);
    Tensor acc;
    for (std::size_t k = 0; k < width; ++k) {
        const Tensor tap = ag::reshape(ag::slice(filters, 0, k, 1), {in_dim, count});
        const Tensor term = ag::matmul(ag::slice(x, 1, k, out_len), tap);
        acc = acc.defined() ? ag::add(acc, term) : term;
    }
    return ag::add(acc, bias);
}

Tensor Conv1d::forward(const Tensor& x) const { return ag::relu(forward_linear(x)); }

void Conv1d::collect(const std::string& prefix, TensorList& out) const {
    out.push_back({prefix + ".filters", filters, true});
    out.push_back({prefix + ".bias", bias, true});
}

Tensor maxpool1d(const Tensor& x, std::size_t size, std::size_t stride) { return ag::maxpool1d(x, size, stride); }

Tensor global_maxpool(const Tensor& x) {
    if (x.rank() != 3 || x.dim(1) == 0) {
        fail(ErrorCode::shape, "global_maxpool: expected non-empty (BxLxH), got " + ag::to_string(x.shape()));
    }
    return ag::max(x, 1);
}

namespace {

Tensor time_step(const Tensor& seq, std::size_t t) {
    return ag::reshape(ag::slice(seq, 1, t, 1), {seq.dim(0), seq.dim(2)});
}

void check_sequence(const Tensor& x, std::size_t in_dim, const char* layer) {
    if (x.rank() != 3 || x.dim(2) != in_dim) {
        fail(ErrorCode::shape, std::string(layer) + ": expected (BxLx" + std::to_string(in_dim) + "), got " +
                                   ag::to_string(x.shape()));
    }
}

}  // namespace

Lstm::Lstm(std::size_t in_dim, std::size_t h, Rng& rng)
    : units(h),
      input_kernel(Tensor::zeros({in_dim, 4 * h}, true)),
      recurrent_kernel(Tensor::zeros({h, 4 * h}, true)),
      bias(Tensor::zeros({4 * h}, true)) {
    glorot_uniform(input_kernel, in_dim, 4 * h, rng);
    for (std::size_t gate = 0; gate < 4; ++gate) orthogonal(recurrent_kernel, h, h, gate * h, rng);
    auto b = bias.mutable_data();
    std::fill(b.begin() + static_cast<std::ptrdiff_t>(h), b.begin() + static_cast<std::ptrdiff_t>(2 * h), 1.0);
}

Tensor Lstm::forward(const Tensor& x) const {
    check_sequence(x, input_kernel.dim(0), "lstm");
    const std::size_t batch = x.dim(0), len = x.dim(1), h_dim = units;
    const Tensor projected = ag::add(ag::matmul(x, input_kernel), bias);
    Tensor h = Tensor::zeros({batch, h_dim});
    Tensor c = Tensor::zeros({batch, h_dim});
    std::vector<Tensor> outputs;
    outputs.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
        const Tensor z = ag::add(time_step(projected, t), ag::matmul(h, recurrent_kernel));
        const Tensor in_gate = ag::sigmoid(ag::slice(z, 1, 0, h_dim));
        const Tensor forget_gate = ag::sigmoid(ag::slice(z, 1, h_dim, h_dim));
        const Tensor candidate = ag::tanh(ag::slice(z, 1, 2 * h_dim, h_dim));
        const Tensor out_gate = ag::sigmoid(ag::slice(z, 1, 3 * h_dim, h_dim));
        c = ag::add(ag::mul(forget_gate, c), ag::mul(in_gate, candidate));
        h = ag::mul(out_gate, ag::tanh(c));
        outputs.push_back(ag::reshape(h, {batch, 1, h_dim}));
    }
    return ag::concat(outputs, 1);
}

void Lstm::collect(const std::string& prefix, TensorList& out) const {
    out.push_back({prefix + ".input_kernel", input_kernel, true});
    out.push_back({prefix + ".recurrent_kernel", recurrent_kernel, true});
    out.push_back({prefix + ".bias", bias, true});
}

Gru::Gru(std::size_t in_dim, std::size_t h, Rng& rng)
    : units(h),
      input_kernel(Tensor::zeros({in_dim, 3 * h}, true)),
      recurrent_kernel(Tensor::zeros({h, 3 * h}, true)),
      bias(Tensor::zeros({3 * h}, true)) {
    glorot_uniform(input_kernel, in_dim, 3 * h, rng);
    for (std::size_t gate = 0; gate < 3; ++gate) orthogonal(recurrent_kernel, h, h, gate * h, rng);
}

Tensor Gru::forward(const Tensor& x) const {
    check_sequence(x, input_kernel.dim(0), "gru");
    const std::size_t batch = x.dim(0), len = x.dim(1), h_dim = units;
    const Tensor projected = ag::add(ag::matmul(x, input_kernel), bias);
    const Tensor gate_kernel = ag::slice(recurrent_kernel, 1, 0, 2 * h_dim);
    const Tensor candidate_kernel = ag::slice(recurrent_kernel, 1, 2 * h_dim, h_dim);
    Tensor h = Tensor::zeros({batch, h_dim});
    std::vector<Tensor> outputs;
    outputs.reserve(len);
    for (std::size_t t = 0; t < len; ++t) {
        const Tensor xt = time_step(projected, t);
        const Tensor gates = ag::sigmoid(ag::add(ag::slice(xt, 1, 0, 2 * h_dim), ag::matmul(h, gate_kernel)));
        const Tensor update = ag::slice(gates, 1, 0, h_dim);
        const Tensor reset = ag::slice(gates, 1, h_dim, h_dim);
        const Tensor candidate =
            ag::tanh(ag::add(ag::slice(xt, 1, 2 * h_dim, h_dim), ag::matmul(ag::mul(reset, h), candidate_kernel)));
        h = ag::add(ag::mul(update, h), ag::mul(ag::rsub_scalar(1.0, update), candidate));
        outputs.push_back(ag::reshape(h, {batch, 1, h_dim}));
    }
    return ag::concat(outputs, 1);
}

void Gru::collect(const std::string& prefix, TensorList& out) const {
    out.push_back({prefix + ".input_kernel", input_kernel, true});
    out.push_back({prefix + ".recurrent_kernel", recurrent_kernel, true});
    out.push_back({prefix + ".bias", bias, true});
}

AdditiveAttention::AdditiveAttention(std::size_t hidden, std::size_t attention_dim, Rng& rng)
    : weight(Tensor::zeros({hidden, attention_dim}, true)),
      bias(Tensor::zeros({attention_dim}, true)),
      score(Tensor::zeros({attention_dim, 1}, true)) {
    glorot_uniform(weight, hidden, attention_dim, rng);
    glorot_uniform(score, attention_dim, 1, rng);
}

AttentionOutput AdditiveAttention::forward(const Tensor& h) const {
    check_sequence(h, weight.dim(0), "attention");
    const std::size_t batch = h.dim(0), len = h.dim(1), hidden = h.dim(2);
    const Tensor keys = ag::tanh(ag::add(ag::matmul(h, weight), bias));
    const Tensor energies = ag::reshape(ag::matmul(keys, score), {batch, len});
    const Tensor weights = ag::softmax(energies);
    const Tensor context = ag::reshape(ag::bmm(ag::reshape(weights, {batch, 1, len}), h), {batch, hidden});
    return {context, weights};
}

void AdditiveAttention::collect(const std::string& prefix, TensorList& out) const {
    out.push_back({prefix + ".weight", weight, true});
    out.push_back({prefix + ".bias", bias, true});
    out.push_back({prefix + ".score", score, true});
}

Tensor focal_loss(const Tensor& probs, std::span<const std::size_t> targets, const FocalLossConfig& config) {
    if (probs.rank() != 2 || probs.dim(0) != targets.size() || targets.empty()) {
        fail(ErrorCode::shape, "focal_loss: expected (" + std::to_string(targets.size()) + "xC) probabilities, got " +
                                   ag::to_string(probs.shape()));
    }
    if (config.gamma < 0.0) fail(ErrorCode::invalid_argument, "focal_loss: gamma must be non-negative");

    // A single sigmoid column is expanded to [1-p, p].
    Tensor matrix = probs;
    if (probs.dim(1) == 1) {
        const std::vector<Tensor> cols{ag::rsub_scalar(1.0, probs), probs};
        matrix = ag::concat(cols, 1);
    }
    const std::size_t classes = matrix.dim(1);
    if (config.class_weights.size() != classes) {
        fail(ErrorCode::invalid_argument, "focal_loss: " + std::to_string(config.class_weights.size()) +
                                              " class weights for " + std::to_string(classes) + " classes");
    }
    std::vector<double> alpha(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] >= classes) {
            fail(ErrorCode::invalid_argument, "focal_loss: target " + std::to_string(targets[i]) + " out of range for " +
                                                  std::to_string(classes) + " classes");
        }
        const double w = config.class_weights[targets[i]];
        if (!(w > 0.0)) fail(ErrorCode::invalid_argument, "focal_loss: class weights must be positive");
        alpha[i] = w;
    }
    const Tensor p = ag::clamp(ag::pick(matrix, targets), kProbabilityClamp, 1.0 - kProbabilityClamp);
    const Tensor modulator = ag::pow(ag::rsub_scalar(1.0, p), config.gamma);
    const Tensor weighted = ag::mul(Tensor::from({targets.size()}, std::move(alpha)), modulator);
    return ag::scale(ag::mean_all(ag::mul(weighted, ag::log(p))), -1.0);
}

std::vector<double> inverse_frequency_weights(std::span<const std::size_t> labels, std::size_t num_classes) {
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t y : labels) {
        if (y >= num_classes) fail(ErrorCode::invalid_argument, "class weights: label out of range");
        ++counts[y];
    }
    std::vector<double> weights(num_classes, 1.0);
    const double n = static_cast<double>(labels.size());
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] > 0) weights[c] = n / (static_cast<double>(num_classes) * static_cast<double>(counts[c]));
    }
    return weights;
}

void Adam::step(std::span<Tensor> params) {
    if (m_.size() != params.size()) {
        m_.assign(params.size(), {});
        v_.assign(params.size(), {});
    }
    ++t_;
    const double correction1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double correction2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = params[k];
        auto theta = p.mutable_data();
        auto& m = m_[k];
        auto& v = v_[k];
        if (m.size() != theta.size()) {
            m.assign(theta.size(), 0.0);
            v.assign(theta.size(), 0.0);
        }
        const bool has_grad = p.has_grad();
        const auto g = p.grad();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = has_grad ? g[i] : 0.0;
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * gi;
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * gi * gi;
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            theta[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
        }
    }
}

}  // namespace mixsent::nn
