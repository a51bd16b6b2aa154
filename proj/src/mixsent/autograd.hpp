#pragma once

// Reverse-mode automatic differentiation over dense float64 tensors.
//
// A Tensor is a cheap handle to a shared node. Operations on tensors that
// require gradients record their inputs and a backward closure, so the
// graph of one forward pass is the set of nodes reachable from its result.
// Binary operations broadcast the smaller operand when its shape is a
// suffix of the larger operand's shape (repetition over leading dims).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mixsent::ag {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct Node;

class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t dim(std::size_t axis) const { return shape().at(axis); }
    std::size_t numel() const;

    std::span<const double> data() const;
    std::span<double> mutable_data();

    // Empty until a backward pass reaches this tensor.
    std::span<const double> grad() const;
    std::span<double> mutable_grad();
    bool has_grad() const;
    void zero_grad();

    bool requires_grad() const;
    void set_requires_grad(bool flag);

    double item() const;

    // Populates gradients of every requires_grad tensor reachable from this
    // scalar. Gradients accumulate; callers zero them between passes.
    void backward() const;

    // Same values, no graph history.
    Tensor detach() const;

    Node* node() const { return node_.get(); }
    const std::shared_ptr<Node>& node_ptr() const { return node_; }

private:
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}
    friend Tensor make_tensor(std::shared_ptr<Node>);

    std::shared_ptr<Node> node_;
};

struct Node {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;

    std::vector<double>& ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
        return grad;
    }
};

Tensor make_tensor(std::shared_ptr<Node> node);

// Elementwise arithmetic with suffix broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor rsub_scalar(double value, const Tensor& a);  // value - a

// (..., k) x (k, m) -> (..., m)
Tensor matmul(const Tensor& a, const Tensor& b);
// (B, n, k) x (B, k, m) -> (B, n, m)
Tensor bmm(const Tensor& a, const Tensor& b);

Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);  // subgradient 0 at 0
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor pow(const Tensor& a, double exponent);
Tensor clamp(const Tensor& a, double lo, double hi);

// Reductions drop the reduced axis.
Tensor sum(const Tensor& a, std::size_t axis);
Tensor mean(const Tensor& a, std::size_t axis);
Tensor max(const Tensor& a, std::size_t axis);  // ties route to the first
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);

Tensor softmax(const Tensor& a);  // over the last axis
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);
Tensor reshape(const Tensor& a, Shape shape);

// Rows of a (V, d) table; output shape is prefix + {d}. Rows equal to
// frozen_row receive no gradient (pass -1 to disable).
Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> indices, Shape prefix,
                   std::int64_t frozen_row = -1);

// a[i, targets[i]] for a (B, C) matrix.
Tensor pick(const Tensor& a, std::span<const std::size_t> targets);

// Windowed max along axis 1 of a (B, L, F) tensor.
Tensor maxpool1d(const Tensor& a, std::size_t size, std::size_t stride);

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t checked = 0;
    std::size_t skipped = 0;  // coordinates at a kink (one-sided slopes disagree)
};

// Compares backward() gradients of loss_fn against central differences for
// every coordinate of every tensor in params. Relative error uses the
// max(1, |analytic|, |numeric|) denominator.
GradCheckResult grad_check_params(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                                  double epsilon);

double grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& point,
                  double epsilon);

}  // namespace mixsent::ag
