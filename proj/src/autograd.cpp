#include "mixsent/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "mixsent/error.hpp"

namespace mixsent::ag {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::ostringstream out;
    out << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << 'x';
        out << shape[i];
    }
    out << ')';
    return out.str();
}

Tensor make_tensor(std::shared_ptr<Node> node) { return Tensor(std::move(node)); }

namespace {

Tensor leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    node->requires_grad = requires_grad;
    return make_tensor(std::move(node));
}

// Builds an op result; the graph edge is only recorded when some input
// needs a gradient.
Tensor result(Shape shape, std::vector<double> values, std::initializer_list<const Tensor*> inputs,
              std::function<void(Node&)> backward) {
    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(values);
    for (const Tensor* in : inputs) {
        if (in->requires_grad()) node->requires_grad = true;
    }
    if (node->requires_grad) {
        for (const Tensor* in : inputs) node->inputs.push_back(in->node_ptr());
        node->backward = std::move(backward);
    }
    return make_tensor(std::move(node));
}

void require_defined(const Tensor& t, const char* op) {
    if (!t.defined()) fail(ErrorCode::invalid_argument, std::string(op) + ": undefined tensor");
}

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

Shape broadcast_shape(const Tensor& a, const Tensor& b, const char* op) {
    require_defined(a, op);
    require_defined(b, op);
    if (is_suffix(b.shape(), a.shape())) return a.shape();
    if (is_suffix(a.shape(), b.shape())) return b.shape();
    fail(ErrorCode::shape, std::string(op) + ": incompatible shapes " + to_string(a.shape()) +
                               " and " + to_string(b.shape()));
}

// Splits a shape around an axis into (outer, n, inner) extents.
struct AxisSplit {
    std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit split_axis(const Shape& shape, std::size_t axis, const char* op) {
    if (axis >= shape.size()) {
        fail(ErrorCode::shape,
             std::string(op) + ": axis " + std::to_string(axis) + " out of range for " + to_string(shape));
    }
    AxisSplit s;
    for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
    s.n = shape[axis];
    for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
    return s;
}

Shape drop_axis(const Shape& shape, std::size_t axis) {
    Shape out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != axis) out.push_back(shape[i]);
    }
    return out;
}

template <typename Forward, typename Derivative>
Tensor unary(const Tensor& a, const char* op, Forward f, Derivative df) {
    require_defined(a, op);
    const auto x = a.data();
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
    return result(a.shape(), std::move(y), {&a}, [df](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(in.data[i], self.data[i]);
    });
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    const std::size_t n = ag::numel(shape);
    return leaf(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = ag::numel(shape);
    return leaf(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
    if (ag::numel(shape) != values.size()) {
        fail(ErrorCode::shape, "tensor: " + std::to_string(values.size()) + " values do not fill shape " +
                                   to_string(shape));
    }
    return leaf(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return leaf({}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
    require_defined(*this, "shape");
    return node_->shape;
}

std::size_t Tensor::numel() const { return defined() ? node_->data.size() : 0; }

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::mutable_grad() { return node_->ensure_grad(); }
bool Tensor::has_grad() const { return defined() && node_->grad.size() == node_->data.size(); }

void Tensor::zero_grad() {
    if (defined()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool Tensor::requires_grad() const { return defined() && node_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { node_->requires_grad = flag; }

double Tensor::item() const {
    if (numel() != 1) fail(ErrorCode::shape, "item: tensor of shape " + to_string(shape()) + " is not a scalar");
    return node_->data[0];
}

void Tensor::backward() const {
    require_defined(*this, "backward");
    if (numel() != 1) {
        fail(ErrorCode::shape, "backward: loss must have exactly one element, got shape " + to_string(shape()));
    }
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order (inputs first).
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack{{node_.get(), 0}};
    visited.insert(node_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    node_->ensure_grad()[0] += 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* node = *it;
        if (node->backward && !node->grad.empty()) node->backward(*node);
    }
}

Tensor Tensor::detach() const {
    require_defined(*this, "detach");
    return leaf(node_->shape, node_->data, false);
}

Tensor add(const Tensor& a, const Tensor& b) {
    Shape shape = broadcast_shape(a, b, "add");
    const auto x = a.data(), y = b.data();
    const std::size_t n = numel(shape), na = x.size(), nb = y.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i % na] + y[i % nb];
    return result(std::move(shape), std::move(out), {&a, &b}, [](Node& self) {
        Node& l = *self.inputs[0];
        Node& r = *self.inputs[1];
        const std::size_t n = self.grad.size();
        if (l.requires_grad) {
            auto& g = l.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) g[i % g.size()] += self.grad[i];
        }
        if (r.requires_grad) {
            auto& g = r.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) g[i % g.size()] += self.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    Shape shape = broadcast_shape(a, b, "sub");
    const auto x = a.data(), y = b.data();
    const std::size_t n = numel(shape), na = x.size(), nb = y.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i % na] - y[i % nb];
    return result(std::move(shape), std::move(out), {&a, &b}, [](Node& self) {
        Node& l = *self.inputs[0];
        Node& r = *self.inputs[1];
        const std::size_t n = self.grad.size();
        if (l.requires_grad) {
            auto& g = l.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) g[i % g.size()] += self.grad[i];
        }
        if (r.requires_grad) {
            auto& g = r.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) g[i % g.size()] -= self.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    Shape shape = broadcast_shape(a, b, "mul");
    const auto x = a.data(), y = b.data();
    const std::size_t n = numel(shape), na = x.size(), nb = y.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i % na] * y[i % nb];
    return result(std::move(shape), std::move(out), {&a, &b}, [](Node& self) {
        Node& l = *self.inputs[0];
        Node& r = *self.inputs[1];
        const std::size_t n = self.grad.size(), nl = l.data.size(), nr = r.data.size();
        if (l.requires_grad) {
            auto& g = l.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) g[i % nl] += self.grad[i] * r.data[i % nr];
        }
        if (r.requires_grad) {
            auto& g = r.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) g[i % nr] += self.grad[i] * l.data[i % nl];
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    Shape shape = broadcast_shape(a, b, "div");
    const auto x = a.data(), y = b.data();
    const std::size_t n = numel(shape), na = x.size(), nb = y.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i % na] / y[i % nb];
    return result(std::move(shape), std::move(out), {&a, &b}, [](Node& self) {
        Node& l = *self.inputs[0];
        Node& r = *self.inputs[1];
        const std::size_t n = self.grad.size(), nl = l.data.size(), nr = r.data.size();
        if (l.requires_grad) {
            auto& g = l.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) g[i % nl] += self.grad[i] / r.data[i % nr];
        }
        if (r.requires_grad) {
            auto& g = r.ensure_grad();
            for (std::size_t i = 0; i < n; ++i) {
                const double d = r.data[i % nr];
                g[i % nr] -= self.grad[i] * l.data[i % nl] / (d * d);
            }
        }
    });
}

Tensor scale(const Tensor& a, double factor) {
    return unary(a, "scale", [factor](double x) { return x * factor; },
                 [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double value) {
    return unary(a, "add_scalar", [value](double x) { return x + value; }, [](double, double) { return 1.0; });
}

Tensor rsub_scalar(double value, const Tensor& a) {
    return unary(a, "rsub_scalar", [value](double x) { return value - x; }, [](double, double) { return -1.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_defined(a, "matmul");
    require_defined(b, "matmul");
    if (a.rank() < 1 || b.rank() != 2 || a.shape().back() != b.dim(0)) {
        fail(ErrorCode::shape, "matmul: incompatible shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
    }
    const std::size_t k = b.dim(0), m = b.dim(1), rows = a.numel() / k;
    Shape shape = a.shape();
    shape.back() = m;
    const auto x = a.data(), w = b.data();
    std::vector<double> out(rows * m, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double* o = out.data() + i * m;
        for (std::size_t p = 0; p < k; ++p) {
            const double xv = x[i * k + p];
            if (xv == 0.0) continue;
            const double* wr = w.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) o[j] += xv * wr[j];
        }
    }
    return result(std::move(shape), std::move(out), {&a, &b}, [rows, k, m](Node& self) {
        Node& l = *self.inputs[0];
        Node& r = *self.inputs[1];
        const double* g = self.grad.data();
        if (l.requires_grad) {
            auto& gl = l.ensure_grad();
            for (std::size_t i = 0; i < rows; ++i) {
                const double* gi = g + i * m;
                for (std::size_t p = 0; p < k; ++p) {
                    const double* wr = r.data.data() + p * m;
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) acc += gi[j] * wr[j];
                    gl[i * k + p] += acc;
                }
            }
        }
        if (r.requires_grad) {
            auto& gr = r.ensure_grad();
            for (std::size_t i = 0; i < rows; ++i) {
                const double* gi = g + i * m;
                for (std::size_t p = 0; p < k; ++p) {
                    const double xv = l.data[i * k + p];
                    if (xv == 0.0) continue;
                    double* gw = gr.data() + p * m;
                    for (std::size_t j = 0; j < m; ++j) gw[j] += xv * gi[j];
                }
            }
        }
    });
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    require_defined(a, "bmm");
    require_defined(b, "bmm");
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
        fail(ErrorCode::shape, "bmm: incompatible shapes " + to_string(a.shape()) + " and " + to_string(b.shape()));
    }
    const std::size_t batch = a.dim(0), n = a.dim(1), k = a.dim(2), m = b.dim(2);
    const auto x = a.data(), y = b.data();
    std::vector<double> out(batch * n * m, 0.0);
    for (std::size_t s = 0; s < batch; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
                const double xv = x[(s * n + i) * k + p];
                for (std::size_t j = 0; j < m; ++j) out[(s * n + i) * m + j] += xv * y[(s * k + p) * m + j];
            }
        }
    }
    return result({batch, n, m}, std::move(out), {&a, &b}, [batch, n, k, m](Node& self) {
        Node& l = *self.inputs[0];
        Node& r = *self.inputs[1];
        const auto& g = self.grad;
        for (std::size_t s = 0; s < batch; ++s) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < m; ++j) {
                        const double gv = g[(s * n + i) * m + j];
                        acc += gv * r.data[(s * k + p) * m + j];
                        if (r.requires_grad) r.ensure_grad()[(s * k + p) * m + j] += gv * l.data[(s * n + i) * k + p];
                    }
                    if (l.requires_grad) l.ensure_grad()[(s * n + i) * k + p] += acc;
                }
            }
        }
    });
}

Tensor tanh(const Tensor& a) {
    return unary(a, "tanh", [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        a, "sigmoid",
        [](double x) {
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
    return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
    return unary(a, "exp", [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary(a, "sqrt", [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor pow(const Tensor& a, double exponent) {
    return unary(
        a, "pow", [exponent](double x) { return std::pow(x, exponent); },
        [exponent](double x, double) { return exponent == 0.0 ? 0.0 : exponent * std::pow(x, exponent - 1.0); });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
                 [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a, std::size_t axis) {
    require_defined(a, "sum");
    const AxisSplit s = split_axis(a.shape(), axis, "sum");
    const auto x = a.data();
    std::vector<double> out(s.outer * s.inner, 0.0);
    for (std::size_t o = 0; o < s.outer; ++o)
        for (std::size_t i = 0; i < s.n; ++i)
            for (std::size_t j = 0; j < s.inner; ++j) out[o * s.inner + j] += x[(o * s.n + i) * s.inner + j];
    return result(drop_axis(a.shape(), axis), std::move(out), {&a}, [s](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t i = 0; i < s.n; ++i)
                for (std::size_t j = 0; j < s.inner; ++j) g[(o * s.n + i) * s.inner + j] += self.grad[o * s.inner + j];
    });
}

Tensor mean(const Tensor& a, std::size_t axis) {
    const std::size_t n = a.shape().at(axis);
    if (n == 0) fail(ErrorCode::shape, "mean: empty axis in " + to_string(a.shape()));
    return scale(sum(a, axis), 1.0 / static_cast<double>(n));
}

Tensor max(const Tensor& a, std::size_t axis) {
    require_defined(a, "max");
    const AxisSplit s = split_axis(a.shape(), axis, "max");
    if (s.n == 0) fail(ErrorCode::shape, "max: empty axis in " + to_string(a.shape()));
    const auto x = a.data();
    std::vector<double> out(s.outer * s.inner);
    std::vector<std::size_t> arg(s.outer * s.inner);
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t j = 0; j < s.inner; ++j) {
            std::size_t best = (o * s.n) * s.inner + j;
            for (std::size_t i = 1; i < s.n; ++i) {
                const std::size_t idx = (o * s.n + i) * s.inner + j;
                if (x[idx] > x[best]) best = idx;
            }
            out[o * s.inner + j] = x[best];
            arg[o * s.inner + j] = best;
        }
    }
    return result(drop_axis(a.shape(), axis), std::move(out), {&a}, [arg = std::move(arg)](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += self.grad[i];
    });
}

Tensor sum_all(const Tensor& a) { return sum(reshape(a, {a.numel()}), 0); }

Tensor mean_all(const Tensor& a) {
    if (a.numel() == 0) fail(ErrorCode::shape, "mean_all: empty tensor");
    return scale(sum_all(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor softmax(const Tensor& a) {
    require_defined(a, "softmax");
    if (a.rank() == 0) fail(ErrorCode::shape, "softmax: scalar input");
    const std::size_t c = a.shape().back(), rows = c ? a.numel() / c : 0;
    const auto x = a.data();
    std::vector<double> out(a.numel());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * c;
        double* yr = out.data() + r * c;
        const double top = *std::max_element(xr, xr + c);
        double total = 0.0;
        for (std::size_t j = 0; j < c; ++j) total += (yr[j] = std::exp(xr[j] - top));
        for (std::size_t j = 0; j < c; ++j) yr[j] /= total;
    }
    return result(a.shape(), std::move(out), {&a}, [rows, c](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.data.data() + r * c;
            const double* gy = self.grad.data() + r * c;
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += gy[j] * y[j];
            for (std::size_t j = 0; j < c; ++j) g[r * c + j] += y[j] * (gy[j] - dot);
        }
    });
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
    if (parts.empty()) fail(ErrorCode::invalid_argument, "concat: no inputs");
    const Shape& first = parts.front().shape();
    if (axis >= first.size()) fail(ErrorCode::shape, "concat: axis out of range for " + to_string(first));
    Shape shape = first;
    shape[axis] = 0;
    for (const Tensor& p : parts) {
        const Shape& ps = p.shape();
        bool ok = ps.size() == first.size();
        for (std::size_t i = 0; ok && i < ps.size(); ++i) ok = (i == axis) || ps[i] == first[i];
        if (!ok) fail(ErrorCode::shape, "concat: incompatible shapes " + to_string(first) + " and " + to_string(ps));
        shape[axis] += ps[axis];
    }
    const AxisSplit s = split_axis(shape, axis, "concat");
    std::vector<std::size_t> widths;  // per-part chunk width within one outer slice
    for (const Tensor& p : parts) widths.push_back(p.dim(axis) * s.inner);
    const std::size_t row = s.n * s.inner;
    std::vector<double> out(s.outer * row);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto x = parts[k].data();
        for (std::size_t o = 0; o < s.outer; ++o)
            std::copy_n(x.data() + o * widths[k], widths[k], out.data() + o * row + offset);
        offset += widths[k];
    }

    auto node = std::make_shared<Node>();
    node->shape = std::move(shape);
    node->data = std::move(out);
    for (const Tensor& p : parts) node->requires_grad = node->requires_grad || p.requires_grad();
    if (node->requires_grad) {
        for (const Tensor& p : parts) node->inputs.push_back(p.node_ptr());
        node->backward = [widths, row, outer = s.outer](Node& self) {
            std::size_t offset = 0;
            for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                Node& in = *self.inputs[k];
                if (in.requires_grad) {
                    auto& g = in.ensure_grad();
                    for (std::size_t o = 0; o < outer; ++o)
                        for (std::size_t j = 0; j < widths[k]; ++j) g[o * widths[k] + j] += self.grad[o * row + offset + j];
                }
                offset += widths[k];
            }
        };
    }
    return make_tensor(std::move(node));
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
    require_defined(a, "slice");
    const AxisSplit s = split_axis(a.shape(), axis, "slice");
    if (start + length > s.n) {
        fail(ErrorCode::shape, "slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                                   ") exceeds axis " + std::to_string(axis) + " of " + to_string(a.shape()));
    }
    Shape shape = a.shape();
    shape[axis] = length;
    const std::size_t width = length * s.inner, row = s.n * s.inner, skip = start * s.inner;
    const auto x = a.data();
    std::vector<double> out(s.outer * width);
    for (std::size_t o = 0; o < s.outer; ++o) std::copy_n(x.data() + o * row + skip, width, out.data() + o * width);
    return result(std::move(shape), std::move(out), {&a}, [outer = s.outer, width, row, skip](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t j = 0; j < width; ++j) g[o * row + skip + j] += self.grad[o * width + j];
    });
}

Tensor reshape(const Tensor& a, Shape shape) {
    require_defined(a, "reshape");
    if (numel(shape) != a.numel()) {
        fail(ErrorCode::shape, "reshape: cannot view " + to_string(a.shape()) + " as " + to_string(shape));
    }
    std::vector<double> out(a.data().begin(), a.data().end());
    return result(std::move(shape), std::move(out), {&a}, [](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

Tensor gather_rows(const Tensor& table, std::span<const std::int32_t> indices, Shape prefix,
                   std::int64_t frozen_row) {
    require_defined(table, "gather_rows");
    if (table.rank() != 2) fail(ErrorCode::shape, "gather_rows: table must be 2-D, got " + to_string(table.shape()));
    if (numel(prefix) != indices.size()) {
        fail(ErrorCode::shape, "gather_rows: " + std::to_string(indices.size()) + " indices do not fill " +
                                   to_string(prefix));
    }
    const std::size_t rows = table.dim(0), d = table.dim(1);
    const auto t = table.data();
    std::vector<double> out(indices.size() * d);
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const std::int32_t idx = indices[i];
        if (idx < 0 || static_cast<std::size_t>(idx) >= rows) {
            fail(ErrorCode::invalid_argument,
                 "gather_rows: index " + std::to_string(idx) + " out of range for table of " + std::to_string(rows) + " rows");
        }
        std::copy_n(t.data() + static_cast<std::size_t>(idx) * d, d, out.data() + i * d);
    }
    Shape shape = std::move(prefix);
    shape.push_back(d);
    std::vector<std::int32_t> idx(indices.begin(), indices.end());
    return result(std::move(shape), std::move(out), {&table}, [idx = std::move(idx), d, frozen_row](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < idx.size(); ++i) {
            if (idx[i] == frozen_row) continue;
            const std::size_t base = static_cast<std::size_t>(idx[i]) * d;
            for (std::size_t j = 0; j < d; ++j) g[base + j] += self.grad[i * d + j];
        }
    });
}

Tensor pick(const Tensor& a, std::span<const std::size_t> targets) {
    require_defined(a, "pick");
    if (a.rank() != 2 || a.dim(0) != targets.size()) {
        fail(ErrorCode::shape, "pick: expected (" + std::to_string(targets.size()) + "xC) matrix, got " +
                                   to_string(a.shape()));
    }
    const std::size_t c = a.dim(1);
    std::vector<double> out(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        if (targets[i] >= c) {
            fail(ErrorCode::invalid_argument,
                 "pick: target " + std::to_string(targets[i]) + " out of range for " + std::to_string(c) + " classes");
        }
        out[i] = a.data()[i * c + targets[i]];
    }
    std::vector<std::size_t> t(targets.begin(), targets.end());
    return result({targets.size()}, std::move(out), {&a}, [t = std::move(t), c](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < t.size(); ++i) g[i * c + t[i]] += self.grad[i];
    });
}

Tensor maxpool1d(const Tensor& a, std::size_t size, std::size_t stride) {
    require_defined(a, "maxpool1d");
    if (a.rank() != 3) fail(ErrorCode::shape, "maxpool1d: expected (BxLxF), got " + to_string(a.shape()));
    if (size == 0 || stride == 0) fail(ErrorCode::invalid_argument, "maxpool1d: size and stride must be positive");
    const std::size_t batch = a.dim(0), len = a.dim(1), feats = a.dim(2);
    if (len < size) {
        fail(ErrorCode::shape, "maxpool1d: sequence length " + std::to_string(len) + " shorter than window " +
                                   std::to_string(size));
    }
    const std::size_t out_len = (len - size) / stride + 1;
    const auto x = a.data();
    std::vector<double> out(batch * out_len * feats);
    std::vector<std::size_t> arg(out.size());
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t t = 0; t < out_len; ++t) {
            for (std::size_t f = 0; f < feats; ++f) {
                std::size_t best = (b * len + t * stride) * feats + f;
                for (std::size_t w = 1; w < size; ++w) {
                    const std::size_t idx = (b * len + t * stride + w) * feats + f;
                    if (x[idx] > x[best]) best = idx;
                }
                const std::size_t o = (b * out_len + t) * feats + f;
                out[o] = x[best];
                arg[o] = best;
            }
        }
    }
    return result({batch, out_len, feats}, std::move(out), {&a}, [arg = std::move(arg)](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.ensure_grad();
        for (std::size_t i = 0; i < arg.size(); ++i) g[arg[i]] += self.grad[i];
    });
}

GradCheckResult grad_check_params(const std::function<Tensor()>& loss_fn, std::span<Tensor> params,
                                  double epsilon) {
    if (!(epsilon > 0.0)) fail(ErrorCode::invalid_argument, "grad_check: epsilon must be positive");
    for (Tensor& p : params) p.zero_grad();
    const Tensor loss = loss_fn();
    loss.backward();
    const double f0 = loss.item();

    GradCheckResult res;
    for (Tensor& p : params) {
        std::vector<double> analytic(p.numel(), 0.0);
        if (p.has_grad()) std::copy(p.grad().begin(), p.grad().end(), analytic.begin());
        auto values = p.mutable_data();
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double orig = values[i];
            values[i] = orig + epsilon;
            const double plus = loss_fn().item();
            values[i] = orig - epsilon;
            const double minus = loss_fn().item();
            values[i] = orig;

            const double right = (plus - f0) / epsilon;
            const double left = (f0 - minus) / epsilon;
            if (std::abs(right - left) > 1e-4 * std::max({1.0, std::abs(right), std::abs(left)})) {
                ++res.skipped;
                continue;
            }
            const double numeric = (plus - minus) / (2.0 * epsilon);
            const double denom = std::max({1.0, std::abs(analytic[i]), std::abs(numeric)});
            res.max_relative_error = std::max(res.max_relative_error, std::abs(analytic[i] - numeric) / denom);
            ++res.checked;
        }
    }
    return res;
}

double grad_check(const std::function<Tensor(const Tensor&)>& fn, const Tensor& point, double epsilon) {
    Tensor x = point.detach();
    x.set_requires_grad(true);
    std::vector<Tensor> params{x};
    return grad_check_params([&] { return fn(x); }, params, epsilon).max_relative_error;
}

}  // namespace mixsent::ag
