#pragma once

#include <vector>

#include "mixsent/autograd.hpp"
#include "mixsent/rng.hpp"

namespace test_util {

inline mixsent::ag::Tensor random_tensor(mixsent::ag::Shape shape, mixsent::Rng& rng, double lo = -1.0,
                                         double hi = 1.0, bool requires_grad = true) {
    std::vector<double> values(mixsent::ag::numel(shape));
    for (double& v : values) v = rng.uniform(lo, hi);
    return mixsent::ag::Tensor::from(std::move(shape), std::move(values), requires_grad);
}

}  // namespace test_util
