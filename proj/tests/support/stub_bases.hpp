#pragma once

// Hand-built base classifiers with known behavior for stacking tests.

#include <cstdint>
#include <set>
#include <vector>

#include "mixsent/ensemble.hpp"
#include "mixsent/rng.hpp"
#include "synthetic.hpp"

namespace stub_bases {

using mixsent::Rng;
using mixsent::ensemble::BaseClassifier;
using mixsent::ensemble::EncodedSet;

class UniformBase final : public BaseClassifier {
public:
    explicit UniformBase(std::size_t c) : c_(c) {}
    std::size_t num_classes() const override { return c_; }
    std::vector<double> predict_proba(const EncodedSet& data) const override {
        return std::vector<double>(data.size() * c_, 1.0 / static_cast<double>(c_));
    }

private:
    std::size_t c_;
};

// Reads the keyword planted by the synthetic generator: always right.
class OracleBase final : public BaseClassifier {
public:
    explicit OracleBase(const synthetic::Spec& s) : s_(s) {}
    std::size_t num_classes() const override { return s_.classes; }
    std::vector<double> predict_proba(const EncodedSet& data) const override {
        std::vector<double> out(data.size() * s_.classes, 0.0);
        const auto first_filler = static_cast<std::int32_t>(2 + s_.classes * s_.keywords_per_class);
        for (std::size_t i = 0; i < data.size(); ++i) {
            for (std::int32_t id : data.row(i)) {
                if (id >= 2 && id < first_filler) {
                    out[i * s_.classes + static_cast<std::size_t>(id - 2) / s_.keywords_per_class] = 1.0;
                }
            }
        }
        return out;
    }

private:
    synthetic::Spec s_;
};

// Deterministic pseudo-random simplex rows derived from the row contents.
class NoiseBase final : public BaseClassifier {
public:
    NoiseBase(std::size_t c, std::uint64_t salt) : c_(c), salt_(salt) {}
    std::size_t num_classes() const override { return c_; }
    std::vector<double> predict_proba(const EncodedSet& data) const override {
        std::vector<double> out(data.size() * c_);
        for (std::size_t i = 0; i < data.size(); ++i) {
            std::uint64_t h = salt_;
            for (std::int32_t id : data.row(i)) h = h * 1000003u + static_cast<std::uint64_t>(id);
            Rng rng(h);
            double total = 0.0;
            for (std::size_t c = 0; c < c_; ++c) total += out[i * c_ + c] = 0.05 + rng.uniform01();
            for (std::size_t c = 0; c < c_; ++c) out[i * c_ + c] /= total;
        }
        return out;
    }

private:
    std::size_t c_;
    std::uint64_t salt_;
};

// Remembers the ids of its training rows; predicts [1,0] for a seen row.
class MemoryBase final : public BaseClassifier {
public:
    explicit MemoryBase(const EncodedSet& train) {
        for (std::size_t i = 0; i < train.size(); ++i) seen_.insert(train.row(i)[0]);
    }
    std::size_t num_classes() const override { return 2; }
    std::vector<double> predict_proba(const EncodedSet& data) const override {
        std::vector<double> out;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const bool seen = seen_.count(data.row(i)[0]) != 0;
            out.push_back(seen ? 1.0 : 0.0);
            out.push_back(seen ? 0.0 : 1.0);
        }
        return out;
    }

private:
    std::set<std::int32_t> seen_;
};

}  // namespace stub_bases
