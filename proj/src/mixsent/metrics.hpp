#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace mixsent::metrics {

// counts[g * C + p] = examples with gold class g predicted as p.
struct ConfusionMatrix {
    std::size_t num_classes = 0;
    std::vector<std::size_t> counts;
    std::vector<std::string> class_names;

    std::size_t at(std::size_t gold, std::size_t pred) const { return counts[gold * num_classes + pred]; }
    std::size_t total() const;
};

ConfusionMatrix confusion(std::span<const std::size_t> gold, std::span<const std::size_t> pred, std::size_t num_classes,
                          std::vector<std::string> class_names = {});

struct ClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct Scores {
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    std::vector<ClassScores> per_class;
};

// Zero denominators score 0; every class counts toward the macro mean.
Scores macro_scores(const ConfusionMatrix& cm);

// Flat key=value lines: macro_f1, macro_precision, macro_recall, accuracy,
// then per_class.<name>.{precision,recall,f1,support}.
std::string format_key_value(const Scores& scores, std::span<const std::string> class_names);
std::string format_json(const Scores& scores, std::span<const std::string> class_names);

}  // namespace mixsent::metrics
