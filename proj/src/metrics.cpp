#include "mixsent/metrics.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "mixsent/error.hpp"

namespace mixsent::metrics {

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

ConfusionMatrix confusion(std::span<const std::size_t> gold, std::span<const std::size_t> pred, std::size_t num_classes,
                          std::vector<std::string> class_names) {
    if (gold.size() != pred.size()) {
        fail(ErrorCode::invalid_argument, "confusion: " + std::to_string(gold.size()) + " gold labels but " +
                                              std::to_string(pred.size()) + " predictions");
    }
    if (!class_names.empty() && class_names.size() != num_classes) {
        fail(ErrorCode::invalid_argument, "confusion: class name count does not match number of classes");
    }
    ConfusionMatrix cm{num_classes, std::vector<std::size_t>(num_classes * num_classes, 0), std::move(class_names)};
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] >= num_classes || pred[i] >= num_classes) {
            fail(ErrorCode::invalid_argument, "confusion: label index out of range at position " + std::to_string(i));
        }
        ++cm.counts[gold[i] * num_classes + pred[i]];
    }
    return cm;
}

Scores macro_scores(const ConfusionMatrix& cm) {
    const std::size_t total = cm.total();
    if (total == 0) fail(ErrorCode::invalid_argument, "macro_scores: empty confusion matrix");
    const std::size_t c = cm.num_classes;
    Scores s;
    s.per_class.resize(c);
    std::size_t correct = 0;
    for (std::size_t k = 0; k < c; ++k) {
        std::size_t predicted = 0, actual = 0;
        for (std::size_t j = 0; j < c; ++j) {
            predicted += cm.at(j, k);
            actual += cm.at(k, j);
        }
        const std::size_t tp = cm.at(k, k);
        correct += tp;
        ClassScores& cs = s.per_class[k];
        cs.support = actual;
        cs.precision = predicted ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
        cs.recall = actual ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
        cs.f1 = (cs.precision + cs.recall) > 0.0 ? 2.0 * cs.precision * cs.recall / (cs.precision + cs.recall) : 0.0;
        s.macro_precision += cs.precision;
        s.macro_recall += cs.recall;
        s.macro_f1 += cs.f1;
    }
    const double n = static_cast<double>(c);
    s.macro_precision /= n;
    s.macro_recall /= n;
    s.macro_f1 /= n;
    s.accuracy = static_cast<double>(correct) / static_cast<double>(total);
    return s;
}

namespace {

std::string name_of(std::span<const std::string> names, std::size_t k) {
    return k < names.size() ? names[k] : std::to_string(k);
}

}  // namespace

std::string format_key_value(const Scores& scores, std::span<const std::string> class_names) {
    std::ostringstream out;
    out << std::setprecision(6) << std::fixed;
    out << "macro_f1=" << scores.macro_f1 << '\n';
    out << "macro_precision=" << scores.macro_precision << '\n';
    out << "macro_recall=" << scores.macro_recall << '\n';
    out << "accuracy=" << scores.accuracy << '\n';
    for (std::size_t k = 0; k < scores.per_class.size(); ++k) {
        const std::string prefix = "per_class." + name_of(class_names, k) + '.';
        const ClassScores& cs = scores.per_class[k];
        out << prefix << "precision=" << cs.precision << '\n';
        out << prefix << "recall=" << cs.recall << '\n';
        out << prefix << "f1=" << cs.f1 << '\n';
        out << prefix << "support=" << cs.support << '\n';
    }
    return out.str();
}

std::string format_json(const Scores& scores, std::span<const std::string> class_names) {
    nlohmann::ordered_json j;
    j["macro_f1"] = scores.macro_f1;
    j["macro_precision"] = scores.macro_precision;
    j["macro_recall"] = scores.macro_recall;
    j["accuracy"] = scores.accuracy;
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (std::size_t k = 0; k < scores.per_class.size(); ++k) {
        const ClassScores& cs = scores.per_class[k];
        per[name_of(class_names, k)] = {
            {"precision", cs.precision}, {"recall", cs.recall}, {"f1", cs.f1}, {"support", cs.support}};
    }
    j["per_class"] = std::move(per);
    return j.dump(2) + '\n';
}

}  // namespace mixsent::metrics
