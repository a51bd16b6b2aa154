#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixsent/models.hpp"

namespace mixsent::ensemble {

using models::EncodedSet;

class BaseClassifier {
public:
    virtual ~BaseClassifier() = default;
    virtual std::size_t num_classes() const = 0;
    // Row-major (N x C) probabilities.
    virtual std::vector<double> predict_proba(const EncodedSet& data) const = 0;
};

class ModelClassifier final : public BaseClassifier {
public:
    explicit ModelClassifier(models::Model model) : model_(std::move(model)) {}

    std::size_t num_classes() const override { return model_.config().num_classes; }
    std::vector<double> predict_proba(const EncodedSet& data) const override {
        return models::predict_proba(model_, data);
    }
    const models::Model& model() const { return model_; }

private:
    models::Model model_;
};

using BasePtr = std::shared_ptr<const BaseClassifier>;

struct BaseSpec {
    models::ModelConfig model;
    models::TrainConfig train;
    std::shared_ptr<const data::EmbeddingTable> embeddings;  // optional pretrained rows
};

struct BaseFit {
    std::shared_ptr<const ModelClassifier> classifier;
    models::TrainReport report;
};

// Base t is initialized and trained with seed + t. Up to `jobs` bases train
// concurrently; results do not depend on jobs.
std::vector<BaseFit> fit_base(const EncodedSet& train, const EncodedSet& val, std::span<const BaseSpec> specs,
                              std::uint64_t seed, std::size_t jobs = 1);

inline constexpr std::size_t kInSample = std::numeric_limits<std::size_t>::max();

struct MetaDataset {
    std::size_t num_bases = 0;
    std::size_t num_classes = 0;
    std::vector<double> features;  // rows of num_bases * num_classes
    std::vector<std::size_t> labels;
    // Fold whose held-out models produced each row; kInSample otherwise.
    std::vector<std::size_t> fold;

    std::size_t feature_length() const { return num_bases * num_classes; }
    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const { return {features.data() + i * feature_length(), feature_length()}; }
};

// Concatenated base probabilities for every row of data.
std::vector<double> stack_features(std::span<const BasePtr> bases, const EncodedSet& data);

// The literal algorithm: bases predict the data they were trained on.
MetaDataset construct_meta_dataset(std::span<const BasePtr> bases, const EncodedSet& data);

// Row positions of each fold after a seeded shuffle; fold sizes differ by at most one.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

EncodedSet subset(const EncodedSet& data, std::span<const std::size_t> rows);

// Trains the bases for one fold on the given rows of the data.
using FoldTrainer = std::function<std::vector<BasePtr>(const EncodedSet& train, std::size_t fold)>;

// Every row's features come from bases trained without that row.
MetaDataset construct_meta_dataset_kfold(const EncodedSet& data, std::size_t folds, std::uint64_t seed,
                                         const FoldTrainer& trainer);

struct MetaConfig {
    std::size_t max_steps = 2000;
    double lr = 0.05;
    double grad_tolerance = 1e-6;
    std::uint64_t seed = 0;
};

// Multinomial logistic regression over stacked probabilities.
class MetaClassifier {
public:
    MetaClassifier() = default;
    MetaClassifier(std::size_t input_dim, std::size_t num_classes);

    // Sums the class-c entries of every block into logit c.
    static MetaClassifier block_identity(std::size_t num_bases, std::size_t num_classes);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t num_classes() const { return num_classes_; }

    std::vector<double> logits(std::span<const double> features) const;
    std::vector<double> predict_proba(std::span<const double> features) const;

    std::vector<double> weight;  // (input_dim x num_classes)
    std::vector<double> bias;    // (num_classes)
    std::size_t steps = 0;       // optimizer steps taken by fit_meta

private:
    std::size_t input_dim_ = 0;
    std::size_t num_classes_ = 0;
};

// Full-batch Adam on mean cross-entropy until max_steps or the gradient
// norm falls below the tolerance.
MetaClassifier fit_meta(const MetaDataset& meta, const MetaConfig& config);

enum class StackMode { insample, kfold };
std::string to_string(StackMode mode);
StackMode parse_stack_mode(const std::string& text);

struct Prediction {
    std::vector<std::size_t> labels;
    std::vector<double> probabilities;  // (N x C)
};

// Label is the argmax; ties go to the lowest class index.
Prediction predict_from_logits(std::span<const double> logits, std::size_t num_classes);

struct StackingEnsemble {
    std::vector<BasePtr> bases;
    MetaClassifier meta;
    StackMode mode = StackMode::insample;
    std::size_t folds = 0;

    std::size_t num_classes() const { return meta.num_classes(); }
    Prediction predict(const EncodedSet& data) const;
};

struct StackingConfig {
    StackMode mode = StackMode::insample;
    std::size_t folds = 5;
    MetaConfig meta;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
};

struct StackingResult {
    StackingEnsemble ensemble;
    std::vector<models::TrainReport> base_reports;
    MetaDataset meta_data;
};

StackingResult fit_stacking(const EncodedSet& train, const EncodedSet& val, std::span<const BaseSpec> specs,
                            const StackingConfig& config);

// Ensemble file: magic MXE1, version, mode, folds, then each base as a
// length-prefixed model file image, then the meta weights.
struct EnsembleBundle {
    StackingEnsemble ensemble;
    std::vector<std::string> labels;
    data::Vocabulary vocab;
};

inline constexpr std::uint32_t kEnsembleFormatVersion = 1;

void write_ensemble(std::ostream& out, const EnsembleBundle& bundle);
EnsembleBundle read_ensemble(std::istream& in, const std::string& source = "<stream>");
void save_ensemble(const std::filesystem::path& path, const EnsembleBundle& bundle);
EnsembleBundle load_ensemble(const std::filesystem::path& path);

}  // namespace mixsent::ensemble
