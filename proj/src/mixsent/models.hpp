#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mixsent/dataio.hpp"
#include "mixsent/metrics.hpp"
#include "mixsent/nn.hpp"

namespace mixsent::models {

enum class Kind { cnn, lstm, attention };
enum class Head { softmax, sigmoid };

std::string to_string(Kind kind);
std::string to_string(Head head);
Kind parse_kind(const std::string& text);
Head parse_head(const std::string& text);

struct ModelConfig {
    Kind kind = Kind::lstm;
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 100;
    std::size_t max_len = 25;
    std::size_t num_classes = 2;
    Head output = Head::softmax;

    // cnn
    std::vector<std::size_t> filter_widths{3, 4, 5};
    std::size_t filters_per_width = 128;
    // lstm units or gru units
    std::size_t units = 256;
    std::size_t attention_dim = 256;

    std::vector<std::size_t> dense{256, 128, 64, 32};
    double dropout = 0.3;
    bool batch_norm = true;
    bool freeze_pad = true;

    // Defaults for one architecture; sizes left as above.
    static ModelConfig defaults(Kind kind);

    void validate() const;
};

// Flat key/value form used by model files and run configs. Keys: kind,
// vocab_size, embed_dim, max_len, num_classes, output, filter_widths,
// filters, units, attention_dim, dense, dropout, batch_norm, freeze_pad.
using KeyValues = std::map<std::string, std::string>;
KeyValues to_key_values(const ModelConfig& config);
// `kind` selects the defaults the other keys override; unknown keys fail.
ModelConfig model_config_from(const KeyValues& values);

class Model {
public:
    Model(ModelConfig config, std::uint64_t seed);
    // Tensors are shared handles, so copies would alias parameters.
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
    Model(Model&&) = default;
    Model& operator=(Model&&) = default;

    const ModelConfig& config() const { return config_; }
    std::size_t output_units() const;

    // Probabilities (B x C), or (B x 1) for a sigmoid head.
    ag::Tensor forward(std::span<const std::int32_t> indices, std::size_t batch, const nn::Context& ctx);

    // Eval-mode probabilities, row-major (B x C); sigmoid outputs are
    // expanded to [1-p, p].
    std::vector<double> predict_proba(std::span<const std::int32_t> indices, std::size_t batch) const;

    // All named tensors including batch-norm running statistics.
    nn::TensorList parameters() const;
    std::vector<ag::Tensor> trainable() const;
    std::size_t trainable_count() const;

    // Rows of the embedding table for every vocabulary entry except PAD.
    void set_embeddings(const data::EmbeddingTable& table);

    // Groups of parameters named "<prefix>.*" for each layer; used by tests.
    std::vector<std::string> layer_prefixes() const;

private:
    ModelConfig config_;
    nn::Embedding embedding_;
    std::vector<nn::Conv1d> convs_;
    nn::Lstm lstm_;
    nn::Gru gru_;
    nn::AdditiveAttention attention_;
    std::vector<nn::DenseBlock> blocks_;
    nn::Dense head_;
};

Model build_model(const ModelConfig& config, std::uint64_t seed = 0);

// Index matrix (size x max_len) plus class labels.
struct EncodedSet {
    std::size_t max_len = 0;
    std::vector<std::int32_t> indices;
    std::vector<std::size_t> labels;

    std::size_t size() const { return max_len == 0 ? 0 : indices.size() / max_len; }
    std::span<const std::int32_t> row(std::size_t i) const { return {indices.data() + i * max_len, max_len}; }
};

EncodedSet encode_dataset(const data::LabeledDataset& dataset, const data::Tokenizer& tokens_of,
                          const data::Vocabulary& vocab, std::size_t max_len, bool with_labels = true);

struct TrainConfig {
    std::size_t epochs = 20;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    nn::FocalLossConfig loss;  // empty class_weights: inverse frequency of the training labels
    std::size_t patience = 5;  // 0 disables early stopping
    nn::AdamConfig adam;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    metrics::Scores validation;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
    bool merged_tail = false;  // a final batch of one was folded into the previous batch
    std::vector<double> class_weights;
    double wall_seconds = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Keeps the parameters of the epoch with the best validation macro-F1.
TrainReport train_model(Model& model, const EncodedSet& train, const EncodedSet& val, const TrainConfig& config,
                        const EpochCallback& on_epoch = {});

std::vector<double> predict_proba(const Model& model, const EncodedSet& set);
// Ties go to the lowest class index.
std::vector<std::size_t> argmax_rows(std::span<const double> probs, std::size_t num_classes);

// A trained model with everything needed to apply it to raw text.
struct ModelBundle {
    Model model;
    std::vector<std::string> labels;
    data::Vocabulary vocab;
};

inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const ModelBundle& bundle);
void write_model(std::ostream& out, const Model& model, const std::vector<std::string>& labels,
                 const data::Vocabulary& vocab);
ModelBundle read_model(std::istream& in, const std::string& source = "<stream>");
void save_model(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_model(const std::filesystem::path& path);

}  // namespace mixsent::models
