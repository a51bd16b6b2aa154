#pragma once

// Run configuration files and the end-to-end commands behind the CLI.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mixsent/dataio.hpp"
#include "mixsent/ensemble.hpp"
#include "mixsent/models.hpp"
#include "mixsent/textprep.hpp"

namespace mixsent::app {

// Flat `key=value` settings. Sections: seed, pipeline.*, resources.*,
// data.*, train.*, model.* or model<N>.*, ensemble.*. Relative resource
// paths resolve against the directory of the config file.
struct RunConfig {
    std::uint64_t seed = 0;
    text::PipelineConfig pipeline;
    data::LoadOptions load;
    std::size_t min_count = 1;
    double train_fraction = 0.9;
    models::TrainConfig train;
    std::optional<std::filesystem::path> embeddings;
    // One key/value map per model section, in section order.
    std::vector<models::KeyValues> model_sections;
    ensemble::StackMode stack_mode = ensemble::StackMode::insample;
    std::size_t folds = 5;
    ensemble::MetaConfig meta;
};

RunConfig read_run_config(std::istream& in, const std::filesystem::path& base_dir,
                          const std::string& source = "<stream>");
RunConfig load_run_config(const std::filesystem::path& path);

using Logger = std::function<void(const std::string&)>;

struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;  // overrides the config
    std::size_t jobs = 1;
    std::optional<std::filesystem::path> validation;  // skips the internal split
    Logger log;
};

// Report files derive from an output path with fixed suffixes.
std::filesystem::path text_report_path(const std::filesystem::path& out);
std::filesystem::path json_report_path(const std::filesystem::path& out);

void preprocess(const std::filesystem::path& input, const std::filesystem::path& output,
                const CommandOptions& options);

void train(const std::filesystem::path& train_path, const std::filesystem::path& model_out,
           const CommandOptions& options);

void fit_ensemble(const std::filesystem::path& train_path, const std::filesystem::path& ensemble_out,
                  const CommandOptions& options);

// Returns the human-readable report, also written next to `report_out`
// (defaults to the model path plus ".eval").
std::string evaluate(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
                     const std::optional<std::filesystem::path>& report_out, const CommandOptions& options);

// Output lines: id<TAB>label<TAB>comma-separated probabilities.
void predict(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
             const std::filesystem::path& output, const CommandOptions& options);

// A loaded model or ensemble plus the text pipeline that feeds it. Without
// a config the input is taken as already preprocessed and only tokenized.
class Predictor {
public:
    static Predictor load(const std::filesystem::path& model_path,
                          const std::optional<std::filesystem::path>& config = std::nullopt);

    const std::vector<std::string>& labels() const { return labels_; }
    bool is_ensemble() const { return static_cast<bool>(ensemble_); }
    text::TokenList tokens(std::string_view text) const { return pipeline_->run(text); }

    ensemble::Prediction predict(const data::LabeledDataset& dataset) const;
    ensemble::Prediction predict_texts(const std::vector<std::string>& texts) const;

private:
    Predictor() = default;

    std::shared_ptr<const text::Pipeline> pipeline_;
    std::vector<std::string> labels_;
    data::Vocabulary vocab_;
    std::size_t max_len_ = 0;
    std::shared_ptr<const models::Model> model_;
    std::shared_ptr<const ensemble::StackingEnsemble> ensemble_;
};

}  // namespace mixsent::app
