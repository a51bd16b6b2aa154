#include "mixsent/app.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

#include "mixsent/error.hpp"
#include "mixsent/kv.hpp"
#include "mixsent/metrics.hpp"
#include "mixsent/unicode.hpp"

namespace mixsent::app {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

spell::Strategy parse_strategy(const std::string& key, const std::string& value) {
    if (value == "nearest_first") return spell::Strategy::nearest_first;
    if (value == "max_frequency") return spell::Strategy::max_frequency;
    fail(ErrorCode::config, "'" + key + "': expected nearest_first or max_frequency, got '" + value + "'");
}

fs::path existing_resource(const fs::path& base_dir, const std::string& key, const std::string& value) {
    if (value.empty()) fail(ErrorCode::config, "'" + key + "': empty path");
    fs::path p(value);
    if (p.is_relative()) p = base_dir / p;
    if (!fs::is_regular_file(p)) fail(ErrorCode::io, "'" + key + "': resource file not found: " + p.string());
    return p;
}

// "model.kind" -> (0, "kind"); "model2.kind" -> (2, "kind").
bool model_key(const std::string& key, std::size_t& section, std::string& field) {
    if (key.rfind("model", 0) != 0) return false;
    const auto dot = key.find('.');
    if (dot == std::string::npos) return false;
    const std::string digits = key.substr(5, dot - 5);
    if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
    if (!digits.empty() && (digits[0] == '0' || digits.size() > 4)) return false;
    section = digits.empty() ? 0 : std::stoul(digits);
    field = key.substr(dot + 1);
    return !field.empty();
}

void note(const CommandOptions& options, const std::string& message) {
    if (options.log) options.log(message);
}

RunConfig resolve_config(const CommandOptions& options, bool required, const char* command) {
    RunConfig cfg;
    if (options.config) {
        cfg = load_run_config(*options.config);
    } else if (required) {
        fail(ErrorCode::config, std::string(command) + " requires --config");
    }
    if (options.seed) cfg.seed = *options.seed;
    return cfg;
}

std::string join_tokens(const text::TokenList& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

data::LabeledDataset normalized(data::LabeledDataset ds, const text::Pipeline& pipeline) {
    for (auto& ex : ds.examples) ex.text = join_tokens(pipeline.run(ex.text));
    return ds;
}

std::vector<std::size_t> gold_indices(const data::LabeledDataset& ds, const std::vector<std::string>& labels,
                                      const std::string& what) {
    std::vector<std::size_t> out;
    out.reserve(ds.size());
    for (const auto& ex : ds.examples) {
        if (!ex.label) fail(ErrorCode::invalid_argument, what + ": example '" + ex.id + "' has no label");
        const auto it = std::find(labels.begin(), labels.end(), *ex.label);
        if (it == labels.end()) {
            std::string known;
            for (const auto& l : labels) known += (known.empty() ? "" : ", ") + l;
            fail(ErrorCode::invalid_argument,
                 what + ": label '" + *ex.label + "' is not one of the model's classes (" + known + ")");
        }
        out.push_back(static_cast<std::size_t>(it - labels.begin()));
    }
    return out;
}

// Training and validation examples, normalized, sharing one label set.
struct Corpus {
    data::LabeledDataset train;
    data::LabeledDataset val;
    std::vector<std::string> labels;
    data::Vocabulary vocab;
};

Corpus prepare_corpus(const fs::path& train_path, const RunConfig& cfg, const CommandOptions& options) {
    data::LabeledDataset all = data::load_tsv(train_path, cfg.load);
    if (all.empty()) fail(ErrorCode::invalid_argument, train_path.string() + ": no training examples");
    gold_indices(all, all.label_set, train_path.string());
    Corpus c;
    c.labels = all.label_set;
    if (c.labels.size() < 2) fail(ErrorCode::invalid_argument, train_path.string() + ": need at least two classes");
    if (options.validation) {
        c.train = std::move(all);
        c.val = data::load_tsv(*options.validation, cfg.load);
        gold_indices(c.val, c.labels, options.validation->string());
        c.val.label_set = c.labels;
    } else {
        auto parts = data::split(all, cfg.train_fraction, cfg.seed);
        c.train = std::move(parts.first);
        c.val = std::move(parts.second);
    }
    if (c.train.empty() || c.val.empty()) {
        fail(ErrorCode::invalid_argument, "the train/validation split left an empty side (" +
                                              std::to_string(c.train.size()) + "/" + std::to_string(c.val.size()) +
                                              " examples)");
    }
    const text::Pipeline pipeline(cfg.pipeline);
    c.train = normalized(std::move(c.train), pipeline);
    c.val = normalized(std::move(c.val), pipeline);
    c.vocab = data::build_vocabulary(c.train, [](const std::string& s) { return text::tokenize(s); }, cfg.min_count);
    return c;
}

models::EncodedSet encode(const data::LabeledDataset& ds, const data::Vocabulary& vocab, std::size_t max_len,
                          bool with_labels) {
    return models::encode_dataset(ds, [](const std::string& s) { return text::tokenize(s); }, vocab, max_len,
                                  with_labels);
}

models::ModelConfig section_config(const models::KeyValues& section, const Corpus& corpus) {
    models::KeyValues kv = section;
    kv["vocab_size"] = std::to_string(corpus.vocab.size());
    kv["num_classes"] = std::to_string(corpus.labels.size());
    models::ModelConfig mc = models::model_config_from(kv);
    mc.validate();
    return mc;
}

std::shared_ptr<const data::EmbeddingTable> embeddings_for(const RunConfig& cfg, const Corpus& corpus,
                                                           std::size_t dim) {
    if (!cfg.embeddings) return nullptr;
    return std::make_shared<const data::EmbeddingTable>(
        data::load_embeddings(*cfg.embeddings, corpus.vocab, dim, cfg.seed));
}

metrics::Scores score(std::span<const std::size_t> gold, std::span<const std::size_t> pred,
                      const std::vector<std::string>& labels) {
    return metrics::macro_scores(metrics::confusion(gold, pred, labels.size(), labels));
}

std::string prefixed(const std::string& block, const std::string& prefix) {
    std::istringstream in(block);
    std::string out, line;
    while (std::getline(in, line)) out += prefix + line + '\n';
    return out;
}

std::string fixed6(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
}

std::string join_labels(const std::vector<std::string>& labels) {
    std::string out;
    for (const auto& l : labels) out += (out.empty() ? "" : ",") + l;
    return out;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    out << content;
    out.close();
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

json epoch_json(const models::EpochRecord& e) {
    return {{"epoch", e.epoch},
            {"train_loss", e.train_loss},
            {"train_accuracy", e.train_accuracy},
            {"validation_macro_f1", e.validation.macro_f1},
            {"validation_accuracy", e.validation.accuracy}};
}

std::string epoch_table(const models::TrainReport& report) {
    std::ostringstream out;
    out << "epoch  train_loss  train_accuracy  validation_macro_f1  validation_accuracy\n";
    for (const auto& e : report.epochs) {
        out << std::setw(5) << e.epoch << "  " << fixed6(e.train_loss) << "  " << std::setw(14)
            << fixed6(e.train_accuracy) << "  " << std::setw(19) << fixed6(e.validation.macro_f1) << "  "
            << std::setw(19) << fixed6(e.validation.accuracy) << '\n';
    }
    return out.str();
}

double accuracy_of(std::span<const std::size_t> gold, std::span<const std::size_t> pred) {
    if (gold.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hit += gold[i] == pred[i];
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

}  // namespace

RunConfig read_run_config(std::istream& in, const fs::path& base_dir, const std::string& source) {
    RunConfig cfg;
    std::map<std::string, std::size_t> seen;
    std::map<std::size_t, models::KeyValues> sections;
    std::map<std::string, fs::path> resources;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        const std::string trimmed = kv::trim(line);
        if (trimmed.empty() || trimmed[0] == '#') continue;
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) fail(ErrorCode::config, where + ": expected key=value");
        const std::string key = kv::trim(trimmed.substr(0, eq));
        const std::string value = kv::trim(trimmed.substr(eq + 1));
        if (!seen.emplace(key, line_no).second) {
            fail(ErrorCode::config, where + ": duplicate key '" + key + "' (first set on line " +
                                        std::to_string(seen[key]) + ")");
        }
        try {
            std::size_t section = 0;
            std::string field;
            if (key == "seed") {
                cfg.seed = kv::parse_uint(key, value);
            } else if (key == "pipeline.steps") {
                cfg.pipeline.steps = kv::split_list(value);
            } else if (key == "pipeline.max_repeat") {
                cfg.pipeline.max_repeat = kv::parse_uint(key, value);
            } else if (key == "pipeline.stemmer") {
                cfg.pipeline.stemmer = value;
            } else if (key == "pipeline.keep_unknown_emoji") {
                cfg.pipeline.keep_unknown_emoji = kv::parse_bool(key, value);
            } else if (key == "pipeline.spell_strategy") {
                cfg.pipeline.spell_strategy = parse_strategy(key, value);
            } else if (key == "pipeline.alphabet") {
                cfg.pipeline.alphabet = unicode::decode(value);
            } else if (key == "resources.emoji" || key == "resources.contractions" || key == "resources.acronyms" ||
                       key == "resources.stopwords" || key == "resources.lexicon") {
                resources[key.substr(10)] = existing_resource(base_dir, key, value);
            } else if (key == "resources.embeddings") {
                cfg.embeddings = existing_resource(base_dir, key, value);
            } else if (key == "data.has_header") {
                cfg.load.has_header = kv::parse_bool(key, value);
            } else if (key == "data.skip_empty") {
                cfg.load.skip_empty = kv::parse_bool(key, value);
            } else if (key == "data.min_count") {
                cfg.min_count = kv::parse_uint(key, value);
                if (cfg.min_count == 0) fail(ErrorCode::config, "'data.min_count' must be at least 1");
            } else if (key == "data.train_fraction") {
                cfg.train_fraction = kv::parse_double(key, value);
                if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
                    fail(ErrorCode::config, "'data.train_fraction' must lie strictly between 0 and 1");
                }
            } else if (key == "train.epochs") {
                cfg.train.epochs = kv::parse_uint(key, value);
            } else if (key == "train.batch_size") {
                cfg.train.batch_size = kv::parse_uint(key, value);
            } else if (key == "train.patience") {
                cfg.train.patience = kv::parse_uint(key, value);
            } else if (key == "train.lr") {
                cfg.train.adam.lr = kv::parse_double(key, value);
            } else if (key == "train.beta1") {
                cfg.train.adam.beta1 = kv::parse_double(key, value);
            } else if (key == "train.beta2") {
                cfg.train.adam.beta2 = kv::parse_double(key, value);
            } else if (key == "train.epsilon") {
                cfg.train.adam.epsilon = kv::parse_double(key, value);
            } else if (key == "train.gamma") {
                cfg.train.loss.gamma = kv::parse_double(key, value);
            } else if (key == "train.class_weights") {
                cfg.train.loss.class_weights =
                    value == "inverse" ? std::vector<double>{} : kv::parse_double_list(key, value);
            } else if (key == "ensemble.mode") {
                cfg.stack_mode = ensemble::parse_stack_mode(value);
            } else if (key == "ensemble.folds") {
                cfg.folds = kv::parse_uint(key, value);
                if (cfg.folds < 2) fail(ErrorCode::config, "'ensemble.folds' must be at least 2");
            } else if (key == "ensemble.meta_steps") {
                cfg.meta.max_steps = kv::parse_uint(key, value);
            } else if (key == "ensemble.meta_lr") {
                cfg.meta.lr = kv::parse_double(key, value);
            } else if (key == "ensemble.meta_tolerance") {
                cfg.meta.grad_tolerance = kv::parse_double(key, value);
            } else if (model_key(key, section, field)) {
                if (field == "vocab_size" || field == "num_classes") {
                    fail(ErrorCode::config, "'" + key + "' is derived from the data and cannot be set");
                }
                sections[section][field] = value;
            } else {
                fail(ErrorCode::config, "unknown key '" + key + "'");
            }
        } catch (const Error& e) {
            fail(e.code(), where + ": " + e.what());
        }
    }

    if (sections.count(0) != 0 && sections.size() > 1) {
        fail(ErrorCode::config, source + ": use either model.* or numbered model<N>.* sections, not both");
    }
    std::size_t expected = sections.count(0) != 0 ? 0 : 1;
    for (auto& [index, values] : sections) {
        const std::string name = index == 0 ? "model" : "model" + std::to_string(index);
        if (index != expected) fail(ErrorCode::config, source + ": model sections must be numbered 1, 2, ... without gaps");
        ++expected;
        try {
            models::model_config_from(values);
        } catch (const Error& e) {
            fail(e.code(), source + ": section '" + name + "': " + e.what());
        }
        cfg.model_sections.push_back(std::move(values));
    }
    cfg.train.validate();

    auto& p = cfg.pipeline;
    if (resources.count("emoji")) p.emoji = std::make_shared<text::ResourceTable>(text::load_table(resources["emoji"], "emoji", false));
    if (resources.count("contractions")) {
        p.contractions = std::make_shared<text::ResourceTable>(
            text::load_table(resources["contractions"], "contractions", true));
    }
    if (resources.count("acronyms")) {
        p.acronyms = std::make_shared<text::ResourceTable>(text::load_table(resources["acronyms"], "acronyms", true));
    }
    if (resources.count("stopwords")) {
        p.stopwords = std::make_shared<text::StopList>(text::load_stoplist(resources["stopwords"]));
    }
    if (resources.count("lexicon")) p.lexicon = std::make_shared<spell::FrequencyLexicon>(spell::load_lexicon(resources["lexicon"]));
    try {
        text::Pipeline check(p);
    } catch (const Error& e) {
        fail(e.code(), source + ": " + e.what());
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open config " + path.string());
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return read_run_config(in, dir, path.string());
}

fs::path text_report_path(const fs::path& out) { return fs::path(out.string() + ".report.txt"); }
fs::path json_report_path(const fs::path& out) { return fs::path(out.string() + ".report.json"); }

void preprocess(const fs::path& input, const fs::path& output, const CommandOptions& options) {
    const RunConfig cfg = resolve_config(options, false, "preprocess");
    const text::Pipeline pipeline(cfg.pipeline);
    const data::LabeledDataset ds = normalized(data::load_tsv(input, cfg.load), pipeline);
    data::save_tsv(output, ds);
    note(options, "preprocessed " + std::to_string(ds.size()) + " examples");
}

void train(const fs::path& train_path, const fs::path& model_out, const CommandOptions& options) {
    const RunConfig cfg = resolve_config(options, true, "train");
    if (cfg.model_sections.size() != 1) {
        fail(ErrorCode::config, "train needs exactly one model section, found " +
                                    std::to_string(cfg.model_sections.size()));
    }
    const Corpus corpus = prepare_corpus(train_path, cfg, options);
    const models::ModelConfig mc = section_config(cfg.model_sections[0], corpus);
    const auto train_set = encode(corpus.train, corpus.vocab, mc.max_len, true);
    const auto val_set = encode(corpus.val, corpus.vocab, mc.max_len, true);

    models::Model model(mc, cfg.seed);
    if (const auto table = embeddings_for(cfg, corpus, mc.embed_dim)) model.set_embeddings(*table);
    models::TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    note(options, "training " + models::to_string(mc.kind) + " on " + std::to_string(train_set.size()) +
                      " examples, validating on " + std::to_string(val_set.size()));
    const models::TrainReport report = models::train_model(model, train_set, val_set, tc, [&](const auto& e) {
        note(options, "epoch " + std::to_string(e.epoch) + " loss " + fixed6(e.train_loss) + " train_acc " +
                          fixed6(e.train_accuracy) + " val_macro_f1 " + fixed6(e.validation.macro_f1));
    });

    const auto train_pred = models::argmax_rows(models::predict_proba(model, train_set), mc.num_classes);
    const auto val_pred = models::argmax_rows(models::predict_proba(model, val_set), mc.num_classes);
    const double train_accuracy = accuracy_of(train_set.labels, train_pred);
    const metrics::Scores val_scores = score(val_set.labels, val_pred, corpus.labels);
    const std::size_t parameters = model.trainable_count();

    models::save_model(model_out, models::ModelBundle{std::move(model), corpus.labels, corpus.vocab});

    std::ostringstream txt;
    txt << "command=train\n"
        << "kind=" << models::to_string(mc.kind) << '\n'
        << "seed=" << cfg.seed << '\n'
        << "labels=" << join_labels(corpus.labels) << '\n'
        << "train_examples=" << train_set.size() << '\n'
        << "validation_examples=" << val_set.size() << '\n'
        << "vocab_size=" << corpus.vocab.size() << '\n'
        << "trainable_parameters=" << parameters << '\n'
        << "class_weights=" << kv::format_list(report.class_weights) << '\n'
        << "epochs_run=" << report.epochs.size() << '\n'
        << "best_epoch=" << report.best_epoch << '\n'
        << "stopped_early=" << (report.stopped_early ? "true" : "false") << '\n'
        << "merged_tail=" << (report.merged_tail ? "true" : "false") << '\n'
        << "train_accuracy=" << fixed6(train_accuracy) << '\n'
        << prefixed(metrics::format_key_value(val_scores, corpus.labels), "validation.") << '\n'
        << epoch_table(report);
    write_text(text_report_path(model_out), txt.str());

    json j;
    j["command"] = "train";
    j["kind"] = models::to_string(mc.kind);
    j["seed"] = cfg.seed;
    j["labels"] = corpus.labels;
    j["train_examples"] = train_set.size();
    j["validation_examples"] = val_set.size();
    j["vocab_size"] = corpus.vocab.size();
    j["trainable_parameters"] = parameters;
    j["class_weights"] = report.class_weights;
    j["epochs_run"] = report.epochs.size();
    j["best_epoch"] = report.best_epoch;
    j["stopped_early"] = report.stopped_early;
    j["merged_tail"] = report.merged_tail;
    j["train_accuracy"] = train_accuracy;
    j["validation"] = json::parse(metrics::format_json(val_scores, corpus.labels));
    j["epochs"] = json::array();
    for (const auto& e : report.epochs) j["epochs"].push_back(epoch_json(e));
    write_text(json_report_path(model_out), j.dump(2) + '\n');
    note(options, "best epoch " + std::to_string(report.best_epoch) + ", validation macro_f1 " +
                      fixed6(val_scores.macro_f1));
}

void fit_ensemble(const fs::path& train_path, const fs::path& ensemble_out, const CommandOptions& options) {
    const RunConfig cfg = resolve_config(options, true, "ensemble");
    if (cfg.model_sections.empty()) fail(ErrorCode::config, "ensemble needs at least one model section");
    const Corpus corpus = prepare_corpus(train_path, cfg, options);

    std::vector<ensemble::BaseSpec> specs;
    std::map<std::size_t, std::shared_ptr<const data::EmbeddingTable>> tables;
    for (const auto& section : cfg.model_sections) {
        ensemble::BaseSpec spec{section_config(section, corpus), cfg.train, nullptr};
        if (cfg.embeddings) {
            auto& table = tables[spec.model.embed_dim];
            if (!table) table = embeddings_for(cfg, corpus, spec.model.embed_dim);
            spec.embeddings = table;
        }
        if (!specs.empty() && spec.model.max_len != specs[0].model.max_len) {
            fail(ErrorCode::config, "all ensemble model sections must share max_len");
        }
        specs.push_back(std::move(spec));
    }
    const std::size_t max_len = specs[0].model.max_len;
    const auto train_set = encode(corpus.train, corpus.vocab, max_len, true);
    const auto val_set = encode(corpus.val, corpus.vocab, max_len, true);

    ensemble::StackingConfig sc;
    sc.mode = cfg.stack_mode;
    sc.folds = cfg.folds;
    sc.meta = cfg.meta;
    sc.seed = cfg.seed;
    sc.jobs = std::max<std::size_t>(1, options.jobs);
    note(options, "fitting " + std::to_string(specs.size()) + " base models (" + ensemble::to_string(sc.mode) +
                      " stacking) on " + std::to_string(train_set.size()) + " examples");
    ensemble::StackingResult result = ensemble::fit_stacking(train_set, val_set, specs, sc);

    struct Row {
        std::string name;
        metrics::Scores scores;
    };
    std::vector<Row> rows;
    for (std::size_t t = 0; t < result.ensemble.bases.size(); ++t) {
        const auto probs = result.ensemble.bases[t]->predict_proba(val_set);
        rows.push_back({"base" + std::to_string(t + 1) + ":" + models::to_string(specs[t].model.kind),
                        score(val_set.labels, models::argmax_rows(probs, corpus.labels.size()), corpus.labels)});
    }
    const auto prediction = result.ensemble.predict(val_set);
    rows.push_back({"ensemble", score(val_set.labels, prediction.labels, corpus.labels)});

    ensemble::save_ensemble(ensemble_out, ensemble::EnsembleBundle{result.ensemble, corpus.labels, corpus.vocab});

    std::ostringstream txt;
    txt << "command=ensemble\n"
        << "mode=" << ensemble::to_string(sc.mode) << '\n';
    if (sc.mode == ensemble::StackMode::kfold) txt << "folds=" << sc.folds << '\n';
    txt << "seed=" << cfg.seed << '\n'
        << "labels=" << join_labels(corpus.labels) << '\n'
        << "train_examples=" << train_set.size() << '\n'
        << "validation_examples=" << val_set.size() << '\n'
        << "vocab_size=" << corpus.vocab.size() << '\n'
        << "meta_feature_length=" << result.meta_data.feature_length() << '\n'
        << "meta_steps=" << result.ensemble.meta.steps << '\n';
    for (std::size_t t = 0; t < specs.size(); ++t) {
        const auto& r = result.base_reports[t];
        const std::string p = "base" + std::to_string(t + 1) + ".";
        txt << p << "kind=" << models::to_string(specs[t].model.kind) << '\n'
            << p << "epochs_run=" << r.epochs.size() << '\n'
            << p << "best_epoch=" << r.best_epoch << '\n'
            << p << "stopped_early=" << (r.stopped_early ? "true" : "false") << '\n';
    }
    txt << '\n' << std::left << std::setw(16) << "model" << "  macro_f1  macro_precision  macro_recall  accuracy\n";
    for (const auto& row : rows) {
        txt << std::left << std::setw(16) << row.name << "  " << fixed6(row.scores.macro_f1) << "  " << std::setw(15)
            << fixed6(row.scores.macro_precision) << "  " << std::setw(12) << fixed6(row.scores.macro_recall) << "  "
            << fixed6(row.scores.accuracy) << '\n';
    }
    txt << '\n' << prefixed(metrics::format_key_value(rows.back().scores, corpus.labels), "ensemble.");
    write_text(text_report_path(ensemble_out), txt.str());

    json j;
    j["command"] = "ensemble";
    j["mode"] = ensemble::to_string(sc.mode);
    if (sc.mode == ensemble::StackMode::kfold) j["folds"] = sc.folds;
    j["seed"] = cfg.seed;
    j["labels"] = corpus.labels;
    j["train_examples"] = train_set.size();
    j["validation_examples"] = val_set.size();
    j["vocab_size"] = corpus.vocab.size();
    j["meta_feature_length"] = result.meta_data.feature_length();
    j["meta_steps"] = result.ensemble.meta.steps;
    j["bases"] = json::array();
    for (std::size_t t = 0; t < specs.size(); ++t) {
        const auto& r = result.base_reports[t];
        json b;
        b["kind"] = models::to_string(specs[t].model.kind);
        b["epochs_run"] = r.epochs.size();
        b["best_epoch"] = r.best_epoch;
        b["stopped_early"] = r.stopped_early;
        b["epochs"] = json::array();
        for (const auto& e : r.epochs) b["epochs"].push_back(epoch_json(e));
        j["bases"].push_back(std::move(b));
    }
    j["rows"] = json::array();
    for (const auto& row : rows) {
        json r;
        r["name"] = row.name;
        r["metrics"] = json::parse(metrics::format_json(row.scores, corpus.labels));
        j["rows"].push_back(std::move(r));
    }
    write_text(json_report_path(ensemble_out), j.dump(2) + '\n');
    for (const auto& row : rows) note(options, row.name + " validation macro_f1 " + fixed6(row.scores.macro_f1));
}

Predictor Predictor::load(const fs::path& model_path, const std::optional<fs::path>& config) {
    Predictor p;
    text::PipelineConfig pc;
    pc.steps.clear();
    if (config) pc = load_run_config(*config).pipeline;
    p.pipeline_ = std::make_shared<const text::Pipeline>(pc);

    std::ifstream in(model_path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + model_path.string());
    char magic[4] = {};
    in.read(magic, 4);
    const std::string m(magic, static_cast<std::size_t>(in.gcount()));
    if (m == "MXS1") {
        auto bundle = models::load_model(model_path);
        p.labels_ = std::move(bundle.labels);
        p.vocab_ = std::move(bundle.vocab);
        p.max_len_ = bundle.model.config().max_len;
        p.model_ = std::make_shared<const models::Model>(std::move(bundle.model));
    } else if (m == "MXE1") {
        auto bundle = ensemble::load_ensemble(model_path);
        p.labels_ = std::move(bundle.labels);
        p.vocab_ = std::move(bundle.vocab);
        const auto* base = dynamic_cast<const ensemble::ModelClassifier*>(bundle.ensemble.bases.at(0).get());
        p.max_len_ = base->model().config().max_len;
        p.ensemble_ = std::make_shared<const ensemble::StackingEnsemble>(std::move(bundle.ensemble));
    } else {
        fail(ErrorCode::format, model_path.string() + ": not a model or ensemble file");
    }
    return p;
}

ensemble::Prediction Predictor::predict(const data::LabeledDataset& dataset) const {
    const auto set = encode(normalized(dataset, *pipeline_), vocab_, max_len_, false);
    if (ensemble_) return ensemble_->predict(set);
    ensemble::Prediction out;
    out.probabilities = models::predict_proba(*model_, set);
    out.labels = models::argmax_rows(out.probabilities, labels_.size());
    return out;
}

ensemble::Prediction Predictor::predict_texts(const std::vector<std::string>& texts) const {
    data::LabeledDataset ds;
    ds.label_set = labels_;
    for (std::size_t i = 0; i < texts.size(); ++i) ds.examples.push_back({std::to_string(i + 1), texts[i], {}});
    return predict(ds);
}

std::string evaluate(const fs::path& model_path, const fs::path& data_path, const std::optional<fs::path>& report_out,
                     const CommandOptions& options) {
    const Predictor predictor = Predictor::load(model_path, options.config);
    const RunConfig cfg = resolve_config(options, false, "evaluate");
    const data::LabeledDataset ds = data::load_tsv(data_path, cfg.load);
    if (ds.empty()) fail(ErrorCode::invalid_argument, data_path.string() + ": no examples to evaluate");
    const auto gold = gold_indices(ds, predictor.labels(), data_path.string());
    const auto prediction = predictor.predict(ds);
    const metrics::Scores scores = score(gold, prediction.labels, predictor.labels());

    std::ostringstream txt;
    txt << "command=evaluate\n"
        << "model=" << (predictor.is_ensemble() ? "ensemble" : "single") << '\n'
        << "examples=" << ds.size() << '\n'
        << metrics::format_key_value(scores, predictor.labels()) << '\n'
        << std::left << std::setw(16) << "class" << "  precision  recall    f1        support\n";
    for (std::size_t c = 0; c < scores.per_class.size(); ++c) {
        const auto& cs = scores.per_class[c];
        txt << std::left << std::setw(16) << predictor.labels()[c] << "  " << fixed6(cs.precision) << "   "
            << fixed6(cs.recall) << "  " << fixed6(cs.f1) << "  " << cs.support << '\n';
    }
    const fs::path base = report_out ? *report_out : fs::path(model_path.string() + ".eval");
    write_text(text_report_path(base), txt.str());
    json j;
    j["command"] = "evaluate";
    j["model"] = predictor.is_ensemble() ? "ensemble" : "single";
    j["examples"] = ds.size();
    j["metrics"] = json::parse(metrics::format_json(scores, predictor.labels()));
    write_text(json_report_path(base), j.dump(2) + '\n');
    return txt.str();
}

void predict(const fs::path& model_path, const fs::path& data_path, const fs::path& output,
             const CommandOptions& options) {
    const Predictor predictor = Predictor::load(model_path, options.config);
    const RunConfig cfg = resolve_config(options, false, "predict");
    const data::LabeledDataset ds = data::load_tsv(data_path, cfg.load);
    std::ostringstream out;
    if (!ds.empty()) {
        const auto prediction = predictor.predict(ds);
        const std::size_t C = predictor.labels().size();
        for (std::size_t i = 0; i < ds.size(); ++i) {
            out << ds.examples[i].id << '\t' << predictor.labels()[prediction.labels[i]] << '\t';
            for (std::size_t c = 0; c < C; ++c) {
                out << (c == 0 ? "" : ",") << kv::format_double(prediction.probabilities[i * C + c]);
            }
            out << '\n';
        }
    }
    write_text(output, out.str());
    note(options, "predicted " + std::to_string(ds.size()) + " examples");
}

}  // namespace mixsent::app
