#include "mixsent/models.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mixsent/binio.hpp"
#include "mixsent/error.hpp"
#include "mixsent/kv.hpp"
#include "mixsent/rng.hpp"

namespace mixsent::models {

namespace {

constexpr std::size_t kPredictChunk = 256;

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

std::string to_string(Kind kind) {
    switch (kind) {
        case Kind::cnn: return "cnn";
        case Kind::lstm: return "lstm";
        case Kind::attention: return "attention";
    }
    return "?";
}

std::string to_string(Head head) { return head == Head::softmax ? "softmax" : "sigmoid"; }

Kind parse_kind(const std::string& text) {
    if (text == "cnn") return Kind::cnn;
    if (text == "lstm") return Kind::lstm;
    if (text == "attention") return Kind::attention;
    fail(ErrorCode::config, "unknown model kind '" + text + "' (expected cnn, lstm or attention)");
}

Head parse_head(const std::string& text) {
    if (text == "softmax") return Head::softmax;
    if (text == "sigmoid") return Head::sigmoid;
    fail(ErrorCode::config, "unknown output head '" + text + "' (expected softmax or sigmoid)");
}

ModelConfig ModelConfig::defaults(Kind kind) {
    ModelConfig c;
    c.kind = kind;
    if (kind == Kind::cnn) {
        c.dense = {4096, 2048};
        c.dropout = 0.2;
        c.batch_norm = false;
    }
    return c;
}

void ModelConfig::validate() const {
    const auto bad = [](const std::string& msg) { fail(ErrorCode::config, "model config: " + msg); };
    if (vocab_size < 2) bad("vocab_size must be at least 2 (PAD and OOV)");
    if (embed_dim == 0) bad("embed_dim must be positive");
    if (max_len == 0) bad("max_len must be positive");
    if (num_classes < 2) bad("num_classes must be at least 2");
    if (output == Head::sigmoid && num_classes != 2) bad("a sigmoid head requires exactly 2 classes");
    if (!(dropout >= 0.0 && dropout < 1.0)) bad("dropout must lie in [0, 1)");
    for (std::size_t w : dense) {
        if (w == 0) bad("dense widths must be positive");
    }
    if (kind == Kind::cnn) {
        if (filter_widths.empty()) bad("cnn needs at least one filter width");
        if (filters_per_width == 0) bad("filters must be positive");
        for (std::size_t w : filter_widths) {
            if (w == 0) bad("filter widths must be positive");
            // The convolution output must hold at least one pooling window.
            if (max_len < w + 1) {
                bad("max_len " + std::to_string(max_len) + " is too short for filter width " + std::to_string(w));
            }
        }
    } else {
        if (units == 0) bad("units must be positive");
        if (kind == Kind::attention && attention_dim == 0) bad("attention_dim must be positive");
    }
}

KeyValues to_key_values(const ModelConfig& c) {
    KeyValues kv{
        {"kind", to_string(c.kind)},
        {"vocab_size", std::to_string(c.vocab_size)},
        {"embed_dim", std::to_string(c.embed_dim)},
        {"max_len", std::to_string(c.max_len)},
        {"num_classes", std::to_string(c.num_classes)},
        {"output", to_string(c.output)},
        {"dense", kv::format_list(c.dense)},
        {"dropout", kv::format_double(c.dropout)},
        {"batch_norm", c.batch_norm ? "true" : "false"},
        {"freeze_pad", c.freeze_pad ? "true" : "false"},
    };
    if (c.kind == Kind::cnn) {
        kv["filter_widths"] = kv::format_list(c.filter_widths);
        kv["filters"] = std::to_string(c.filters_per_width);
    } else {
        kv["units"] = std::to_string(c.units);
        if (c.kind == Kind::attention) kv["attention_dim"] = std::to_string(c.attention_dim);
    }
    return kv;
}

ModelConfig model_config_from(const KeyValues& values) {
    const auto kind_it = values.find("kind");
    if (kind_it == values.end()) fail(ErrorCode::config, "model config: missing 'kind'");
    ModelConfig c = ModelConfig::defaults(parse_kind(kind_it->second));
    for (const auto& [key, value] : values) {
        if (key == "kind") continue;
        else if (key == "vocab_size") c.vocab_size = kv::parse_uint(key, value);
        else if (key == "embed_dim") c.embed_dim = kv::parse_uint(key, value);
        else if (key == "max_len") c.max_len = kv::parse_uint(key, value);
        else if (key == "num_classes") c.num_classes = kv::parse_uint(key, value);
        else if (key == "output") c.output = parse_head(value);
        else if (key == "filter_widths") c.filter_widths = kv::parse_uint_list(key, value);
        else if (key == "filters") c.filters_per_width = kv::parse_uint(key, value);
        else if (key == "units") c.units = kv::parse_uint(key, value);
        else if (key == "attention_dim") c.attention_dim = kv::parse_uint(key, value);
        else if (key == "dense") c.dense = kv::parse_uint_list(key, value);
        else if (key == "dropout") c.dropout = kv::parse_double(key, value);
        else if (key == "batch_norm") c.batch_norm = kv::parse_bool(key, value);
        else if (key == "freeze_pad") c.freeze_pad = kv::parse_bool(key, value);
        else fail(ErrorCode::config, "model config: unknown key '" + key + "'");
    }
    return c;
}

Model::Model(ModelConfig config, std::uint64_t seed) : config_(std::move(config)) {
    config_.validate();
    Rng rng(seed);
    const auto& c = config_;
    embedding_ = nn::Embedding(c.vocab_size, c.embed_dim, rng);
    embedding_.freeze_pad = c.freeze_pad;
    std::size_t features = 0;
    switch (c.kind) {
        case Kind::cnn:
            for (std::size_t w : c.filter_widths) {
                convs_.emplace_back(w, c.embed_dim, c.filters_per_width, rng);
                features += ((c.max_len - w + 1 - 2) / 2 + 1) * c.filters_per_width;
            }
            break;
        case Kind::lstm:
            lstm_ = nn::Lstm(c.embed_dim, c.units, rng);
            features = c.units;
            break;
        case Kind::attention:
            gru_ = nn::Gru(c.embed_dim, c.units, rng);
            attention_ = nn::AdditiveAttention(c.units, c.attention_dim, rng);
            features = c.units;
            break;
    }
    for (std::size_t width : c.dense) {
        blocks_.emplace_back(features, width, c.dropout, c.batch_norm, rng);
        features = width;
    }
    head_ = nn::Dense(features, output_units(), rng);
}

std::size_t Model::output_units() const { return config_.output == Head::sigmoid ? 1 : config_.num_classes; }

ag::Tensor Model::forward(std::span<const std::int32_t> indices, std::size_t batch, const nn::Context& ctx) {
    const std::size_t len = config_.max_len;
    if (batch == 0 || indices.size() != batch * len) {
        fail(ErrorCode::shape, "model: expected " + std::to_string(batch) + " sequences of length " + std::to_string(len) +
                                   ", got " + std::to_string(indices.size()) + " indices");
    }
    for (std::int32_t idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= config_.vocab_size) {
            fail(ErrorCode::invalid_argument, "model: token index " + std::to_string(idx) + " outside vocabulary of " +
                                                  std::to_string(config_.vocab_size));
        }
    }
    const ag::Tensor x = embedding_.forward(indices, batch, len);
    ag::Tensor features;
    switch (config_.kind) {
        case Kind::cnn: {
            std::vector<ag::Tensor> parts;
            for (const auto& conv : convs_) {
                const ag::Tensor pooled = nn::maxpool1d(conv.forward(x), 2, 2);
                parts.push_back(ag::reshape(pooled, {batch, pooled.dim(1) * pooled.dim(2)}));
            }
            features = ag::concat(parts, 1);
            break;
        }
        case Kind::lstm:
            features = nn::global_maxpool(lstm_.forward(x));
            break;
        case Kind::attention:
            features = attention_.forward(gru_.forward(x)).context;
            break;
    }
    for (auto& block : blocks_) features = block.forward(features, ctx);
    const ag::Tensor logits = head_.forward(features);
    return config_.output == Head::sigmoid ? ag::sigmoid(logits) : ag::softmax(logits);
}

std::vector<double> Model::predict_proba(std::span<const std::int32_t> indices, std::size_t batch) const {
    // Eval mode reads running statistics only, so the cast does not mutate.
    auto& self = const_cast<Model&>(*this);
    const nn::Context ctx{nn::Mode::eval, nullptr};
    const ag::Tensor probs = self.forward(indices, batch, ctx);
    const auto values = probs.data();
    if (config_.output == Head::softmax) return {values.begin(), values.end()};
    std::vector<double> out(batch * 2);
    for (std::size_t i = 0; i < batch; ++i) {
        out[2 * i] = 1.0 - values[i];
        out[2 * i + 1] = values[i];
    }
    return out;
}

nn::TensorList Model::parameters() const {
    nn::TensorList out;
    embedding_.collect("embedding", out);
    for (std::size_t i = 0; i < convs_.size(); ++i) convs_[i].collect("conv" + std::to_string(i), out);
    if (config_.kind == Kind::lstm) lstm_.collect("lstm", out);
    if (config_.kind == Kind::attention) {
        gru_.collect("gru", out);
        attention_.collect("attention", out);
    }
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect("dense" + std::to_string(i), out);
    head_.collect("head", out);
    return out;
}

std::vector<ag::Tensor> Model::trainable() const {
    std::vector<ag::Tensor> out;
    for (const auto& p : parameters()) {
        if (p.trainable) out.push_back(p.tensor);
    }
    return out;
}

std::size_t Model::trainable_count() const {
    std::size_t n = 0;
    for (const auto& t : trainable()) n += t.numel();
    return n;
}

void Model::set_embeddings(const data::EmbeddingTable& table) {
    if (table.dim != config_.embed_dim || table.values.size() != config_.vocab_size * table.dim) {
        fail(ErrorCode::shape, "embeddings: table does not match the model's vocabulary and dimension");
    }
    auto dst = embedding_.table.mutable_data();
    std::copy(table.values.begin() + static_cast<std::ptrdiff_t>(table.dim), table.values.end(),
              dst.begin() + static_cast<std::ptrdiff_t>(table.dim));
}

std::vector<std::string> Model::layer_prefixes() const {
    std::vector<std::string> out;
    for (const auto& p : parameters()) {
        const std::string prefix = p.name.substr(0, p.name.find('.'));
        if (std::find(out.begin(), out.end(), prefix) == out.end()) out.push_back(prefix);
    }
    return out;
}

Model build_model(const ModelConfig& config, std::uint64_t seed) { return Model(config, seed); }

EncodedSet encode_dataset(const data::LabeledDataset& dataset, const data::Tokenizer& tokens_of,
                          const data::Vocabulary& vocab, std::size_t max_len, bool with_labels) {
    EncodedSet set;
    set.max_len = max_len;
    set.indices.reserve(dataset.size() * max_len);
    for (const auto& ex : dataset.examples) {
        const auto enc = data::encode(tokens_of(ex.text), vocab, max_len);
        set.indices.insert(set.indices.end(), enc.indices.begin(), enc.indices.end());
    }
    if (with_labels) set.labels = dataset.label_indices();
    return set;
}

void TrainConfig::validate() const {
    if (epochs < 1) fail(ErrorCode::config, "train: epochs must be at least 1");
    if (batch_size < 2) fail(ErrorCode::config, "train: batch_size must be at least 2");
    if (!(adam.lr >= 0.0)) fail(ErrorCode::config, "train: learning rate must be non-negative");
    if (loss.gamma < 0.0) fail(ErrorCode::config, "train: gamma must be non-negative");
}

std::vector<double> predict_proba(const Model& model, const EncodedSet& set) {
    if (set.max_len != model.config().max_len) {
        fail(ErrorCode::shape, "predict: sequence length " + std::to_string(set.max_len) + " differs from the model's " +
                                   std::to_string(model.config().max_len));
    }
    const std::size_t n = set.size();
    const std::size_t classes = model.config().num_classes;
    std::vector<double> out;
    out.reserve(n * classes);
    for (std::size_t start = 0; start < n; start += kPredictChunk) {
        const std::size_t count = std::min(kPredictChunk, n - start);
        const auto rows = model.predict_proba({set.indices.data() + start * set.max_len, count * set.max_len}, count);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

std::vector<std::size_t> argmax_rows(std::span<const double> probs, std::size_t num_classes) {
    std::vector<std::size_t> out(probs.size() / num_classes);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto row = probs.subspan(i * num_classes, num_classes);
        out[i] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

namespace {

void check_set(const EncodedSet& set, const ModelConfig& config, const char* what) {
    if (set.size() == 0) fail(ErrorCode::invalid_argument, std::string("train: empty ") + what + " set");
    if (set.max_len != config.max_len) fail(ErrorCode::shape, std::string("train: ") + what + " sequence length mismatch");
    if (set.labels.size() != set.size()) fail(ErrorCode::invalid_argument, std::string("train: ") + what + " labels missing");
    for (std::size_t y : set.labels) {
        if (y >= config.num_classes) fail(ErrorCode::invalid_argument, std::string("train: ") + what + " label out of range");
    }
}

double accuracy(const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) hit += gold[i] == pred[i];
    return static_cast<double>(hit) / static_cast<double>(gold.size());
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, std::size_t batch_size,
                                                   bool& merged_tail) {
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const auto end = std::min(order.size(), start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    if (batches.size() > 1 && batches.back().size() == 1) {
        batches[batches.size() - 2].push_back(batches.back().front());
        batches.pop_back();
        merged_tail = true;
    }
    return batches;
}

}  // namespace

TrainReport train_model(Model& model, const EncodedSet& train, const EncodedSet& val, const TrainConfig& config,
                        const EpochCallback& on_epoch) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    const ModelConfig& mc = model.config();
    check_set(train, mc, "training");
    check_set(val, mc, "validation");
    if (mc.batch_norm && !mc.dense.empty() && train.size() < 2) {
        fail(ErrorCode::invalid_argument, "train: batch normalization needs at least 2 training examples");
    }

    TrainReport report;
    nn::FocalLossConfig loss = config.loss;
    if (loss.class_weights.empty()) loss.class_weights = nn::inverse_frequency_weights(train.labels, mc.num_classes);
    if (loss.class_weights.size() != mc.num_classes) {
        fail(ErrorCode::config, "train: expected " + std::to_string(mc.num_classes) + " class weights");
    }
    report.class_weights = loss.class_weights;

    Rng order_rng(derive_seed(config.seed, 1));
    Rng dropout_rng(derive_seed(config.seed, 2));
    nn::Adam adam(config.adam);
    std::vector<ag::Tensor> params = model.trainable();
    const nn::TensorList named = model.parameters();

    std::vector<std::vector<double>> best_state;
    double best_f1 = -1.0;
    std::size_t since_best = 0;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::int32_t> batch_indices;
    std::vector<std::size_t> batch_labels;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        order_rng.shuffle(order);
        const auto batches = make_batches(order, config.batch_size, report.merged_tail);
        double loss_sum = 0.0;
        for (const auto& batch : batches) {
            batch_indices.clear();
            batch_labels.clear();
            for (std::size_t i : batch) {
                const auto row = train.row(i);
                batch_indices.insert(batch_indices.end(), row.begin(), row.end());
                batch_labels.push_back(train.labels[i]);
            }
            for (auto& p : params) p.zero_grad();
            const nn::Context ctx{nn::Mode::train, &dropout_rng};
            const ag::Tensor probs = model.forward(batch_indices, batch.size(), ctx);
            const ag::Tensor value = nn::focal_loss(probs, batch_labels, loss);
            value.backward();
            adam.step(params);
            loss_sum += value.item() * static_cast<double>(batch.size());
        }

        EpochRecord record;
        record.epoch = epoch;
        record.train_loss = loss_sum / static_cast<double>(train.size());
        record.train_accuracy = accuracy(train.labels, argmax_rows(predict_proba(model, train), mc.num_classes));
        const auto val_pred = argmax_rows(predict_proba(model, val), mc.num_classes);
        record.validation = metrics::macro_scores(metrics::confusion(val.labels, val_pred, mc.num_classes));
        report.epochs.push_back(record);
        if (on_epoch) on_epoch(record);

        if (record.validation.macro_f1 > best_f1) {
            best_f1 = record.validation.macro_f1;
            report.best_epoch = epoch;
            since_best = 0;
            best_state.clear();
            for (const auto& p : named) best_state.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
        } else if (config.patience > 0 && ++since_best >= config.patience) {
            report.stopped_early = epoch < config.epochs;
            break;
        }
    }

    for (std::size_t i = 0; i < named.size(); ++i) {
        ag::Tensor t = named[i].tensor;
        std::copy(best_state[i].begin(), best_state[i].end(), t.mutable_data().begin());
    }
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

void write_model(std::ostream& out, const ModelBundle& bundle) {
    write_model(out, bundle.model, bundle.labels, bundle.vocab);
}

void write_model(std::ostream& out, const Model& model, const std::vector<std::string>& labels,
                 const data::Vocabulary& vocab) {
    if (labels.size() != model.config().num_classes || vocab.size() != model.config().vocab_size) {
        fail(ErrorCode::invalid_argument, "model: labels or vocabulary do not match the model");
    }
    out.write("MXS1", 4);
    binio::put_u32(out, kModelFormatVersion);
    std::string config;
    for (const auto& [k, v] : to_key_values(model.config())) config += k + "=" + v + "\n";
    binio::put_string(out, config);
    binio::put_u32(out, static_cast<std::uint32_t>(labels.size()));
    for (const auto& label : labels) binio::put_string(out, label);
    const auto& tokens = vocab.tokens();
    const auto& counts = vocab.counts();
    binio::put_u32(out, static_cast<std::uint32_t>(tokens.size()));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        binio::put_string(out, tokens[i]);
        binio::put_u64(out, counts[i]);
    }
    const auto params = model.parameters();
    binio::put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        binio::put_string(out, p.name);
        binio::put_u32(out, static_cast<std::uint32_t>(p.tensor.rank()));
        for (std::size_t d : p.tensor.shape()) binio::put_u32(out, static_cast<std::uint32_t>(d));
        for (double v : p.tensor.data()) binio::put_f64(out, v);
    }
    if (!out) fail(ErrorCode::io, "model: write failed");
}

ModelBundle read_model(std::istream& in, const std::string& source) {
    binio::Reader r(in, source);
    r.expect_magic("MXS1");
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) {
        fail(ErrorCode::format, source + ": unsupported model format version " + std::to_string(version));
    }
    KeyValues values;
    std::istringstream config(r.string());
    for (std::string line; std::getline(config, line);) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail(ErrorCode::format, source + ": malformed config line '" + line + "'");
        values[line.substr(0, eq)] = line.substr(eq + 1);
    }
    ModelConfig mc;
    try {
        mc = model_config_from(values);
    } catch (const Error& e) {
        fail(ErrorCode::format, source + ": " + e.what());
    }
    std::vector<std::string> labels(r.u32());
    for (auto& label : labels) label = r.string();
    if (labels.size() != mc.num_classes) fail(ErrorCode::format, source + ": label count differs from num_classes");
    const std::uint32_t vocab_size = r.u32();
    if (vocab_size != mc.vocab_size) fail(ErrorCode::format, source + ": vocabulary size differs from the config");
    std::vector<std::string> tokens(vocab_size);
    std::vector<std::uint64_t> counts(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
        tokens[i] = r.string();
        counts[i] = r.u64();
    }
    ModelBundle bundle{Model(mc, 0), std::move(labels), data::Vocabulary::from_entries(std::move(tokens), std::move(counts))};

    const auto params = bundle.model.parameters();
    std::unordered_map<std::string, ag::Tensor> by_name;
    for (const auto& p : params) by_name.emplace(p.name, p.tensor);
    const std::uint32_t count = r.u32();
    if (count != params.size()) fail(ErrorCode::format, source + ": expected " + std::to_string(params.size()) + " tensors");
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::string name = r.string(4096);
        const auto it = by_name.find(name);
        if (it == by_name.end()) fail(ErrorCode::format, source + ": unexpected tensor '" + name + "'");
        ag::Tensor t = it->second;
        const std::uint32_t rank = r.u32();
        ag::Shape shape(rank);
        for (auto& d : shape) d = r.u32();
        if (shape != t.shape()) {
            fail(ErrorCode::format, source + ": tensor '" + name + "' has shape " + ag::to_string(shape) + ", expected " +
                                        ag::to_string(t.shape()));
        }
        for (double& v : t.mutable_data()) v = r.f64();
        by_name.erase(it);
    }
    return bundle;
}

void save_model(const std::filesystem::path& path, const ModelBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    write_model(out, bundle);
    out.close();
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return read_model(in, path.string());
}

}  // namespace mixsent::models
