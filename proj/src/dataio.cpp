#include "mixsent/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "mixsent/error.hpp"
#include "mixsent/rng.hpp"

namespace mixsent::data {

namespace {

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string_view> split_on(std::string_view line, char sep) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> split_spaces(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) fields.push_back(line.substr(start, i - start));
    }
    return fields;
}

bool is_reserved(std::string_view token) { return token == kPadToken || token == kOovToken; }

}  // namespace

std::optional<std::size_t> LabeledDataset::label_index(const std::string& label) const {
    const auto it = std::find(label_set.begin(), label_set.end(), label);
    if (it == label_set.end()) return std::nullopt;
    return static_cast<std::size_t>(it - label_set.begin());
}

std::vector<std::size_t> LabeledDataset::label_indices() const {
    std::vector<std::size_t> out;
    out.reserve(examples.size());
    for (const Example& ex : examples) {
        if (!ex.label) fail(ErrorCode::invalid_argument, "example '" + ex.id + "' has no label");
        const auto idx = label_index(*ex.label);
        if (!idx) fail(ErrorCode::invalid_argument, "example '" + ex.id + "' has unknown label '" + *ex.label + "'");
        out.push_back(*idx);
    }
    return out;
}

LabeledDataset read_tsv(std::istream& in, const LoadOptions& options, const std::string& source) {
    LabeledDataset ds;
    std::unordered_set<std::string> ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line_no == 1 && options.has_header) continue;
        if (line.empty()) continue;
        const auto fields = split_on(line, '\t');
        if (fields.size() != 3) {
            fail(ErrorCode::format, source + ":" + std::to_string(line_no) + ": expected 3 tab-separated columns, found " +
                                        std::to_string(fields.size()));
        }
        Example ex{std::string(fields[0]), std::string(fields[2]), std::nullopt};
        if (ex.id.empty()) fail(ErrorCode::format, source + ":" + std::to_string(line_no) + ": empty id");
        if (fields[1] != kUnlabeled) ex.label = std::string(fields[1]);
        if (!ids.insert(ex.id).second) {
            fail(ErrorCode::format, source + ":" + std::to_string(line_no) + ": duplicate id '" + ex.id + "'");
        }
        if (options.skip_empty && ex.text.empty()) continue;
        if (ex.label && !ds.label_index(*ex.label)) ds.label_set.push_back(*ex.label);
        ds.examples.push_back(std::move(ex));
    }
    if (in.bad()) fail(ErrorCode::io, source + ": read error");
    return ds;
}

LabeledDataset load_tsv(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return read_tsv(in, options, path.string());
}

void write_tsv(std::ostream& out, const LabeledDataset& dataset) {
    for (const Example& ex : dataset.examples) {
        out << ex.id << '\t' << (ex.label ? *ex.label : std::string(kUnlabeled)) << '\t' << ex.text << '\n';
    }
}

void save_tsv(const std::filesystem::path& path, const LabeledDataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    write_tsv(out, dataset);
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

Vocabulary::Vocabulary()
    : token_to_index_{{std::string(kPadToken), kPadIndex}, {std::string(kOovToken), kOovIndex}},
      index_to_token_{std::string(kPadToken), std::string(kOovToken)},
      counts_{0, 0} {}

Vocabulary Vocabulary::build(std::span<const TokenList> corpus, std::size_t min_count) {
    if (min_count < 1) fail(ErrorCode::invalid_argument, "vocabulary: min_count must be at least 1");
    std::map<std::string, std::uint64_t> counts;
    for (const TokenList& tokens : corpus) {
        for (const std::string& t : tokens) {
            if (!is_reserved(t)) ++counts[t];
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> entries(counts.begin(), counts.end());
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary vocab;
    for (auto& [token, count] : entries) {
        if (count < min_count) continue;
        vocab.token_to_index_.emplace(token, static_cast<std::int32_t>(vocab.index_to_token_.size()));
        vocab.index_to_token_.push_back(token);
        vocab.counts_.push_back(count);
    }
    return vocab;
}

Vocabulary Vocabulary::from_entries(std::vector<std::string> tokens, std::vector<std::uint64_t> counts) {
    if (tokens.size() < 2 || tokens[0] != kPadToken || tokens[1] != kOovToken || counts.size() != tokens.size()) {
        fail(ErrorCode::format, "vocabulary: malformed entry list");
    }
    Vocabulary vocab;
    vocab.token_to_index_.clear();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (!vocab.token_to_index_.emplace(tokens[i], static_cast<std::int32_t>(i)).second) {
            fail(ErrorCode::format, "vocabulary: duplicate token '" + tokens[i] + "'");
        }
    }
    vocab.index_to_token_ = std::move(tokens);
    vocab.counts_ = std::move(counts);
    return vocab;
}

std::int32_t Vocabulary::index_of(const std::string& token) const {
    if (is_reserved(token)) return kOovIndex;
    const auto it = token_to_index_.find(token);
    return it == token_to_index_.end() ? kOovIndex : it->second;
}

const std::string& Vocabulary::token(std::int32_t index) const {
    if (index < 0 || static_cast<std::size_t>(index) >= index_to_token_.size()) {
        fail(ErrorCode::invalid_argument, "vocabulary: index " + std::to_string(index) + " out of range");
    }
    return index_to_token_[static_cast<std::size_t>(index)];
}

Vocabulary build_vocabulary(const LabeledDataset& dataset, const Tokenizer& tokens_of, std::size_t min_count) {
    std::vector<TokenList> corpus;
    corpus.reserve(dataset.size());
    for (const Example& ex : dataset.examples) corpus.push_back(tokens_of(ex.text));
    return Vocabulary::build(corpus, min_count);
}

EncodedExample encode(std::span<const std::string> tokens, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len < 1) fail(ErrorCode::invalid_argument, "encode: max_len must be at least 1");
    EncodedExample out;
    out.indices.assign(max_len, kPadIndex);
    const std::size_t n = std::min(tokens.size(), max_len);
    for (std::size_t i = 0; i < n; ++i) out.indices[i] = vocab.index_of(tokens[i]);
    return out;
}

TokenList decode(const EncodedExample& example, const Vocabulary& vocab) {
    TokenList out;
    for (std::int32_t idx : example.indices) {
        if (idx == kPadIndex) break;
        out.push_back(vocab.token(idx));
    }
    return out;
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, double train_fraction,
                                                std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        fail(ErrorCode::invalid_argument, "split: train fraction must lie strictly between 0 and 1");
    }
    if (dataset.empty()) fail(ErrorCode::invalid_argument, "split: empty dataset");
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(dataset.size())));
    std::pair<LabeledDataset, LabeledDataset> out;
    out.first.label_set = dataset.label_set;
    out.second.label_set = dataset.label_set;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_train ? out.first : out.second).examples.push_back(dataset.examples[order[i]]);
    }
    return out;
}

EmbeddingTable read_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
    if (dim == 0) fail(ErrorCode::invalid_argument, "embeddings: dimension must be positive");
    EmbeddingTable table;
    table.dim = dim;
    table.values.assign(vocab.size() * dim, 0.0);
    std::vector<bool> seen(vocab.size(), false);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        const auto fields = split_spaces(line);
        if (fields.empty()) continue;
        if (line_no == 1 && fields.size() == 2) {
            std::size_t a = 0, b = 0;
            const bool count_ok = std::from_chars(fields[0].begin(), fields[0].end(), a).ec == std::errc{};
            const bool dim_ok = std::from_chars(fields[1].begin(), fields[1].end(), b).ec == std::errc{};
            if (count_ok && dim_ok && dim != 1) {
                if (b != dim) {
                    fail(ErrorCode::format, "embeddings: file declares dimension " + std::to_string(b) + ", expected " +
                                                std::to_string(dim));
                }
                continue;
            }
        }
        const std::string word(fields[0]);
        if (fields.size() - 1 != dim) {
            fail(ErrorCode::format, "embeddings: vector for '" + word + "' has " + std::to_string(fields.size() - 1) +
                                        " values, expected " + std::to_string(dim));
        }
        const std::int32_t idx = vocab.index_of(word);
        if (idx == kOovIndex || idx == kPadIndex) continue;
        const auto row = static_cast<std::size_t>(idx);
        for (std::size_t j = 0; j < dim; ++j) {
            double v = 0.0;
            const auto f = fields[j + 1];
            const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size()) {
                fail(ErrorCode::format, "embeddings: bad number '" + std::string(f) + "' for '" + word + "'");
            }
            table.values[row * dim + j] = v;
        }
        if (!seen[row]) ++table.found;
        seen[row] = true;
    }

    Rng rng(seed);
    for (std::size_t r = 1; r < vocab.size(); ++r) {
        if (seen[r]) continue;
        for (std::size_t j = 0; j < dim; ++j) {
            table.values[r * dim + j] = rng.uniform(-kMissingEmbeddingRange, kMissingEmbeddingRange);
        }
    }
    return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               std::uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return read_embeddings(in, vocab, dim, seed);
}

}  // namespace mixsent::data
