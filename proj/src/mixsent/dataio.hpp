#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mixsent::data {

// Label column value marking an unlabeled example.
inline constexpr std::string_view kUnlabeled = "_";

struct Example {
    std::string id;
    std::string text;
    std::optional<std::string> label;
};

struct LabeledDataset {
    std::vector<Example> examples;
    std::vector<std::string> label_set;  // order defines class indices

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }
    std::optional<std::size_t> label_index(const std::string& label) const;
    // Class index of every example; fails if any example is unlabeled.
    std::vector<std::size_t> label_indices() const;
};

struct LoadOptions {
    bool has_header = false;
    bool skip_empty = false;  // drop examples whose text is empty
};

// Lines are `id<TAB>label<TAB>text`; label `_` means unlabeled.
LabeledDataset read_tsv(std::istream& in, const LoadOptions& options, const std::string& source = "<stream>");
LabeledDataset load_tsv(const std::filesystem::path& path, const LoadOptions& options = {});

void write_tsv(std::ostream& out, const LabeledDataset& dataset);
void save_tsv(const std::filesystem::path& path, const LabeledDataset& dataset);

using TokenList = std::vector<std::string>;
using Tokenizer = std::function<TokenList(const std::string&)>;

inline constexpr std::int32_t kPadIndex = 0;
inline constexpr std::int32_t kOovIndex = 1;
inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kOovToken = "<unk>";

class Vocabulary {
public:
    Vocabulary();

    // Tokens with count >= min_count get indices from 2 in descending count
    // order, ties broken lexicographically.
    static Vocabulary build(std::span<const TokenList> corpus, std::size_t min_count = 1);

    // Restores a vocabulary from its index order (entries 0 and 1 must be
    // the reserved markers).
    static Vocabulary from_entries(std::vector<std::string> tokens, std::vector<std::uint64_t> counts);

    std::int32_t index_of(const std::string& token) const;
    const std::string& token(std::int32_t index) const;
    std::uint64_t count(std::int32_t index) const { return counts_.at(static_cast<std::size_t>(index)); }
    std::size_t size() const { return index_to_token_.size(); }

    const std::vector<std::string>& tokens() const { return index_to_token_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }

private:
    std::unordered_map<std::string, std::int32_t> token_to_index_;
    std::vector<std::string> index_to_token_;
    std::vector<std::uint64_t> counts_;
};

Vocabulary build_vocabulary(const LabeledDataset& dataset, const Tokenizer& tokens_of, std::size_t min_count = 1);

inline constexpr std::size_t kDefaultMaxLen = 25;

struct EncodedExample {
    std::vector<std::int32_t> indices;  // exactly max_len entries
    std::optional<std::size_t> label_index;
};

// Unknown tokens map to OOV; right-truncation, right-padding with PAD.
EncodedExample encode(std::span<const std::string> tokens, const Vocabulary& vocab,
                      std::size_t max_len = kDefaultMaxLen);

// Tokens up to the first PAD; OOV entries come back as the OOV marker.
TokenList decode(const EncodedExample& example, const Vocabulary& vocab);

// Deterministic shuffle, train gets floor(fraction * N) examples.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, double train_fraction,
                                                std::uint64_t seed);

struct EmbeddingTable {
    std::size_t dim = 0;
    std::vector<double> values;  // vocab.size() rows of dim values
    std::size_t found = 0;       // vocabulary words present in the file

    std::span<const double> row(std::size_t index) const { return {values.data() + index * dim, dim}; }
};

inline constexpr double kMissingEmbeddingRange = 0.25;

// Text vectors `word v1 ... vd`, optional leading `count dim` line. Words
// missing from the file draw uniformly in +-0.25; the PAD row is zero.
EmbeddingTable read_embeddings(std::istream& in, const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);
EmbeddingTable load_embeddings(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t dim,
                               std::uint64_t seed);

}  // namespace mixsent::data
