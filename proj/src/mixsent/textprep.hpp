#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "mixsent/spellcheck.hpp"
#include "mixsent/stemmer.hpp"

namespace mixsent::text {

using TokenList = std::vector<std::string>;

inline constexpr std::string_view kUrlToken = "URL";
inline constexpr std::string_view kUserToken = "USER";

class ResourceTable {
public:
    ResourceTable() = default;
    ResourceTable(std::string name, bool case_insensitive) : name_(std::move(name)), fold_case_(case_insensitive) {}

    void add(const std::string& key, const std::string& replacement);
    const std::string* find(std::string_view key) const;

    const std::string& name() const { return name_; }
    bool case_insensitive() const { return fold_case_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t max_key_length() const { return max_key_length_; }  // code points
    bool may_start_key(char32_t c) const { return first_code_points_.count(c) != 0; }
    const std::unordered_map<std::string, std::string>& entries() const { return entries_; }

private:
    std::string name_;
    bool fold_case_ = false;
    std::size_t max_key_length_ = 0;
    std::unordered_set<char32_t> first_code_points_;
    std::unordered_map<std::string, std::string> entries_;
};

// `key<TAB>replacement` per line. Emoji tables match exactly; contraction
// and acronym tables fold case.
ResourceTable read_table(std::istream& in, const std::string& name, bool case_insensitive,
                         const std::string& source = "<stream>");
ResourceTable load_table(const std::filesystem::path& path, const std::string& name, bool case_insensitive);

class StopList {
public:
    void add(const std::string& word);
    bool contains(const std::string& word) const { return words_.count(word) != 0; }
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

// One word per line; `#` starts a comment line.
StopList read_stoplist(std::istream& in, const std::string& source = "<stream>");
StopList load_stoplist(const std::filesystem::path& path);

std::string demojize(std::string_view text, const ResourceTable& emoji, bool keep_unknown = false);
std::string replace_patterns(std::string_view text);
std::string expand_abbreviations(std::string_view text, const ResourceTable& contractions,
                                 const ResourceTable& acronyms);
std::string collapse_elongation(std::string_view text, std::size_t max_repeat = 2);
std::string remove_punctuation(std::string_view text);
// Leaves the sentinels URL and USER intact.
std::string lowercase(std::string_view text);

TokenList tokenize(std::string_view text);  // Unicode whitespace
TokenList remove_stopwords(const TokenList& tokens, const StopList& stops);

// Corrects alphabetic tokens of at least kMinSpellLength code points that
// are not sentinels.
inline constexpr std::size_t kMinSpellLength = 3;
TokenList spell_correct(const TokenList& tokens, const spell::FrequencyLexicon& lexicon,
                        std::u32string_view alphabet, spell::Strategy strategy);

const std::vector<std::string>& registered_steps();
const std::vector<std::string>& default_steps();

struct PipelineConfig {
    std::vector<std::string> steps = default_steps();
    std::size_t max_repeat = 2;
    std::string stemmer = "english";
    bool keep_unknown_emoji = false;
    spell::Strategy spell_strategy = spell::Strategy::nearest_first;
    std::u32string alphabet = spell::default_alphabet();

    std::shared_ptr<const ResourceTable> emoji;
    std::shared_ptr<const ResourceTable> contractions;
    std::shared_ptr<const ResourceTable> acronyms;
    std::shared_ptr<const StopList> stopwords;
    std::shared_ptr<const spell::FrequencyLexicon> lexicon;
};

// Validates the configuration once; run() is const and thread-safe.
class Pipeline {
public:
    explicit Pipeline(PipelineConfig config);

    TokenList run(std::string_view text) const;
    const PipelineConfig& config() const { return config_; }

private:
    PipelineConfig config_;
    std::shared_ptr<const Stemmer> stemmer_;
};

TokenList run_pipeline(std::string_view text, const PipelineConfig& config);

}  // namespace mixsent::text
