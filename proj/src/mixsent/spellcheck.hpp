#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>

namespace mixsent::spell {

class FrequencyLexicon {
public:
    // Counts must be positive; a word may be added once.
    void add(const std::string& word, std::uint64_t count);
    void set_count(const std::string& word, std::uint64_t count);

    std::uint64_t count(const std::string& word) const;
    std::uint64_t count(const std::u32string& word) const;
    bool contains(const std::u32string& word) const { return counts_.count(word) != 0; }
    std::uint64_t total() const { return total_; }
    std::size_t size() const { return counts_.size(); }

    const std::unordered_map<std::u32string, std::uint64_t>& entries() const { return counts_; }

private:
    std::unordered_map<std::u32string, std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

// Lines are `word<TAB>count`.
FrequencyLexicon read_lexicon(std::istream& in, const std::string& source = "<stream>");
FrequencyLexicon load_lexicon(const std::filesystem::path& path);

std::u32string default_alphabet();  // a-z

// Calls visit for every single-edit variant (deletes, adjacent transposes,
// replaces, inserts). Duplicates and the word itself may be visited.
void for_each_edit1(const std::u32string& word, std::u32string_view alphabet,
                    const std::function<void(const std::u32string&)>& visit);

// Distinct single-edit variants, excluding the word itself.
std::unordered_set<std::string> edits1(const std::string& word, std::u32string_view alphabet);

enum class Strategy {
    nearest_first,  // distance 0, then 1, then 2; frequency ranks within a distance
    max_frequency,  // most frequent known word within distance 2
};

// Ties between equally frequent candidates go to the lexicographically
// smallest word.
std::string correct(const std::string& word, const FrequencyLexicon& lexicon, std::u32string_view alphabet,
                    Strategy strategy = Strategy::nearest_first);

}  // namespace mixsent::spell
