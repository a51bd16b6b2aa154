#include "mixsent/spellcheck.hpp"

#include <charconv>
#include <fstream>
#include <istream>

#include "mixsent/error.hpp"
#include "mixsent/unicode.hpp"

namespace mixsent::spell {

void FrequencyLexicon::add(const std::string& word, std::uint64_t count) {
    if (word.empty()) fail(ErrorCode::invalid_argument, "lexicon: empty word");
    if (count == 0) fail(ErrorCode::invalid_argument, "lexicon: count for '" + word + "' must be positive");
    if (!counts_.emplace(unicode::decode(word), count).second) {
        fail(ErrorCode::invalid_argument, "lexicon: duplicate word '" + word + "'");
    }
    total_ += count;
}

void FrequencyLexicon::set_count(const std::string& word, std::uint64_t count) {
    if (count == 0) fail(ErrorCode::invalid_argument, "lexicon: count for '" + word + "' must be positive");
    auto& slot = counts_[unicode::decode(word)];
    total_ = total_ - slot + count;
    slot = count;
}

std::uint64_t FrequencyLexicon::count(const std::u32string& word) const {
    const auto it = counts_.find(word);
    return it == counts_.end() ? 0 : it->second;
}

std::uint64_t FrequencyLexicon::count(const std::string& word) const { return count(unicode::decode(word)); }

FrequencyLexicon read_lexicon(std::istream& in, const std::string& source) {
    FrequencyLexicon lexicon;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto where = source + ":" + std::to_string(line_no);
        const auto tab = line.find('\t');
        if (tab == std::string::npos) fail(ErrorCode::format, where + ": expected word<TAB>count");
        std::uint64_t count = 0;
        const char* first = line.data() + tab + 1;
        const char* last = line.data() + line.size();
        const auto res = std::from_chars(first, last, count);
        if (res.ec != std::errc{} || res.ptr != last) fail(ErrorCode::format, where + ": bad count");
        try {
            lexicon.add(line.substr(0, tab), count);
        } catch (const Error& e) {
            fail(ErrorCode::format, where + ": " + e.what());
        }
    }
    return lexicon;
}

FrequencyLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return read_lexicon(in, path.string());
}

std::u32string default_alphabet() { return U"abcdefghijklmnopqrstuvwxyz"; }

void for_each_edit1(const std::u32string& word, std::u32string_view alphabet,
                    const std::function<void(const std::u32string&)>& visit) {
    const std::size_t n = word.size();
    std::u32string buf;
    for (std::size_t i = 0; i < n; ++i) {
        buf = word;
        buf.erase(i, 1);
        visit(buf);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
        buf = word;
        std::swap(buf[i], buf[i + 1]);
        visit(buf);
    }
    for (std::size_t i = 0; i < n; ++i) {
        buf = word;
        for (char32_t c : alphabet) {
            buf[i] = c;
            visit(buf);
        }
    }
    for (std::size_t i = 0; i <= n; ++i) {
        buf = word;
        buf.insert(buf.begin() + static_cast<std::ptrdiff_t>(i), U'\0');
        for (char32_t c : alphabet) {
            buf[i] = c;
            visit(buf);
        }
    }
}

std::unordered_set<std::string> edits1(const std::string& word, std::u32string_view alphabet) {
    const std::u32string w = unicode::decode(word);
    std::unordered_set<std::string> out;
    for_each_edit1(w, alphabet, [&](const std::u32string& e) {
        if (e != w) out.insert(unicode::encode(e));
    });
    return out;
}

namespace {

struct Best {
    const std::u32string* word = nullptr;
    std::uint64_t count = 0;

    void offer(const FrequencyLexicon& lexicon, const std::u32string& candidate) {
        const auto it = lexicon.entries().find(candidate);
        if (it == lexicon.entries().end()) return;
        if (word == nullptr || it->second > count || (it->second == count && it->first < *word)) {
            word = &it->first;
            count = it->second;
        }
    }
};

}  // namespace

std::string correct(const std::string& word, const FrequencyLexicon& lexicon, std::u32string_view alphabet,
                    Strategy strategy) {
    if (word.empty()) fail(ErrorCode::invalid_argument, "correct: empty word");
    const std::u32string w = unicode::decode(word);
    Best best;
    best.offer(lexicon, w);
    if (best.word != nullptr && strategy == Strategy::nearest_first) return word;

    std::vector<std::u32string> first;
    for_each_edit1(w, alphabet, [&](const std::u32string& e) {
        best.offer(lexicon, e);
        first.push_back(e);
    });
    if (best.word != nullptr && strategy == Strategy::nearest_first) return unicode::encode(*best.word);

    std::unordered_set<std::u32string> seen;
    for (const auto& e : first) {
        if (!seen.insert(e).second) continue;
        for_each_edit1(e, alphabet, [&](const std::u32string& e2) { best.offer(lexicon, e2); });
    }
    return best.word != nullptr ? unicode::encode(*best.word) : word;
}

}  // namespace mixsent::spell
