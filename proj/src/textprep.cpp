#include "mixsent/textprep.hpp"

#include <algorithm>
#include <fstream>
#include <istream>

#include "mixsent/error.hpp"
#include "mixsent/unicode.hpp"

namespace mixsent::text {

namespace u = unicode;

void ResourceTable::add(const std::string& key, const std::string& replacement) {
    if (key.empty()) fail(ErrorCode::invalid_argument, name_ + ": empty key");
    const std::string stored = fold_case_ ? u::to_lower(key) : key;
    if (!entries_.emplace(stored, replacement).second) {
        fail(ErrorCode::invalid_argument, name_ + ": duplicate key '" + key + "'");
    }
    const std::u32string cps = u::decode(stored);
    max_key_length_ = std::max(max_key_length_, cps.size());
    first_code_points_.insert(cps.front());
}

const std::string* ResourceTable::find(std::string_view key) const {
    const auto it = fold_case_ ? entries_.find(u::to_lower(key)) : entries_.find(std::string(key));
    return it == entries_.end() ? nullptr : &it->second;
}

namespace {

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return in;
}

bool is_sentinel(std::string_view token) { return token == kUrlToken || token == kUserToken; }

bool ascii_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool handle_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (s.size() - pos < prefix.size()) return false;
    for (std::size_t k = 0; k < prefix.size(); ++k) {
        char c = s[pos + k];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != prefix[k]) return false;
    }
    return true;
}

bool is_skin_tone(char32_t c) { return c >= 0x1F3FB && c <= 0x1F3FF; }

// Applies fn to each maximal non-whitespace run, copying whitespace through.
template <typename Fn>
std::string map_tokens(std::string_view text, Fn&& fn) {
    const std::u32string cps = u::decode(text);
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < cps.size()) {
        if (u::is_space(cps[i])) {
            u::append(out, cps[i++]);
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && !u::is_space(cps[j])) ++j;
        out += fn(std::u32string_view(cps).substr(i, j - i));
        i = j;
    }
    return out;
}

std::string expand_with(std::string_view text, const ResourceTable& table) {
    if (table.size() == 0) return std::string(text);
    return map_tokens(text, [&](std::u32string_view token) {
        std::size_t lead = 0;
        while (lead < token.size() && u::is_punctuation(token[lead])) ++lead;
        std::size_t end = token.size();
        while (end > lead && u::is_punctuation(token[end - 1])) --end;
        if (end == lead) return u::encode(token);
        std::u32string core(token.substr(lead, end - lead));
        for (char32_t& c : core) {
            if (c == 0x2019 || c == 0x2018) c = U'\'';
        }
        const std::string* hit = table.find(u::encode(core));
        if (hit == nullptr) return u::encode(token);
        return u::encode(token.substr(0, lead)) + *hit + u::encode(token.substr(end));
    });
}

std::string join(const TokenList& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += tokens[i];
    }
    return out;
}

}  // namespace

ResourceTable read_table(std::istream& in, const std::string& name, bool case_insensitive, const std::string& source) {
    ResourceTable table(name, case_insensitive);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        const auto where = source + ":" + std::to_string(line_no);
        if (tab == std::string::npos || tab == 0) fail(ErrorCode::format, where + ": expected key<TAB>replacement");
        try {
            table.add(line.substr(0, tab), line.substr(tab + 1));
        } catch (const Error& e) {
            fail(ErrorCode::format, where + ": " + e.what());
        }
    }
    return table;
}

ResourceTable load_table(const std::filesystem::path& path, const std::string& name, bool case_insensitive) {
    auto in = open_input(path);
    return read_table(in, name, case_insensitive, path.string());
}

void StopList::add(const std::string& word) {
    if (word.empty()) fail(ErrorCode::invalid_argument, "stoplist: empty word");
    if (u::to_lower(word) != word) fail(ErrorCode::invalid_argument, "stoplist: '" + word + "' is not lowercase");
    words_.insert(word);
}

StopList read_stoplist(std::istream& in, const std::string& source) {
    StopList stops;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        while (!line.empty() && ascii_space(line.back())) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        try {
            stops.add(line);
        } catch (const Error& e) {
            fail(ErrorCode::format, source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return stops;
}

StopList load_stoplist(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_stoplist(in, path.string());
}

std::string demojize(std::string_view text, const ResourceTable& emoji, bool keep_unknown) {
    const std::u32string cps = u::decode(text);
    std::u32string out;
    out.reserve(cps.size());
    bool need_space = false;
    const auto separated = [&] { return out.empty() || u::is_space(out.back()); };

    std::size_t i = 0;
    while (i < cps.size()) {
        const char32_t c = cps[i];
        std::size_t matched = 0;
        const std::string* name = nullptr;
        if (emoji.may_start_key(c)) {
            for (std::size_t len = std::min(emoji.max_key_length(), cps.size() - i); len > 0; --len) {
                name = emoji.find(u::encode(std::u32string_view(cps).substr(i, len)));
                if (name != nullptr) {
                    matched = len;
                    break;
                }
            }
        }
        if (name != nullptr) {
            if (!separated()) out.push_back(U' ');
            out += u::decode(*name);
            need_space = true;
            i += matched;
            while (i < cps.size() && (cps[i] == 0xFE0F || is_skin_tone(cps[i]))) ++i;
            continue;
        }
        if (!keep_unknown && u::is_emoji_part(c)) {
            if (!separated()) need_space = true;
            ++i;
            continue;
        }
        if (need_space && !u::is_space(c)) out.push_back(U' ');
        need_space = false;
        out.push_back(c);
        ++i;
    }
    return u::encode(out);
}

std::string replace_patterns(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool token_start = true;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (ascii_space(c)) {
            out += c;
            ++i;
            token_start = true;
            continue;
        }
        if (starts_with_ci(s, i, "http") || (token_start && starts_with_ci(s, i, "www."))) {
            while (i < s.size() && !ascii_space(s[i])) ++i;
            out += kUrlToken;
            token_start = false;
            continue;
        }
        if (token_start && c == '@') {
            std::size_t j = i + 1;
            while (j < s.size() && handle_char(s[j])) ++j;
            if (j > i + 1) {
                out += kUserToken;
                token_start = false;
            }
            i = j;
            continue;
        }
        if (token_start && c == '#') {
            ++i;
            continue;
        }
        out += c;
        token_start = false;
        ++i;
    }
    return out;
}

std::string expand_abbreviations(std::string_view text, const ResourceTable& contractions,
                                 const ResourceTable& acronyms) {
    return expand_with(expand_with(text, contractions), acronyms);
}

std::string collapse_elongation(std::string_view text, std::size_t max_repeat) {
    if (max_repeat < 1) fail(ErrorCode::invalid_argument, "collapse_elongation: max_repeat must be at least 1");
    std::string out;
    out.reserve(text.size());
    char32_t prev = 0;
    std::size_t run = 0;
    for (char32_t c : u::decode(text)) {
        run = (run > 0 && c == prev) ? run + 1 : 1;
        prev = c;
        if (run <= max_repeat) u::append(out, c);
    }
    return out;
}

std::string remove_punctuation(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char32_t c : u::decode(text)) {
        if (u::is_punctuation(c)) continue;
        if (u::is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        u::append(out, c);
    }
    return out;
}

std::string lowercase(std::string_view text) {
    return map_tokens(text, [](std::u32string_view token) {
        std::string word = u::encode(token);
        return is_sentinel(word) ? word : u::to_lower(word);
    });
}

TokenList tokenize(std::string_view text) {
    TokenList tokens;
    std::string current;
    for (char32_t c : u::decode(text)) {
        if (u::is_space(c)) {
            if (!current.empty()) tokens.push_back(std::move(current));
            current.clear();
        } else {
            u::append(current, c);
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

TokenList remove_stopwords(const TokenList& tokens, const StopList& stops) {
    TokenList out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (!stops.contains(t)) out.push_back(t);
    }
    return out;
}

TokenList spell_correct(const TokenList& tokens, const spell::FrequencyLexicon& lexicon, std::u32string_view alphabet,
                        spell::Strategy strategy) {
    TokenList out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        const std::u32string cps = u::decode(t);
        const bool eligible = !is_sentinel(t) && cps.size() >= kMinSpellLength &&
                              std::all_of(cps.begin(), cps.end(), [](char32_t c) { return u::is_alpha(c); });
        out.push_back(eligible ? spell::correct(t, lexicon, alphabet, strategy) : t);
    }
    return out;
}

const std::vector<std::string>& registered_steps() {
    static const std::vector<std::string> steps{"demojize",        "replace_patterns", "expand_abbreviations",
                                                "collapse_elongation", "remove_punctuation", "lowercase",
                                                "spell_correct",   "remove_stopwords", "stem"};
    return steps;
}

const std::vector<std::string>& default_steps() {
    static const std::vector<std::string> steps(registered_steps().begin(), registered_steps().begin() + 6);
    return steps;
}

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {
    const auto& known = registered_steps();
    for (const auto& step : config_.steps) {
        if (std::find(known.begin(), known.end(), step) == known.end()) {
            fail(ErrorCode::config, "unknown pipeline step '" + step + "'");
        }
        if (step == "spell_correct" && !config_.lexicon) {
            fail(ErrorCode::config, "pipeline step spell_correct needs a frequency lexicon");
        }
        if (step == "remove_stopwords" && !config_.stopwords) {
            fail(ErrorCode::config, "pipeline step remove_stopwords needs a stop list");
        }
    }
    if (config_.max_repeat < 1) fail(ErrorCode::config, "pipeline max_repeat must be at least 1");
    if (config_.alphabet.empty()) fail(ErrorCode::config, "pipeline spelling alphabet is empty");
    stemmer_ = make_stemmer(config_.stemmer);
    if (!config_.emoji) config_.emoji = std::make_shared<ResourceTable>("emoji", false);
    if (!config_.contractions) config_.contractions = std::make_shared<ResourceTable>("contractions", true);
    if (!config_.acronyms) config_.acronyms = std::make_shared<ResourceTable>("acronyms", true);
}

TokenList Pipeline::run(std::string_view input) const {
    std::string text = u::nfc(input);
    for (const auto& step : config_.steps) {
        if (step == "demojize") {
            text = demojize(text, *config_.emoji, config_.keep_unknown_emoji);
        } else if (step == "replace_patterns") {
            text = replace_patterns(text);
        } else if (step == "expand_abbreviations") {
            text = expand_abbreviations(text, *config_.contractions, *config_.acronyms);
        } else if (step == "collapse_elongation") {
            text = collapse_elongation(text, config_.max_repeat);
        } else if (step == "remove_punctuation") {
            text = remove_punctuation(text);
        } else if (step == "lowercase") {
            text = lowercase(text);
        } else if (step == "spell_correct") {
            text = join(spell_correct(tokenize(text), *config_.lexicon, config_.alphabet, config_.spell_strategy));
        } else if (step == "remove_stopwords") {
            text = join(remove_stopwords(tokenize(text), *config_.stopwords));
        } else if (step == "stem") {
            TokenList tokens = tokenize(text);
            for (auto& t : tokens) t = stemmer_->stem(t);
            text = join(tokens);
        }
    }
    return tokenize(text);
}

TokenList run_pipeline(std::string_view text, const PipelineConfig& config) { return Pipeline(config).run(text); }

}  // namespace mixsent::text
