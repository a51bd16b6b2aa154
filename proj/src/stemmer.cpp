#include "mixsent/stemmer.hpp"

#include <vector>

#include "mixsent/error.hpp"

namespace mixsent::text {

namespace {

bool is_vowel_letter(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// consonant flag per letter; 'y' is a consonant unless preceded by one
std::vector<bool> consonants(std::string_view w) {
    std::vector<bool> flags(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (is_vowel_letter(w[i])) flags[i] = false;
        else if (w[i] == 'y') flags[i] = i == 0 ? true : !flags[i - 1];
        else flags[i] = true;
    }
    return flags;
}

bool is_consonant(std::string_view w, std::size_t i) { return consonants(w.substr(0, i + 1))[i]; }

int measure(std::string_view stem) {
    const auto flags = consonants(stem);
    int m = 0;
    for (std::size_t i = 1; i < flags.size(); ++i) {
        if (!flags[i - 1] && flags[i]) ++m;
    }
    return m;
}

bool contains_vowel(std::string_view stem) {
    for (bool c : consonants(stem)) {
        if (!c) return true;
    }
    return false;
}

bool ends_double_consonant(std::string_view w) {
    return w.size() >= 2 && w[w.size() - 1] == w[w.size() - 2] && is_consonant(w, w.size() - 1);
}

bool ends_cvc(std::string_view w) {
    if (w.size() < 3) return false;
    const std::size_t n = w.size();
    const char last = w[n - 1];
    return is_consonant(w, n - 3) && !is_consonant(w, n - 2) && is_consonant(w, n - 1) && last != 'w' &&
           last != 'x' && last != 'y';
}

bool ends_with(std::string_view w, std::string_view suffix) {
    return w.size() >= suffix.size() && w.substr(w.size() - suffix.size()) == suffix;
}

enum class Cond { none, m_gt0, m_gt1, m_gt1_st };

struct Rule {
    std::string_view suffix;
    std::string_view replacement;
    Cond cond;
};

bool holds(Cond cond, std::string_view stem) {
    switch (cond) {
        case Cond::none: return true;
        case Cond::m_gt0: return measure(stem) > 0;
        case Cond::m_gt1: return measure(stem) > 1;
        case Cond::m_gt1_st: return measure(stem) > 1 && !stem.empty() && (stem.back() == 's' || stem.back() == 't');
    }
    return false;
}

// The first rule whose suffix matches decides; a failed condition stops the search.
std::string apply_rules(const std::string& w, std::initializer_list<Rule> rules) {
    for (const Rule& r : rules) {
        if (!ends_with(w, r.suffix)) continue;
        const std::string_view stem = std::string_view(w).substr(0, w.size() - r.suffix.size());
        if (!holds(r.cond, stem)) return w;
        return std::string(stem) + std::string(r.replacement);
    }
    return w;
}

std::string step1a(const std::string& w) {
    return apply_rules(w, {{"sses", "ss", Cond::none}, {"ies", "i", Cond::none}, {"ss", "ss", Cond::none},
                           {"s", "", Cond::none}});
}

std::string step1b(const std::string& w) {
    if (ends_with(w, "eed")) {
        const std::string stem = w.substr(0, w.size() - 3);
        return measure(stem) > 0 ? stem + "ee" : w;
    }
    std::string stem;
    bool removed = false;
    for (std::string_view suffix : {std::string_view("ed"), std::string_view("ing")}) {
        if (ends_with(w, suffix)) {
            stem = w.substr(0, w.size() - suffix.size());
            if (contains_vowel(stem)) {
                removed = true;
                break;
            }
        }
    }
    if (!removed) return w;
    if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz")) return stem + "e";
    if (ends_double_consonant(stem)) {
        const char last = stem.back();
        if (last == 'l' || last == 's' || last == 'z') return stem;
        stem.pop_back();
        return stem;
    }
    if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
    return stem;
}

std::string step1c(const std::string& w) {
    if (ends_with(w, "y")) {
        const std::string stem = w.substr(0, w.size() - 1);
        if (contains_vowel(stem)) return stem + "i";
    }
    return w;
}

std::string step2(const std::string& w) {
    return apply_rules(w, {
                              {"ational", "ate", Cond::m_gt0}, {"tional", "tion", Cond::m_gt0},
                              {"enci", "ence", Cond::m_gt0},   {"anci", "ance", Cond::m_gt0},
                              {"izer", "ize", Cond::m_gt0},    {"abli", "able", Cond::m_gt0},
                              {"alli", "al", Cond::m_gt0},     {"entli", "ent", Cond::m_gt0},
                              {"eli", "e", Cond::m_gt0},       {"ousli", "ous", Cond::m_gt0},
                              {"ization", "ize", Cond::m_gt0}, {"ation", "ate", Cond::m_gt0},
                              {"ator", "ate", Cond::m_gt0},    {"alism", "al", Cond::m_gt0},
                              {"iveness", "ive", Cond::m_gt0}, {"fulness", "ful", Cond::m_gt0},
                              {"ousness", "ous", Cond::m_gt0}, {"aliti", "al", Cond::m_gt0},
                              {"iviti", "ive", Cond::m_gt0},   {"biliti", "ble", Cond::m_gt0},
                          });
}

std::string step3(const std::string& w) {
    return apply_rules(w, {{"icate", "ic", Cond::m_gt0}, {"ative", "", Cond::m_gt0}, {"alize", "al", Cond::m_gt0},
                           {"iciti", "ic", Cond::m_gt0}, {"ical", "ic", Cond::m_gt0}, {"ful", "", Cond::m_gt0},
                           {"ness", "", Cond::m_gt0}});
}

std::string step4(const std::string& w) {
    return apply_rules(w, {{"al", "", Cond::m_gt1},    {"ance", "", Cond::m_gt1}, {"ence", "", Cond::m_gt1},
                           {"er", "", Cond::m_gt1},    {"ic", "", Cond::m_gt1},   {"able", "", Cond::m_gt1},
                           {"ible", "", Cond::m_gt1},  {"ant", "", Cond::m_gt1},  {"ement", "", Cond::m_gt1},
                           {"ment", "", Cond::m_gt1},  {"ent", "", Cond::m_gt1},  {"ion", "", Cond::m_gt1_st},
                           {"ou", "", Cond::m_gt1},    {"ism", "", Cond::m_gt1},  {"ate", "", Cond::m_gt1},
                           {"iti", "", Cond::m_gt1},   {"ous", "", Cond::m_gt1},  {"ive", "", Cond::m_gt1},
                           {"ize", "", Cond::m_gt1}});
}

std::string step5a(const std::string& w) {
    if (!ends_with(w, "e")) return w;
    const std::string stem = w.substr(0, w.size() - 1);
    const int m = measure(stem);
    if (m > 1 || (m == 1 && !ends_cvc(stem))) return stem;
    return w;
}

std::string step5b(const std::string& w) {
    if (ends_with(w, "ll") && measure(std::string_view(w).substr(0, w.size() - 1)) > 1) return w.substr(0, w.size() - 1);
    return w;
}

class PorterStemmer final : public Stemmer {
public:
    std::string stem(const std::string& token) const override { return stem_english(token); }
    std::string_view name() const override { return "english"; }
};

class IdentityStemmer final : public Stemmer {
public:
    std::string stem(const std::string& token) const override { return token; }
    std::string_view name() const override { return "none"; }
};

}  // namespace

std::string stem_english(const std::string& token) {
    if (token.empty()) return token;
    for (char c : token) {
        if (c < 'a' || c > 'z') return token;
    }
    return step5b(step5a(step4(step3(step2(step1c(step1b(step1a(token))))))));
}

std::unique_ptr<Stemmer> make_stemmer(const std::string& name) {
    if (name == "english") return std::make_unique<PorterStemmer>();
    if (name == "none") return std::make_unique<IdentityStemmer>();
    fail(ErrorCode::config, "stemmer plug-in '" + name + "' is not available (built-in: english, none)");
}

}  // namespace mixsent::text
