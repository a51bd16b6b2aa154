#pragma once

// Independent edit-distance oracles for the spelling corrector.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mixsent/rng.hpp"

namespace spell_oracle {

inline const std::string kLetters = "abcdefghijklmnopqrstuvwxyz";

// Straightforward enumeration over std::string, independent of for_each_edit1.
inline std::set<std::string> brute_edits1(const std::string& w) {
    std::set<std::string> out;
    for (std::size_t i = 0; i <= w.size(); ++i) {
        const std::string left = w.substr(0, i), right = w.substr(i);
        if (!right.empty()) out.insert(left + right.substr(1));
        if (right.size() > 1) out.insert(left + right[1] + right[0] + right.substr(2));
        for (char c : kLetters) {
            if (!right.empty()) out.insert(left + c + right.substr(1));
            out.insert(left + c + right);
        }
    }
    out.erase(w);
    return out;
}

// Unrestricted Damerau-Levenshtein (Lowrance-Wagner).
inline std::size_t damerau_levenshtein(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size(), inf = n + m;
    std::vector<std::vector<std::size_t>> d(n + 2, std::vector<std::size_t>(m + 2, 0));
    d[0][0] = inf;
    for (std::size_t i = 0; i <= n; ++i) {
        d[i + 1][0] = inf;
        d[i + 1][1] = i;
    }
    for (std::size_t j = 0; j <= m; ++j) {
        d[0][j + 1] = inf;
        d[1][j + 1] = j;
    }
    std::map<char, std::size_t> last_row;
    for (std::size_t i = 1; i <= n; ++i) {
        std::size_t last_match_col = 0;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t i1 = last_row.count(b[j - 1]) ? last_row[b[j - 1]] : 0;
            const std::size_t j1 = last_match_col;
            const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            if (cost == 0) last_match_col = j;
            d[i + 1][j + 1] = std::min({d[i][j] + cost, d[i + 1][j] + 1, d[i][j + 1] + 1,
                                        d[i1][j1] + (i - i1 - 1) + 1 + (j - j1 - 1)});
        }
        last_row[a[i - 1]] = i;
    }
    return d[n + 1][m + 1];
}

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline std::string perturb(std::string w, mixsent::Rng& rng) {
    const std::size_t edits = 1 + rng.below(3);
    for (std::size_t e = 0; e < edits; ++e) {
        const std::size_t kind = rng.below(4);
        const char c = kLetters[rng.below(26)];
        if (kind == 0 && w.size() > 1) {
            w.erase(rng.below(w.size()), 1);
        } else if (kind == 1 && w.size() > 1) {
            const std::size_t i = rng.below(w.size() - 1);
            std::swap(w[i], w[i + 1]);
        } else if (kind == 2) {
            w[rng.below(w.size())] = c;
        } else {
            w.insert(w.begin() + static_cast<std::ptrdiff_t>(rng.below(w.size() + 1)), c);
        }
    }
    return w;
}

// Nearest lexicon word by edit distance (at most 2), then highest count,
// then lexicographically smallest; the word itself when none is close.
inline std::string oracle_correct(const std::string& w, const std::vector<std::pair<std::string, std::uint64_t>>& entries) {
    std::size_t best_d = 3;
    std::uint64_t best_c = 0;
    std::string best = w;
    for (const auto& [cand, count] : entries) {
        if (cand.size() + 2 < w.size() || w.size() + 2 < cand.size()) continue;
        const std::size_t d = damerau_levenshtein(cand, w);
        if (d > 2) continue;
        if (d < best_d || (d == best_d && (count > best_c || (count == best_c && cand < best)))) {
            best_d = d;
            best_c = count;
            best = cand;
        }
    }
    return best;
}

}  // namespace spell_oracle
