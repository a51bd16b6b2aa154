#pragma once

// Scratch directories and small TSV corpora for tests that drive the
// library through files. Uses only the standard library.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace corpus_files {

namespace fs = std::filesystem;

class ScratchDir {
public:
    explicit ScratchDir(const std::string& name) {
        path_ = fs::temp_directory_path() / (name + "_" + std::to_string(std::random_device{}()));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Keyword corpus: every text holds one "kw<c>_<j>" word of its class among
// "f<j>" fillers. Labels cycle through `labels`.
inline std::string keyword_tsv(std::size_t examples, const std::vector<std::string>& labels, std::uint64_t seed,
                               const std::string& id_prefix = "ex") {
    std::mt19937_64 rng(seed);
    const auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    std::ostringstream out;
    for (std::size_t i = 0; i < examples; ++i) {
        const std::size_t y = i % labels.size();
        const std::size_t n = 3 + below(4);
        std::vector<std::string> words(n);
        for (auto& w : words) w = "f" + std::to_string(below(6));
        words[below(n)] = "kw" + std::to_string(y) + "_" + std::to_string(below(2));
        out << id_prefix << i << '\t' << labels[y] << '\t';
        for (std::size_t k = 0; k < n; ++k) out << (k ? " " : "") << words[k];
        out << '\n';
    }
    return out.str();
}

inline std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace corpus_files
