#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mixsent/dataio.hpp"
#include "mixsent/error.hpp"
#include "mixsent/rng.hpp"

using namespace mixsent;
using namespace mixsent::data;

namespace {

LabeledDataset parse(const std::string& text, LoadOptions opts = {}) {
    std::istringstream in(text);
    return read_tsv(in, opts, "test.tsv");
}

LabeledDataset synthetic(std::size_t n) {
    LabeledDataset ds;
    ds.label_set = {"a"};
    for (std::size_t i = 0; i < n; ++i) ds.examples.push_back({std::to_string(i), "t", "a"});
    return ds;
}

TokenList words(const std::string& text) {
    TokenList out;
    std::istringstream in(text);
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

TEST_CASE("load_tsv reads id, label and text") {
    const auto ds = parse("7229\tneutral\tWOO hoo Cricket world cup starts today...\n");
    REQUIRE(ds.size() == 1);
    CHECK(ds.examples[0].id == "7229");
    CHECK(ds.examples[0].label == std::optional<std::string>("neutral"));
    CHECK(ds.examples[0].text == "WOO hoo Cricket world cup starts today...");
}

TEST_CASE("load_tsv header only and label order") {
    const auto empty = parse("id\tlabel\ttext\n", {true, false});
    CHECK(empty.size() == 0);
    CHECK(empty.label_set.empty());

    const auto ds = parse("1\tpositive\ta\n2\tnegative\tb\n3\tpositive\tc\n");
    CHECK(ds.label_set == std::vector<std::string>{"positive", "negative"});
    CHECK(ds.label_indices() == std::vector<std::size_t>{0, 1, 0});
}

TEST_CASE("load_tsv unlabeled rows and empty text") {
    const auto ds = parse("1\t_\thello\n2\t_\t\n");
    CHECK(ds.size() == 2);
    CHECK_FALSE(ds.examples[0].label.has_value());
    CHECK(ds.label_set.empty());
    CHECK(parse("1\t_\thello\n2\t_\t\n", {false, true}).size() == 1);
}

TEST_CASE("load_tsv errors name the line") {
    try {
        parse("1\tpos\tok\n2\tpos\n");
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("test.tsv:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("1\tpos\ta\n1\tneg\tb\n"), Error);
    CHECK_THROWS_AS(load_tsv("/nonexistent/file.tsv"), Error);
}

TEST_CASE("vocabulary ordering and cutoff") {
    const std::vector<TokenList> corpus{{"a", "a", "b"}};
    const auto v = Vocabulary::build(corpus, 1);
    CHECK(v.size() == 4);
    CHECK(v.index_of("<pad>") == kOovIndex);
    CHECK(v.token(0) == "<pad>");
    CHECK(v.token(1) == "<unk>");
    CHECK(v.index_of("a") == 2);
    CHECK(v.index_of("b") == 3);

    const auto cut = Vocabulary::build(corpus, 2);
    CHECK(cut.size() == 3);
    CHECK(cut.index_of("a") == 2);
    CHECK(cut.index_of("b") == kOovIndex);

    const std::vector<TokenList> tie{{"y", "x"}};
    const auto t = Vocabulary::build(tie, 1);
    CHECK(t.index_of("x") == 2);
    CHECK(t.index_of("y") == 3);

    CHECK_THROWS_AS(Vocabulary::build(corpus, 0), Error);
}

TEST_CASE("vocabulary is insensitive to example order") {
    Rng rng(1);
    const std::vector<std::string> pool{"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 50; ++trial) {
        LabeledDataset ds;
        for (int i = 0; i < 20; ++i) {
            std::string text;
            for (std::size_t k = 0, n = 1 + rng.below(5); k < n; ++k) text += pool[rng.below(pool.size())] + " ";
            ds.examples.push_back({std::to_string(i), text, std::nullopt});
        }
        const std::size_t min_count = 1 + rng.below(2);
        const auto before = build_vocabulary(ds, words, min_count);
        rng.shuffle(ds.examples);
        const auto after = build_vocabulary(ds, words, min_count);
        CHECK(after.tokens() == before.tokens());
        CHECK(after.counts() == before.counts());
    }
}

TEST_CASE("encode truncates, pads and maps unknowns") {
    const std::vector<TokenList> corpus{{"hi"}};
    const auto vocab = Vocabulary::build(corpus, 1);
    const TokenList hi{"hi"};
    CHECK(encode(hi, vocab, 4).indices == std::vector<std::int32_t>{2, 0, 0, 0});
    const TokenList unk{"zzz"};
    const auto e = encode(unk, vocab);
    CHECK(e.indices.size() == 25);
    CHECK(e.indices[0] == kOovIndex);
    CHECK(std::all_of(e.indices.begin() + 1, e.indices.end(), [](std::int32_t i) { return i == 0; }));

    TokenList many;
    for (int i = 0; i < 30; ++i) many.push_back("w" + std::to_string(i));
    const std::vector<TokenList> big{many};
    const auto v2 = Vocabulary::build(big, 1);
    const auto enc = encode(many, v2, 25);
    REQUIRE(enc.indices.size() == 25);
    for (std::size_t i = 0; i < 25; ++i) CHECK(enc.indices[i] == v2.index_of(many[i]));
}

TEST_CASE("decode(encode(t)) restores the known prefix") {
    Rng rng(2);
    const std::vector<TokenList> corpus{{"a", "b", "c", "d"}};
    const auto vocab = Vocabulary::build(corpus, 1);
    const std::vector<std::string> pool{"a", "b", "c", "d", "x", "y"};
    for (int trial = 0; trial < 200; ++trial) {
        TokenList t;
        for (std::size_t k = 0, n = rng.below(12); k < n; ++k) t.push_back(pool[rng.below(pool.size())]);
        const std::size_t max_len = 1 + rng.below(8);
        const auto back = decode(encode(t, vocab, max_len), vocab);
        REQUIRE(back.size() == std::min(t.size(), max_len));
        for (std::size_t i = 0; i < back.size(); ++i) {
            const bool known = vocab.index_of(t[i]) != kOovIndex;
            CHECK(back[i] == (known ? t[i] : std::string(kOovToken)));
        }
    }
}

TEST_CASE("split sizes and determinism") {
    const auto [train, val] = split(synthetic(14000), 0.9, 7);
    CHECK(train.size() == 12600);
    CHECK(val.size() == 1400);

    const auto a = split(synthetic(10), 0.9, 3);
    const auto b = split(synthetic(10), 0.9, 3);
    for (std::size_t i = 0; i < a.first.size(); ++i) CHECK(a.first.examples[i].id == b.first.examples[i].id);
    CHECK(a.second.examples[0].id == b.second.examples[0].id);

    const auto one = split(synthetic(1), 0.9, 1);
    CHECK(one.first.size() == 0);
    CHECK(one.second.size() == 1);

    CHECK_THROWS_AS(split(synthetic(5), 0.0, 1), Error);
    CHECK_THROWS_AS(split(synthetic(5), 1.0, 1), Error);
    CHECK_THROWS_AS(split(synthetic(0), 0.5, 1), Error);
}

TEST_CASE("split is an exact partition") {
    Rng rng(5);
    std::vector<std::size_t> sizes{1, 2, 3, 9, 10, 11, 9999, 10000};
    for (int i = 0; i < 150; ++i) sizes.push_back(1 + rng.below(10000));
    for (std::size_t n : sizes) {
        const double fraction = 0.05 + 0.9 * rng.uniform01();
        const auto [train, val] = split(synthetic(n), fraction, rng.next());
        REQUIRE(train.size() + val.size() == n);
        std::set<std::string> ids;
        for (const auto& ex : train.examples) ids.insert(ex.id);
        for (const auto& ex : val.examples) ids.insert(ex.id);
        CHECK(ids.size() == n);
    }
}

TEST_CASE("embedding loading") {
    const std::vector<TokenList> corpus{{"a", "a", "z"}};
    const auto vocab = Vocabulary::build(corpus, 1);  // a:2 z:3
    std::istringstream in("2 3\na 1 2 3\nq 4 5 6\n");
    const auto table = read_embeddings(in, vocab, 3, 11);
    CHECK(table.found == 1);
    CHECK(table.row(2)[0] == 1.0);
    CHECK(table.row(2)[2] == 3.0);
    for (double v : table.row(0)) CHECK(v == 0.0);
    for (double v : table.row(3)) CHECK(std::abs(v) <= 0.25);

    std::istringstream bad("a 1 2 3\nb 1 2\n");
    try {
        read_embeddings(bad, vocab, 3, 1);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("'b'") != std::string::npos);
    }
}

TEST_CASE("missing embedding rows stay within the init range") {
    std::vector<TokenList> corpus{{}};
    for (int i = 0; i < 100; ++i) corpus[0].push_back("w" + std::to_string(i));
    const auto vocab = Vocabulary::build(corpus, 1);
    std::istringstream empty("");
    const auto table = read_embeddings(empty, vocab, 10, 3);
    std::size_t sampled = 0;
    double lo = 1, hi = -1;
    for (std::size_t r = 1; r < vocab.size() && sampled < 1000; ++r) {
        for (double v : table.row(r)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            ++sampled;
        }
    }
    CHECK(sampled == 1000);
    CHECK(lo >= -0.25);
    CHECK(hi <= 0.25);
    CHECK(hi - lo > 0.4);
}
