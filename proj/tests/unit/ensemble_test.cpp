#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "mixsent/ensemble.hpp"
#include "mixsent/error.hpp"
#include "stub_bases.hpp"
#include "synthetic.hpp"

using namespace mixsent;
using namespace mixsent::ensemble;
using models::Kind;
using namespace stub_bases;

namespace {

// Rows whose first token is the row number, so membership is traceable.
EncodedSet numbered(std::size_t n) {
    EncodedSet s;
    s.max_len = 3;
    for (std::size_t i = 0; i < n; ++i) {
        s.indices.insert(s.indices.end(), {static_cast<std::int32_t>(i + 2), 0, 0});
        s.labels.push_back(i % 2);
    }
    return s;
}

std::size_t argmax(std::span<const double> row) {
    return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

models::TrainConfig quick_train(std::size_t epochs) {
    models::TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 8;
    t.adam.lr = 0.01;
    t.patience = 0;
    return t;
}

}  // namespace

TEST_CASE("meta feature length is T times C") {
    for (std::size_t C : {2, 3, 5}) {
        for (std::size_t T : {1, 2, 3}) {
            synthetic::Spec spec;
            spec.classes = C;
            spec.examples = 10;
            const auto data = synthetic::encoded(spec, 1);
            std::vector<BasePtr> bases;
            for (std::size_t t = 0; t < T; ++t) bases.push_back(std::make_shared<NoiseBase>(C, t));
            const auto meta = construct_meta_dataset(bases, data);
            CHECK(meta.feature_length() == T * C);
            CHECK(meta.features.size() == data.size() * T * C);
            for (std::size_t i = 0; i < meta.size(); ++i) {
                for (std::size_t t = 0; t < T; ++t) {
                    const auto block = meta.row(i).subspan(t * C, C);
                    CHECK(std::accumulate(block.begin(), block.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-6));
                }
                CHECK(meta.fold[i] == kInSample);
            }
        }
    }
}

TEST_CASE("uniform base gives 1/C features") {
    synthetic::Spec spec;
    spec.classes = 3;
    const auto data = synthetic::encoded(spec, 2);
    const std::vector<BasePtr> bases{std::make_shared<UniformBase>(3)};
    for (double f : construct_meta_dataset(bases, data).features) CHECK(f == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("folds partition the rows evenly") {
    const auto fold = assign_folds(103, 5, 9);
    std::vector<std::size_t> sizes(5, 0);
    for (std::size_t f : fold) ++sizes.at(f);
    CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
    CHECK(assign_folds(103, 5, 9) == fold);
    CHECK_THROWS_AS(assign_folds(10, 1, 0), Error);
    CHECK_THROWS_AS(assign_folds(3, 4, 0), Error);
}

TEST_CASE("kfold features come from models that never saw the row") {
    const auto data = numbered(100);
    std::map<std::size_t, std::set<std::int32_t>> trained_on;
    const auto meta = construct_meta_dataset_kfold(data, 5, 17, [&](const EncodedSet& train, std::size_t fold) {
        for (std::size_t i = 0; i < train.size(); ++i) trained_on[fold].insert(train.row(i)[0]);
        return std::vector<BasePtr>{std::make_shared<MemoryBase>(train), std::make_shared<UniformBase>(2)};
    });
    REQUIRE(meta.size() == 100);
    CHECK(meta.feature_length() == 4);
    CHECK(meta.labels == data.labels);
    for (std::size_t i = 0; i < 100; ++i) {
        REQUIRE(meta.fold[i] < 5);
        CHECK(trained_on[meta.fold[i]].count(data.row(i)[0]) == 0);
        CHECK(trained_on[meta.fold[i]].size() >= 79);
        CHECK(meta.row(i)[0] == 0.0);  // the memory base never recognizes it
        CHECK(meta.row(i)[1] == 1.0);
    }

    // The same bases in sample do see every row.
    const std::vector<BasePtr> insample{std::make_shared<MemoryBase>(data), std::make_shared<UniformBase>(2)};
    for (std::size_t i = 0; i < 100; ++i) CHECK(construct_meta_dataset(insample, data).row(i)[0] == 1.0);
}

TEST_CASE("an oracle base gives perfect meta training accuracy") {
    synthetic::Spec spec;
    spec.classes = 3;
    spec.examples = 60;
    const auto data = synthetic::encoded(spec, 3);
    const std::vector<BasePtr> bases{std::make_shared<NoiseBase>(3, 1), std::make_shared<OracleBase>(spec),
                                     std::make_shared<UniformBase>(3)};
    const auto meta = construct_meta_dataset(bases, data);
    const auto H = fit_meta(meta, {});
    const auto probs = H.predict_proba(meta.features);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < meta.size(); ++i) correct += argmax({probs.data() + i * 3, 3}) == meta.labels[i];
    CHECK(correct == meta.size());
}

TEST_CASE("uniform features reach the bias-only optimum") {
    synthetic::Spec spec;
    spec.classes = 3;
    spec.examples = 40;
    auto data = synthetic::encoded(spec, 4);
    // Skew the labels: 24 / 10 / 6.
    for (std::size_t i = 0; i < data.size(); ++i) data.labels[i] = i < 24 ? 0 : (i < 34 ? 1 : 2);
    const std::vector<BasePtr> bases{std::make_shared<UniformBase>(3), std::make_shared<UniformBase>(3)};
    const auto meta = construct_meta_dataset(bases, data);
    const auto H = fit_meta(meta, {});
    const auto probs = H.predict_proba(meta.row(0));
    // Cross-entropy with a constant prediction is minimized by the class frequencies.
    CHECK(probs[0] == doctest::Approx(24.0 / 40.0).epsilon(1e-3));
    CHECK(probs[1] == doctest::Approx(10.0 / 40.0).epsilon(1e-3));
    CHECK(probs[2] == doctest::Approx(6.0 / 40.0).epsilon(1e-3));
    for (std::size_t i = 0; i < meta.size(); ++i) {
        const auto p = H.predict_proba(meta.row(i));
        CHECK(argmax(p) == 0);
    }
}

TEST_CASE("meta fitting is deterministic and rejects malformed input") {
    synthetic::Spec spec;
    const auto data = synthetic::encoded(spec, 5);
    const std::vector<BasePtr> bases{std::make_shared<NoiseBase>(2, 3), std::make_shared<NoiseBase>(2, 4)};
    const auto meta = construct_meta_dataset(bases, data);
    MetaConfig cfg;
    cfg.seed = 11;
    cfg.max_steps = 200;
    const auto a = fit_meta(meta, cfg);
    const auto b = fit_meta(meta, cfg);
    CHECK(a.weight == b.weight);
    CHECK(a.bias == b.bias);
    CHECK(a.steps == 200);

    MetaDataset broken = meta;
    broken.features.pop_back();
    CHECK_THROWS_AS(fit_meta(broken, cfg), Error);
    CHECK_THROWS_AS(a.logits(std::vector<double>(5, 0.1)), Error);
    CHECK_THROWS_AS(fit_meta(MetaDataset{}, cfg), Error);
}

TEST_CASE("block identity meta reproduces a single base's argmax") {
    synthetic::Spec spec;
    spec.classes = 4;
    const auto data = synthetic::encoded(spec, 6);
    StackingEnsemble e;
    e.bases = {std::make_shared<NoiseBase>(4, 8)};
    e.meta = MetaClassifier::block_identity(1, 4);
    const auto base = e.bases[0]->predict_proba(data);
    const auto pred = e.predict(data);
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(pred.labels[i] == argmax({base.data() + i * 4, 4}));
        double total = 0.0;
        for (std::size_t c = 0; c < 4; ++c) total += pred.probabilities[i * 4 + c];
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("labels are invariant under monotone logit rescaling and ties go low") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> logits(12);
        for (auto& v : logits) v = rng.normal() * 3.0;
        const auto base = predict_from_logits(logits, 3);
        std::vector<double> scaled(logits.size()), cubed(logits.size());
        const double a = 0.01 + rng.uniform01() * 10.0, b = rng.normal() * 5.0;
        for (std::size_t k = 0; k < logits.size(); ++k) {
            scaled[k] = a * logits[k] + b;
            cubed[k] = logits[k] * logits[k] * logits[k];
        }
        CHECK(predict_from_logits(scaled, 3).labels == base.labels);
        CHECK(predict_from_logits(cubed, 3).labels == base.labels);
    }
    const std::vector<double> tied{1.0, 2.0, 2.0, 0.5, 0.5, 0.5};
    CHECK(predict_from_logits(tied, 3).labels == std::vector<std::size_t>{1, 0});
}

TEST_CASE("removing a base changes only feature blocks") {
    synthetic::Spec spec;
    spec.classes = 3;
    const auto data = synthetic::encoded(spec, 8);
    const std::vector<BasePtr> three{std::make_shared<NoiseBase>(3, 1), std::make_shared<NoiseBase>(3, 2),
                                     std::make_shared<NoiseBase>(3, 3)};
    const std::vector<BasePtr> two{three[0], three[2]};
    const auto full = construct_meta_dataset(three, data);
    const auto reduced = construct_meta_dataset(two, data);
    CHECK(full.labels == reduced.labels);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto f = full.row(i), r = reduced.row(i);
        CHECK(std::equal(r.begin(), r.begin() + 3, f.begin()));
        CHECK(std::equal(r.begin() + 3, r.end(), f.begin() + 6));
    }
}

TEST_CASE("ensemble with an oracle base generalizes across seeds") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        synthetic::Spec spec;
        spec.classes = 3;
        spec.examples = 90;
        const auto train = synthetic::encoded(spec, 100 + seed);
        spec.examples = 60;
        const auto val = synthetic::encoded(spec, 200 + seed);
        StackingEnsemble e;
        e.bases = {std::make_shared<NoiseBase>(3, seed), std::make_shared<OracleBase>(spec),
                   std::make_shared<UniformBase>(3)};
        MetaConfig cfg;
        cfg.seed = seed;
        e.meta = fit_meta(construct_meta_dataset(e.bases, train), cfg);
        const auto pred = e.predict(val);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < val.size(); ++i) correct += pred.labels[i] == val.labels[i];
        CHECK(static_cast<double>(correct) / static_cast<double>(val.size()) >= 0.98);
    }
}

TEST_CASE("fit_base trains one model per spec, independent of jobs") {
    const synthetic::Spec spec{24, 2, 2, 4, 6, 3};
    const auto data = synthetic::encoded(spec, 1);
    std::vector<BaseSpec> specs;
    for (Kind k : {Kind::cnn, Kind::lstm, Kind::attention}) {
        specs.push_back({synthetic::small_config(k, synthetic::vocab_size(spec), 2, spec.max_len), quick_train(3)});
    }
    const auto serial = fit_base(data, data, specs, 5, 1);
    const auto parallel = fit_base(data, data, specs, 5, 3);
    REQUIRE(serial.size() == 3);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(serial[t].classifier->model().config().kind == specs[t].model.kind);
        CHECK(serial[t].classifier->predict_proba(data) == parallel[t].classifier->predict_proba(data));
    }

    specs[1].train.batch_size = 0;
    CHECK_THROWS_WITH_AS(fit_base(data, data, specs, 5, 2), doctest::Contains("base model 2"), Error);
    CHECK_THROWS_AS(fit_base(data, data, {}, 5, 1), Error);
    auto mismatched = specs;
    mismatched[0].model.num_classes = 3;
    CHECK_THROWS_AS(fit_base(data, data, mismatched, 5, 1), Error);
}

TEST_CASE("insample and kfold stacking differ only in provenance") {
    const synthetic::Spec spec{30, 2, 2, 4, 6, 3};
    const auto data = synthetic::encoded(spec, 2);
    const std::vector<BaseSpec> specs{
        {synthetic::small_config(Kind::lstm, synthetic::vocab_size(spec), 2, spec.max_len), quick_train(2)}};
    StackingConfig cfg;
    cfg.meta.max_steps = 50;
    cfg.folds = 3;
    const auto in = fit_stacking(data, data, specs, cfg);
    cfg.mode = StackMode::kfold;
    const auto kf = fit_stacking(data, data, specs, cfg);
    CHECK(in.meta_data.feature_length() == 2);
    CHECK(kf.meta_data.feature_length() == 2);
    CHECK(in.meta_data.labels == kf.meta_data.labels);
    CHECK(std::all_of(in.meta_data.fold.begin(), in.meta_data.fold.end(), [](auto f) { return f == kInSample; }));
    CHECK(std::all_of(kf.meta_data.fold.begin(), kf.meta_data.fold.end(), [](auto f) { return f < 3; }));
    CHECK(in.ensemble.bases.size() == 1);
    CHECK(kf.ensemble.bases.size() == 1);
    CHECK(kf.ensemble.folds == 3);
    CHECK(in.ensemble.predict(data).labels.size() == data.size());
    CHECK(kf.ensemble.predict(data).labels.size() == data.size());
}

TEST_CASE("ensemble files round-trip bit-identically") {
    const synthetic::Spec spec{16, 3, 2, 4, 7, 3};
    const auto data = synthetic::encoded(spec, 3);
    const std::size_t V = synthetic::vocab_size(spec);
    std::vector<BaseSpec> specs;
    for (Kind k : {Kind::cnn, Kind::lstm, Kind::attention}) {
        specs.push_back({synthetic::small_config(k, V, 3, spec.max_len), quick_train(1)});
    }
    StackingConfig cfg;
    cfg.meta.max_steps = 100;
    auto fitted = fit_stacking(data, data, specs, cfg);
    std::vector<std::string> tokens{"<pad>", "<unk>"};
    std::vector<std::uint64_t> counts{0, 0};
    for (std::size_t i = 2; i < V; ++i) {
        tokens.push_back("w" + std::to_string(i));
        counts.push_back(50 - i);
    }
    EnsembleBundle bundle{std::move(fitted.ensemble), {"a", "b", "c"}, data::Vocabulary::from_entries(tokens, counts)};
    std::stringstream buf;
    write_ensemble(buf, bundle);
    const std::string bytes = buf.str();
    const auto back = read_ensemble(buf);
    CHECK(back.labels == bundle.labels);
    CHECK(back.vocab.tokens() == bundle.vocab.tokens());
    CHECK(back.ensemble.bases.size() == 3);
    const auto p0 = bundle.ensemble.predict(data), p1 = back.ensemble.predict(data);
    CHECK(p0.probabilities == p1.probabilities);
    CHECK(p0.labels == p1.labels);
    std::stringstream again;
    write_ensemble(again, back);
    CHECK(again.str() == bytes);

    std::string v2 = bytes;
    v2[4] = 2;
    std::istringstream in2(v2);
    CHECK_THROWS_WITH_AS(read_ensemble(in2), doctest::Contains("version 2"), Error);
    std::string magic = bytes;
    magic[3] = 'S';
    std::istringstream in3(magic);
    CHECK_THROWS_AS(read_ensemble(in3), Error);
    std::istringstream in4(bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_WITH_AS(read_ensemble(in4), doctest::Contains("truncated"), Error);

    EnsembleBundle stub{{}, {"a", "b", "c"}, bundle.vocab};
    stub.ensemble.bases = {std::make_shared<UniformBase>(3)};
    stub.ensemble.meta = MetaClassifier::block_identity(1, 3);
    std::stringstream sink;
    CHECK_THROWS_AS(write_ensemble(sink, stub), Error);
}
