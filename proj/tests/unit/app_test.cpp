#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mixsent/app.hpp"
#include "mixsent/error.hpp"

using namespace mixsent;
using namespace mixsent::app;
namespace fs = std::filesystem;

namespace {

const fs::path kResources = MIXSENT_RESOURCE_DIR;

RunConfig parse(const std::string& text, const fs::path& dir = kResources) {
    std::istringstream in(text);
    return read_run_config(in, dir, "test.conf");
}

}  // namespace

TEST_CASE("run config defaults") {
    const RunConfig c = parse("");
    CHECK(c.seed == 0);
    CHECK(c.pipeline.steps == text::default_steps());
    CHECK(c.train_fraction == 0.9);
    CHECK(c.min_count == 1);
    CHECK(c.model_sections.empty());
    CHECK(c.stack_mode == ensemble::StackMode::insample);
    CHECK(c.folds == 5);
    CHECK(c.meta.max_steps == 2000);
}

TEST_CASE("run config keys") {
    const RunConfig c = parse(
        "# comment\n"
        "seed = 42\n"
        "pipeline.steps=demojize,lowercase,spell_correct,stem\n"
        "pipeline.max_repeat=3\n"
        "pipeline.spell_strategy=max_frequency\n"
        "resources.emoji=emoji.tsv\n"
        "resources.lexicon=lexicon_en.tsv\n"
        "data.has_header=yes\n"
        "data.min_count=2\n"
        "data.train_fraction=0.8\n"
        "train.epochs=3\n"
        "train.batch_size=4\n"
        "train.lr=0.01\n"
        "train.gamma=0\n"
        "train.class_weights=1,2\n"
        "train.patience=0\n"
        "ensemble.mode=kfold\n"
        "ensemble.folds=3\n"
        "ensemble.meta_steps=10\n"
        "model1.kind=cnn\n"
        "model1.filters=4\n"
        "model2.kind=lstm\n");
    CHECK(c.seed == 42);
    CHECK(c.pipeline.steps == std::vector<std::string>{"demojize", "lowercase", "spell_correct", "stem"});
    CHECK(c.pipeline.max_repeat == 3);
    CHECK(c.pipeline.spell_strategy == spell::Strategy::max_frequency);
    REQUIRE(c.pipeline.emoji);
    CHECK(c.pipeline.emoji->size() > 100);
    REQUIRE(c.pipeline.lexicon);
    CHECK(c.load.has_header);
    CHECK(c.min_count == 2);
    CHECK(c.train_fraction == 0.8);
    CHECK(c.train.epochs == 3);
    CHECK(c.train.adam.lr == 0.01);
    CHECK(c.train.loss.gamma == 0.0);
    CHECK(c.train.loss.class_weights == std::vector<double>{1.0, 2.0});
    CHECK(c.train.patience == 0);
    CHECK(c.stack_mode == ensemble::StackMode::kfold);
    CHECK(c.folds == 3);
    CHECK(c.meta.max_steps == 10);
    REQUIRE(c.model_sections.size() == 2);
    CHECK(c.model_sections[0].at("kind") == "cnn");
    CHECK(c.model_sections[0].at("filters") == "4");
    CHECK(c.model_sections[1].at("kind") == "lstm");
    CHECK(parse("model.kind=attention\n").model_sections.size() == 1);
}

TEST_CASE("run config errors") {
    const auto fails_with = [](const std::string& text, const std::string& fragment) {
        try {
            parse(text);
        } catch (const Error& e) {
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
            return e.code();
        }
        FAIL("expected an error for: " << text);
        return ErrorCode::internal;
    };
    CHECK(fails_with("bogus=1\n", "unknown key 'bogus'") == ErrorCode::config);
    CHECK(fails_with("seed=1\nseed=2\n", "duplicate key") == ErrorCode::config);
    CHECK(fails_with("seed\n", "test.conf:1") == ErrorCode::config);
    CHECK(fails_with("seed=x\n", "'seed'") == ErrorCode::config);
    CHECK(fails_with("resources.emoji=missing.tsv\n", (kResources / "missing.tsv").string()) == ErrorCode::io);
    CHECK(fails_with("model.kind=lstm\nmodel.vocab_size=10\n", "derived from the data") == ErrorCode::config);
    CHECK(fails_with("model.kind=rnn\n", "unknown model kind") == ErrorCode::config);
    CHECK(fails_with("model.units=3\n", "missing 'kind'") == ErrorCode::config);
    CHECK(fails_with("model.kind=lstm\nmodel.colour=red\n", "unknown key 'colour'") == ErrorCode::config);
    CHECK(fails_with("model.kind=lstm\nmodel2.kind=cnn\n", "not both") == ErrorCode::config);
    CHECK(fails_with("model1.kind=lstm\nmodel3.kind=cnn\n", "without gaps") == ErrorCode::config);
    CHECK(fails_with("pipeline.steps=lowercase,shout\n", "shout") == ErrorCode::config);
    CHECK(fails_with("pipeline.steps=spell_correct\n", "lexicon") == ErrorCode::config);
    CHECK(fails_with("pipeline.stemmer=snowball\n", "snowball") == ErrorCode::config);
    CHECK(fails_with("data.train_fraction=1\n", "strictly between") == ErrorCode::config);
    CHECK(fails_with("ensemble.mode=vote\n", "vote") == ErrorCode::config);
    CHECK(fails_with("ensemble.folds=1\n", "at least 2") == ErrorCode::config);
    CHECK(fails_with("train.batch_size=0\n", "batch") == ErrorCode::config);
}

TEST_CASE("relative resource paths resolve against the config directory") {
    const fs::path dir = fs::temp_directory_path() / "mixsent_app_test";
    fs::create_directories(dir / "sub");
    {
        std::ofstream(dir / "sub" / "acr.tsv") << "brb\tbe right back\n";
        std::ofstream(dir / "run.conf") << "resources.acronyms=sub/acr.tsv\n";
    }
    const RunConfig c = load_run_config(dir / "run.conf");
    REQUIRE(c.pipeline.acronyms);
    CHECK(*c.pipeline.acronyms->find("brb") == "be right back");
    fs::remove_all(dir);
    CHECK_THROWS_AS(load_run_config(dir / "run.conf"), Error);
}
