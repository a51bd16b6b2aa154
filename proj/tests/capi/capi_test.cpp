#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <string>
#include <thread>
#include <vector>

#include "corpus_files.hpp"
#include "mixsent.h"

using corpus_files::ScratchDir;
using corpus_files::write_file;

namespace {

const std::string kResources = MIXSENT_RESOURCE_DIR;
const std::string kTestData = MIXSENT_TEST_DATA_DIR;

std::string take(char* s) {
    std::string out = s == nullptr ? "" : s;
    mxs_string_free(s);
    return out;
}

// A fast CNN on the keyword corpus, trained once for the predictor cases.
struct TrainedModel {
    ScratchDir dir{"mixsent_capi"};
    std::string config = (dir / "run.conf").string();
    std::string model = (dir / "model.mxs").string();
    mxs_status status = MXS_ERR_INTERNAL;

    TrainedModel() {
        write_file(dir / "train.tsv", corpus_files::keyword_tsv(60, {"pos", "neg"}, 3));
        write_file(dir / "val.tsv", corpus_files::keyword_tsv(20, {"pos", "neg"}, 4, "v"));
        const std::string val = (dir / "val.tsv").string();
        write_file(config,
                   "seed=5\n"
                   "pipeline.steps=lowercase\n"
                   "train.epochs=60\n"
                   "train.batch_size=8\n"
                   "train.lr=0.01\n"
                   "train.patience=0\n"
                   "model.kind=cnn\n"
                   "model.embed_dim=8\n"
                   "model.filters=4\n"
                   "model.dense=16\n"
                   "model.max_len=8\n");
        mxs_options opts;
        mxs_options_init(&opts);
        opts.config_path = config.c_str();
        opts.validation_path = val.c_str();
        status = mxs_train((dir / "train.tsv").string().c_str(), model.c_str(), &opts);
    }
};

const TrainedModel& trained() {
    static const TrainedModel m;
    return m;
}

}  // namespace

TEST_CASE("status names and version") {
    CHECK(std::string(mxs_version()).size() > 0);
    CHECK(std::string(mxs_status_name(MXS_OK)) == "ok");
    CHECK(std::string(mxs_status_name(MXS_ERR_IO)) == "i/o error");
    CHECK(std::string(mxs_status_name(static_cast<mxs_status>(99))) == "unknown status");
}

TEST_CASE("options defaults") {
    mxs_options o;
    std::memset(&o, 0xff, sizeof o);
    mxs_options_init(&o);
    CHECK(o.config_path == nullptr);
    CHECK(o.validation_path == nullptr);
    CHECK(o.has_seed == 0);
    CHECK(o.jobs == 1);
    CHECK(o.log == nullptr);
    mxs_options_init(nullptr);
}

TEST_CASE("null arguments are rejected") {
    CHECK(mxs_preprocess(nullptr, "x", nullptr) == MXS_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mxs_last_error()).find("input_tsv") != std::string::npos);
    CHECK(mxs_train("a", nullptr, nullptr) == MXS_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mxs_last_error()).find("model_out") != std::string::npos);
    CHECK(mxs_pipeline_create(nullptr, nullptr) == MXS_ERR_INVALID_ARGUMENT);
    CHECK(mxs_pipeline_run(nullptr, "x", nullptr) == MXS_ERR_INVALID_ARGUMENT);
    CHECK(mxs_predictor_predict(nullptr, "x", nullptr, nullptr) == MXS_ERR_INVALID_ARGUMENT);
    CHECK(mxs_predictor_num_classes(nullptr) == 0);
    CHECK(mxs_predictor_label(nullptr, 0) == nullptr);
    mxs_pipeline_free(nullptr);
    mxs_predictor_free(nullptr);
    mxs_string_free(nullptr);
}

TEST_CASE("missing files are i/o errors") {
    mxs_predictor* p = reinterpret_cast<mxs_predictor*>(0x1);
    CHECK(mxs_predictor_load("/nonexistent/model.mxs", nullptr, &p) == MXS_ERR_IO);
    CHECK(p == nullptr);
    CHECK(std::string(mxs_last_error()).find("/nonexistent/model.mxs") != std::string::npos);

    CHECK(mxs_preprocess("/nonexistent/in.tsv", "/tmp/never.tsv", nullptr) == MXS_ERR_IO);

    mxs_pipeline* pipe = nullptr;
    CHECK(mxs_pipeline_create("/nonexistent/run.conf", &pipe) == MXS_ERR_IO);
    CHECK(pipe == nullptr);
}

TEST_CASE("config errors carry the config status") {
    ScratchDir dir("mixsent_capi_cfg");
    write_file(dir / "bad.conf", "pipeline.stemmer=none\nnot_a_key=1\n");
    mxs_pipeline* pipe = nullptr;
    CHECK(mxs_pipeline_create((dir / "bad.conf").string().c_str(), &pipe) == MXS_ERR_CONFIG);
    CHECK(std::string(mxs_last_error()).find("not_a_key") != std::string::npos);

    write_file(dir / "missing.conf", "resources.emoji=nope.tsv\n");
    CHECK(mxs_pipeline_create((dir / "missing.conf").string().c_str(), &pipe) == MXS_ERR_IO);
    CHECK(std::string(mxs_last_error()).find((dir / "nope.tsv").string()) != std::string::npos);
}

TEST_CASE("pipeline reproduces the golden examples") {
    ScratchDir dir("mixsent_capi_pipe");
    write_file(dir / "run.conf", "resources.emoji=" + kResources + "/emoji.tsv\n" +
                                     "resources.contractions=" + kResources + "/contractions.tsv\n" +
                                     "resources.acronyms=" + kResources + "/acronyms.tsv\n");
    mxs_pipeline* pipe = nullptr;
    REQUIRE(mxs_pipeline_create((dir / "run.conf").string().c_str(), &pipe) == MXS_OK);

    const auto golden = corpus_files::lines(corpus_files::read_file(kTestData + "/golden_text.tsv"));
    std::size_t checked = 0;
    for (const auto& line : golden) {
        if (line.empty() || line[0] == '#') continue;
        const auto cols = corpus_files::split(line, '\t');
        REQUIRE(cols.size() == 2);
        char* out = nullptr;
        REQUIRE(mxs_pipeline_run(pipe, cols[0].c_str(), &out) == MXS_OK);
        CHECK_MESSAGE(take(out) == cols[1], cols[0]);
        ++checked;
    }
    CHECK(checked >= 5);
    mxs_pipeline_free(pipe);
}

TEST_CASE("pipeline without config uses empty tables") {
    mxs_pipeline* pipe = nullptr;
    REQUIRE(mxs_pipeline_create(nullptr, &pipe) == MXS_OK);
    char* out = nullptr;
    REQUIRE(mxs_pipeline_run(pipe, "Hellooooo @bob http://x.co", &out) == MXS_OK);
    CHECK(take(out) == "helloo USER URL");
    mxs_pipeline_free(pipe);
}

TEST_CASE("trained predictor") {
    const TrainedModel& m = trained();
    REQUIRE_MESSAGE(m.status == MXS_OK, mxs_last_error());

    mxs_predictor* p = nullptr;
    REQUIRE(mxs_predictor_load(m.model.c_str(), m.config.c_str(), &p) == MXS_OK);
    CHECK(mxs_predictor_num_classes(p) == 2);
    CHECK(std::string(mxs_predictor_label(p, 0)) == "pos");
    CHECK(std::string(mxs_predictor_label(p, 1)) == "neg");
    CHECK(mxs_predictor_label(p, 2) == nullptr);
    CHECK(mxs_predictor_is_ensemble(p) == 0);

    size_t label = 9;
    double probs[2] = {-1, -1};
    REQUIRE(mxs_predictor_predict(p, "f1 KW0_1 f2", &label, probs) == MXS_OK);
    CHECK(label == 0);
    CHECK(std::abs(probs[0] + probs[1] - 1.0) < 1e-9);
    REQUIRE(mxs_predictor_predict(p, "f3 f4 kw1_0", &label, probs) == MXS_OK);
    CHECK(label == 1);
    CHECK(mxs_predictor_predict(p, "", nullptr, probs) == MXS_OK);
    CHECK(std::abs(probs[0] + probs[1] - 1.0) < 1e-9);
    mxs_predictor_free(p);
}

TEST_CASE("concurrent prediction matches serial prediction") {
    const TrainedModel& m = trained();
    REQUIRE(m.status == MXS_OK);
    mxs_predictor* p = nullptr;
    REQUIRE(mxs_predictor_load(m.model.c_str(), m.config.c_str(), &p) == MXS_OK);

    const std::vector<std::string> texts = {"kw0_0 f1", "f2 kw1_1 f3", "f0 f0 kw0_1", "kw1_0", "f5 f4 f3 kw1_1"};
    std::vector<double> serial(texts.size() * 2);
    for (std::size_t i = 0; i < texts.size(); ++i) {
        REQUIRE(mxs_predictor_predict(p, texts[i].c_str(), nullptr, &serial[2 * i]) == MXS_OK);
    }
    std::vector<std::vector<double>> results(4, std::vector<double>(serial.size()));
    std::vector<int> failures(4, 0);
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            for (int rep = 0; rep < 25; ++rep) {
                for (std::size_t i = 0; i < texts.size(); ++i) {
                    if (mxs_predictor_predict(p, texts[i].c_str(), nullptr, &results[t][2 * i]) != MXS_OK) {
                        ++failures[t];
                    }
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    for (std::size_t t = 0; t < 4; ++t) {
        CHECK(failures[t] == 0);
        CHECK(results[t] == serial);
    }
    mxs_predictor_free(p);
}

TEST_CASE("errors are per thread") {
    CHECK(mxs_preprocess(nullptr, "x", nullptr) == MXS_ERR_INVALID_ARGUMENT);
    const std::string main_error = mxs_last_error();
    std::string worker_before;
    std::string worker_after;
    std::thread worker([&] {
        worker_before = mxs_last_error();
        mxs_predictor* p = nullptr;
        mxs_predictor_load("/nonexistent/x", nullptr, &p);
        worker_after = mxs_last_error();
    });
    worker.join();
    CHECK(worker_before.empty());
    CHECK(worker_after.find("/nonexistent/x") != std::string::npos);
    CHECK(std::string(mxs_last_error()) == main_error);
}

TEST_CASE("commands through the C API") {
    const TrainedModel& m = trained();
    REQUIRE(m.status == MXS_OK);
    ScratchDir dir("mixsent_capi_cmd");
    write_file(dir / "eval.tsv", corpus_files::keyword_tsv(20, {"pos", "neg"}, 11, "v"));

    std::vector<std::string> logged;
    mxs_options opts;
    mxs_options_init(&opts);
    opts.config_path = m.config.c_str();
    opts.log = [](const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); };
    opts.log_user_data = &logged;

    char* report = nullptr;
    const std::string report_out = (dir / "eval").string();
    REQUIRE(mxs_evaluate(m.model.c_str(), (dir / "eval.tsv").string().c_str(), report_out.c_str(), &opts, &report) ==
            MXS_OK);
    const std::string text = take(report);
    CHECK(text.find("macro_f1=") != std::string::npos);
    CHECK(corpus_files::read_file(report_out + ".report.txt") == text);
    CHECK(std::filesystem::exists(report_out + ".report.json"));

    const std::string out = (dir / "pred.tsv").string();
    REQUIRE(mxs_predict(m.model.c_str(), (dir / "eval.tsv").string().c_str(), out.c_str(), &opts) == MXS_OK);
    CHECK(corpus_files::lines(corpus_files::read_file(out)).size() == 20);

    write_file(dir / "odd.tsv", "a\tmaybe\tkw0_0\n");
    CHECK(mxs_evaluate(m.model.c_str(), (dir / "odd.tsv").string().c_str(), nullptr, &opts, &report) ==
          MXS_ERR_INVALID_ARGUMENT);
    CHECK(report == nullptr);
    CHECK(std::string(mxs_last_error()).find("maybe") != std::string::npos);
}
