// Command-line front end. Talks to the library only through mixsent.h.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mixsent.h"

namespace {

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::string out;
    std::string val;
    bool quiet = false;
};

void print_line(const char* message, void*) {
    std::printf("%s\n", message);
    std::fflush(stdout);
}

mxs_options to_options(const Flags& f) {
    mxs_options o;
    mxs_options_init(&o);
    o.config_path = f.config.empty() ? nullptr : f.config.c_str();
    o.validation_path = f.val.empty() ? nullptr : f.val.c_str();
    if (f.seed) {
        o.has_seed = 1;
        o.seed = *f.seed;
    }
    o.jobs = f.jobs;
    if (!f.quiet) o.log = print_line;
    return o;
}

int report(mxs_status status) {
    if (status == MXS_OK) return EXIT_SUCCESS;
    std::fprintf(stderr, "mixsent: %s: %s\n", mxs_status_name(status), mxs_last_error());
    return static_cast<int>(status);
}

void common_flags(CLI::App* cmd, Flags& f, bool config_required) {
    auto* c = cmd->add_option("--config", f.config, "run config (key=value file)");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    cmd->add_option("--seed", f.seed, "seed, overrides the config");
    cmd->add_flag("-q,--quiet", f.quiet, "no progress output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Normalize code-mixed social-media text, train neural classifiers and stacking ensembles."};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(mxs_version()));

    Flags f;
    std::string input, model;

    auto* pre = app.add_subcommand("preprocess", "normalize the text column of a TSV file");
    pre->add_option("input", input, "id<TAB>label<TAB>text file")->required();
    pre->add_option("--out", f.out, "output TSV")->required();
    common_flags(pre, f, false);

    auto* train = app.add_subcommand("train", "train one model");
    train->add_option("train", input, "labeled training TSV")->required()->check(CLI::ExistingFile);
    train->add_option("--out", f.out, "model file to write")->required();
    train->add_option("--val", f.val, "validation TSV (default: 90/10 split)")->check(CLI::ExistingFile);
    common_flags(train, f, true);

    auto* ens = app.add_subcommand("ensemble", "fit a stacking ensemble");
    ens->add_option("train", input, "labeled training TSV")->required()->check(CLI::ExistingFile);
    ens->add_option("--out", f.out, "ensemble file to write")->required();
    ens->add_option("--val", f.val, "validation TSV (default: 90/10 split)")->check(CLI::ExistingFile);
    ens->add_option("--jobs", f.jobs, "base models trained concurrently")->check(CLI::Range(1, 256));
    common_flags(ens, f, true);

    auto* eval = app.add_subcommand("evaluate", "score a model or ensemble on labeled data");
    eval->add_option("model", model, "model or ensemble file")->required()->check(CLI::ExistingFile);
    eval->add_option("data", input, "labeled TSV")->required()->check(CLI::ExistingFile);
    eval->add_option("--out", f.out, "report path prefix (default: <model>.eval)");
    common_flags(eval, f, false);

    auto* pred = app.add_subcommand("predict", "label a TSV file");
    pred->add_option("model", model, "model or ensemble file")->required()->check(CLI::ExistingFile);
    pred->add_option("data", input, "TSV, labels may be _")->required()->check(CLI::ExistingFile);
    pred->add_option("--out", f.out, "output TSV")->required();
    common_flags(pred, f, false);

    CLI11_PARSE(app, argc, argv);

    const mxs_options o = to_options(f);
    if (pre->parsed()) return report(mxs_preprocess(input.c_str(), f.out.c_str(), &o));
    if (train->parsed()) return report(mxs_train(input.c_str(), f.out.c_str(), &o));
    if (ens->parsed()) return report(mxs_ensemble(input.c_str(), f.out.c_str(), &o));
    if (pred->parsed()) return report(mxs_predict(model.c_str(), input.c_str(), f.out.c_str(), &o));

    char* text = nullptr;
    const mxs_status status =
        mxs_evaluate(model.c_str(), input.c_str(), f.out.empty() ? nullptr : f.out.c_str(), &o, &text);
    if (status == MXS_OK) std::fputs(text, stdout);
    mxs_string_free(text);
    return report(status);
}
