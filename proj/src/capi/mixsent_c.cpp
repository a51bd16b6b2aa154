#include "mixsent.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <optional>
#include <string>

#include "mixsent/app.hpp"
#include "mixsent/error.hpp"
#include "mixsent/textprep.hpp"

struct mxs_pipeline {
    mixsent::text::Pipeline pipeline;
};

struct mxs_predictor {
    mixsent::app::Predictor predictor;
};

namespace {

thread_local std::string last_error;

mxs_status record(mxs_status status, const std::string& message) {
    last_error = message;
    return status;
}

template <typename F>
mxs_status guarded(F&& body) {
    try {
        body();
        return MXS_OK;
    } catch (const mixsent::Error& e) {
        return record(static_cast<mxs_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return record(MXS_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return record(MXS_ERR_INTERNAL, e.what());
    } catch (...) {
        return record(MXS_ERR_INTERNAL, "unknown error");
    }
}

void require(const void* p, const char* what) {
    if (p == nullptr) mixsent::fail(mixsent::ErrorCode::invalid_argument, std::string(what) + " must not be NULL");
}

char* duplicate(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

mixsent::app::CommandOptions convert(const mxs_options* o) {
    mixsent::app::CommandOptions out;
    if (o == nullptr) return out;
    if (o->config_path != nullptr) out.config = o->config_path;
    if (o->validation_path != nullptr) out.validation = o->validation_path;
    if (o->has_seed) out.seed = o->seed;
    out.jobs = o->jobs == 0 ? 1 : o->jobs;
    if (o->log != nullptr) {
        const mxs_log_fn fn = o->log;
        void* user = o->log_user_data;
        out.log = [fn, user](const std::string& line) { fn(line.c_str(), user); };
    }
    return out;
}

}  // namespace

extern "C" {

const char* mxs_version(void) { return "1.0.0"; }

const char* mxs_last_error(void) { return last_error.c_str(); }

const char* mxs_status_name(mxs_status status) {
    switch (status) {
        case MXS_OK: return "ok";
        case MXS_ERR_INVALID_ARGUMENT: return "invalid argument";
        case MXS_ERR_IO: return "i/o error";
        case MXS_ERR_FORMAT: return "format error";
        case MXS_ERR_CONFIG: return "config error";
        case MXS_ERR_SHAPE: return "shape error";
        case MXS_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

void mxs_options_init(mxs_options* options) {
    if (options == nullptr) return;
    *options = mxs_options{};
    options->jobs = 1;
}

void mxs_string_free(char* s) { std::free(s); }

mxs_status mxs_preprocess(const char* input_tsv, const char* output_tsv, const mxs_options* options) {
    return guarded([&] {
        require(input_tsv, "input_tsv");
        require(output_tsv, "output_tsv");
        mixsent::app::preprocess(input_tsv, output_tsv, convert(options));
    });
}

mxs_status mxs_train(const char* train_tsv, const char* model_out, const mxs_options* options) {
    return guarded([&] {
        require(train_tsv, "train_tsv");
        require(model_out, "model_out");
        mixsent::app::train(train_tsv, model_out, convert(options));
    });
}

mxs_status mxs_ensemble(const char* train_tsv, const char* ensemble_out, const mxs_options* options) {
    return guarded([&] {
        require(train_tsv, "train_tsv");
        require(ensemble_out, "ensemble_out");
        mixsent::app::fit_ensemble(train_tsv, ensemble_out, convert(options));
    });
}

mxs_status mxs_evaluate(const char* model_path, const char* data_tsv, const char* report_out,
                        const mxs_options* options, char** report) {
    if (report != nullptr) *report = nullptr;
    return guarded([&] {
        require(model_path, "model_path");
        require(data_tsv, "data_tsv");
        std::optional<std::filesystem::path> out;
        if (report_out != nullptr) out = report_out;
        const std::string text = mixsent::app::evaluate(model_path, data_tsv, out, convert(options));
        if (report != nullptr) *report = duplicate(text);
    });
}

mxs_status mxs_predict(const char* model_path, const char* data_tsv, const char* output_tsv,
                       const mxs_options* options) {
    return guarded([&] {
        require(model_path, "model_path");
        require(data_tsv, "data_tsv");
        require(output_tsv, "output_tsv");
        mixsent::app::predict(model_path, data_tsv, output_tsv, convert(options));
    });
}

mxs_status mxs_pipeline_create(const char* config_path, mxs_pipeline** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(out, "out");
        mixsent::text::PipelineConfig config;
        if (config_path != nullptr) config = mixsent::app::load_run_config(config_path).pipeline;
        *out = new mxs_pipeline{mixsent::text::Pipeline(std::move(config))};
    });
}

mxs_status mxs_pipeline_run(const mxs_pipeline* pipeline, const char* text, char** normalized) {
    if (normalized != nullptr) *normalized = nullptr;
    return guarded([&] {
        require(pipeline, "pipeline");
        require(text, "text");
        require(normalized, "normalized");
        std::string joined;
        for (const auto& token : pipeline->pipeline.run(text)) {
            if (!joined.empty()) joined += ' ';
            joined += token;
        }
        *normalized = duplicate(joined);
    });
}

void mxs_pipeline_free(mxs_pipeline* pipeline) { delete pipeline; }

mxs_status mxs_predictor_load(const char* model_path, const char* config_path, mxs_predictor** out) {
    if (out != nullptr) *out = nullptr;
    return guarded([&] {
        require(model_path, "model_path");
        require(out, "out");
        std::optional<std::filesystem::path> config;
        if (config_path != nullptr) config = config_path;
        *out = new mxs_predictor{mixsent::app::Predictor::load(model_path, config)};
    });
}

size_t mxs_predictor_num_classes(const mxs_predictor* predictor) {
    return predictor == nullptr ? 0 : predictor->predictor.labels().size();
}

const char* mxs_predictor_label(const mxs_predictor* predictor, size_t index) {
    if (predictor == nullptr || index >= predictor->predictor.labels().size()) return nullptr;
    return predictor->predictor.labels()[index].c_str();
}

int mxs_predictor_is_ensemble(const mxs_predictor* predictor) {
    return predictor != nullptr && predictor->predictor.is_ensemble() ? 1 : 0;
}

mxs_status mxs_predictor_predict(const mxs_predictor* predictor, const char* text, size_t* label,
                                 double* probabilities) {
    return guarded([&] {
        require(predictor, "predictor");
        require(text, "text");
        const auto prediction = predictor->predictor.predict_texts({text});
        if (label != nullptr) *label = prediction.labels.at(0);
        if (probabilities != nullptr) {
            std::copy(prediction.probabilities.begin(), prediction.probabilities.end(), probabilities);
        }
    });
}

void mxs_predictor_free(mxs_predictor* predictor) { delete predictor; }

}  // extern "C"
