#ifndef MIXSENT_H
#define MIXSENT_H

/*
 * C interface to the mixsent toolkit: text normalization, model and
 * ensemble training, evaluation and prediction.
 *
 * Every function returns an mxs_status. On failure the message of the
 * most recent error on the calling thread is available from
 * mxs_last_error() until the next failing call on that thread.
 */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MXS_API __declspec(dllexport)
#elif defined(__GNUC__)
#define MXS_API __attribute__((visibility("default")))
#else
#define MXS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mxs_status {
    MXS_OK = 0,
    MXS_ERR_INVALID_ARGUMENT = 1,
    MXS_ERR_IO = 2,
    MXS_ERR_FORMAT = 3,
    MXS_ERR_CONFIG = 4,
    MXS_ERR_SHAPE = 5,
    MXS_ERR_INTERNAL = 6
} mxs_status;

typedef void (*mxs_log_fn)(const char* message, void* user_data);

typedef struct mxs_options {
    const char* config_path;     /* run config, NULL if none */
    const char* validation_path; /* labeled TSV; NULL means a 90/10 split */
    int has_seed;                /* nonzero: seed overrides the config */
    uint64_t seed;
    size_t jobs;                 /* concurrent base models for ensembles */
    mxs_log_fn log;              /* progress lines, may be NULL */
    void* log_user_data;
} mxs_options;

typedef struct mxs_pipeline mxs_pipeline;
typedef struct mxs_predictor mxs_predictor;

MXS_API const char* mxs_version(void);
MXS_API const char* mxs_last_error(void);
MXS_API const char* mxs_status_name(mxs_status status);

/* Defaults: no config, no validation file, no seed override, one job. */
MXS_API void mxs_options_init(mxs_options* options);

/* Strings returned through char** are owned by the caller. */
MXS_API void mxs_string_free(char* s);

/* Commands. Reports go to <out>.report.txt and <out>.report.json. */
MXS_API mxs_status mxs_preprocess(const char* input_tsv, const char* output_tsv, const mxs_options* options);
MXS_API mxs_status mxs_train(const char* train_tsv, const char* model_out, const mxs_options* options);
MXS_API mxs_status mxs_ensemble(const char* train_tsv, const char* ensemble_out, const mxs_options* options);
/* report_out may be NULL (the model path plus ".eval"); report may be NULL. */
MXS_API mxs_status mxs_evaluate(const char* model_path, const char* data_tsv, const char* report_out,
                                const mxs_options* options, char** report);
MXS_API mxs_status mxs_predict(const char* model_path, const char* data_tsv, const char* output_tsv,
                               const mxs_options* options);

/* Text pipeline from a run config; NULL config means the default steps
 * with empty resource tables. */
MXS_API mxs_status mxs_pipeline_create(const char* config_path, mxs_pipeline** out);
/* Normalized tokens joined by single spaces. */
MXS_API mxs_status mxs_pipeline_run(const mxs_pipeline* pipeline, const char* text, char** normalized);
MXS_API void mxs_pipeline_free(mxs_pipeline* pipeline);

/* A saved model or ensemble. With a NULL config, input text must already
 * be preprocessed. Prediction is safe to call from several threads. */
MXS_API mxs_status mxs_predictor_load(const char* model_path, const char* config_path, mxs_predictor** out);
MXS_API size_t mxs_predictor_num_classes(const mxs_predictor* predictor);
/* NULL when index is out of range. Valid while the predictor lives. */
MXS_API const char* mxs_predictor_label(const mxs_predictor* predictor, size_t index);
MXS_API int mxs_predictor_is_ensemble(const mxs_predictor* predictor);
/* probabilities must hold num_classes values; either output may be NULL. */
MXS_API mxs_status mxs_predictor_predict(const mxs_predictor* predictor, const char* text, size_t* label,
                                         double* probabilities);
MXS_API void mxs_predictor_free(mxs_predictor* predictor);

#ifdef __cplusplus
}
#endif

#endif
