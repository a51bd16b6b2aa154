#include "mixsent/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "mixsent/autograd.hpp"
#include "mixsent/binio.hpp"
#include "mixsent/error.hpp"
#include "mixsent/nn.hpp"
#include "mixsent/rng.hpp"

namespace mixsent::ensemble {

std::vector<BaseFit> fit_base(const EncodedSet& train, const EncodedSet& val, std::span<const BaseSpec> specs,
                              std::uint64_t seed, std::size_t jobs) {
    if (specs.empty()) fail(ErrorCode::config, "ensemble: at least one base model is required");
    for (const auto& s : specs) {
        if (s.model.num_classes != specs[0].model.num_classes || s.model.max_len != specs[0].model.max_len) {
            fail(ErrorCode::config, "ensemble: base models must share num_classes and max_len");
        }
    }
    std::vector<BaseFit> fits(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t t = next++; t < specs.size(); t = next++) {
            try {
                models::Model model(specs[t].model, seed + t);
                if (specs[t].embeddings) model.set_embeddings(*specs[t].embeddings);
                models::TrainConfig tc = specs[t].train;
                tc.seed = seed + t;
                fits[t].report = models::train_model(model, train, val, tc);
                fits[t].classifier = std::make_shared<const ModelClassifier>(std::move(model));
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::clamp<std::size_t>(jobs, 1, specs.size());
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t t = 0; t < specs.size(); ++t) {
        if (!errors[t]) continue;
        try {
            std::rethrow_exception(errors[t]);
        } catch (const Error& e) {
            fail(e.code(), "base model " + std::to_string(t + 1) + ": " + e.what());
        } catch (const std::exception& e) {
            fail(ErrorCode::internal, "base model " + std::to_string(t + 1) + ": " + e.what());
        }
    }
    return fits;
}

std::vector<double> stack_features(std::span<const BasePtr> bases, const EncodedSet& data) {
    if (bases.empty()) fail(ErrorCode::invalid_argument, "ensemble: no base classifiers");
    const std::size_t C = bases[0]->num_classes();
    const std::size_t T = bases.size(), n = data.size(), width = T * C;
    std::vector<double> features(n * width);
    for (std::size_t t = 0; t < T; ++t) {
        if (bases[t]->num_classes() != C) fail(ErrorCode::invalid_argument, "ensemble: bases disagree on num_classes");
        const auto probs = bases[t]->predict_proba(data);
        if (probs.size() != n * C) fail(ErrorCode::shape, "ensemble: base returned the wrong number of probabilities");
        for (std::size_t i = 0; i < n; ++i) {
            std::copy_n(probs.begin() + static_cast<std::ptrdiff_t>(i * C), C,
                        features.begin() + static_cast<std::ptrdiff_t>(i * width + t * C));
        }
    }
    return features;
}

MetaDataset construct_meta_dataset(std::span<const BasePtr> bases, const EncodedSet& data) {
    MetaDataset meta;
    meta.features = stack_features(bases, data);
    meta.num_bases = bases.size();
    meta.num_classes = bases[0]->num_classes();
    meta.labels = data.labels;
    meta.fold.assign(data.size(), kInSample);
    return meta;
}

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
    if (folds < 2 || folds > n) {
        fail(ErrorCode::config, "ensemble: need 2 <= folds <= examples, got " + std::to_string(folds) + " folds for " +
                                    std::to_string(n) + " examples");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);
    std::vector<std::size_t> fold(n);
    for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % folds;
    return fold;
}

EncodedSet subset(const EncodedSet& data, std::span<const std::size_t> rows) {
    EncodedSet out;
    out.max_len = data.max_len;
    out.indices.reserve(rows.size() * data.max_len);
    for (std::size_t r : rows) {
        const auto row = data.row(r);
        out.indices.insert(out.indices.end(), row.begin(), row.end());
        if (!data.labels.empty()) out.labels.push_back(data.labels[r]);
    }
    return out;
}

MetaDataset construct_meta_dataset_kfold(const EncodedSet& data, std::size_t folds, std::uint64_t seed,
                                         const FoldTrainer& trainer) {
    const std::size_t n = data.size();
    const auto fold_of = assign_folds(n, folds, seed);
    MetaDataset meta;
    meta.labels = data.labels;
    meta.fold = fold_of;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::size_t> train_rows, held_rows;
        for (std::size_t i = 0; i < n; ++i) (fold_of[i] == f ? held_rows : train_rows).push_back(i);
        const auto bases = trainer(subset(data, train_rows), f);
        const auto features = stack_features(bases, subset(data, held_rows));
        if (f == 0) {
            meta.num_bases = bases.size();
            meta.num_classes = bases[0]->num_classes();
            meta.features.assign(n * meta.feature_length(), 0.0);
        } else if (bases.size() != meta.num_bases || bases[0]->num_classes() != meta.num_classes) {
            fail(ErrorCode::invalid_argument, "ensemble: folds produced different base layouts");
        }
        const std::size_t width = meta.feature_length();
        for (std::size_t k = 0; k < held_rows.size(); ++k) {
            std::copy_n(features.begin() + static_cast<std::ptrdiff_t>(k * width), width,
                        meta.features.begin() + static_cast<std::ptrdiff_t>(held_rows[k] * width));
        }
    }
    return meta;
}

MetaClassifier::MetaClassifier(std::size_t input_dim, std::size_t num_classes)
    : weight(input_dim * num_classes, 0.0), bias(num_classes, 0.0), input_dim_(input_dim), num_classes_(num_classes) {}

MetaClassifier MetaClassifier::block_identity(std::size_t num_bases, std::size_t num_classes) {
    MetaClassifier m(num_bases * num_classes, num_classes);
    for (std::size_t t = 0; t < num_bases; ++t) {
        for (std::size_t c = 0; c < num_classes; ++c) m.weight[(t * num_classes + c) * num_classes + c] = 1.0;
    }
    return m;
}

std::vector<double> MetaClassifier::logits(std::span<const double> features) const {
    if (input_dim_ == 0 || features.size() % input_dim_ != 0) {
        fail(ErrorCode::shape, "meta classifier: feature length must be a multiple of " + std::to_string(input_dim_));
    }
    const std::size_t n = features.size() / input_dim_, C = num_classes_;
    std::vector<double> out(n * C);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < C; ++c) out[i * C + c] = bias[c];
        for (std::size_t k = 0; k < input_dim_; ++k) {
            const double x = features[i * input_dim_ + k];
            for (std::size_t c = 0; c < C; ++c) out[i * C + c] += x * weight[k * C + c];
        }
    }
    return out;
}

Prediction predict_from_logits(std::span<const double> logits, std::size_t num_classes) {
    Prediction p;
    const std::size_t n = logits.size() / num_classes;
    p.probabilities.resize(logits.size());
    p.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = logits.subspan(i * num_classes, num_classes);
        const auto top = std::max_element(row.begin(), row.end());
        p.labels[i] = static_cast<std::size_t>(top - row.begin());
        double total = 0.0;
        for (std::size_t c = 0; c < num_classes; ++c) {
            p.probabilities[i * num_classes + c] = std::exp(row[c] - *top);
            total += p.probabilities[i * num_classes + c];
        }
        for (std::size_t c = 0; c < num_classes; ++c) p.probabilities[i * num_classes + c] /= total;
    }
    return p;
}

std::vector<double> MetaClassifier::predict_proba(std::span<const double> features) const {
    return predict_from_logits(logits(features), num_classes_).probabilities;
}

MetaClassifier fit_meta(const MetaDataset& meta, const MetaConfig& config) {
    const std::size_t n = meta.size(), D = meta.feature_length(), C = meta.num_classes;
    if (n == 0 || C < 2 || meta.features.size() != n * D) fail(ErrorCode::invalid_argument, "fit_meta: malformed meta dataset");
    for (std::size_t y : meta.labels) {
        if (y >= C) fail(ErrorCode::invalid_argument, "fit_meta: label out of range");
    }
    Rng rng(config.seed);
    ag::Tensor W = ag::Tensor::zeros({D, C}, true);
    ag::Tensor b = ag::Tensor::zeros({C}, true);
    nn::glorot_uniform(W, D, C, rng);
    const ag::Tensor X = ag::Tensor::from({n, D}, meta.features);
    nn::FocalLossConfig ce{0.0, std::vector<double>(C, 1.0)};
    nn::Adam adam({config.lr, 0.9, 0.999, 1e-8});
    std::vector<ag::Tensor> params{W, b};

    MetaClassifier out(D, C);
    for (std::size_t step = 0; step < config.max_steps; ++step) {
        W.zero_grad();
        b.zero_grad();
        const ag::Tensor loss = nn::focal_loss(ag::softmax(ag::add(ag::matmul(X, W), b)), meta.labels, ce);
        loss.backward();
        double norm2 = 0.0;
        for (const auto& p : params) {
            for (double g : p.grad()) norm2 += g * g;
        }
        if (std::sqrt(norm2) < config.grad_tolerance) break;
        adam.step(params);
        out.steps = step + 1;
    }
    std::copy(W.data().begin(), W.data().end(), out.weight.begin());
    std::copy(b.data().begin(), b.data().end(), out.bias.begin());
    return out;
}

std::string to_string(StackMode mode) { return mode == StackMode::insample ? "insample" : "kfold"; }

StackMode parse_stack_mode(const std::string& text) {
    if (text == "insample") return StackMode::insample;
    if (text == "kfold") return StackMode::kfold;
    fail(ErrorCode::config, "unknown ensemble mode '" + text + "' (expected insample or kfold)");
}

Prediction StackingEnsemble::predict(const EncodedSet& data) const {
    const auto features = stack_features(bases, data);
    if (bases.size() * bases[0]->num_classes() != meta.input_dim()) {
        fail(ErrorCode::shape, "ensemble: meta classifier expects " + std::to_string(meta.input_dim()) + " features");
    }
    return predict_from_logits(meta.logits(features), meta.num_classes());
}

StackingResult fit_stacking(const EncodedSet& train, const EncodedSet& val, std::span<const BaseSpec> specs,
                            const StackingConfig& config) {
    StackingResult result;
    const auto fits = fit_base(train, val, specs, config.seed, config.jobs);
    for (const auto& fit : fits) {
        result.ensemble.bases.push_back(fit.classifier);
        result.base_reports.push_back(fit.report);
    }
    if (config.mode == StackMode::insample) {
        result.meta_data = construct_meta_dataset(result.ensemble.bases, train);
    } else {
        result.meta_data = construct_meta_dataset_kfold(
            train, config.folds, config.seed, [&](const EncodedSet& fold_train, std::size_t fold) {
                const auto fold_fits = fit_base(fold_train, val, specs, config.seed + 7919 * (fold + 1), config.jobs);
                std::vector<BasePtr> bases;
                for (const auto& fit : fold_fits) bases.push_back(fit.classifier);
                return bases;
            });
    }
    MetaConfig meta_config = config.meta;
    meta_config.seed = config.seed;
    result.ensemble.meta = fit_meta(result.meta_data, meta_config);
    result.ensemble.mode = config.mode;
    result.ensemble.folds = config.mode == StackMode::kfold ? config.folds : 0;
    return result;
}

void write_ensemble(std::ostream& out, const EnsembleBundle& bundle) {
    const auto& e = bundle.ensemble;
    out.write("MXE1", 4);
    binio::put_u32(out, kEnsembleFormatVersion);
    binio::put_u32(out, e.mode == StackMode::insample ? 0 : 1);
    binio::put_u32(out, static_cast<std::uint32_t>(e.folds));
    binio::put_u32(out, static_cast<std::uint32_t>(e.bases.size()));
    for (const auto& base : e.bases) {
        const auto* model = dynamic_cast<const ModelClassifier*>(base.get());
        if (model == nullptr) fail(ErrorCode::invalid_argument, "ensemble: only trained models can be saved");
        std::ostringstream image;
        models::write_model(image, model->model(), bundle.labels, bundle.vocab);
        const std::string bytes = image.str();
        binio::put_u64(out, bytes.size());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    binio::put_u32(out, static_cast<std::uint32_t>(e.meta.input_dim()));
    binio::put_u32(out, static_cast<std::uint32_t>(e.meta.num_classes()));
    for (double w : e.meta.weight) binio::put_f64(out, w);
    for (double b : e.meta.bias) binio::put_f64(out, b);
    if (!out) fail(ErrorCode::io, "ensemble: write failed");
}

EnsembleBundle read_ensemble(std::istream& in, const std::string& source) {
    binio::Reader r(in, source);
    r.expect_magic("MXE1");
    const std::uint32_t version = r.u32();
    if (version != kEnsembleFormatVersion) {
        fail(ErrorCode::format, source + ": unsupported ensemble format version " + std::to_string(version));
    }
    EnsembleBundle bundle;
    const std::uint32_t mode = r.u32();
    if (mode > 1) fail(ErrorCode::format, source + ": bad ensemble mode");
    bundle.ensemble.mode = mode == 0 ? StackMode::insample : StackMode::kfold;
    bundle.ensemble.folds = r.u32();
    const std::uint32_t T = r.u32();
    if (T == 0) fail(ErrorCode::format, source + ": ensemble has no base models");
    for (std::uint32_t t = 0; t < T; ++t) {
        const std::uint64_t size = r.u64();
        if (size > (std::uint64_t{1} << 34)) fail(ErrorCode::format, source + ": implausible base model size");
        std::string bytes(static_cast<std::size_t>(size), '\0');
        r.bytes(bytes.data(), bytes.size());
        std::istringstream image(bytes);
        auto base = models::read_model(image, source + " (base " + std::to_string(t + 1) + ")");
        if (t == 0) {
            bundle.labels = base.labels;
            bundle.vocab = base.vocab;
        } else if (base.labels != bundle.labels || base.vocab.tokens() != bundle.vocab.tokens()) {
            fail(ErrorCode::format, source + ": base models disagree on labels or vocabulary");
        }
        bundle.ensemble.bases.push_back(std::make_shared<const ModelClassifier>(std::move(base.model)));
    }
    const std::uint32_t D = r.u32(), C = r.u32();
    if (D != T * bundle.labels.size() || C != bundle.labels.size()) {
        fail(ErrorCode::format, source + ": meta classifier shape does not match the base models");
    }
    MetaClassifier meta(D, C);
    for (double& w : meta.weight) w = r.f64();
    for (double& b : meta.bias) b = r.f64();
    bundle.ensemble.meta = std::move(meta);
    return bundle;
}

void save_ensemble(const std::filesystem::path& path, const EnsembleBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot write " + path.string());
    write_ensemble(out, bundle);
    out.close();
    if (!out) fail(ErrorCode::io, "write failed for " + path.string());
}

EnsembleBundle load_ensemble(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "cannot open " + path.string());
    return read_ensemble(in, path.string());
}

}  // namespace mixsent::ensemble
