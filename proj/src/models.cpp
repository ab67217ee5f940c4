#include "advattrib/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "advattrib/error.hpp"
#include "advattrib/random.hpp"

namespace advattrib {

FeatureVector apply_mask(const FeatureMask& mask, const FeatureVector& v) {
    FeatureVector out = v;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        if (!mask.test(j)) {
            out.values[j] = 0.0;
        }
    }
    return out;
}

std::vector<std::size_t> active_indices(const FeatureMask& mask) {
    std::vector<std::size_t> idx;
    idx.reserve(mask.count());
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        if (mask.test(j)) {
            idx.push_back(j);
        }
    }
    return idx;
}

std::string mask_to_string(const FeatureMask& mask) {
    std::string s(kAlphabetSize, '0');
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        if (mask.test(j)) {
            s[j] = '1';
        }
    }
    return s;
}

FeatureMask mask_from_string(std::string_view bits) {
    if (bits.size() != kAlphabetSize) {
        throw ShapeError("mask string must have " + std::to_string(kAlphabetSize) +
                         " characters, got " + std::to_string(bits.size()));
    }
    FeatureMask mask;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        if (bits[j] == '1') {
            mask.set(j);
        } else if (bits[j] != '0') {
            throw ShapeError("mask string may only contain '0' and '1'");
        }
    }
    return mask;
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Lsvm:
            return "LSVM";
        case ModelKind::RbfSvm:
            return "RBFSVM";
        case ModelKind::Ffnn:
            return "FFNN";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    std::string upper(name);
    std::transform(upper.begin(), upper.end(), upper.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (upper == "LSVM") {
        return ModelKind::Lsvm;
    }
    if (upper == "RBFSVM") {
        return ModelKind::RbfSvm;
    }
    if (upper == "FFNN") {
        return ModelKind::Ffnn;
    }
    throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

SplitSpec SplitSpec::for_kind(ModelKind kind, std::uint64_t seed) {
    return kind == ModelKind::Ffnn ? ffnn(seed) : svm(seed);
}

DatasetSplit split_dataset(std::span<const LabeledVector> vectors, const SplitSpec& spec) {
    const double fractions[4] = {spec.trainFrac, spec.evalFrac, spec.validFrac, spec.testFrac};
    double total = 0.0;
    for (double f : fractions) {
        if (f < 0.0) {
            throw ConfigError("split fractions must be non-negative");
        }
        total += f;
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw ConfigError("split fractions must sum to 1");
    }
    const double n = static_cast<double>(vectors.size());
    std::size_t counts[4];
    for (int p = 0; p < 4; ++p) {
        const double exact = fractions[p] * n;
        counts[p] = static_cast<std::size_t>(std::llround(exact));
        if (std::fabs(exact - static_cast<double>(counts[p])) > 1e-6) {
            throw ConfigError("split fraction times document count must be an integer");
        }
    }

    // Per-author pools, shuffled.
    std::map<AuthorId, std::vector<std::size_t>> pools;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        pools[vectors[i].author].push_back(i);
    }
    Rng rng(spec.seed);
    std::vector<AuthorId> authors;
    for (auto& [author, rows] : pools) {
        for (std::size_t i = rows.size(); i > 1; --i) {
            std::swap(rows[i - 1], rows[uniform_index(rng, i)]);
        }
        authors.push_back(author);
    }
    for (std::size_t i = authors.size(); i > 1; --i) {
        std::swap(authors[i - 1], authors[uniform_index(rng, i)]);
    }

    // Held-out partitions take one row at a time, cycling over authors and
    // preferring authors that still have the most rows left.
    std::vector<std::vector<std::size_t>> parts(4);
    std::size_t cursor = 0;
    for (int p : {3, 2, 1}) {
        for (std::size_t taken = 0; taken < counts[p]; ++taken) {
            std::size_t best = authors.size();
            std::size_t bestLeft = 0;
            for (std::size_t step = 0; step < authors.size(); ++step) {
                const std::size_t a = (cursor + step) % authors.size();
                const std::size_t left = pools[authors[a]].size();
                if (left > bestLeft) {
                    best = a;
                    bestLeft = left;
                }
            }
            if (best == authors.size()) {
                throw ConfigError("not enough documents for the requested split");
            }
            auto& pool = pools[authors[best]];
            parts[static_cast<std::size_t>(p)].push_back(pool.back());
            pool.pop_back();
            cursor = (best + 1) % authors.size();
        }
    }
    for (auto& [author, rows] : pools) {
        parts[0].insert(parts[0].end(), rows.begin(), rows.end());
    }

    DatasetSplit out;
    std::vector<LabeledVector>* dst[4] = {&out.train, &out.eval, &out.valid, &out.test};
    for (int p = 0; p < 4; ++p) {
        auto& rows = parts[static_cast<std::size_t>(p)];
        std::sort(rows.begin(), rows.end());
        for (std::size_t r : rows) {
            dst[p]->push_back(vectors[r]);
        }
    }
    return out;
}

std::size_t argmax(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) {
            best = i;
        }
    }
    return best;
}

double top_two_margin(std::span<const double> scores) {
    if (scores.size() < 2) {
        return std::numeric_limits<double>::infinity();
    }
    double first = -std::numeric_limits<double>::infinity();
    double second = first;
    for (double s : scores) {
        if (s > first) {
            second = first;
            first = s;
        } else if (s > second) {
            second = s;
        }
    }
    return first - second;
}

namespace {

std::vector<double> select(const FeatureVector& v, const std::vector<std::size_t>& idx) {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[i] = v.values[idx[i]];
    }
    return out;
}

}  // namespace

TrainedModel train(ModelKind kind, const TrainConfig& config,
                   std::span<const LabeledVector> trainSet, const FeatureMask& mask,
                   const PipelineSpec& pipeline) {
    std::vector<FeatureVector> rows;
    rows.reserve(trainSet.size());
    for (const auto& r : trainSet) {
        rows.push_back(r.features);
    }
    if (rows.empty()) {
        throw TrainingError("training set is empty");
    }
    return train(kind, config, trainSet, mask, Pipeline::fit(pipeline, rows));
}

TrainedModel train(ModelKind kind, const TrainConfig& config,
                   std::span<const LabeledVector> trainSet, const FeatureMask& mask,
                   const Pipeline& pipeline) {
    if (mask.none()) {
        throw MaskError("feature mask has no active bits");
    }
    TrainedModel model;
    model.kind = kind;
    model.config = config;
    model.pipeline = pipeline;
    model.mask = mask;
    for (const auto& r : trainSet) {
        model.labels.push_back(r.author);
    }
    std::sort(model.labels.begin(), model.labels.end());
    model.labels.erase(std::unique(model.labels.begin(), model.labels.end()), model.labels.end());
    if (model.labels.size() < 2) {
        throw TrainingError("training set needs at least 2 distinct authors");
    }

    const auto idx = active_indices(mask);
    Matrix x(trainSet.size(), idx.size());
    std::vector<std::size_t> classOf(trainSet.size());
    for (std::size_t i = 0; i < trainSet.size(); ++i) {
        const auto t = pipeline.apply_training(trainSet[i].features);
        for (std::size_t j = 0; j < idx.size(); ++j) {
            x(i, j) = t.values[idx[j]];
        }
        classOf[i] = static_cast<std::size_t>(
            std::lower_bound(model.labels.begin(), model.labels.end(), trainSet[i].author) -
            model.labels.begin());
    }

    switch (kind) {
        case ModelKind::Lsvm:
            model.params = ml::fit_linear_svm(x, classOf, model.labels.size(), config.svm);
            break;
        case ModelKind::RbfSvm:
            model.params = ml::fit_rbf_svm(x, classOf, model.labels.size(), config.svm);
            break;
        case ModelKind::Ffnn: {
            auto fit = ml::fit_ffnn(x, classOf, model.labels.size(), config.ffnn);
            model.params = std::move(fit.params);
            model.converged = fit.converged;
            model.iterations = fit.epochs;
            break;
        }
    }
    return model;
}

std::vector<double> decision_values_transformed(const TrainedModel& model,
                                                const FeatureVector& transformed) {
    const auto x = select(transformed, active_indices(model.mask));
    std::vector<double> out(model.labels.size());
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LinearSvmParams>) {
                ml::linear_svm_scores(p, x, out);
            } else if constexpr (std::is_same_v<T, RbfSvmParams>) {
                ml::rbf_svm_scores(p, x, out);
            } else {
                ml::ffnn_probabilities(p, x, out);
            }
        },
        model.params);
    return out;
}

std::vector<double> decision_values(const TrainedModel& model, const FeatureVector& v, Role role) {
    return decision_values_transformed(model, model.pipeline.apply(v, role));
}

AuthorId predict(const TrainedModel& model, const FeatureVector& v, Role role) {
    const auto scores = decision_values(model, v, role);
    return model.labels[argmax(scores)];
}

AuthorId predict(const TrainedModel& model, std::span<const double> rawCounts) {
    if (rawCounts.size() != kAlphabetSize) {
        throw ShapeError("expected " + std::to_string(kAlphabetSize) + " features, got " +
                         std::to_string(rawCounts.size()));
    }
    FeatureVector v;
    std::copy(rawCounts.begin(), rawCounts.end(), v.values.begin());
    return predict(model, v);
}

double evaluate_accuracy(const TrainedModel& model, std::span<const LabeledVector> labeledSet,
                         Role role) {
    if (labeledSet.empty()) {
        throw EvaluationError("cannot evaluate accuracy on an empty set");
    }
    std::size_t correct = 0;
    for (const auto& r : labeledSet) {
        if (predict(model, r.features, role) == r.author) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(labeledSet.size());
}

double gradient_check(const FfnnConfig& config, std::span<const LabeledVector> toySet) {
    std::vector<AuthorId> labels;
    for (const auto& r : toySet) {
        labels.push_back(r.author);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    if (labels.size() < 2) {
        labels.push_back(labels.empty() ? 0 : labels.back() + 1);
    }

    Matrix x(toySet.size(), kAlphabetSize);
    std::vector<std::size_t> classOf(toySet.size());
    for (std::size_t i = 0; i < toySet.size(); ++i) {
        std::copy(toySet[i].features.values.begin(), toySet[i].features.values.end(), x.row(i).begin());
        classOf[i] = static_cast<std::size_t>(
            std::lower_bound(labels.begin(), labels.end(), toySet[i].author) - labels.begin());
    }
    const auto params =
        ml::init_ffnn(kAlphabetSize, config.hiddenUnits, labels.size(), derive_seed(config.seed, "init"));
    return ml::gradient_check(
        params, x, classOf, config.l2,
        [](const FfnnParams& p, const Matrix& xs, std::span<const std::size_t> cls, double l2,
           FfnnParams& grad) { ml::ffnn_loss(p, xs, cls, l2, &grad); });
}

}  // namespace advattrib
