#include "advattrib/scaling.hpp"

#include <cmath>

#include "advattrib/error.hpp"

namespace advattrib {

ScalerParams fit_scaler(std::span<const FeatureVector> trainMatrix) {
    if (trainMatrix.size() < 2) {
        throw FitError("scaler needs at least 2 training rows");
    }
    ScalerParams p;
    p.fittedOn = trainMatrix.size();
    const double n = static_cast<double>(trainMatrix.size());
    for (const auto& row : trainMatrix) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            p.mean[j] += row.values[j];
        }
    }
    for (double& m : p.mean) {
        m /= n;
    }
    for (const auto& row : trainMatrix) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            const double d = row.values[j] - p.mean[j];
            p.stdDev[j] += d * d;
        }
    }
    for (double& s : p.stdDev) {
        s = std::sqrt(s / n);
    }
    return p;
}

FeatureVector transform(const ScalerParams& params, const FeatureVector& v) {
    if (params.fittedOn == 0) {
        throw FitError("scaler is not fitted");
    }
    FeatureVector out;
    out.docId = v.docId;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        const double s = params.stdDev[j] > 0.0 ? params.stdDev[j] : 1.0;
        out.values[j] = (v.values[j] - params.mean[j]) / s;
    }
    return out;
}

std::string PipelineSpec::label() const {
    std::string out;
    auto add = [&](bool on, const char* name) {
        if (!on) {
            return;
        }
        if (!out.empty()) {
            out += ", ";
        }
        out += name;
    };
    add(useNormalization, "Normalization");
    add(useStandardization, "Standardization");
    add(useTfidf, "TFIDF");
    return out.empty() ? "None" : out;
}

std::vector<PipelineSpec> PipelineSpec::all_variants() {
    // Row order of the ablation table.
    return {
        {false, false, false}, {true, true, true},  {false, true, true}, {true, false, true},
        {true, true, false},   {true, false, false}, {false, true, false}, {false, false, true},
    };
}

Pipeline Pipeline::fit(const PipelineSpec& spec, std::span<const FeatureVector> trainMatrix) {
    if (trainMatrix.empty()) {
        throw FitError("pipeline needs a non-empty training matrix");
    }
    Pipeline p;
    p.spec_ = spec;
    std::vector<FeatureVector> stage(trainMatrix.begin(), trainMatrix.end());
    if (spec.useTfidf) {
        p.tfidf_ = fit_tfidf(stage);
        for (auto& row : stage) {
            row = apply_tfidf(*p.tfidf_, row);
        }
    }
    if (spec.useNormalization || spec.useStandardization) {
        p.scaler_ = fit_scaler(stage);
    }
    return p;
}

Pipeline Pipeline::from_parts(const PipelineSpec& spec, std::optional<TfidfModel> tfidf,
                              std::optional<ScalerParams> scaler) {
    if (spec.useTfidf && !tfidf) {
        throw FitError("pipeline enables TFIDF but has no fitted model");
    }
    if ((spec.useNormalization || spec.useStandardization) && !scaler) {
        throw FitError("pipeline enables scaling but has no fitted scaler");
    }
    Pipeline p;
    p.spec_ = spec;
    p.tfidf_ = std::move(tfidf);
    p.scaler_ = std::move(scaler);
    return p;
}

FeatureVector Pipeline::apply(const FeatureVector& v, Role role) const {
    FeatureVector out = spec_.useTfidf ? apply_tfidf(*tfidf_, v) : v;
    const bool scale = role == Role::Training ? spec_.useNormalization : spec_.useStandardization;
    if (scale) {
        out = transform(*scaler_, out);
    }
    return out;
}

FeatureArray Pipeline::count_sensitivity(double documentLength, Role role) const {
    FeatureArray d;
    d.fill(1.0);
    if (spec_.useTfidf) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            d[j] = tfidf_->idf[j] / documentLength;
        }
    }
    const bool scale = role == Role::Training ? spec_.useNormalization : spec_.useStandardization;
    if (scale) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            const double s = scaler_->stdDev[j];
            d[j] /= s > 0.0 ? s : 1.0;
        }
    }
    return d;
}

}  // namespace advattrib
