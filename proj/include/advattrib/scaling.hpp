#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advattrib/corpus.hpp"

namespace advattrib {

/// Per-feature z-score parameters fitted on training rows.
struct ScalerParams {
    FeatureArray mean{};
    FeatureArray stdDev{};  // population standard deviation
    std::size_t fittedOn = 0;
};

ScalerParams fit_scaler(std::span<const FeatureVector> trainMatrix);

/// (v - mean) / std, with a zero std treated as a divisor of 1.
FeatureVector transform(const ScalerParams& params, const FeatureVector& v);

/// Which stages of the preprocessing chain are enabled.
///
/// "Normalization" scales the training rows, "Standardization" scales the
/// evaluation rows; both use one scaler fitted on the training rows.
struct PipelineSpec {
    bool useNormalization = true;
    bool useStandardization = true;
    bool useTfidf = true;

    bool operator==(const PipelineSpec&) const = default;

    /// "Normalization, Standardization, TFIDF" style label, "None" when empty.
    std::string label() const;

    /// All eight combinations, full pipeline first and "None" last.
    static std::vector<PipelineSpec> all_variants();
};

enum class Role { Training, Evaluation };

/// A fitted TFIDF -> scaler chain. Immutable after fit.
class Pipeline {
public:
    Pipeline() = default;

    static Pipeline fit(const PipelineSpec& spec, std::span<const FeatureVector> trainMatrix);
    static Pipeline from_parts(const PipelineSpec& spec, std::optional<TfidfModel> tfidf,
                               std::optional<ScalerParams> scaler);

    FeatureVector apply(const FeatureVector& v, Role role) const;
    FeatureVector apply_training(const FeatureVector& v) const { return apply(v, Role::Training); }
    FeatureVector apply_evaluation(const FeatureVector& v) const { return apply(v, Role::Evaluation); }

    /// Output change per unit move of a raw count between features, for a
    /// document of the given total length: d out[j] / d count[j].
    FeatureArray count_sensitivity(double documentLength, Role role) const;

    const PipelineSpec& spec() const { return spec_; }
    const std::optional<TfidfModel>& tfidf() const { return tfidf_; }
    const std::optional<ScalerParams>& scaler() const { return scaler_; }

private:
    PipelineSpec spec_{false, false, false};
    std::optional<TfidfModel> tfidf_;
    std::optional<ScalerParams> scaler_;
};

}  // namespace advattrib
