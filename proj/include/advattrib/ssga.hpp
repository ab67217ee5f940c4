#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "advattrib/feature_mask.hpp"
#include "advattrib/models.hpp"
#include "advattrib/random.hpp"

namespace advattrib {

/// How `mutationRate` is applied to a child.
enum class MutationMode {
    /// With probability mutationRate, one uniformly chosen bit is flipped.
    PerChild,
    /// Every bit is flipped independently with probability mutationRate.
    PerBit,
};

/// "per-child" or "per-bit".
std::string_view to_string(MutationMode mode);
MutationMode parse_mutation_mode(std::string_view name);

struct GaConfig {
    std::size_t populationSize = 30;
    double mutationRate = 0.5;
    MutationMode mutationMode = MutationMode::PerChild;
    std::size_t maxEvaluations = 1000;
    double targetFitness = 0.99754;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Individual {
    FeatureMask mask;
    double fitness = 0.0;
    std::size_t evaluatedAt = 0;
};

struct TracePoint {
    std::size_t evaluation = 0;
    double bestFitness = 0.0;
};

struct GaRunResult {
    Individual best;
    std::vector<Individual> population;
    std::size_t evaluationsUsed = 0;
    std::vector<TracePoint> fitnessTrace;
};

using FitnessFn = std::function<double(const FeatureMask&)>;

/// Sets one uniformly chosen bit when the mask is empty.
void repair_mask(FeatureMask& mask, Rng& rng);

FeatureMask random_mask(Rng& rng);

/// Two distinct members drawn uniformly; the fitter one wins, ties go to
/// the first drawn. Returns the winner's index.
std::size_t binary_tournament_index(std::span<const Individual> population, Rng& rng);
const Individual& binary_tournament(std::span<const Individual> population, Rng& rng);

FeatureMask uniform_crossover(const FeatureMask& p1, const FeatureMask& p2, Rng& rng);

/// Flips each bit with probability `rate`, then repairs an empty result.
FeatureMask mutate(const FeatureMask& mask, double rate, Rng& rng);

/// With probability `rate`, flips one uniformly chosen bit; repairs an
/// empty result.
FeatureMask mutate_one(const FeatureMask& mask, double rate, Rng& rng);

/// Steady-state GA: one child per step replaces the current worst member
/// when it is at least as fit. Stops at the evaluation budget or once the
/// best fitness reaches the target, whichever comes first.
GaRunResult run_ssga(const GaConfig& config, const FitnessFn& fitness);

/// `runs` independent runs with seeds derived from config.seed.
std::vector<GaRunResult> run_ssga_independent(const GaConfig& config, const FitnessFn& fitness,
                                              std::size_t runs);

/// Per-feature fraction of runs whose best mask includes the feature.
std::array<double, kAlphabetSize> feature_consistency(std::span<const GaRunResult> runs);

enum class FitnessTarget {
    /// Accuracy on the masked training set itself.
    Training,
    /// Accuracy on a validation set held out from training.
    Validation,
};

/// Classifier-accuracy fitness for masks. With FitnessTarget::Validation the
/// model is trained on `trainSet` and scored on `validationSet`.
FitnessFn make_accuracy_fitness(ModelKind kind, const TrainConfig& config,
                                std::vector<LabeledVector> trainSet,
                                std::vector<LabeledVector> validationSet,
                                const PipelineSpec& pipeline, FitnessTarget target);

/// Writes masks.json: [{"bits": "0101...", "fitness": 0.9}, ...].
std::string masks_json(std::span<const Individual> population);
std::vector<Individual> parse_masks_json(const std::string& text);

/// "evaluation,bestFitness" CSV.
void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace);

}  // namespace advattrib
