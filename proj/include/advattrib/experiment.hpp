#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "advattrib/config.hpp"
#include "advattrib/defense.hpp"
#include "advattrib/ssga.hpp"

namespace advattrib {

struct RunRecord {
    ModelKind kind = ModelKind::Lsvm;
    std::size_t run = 0;
    double maskedAccuracy = 0.0;
    double unmaskedAccuracy = 0.0;
    FeatureMask mask;
    double bestFitness = 0.0;
    std::size_t evaluations = 0;
};

struct AblationRow {
    PipelineSpec spec;
    std::vector<double> meanAccuracy;  // one entry per experiment kind
};

struct ExperimentResult {
    std::vector<ModelKind> kinds;
    std::vector<std::vector<RunRecord>> runs;  // [kind][run]
    std::vector<AblationRow> ablation;
};

using ProgressFn = std::function<void(const std::string&)>;

/// One run of the protocol for one classifier: split the corpus, evolve a
/// mask, train masked and unmasked models on the training rows and score
/// both on fresh documents from the same authors.
RunRecord run_single(const AppConfig& config, ModelKind kind, std::size_t run,
                     std::span<const LabeledVector> corpusVectors);

ExperimentResult run_experiment(const AppConfig& config, const ProgressFn& progress = {});

/// "run,<kind>,<kind>,..." then one row of masked accuracies per run.
void write_runs_csv(std::ostream& out, const ExperimentResult& result);

/// "pipeline,<kind>,..." then one row per pipeline variant.
void write_ablation_csv(std::ostream& out, const ExperimentResult& result);

std::string experiment_json(const ExperimentResult& result);

/// The defended system as deployed: a GA population turned into a mask bank,
/// a normalcy baseline, and the best single-mask model for comparison.
struct DefendedSystem {
    GaRunResult ga;
    MaskBank bank;
    NormalcyBaseline baseline;
    TrainedModel undefended;
};

DefendedSystem build_defended_system(const AppConfig& config, std::span<const Document> corpus);

/// Fraction of documents a fresh defended session flags as an attack.
double false_positive_rate(const MaskBank& bank, const NormalcyBaseline& baseline,
                           const DefensePolicy& policy, std::span<const Document> cleanDocs,
                           std::uint64_t seed);

}  // namespace advattrib
