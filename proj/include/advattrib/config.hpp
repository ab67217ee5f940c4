#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "advattrib/adversary.hpp"
#include "advattrib/corpus.hpp"
#include "advattrib/defense.hpp"
#include "advattrib/models.hpp"
#include "advattrib/scaling.hpp"
#include "advattrib/ssga.hpp"

namespace advattrib {

inline constexpr std::uint64_t kDefaultMasterSeed = 42;

/// How mask fitness is scored during evolution.
struct FitnessSettings {
    ModelKind model = ModelKind::RbfSvm;
    FitnessTarget target = FitnessTarget::Validation;
    /// Fresh documents per author drawn for the validation target.
    std::size_t validationPerAuthor = 16;
};

struct ExperimentSettings {
    std::size_t runs = 30;
    std::vector<ModelKind> kinds{ModelKind::RbfSvm, ModelKind::Lsvm, ModelKind::Ffnn};
    /// Fresh documents per author each run is scored on.
    std::size_t heldoutPerAuthor = 8;
    /// Runs averaged per cell of the pipeline ablation table; 0 skips it.
    std::size_t ablationRuns = 5;
};

/// Everything a command needs, resolved from one JSON file plus overrides.
/// Component seeds are derived from `seed` by resolve_seeds().
struct AppConfig {
    std::uint64_t seed = kDefaultMasterSeed;
    CorpusConfig corpus;
    PipelineSpec pipeline;
    TrainConfig train;
    /// Classifier behind the defended system and the undefended baseline.
    ModelKind model = ModelKind::Lsvm;
    GaConfig ga;
    FitnessSettings fitness;
    DefensePolicy defense;
    AttackConfig attack;
    ExperimentSettings experiment;
    std::uint64_t switchSeed = 0;

    /// Overwrites every component seed with derive_seed(seed, <component>).
    void resolve_seeds();
    void validate() const;
};

/// Parses a config document; absent keys keep their defaults. Seeds are
/// resolved afterwards.
AppConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const AppConfig& config);
nlohmann::ordered_json seeds_json(const AppConfig& config);

}  // namespace advattrib
