#include "advattrib/ssga.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>

#include <json.hpp>

#include "advattrib/error.hpp"

namespace advattrib {

void GaConfig::validate() const {
    if (populationSize < 2) {
        throw ConfigError("population size must be at least 2");
    }
    if (!(mutationRate >= 0.0 && mutationRate <= 1.0)) {
        throw ConfigError("mutation rate must lie in [0, 1]");
    }
}

void repair_mask(FeatureMask& mask, Rng& rng) {
    if (mask.none()) {
        mask.set(uniform_index(rng, kAlphabetSize));
    }
}

FeatureMask random_mask(Rng& rng) {
    FeatureMask mask;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        if (uniform01(rng) < 0.5) {
            mask.set(j);
        }
    }
    repair_mask(mask, rng);
    return mask;
}

std::size_t binary_tournament_index(std::span<const Individual> population, Rng& rng) {
    if (population.size() < 2) {
        throw SelectionError("binary tournament needs at least 2 individuals");
    }
    const std::size_t first = uniform_index(rng, population.size());
    std::size_t second = uniform_index(rng, population.size() - 1);
    if (second >= first) {
        ++second;
    }
    return population[second].fitness > population[first].fitness ? second : first;
}

const Individual& binary_tournament(std::span<const Individual> population, Rng& rng) {
    return population[binary_tournament_index(population, rng)];
}

FeatureMask uniform_crossover(const FeatureMask& p1, const FeatureMask& p2, Rng& rng) {
    FeatureMask child;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        const bool fromFirst = (rng() >> 63) != 0;
        child.set(j, fromFirst ? p1.test(j) : p2.test(j));
    }
    return child;
}

FeatureMask mutate(const FeatureMask& mask, double rate, Rng& rng) {
    FeatureMask out = mask;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        if (uniform01(rng) < rate) {
            out.flip(j);
        }
    }
    repair_mask(out, rng);
    return out;
}

FeatureMask mutate_one(const FeatureMask& mask, double rate, Rng& rng) {
    FeatureMask out = mask;
    if (uniform01(rng) < rate) {
        out.flip(uniform_index(rng, kAlphabetSize));
    }
    repair_mask(out, rng);
    return out;
}

std::string_view to_string(MutationMode mode) {
    return mode == MutationMode::PerBit ? "per-bit" : "per-child";
}

MutationMode parse_mutation_mode(std::string_view name) {
    if (name == "per-child") {
        return MutationMode::PerChild;
    }
    if (name == "per-bit") {
        return MutationMode::PerBit;
    }
    throw ConfigError("unknown mutation mode: " + std::string(name));
}

GaRunResult run_ssga(const GaConfig& config, const FitnessFn& fitness) {
    config.validate();
    Rng rng(config.seed);
    GaRunResult result;
    auto& pop = result.population;
    pop.reserve(config.populationSize);

    auto record = [&](const Individual& ind) {
        if (result.fitnessTrace.empty() || ind.fitness > result.best.fitness) {
            result.best = ind;
        }
        result.fitnessTrace.push_back({result.evaluationsUsed, result.best.fitness});
    };

    for (std::size_t i = 0; i < config.populationSize; ++i) {
        Individual ind;
        ind.mask = random_mask(rng);
        ind.fitness = fitness(ind.mask);
        ind.evaluatedAt = ++result.evaluationsUsed;
        pop.push_back(ind);
        record(ind);
    }

    while (result.evaluationsUsed < config.maxEvaluations &&
           result.best.fitness < config.targetFitness) {
        const auto& a = binary_tournament(pop, rng);
        const auto& b = binary_tournament(pop, rng);
        Individual child;
        const auto mixed = uniform_crossover(a.mask, b.mask, rng);
        child.mask = config.mutationMode == MutationMode::PerBit
                         ? mutate(mixed, config.mutationRate, rng)
                         : mutate_one(mixed, config.mutationRate, rng);
        child.fitness = fitness(child.mask);
        child.evaluatedAt = ++result.evaluationsUsed;

        // Worst member; the oldest one among equals.
        auto worst = std::min_element(pop.begin(), pop.end(), [](const auto& x, const auto& y) {
            return x.fitness < y.fitness;
        });
        if (child.fitness >= worst->fitness) {
            *worst = child;
        }
        record(child);
    }
    return result;
}

std::vector<GaRunResult> run_ssga_independent(const GaConfig& config, const FitnessFn& fitness,
                                              std::size_t runs) {
    std::vector<GaRunResult> out;
    out.reserve(runs);
    for (std::size_t r = 0; r < runs; ++r) {
        GaConfig c = config;
        c.seed = derive_seed(config.seed, "ga-run", r);
        out.push_back(run_ssga(c, fitness));
    }
    return out;
}

std::array<double, kAlphabetSize> feature_consistency(std::span<const GaRunResult> runs) {
    if (runs.empty()) {
        throw ConfigError("feature consistency needs at least one run");
    }
    std::array<double, kAlphabetSize> out{};
    for (const auto& run : runs) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            if (run.best.mask.test(j)) {
                out[j] += 1.0;
            }
        }
    }
    for (double& v : out) {
        v /= static_cast<double>(runs.size());
    }
    return out;
}

FitnessFn make_accuracy_fitness(ModelKind kind, const TrainConfig& config,
                                std::vector<LabeledVector> trainSet,
                                std::vector<LabeledVector> validationSet,
                                const PipelineSpec& pipeline, FitnessTarget target) {
    if (target == FitnessTarget::Validation && validationSet.empty()) {
        throw ConfigError("validation fitness needs a non-empty validation set");
    }
    std::vector<FeatureVector> rows;
    for (const auto& r : trainSet) {
        rows.push_back(r.features);
    }
    struct State {
        ModelKind kind;
        TrainConfig config;
        std::vector<LabeledVector> train;
        std::vector<LabeledVector> valid;
        Pipeline pipeline;
        FitnessTarget target;
    };
    auto state = std::make_shared<const State>(State{kind, config, std::move(trainSet),
                                                     std::move(validationSet),
                                                     Pipeline::fit(pipeline, rows), target});
    return [state](const FeatureMask& mask) {
        const auto model = train(state->kind, state->config, state->train, mask, state->pipeline);
        if (state->target == FitnessTarget::Training) {
            return evaluate_accuracy(model, state->train, Role::Training);
        }
        return evaluate_accuracy(model, state->valid, Role::Evaluation);
    };
}

std::string masks_json(std::span<const Individual> population) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& ind : population) {
        arr.push_back({{"bits", mask_to_string(ind.mask)}, {"fitness", ind.fitness}});
    }
    return arr.dump(2) + "\n";
}

std::vector<Individual> parse_masks_json(const std::string& text) {
    std::vector<Individual> out;
    try {
        const auto arr = nlohmann::json::parse(text);
        for (const auto& entry : arr) {
            Individual ind;
            ind.mask = mask_from_string(entry.at("bits").get<std::string>());
            ind.fitness = entry.at("fitness").get<double>();
            out.push_back(ind);
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed masks file: ") + e.what());
    }
    return out;
}

void write_trace_csv(std::ostream& out, std::span<const TracePoint> trace) {
    out << "evaluation,bestFitness\n";
    char buf[64];
    for (const auto& p : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", p.evaluation, p.bestFitness);
        out << buf;
    }
}

}  // namespace advattrib
