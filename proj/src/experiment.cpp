#include "advattrib/experiment.hpp"

#include <cstdio>
#include <ostream>

#include "advattrib/error.hpp"
#include "advattrib/random.hpp"
#include "advattrib/serialization.hpp"

namespace advattrib {

namespace {

std::vector<LabeledVector> heldout_vectors(const CorpusConfig& corpus, std::size_t perAuthor,
                                           const std::string& stream) {
    const auto docs = generate_heldout(corpus, perAuthor, stream);
    return extract_labeled(docs);
}

FitnessFn fitness_for(const AppConfig& config, std::span<const LabeledVector> train,
                      const std::string& validationStream) {
    std::vector<LabeledVector> valid;
    if (config.fitness.target == FitnessTarget::Validation) {
        valid = heldout_vectors(config.corpus, config.fitness.validationPerAuthor, validationStream);
    }
    return make_accuracy_fitness(config.fitness.model, config.train,
                                 std::vector<LabeledVector>(train.begin(), train.end()), std::move(valid),
                                 config.pipeline, config.fitness.target);
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

RunRecord run_single(const AppConfig& config, ModelKind kind, std::size_t run,
                     std::span<const LabeledVector> corpusVectors) {
    const auto k = static_cast<std::uint64_t>(kind);
    const auto split =
        split_dataset(corpusVectors, SplitSpec::for_kind(kind, derive_seed(config.seed, "split", run)));

    GaConfig ga = config.ga;
    ga.seed = derive_seed(config.ga.seed, "run", k * 100000 + run);
    const auto fitness = fitness_for(config, split.train, "validation-" + std::to_string(run));
    const auto evolved = run_ssga(ga, fitness);

    TrainConfig tc = config.train;
    tc.svm.seed = derive_seed(config.train.svm.seed, "run", run);
    tc.ffnn.seed = derive_seed(config.train.ffnn.seed, "run", run);
    const auto evalSet =
        heldout_vectors(config.corpus, config.experiment.heldoutPerAuthor, "evaluation-" + std::to_string(run));

    RunRecord rec;
    rec.kind = kind;
    rec.run = run;
    rec.mask = evolved.best.mask;
    rec.bestFitness = evolved.best.fitness;
    rec.evaluations = evolved.evaluationsUsed;
    rec.maskedAccuracy = evaluate_accuracy(train(kind, tc, split.train, rec.mask, config.pipeline), evalSet);
    rec.unmaskedAccuracy = evaluate_accuracy(train(kind, tc, split.train, full_mask(), config.pipeline), evalSet);
    return rec;
}

ExperimentResult run_experiment(const AppConfig& config, const ProgressFn& progress) {
    const auto corpus = generate_corpus(config.corpus);
    const auto vectors = extract_labeled(corpus);

    ExperimentResult result;
    result.kinds = config.experiment.kinds;
    for (auto kind : result.kinds) {
        std::vector<RunRecord> runs;
        for (std::size_t r = 0; r < config.experiment.runs; ++r) {
            runs.push_back(run_single(config, kind, r, vectors));
            if (progress) {
                progress(std::string(to_string(kind)) + " run " + std::to_string(r) + ": " +
                         fmt(runs.back().maskedAccuracy));
            }
        }
        result.runs.push_back(std::move(runs));
    }

    for (const auto& spec : PipelineSpec::all_variants()) {
        if (config.experiment.ablationRuns == 0) {
            break;
        }
        AblationRow row{spec, {}};
        for (auto kind : result.kinds) {
            double total = 0.0;
            for (std::size_t r = 0; r < config.experiment.ablationRuns; ++r) {
                const auto split =
                    split_dataset(vectors, SplitSpec::for_kind(kind, derive_seed(config.seed, "split", r)));
                TrainConfig tc = config.train;
                tc.svm.seed = derive_seed(config.train.svm.seed, "run", r);
                tc.ffnn.seed = derive_seed(config.train.ffnn.seed, "run", r);
                const auto evalSet = heldout_vectors(config.corpus, config.experiment.heldoutPerAuthor,
                                                     "evaluation-" + std::to_string(r));
                total += evaluate_accuracy(train(kind, tc, split.train, full_mask(), spec), evalSet);
            }
            row.meanAccuracy.push_back(total / static_cast<double>(config.experiment.ablationRuns));
        }
        if (progress) {
            progress("ablation " + spec.label());
        }
        result.ablation.push_back(std::move(row));
    }
    return result;
}

void write_runs_csv(std::ostream& out, const ExperimentResult& result) {
    out << "run";
    for (auto k : result.kinds) {
        out << ',' << to_string(k);
    }
    out << '\n';
    const std::size_t runs = result.runs.empty() ? 0 : result.runs.front().size();
    for (std::size_t r = 0; r < runs; ++r) {
        out << r + 1;
        for (const auto& column : result.runs) {
            out << ',' << fmt(column[r].maskedAccuracy);
        }
        out << '\n';
    }
}

void write_ablation_csv(std::ostream& out, const ExperimentResult& result) {
    out << "pipeline";
    for (auto k : result.kinds) {
        out << ',' << to_string(k);
    }
    out << '\n';
    for (const auto& row : result.ablation) {
        out << '"' << row.spec.label() << '"';
        for (double v : row.meanAccuracy) {
            out << ',' << fmt(v);
        }
        out << '\n';
    }
}

std::string experiment_json(const ExperimentResult& result) {
    Json runs = Json::array();
    for (const auto& column : result.runs) {
        for (const auto& r : column) {
            runs.push_back({{"kind", std::string(to_string(r.kind))},
                            {"run", r.run},
                            {"maskedAccuracy", r.maskedAccuracy},
                            {"unmaskedAccuracy", r.unmaskedAccuracy},
                            {"mask", mask_to_string(r.mask)},
                            {"bestFitness", r.bestFitness},
                            {"evaluations", r.evaluations}});
        }
    }
    Json ablation = Json::array();
    for (const auto& row : result.ablation) {
        Json cells;
        for (std::size_t i = 0; i < result.kinds.size(); ++i) {
            cells[std::string(to_string(result.kinds[i]))] = row.meanAccuracy[i];
        }
        ablation.push_back({{"pipeline", row.spec.label()}, {"spec", to_json(row.spec)}, {"accuracy", cells}});
    }
    return dump({{"runs", runs}, {"ablation", ablation}});
}

DefendedSystem build_defended_system(const AppConfig& config, std::span<const Document> corpus) {
    const auto vectors = extract_labeled(corpus);
    DefendedSystem sys;
    sys.ga = run_ssga(config.ga, fitness_for(config, vectors, "validation"));
    sys.bank = build_mask_bank(sys.ga, config.model, config.train, vectors, config.pipeline, config.switchSeed);
    sys.baseline = fit_baseline(vectors, config.pipeline, &sys.bank);
    sys.undefended = train(config.model, config.train, vectors, sys.ga.best.mask, config.pipeline);
    return sys;
}

double false_positive_rate(const MaskBank& bank, const NormalcyBaseline& baseline,
                           const DefensePolicy& policy, std::span<const Document> cleanDocs,
                           std::uint64_t seed) {
    if (cleanDocs.empty()) {
        throw EvaluationError("no documents to measure false positives on");
    }
    DefenseSession session(bank, baseline, policy, seed);
    std::size_t flagged = 0;
    for (const auto& doc : cleanDocs) {
        flagged += session.classify(doc).underAttack;
    }
    return static_cast<double>(flagged) / static_cast<double>(cleanDocs.size());
}

}  // namespace advattrib
