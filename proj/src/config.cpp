#include "advattrib/config.hpp"

#include "advattrib/error.hpp"
#include "advattrib/random.hpp"
#include "advattrib/serialization.hpp"

namespace advattrib {

namespace {

std::string target_name(FitnessTarget t) {
    return t == FitnessTarget::Training ? "training" : "validation";
}

FitnessTarget parse_target(const std::string& s) {
    if (s == "training") {
        return FitnessTarget::Training;
    }
    if (s == "validation") {
        return FitnessTarget::Validation;
    }
    throw ConfigError("unknown fitness target '" + s + "'");
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys,
                    const std::string& where) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : keys) {
            known = known || item.key() == k;
        }
        if (!known) {
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
        }
    }
}

}  // namespace

void AppConfig::resolve_seeds() {
    corpus.seed = derive_seed(seed, "corpus");
    ga.seed = derive_seed(seed, "ga");
    train.svm.seed = derive_seed(seed, "train-svm");
    train.ffnn.seed = derive_seed(seed, "train-ffnn");
    attack.seed = derive_seed(seed, "attack");
    switchSeed = derive_seed(seed, "mask-switch");
}

void AppConfig::validate() const {
    corpus.validate();
    ga.validate();
    if (experiment.runs == 0 || experiment.kinds.empty()) {
        throw ConfigError("experiment needs at least one run and one classifier");
    }
    if (experiment.heldoutPerAuthor == 0) {
        throw ConfigError("experiment.heldoutPerAuthor must be at least 1");
    }
    if (fitness.target == FitnessTarget::Validation && fitness.validationPerAuthor == 0) {
        throw ConfigError("fitness.validationPerAuthor must be at least 1");
    }
    if (defense.votesRequired < 1 || defense.votesRequired > 3) {
        throw ConfigError("defense.votesRequired must be 1, 2 or 3");
    }
    if (defense.windowSize == 0) {
        throw ConfigError("defense.windowSize must be at least 1");
    }
}

AppConfig config_from_json(const nlohmann::json& j) {
    try {
        AppConfig c;
        if (!j.is_object()) {
            throw ConfigError("config must be a JSON object");
        }
        reject_unknown(j, {"seed", "corpus", "pipeline", "train", "model", "ga", "fitness", "defense", "attack",
                           "experiment"},
                       "config");
        c.seed = j.value("seed", c.seed);
        if (j.contains("corpus")) {
            const auto& k = j.at("corpus");
            reject_unknown(k, {"numAuthors", "samplesPerAuthor", "charsPerSample", "authorIdBase", "concentration"},
                           "corpus");
            c.corpus.numAuthors = k.value("numAuthors", c.corpus.numAuthors);
            c.corpus.samplesPerAuthor = k.value("samplesPerAuthor", c.corpus.samplesPerAuthor);
            c.corpus.charsPerSample = k.value("charsPerSample", c.corpus.charsPerSample);
            c.corpus.authorIdBase = k.value("authorIdBase", c.corpus.authorIdBase);
            c.corpus.concentration = k.value("concentration", c.corpus.concentration);
        }
        if (j.contains("pipeline")) {
            const auto& p = j.at("pipeline");
            c.pipeline.useNormalization = p.value("useNormalization", c.pipeline.useNormalization);
            c.pipeline.useStandardization = p.value("useStandardization", c.pipeline.useStandardization);
            c.pipeline.useTfidf = p.value("useTfidf", c.pipeline.useTfidf);
        }
        if (j.contains("train")) {
            c.train = train_config_from_json(j.at("train"));
        }
        if (j.contains("model")) {
            c.model = parse_model_kind(j.at("model").get<std::string>());
        }
        if (j.contains("ga")) {
            const auto& g = j.at("ga");
            reject_unknown(g, {"populationSize", "mutationRate", "mutationMode", "maxEvaluations", "targetFitness"},
                           "ga");
            c.ga.populationSize = g.value("populationSize", c.ga.populationSize);
            c.ga.mutationRate = g.value("mutationRate", c.ga.mutationRate);
            if (g.contains("mutationMode")) {
                c.ga.mutationMode = parse_mutation_mode(g.at("mutationMode").get<std::string>());
            }
            c.ga.maxEvaluations = g.value("maxEvaluations", c.ga.maxEvaluations);
            c.ga.targetFitness = g.value("targetFitness", c.ga.targetFitness);
        }
        if (j.contains("fitness")) {
            const auto& f = j.at("fitness");
            reject_unknown(f, {"model", "target", "validationPerAuthor"}, "fitness");
            if (f.contains("model")) {
                c.fitness.model = parse_model_kind(f.at("model").get<std::string>());
            }
            if (f.contains("target")) {
                c.fitness.target = parse_target(f.at("target").get<std::string>());
            }
            c.fitness.validationPerAuthor = f.value("validationPerAuthor", c.fitness.validationPerAuthor);
        }
        if (j.contains("defense")) {
            const auto& d = j.at("defense");
            reject_unknown(d, {"votesRequired", "windowSize", "repetitionCosine", "calmQueries", "switchInterval"},
                           "defense");
            c.defense.votesRequired = d.value("votesRequired", c.defense.votesRequired);
            c.defense.windowSize = d.value("windowSize", c.defense.windowSize);
            c.defense.repetitionCosine = d.value("repetitionCosine", c.defense.repetitionCosine);
            c.defense.calmQueries = d.value("calmQueries", c.defense.calmQueries);
            c.defense.switchInterval = d.value("switchInterval", c.defense.switchInterval);
        }
        if (j.contains("attack")) {
            const auto& a = j.at("attack");
            reject_unknown(a, {"probeBudget", "surrogate", "editFraction", "targetAuthor", "probeMixMax",
                               "agreementHoldout", "candidatesPerStep", "confidence", "surrogateTrain"},
                           "attack");
            c.attack.probeBudget = a.value("probeBudget", c.attack.probeBudget);
            if (a.contains("surrogate")) {
                c.attack.surrogateKind = parse_model_kind(a.at("surrogate").get<std::string>());
            }
            c.attack.editFraction = a.value("editFraction", c.attack.editFraction);
            if (a.contains("targetAuthor") && !a.at("targetAuthor").is_null()) {
                c.attack.targetAuthor = a.at("targetAuthor").get<AuthorId>();
            }
            c.attack.probeMixMax = a.value("probeMixMax", c.attack.probeMixMax);
            c.attack.agreementHoldout = a.value("agreementHoldout", c.attack.agreementHoldout);
            c.attack.candidatesPerStep = a.value("candidatesPerStep", c.attack.candidatesPerStep);
            c.attack.confidence = a.value("confidence", c.attack.confidence);
            if (a.contains("surrogateTrain")) {
                c.attack.surrogateConfig = train_config_from_json(a.at("surrogateTrain"));
            }
        }
        if (j.contains("experiment")) {
            const auto& e = j.at("experiment");
            reject_unknown(e, {"runs", "kinds", "heldoutPerAuthor", "ablationRuns"}, "experiment");
            c.experiment.runs = e.value("runs", c.experiment.runs);
            if (e.contains("kinds")) {
                c.experiment.kinds.clear();
                for (const auto& k : e.at("kinds")) {
                    c.experiment.kinds.push_back(parse_model_kind(k.get<std::string>()));
                }
            }
            c.experiment.heldoutPerAuthor = e.value("heldoutPerAuthor", c.experiment.heldoutPerAuthor);
            c.experiment.ablationRuns = e.value("ablationRuns", c.experiment.ablationRuns);
        }
        c.resolve_seeds();
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config: ") + e.what());
    }
}

nlohmann::ordered_json to_json(const AppConfig& c) {
    using J = nlohmann::ordered_json;
    J kinds = J::array();
    for (auto k : c.experiment.kinds) {
        kinds.push_back(std::string(to_string(k)));
    }
    J out;
    out["seed"] = c.seed;
    out["corpus"] = {{"numAuthors", c.corpus.numAuthors},
                     {"samplesPerAuthor", c.corpus.samplesPerAuthor},
                     {"charsPerSample", c.corpus.charsPerSample},
                     {"authorIdBase", c.corpus.authorIdBase},
                     {"concentration", c.corpus.concentration}};
    out["pipeline"] = to_json(c.pipeline);
    out["train"] = to_json(c.train);
    out["model"] = std::string(to_string(c.model));
    out["ga"] = {{"populationSize", c.ga.populationSize},
                 {"mutationRate", c.ga.mutationRate},
                 {"mutationMode", std::string(to_string(c.ga.mutationMode))},
                 {"maxEvaluations", c.ga.maxEvaluations},
                 {"targetFitness", c.ga.targetFitness}};
    out["fitness"] = {{"model", std::string(to_string(c.fitness.model))},
                      {"target", target_name(c.fitness.target)},
                      {"validationPerAuthor", c.fitness.validationPerAuthor}};
    out["defense"] = {{"votesRequired", c.defense.votesRequired},
                      {"windowSize", c.defense.windowSize},
                      {"repetitionCosine", c.defense.repetitionCosine},
                      {"calmQueries", c.defense.calmQueries},
                      {"switchInterval", c.defense.switchInterval}};
    out["attack"] = {{"probeBudget", c.attack.probeBudget},
                     {"surrogate", std::string(to_string(c.attack.surrogateKind))},
                     {"editFraction", c.attack.editFraction},
                     {"targetAuthor", c.attack.targetAuthor ? J(*c.attack.targetAuthor) : J(nullptr)},
                     {"probeMixMax", c.attack.probeMixMax},
                     {"agreementHoldout", c.attack.agreementHoldout},
                     {"candidatesPerStep", c.attack.candidatesPerStep},
                     {"confidence", c.attack.confidence},
                     {"surrogateTrain", to_json(c.attack.surrogateConfig)}};
    out["experiment"] = {{"runs", c.experiment.runs},
                         {"kinds", kinds},
                         {"heldoutPerAuthor", c.experiment.heldoutPerAuthor},
                         {"ablationRuns", c.experiment.ablationRuns}};
    return out;
}

nlohmann::ordered_json seeds_json(const AppConfig& c) {
    return {{"master", c.seed},
            {"corpus", c.corpus.seed},
            {"ga", c.ga.seed},
            {"trainSvm", c.train.svm.seed},
            {"trainFfnn", c.train.ffnn.seed},
            {"attack", c.attack.seed},
            {"maskSwitch", c.switchSeed}};
}

}  // namespace advattrib
