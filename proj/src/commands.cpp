#include "advattrib/commands.hpp"

#include <cerrno>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>

#include "advattrib/adversary.hpp"
#include "advattrib/error.hpp"
#include "advattrib/experiment.hpp"
#include "advattrib/serialization.hpp"
#include "advattrib/stats.hpp"

namespace advattrib {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

namespace {

constexpr double kDropThreshold = 11.0;

std::string arg_string(const OJson& args, const char* key) {
    if (!args.contains(key) || !args.at(key).is_string()) {
        throw ConfigError(std::string("missing argument '") + key + "'");
    }
    return args.at(key).get<std::string>();
}

std::optional<std::string> arg_optional(const OJson& args, const char* key) {
    if (!args.contains(key) || args.at(key).is_null()) {
        return std::nullopt;
    }
    return args.at(key).get<std::string>();
}

struct Outputs {
    std::vector<std::string> paths;

    void write(const fs::path& path, std::string_view contents) {
        write_text_file(path, contents);
        paths.push_back(path.generic_string());
    }
};

void write_manifest(const fs::path& path, const std::string& command, const AppConfig& config,
                    const OJson& arguments, Outputs& outputs) {
    RunManifest m{command, arguments, to_json(config), seeds_json(config), outputs.paths};
    m.artifactPaths.push_back(path.generic_string());
    save_json_file(path, to_json(m));
}

fs::path manifest_path(const OJson& args, const fs::path& fallback) {
    if (auto p = arg_optional(args, "manifest")) {
        return *p;
    }
    return fallback;
}

std::vector<Document> strip_labels(std::vector<Document> docs) {
    for (auto& d : docs) {
        d.authorId.reset();
    }
    return docs;
}

int cmd_gen_corpus(const AppConfig& config, const OJson& args, const CommandIo& io) {
    const fs::path out = arg_string(args, "out");
    const auto docs = generate_corpus(config.corpus);
    write_corpus(out, config.corpus, docs);
    Outputs outputs;
    outputs.paths.push_back((out / "corpus.json").generic_string());
    for (const auto& d : docs) {
        outputs.paths.push_back((out / std::to_string(*d.authorId)).generic_string() + "/" +
                                d.docId.substr(d.docId.find('_') + 1) + ".txt");
    }
    std::ostringstream csv;
    write_feature_csv(csv, extract_labeled(docs));
    outputs.write(out / "features.csv", csv.str());
    write_manifest(manifest_path(args, out / "manifest.json"), "gen-corpus", config, args, outputs);
    *io.out << "wrote " << docs.size() << " documents to " << out.string() << "\n";
    return 0;
}

int cmd_train(const AppConfig& config, const OJson& args, const CommandIo& io) {
    const auto corpus = read_corpus(arg_string(args, "corpus"));
    const fs::path out = arg_string(args, "out");
    fs::create_directories(out);
    const auto vectors = extract_labeled(corpus.documents);
    const auto model = train(config.model, config.train, vectors, full_mask(), config.pipeline);
    Outputs outputs;
    outputs.write(out / "model.json", dump(to_json(model)));
    write_manifest(manifest_path(args, out / "manifest.json"), "train", config, args, outputs);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", evaluate_accuracy(model, vectors, Role::Training));
    *io.out << to_string(config.model) << " trained on " << vectors.size() << " documents, training accuracy "
            << buf << "\n";
    return 0;
}

int cmd_evolve(const AppConfig& config, const OJson& args, const CommandIo& io) {
    const auto corpus = read_corpus(arg_string(args, "corpus"));
    const fs::path out = arg_string(args, "out");
    fs::create_directories(out);
    AppConfig c = config;
    c.corpus = corpus.config;
    const auto sys = build_defended_system(c, corpus.documents);

    Outputs outputs;
    outputs.write(out / "masks.json", masks_json(sys.ga.population));
    std::ostringstream trace;
    write_trace_csv(trace, sys.ga.fitnessTrace);
    outputs.write(out / "fitness_trace.csv", trace.str());
    outputs.write(out / "bank.json", dump(to_json(sys.bank)));
    outputs.write(out / "baseline.json", dump(to_json(sys.baseline)));
    outputs.write(out / "model.json", dump(to_json(sys.undefended)));
    write_manifest(manifest_path(args, out / "manifest.json"), "evolve", config, args, outputs);

    char buf[96];
    std::snprintf(buf, sizeof buf, "best fitness %.4f after %zu evaluations, %zu masks\n", sys.ga.best.fitness,
                  sys.ga.evaluationsUsed, sys.bank.size());
    *io.out << buf;
    return 0;
}

std::vector<std::pair<std::string, Document>> read_tests_file(const fs::path& testsFile) {
    std::ifstream in(testsFile);
    if (!in) {
        throw IoError("cannot read tests file " + testsFile.string());
    }
    const fs::path dir = testsFile.parent_path();
    std::vector<std::pair<std::string, Document>> docs;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const fs::path path = dir / line;
        if (!fs::is_regular_file(path)) {
            throw IoError("listed document not found: " + line);
        }
        docs.emplace_back(line, Document{line, std::nullopt, read_text_file(path)});
    }
    return docs;
}

std::string format_results(const std::vector<std::pair<std::string, Document>>& docs,
                           const std::function<AuthorId(const Document&)>& classify, bool utf8Arrow) {
    const char* arrow = utf8Arrow ? " \xE2\x86\x92 " : " -> ";
    std::string out;
    for (const auto& [name, doc] : docs) {
        out += name + arrow + std::to_string(classify(doc)) + "\n";
    }
    return out;
}

bool utf8_arrow(const OJson& args) {
    const auto arrow = arg_optional(args, "arrow").value_or("ascii");
    if (arrow != "ascii" && arrow != "utf8") {
        throw ConfigError("--arrow must be ascii or utf8");
    }
    return arrow == "utf8";
}

int cmd_classify(const AppConfig& config, const OJson& args, const CommandIo& io) {
    const fs::path tests = arg_string(args, "tests");
    const fs::path out = arg_string(args, "out");
    const bool utf8 = utf8_arrow(args);
    std::string results;
    try {
        const auto docs = read_tests_file(tests);
        if (auto modelPath = arg_optional(args, "model")) {
            const auto model = model_from_json(load_json_file(*modelPath));
            results = format_results(
                docs, [&](const Document& d) { return predict(model, extract_unigrams(d)); }, utf8);
        } else {
            const auto bank = bank_from_json(load_json_file(arg_string(args, "bank")));
            const auto baseline = baseline_from_json(load_json_file(arg_string(args, "baseline")));
            DefenseSession session(bank, baseline, config.defense, derive_seed(config.seed, "classify-session"));
            std::vector<DefenseVerdict> verdicts;
            results = format_results(
                docs,
                [&](const Document& d) {
                    verdicts.push_back(session.classify(d));
                    return verdicts.back().authorId;
                },
                utf8);
            if (auto log = arg_optional(args, "verdicts")) {
                std::ostringstream csv;
                write_verdict_log(csv, verdicts);
                write_text_file(*log, csv.str());
            }
        }
        if (!out.parent_path().empty()) {
            fs::create_directories(out.parent_path());
        }
        write_text_file(out, results);
    } catch (...) {
        std::error_code ec;
        fs::remove(out, ec);
        throw;
    }
    Outputs outputs;
    outputs.paths.push_back(out.generic_string());
    if (auto log = arg_optional(args, "verdicts")) {
        outputs.paths.push_back(fs::path(*log).generic_string());
    }
    fs::path defaultManifest = out;
    defaultManifest.replace_extension(".manifest.json");
    write_manifest(manifest_path(args, defaultManifest), "classify", config, args, outputs);
    *io.out << "classified " << std::count(results.begin(), results.end(), '\n') << " documents into "
            << out.string() << "\n";
    return 0;
}

int cmd_attack(const AppConfig& config, const OJson& args, const CommandIo& io) {
    const auto corpus = read_corpus(arg_string(args, "corpus"));
    const fs::path artifacts = arg_string(args, "artifacts");
    const fs::path out = arg_string(args, "out");
    const bool undefended = args.value("undefended", false);

    AttackConfig attack = config.attack;
    if (args.contains("attackSeed") && !args.at("attackSeed").is_null()) {
        attack.seed = derive_seed(config.attack.seed, "session", args.at("attackSeed").get<std::uint64_t>());
    }
    const auto attackTexts = generate_heldout(corpus.config, 1, "attack");
    attack.validate(attackTexts.size());
    const auto publicTexts = strip_labels(corpus.documents);

    AttackReport report;
    if (undefended) {
        const auto model = model_from_json(load_json_file(artifacts / "model.json"));
        report = run_kill_chain(UndefendedTarget(model), publicTexts, attackTexts, attack, &out);
    } else {
        const auto bank = bank_from_json(load_json_file(artifacts / "bank.json"));
        const auto baseline = baseline_from_json(load_json_file(artifacts / "baseline.json"));
        report = run_kill_chain(DefendedTarget(bank, baseline, config.defense), publicTexts, attackTexts, attack,
                                &out);
    }

    Outputs outputs;
    outputs.paths.push_back((out / "surrogate.json").generic_string());
    for (const auto& f : report.adversarialFiles) {
        outputs.paths.push_back((out / f).generic_string());
    }
    outputs.paths.push_back((out / "AdversarialTests.txt").generic_string());
    outputs.paths.push_back((out / "attack_session.json").generic_string());
    outputs.write(out / "attack_report.json", attack_report_json(report));
    write_manifest(manifest_path(args, out / "manifest.json"), "attack", config, args, outputs);

    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "%s target: baseline %.4f, under attack %.4f, detected %.4f\naccuracyDropPct %.2f %s (threshold %.0f)\n",
                  undefended ? "undefended" : "defended", report.baselineAccuracy, report.underAttackAccuracy,
                  report.detectedFraction, report.accuracyDropPct,
                  report.accuracyDropPct < kDropThreshold ? "PASS" : "FAIL", kDropThreshold);
    *io.out << buf;
    return 0;
}

int cmd_experiment(const AppConfig& config, const OJson& args, const CommandIo& io) {
    const fs::path out = arg_string(args, "out");
    fs::create_directories(out);
    const bool quiet = args.value("quiet", false);
    const auto result = run_experiment(config, [&](const std::string& msg) {
        if (!quiet) {
            *io.err << msg << "\n";
        }
    });
    Outputs outputs;
    std::ostringstream runs;
    write_runs_csv(runs, result);
    outputs.write(out / "runs.csv", runs.str());
    std::ostringstream ablation;
    write_ablation_csv(ablation, result);
    outputs.write(out / "ablation.csv", ablation.str());
    outputs.write(out / "experiment.json", experiment_json(result));
    write_manifest(manifest_path(args, out / "manifest.json"), "experiment", config, args, outputs);
    *io.out << runs.str();
    return 0;
}

int cmd_stats(const AppConfig& config, const OJson& args, const CommandIo& io) {
    const fs::path runsPath = arg_string(args, "runs");
    const fs::path out = arg_string(args, "out");
    std::ifstream in(runsPath);
    if (!in) {
        throw IoError("cannot read " + runsPath.string());
    }
    const auto samples = stats::read_runs_csv(in);
    const double alpha = args.value("alpha", 0.05);
    std::optional<stats::TTestVariant> force;
    if (auto v = arg_optional(args, "forceVariant")) {
        if (*v == "pooled") {
            force = stats::TTestVariant::Pooled;
        } else if (*v == "welch") {
            force = stats::TTestVariant::Welch;
        } else {
            throw ConfigError("--force-variant must be pooled or welch");
        }
    }
    const auto report = stats::build_report(samples, alpha, force);
    fs::create_directories(out);
    std::ostringstream text;
    stats::write_text_report(text, report);
    Outputs outputs;
    outputs.write(out / "report.txt", text.str());
    outputs.write(out / "report.json", stats::report_json(report));
    write_manifest(manifest_path(args, out / "manifest.json"), "stats", config, args, outputs);
    *io.out << text.str();
    return 0;
}

const std::map<std::string, std::function<int(const AppConfig&, const OJson&, const CommandIo&)>>&
command_table() {
    static const std::map<std::string, std::function<int(const AppConfig&, const OJson&, const CommandIo&)>>
        table = {{"gen-corpus", cmd_gen_corpus}, {"train", cmd_train},       {"evolve", cmd_evolve},
                 {"classify", cmd_classify},     {"attack", cmd_attack},     {"experiment", cmd_experiment},
                 {"stats", cmd_stats}};
    return table;
}

}  // namespace

OJson to_json(const RunManifest& m) {
    return {{"command", m.command},
            {"arguments", m.arguments},
            {"configSnapshot", m.configSnapshot},
            {"seeds", m.seeds},
            {"artifactPaths", m.artifactPaths}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.arguments = OJson::parse(j.at("arguments").dump());
        m.configSnapshot = OJson::parse(j.at("configSnapshot").dump());
        m.seeds = OJson::parse(j.at("seeds").dump());
        m.artifactPaths = j.at("artifactPaths").get<std::vector<std::string>>();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed manifest: ") + e.what());
    }
}

std::optional<std::uint64_t> seed_from_environment() {
    const char* raw = std::getenv("ADVATTRIB_SEED");
    if (raw == nullptr || *raw == '\0') {
        return std::nullopt;
    }
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw, &end, 10);
    if (errno != 0 || end == raw || *end != '\0' || raw[0] == '-') {
        throw ConfigError(std::string("ADVATTRIB_SEED is not an unsigned integer: ") + raw);
    }
    return static_cast<std::uint64_t>(v);
}

AppConfig load_config(const std::optional<fs::path>& configPath, std::optional<std::uint64_t> seedFlag) {
    nlohmann::json j = nlohmann::json::object();
    if (configPath) {
        if (!fs::is_regular_file(*configPath)) {
            throw ConfigError("config file not found: " + configPath->string());
        }
        try {
            j = nlohmann::json::parse(read_text_file(*configPath));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("cannot parse " + configPath->string() + ": " + e.what());
        }
    }
    if (auto env = seed_from_environment()) {
        j["seed"] = *env;
    }
    if (seedFlag) {
        j["seed"] = *seedFlag;
    }
    return config_from_json(j);
}

int run_command(const std::string& command, const AppConfig& config, const OJson& arguments,
                const CommandIo& io) {
    const auto& table = command_table();
    const auto it = table.find(command);
    if (it == table.end()) {
        *io.err << "unknown command '" << command << "'\n";
        return 2;
    }
    try {
        return it->second(config, arguments, io);
    } catch (const ConfigError& e) {
        *io.err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        *io.err << "error: " << e.what() << "\n";
        return 1;
    }
}

int replay_manifest(const fs::path& manifestPath, const std::optional<std::string>& outOverride,
                    const CommandIo& io) {
    RunManifest m;
    AppConfig config;
    try {
        m = manifest_from_json(load_json_file(manifestPath));
        config = config_from_json(nlohmann::json::parse(m.configSnapshot.dump()));
    } catch (const std::exception& e) {
        *io.err << "error: " << e.what() << "\n";
        return 2;
    }
    OJson args = m.arguments;
    if (outOverride) {
        args["out"] = *outOverride;
        args.erase("manifest");
        args.erase("verdicts");
    }
    return run_command(m.command, config, args, io);
}

std::string classify_listing(const fs::path& testsFile, const MaskBank& bank, const NormalcyBaseline& baseline,
                             const DefensePolicy& policy, std::uint64_t sessionSeed, bool utf8Arrow) {
    const auto docs = read_tests_file(testsFile);
    DefenseSession session(bank, baseline, policy, sessionSeed);
    return format_results(docs, [&](const Document& d) { return session.classify(d).authorId; }, utf8Arrow);
}

}  // namespace advattrib
