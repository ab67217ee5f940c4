// advattrib command-line front end.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "advattrib/commands.hpp"
#include "advattrib/error.hpp"

using advattrib::CommandIo;
using OJson = nlohmann::ordered_json;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string manifest;
};

void add_common(CLI::App* cmd, Common& common) {
    cmd->add_option("-c,--config", common.config, "JSON config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", common.seed, "master seed (overrides ADVATTRIB_SEED and the config)");
    cmd->add_option("--manifest", common.manifest, "where to write the run manifest");
}

void put(OJson& args, const char* key, const std::string& value) {
    if (!value.empty()) {
        args[key] = value;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Authorship attribution under adversarial attack"};
    app.require_subcommand(1);

    Common common;
    OJson args = OJson::object();
    std::string command;

    std::string out;
    std::string corpus;
    std::string tests;
    std::string bank;
    std::string baseline;
    std::string model;
    std::string arrow = "ascii";
    std::string verdicts;
    std::string artifacts;
    bool undefended = false;
    std::optional<std::uint64_t> attackSeed;
    bool quiet = false;
    std::string runs;
    double alpha = 0.05;
    std::string forceVariant;
    std::string manifestIn;

    auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic author corpus");
    add_common(gen, common);
    gen->add_option("-o,--out", out, "output directory")->required();

    auto* trainCmd = app.add_subcommand("train", "train one unmasked model on a corpus");
    add_common(trainCmd, common);
    trainCmd->add_option("--corpus", corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
    trainCmd->add_option("-o,--out", out, "output directory")->required();

    auto* evolve = app.add_subcommand("evolve", "evolve feature masks and build the defended system");
    add_common(evolve, common);
    evolve->add_option("--corpus", corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
    evolve->add_option("-o,--out", out, "output directory")->required();

    auto* classify = app.add_subcommand("classify", "classify the documents listed in a tests file");
    add_common(classify, common);
    classify->add_option("--tests", tests, "AdversarialTests.txt")->required();
    classify->add_option("--bank", bank, "bank.json");
    classify->add_option("--baseline", baseline, "baseline.json");
    classify->add_option("--model", model, "model.json (undefended, instead of bank and baseline)");
    classify->add_option("-o,--out", out, "results file")->required();
    classify->add_option("--arrow", arrow, "separator style")->check(CLI::IsMember({"ascii", "utf8"}));
    classify->add_option("--verdicts", verdicts, "defense verdict log (CSV)");

    auto* attack = app.add_subcommand("attack", "run the kill chain against a trained system");
    add_common(attack, common);
    attack->add_option("--corpus", corpus, "public corpus directory")->required()->check(CLI::ExistingDirectory);
    attack->add_option("--artifacts", artifacts, "directory written by evolve")->required()->check(
        CLI::ExistingDirectory);
    attack->add_option("-o,--out", out, "working directory for the attack")->required();
    attack->add_flag("--undefended", undefended, "attack the single-mask model without a detector");
    attack->add_option("--attack-seed", attackSeed, "attack session index");

    auto* experiment = app.add_subcommand("experiment", "30-run accuracy experiment and pipeline ablation");
    add_common(experiment, common);
    experiment->add_option("-o,--out", out, "output directory")->required();
    experiment->add_flag("-q,--quiet", quiet, "no progress output");

    auto* statsCmd = app.add_subcommand("stats", "ANOVA, F-test, t-tests and equivalence classes");
    add_common(statsCmd, common);
    statsCmd->add_option("--runs", runs, "run x algorithm CSV")->required()->check(CLI::ExistingFile);
    statsCmd->add_option("-o,--out", out, "output directory")->required();
    statsCmd->add_option("--alpha", alpha, "significance level")->check(CLI::Range(0.0, 1.0));
    statsCmd->add_option("--force-variant", forceVariant, "always use this t-test")->check(
        CLI::IsMember({"pooled", "welch"}));

    auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
    replay->add_option("manifest", manifestIn, "manifest.json")->required()->check(CLI::ExistingFile);
    replay->add_option("-o,--out", out, "redirect the primary output");

    CLI11_PARSE(app, argc, argv);

    const CommandIo io{&std::cout, &std::cerr};
    auto* selected = app.get_subcommands().front();
    command = selected->get_name();

    if (command == "replay") {
        return advattrib::replay_manifest(manifestIn, out.empty() ? std::nullopt : std::optional<std::string>(out),
                                          io);
    }

    put(args, "out", out);
    put(args, "corpus", corpus);
    put(args, "manifest", common.manifest);
    if (command == "classify") {
        put(args, "tests", tests);
        put(args, "bank", bank);
        put(args, "baseline", baseline);
        put(args, "model", model);
        put(args, "verdicts", verdicts);
        args["arrow"] = arrow;
        if (model.empty() && (bank.empty() || baseline.empty())) {
            std::cerr << "error: classify needs --model or both --bank and --baseline\n";
            return 2;
        }
    } else if (command == "attack") {
        put(args, "artifacts", artifacts);
        args["undefended"] = undefended;
        if (attackSeed) {
            args["attackSeed"] = *attackSeed;
        }
    } else if (command == "experiment") {
        args["quiet"] = quiet;
    } else if (command == "stats") {
        put(args, "runs", runs);
        args["alpha"] = alpha;
        put(args, "forceVariant", forceVariant);
    }

    advattrib::AppConfig config;
    try {
        config = advattrib::load_config(
            common.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(common.config), common.seed);
    } catch (const advattrib::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return advattrib::run_command(command, config, args, io);
}
