// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <regex>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "advattrib/adversary.hpp"
#include "advattrib/commands.hpp"
#include "advattrib/corpus.hpp"
#include "advattrib/experiment.hpp"
#include "advattrib/models.hpp"
#include "advattrib/serialization.hpp"
#include "advattrib/ssga.hpp"
#include "advattrib/stats.hpp"
#include "quadrature.hpp"
#include "run_table.hpp"

using namespace advattrib;
namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

namespace {

constexpr double kDropThreshold = 11.0;
constexpr std::size_t kAttackSessions = 5;

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
        }
        notes.push_back((ok ? "ok   " : "FAIL ") + what);
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

bool near(double value, double expected, double tol) {
    return std::abs(value - expected) <= tol;
}

// Shared fixtures: the default configuration, its corpus, the defended
// system and the attack sessions against both targets.
const AppConfig& app() {
    static const AppConfig c = load_config(std::nullopt, std::nullopt);
    return c;
}

const std::vector<Document>& corpus() {
    static const auto docs = generate_corpus(app().corpus);
    return docs;
}

const DefendedSystem& defended() {
    static const auto s = build_defended_system(app(), corpus());
    return s;
}

struct SessionPair {
    AttackReport undefended;
    AttackReport defended;
};

const std::vector<SessionPair>& attack_sessions() {
    static const auto sessions = [] {
        std::vector<Document> publicTexts = corpus();
        for (auto& d : publicTexts) {
            d.authorId.reset();
        }
        const auto attackTexts = generate_heldout(app().corpus, 1, "attack");
        const auto& sys = defended();
        const UndefendedTarget plain(sys.undefended);
        const DefendedTarget guarded(sys.bank, sys.baseline, app().defense);
        std::vector<SessionPair> out;
        for (std::size_t s = 0; s < kAttackSessions; ++s) {
            AttackConfig a = app().attack;
            a.seed = derive_seed(app().attack.seed, "session", s);
            out.push_back({run_kill_chain(plain, publicTexts, attackTexts, a),
                           run_kill_chain(guarded, publicTexts, attackTexts, a)});
        }
        return out;
    }();
    return sessions;
}

Outcome criterion_statistics() {
    Outcome o;
    const auto runs = testdata::published_runs();
    const auto start = std::chrono::steady_clock::now();
    const auto report = stats::build_report(runs);
    const auto pooled = stats::t_test_pooled(runs[0], runs[1]);
    const auto welch = stats::t_test_welch(runs[1], runs[2]);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const auto& a = report.anova;
    o.require(near(a.fStat, 36.35, 2.0), "ANOVA F " + fmt("%.3f", a.fStat) + " within 2 of 36.35");
    o.require(a.pValue < 1e-10, "ANOVA p " + fmt("%.3g", a.pValue) + " < 1e-10");
    o.require(near(a.fCrit, 3.10, 0.01), "F critical " + fmt("%.4f", a.fCrit) + " within 0.01 of 3.10");
    o.require(near(pooled.tStat, -7.0, 0.3), "pooled RBFSVM/LSVM t " + fmt("%.3f", pooled.tStat));
    o.require(pooled.df == 58.0, "pooled df " + fmt("%.0f", pooled.df));
    o.require(pooled.pooledVariance && near(*pooled.pooledVariance, 0.00209, 0.0002),
              "pooled variance " + fmt("%.5f", pooled.pooledVariance.value_or(0.0)));
    o.require(near(welch.tStat, -0.555, 0.05), "Welch LSVM/FFNN t " + fmt("%.3f", welch.tStat));
    o.require(near(welch.pTwoTail, 0.581, 0.02), "Welch LSVM/FFNN p " + fmt("%.3f", welch.pTwoTail));
    const std::vector<std::vector<std::string>> expected = {{"RBFSVM"}, {"LSVM", "FFNN"}};
    o.require(report.partition.classes == expected, "partition {RBFSVM} {LSVM, FFNN}");
    o.require(seconds < 1.0, "runtime " + fmt("%.4f", seconds) + " s");
    return o;
}

Outcome criterion_experiment() {
    Outcome o;
    const auto result = run_experiment(app());
    for (std::size_t k = 0; k < result.kinds.size(); ++k) {
        const auto& runs = result.runs[k];
        const std::string name(to_string(result.kinds[k]));
        double mean = 0.0;
        std::size_t close = 0;
        for (const auto& r : runs) {
            mean += r.maskedAccuracy;
            close += r.maskedAccuracy >= r.unmaskedAccuracy - 0.02 ? 1 : 0;
        }
        mean /= static_cast<double>(runs.size());
        o.require(runs.size() == 30, name + " runs " + std::to_string(runs.size()));
        o.require(mean >= 0.45 && mean <= 0.95, name + " mean masked accuracy " + fmt("%.4f", mean));
        o.require(close >= 25, name + " masked >= unmasked - 0.02 in " + std::to_string(close) + "/30 runs");
    }
    double baseline = 0.0;
    for (const auto& s : attack_sessions()) {
        baseline += s.defended.baselineAccuracy;
    }
    baseline /= static_cast<double>(kAttackSessions);
    o.require(baseline >= 0.60 && baseline <= 0.80, "defended clean accuracy " + fmt("%.3f", baseline));
    return o;
}

double bit_count(const FeatureMask& m) {
    return static_cast<double>(m.count()) / static_cast<double>(kAlphabetSize);
}

Outcome criterion_genetic_search() {
    Outcome o;
    std::size_t reached = 0;
    bool monotone = true;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        GaConfig c;
        c.seed = seed;
        const auto r = run_ssga(c, bit_count);
        for (std::size_t i = 1; i < r.fitnessTrace.size(); ++i) {
            monotone = monotone && r.fitnessTrace[i].bestFitness >= r.fitnessTrace[i - 1].bestFitness;
        }
        reached += r.best.fitness >= 0.9 ? 1 : 0;
    }
    o.require(monotone, "best-so-far trace never decreases");
    o.require(reached == 10, "bit-count fitness >= 0.9 for " + std::to_string(reached) + "/10 seeds");

    GaConfig stop;
    stop.seed = 3;
    stop.targetFitness = 0.0;
    const auto immediate = run_ssga(stop, bit_count);
    stop.targetFitness = 2.0;
    stop.maxEvaluations = 137;
    const auto capped = run_ssga(stop, bit_count);
    o.require(immediate.evaluationsUsed == 30, "reachable target stops after the initial population");
    o.require(capped.evaluationsUsed == 137, "unreachable target stops at exactly maxEvaluations");

    GaConfig c;
    c.seed = 8;
    const auto a = masks_json(run_ssga(c, bit_count).population);
    const auto b = masks_json(run_ssga(c, bit_count).population);
    o.require(a == b, "masks.json identical for the same seed");
    o.require(masks_json(parse_masks_json(a)) == a, "masks.json parses back to itself");
    return o;
}

Outcome criterion_backprop() {
    Outcome o;
    std::vector<LabeledVector> toy;
    Rng rng(17);
    for (int i = 0; i < 5; ++i) {
        LabeledVector r;
        for (double& v : r.features.values) {
            v = 2.0 * uniform01(rng) - 1.0;
        }
        r.author = 1000 + static_cast<AuthorId>(i % 3);
        toy.push_back(r);
    }
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        FfnnConfig c;
        c.seed = seed;
        const double err = gradient_check(c, toy);
        o.require(err < 1e-4, "seed " + std::to_string(seed) + " relative error " + fmt("%.2e", err));
    }
    return o;
}

Outcome criterion_attack() {
    Outcome o;
    std::size_t good = 0;
    for (std::size_t s = 0; s < kAttackSessions; ++s) {
        const auto& p = attack_sessions()[s];
        const double u = p.undefended.accuracyDropPct;
        const double d = p.defended.accuracyDropPct;
        const bool ok = u > kDropThreshold && d < kDropThreshold && u > d;
        good += ok ? 1 : 0;
        o.notes.push_back("     session " + std::to_string(s) + ": undefended drop " + fmt("%.1f", u) +
                          "%, defended drop " + fmt("%.1f", d) + "%, detected " +
                          fmt("%.2f", p.defended.detectedFraction));
    }
    o.require(good >= 4, "undefended > 11% > defended in " + std::to_string(good) + "/5 sessions");
    const auto clean = generate_heldout(app().corpus, 4, "acceptance-clean");
    const double fpr = false_positive_rate(defended().bank, defended().baseline, app().defense, clean,
                                           derive_seed(app().seed, "acceptance-fpr"));
    o.require(fpr <= 0.10, "false-positive rate " + fmt("%.3f", fpr));
    return o;
}

Outcome criterion_round_trip() {
    Outcome o;
    const fs::path root = fs::temp_directory_path() / ("advattrib-acceptance-" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::ostringstream sink;
    std::ostringstream err;
    const CommandIo io{&sink, &err};
    auto run = [&](const std::string& cmd, OJson args) { return run_command(cmd, app(), args, io) == 0; };
    const auto corpusDir = (root / "corpus").string();
    const auto artifacts = (root / "artifacts").string();
    const auto attackDir = root / "attack";

    bool ok = run("gen-corpus", {{"out", corpusDir}}) && run("evolve", {{"corpus", corpusDir}, {"out", artifacts}}) &&
              run("attack", {{"corpus", corpusDir}, {"artifacts", artifacts}, {"out", attackDir.string()}});
    o.require(ok, "gen-corpus, evolve and attack succeed" + (ok ? std::string() : ": " + err.str()));
    if (!ok) {
        return o;
    }
    std::size_t files = 0;
    for (std::size_t i = 0; i < 25; ++i) {
        files += fs::is_regular_file(attackDir / adversarial_file_name(i)) ? 1 : 0;
    }
    o.require(files == 25, std::to_string(files) + " adversarial files written");

    const auto results = root / "results.txt";
    const OJson classifyArgs = {{"tests", (attackDir / "AdversarialTests.txt").string()},
                                {"out", results.string()},
                                {"bank", artifacts + "/bank.json"},
                                {"baseline", artifacts + "/baseline.json"}};
    o.require(run("classify", classifyArgs), "classify succeeds");
    const auto text = read_text_file(results);
    std::istringstream in(text);
    std::string line;
    std::size_t lines = 0;
    std::size_t wellFormed = 0;
    const std::regex shape(R"(^advText\d\d\.txt -> 10[0-2][0-9]$)");
    while (std::getline(in, line)) {
        if (lines == 0) {
            o.require(std::regex_match(line, std::regex(R"(^advText00\.txt -> 10[0-2][0-9]$)")),
                      "first line '" + line + "'");
        }
        wellFormed += std::regex_match(line, shape) ? 1 : 0;
        ++lines;
    }
    o.require(lines == 25 && wellFormed == 25, std::to_string(wellFormed) + "/" + std::to_string(lines) +
                                                   " lines match 'advTextNN.txt -> id'");

    const auto replayed = root / "replayed.txt";
    o.require(replay_manifest(root / "results.manifest.json", replayed.string(), io) == 0, "manifest replay succeeds");
    o.require(fs::exists(replayed) && read_text_file(replayed) == text, "replayed output is byte-identical");
    std::error_code ec;
    fs::remove_all(root, ec);
    return o;
}

Outcome criterion_distributions() {
    Outcome o;
    const std::vector<double> dfs = {1, 29, 58, 87};
    const std::vector<double> ts = {-3.5, -0.7, 0.4, 2.0, 6.0};
    double worstT = 0.0;
    for (double df : dfs) {
        for (double t : ts) {
            worstT = std::max(worstT, std::abs(stats::t_cdf(t, df) - testdata::t_cdf_quadrature(t, df)));
        }
    }
    const std::vector<std::pair<double, double>> fdfs = {{1, 29}, {29, 58}, {58, 87}, {87, 1}, {2, 87}};
    const std::vector<double> fs = {0.3, 1.0, 3.1, 8.0};
    double worstF = 0.0;
    for (const auto& [d1, d2] : fdfs) {
        for (double f : fs) {
            worstF = std::max(worstF, std::abs(stats::f_cdf(f, d1, d2) - testdata::f_cdf_quadrature(f, d1, d2)));
        }
    }
    o.require(worstT < 1e-8, "t CDF max error " + fmt("%.2e", worstT) + " over 20 points");
    o.require(worstF < 1e-8, "F CDF max error " + fmt("%.2e", worstF) + " over 20 points");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"C1 published run table statistics", criterion_statistics},
        {"C2 30-run masked accuracy experiment", criterion_experiment},
        {"C3 genetic search contract", criterion_genetic_search},
        {"C4 backprop gradient check", criterion_backprop},
        {"C5 adversarial drop with and without the defense", criterion_attack},
        {"C6 attack, classify and replay round trip", criterion_round_trip},
        {"C7 t and F distributions against quadrature", criterion_distributions},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.notes.push_back(std::string("FAIL exception: ") + e.what());
        }
        for (const auto& n : o.notes) {
            std::printf("    %s\n", n.c_str());
        }
        std::printf("%s %s\n", o.pass ? "PASS" : "FAIL", name.c_str());
        std::fflush(stdout);
        failures += o.pass ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
