#include "advattrib/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "advattrib/error.hpp"
#include "advattrib/random.hpp"
#include "advattrib/serialization.hpp"

namespace advattrib {

namespace {

class UndefendedSession : public TargetSession {
public:
    explicit UndefendedSession(const TrainedModel& model) : model_(&model) {}
    AuthorId classify(const Document& doc) override { return predict(*model_, extract_unigrams(doc)); }

private:
    const TrainedModel* model_;
};

class DefendedSession : public TargetSession {
public:
    DefendedSession(const MaskBank& bank, const NormalcyBaseline& baseline, DefensePolicy policy,
                    std::uint64_t seed)
        : session_(bank, baseline, policy, seed) {}

    AuthorId classify(const Document& doc) override {
        const auto v = session_.classify(doc);
        flagged_ = v.underAttack;
        return v.authorId;
    }
    bool last_query_flagged() const override { return flagged_; }

private:
    DefenseSession session_;
    bool flagged_ = false;
};

// Score the crafter drives below zero: original label's lead (untargeted) or
// the target's deficit (targeted).
double attack_margin(std::span<const double> scores, std::size_t keep) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < scores.size(); ++k) {
        if (k != keep) {
            best = std::max(best, scores[k]);
        }
    }
    return scores[keep] - best;
}

double accuracy(std::span<const AuthorId> labels, std::span<const AuthorId> truth) {
    if (labels.empty()) {
        return 0.0;
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hits += labels[i] == truth[i];
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

}  // namespace

std::unique_ptr<TargetSession> UndefendedTarget::open_session(std::uint64_t) const {
    return std::make_unique<UndefendedSession>(*model_);
}

std::unique_ptr<TargetSession> DefendedTarget::open_session(std::uint64_t seed) const {
    return std::make_unique<DefendedSession>(*bank_, *baseline_, policy_, seed);
}

std::string_view to_string(KillChainPhase phase) {
    switch (phase) {
        case KillChainPhase::Recon: return "Recon";
        case KillChainPhase::Weaponization: return "Weaponization";
        case KillChainPhase::Delivery: return "Delivery";
        case KillChainPhase::Exploitation: return "Exploitation";
        case KillChainPhase::Installation: return "Installation";
        case KillChainPhase::CommandControl: return "CommandControl";
        case KillChainPhase::Action: return "Action";
    }
    return "?";
}

std::size_t KillChainTrace::queries_spent() const {
    std::size_t total = 0;
    for (const auto& r : records) {
        total += r.queriesSpent;
    }
    return total;
}

bool KillChainTrace::complete_and_ordered() const {
    if (records.size() != 7) {
        return false;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (static_cast<std::size_t>(records[i].phase) != i) {
            return false;
        }
    }
    return true;
}

TrainConfig AttackConfig::default_surrogate_config() {
    TrainConfig c;
    c.ffnn.maxIterations = 300;
    return c;
}

void AttackConfig::validate(std::size_t numAttackTexts) const {
    if (probeBudget < numAttackTexts) {
        throw ConfigError("probe budget " + std::to_string(probeBudget) +
                          " is smaller than the number of attack texts " +
                          std::to_string(numAttackTexts));
    }
    if (!(editFraction > 0.0 && editFraction <= 1.0)) {
        throw ConfigError("editFraction must lie in (0, 1]");
    }
    if (!(probeMixMax >= 0.0 && probeMixMax <= 1.0)) {
        throw ConfigError("probeMixMax must lie in [0, 1]");
    }
    if (!(agreementHoldout >= 0.0 && agreementHoldout < 1.0)) {
        throw ConfigError("agreementHoldout must lie in [0, 1)");
    }
    if (!(confidence >= 0.0)) {
        throw ConfigError("confidence must be non-negative");
    }
    if (candidatesPerStep == 0) {
        throw ConfigError("candidatesPerStep must be at least 1");
    }
    if (surrogateKind == ModelKind::RbfSvm) {
        throw ConfigError("surrogate must be FFNN or LSVM");
    }
}

std::vector<Document> make_probes(std::span<const Document> publicTexts, std::size_t count,
                                  const AttackConfig& config) {
    std::vector<Document> out;
    if (count == 0) {
        return out;
    }
    if (publicTexts.empty()) {
        throw ConfigError("no public texts to build probes from");
    }
    out.reserve(count);
    char id[32];
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng(derive_seed(config.seed, "probe", i));
        const auto& src = publicTexts[i % publicTexts.size()];
        const auto& donor = publicTexts[uniform_index(rng, publicTexts.size())];
        std::string text = src.text;
        const double frac = config.probeMixMax * uniform01(rng);
        const std::size_t span =
            std::min({static_cast<std::size_t>(frac * static_cast<double>(text.size())), text.size(),
                      donor.text.size()});
        if (span > 0) {
            const std::size_t at = uniform_index(rng, text.size() - span + 1);
            const std::size_t from = uniform_index(rng, donor.text.size() - span + 1);
            text.replace(at, span, donor.text, from, span);
        }
        std::snprintf(id, sizeof id, "probe%04zu", i);
        out.push_back(Document{id, std::nullopt, std::move(text)});
    }
    return out;
}

std::vector<LabeledVector> probe(ClassificationOracle& target, std::span<const Document> probes,
                                 std::size_t budget, KillChainTrace* trace) {
    if (probes.size() > budget) {
        throw BudgetError(std::to_string(probes.size()) + " probes exceed the budget of " +
                          std::to_string(budget));
    }
    std::vector<LabeledVector> pairs;
    pairs.reserve(probes.size());
    for (const auto& doc : probes) {
        const AuthorId label = target.classify(doc);
        pairs.push_back(LabeledVector{extract_unigrams(doc), label});
    }
    if (trace) {
        trace->log({KillChainPhase::Recon, probes.size(), std::nullopt, std::nullopt,
                    std::to_string(probes.size()) + " probes"});
    }
    return pairs;
}

SurrogateFit fit_surrogate(std::span<const LabeledVector> pairs, const AttackConfig& config) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(config.seed, "surrogate-split"));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }
    const auto heldOut = static_cast<std::size_t>(
        std::floor(config.agreementHoldout * static_cast<double>(pairs.size())));
    std::vector<LabeledVector> fitSet;
    std::vector<LabeledVector> checkSet;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < heldOut ? checkSet : fitSet).push_back(pairs[order[i]]);
    }

    TrainConfig tc = config.surrogateConfig;
    tc.svm.seed = derive_seed(config.seed, "surrogate-svm");
    tc.ffnn.seed = derive_seed(config.seed, "surrogate-ffnn");

    SurrogateFit fit{train(config.surrogateKind, tc, fitSet, full_mask(), PipelineSpec{}), 0.0,
                     fitSet.size(), checkSet.size()};
    // Without a held-back subset, agreement is measured on the fitted pairs.
    fit.agreement = evaluate_accuracy(fit.model, checkSet.empty() ? fitSet : checkSet);
    return fit;
}

CraftResult craft_adversarial(const TrainedModel& surrogate, const Document& doc,
                              const AttackConfig& config) {
    CraftResult result;
    result.document = doc;
    FeatureVector counts = extract_unigrams(doc);
    auto scores = decision_values(surrogate, counts);
    const auto& labels = surrogate.labels;
    result.originalLabel = labels[argmax(scores)];
    result.finalLabel = result.originalLabel;

    std::size_t keep = argmax(scores);
    double sign = 1.0;
    if (config.targetAuthor) {
        const auto it = std::find(labels.begin(), labels.end(), *config.targetAuthor);
        if (it == labels.end()) {
            return result;
        }
        if (*config.targetAuthor == result.originalLabel) {
            result.flipped = true;
            return result;
        }
        keep = static_cast<std::size_t>(it - labels.begin());
        sign = -1.0;
    }
    auto margin_of = [&](const FeatureVector& c) {
        const auto s = decision_values(surrogate, c);
        return sign * attack_margin(s, keep);
    };
    auto done = [&](const FeatureVector& c) {
        const AuthorId now = labels[argmax(decision_values(surrogate, c))];
        return config.targetAuthor ? now == *config.targetAuthor : now != result.originalLabel;
    };

    const auto budget = static_cast<std::size_t>(
        std::floor(config.editFraction * static_cast<double>(doc.text.size())));
    std::string& text = result.document.text;
    std::vector<bool> edited(text.size(), false);
    Rng rng(derive_seed(config.seed, "craft:" + doc.docId));
    double current = margin_of(counts);

    while (result.substitutions < budget && !(done(counts) && current <= -config.confidence)) {
        // First-order estimate: moving one count from a reference character to j.
        std::size_t ref = 0;
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            if (counts.values[j] > counts.values[ref]) {
                ref = j;
            }
        }
        std::array<double, kAlphabetSize> delta{};
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            if (j == ref) {
                continue;
            }
            FeatureVector moved = counts;
            moved.values[j] += 1.0;
            moved.values[ref] -= 1.0;
            delta[j] = margin_of(moved) - current;
        }
        std::array<std::size_t, kAlphabetSize> available{};
        for (std::size_t i = 0; i < text.size(); ++i) {
            const auto ix = alphabet_index(text[i]);
            if (!edited[i] && ix) {
                ++available[*ix];
            }
        }
        struct Pair {
            double estimate;
            std::size_t from;
            std::size_t to;
        };
        std::vector<Pair> pairs;
        for (std::size_t a = 0; a < kAlphabetSize; ++a) {
            if (available[a] == 0) {
                continue;
            }
            for (std::size_t b = 0; b < kAlphabetSize; ++b) {
                if (a != b) {
                    pairs.push_back({delta[b] - delta[a], a, b});
                }
            }
        }
        if (pairs.empty()) {
            break;
        }
        const std::size_t k = std::min(config.candidatesPerStep, pairs.size());
        std::partial_sort(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(k), pairs.end(),
                          [](const Pair& x, const Pair& y) {
                              if (x.estimate != y.estimate) {
                                  return x.estimate < y.estimate;
                              }
                              return x.from != y.from ? x.from < y.from : x.to < y.to;
                          });
        double bestMargin = current;
        std::optional<Pair> best;
        for (std::size_t i = 0; i < k; ++i) {
            FeatureVector c = counts;
            c.values[pairs[i].from] -= 1.0;
            c.values[pairs[i].to] += 1.0;
            const double m = margin_of(c);
            if (m < bestMargin) {
                bestMargin = m;
                best = pairs[i];
            }
        }
        if (!best) {
            break;
        }
        const char fromChar = alphabet_char(best->from);
        std::size_t pick = uniform_index(rng, available[best->from]);
        for (std::size_t i = 0; i < text.size(); ++i) {
            if (!edited[i] && text[i] == fromChar && pick-- == 0) {
                text[i] = alphabet_char(best->to);
                edited[i] = true;
                break;
            }
        }
        counts.values[best->from] -= 1.0;
        counts.values[best->to] += 1.0;
        current = bestMargin;
        ++result.substitutions;
    }
    result.finalLabel = labels[argmax(decision_values(surrogate, counts))];
    result.flipped = config.targetAuthor ? result.finalLabel == *config.targetAuthor
                                         : result.finalLabel != result.originalLabel;
    return result;
}

std::string adversarial_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "advText%02zu.txt", index);
    return buf;
}

AttackReport run_kill_chain(const TargetSystem& target, std::span<const Document> publicTexts,
                            std::span<const Document> attackTexts, const AttackConfig& config,
                            const std::filesystem::path* workDir) {
    config.validate(attackTexts.size());
    AttackReport report;
    auto& trace = report.trace;

    // Harness-side reference: the target's accuracy on the untouched texts.
    {
        auto reference = target.open_session(derive_seed(config.seed, "baseline-session"));
        for (const auto& doc : attackTexts) {
            report.baselineLabels.push_back(reference->classify(doc));
            report.trueAuthors.push_back(doc.authorId.value_or(0));
        }
    }

    auto session = target.open_session(derive_seed(config.seed, "attack-session"));
    const std::size_t probeCount = config.probeBudget - attackTexts.size();
    const auto probes = make_probes(publicTexts, probeCount, config);
    const auto pairs = probe(*session, probes, probeCount, &trace);

    auto fit = fit_surrogate(pairs, config);
    report.surrogateAgreement = fit.agreement;
    trace.log({KillChainPhase::Weaponization, 0, std::nullopt, std::nullopt,
               std::string(to_string(config.surrogateKind)) + " surrogate on " +
                   std::to_string(fit.trainedOn) + " pairs"});

    std::vector<CraftResult> crafted;
    std::size_t flips = 0;
    for (std::size_t i = 0; i < attackTexts.size(); ++i) {
        Document input{adversarial_file_name(i), std::nullopt, attackTexts[i].text};
        crafted.push_back(craft_adversarial(fit.model, input, config));
        flips += crafted.back().flipped;
    }
    report.surrogateFlipRate =
        attackTexts.empty() ? 0.0 : static_cast<double>(flips) / static_cast<double>(attackTexts.size());
    trace.log({KillChainPhase::Delivery, 0, std::nullopt, report.surrogateFlipRate,
               std::to_string(flips) + " of " + std::to_string(attackTexts.size()) +
                   " flip the surrogate"});

    trace.log({KillChainPhase::Exploitation, 0, fit.agreement, std::nullopt,
               "agreement on " + std::to_string(fit.heldOut) + " held-back probes"});

    for (std::size_t i = 0; i < crafted.size(); ++i) {
        report.adversarialFiles.push_back(adversarial_file_name(i));
    }
    if (workDir) {
        std::filesystem::create_directories(*workDir);
        save_json_file(*workDir / "surrogate.json", to_json(fit.model));
    }
    trace.log({KillChainPhase::Installation, 0, std::nullopt, std::nullopt,
               workDir ? "surrogate.json" : "surrogate kept in memory"});

    if (workDir) {
        std::string listing;
        for (std::size_t i = 0; i < crafted.size(); ++i) {
            write_text_file(*workDir / report.adversarialFiles[i], crafted[i].document.text);
            listing += report.adversarialFiles[i] + "\n";
        }
        write_text_file(*workDir / "AdversarialTests.txt", listing);
        Json sessionJson = {{"seed", config.seed},
                            {"probeBudget", config.probeBudget},
                            {"probes", probeCount},
                            {"editFraction", config.editFraction},
                            {"files", report.adversarialFiles}};
        save_json_file(*workDir / "attack_session.json", sessionJson);
    }
    trace.log({KillChainPhase::CommandControl, 0, std::nullopt, std::nullopt,
               workDir ? "AdversarialTests.txt" : "adversarial set kept in memory"});

    std::size_t detected = 0;
    for (const auto& c : crafted) {
        report.attackLabels.push_back(session->classify(c.document));
        detected += session->last_query_flagged();
    }
    trace.log({KillChainPhase::Action, crafted.size(), std::nullopt, std::nullopt,
               std::to_string(crafted.size()) + " adversarial texts submitted"});

    report.baselineAccuracy = accuracy(report.baselineLabels, report.trueAuthors);
    report.underAttackAccuracy = accuracy(report.attackLabels, report.trueAuthors);
    report.accuracyDropPct = (report.baselineAccuracy - report.underAttackAccuracy) * 100.0;
    report.detectedFraction =
        crafted.empty() ? 0.0 : static_cast<double>(detected) / static_cast<double>(crafted.size());
    return report;
}

std::string attack_report_json(const AttackReport& report) {
    Json phases = Json::array();
    for (const auto& r : report.trace.records) {
        Json p = {{"phase", std::string(to_string(r.phase))}, {"queriesSpent", r.queriesSpent}};
        p["surrogateAgreement"] = r.surrogateAgreement ? Json(*r.surrogateAgreement) : Json(nullptr);
        p["flipRate"] = r.flipRate ? Json(*r.flipRate) : Json(nullptr);
        p["detail"] = r.detail;
        phases.push_back(p);
    }
    Json j = {{"baselineAccuracy", report.baselineAccuracy},
              {"underAttackAccuracy", report.underAttackAccuracy},
              {"accuracyDropPct", report.accuracyDropPct},
              {"detectedFraction", report.detectedFraction},
              {"surrogateAgreement", report.surrogateAgreement},
              {"surrogateFlipRate", report.surrogateFlipRate},
              {"queriesSpent", report.trace.queries_spent()},
              {"trace", phases},
              {"files", report.adversarialFiles},
              {"trueAuthors", report.trueAuthors},
              {"baselineLabels", report.baselineLabels},
              {"attackLabels", report.attackLabels}};
    return dump(j);
}

}  // namespace advattrib
