#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advattrib/defense.hpp"
#include "advattrib/models.hpp"

namespace advattrib {

/// The only thing an attacker may do with the target: submit a document and
/// read back an author id.
class ClassificationOracle {
public:
    virtual ~ClassificationOracle() = default;
    virtual AuthorId classify(const Document& doc) = 0;
};

/// Harness-side handle on one target session. The attacker only ever sees
/// it through ClassificationOracle.
class TargetSession : public ClassificationOracle {
public:
    /// Whether the target flagged the most recent query as an attack.
    virtual bool last_query_flagged() const { return false; }
};

class TargetSystem {
public:
    virtual ~TargetSystem() = default;
    virtual std::unique_ptr<TargetSession> open_session(std::uint64_t seed) const = 0;
};

/// A single fixed model with no detector.
class UndefendedTarget : public TargetSystem {
public:
    explicit UndefendedTarget(const TrainedModel& model) : model_(&model) {}
    std::unique_ptr<TargetSession> open_session(std::uint64_t seed) const override;

private:
    const TrainedModel* model_;
};

/// Mask bank plus normalcy detector.
class DefendedTarget : public TargetSystem {
public:
    DefendedTarget(const MaskBank& bank, const NormalcyBaseline& baseline, DefensePolicy policy = {})
        : bank_(&bank), baseline_(&baseline), policy_(policy) {}
    std::unique_ptr<TargetSession> open_session(std::uint64_t seed) const override;

private:
    const MaskBank* bank_;
    const NormalcyBaseline* baseline_;
    DefensePolicy policy_;
};

enum class KillChainPhase {
    Recon,
    Weaponization,
    Delivery,
    Exploitation,
    Installation,
    CommandControl,
    Action,
};

std::string_view to_string(KillChainPhase phase);

struct PhaseRecord {
    KillChainPhase phase = KillChainPhase::Recon;
    std::size_t queriesSpent = 0;
    std::optional<double> surrogateAgreement;
    std::optional<double> flipRate;
    std::string detail;
};

struct KillChainTrace {
    std::vector<PhaseRecord> records;

    void log(PhaseRecord record) { records.push_back(std::move(record)); }
    std::size_t queries_spent() const;
    /// True when every phase appears once, in kill-chain order.
    bool complete_and_ordered() const;
};

struct AttackConfig {
    /// Total queries, probes plus the final submissions.
    std::size_t probeBudget = 300;
    ModelKind surrogateKind = ModelKind::Ffnn;
    /// Substitution budget as a fraction of document length.
    double editFraction = 0.15;
    std::uint64_t seed = 0;
    /// When set, crafted texts aim for this author instead of any other.
    std::optional<AuthorId> targetAuthor;
    /// Probes splice up to this fraction of another public text into a source text.
    double probeMixMax = 0.5;
    /// Share of probe pairs held back to measure surrogate agreement.
    double agreementHoldout = 0.2;
    /// Exactly re-scored substitution candidates per hill-climb step.
    std::size_t candidatesPerStep = 5;
    /// Crafting continues past the flip until the surrogate's margin against
    /// the original label (or for the target) reaches this value; 0 stops at
    /// the first flip. With probability outputs 1.0 spends the whole budget.
    double confidence = 1.0;
    TrainConfig surrogateConfig = default_surrogate_config();

    static TrainConfig default_surrogate_config();
    void validate(std::size_t numAttackTexts) const;
};

/// Perturbed copies of public texts used as probes.
std::vector<Document> make_probes(std::span<const Document> publicTexts, std::size_t count,
                                  const AttackConfig& config);

/// Queries the oracle once per probe, in order. Throws BudgetError when the
/// probes exceed `budget`.
std::vector<LabeledVector> probe(ClassificationOracle& target, std::span<const Document> probes,
                                 std::size_t budget, KillChainTrace* trace = nullptr);

struct SurrogateFit {
    TrainedModel model;
    /// Share of held-back probes on which surrogate and target agree.
    double agreement = 0.0;
    std::size_t trainedOn = 0;
    std::size_t heldOut = 0;
};

SurrogateFit fit_surrogate(std::span<const LabeledVector> pairs, const AttackConfig& config);

struct CraftResult {
    Document document;
    bool flipped = false;
    std::size_t substitutions = 0;
    AuthorId originalLabel = 0;
    AuthorId finalLabel = 0;
};

/// Greedy single-character substitutions against the surrogate until its
/// label changes (or reaches the target author) with at least
/// `config.confidence` margin, or the edit budget floor(editFraction *
/// length) is spent.
CraftResult craft_adversarial(const TrainedModel& surrogate, const Document& doc,
                              const AttackConfig& config);

struct AttackReport {
    double baselineAccuracy = 0.0;
    double underAttackAccuracy = 0.0;
    double accuracyDropPct = 0.0;
    double detectedFraction = 0.0;
    double surrogateAgreement = 0.0;
    double surrogateFlipRate = 0.0;
    KillChainTrace trace;
    std::vector<std::string> adversarialFiles;
    std::vector<AuthorId> trueAuthors;
    std::vector<AuthorId> baselineLabels;
    std::vector<AuthorId> attackLabels;
};

/// Full attack: probe, fit a surrogate, craft one text per attack document,
/// submit them as advText00.txt... and score the target. `attackTexts` carry
/// ground-truth authors for scoring only; the attacker never reads them.
/// With a work directory the adversarial texts, AdversarialTests.txt, the
/// surrogate and the session description are written there.
AttackReport run_kill_chain(const TargetSystem& target, std::span<const Document> publicTexts,
                            std::span<const Document> attackTexts, const AttackConfig& config,
                            const std::filesystem::path* workDir = nullptr);

std::string adversarial_file_name(std::size_t index);

std::string attack_report_json(const AttackReport& report);

}  // namespace advattrib
