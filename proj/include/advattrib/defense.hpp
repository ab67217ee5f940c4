#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "advattrib/models.hpp"
#include "advattrib/random.hpp"
#include "advattrib/ssga.hpp"

namespace advattrib {

/// Evolved masks with one trained model per mask. Models share a kind and
/// a fitted pipeline.
struct MaskBank {
    std::vector<FeatureMask> masks;
    std::vector<double> fitness;
    std::vector<TrainedModel> models;
    std::uint64_t switchSeed = 0;

    std::size_t size() const { return masks.size(); }
};

MaskBank build_mask_bank(const GaRunResult& gaResult, ModelKind kind, const TrainConfig& config,
                         std::span<const LabeledVector> trainSet, const PipelineSpec& pipeline,
                         std::uint64_t switchSeed);

/// Uniform draw over the bank's masks.
std::size_t switch_mask(const MaskBank& bank, Rng& rng);

/// What "normal" input looks like, fitted on training documents only.
struct NormalcyBaseline {
    std::vector<AuthorId> labels;
    std::vector<FeatureArray> classMeans;
    std::vector<FeatureArray> classVariances;
    std::vector<double> classPriors;
    FeatureArray globalCharDist{};
    double divergenceThreshold = 0.0;
    double marginThreshold = 0.0;
    Pipeline pipeline;
};

inline constexpr double kVarianceFloor = 1e-9;

/// Gaussian naive Bayes statistics plus the global character distribution.
/// The divergence threshold is the 99th percentile of the training
/// documents' scores; with a bank, the margin threshold is the 5th
/// percentile of the bank models' top-two margins on the training documents
/// (without one it is 0 and the boundary check never fires).
NormalcyBaseline fit_baseline(std::span<const LabeledVector> trainSet, const PipelineSpec& pipeline,
                              const MaskBank* bank = nullptr);

/// Nearest-rank percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

/// KL(p_doc || globalCharDist) over the alphabet, both add-one smoothed.
double score_divergence(const NormalcyBaseline& baseline, const Document& doc);
double score_divergence(const NormalcyBaseline& baseline, const FeatureVector& rawCounts);

struct MapDecision {
    AuthorId authorId = 0;
    std::vector<double> logPosterior;  // unnormalized, in baseline.labels order
};

/// Gaussian naive Bayes maximum a-posteriori decision; ties go to the lowest id.
MapDecision map_decide(const NormalcyBaseline& baseline, const FeatureVector& rawCounts);

struct AttackCriteria {
    bool divergenceFlag = false;
    bool boundaryFlag = false;
    bool repetitionFlag = false;
    std::size_t votesRequired = 2;

    std::size_t votes() const {
        return static_cast<std::size_t>(divergenceFlag) + static_cast<std::size_t>(boundaryFlag) +
               static_cast<std::size_t>(repetitionFlag);
    }
    bool under_attack() const { return votes() >= votesRequired; }
};

/// Recent query vectors (pipeline-transformed) for the repetition check.
class QueryWindow {
public:
    explicit QueryWindow(std::size_t capacity = 50) : capacity_(capacity) {}

    void push(FeatureArray v);
    /// Largest cosine similarity between `v` and any stored query, or -1.
    double max_cosine(const FeatureArray& v) const;
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    std::deque<FeatureArray> items_;
};

struct DefensePolicy {
    std::size_t votesRequired = 2;
    std::size_t windowSize = 50;
    double repetitionCosine = 0.95;
    /// Unflagged queries needed before leaving alert mode.
    std::size_t calmQueries = 50;
    /// Queries between mask switches outside alert mode; alert mode
    /// switches on every query.
    std::size_t switchInterval = 5;
};

struct CriteriaScores {
    AttackCriteria criteria;
    double divergence = 0.0;
    double margin = 0.0;
    double maxCosine = -1.0;
    std::vector<double> scores;  // bank model decision values
    FeatureArray queryVector{};  // baseline-transformed input
};

/// Evaluates the three attack criteria for `doc` under the bank model at
/// `maskIndex`. Does not modify the window.
CriteriaScores evaluate_criteria(const NormalcyBaseline& baseline, const MaskBank& bank,
                                 std::size_t maskIndex, const Document& doc,
                                 const QueryWindow& window, const DefensePolicy& policy = {});

struct DefenseVerdict {
    std::string docId;
    AuthorId authorId = 0;
    bool underAttack = false;
    AttackCriteria criteria;
    std::size_t maskIndex = 0;
    double divergence = 0.0;
    double margin = 0.0;
};

/// One client's view of the defended system: owns the mask-switch stream
/// and the query window. Not thread-safe; the bank and baseline may be
/// shared between sessions.
class DefenseSession {
public:
    DefenseSession(const MaskBank& bank, const NormalcyBaseline& baseline, DefensePolicy policy,
                   std::uint64_t seed);

    DefenseVerdict classify(const Document& doc);

    bool alert() const { return alert_; }
    std::size_t current_mask() const { return currentMask_; }

private:
    const MaskBank* bank_;
    const NormalcyBaseline* baseline_;
    DefensePolicy policy_;
    Rng rng_;
    QueryWindow window_;
    std::size_t currentMask_ = 0;
    std::size_t queriesOnMask_ = 0;
    std::size_t calmStreak_ = 0;
    bool alert_ = false;
    bool started_ = false;
};

/// docId,authorId,maskIndex,divergence,margin,flags,underAttack
void write_verdict_log(std::ostream& out, std::span<const DefenseVerdict> verdicts);

}  // namespace advattrib
