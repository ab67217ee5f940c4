#include "advattrib/defense.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

#include "advattrib/error.hpp"

namespace advattrib {

MaskBank build_mask_bank(const GaRunResult& gaResult, ModelKind kind, const TrainConfig& config,
                         std::span<const LabeledVector> trainSet, const PipelineSpec& pipeline,
                         std::uint64_t switchSeed) {
    if (gaResult.population.empty()) {
        throw ConfigError("GA result has an empty population");
    }
    std::vector<FeatureVector> rows;
    rows.reserve(trainSet.size());
    for (const auto& r : trainSet) {
        rows.push_back(r.features);
    }
    const Pipeline fitted = Pipeline::fit(pipeline, rows);

    MaskBank bank;
    bank.switchSeed = switchSeed;
    for (std::size_t i = 0; i < gaResult.population.size(); ++i) {
        const auto& ind = gaResult.population[i];
        try {
            bank.models.push_back(train(kind, config, trainSet, ind.mask, fitted));
        } catch (const Error& e) {
            throw BankError(i, e.what());
        }
        bank.masks.push_back(ind.mask);
        bank.fitness.push_back(ind.fitness);
    }
    return bank;
}

std::size_t switch_mask(const MaskBank& bank, Rng& rng) {
    if (bank.masks.empty()) {
        throw ConfigError("mask bank is empty");
    }
    return uniform_index(rng, bank.masks.size());
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw ConfigError("percentile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(q / 100.0 * static_cast<double>(values.size()));
    const auto idx = static_cast<std::size_t>(std::clamp(rank, 1.0, static_cast<double>(values.size())));
    return values[idx - 1];
}

namespace {

double kl_to_global(const FeatureArray& global, const FeatureVector& rawCounts) {
    const double total = rawCounts.sum();
    if (!(total > 0.0)) {
        throw EmptyDocumentError("document '" + rawCounts.docId + "' has no in-alphabet characters");
    }
    const double denom = total + static_cast<double>(kAlphabetSize);
    double kl = 0.0;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        const double p = (rawCounts.values[j] + 1.0) / denom;
        kl += p * std::log(p / global[j]);
    }
    return std::max(kl, 0.0);
}

// Margins each training document gets from a model of the same kind, mask
// and configuration that did not see it. In-sample margins of an SVM sit on
// or beyond its margin, so a percentile of them would flag every unseen
// document. Stratified folds: a document's fold is its rank within its
// class. Falls back to the fitted model when some class has one document.
std::vector<double> out_of_fold_margins(const TrainedModel& model, std::span<const LabeledVector> trainSet,
                                        std::span<const std::size_t> classOf, std::size_t numClasses) {
    constexpr std::size_t kMaxFolds = 5;
    std::vector<std::size_t> perClass(numClasses, 0);
    std::vector<std::size_t> fold(trainSet.size());
    for (std::size_t i = 0; i < trainSet.size(); ++i) {
        fold[i] = perClass[classOf[i]]++;
    }
    const std::size_t folds = std::min(kMaxFolds, *std::min_element(perClass.begin(), perClass.end()));
    std::vector<double> margins(trainSet.size());
    if (folds < 2) {
        for (std::size_t i = 0; i < trainSet.size(); ++i) {
            margins[i] = top_two_margin(decision_values(model, trainSet[i].features));
        }
        return margins;
    }
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<LabeledVector> fit;
        for (std::size_t i = 0; i < trainSet.size(); ++i) {
            if (fold[i] % folds != f) {
                fit.push_back(trainSet[i]);
            }
        }
        const auto held = train(model.kind, model.config, fit, model.mask, model.pipeline.spec());
        for (std::size_t i = 0; i < trainSet.size(); ++i) {
            if (fold[i] % folds == f) {
                margins[i] = top_two_margin(decision_values(held, trainSet[i].features));
            }
        }
    }
    return margins;
}

}  // namespace

NormalcyBaseline fit_baseline(std::span<const LabeledVector> trainSet, const PipelineSpec& pipeline,
                              const MaskBank* bank) {
    if (trainSet.empty()) {
        throw FitError("baseline needs training documents");
    }
    NormalcyBaseline b;
    for (const auto& r : trainSet) {
        b.labels.push_back(r.author);
    }
    std::sort(b.labels.begin(), b.labels.end());
    b.labels.erase(std::unique(b.labels.begin(), b.labels.end()), b.labels.end());

    std::vector<FeatureVector> rows;
    for (const auto& r : trainSet) {
        rows.push_back(r.features);
    }
    if (pipeline.useNormalization || pipeline.useStandardization) {
        if (rows.size() < 2) {
            throw FitError("baseline scaling needs at least 2 training documents");
        }
    }
    b.pipeline = Pipeline::fit(pipeline, rows);

    const std::size_t k = b.labels.size();
    b.classMeans.assign(k, FeatureArray{});
    b.classVariances.assign(k, FeatureArray{});
    std::vector<std::size_t> counts(k, 0);
    std::vector<FeatureVector> transformed;
    std::vector<std::size_t> classOf;
    for (const auto& r : trainSet) {
        transformed.push_back(b.pipeline.apply_evaluation(r.features));
        classOf.push_back(static_cast<std::size_t>(
            std::lower_bound(b.labels.begin(), b.labels.end(), r.author) - b.labels.begin()));
        ++counts[classOf.back()];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] < 2 && k > 1) {
            throw FitError("author " + std::to_string(b.labels[c]) + " has fewer than 2 documents");
        }
    }
    for (std::size_t i = 0; i < transformed.size(); ++i) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            b.classMeans[classOf[i]][j] += transformed[i].values[j];
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (double& m : b.classMeans[c]) {
            m /= static_cast<double>(counts[c]);
        }
    }
    for (std::size_t i = 0; i < transformed.size(); ++i) {
        const auto c = classOf[i];
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            const double d = transformed[i].values[j] - b.classMeans[c][j];
            b.classVariances[c][j] += d * d;
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        for (double& v : b.classVariances[c]) {
            v = std::max(v / static_cast<double>(counts[c]), kVarianceFloor);
        }
        b.classPriors.push_back(static_cast<double>(counts[c]) /
                                static_cast<double>(trainSet.size()));
    }

    FeatureArray totals{};
    double grand = 0.0;
    for (const auto& r : trainSet) {
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            totals[j] += r.features.values[j];
            grand += r.features.values[j];
        }
    }
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        b.globalCharDist[j] = (totals[j] + 1.0) / (grand + static_cast<double>(kAlphabetSize));
    }

    std::vector<double> divergences;
    for (const auto& r : trainSet) {
        divergences.push_back(kl_to_global(b.globalCharDist, r.features));
    }
    b.divergenceThreshold = percentile(divergences, 99.0);

    if (bank && !bank->models.empty()) {
        std::vector<double> margins;
        std::map<std::string, std::vector<double>> byMask;
        for (const auto& model : bank->models) {
            auto& m = byMask[model.mask.to_string()];
            if (m.empty()) {
                m = out_of_fold_margins(model, trainSet, classOf, k);
            }
            margins.insert(margins.end(), m.begin(), m.end());
        }
        b.marginThreshold = percentile(margins, 5.0);
    }
    return b;
}

double score_divergence(const NormalcyBaseline& baseline, const FeatureVector& rawCounts) {
    return kl_to_global(baseline.globalCharDist, rawCounts);
}

double score_divergence(const NormalcyBaseline& baseline, const Document& doc) {
    return score_divergence(baseline, extract_unigrams(doc));
}

MapDecision map_decide(const NormalcyBaseline& baseline, const FeatureVector& rawCounts) {
    const auto x = baseline.pipeline.apply_evaluation(rawCounts);
    MapDecision d;
    d.logPosterior.resize(baseline.labels.size());
    for (std::size_t c = 0; c < baseline.labels.size(); ++c) {
        double lp = std::log(baseline.classPriors[c]);
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            const double var = baseline.classVariances[c][j];
            const double diff = x.values[j] - baseline.classMeans[c][j];
            lp -= 0.5 * std::log(2.0 * std::numbers::pi * var) + diff * diff / (2.0 * var);
        }
        d.logPosterior[c] = lp;
    }
    d.authorId = baseline.labels[argmax(d.logPosterior)];
    return d;
}

void QueryWindow::push(FeatureArray v) {
    if (capacity_ == 0) {
        return;
    }
    if (items_.size() == capacity_) {
        items_.pop_front();
    }
    items_.push_back(v);
}

double QueryWindow::max_cosine(const FeatureArray& v) const {
    const double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    double best = -1.0;
    for (const auto& q : items_) {
        const double nq = std::sqrt(std::inner_product(q.begin(), q.end(), q.begin(), 0.0));
        if (nv == 0.0 || nq == 0.0) {
            continue;
        }
        best = std::max(best, std::inner_product(v.begin(), v.end(), q.begin(), 0.0) / (nv * nq));
    }
    return best;
}

CriteriaScores evaluate_criteria(const NormalcyBaseline& baseline, const MaskBank& bank,
                                 std::size_t maskIndex, const Document& doc,
                                 const QueryWindow& window, const DefensePolicy& policy) {
    if (maskIndex >= bank.models.size()) {
        throw ConfigError("mask index out of range");
    }
    const auto raw = extract_unigrams(doc);
    CriteriaScores s;
    s.criteria.votesRequired = policy.votesRequired;
    s.divergence = score_divergence(baseline, raw);
    s.scores = decision_values(bank.models[maskIndex], raw);
    s.margin = top_two_margin(s.scores);
    s.queryVector = baseline.pipeline.apply_evaluation(raw).values;
    s.maxCosine = window.max_cosine(s.queryVector);

    s.criteria.divergenceFlag = s.divergence > baseline.divergenceThreshold;
    s.criteria.boundaryFlag = s.margin < baseline.marginThreshold;
    s.criteria.repetitionFlag = s.maxCosine > policy.repetitionCosine;
    return s;
}

DefenseSession::DefenseSession(const MaskBank& bank, const NormalcyBaseline& baseline,
                               DefensePolicy policy, std::uint64_t seed)
    : bank_(&bank), baseline_(&baseline), policy_(policy), rng_(seed), window_(policy.windowSize) {
    if (bank.models.empty() || bank.models.size() != bank.masks.size()) {
        throw ConfigError("defense session needs a non-empty, consistent mask bank");
    }
    if (policy.votesRequired < 1 || policy.votesRequired > 3) {
        throw ConfigError("votesRequired must lie in [1, 3]");
    }
}

DefenseVerdict DefenseSession::classify(const Document& doc) {
    if (!started_ || alert_ || queriesOnMask_ >= std::max<std::size_t>(policy_.switchInterval, 1)) {
        currentMask_ = switch_mask(*bank_, rng_);
        queriesOnMask_ = 0;
        started_ = true;
    }
    const auto s = evaluate_criteria(*baseline_, *bank_, currentMask_, doc, window_, policy_);
    ++queriesOnMask_;

    DefenseVerdict v;
    v.docId = doc.docId;
    v.authorId = bank_->models[currentMask_].labels[argmax(s.scores)];
    v.criteria = s.criteria;
    v.underAttack = s.criteria.under_attack();
    v.maskIndex = currentMask_;
    v.divergence = s.divergence;
    v.margin = s.margin;

    window_.push(s.queryVector);
    if (v.underAttack) {
        alert_ = true;
        calmStreak_ = 0;
    } else if (alert_ && ++calmStreak_ >= policy_.calmQueries) {
        alert_ = false;
        calmStreak_ = 0;
    }
    return v;
}

void write_verdict_log(std::ostream& out, std::span<const DefenseVerdict> verdicts) {
    out << "docId,authorId,maskIndex,divergence,margin,flags,underAttack\n";
    char buf[64];
    for (const auto& v : verdicts) {
        std::string flags;
        flags += v.criteria.divergenceFlag ? 'D' : '-';
        flags += v.criteria.boundaryFlag ? 'B' : '-';
        flags += v.criteria.repetitionFlag ? 'R' : '-';
        out << v.docId << ',' << v.authorId << ',' << v.maskIndex << ',';
        std::snprintf(buf, sizeof buf, "%.6g,%.6g", v.divergence, v.margin);
        out << buf << ',' << flags << ',' << (v.underAttack ? 1 : 0) << '\n';
    }
}

}  // namespace advattrib
