#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace advattrib::stats {

/// Regularized incomplete beta function I_x(a, b), evaluated with Lentz's
/// continued fraction on whichever tail converges faster.
double incomplete_beta(double a, double b, double x);

double t_cdf(double t, double df);
/// P(T > t).
double t_sf(double t, double df);
double t_quantile(double p, double df);

double f_cdf(double f, double df1, double df2);
/// P(F > f).
double f_sf(double f, double df1, double df2);
double f_quantile(double p, double df1, double df2);

struct Sample {
    std::string name;
    std::vector<double> values;

    double mean() const;
    /// Unbiased (n - 1) variance.
    double variance() const;
    std::size_t size() const { return values.size(); }
};

struct GroupSummary {
    std::string name;
    std::size_t count = 0;
    double sum = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

struct AnovaResult {
    std::vector<GroupSummary> groups;
    double ssBetween = 0.0;
    double ssWithin = 0.0;
    double ssTotal = 0.0;
    std::size_t dfBetween = 0;
    std::size_t dfWithin = 0;
    double msBetween = 0.0;
    double msWithin = 0.0;
    double fStat = 0.0;
    double pValue = 1.0;
    double fCrit = 0.0;
    double alpha = 0.05;
};

AnovaResult anova_single_factor(std::span<const Sample> samples, double alpha = 0.05);

struct FTestResult {
    double ratio = 1.0;  // larger variance over smaller
    double pTwoTail = 1.0;
    bool equalVariances = true;
};

FTestResult f_test(const Sample& a, const Sample& b, double alpha = 0.05);

enum class TTestVariant { Pooled, Welch };

struct TTestResult {
    TTestVariant variant = TTestVariant::Pooled;
    std::string nameA, nameB;
    double meanA = 0.0, meanB = 0.0;
    double varianceA = 0.0, varianceB = 0.0;
    std::size_t countA = 0, countB = 0;
    std::optional<double> pooledVariance;
    double df = 0.0;
    double tStat = 0.0;
    double pOneTail = 0.5;
    double pTwoTail = 1.0;
    double tCritOneTail = 0.0;
    double tCritTwoTail = 0.0;
    double alpha = 0.05;
};

/// Two-sample t statistic for mean(a) - mean(b). A zero standard error with
/// unequal means reports t = +/-infinity and p = 0.
TTestResult t_test_pooled(const Sample& a, const Sample& b, double alpha = 0.05);
TTestResult t_test_welch(const Sample& a, const Sample& b, double alpha = 0.05);

struct PairwiseComparison {
    std::string nameA, nameB;
    FTestResult fTest;
    TTestResult tTest;
    bool significantlyDifferent = false;
};

struct EquivalencePartition {
    std::vector<std::vector<std::string>> classes;
    std::vector<PairwiseComparison> comparisons;
    double alpha = 0.05;
};

/// Connected components of the "not significantly different" graph. Each
/// pair is tested with the pooled or Welch t-test as chosen by an F-test,
/// unless `forceVariant` pins one.
EquivalencePartition equivalence_classes(std::span<const Sample> samples, double alpha = 0.05,
                                         std::optional<TTestVariant> forceVariant = std::nullopt);

struct StatReport {
    AnovaResult anova;
    EquivalencePartition partition;
};

StatReport build_report(std::span<const Sample> samples, double alpha = 0.05,
                        std::optional<TTestVariant> forceVariant = std::nullopt);

/// Reads a run x algorithm CSV: header "run,<name>,<name>,..." then one row
/// per run. The run column is optional.
std::vector<Sample> read_runs_csv(std::istream& in);

void write_text_report(std::ostream& out, const StatReport& report);
std::string report_json(const StatReport& report);

}  // namespace advattrib::stats
