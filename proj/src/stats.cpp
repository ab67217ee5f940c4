#include "advattrib/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "advattrib/error.hpp"

namespace advattrib::stats {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIterations = 1000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) {
        d = kTiny;
    }
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) {
            d = kTiny;
        }
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) {
            c = kTiny;
        }
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) {
            break;
        }
    }
    return h;
}

// Bisection on a monotone increasing cdf; the bracket grows until it holds p.
template <typename Cdf>
double invert_cdf(Cdf cdf, double p, double lo, double hi) {
    while (cdf(hi) < p) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) {
            return kInf;
        }
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) {
            break;
        }
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

void require_sample(const Sample& s) {
    if (s.values.size() < 2) {
        throw ConfigError("sample '" + s.name + "' needs at least 2 values");
    }
    for (double v : s.values) {
        if (!std::isfinite(v)) {
            throw ConfigError("sample '" + s.name + "' contains a non-finite value");
        }
    }
}

// Shared tail for both t-test variants.
TTestResult finish_t_test(TTestResult r, double meanDiff, double standardError) {
    if (standardError > 0.0) {
        r.tStat = meanDiff / standardError;
        r.pOneTail = t_sf(std::fabs(r.tStat), r.df);
        r.pTwoTail = std::min(1.0, 2.0 * r.pOneTail);
    } else if (meanDiff == 0.0) {
        r.tStat = 0.0;
        r.pOneTail = 0.5;
        r.pTwoTail = 1.0;
    } else {
        r.tStat = meanDiff > 0.0 ? kInf : -kInf;
        r.pOneTail = 0.0;
        r.pTwoTail = 0.0;
    }
    r.tCritOneTail = t_quantile(1.0 - r.alpha, r.df);
    r.tCritTwoTail = t_quantile(1.0 - r.alpha / 2.0, r.df);
    return r;
}

TTestResult describe(const Sample& a, const Sample& b, double alpha, TTestVariant variant) {
    require_sample(a);
    require_sample(b);
    TTestResult r;
    r.variant = variant;
    r.alpha = alpha;
    r.nameA = a.name;
    r.nameB = b.name;
    r.meanA = a.mean();
    r.meanB = b.mean();
    r.varianceA = a.variance();
    r.varianceB = b.variance();
    r.countA = a.size();
    r.countB = b.size();
    return r;
}

const char* variant_name(TTestVariant v) {
    return v == TTestVariant::Pooled ? "pooled" : "welch";
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw ConfigError("incomplete beta needs positive shape parameters");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    if (x >= 1.0) {
        return 1.0;
    }
    const double logFront = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(logFront);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_sf(double t, double df) {
    if (std::isinf(t)) {
        return t > 0 ? 0.0 : 1.0;
    }
    const double x = df / (df + t * t);
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? tail : 1.0 - tail;
}

double t_cdf(double t, double df) {
    if (std::isinf(t)) {
        return t > 0 ? 1.0 : 0.0;
    }
    const double x = df / (df + t * t);
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

double t_quantile(double p, double df) {
    if (p <= 0.0) {
        return -kInf;
    }
    if (p >= 1.0) {
        return kInf;
    }
    if (p == 0.5) {
        return 0.0;
    }
    if (p < 0.5) {
        return -t_quantile(1.0 - p, df);
    }
    return invert_cdf([df](double t) { return t_cdf(t, df); }, p, 0.0, 1.0);
}

double f_cdf(double f, double df1, double df2) {
    if (f <= 0.0) {
        return 0.0;
    }
    if (std::isinf(f)) {
        return 1.0;
    }
    return incomplete_beta(0.5 * df1, 0.5 * df2, df1 * f / (df1 * f + df2));
}

double f_sf(double f, double df1, double df2) {
    if (f <= 0.0) {
        return 1.0;
    }
    if (std::isinf(f)) {
        return 0.0;
    }
    return incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

double f_quantile(double p, double df1, double df2) {
    if (p <= 0.0) {
        return 0.0;
    }
    if (p >= 1.0) {
        return kInf;
    }
    return invert_cdf([=](double f) { return f_cdf(f, df1, df2); }, p, 0.0, 1.0);
}

double Sample::mean() const {
    if (values.empty()) {
        return 0.0;
    }
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double Sample::variance() const {
    if (values.size() < 2) {
        return 0.0;
    }
    const double m = mean();
    double ss = 0.0;
    for (double v : values) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(values.size() - 1);
}

AnovaResult anova_single_factor(std::span<const Sample> samples, double alpha) {
    if (samples.size() < 2) {
        throw ConfigError("ANOVA needs at least 2 samples");
    }
    AnovaResult r;
    r.alpha = alpha;
    std::size_t total = 0;
    double grandSum = 0.0;
    for (const auto& s : samples) {
        require_sample(s);
        GroupSummary g;
        g.name = s.name;
        g.count = s.size();
        g.sum = std::accumulate(s.values.begin(), s.values.end(), 0.0);
        g.mean = s.mean();
        g.variance = s.variance();
        r.groups.push_back(g);
        total += g.count;
        grandSum += g.sum;
    }
    const double grandMean = grandSum / static_cast<double>(total);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& g = r.groups[i];
        r.ssBetween += static_cast<double>(g.count) * (g.mean - grandMean) * (g.mean - grandMean);
        for (double v : samples[i].values) {
            r.ssWithin += (v - g.mean) * (v - g.mean);
            r.ssTotal += (v - grandMean) * (v - grandMean);
        }
    }
    r.dfBetween = samples.size() - 1;
    r.dfWithin = total - samples.size();
    r.msBetween = r.ssBetween / static_cast<double>(r.dfBetween);
    r.msWithin = r.ssWithin / static_cast<double>(r.dfWithin);
    const double dfb = static_cast<double>(r.dfBetween);
    const double dfw = static_cast<double>(r.dfWithin);
    if (r.msWithin > 0.0) {
        r.fStat = r.msBetween / r.msWithin;
        r.pValue = f_sf(r.fStat, dfb, dfw);
    } else if (r.msBetween > 0.0) {
        r.fStat = kInf;
        r.pValue = 0.0;
    } else {
        r.fStat = 0.0;
        r.pValue = 1.0;
    }
    r.fCrit = f_quantile(1.0 - alpha, dfb, dfw);
    return r;
}

FTestResult f_test(const Sample& a, const Sample& b, double alpha) {
    require_sample(a);
    require_sample(b);
    const double va = a.variance();
    const double vb = b.variance();
    FTestResult r;
    if (va == 0.0 && vb == 0.0) {
        return r;
    }
    const bool aLarger = va >= vb;
    const double big = aLarger ? va : vb;
    const double small = aLarger ? vb : va;
    if (small == 0.0) {
        r.ratio = kInf;
        r.pTwoTail = 0.0;
        r.equalVariances = false;
        return r;
    }
    r.ratio = big / small;
    const double dfNum = static_cast<double>((aLarger ? a.size() : b.size()) - 1);
    const double dfDen = static_cast<double>((aLarger ? b.size() : a.size()) - 1);
    r.pTwoTail = std::min(1.0, 2.0 * f_sf(r.ratio, dfNum, dfDen));
    r.equalVariances = r.pTwoTail >= alpha;
    return r;
}

TTestResult t_test_pooled(const Sample& a, const Sample& b, double alpha) {
    TTestResult r = describe(a, b, alpha, TTestVariant::Pooled);
    const double n1 = static_cast<double>(r.countA);
    const double n2 = static_cast<double>(r.countB);
    r.df = n1 + n2 - 2.0;
    const double pooled = ((n1 - 1.0) * r.varianceA + (n2 - 1.0) * r.varianceB) / r.df;
    r.pooledVariance = pooled;
    const double se = std::sqrt(pooled * (1.0 / n1 + 1.0 / n2));
    return finish_t_test(r, r.meanA - r.meanB, se);
}

TTestResult t_test_welch(const Sample& a, const Sample& b, double alpha) {
    TTestResult r = describe(a, b, alpha, TTestVariant::Welch);
    const double n1 = static_cast<double>(r.countA);
    const double n2 = static_cast<double>(r.countB);
    const double qa = r.varianceA / n1;
    const double qb = r.varianceB / n2;
    const double se2 = qa + qb;
    if (se2 > 0.0) {
        r.df = se2 * se2 / (qa * qa / (n1 - 1.0) + qb * qb / (n2 - 1.0));
    } else {
        r.df = n1 + n2 - 2.0;
    }
    return finish_t_test(r, r.meanA - r.meanB, std::sqrt(se2));
}

EquivalencePartition equivalence_classes(std::span<const Sample> samples, double alpha,
                                         std::optional<TTestVariant> forceVariant) {
    if (samples.size() < 2) {
        throw ConfigError("equivalence classes need at least 2 samples");
    }
    const std::size_t k = samples.size();
    std::vector<std::size_t> parent(k);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    EquivalencePartition out;
    out.alpha = alpha;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            PairwiseComparison c;
            c.nameA = samples[i].name;
            c.nameB = samples[j].name;
            c.fTest = f_test(samples[i], samples[j], alpha);
            const auto variant = forceVariant.value_or(
                c.fTest.equalVariances ? TTestVariant::Pooled : TTestVariant::Welch);
            c.tTest = variant == TTestVariant::Pooled ? t_test_pooled(samples[i], samples[j], alpha)
                                                      : t_test_welch(samples[i], samples[j], alpha);
            c.significantlyDifferent = c.tTest.pTwoTail < alpha;
            if (!c.significantlyDifferent) {
                parent[find(i)] = find(j);
            }
            out.comparisons.push_back(std::move(c));
        }
    }

    std::vector<std::ptrdiff_t> classOfRoot(k, -1);
    for (std::size_t i = 0; i < k; ++i) {
        const auto root = find(i);
        if (classOfRoot[root] < 0) {
            classOfRoot[root] = static_cast<std::ptrdiff_t>(out.classes.size());
            out.classes.emplace_back();
        }
        out.classes[static_cast<std::size_t>(classOfRoot[root])].push_back(samples[i].name);
    }
    return out;
}

StatReport build_report(std::span<const Sample> samples, double alpha,
                        std::optional<TTestVariant> forceVariant) {
    return {anova_single_factor(samples, alpha), equivalence_classes(samples, alpha, forceVariant)};
}

std::vector<Sample> read_runs_csv(std::istream& in) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) {
                cell.pop_back();
            }
            cells.push_back(cell);
        }
        return cells;
    };

    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("runs CSV is empty");
    }
    auto header = split(line);
    std::size_t first = 0;
    if (!header.empty()) {
        std::string h = header[0];
        std::transform(h.begin(), h.end(), h.begin(), [](unsigned char c) { return std::tolower(c); });
        if (h == "run") {
            first = 1;
        }
    }
    std::vector<Sample> samples;
    for (std::size_t c = first; c < header.size(); ++c) {
        samples.push_back({header[c], {}});
    }
    if (samples.empty()) {
        throw IoError("runs CSV has no algorithm columns");
    }
    std::size_t lineNo = 1;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto cells = split(line);
        if (cells.size() != header.size()) {
            throw IoError("runs CSV line " + std::to_string(lineNo) + " has " +
                          std::to_string(cells.size()) + " cells, expected " +
                          std::to_string(header.size()));
        }
        for (std::size_t c = first; c < cells.size(); ++c) {
            try {
                std::size_t used = 0;
                samples[c - first].values.push_back(std::stod(cells[c], &used));
                if (used != cells[c].size()) {
                    throw std::invalid_argument(cells[c]);
                }
            } catch (const std::exception&) {
                throw IoError("runs CSV line " + std::to_string(lineNo) + ": bad number '" +
                              cells[c] + "'");
            }
        }
    }
    return samples;
}

void write_text_report(std::ostream& out, const StatReport& report) {
    char buf[256];
    const auto& a = report.anova;
    out << "Anova: Single Factor\n\nSUMMARY\n";
    std::snprintf(buf, sizeof buf, "%-10s %6s %10s %10s %10s\n", "Groups", "Count", "Sum", "Average",
                  "Variance");
    out << buf;
    for (const auto& g : a.groups) {
        std::snprintf(buf, sizeof buf, "%-10s %6zu %10.4f %10.5f %10.5f\n", g.name.c_str(), g.count,
                      g.sum, g.mean, g.variance);
        out << buf;
    }
    out << "\nANOVA\n";
    std::snprintf(buf, sizeof buf, "%-20s %10s %4s %10s %8s %10s %8s\n", "Source of Variation", "SS",
                  "df", "MS", "F", "P-value", "F crit");
    out << buf;
    std::snprintf(buf, sizeof buf, "%-20s %10.5f %4zu %10.5f %8.3f %10.3E %8.3f\n", "Between Groups",
                  a.ssBetween, a.dfBetween, a.msBetween, a.fStat, a.pValue, a.fCrit);
    out << buf;
    std::snprintf(buf, sizeof buf, "%-20s %10.5f %4zu %10.5f\n", "Within Groups", a.ssWithin,
                  a.dfWithin, a.msWithin);
    out << buf;
    std::snprintf(buf, sizeof buf, "%-20s %10.5f %4zu\n", "Total", a.ssTotal,
                  a.dfBetween + a.dfWithin);
    out << buf;

    for (const auto& c : report.partition.comparisons) {
        const auto& t = c.tTest;
        out << "\nF-Test Two-Sample for Variances: " << c.nameA << " vs " << c.nameB << "\n";
        std::snprintf(buf, sizeof buf, "  ratio %.4f  P two-tail %.4g  -> %s variances\n",
                      c.fTest.ratio, c.fTest.pTwoTail,
                      c.fTest.equalVariances ? "equal" : "unequal");
        out << buf;
        out << "\nt-Test: Two-Sample Assuming "
            << (t.variant == TTestVariant::Pooled ? "Equal" : "Unequal") << " Variances\n";
        std::snprintf(buf, sizeof buf, "%-30s %10s %10s\n", "", t.nameA.c_str(), t.nameB.c_str());
        out << buf;
        auto row2 = [&](const char* label, double x, double y, const char* fmt) {
            char cellA[32], cellB[32];
            std::snprintf(cellA, sizeof cellA, fmt, x);
            std::snprintf(cellB, sizeof cellB, fmt, y);
            std::snprintf(buf, sizeof buf, "%-30s %10s %10s\n", label, cellA, cellB);
            out << buf;
        };
        auto row1 = [&](const char* label, double x, const char* fmt) {
            char cell[32];
            std::snprintf(cell, sizeof cell, fmt, x);
            std::snprintf(buf, sizeof buf, "%-30s %10s\n", label, cell);
            out << buf;
        };
        row2("Mean", t.meanA, t.meanB, "%.4f");
        row2("Variance", t.varianceA, t.varianceB, "%.5f");
        row2("Observations", static_cast<double>(t.countA), static_cast<double>(t.countB), "%.0f");
        if (t.pooledVariance) {
            row1("Pooled Variance", *t.pooledVariance, "%.5f");
        }
        row1("Hypothesized Mean Difference", 0.0, "%.0f");
        row1("df", t.df, t.variant == TTestVariant::Pooled ? "%.0f" : "%.0f");
        row1("t Stat", t.tStat, "%.3f");
        row1("P(T<=t) one-tail", t.pOneTail, "%.3g");
        row1("t Critical one-tail", t.tCritOneTail, "%.3f");
        row1("P(T<=t) two-tail", t.pTwoTail, "%.3g");
        row1("t Critical two-tail", t.tCritTwoTail, "%.3f");
    }

    out << "\nEquivalence classes (alpha = " << report.partition.alpha << "):\n";
    for (std::size_t i = 0; i < report.partition.classes.size(); ++i) {
        out << "  " << (i + 1) << ": {";
        const auto& cls = report.partition.classes[i];
        for (std::size_t j = 0; j < cls.size(); ++j) {
            out << (j ? ", " : "") << cls[j];
        }
        out << "}\n";
    }
}

std::string report_json(const StatReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    const auto& a = report.anova;
    auto& groups = j["anova"]["groups"] = ordered_json::array();
    for (const auto& g : a.groups) {
        groups.push_back({{"name", g.name},
                          {"count", g.count},
                          {"sum", g.sum},
                          {"mean", g.mean},
                          {"variance", g.variance}});
    }
    j["anova"]["ssBetween"] = a.ssBetween;
    j["anova"]["ssWithin"] = a.ssWithin;
    j["anova"]["ssTotal"] = a.ssTotal;
    j["anova"]["dfBetween"] = a.dfBetween;
    j["anova"]["dfWithin"] = a.dfWithin;
    j["anova"]["msBetween"] = a.msBetween;
    j["anova"]["msWithin"] = a.msWithin;
    j["anova"]["fStat"] = a.fStat;
    j["anova"]["pValue"] = a.pValue;
    j["anova"]["fCrit"] = a.fCrit;
    j["anova"]["alpha"] = a.alpha;

    auto& comps = j["comparisons"] = ordered_json::array();
    for (const auto& c : report.partition.comparisons) {
        const auto& t = c.tTest;
        ordered_json tj = {{"variant", variant_name(t.variant)},
                           {"means", {t.meanA, t.meanB}},
                           {"variances", {t.varianceA, t.varianceB}},
                           {"observations", {t.countA, t.countB}},
                           {"df", t.df},
                           {"tStat", std::isfinite(t.tStat) ? ordered_json(t.tStat)
                                                            : ordered_json(t.tStat > 0 ? "inf" : "-inf")},
                           {"pOneTail", t.pOneTail},
                           {"pTwoTail", t.pTwoTail},
                           {"tCritOneTail", t.tCritOneTail},
                           {"tCritTwoTail", t.tCritTwoTail}};
        if (t.pooledVariance) {
            tj["pooledVariance"] = *t.pooledVariance;
        }
        comps.push_back({{"a", c.nameA},
                         {"b", c.nameB},
                         {"fTest",
                          {{"ratio", std::isfinite(c.fTest.ratio) ? ordered_json(c.fTest.ratio)
                                                                  : ordered_json("inf")},
                           {"pTwoTail", c.fTest.pTwoTail},
                           {"equalVariances", c.fTest.equalVariances}}},
                         {"tTest", tj},
                         {"significantlyDifferent", c.significantlyDifferent}});
    }
    j["equivalenceClasses"] = report.partition.classes;
    j["alpha"] = report.partition.alpha;
    return j.dump(2) + "\n";
}

}  // namespace advattrib::stats
