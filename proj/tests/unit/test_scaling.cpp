#include <doctest.h>

#include <cmath>
#include <random>

#include "advattrib/corpus.hpp"
#include "advattrib/error.hpp"
#include "advattrib/scaling.hpp"

using namespace advattrib;

namespace {

FeatureVector row(std::initializer_list<double> head) {
    FeatureVector v;
    std::size_t j = 0;
    for (double x : head) {
        v.values[j++] = x;
    }
    return v;
}

std::vector<FeatureVector> random_rows(std::size_t n, unsigned seed) {
    std::mt19937_64 g(seed);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::vector<FeatureVector> rows(n);
    for (auto& r : rows) {
        for (auto& x : r.values) {
            x = u(g);
        }
    }
    return rows;
}

}  // namespace

TEST_CASE("scaler on two rows") {
    const auto p = fit_scaler(std::vector<FeatureVector>{row({0}), row({2})});
    CHECK(p.mean[0] == 1.0);
    CHECK(p.stdDev[0] == 1.0);
    CHECK(p.fittedOn == 2);
    CHECK(transform(p, row({2})).values[0] == 1.0);
    CHECK_THROWS_AS(fit_scaler(std::vector<FeatureVector>{row({1})}), FitError);
}

TEST_CASE("identical rows give zero std and a unit divisor") {
    const auto r = row({3, 4, 5});
    const auto p = fit_scaler(std::vector<FeatureVector>{r, r, r});
    CHECK(p.mean[1] == 4.0);
    CHECK(p.stdDev[1] == 0.0);
    CHECK(transform(p, r).values[1] == 0.0);
    CHECK(transform(p, row({3, 7, 5})).values[1] == 3.0);
}

TEST_CASE("scaler matches a two-pass oracle") {
    const auto rows = random_rows(5, 11);
    const auto p = fit_scaler(rows);
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        double m = 0.0;
        for (const auto& r : rows) {
            m += r.values[j];
        }
        m /= 5.0;
        double v = 0.0;
        for (const auto& r : rows) {
            v += (r.values[j] - m) * (r.values[j] - m);
        }
        CHECK(p.mean[j] == doctest::Approx(m).epsilon(1e-12));
        CHECK(p.stdDev[j] == doctest::Approx(std::sqrt(v / 5.0)).epsilon(1e-12));
    }
    FeatureVector center;
    center.values = p.mean;
    for (double x : transform(p, center).values) {
        CHECK(x == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("scaled training matrix has zero mean and unit std") {
    const auto rows = random_rows(20, 3);
    const auto p = fit_scaler(rows);
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        double m = 0.0;
        double s = 0.0;
        for (const auto& r : rows) {
            m += transform(p, r).values[j];
        }
        m /= 20.0;
        for (const auto& r : rows) {
            const double d = transform(p, r).values[j] - m;
            s += d * d;
        }
        CHECK(std::abs(m) < 1e-9);
        CHECK(std::sqrt(s / 20.0) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("transform is affine without tf-idf") {
    const auto rows = random_rows(6, 5);
    const auto p = fit_scaler(rows);
    const double a = 0.3;
    FeatureVector mix;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        mix.values[j] = a * rows[0].values[j] + (1 - a) * rows[1].values[j];
    }
    const auto t0 = transform(p, rows[0]);
    const auto t1 = transform(p, rows[1]);
    const auto tm = transform(p, mix);
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        CHECK(tm.values[j] == doctest::Approx(a * t0.values[j] + (1 - a) * t1.values[j]).epsilon(1e-12));
    }
}

TEST_CASE("pipeline variants") {
    const auto variants = PipelineSpec::all_variants();
    REQUIRE(variants.size() == 8);
    // Ablation table row order.
    CHECK(variants.front() == PipelineSpec{false, false, false});
    CHECK(variants[1] == PipelineSpec{true, true, true});
    CHECK(variants.back() == PipelineSpec{false, false, true});
    CHECK(variants.front().label() == "None");
    CHECK(variants[1].label() == "Normalization, Standardization, TFIDF");
    for (std::size_t i = 0; i < variants.size(); ++i) {
        for (std::size_t j = i + 1; j < variants.size(); ++j) {
            CHECK_FALSE(variants[i] == variants[j]);
        }
    }

    const auto docs = generate_corpus(CorpusConfig{});
    std::vector<FeatureVector> train;
    for (std::size_t i = 0; i < 40; ++i) {
        train.push_back(extract_unigrams(docs[i]));
    }
    const auto identity = Pipeline::fit({false, false, false}, train);
    CHECK(identity.apply_evaluation(train[0]).values == train[0].values);

    const auto full = Pipeline::fit({true, true, true}, train);
    CHECK(full.apply_evaluation(train[3]).values == full.apply_evaluation(train[3]).values);
    // Training-role scaling standardizes the weighted training rows.
    double m = 0.0;
    for (const auto& r : train) {
        m += full.apply_training(r).values[*alphabet_index('e')];
    }
    CHECK(std::abs(m / 40.0) < 1e-9);

    // Normalization only scales training rows; Standardization only evaluation rows.
    const auto normOnly = Pipeline::fit({true, false, false}, train);
    CHECK(normOnly.apply_evaluation(train[0]).values == train[0].values);
    CHECK(normOnly.apply_training(train[0]).values != train[0].values);
    const auto stdOnly = Pipeline::fit({false, true, false}, train);
    CHECK(stdOnly.apply_training(train[0]).values == train[0].values);
    CHECK(stdOnly.apply_evaluation(train[0]).values != train[0].values);
}

TEST_CASE("pipeline fitting ignores rows it was not given") {
    const auto docs = generate_corpus(CorpusConfig{});
    std::vector<FeatureVector> train;
    for (std::size_t i = 0; i < 30; ++i) {
        train.push_back(extract_unigrams(docs[i]));
    }
    auto test = extract_unigrams(docs[50]);
    const auto p = Pipeline::fit({true, true, true}, train);
    const auto before = p.scaler()->mean;
    test.values[3] += 100;
    const auto again = Pipeline::fit({true, true, true}, train);
    CHECK(again.scaler()->mean == before);
    CHECK(again.tfidf()->idf == p.tfidf()->idf);
}
