#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "advattrib/error.hpp"
#include "advattrib/ssga.hpp"

using namespace advattrib;

namespace {

double bit_count(const FeatureMask& m) {
    return static_cast<double>(m.count()) / static_cast<double>(kAlphabetSize);
}

// Pearson chi-square against a uniform expectation; returns the statistic.
double chi_square_uniform(const std::vector<std::size_t>& counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double e = total / static_cast<double>(counts.size());
    double x2 = 0.0;
    for (auto c : counts) {
        x2 += (static_cast<double>(c) - e) * (static_cast<double>(c) - e) / e;
    }
    return x2;
}

}  // namespace

TEST_CASE("apply_mask and counting") {
    FeatureVector v;
    for (std::size_t j = 0; j < kAlphabetSize; ++j) {
        v.values[j] = static_cast<double>(j + 1);
    }
    CHECK(apply_mask(full_mask(), v).values == v.values);
    for (double x : apply_mask(FeatureMask{}, v).values) {
        CHECK(x == 0.0);
    }
    FeatureMask alt;
    for (std::size_t j = 0; j < kAlphabetSize; j += 2) {
        alt.set(j);
    }
    CHECK(count_active(alt) == 48);
    CHECK(count_active(full_mask()) == 95);
    CHECK(count_active(FeatureMask{}) == 0);
    const auto masked = apply_mask(alt, v);
    CHECK(std::count_if(masked.values.begin(), masked.values.end(), [](double x) { return x != 0.0; }) <= 48);
    CHECK(active_indices(alt).size() == 48);
    CHECK(mask_from_string(mask_to_string(alt)) == alt);
    CHECK(mask_to_string(alt).substr(0, 4) == "1010");
}

TEST_CASE("binary tournament") {
    Rng rng(3);
    std::vector<Individual> two(2);
    two[0].fitness = 0.9;
    two[1].fitness = 0.1;
    for (int i = 0; i < 100; ++i) {
        CHECK(binary_tournament(two, rng).fitness == 0.9);
    }
    CHECK_THROWS_AS(binary_tournament(std::vector<Individual>(1), rng), SelectionError);

    // Equal fitness: uniform winner. Critical chi-square(29) at p = 0.01 is 49.59.
    std::vector<Individual> flat(30);
    std::vector<std::size_t> counts(30, 0);
    for (int i = 0; i < 10000; ++i) {
        ++counts[binary_tournament_index(flat, rng)];
    }
    CHECK(chi_square_uniform(counts) < 49.59);
}

TEST_CASE("uniform crossover") {
    Rng rng(5);
    FeatureMask a;
    a.set(3);
    a.set(70);
    CHECK(uniform_crossover(a, a, rng) == a);

    FeatureMask b;
    b.set(4);
    for (int t = 0; t < 100; ++t) {
        const auto c = uniform_crossover(a, b, rng);
        for (std::size_t j = 0; j < kAlphabetSize; ++j) {
            CHECK((c[j] == a[j] || c[j] == b[j]));
        }
    }
    double total = 0.0;
    for (int t = 0; t < 10000; ++t) {
        total += static_cast<double>(uniform_crossover(full_mask(), FeatureMask{}, rng).count());
    }
    CHECK(std::abs(total / 10000.0 - 47.5) < 1.5);
}

TEST_CASE("per-bit mutation") {
    Rng rng(8);
    FeatureMask m;
    m.set(1);
    m.set(50);
    CHECK(mutate(m, 0.0, rng) == m);
    CHECK(mutate(m, 1.0, rng) == ~m);
    // Complement of the full mask is empty, so it gets repaired to one bit.
    CHECK(mutate(full_mask(), 1.0, rng).count() == 1);
    double hd = 0.0;
    for (int t = 0; t < 10000; ++t) {
        hd += static_cast<double>((mutate(m, 0.5, rng) ^ m).count());
    }
    CHECK(std::abs(hd / 10000.0 - 47.5) < 1.5);
}

TEST_CASE("per-child mutation flips at most one bit") {
    Rng rng(2);
    FeatureMask m;
    m.set(7);
    m.set(9);
    std::size_t changed = 0;
    for (int t = 0; t < 2000; ++t) {
        const auto hd = (mutate_one(m, 0.5, rng) ^ m).count();
        CHECK(hd <= 1);
        changed += hd;
    }
    CHECK(std::abs(static_cast<double>(changed) / 2000.0 - 0.5) < 0.05);
    CHECK(mutate_one(m, 0.0, rng) == m);
    CHECK(parse_mutation_mode("per-bit") == MutationMode::PerBit);
    CHECK(to_string(MutationMode::PerChild) == "per-child");
    CHECK_THROWS_AS(parse_mutation_mode("sometimes"), ConfigError);
}

TEST_CASE("repair and random masks are never empty") {
    Rng rng(1);
    FeatureMask empty;
    repair_mask(empty, rng);
    CHECK(empty.count() == 1);
    for (int i = 0; i < 1000; ++i) {
        CHECK(random_mask(rng).any());
    }
}

TEST_CASE("GA on the bit-count oracle") {
    for (auto mode : {MutationMode::PerChild, MutationMode::PerBit}) {
        GaConfig c;
        c.seed = 11;
        c.mutationMode = mode;
        const auto r = run_ssga(c, bit_count);
        CHECK(r.population.size() == 30);
        CHECK(r.evaluationsUsed <= c.maxEvaluations + c.populationSize);
        for (std::size_t i = 1; i < r.fitnessTrace.size(); ++i) {
            CHECK(r.fitnessTrace[i].bestFitness >= r.fitnessTrace[i - 1].bestFitness);
        }
        CHECK(r.fitnessTrace.back().bestFitness >= r.fitnessTrace[29].bestFitness);
        if (mode == MutationMode::PerChild) {
            CHECK(r.best.fitness >= 0.9);
        }
    }
}

TEST_CASE("GA stopping rules") {
    GaConfig c;
    c.seed = 4;
    c.targetFitness = 0.0;
    auto r = run_ssga(c, bit_count);
    CHECK(r.evaluationsUsed == 30);

    c.targetFitness = 2.0;
    c.maxEvaluations = 137;
    r = run_ssga(c, bit_count);
    CHECK(r.evaluationsUsed == 137);

    c.targetFitness = 0.7;
    c.maxEvaluations = 1000;
    r = run_ssga(c, bit_count);
    CHECK(r.best.fitness >= 0.7);
    // It stopped on the first evaluation that reached the target.
    CHECK(r.fitnessTrace[r.evaluationsUsed - 2].bestFitness < 0.7);
}

TEST_CASE("GA population minimum never drops and mean improves early") {
    GaConfig c;
    c.seed = 21;
    c.maxEvaluations = 200;
    c.targetFitness = 2.0;
    // Track the population through a fitness function that records calls.
    const auto r = run_ssga(c, bit_count);
    GaConfig first = c;
    first.maxEvaluations = 30;
    const auto initial = run_ssga(first, bit_count);
    auto stats = [](const std::vector<Individual>& pop) {
        double mn = 1.0;
        double mean = 0.0;
        for (const auto& i : pop) {
            mn = std::min(mn, i.fitness);
            mean += i.fitness;
        }
        return std::pair{mn, mean / static_cast<double>(pop.size())};
    };
    const auto [min0, mean0] = stats(initial.population);
    const auto [min1, mean1] = stats(r.population);
    CHECK(min1 >= min0);
    CHECK(mean1 > mean0);
}

TEST_CASE("GA is deterministic for a fixed seed") {
    GaConfig c;
    c.seed = 99;
    const auto a = run_ssga(c, bit_count);
    const auto b = run_ssga(c, bit_count);
    CHECK(masks_json(a.population) == masks_json(b.population));
    c.seed = 100;
    CHECK(masks_json(run_ssga(c, bit_count).population) != masks_json(a.population));
}

TEST_CASE("GA config validation") {
    GaConfig c;
    c.populationSize = 1;
    CHECK_THROWS_AS(run_ssga(c, bit_count), ConfigError);
    c = {};
    c.mutationRate = 1.5;
    CHECK_THROWS_AS(run_ssga(c, bit_count), ConfigError);
}

TEST_CASE("feature consistency") {
    GaRunResult a;
    GaRunResult b;
    a.best.mask.set(0);
    a.best.mask.set(1);
    b.best.mask.set(0);
    const std::vector<GaRunResult> runs = {a, b};
    const auto c = feature_consistency(runs);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 0.5);
    CHECK(c[2] == 0.0);
    CHECK_THROWS_AS(feature_consistency(std::vector<GaRunResult>{}), ConfigError);

    GaConfig g;
    g.maxEvaluations = 60;
    const auto many = run_ssga_independent(g, bit_count, 4);
    CHECK(many.size() == 4);
    for (double v : feature_consistency(many)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        CHECK(std::abs(v * 4.0 - std::round(v * 4.0)) < 1e-12);
    }
}

TEST_CASE("masks.json and trace CSV formats") {
    std::vector<Individual> pop(2);
    pop[0].mask.set(0);
    pop[0].fitness = 0.5;
    pop[1].mask = full_mask();
    pop[1].fitness = 0.75;
    const auto text = masks_json(pop);
    const auto back = parse_masks_json(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].mask == pop[0].mask);
    CHECK(back[1].fitness == 0.75);
    CHECK(text.find("\"bits\"") != std::string::npos);

    std::ostringstream out;
    write_trace_csv(out, std::vector<TracePoint>{{1, 0.5}, {2, 0.6}});
    CHECK(out.str().rfind("evaluation,bestFitness\n1,", 0) == 0);
}
