#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "advattrib/corpus.hpp"
#include "advattrib/error.hpp"
#include "advattrib/models.hpp"

using namespace advattrib;

namespace {

const PipelineSpec kRaw{false, false, false};

LabeledVector point(double x, double y, AuthorId author) {
    LabeledVector r;
    r.features.values[0] = x;
    r.features.values[1] = y;
    r.author = author;
    return r;
}

FeatureMask first_two() {
    FeatureMask m;
    m.set(0);
    m.set(1);
    return m;
}

std::vector<LabeledVector> xor_set() {
    return {point(0, 0, 1), point(1, 1, 1), point(0, 1, 2), point(1, 0, 2)};
}

// Exhaustive search over a grid of lines: does any line put all four XOR
// points on their own side?
bool xor_linearly_separable() {
    const auto pts = xor_set();
    for (double w1 = -2; w1 <= 2; w1 += 0.05) {
        for (double w2 = -2; w2 <= 2; w2 += 0.05) {
            for (double b = -3; b <= 3; b += 0.05) {
                bool ok = true;
                for (const auto& p : pts) {
                    const double s = w1 * p.features.values[0] + w2 * p.features.values[1] + b;
                    ok = ok && ((p.author == 1) ? s > 0 : s < 0);
                }
                if (ok) {
                    return true;
                }
            }
        }
    }
    return false;
}

std::vector<LabeledVector> corpus_vectors() {
    static const auto v = extract_labeled(generate_corpus(CorpusConfig{}));
    return v;
}

}  // namespace

TEST_CASE("split sizes follow the allocation table") {
    const auto v = corpus_vectors();
    auto s = split_dataset(v, SplitSpec::svm(1));
    CHECK(s.train.size() == 90);
    CHECK(s.eval.size() == 0);
    CHECK(s.valid.size() == 0);
    CHECK(s.test.size() == 10);
    s = split_dataset(v, SplitSpec::ffnn(1));
    CHECK(s.train.size() == 80);
    CHECK(s.eval.size() == 0);
    CHECK(s.valid.size() == 10);
    CHECK(s.test.size() == 10);
}

TEST_CASE("splits are disjoint, exhaustive and deterministic") {
    const auto v = corpus_vectors();
    const auto s = split_dataset(v, SplitSpec::ffnn(9));
    std::multiset<std::string> ids;
    for (const auto* part : {&s.train, &s.eval, &s.valid, &s.test}) {
        for (const auto& r : *part) {
            ids.insert(r.features.docId);
        }
    }
    CHECK(ids.size() == v.size());
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == v.size());
    const auto again = split_dataset(v, SplitSpec::ffnn(9));
    CHECK(again.test.front().features.docId == s.test.front().features.docId);
    CHECK_THROWS_AS(split_dataset(v, SplitSpec{0.5, 0.1, 0.1, 0.1, 0}), ConfigError);
}

TEST_CASE("linear SVM separates a separable toy set") {
    const std::vector<LabeledVector> toy = {point(0, 0, 1), point(0, 1, 1), point(3, 0, 2),
                                            point(3, 1, 2)};
    const auto m = train(ModelKind::Lsvm, {}, toy, first_two(), kRaw);
    CHECK(evaluate_accuracy(m, toy) == 1.0);
    for (const auto& r : toy) {
        CHECK(predict(m, r.features) == r.author);
    }
}

TEST_CASE("XOR defeats a linear model but not a small network") {
    REQUIRE_FALSE(xor_linearly_separable());
    const auto toy = xor_set();
    const auto lin = train(ModelKind::Lsvm, {}, toy, first_two(), kRaw);
    CHECK(evaluate_accuracy(lin, toy) <= 0.75);

    TrainConfig tc;
    tc.ffnn.hiddenUnits = 4;
    tc.ffnn.maxIterations = 5000;
    tc.ffnn.learningRate = 0.05;
    tc.ffnn.batchSize = 4;
    tc.ffnn.l2 = 0.0;
    tc.ffnn.patience = 100000;
    tc.ffnn.seed = 3;
    const auto net = train(ModelKind::Ffnn, tc, toy, first_two(), kRaw);
    CHECK(evaluate_accuracy(net, toy) == 1.0);
}

TEST_CASE("FFNN with one iteration does not converge") {
    TrainConfig tc;
    tc.ffnn.maxIterations = 1;
    const auto v = corpus_vectors();
    const auto m = train(ModelKind::Ffnn, tc, v, full_mask(), PipelineSpec{});
    CHECK_FALSE(m.converged);
    CHECK(m.iterations == 1);
}

TEST_CASE("training errors") {
    std::vector<LabeledVector> one = {point(0, 0, 1), point(1, 1, 1)};
    CHECK_THROWS_AS(train(ModelKind::Lsvm, {}, one, first_two(), kRaw), TrainingError);
    CHECK_THROWS_AS(train(ModelKind::Lsvm, {}, xor_set(), FeatureMask{}, kRaw), MaskError);
    const auto m = train(ModelKind::Lsvm, {}, xor_set(), first_two(), kRaw);
    const std::vector<double> shortRow(10, 1.0);
    CHECK_THROWS_AS(predict(m, shortRow), ShapeError);
    CHECK_THROWS_AS(evaluate_accuracy(m, std::vector<LabeledVector>{}), EvaluationError);
}

TEST_CASE("every classifier fits the corpus and predicts deterministically") {
    const auto v = corpus_vectors();
    for (auto kind : {ModelKind::Lsvm, ModelKind::RbfSvm, ModelKind::Ffnn}) {
        CAPTURE(to_string(kind));
        const auto a = train(kind, {}, v, full_mask(), PipelineSpec{});
        const auto b = train(kind, {}, v, full_mask(), PipelineSpec{});
        CHECK(evaluate_accuracy(a, v) == 1.0);
        for (std::size_t i = 0; i < v.size(); i += 7) {
            CHECK(predict(a, v[i].features) == v[i].author);
            CHECK(decision_values(a, v[i].features) == decision_values(b, v[i].features));
        }
        CHECK(a.labels.size() == 25);
    }
}

TEST_CASE("accuracy extremes") {
    const auto toy = std::vector<LabeledVector>{point(0, 0, 1), point(0, 1, 1), point(3, 0, 2),
                                                point(3, 1, 2)};
    const auto m = train(ModelKind::Lsvm, {}, toy, first_two(), kRaw);
    auto swapped = toy;
    for (auto& r : swapped) {
        r.author = r.author == 1 ? 2 : 1;
    }
    CHECK(evaluate_accuracy(m, toy) == 1.0);
    CHECK(evaluate_accuracy(m, swapped) == 0.0);
}

TEST_CASE("argmax ties go to the lowest index and shifts do not matter") {
    CHECK(argmax(std::vector<double>{1.0, 3.0, 3.0}) == 1);
    CHECK(argmax(std::vector<double>{2.0, 2.0}) == 0);
    std::vector<double> s = {0.3, -1.0, 0.7, 0.1};
    auto shifted = s;
    for (double& x : shifted) {
        x += 5.0;
    }
    CHECK(argmax(s) == argmax(shifted));
    CHECK(top_two_margin(s) == doctest::Approx(0.4));
}

TEST_CASE("ties in decision values pick the lowest author id") {
    // A network with all-zero weights scores every class equally.
    auto m = train(ModelKind::Ffnn, {}, xor_set(), first_two(), kRaw);
    auto& p = std::get<FfnnParams>(m.params);
    std::fill(p.w2.data.begin(), p.w2.data.end(), 0.0);
    std::fill(p.b2.begin(), p.b2.end(), 0.0);
    CHECK(predict(m, point(0.4, 0.9, 0).features) == 1);
}

TEST_CASE("RBF kernel matrix is symmetric positive semidefinite") {
    std::mt19937_64 g(4);
    std::normal_distribution<double> n(0, 1);
    Matrix x(12, 5);
    for (double& v : x.data) {
        v = n(g);
    }
    const auto k = ml::rbf_kernel_matrix(x, 0.3);
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(k(i, i) == 1.0);
        for (std::size_t j = 0; j < 12; ++j) {
            CHECK(k(i, j) == k(j, i));
        }
    }
    // Smallest eigenvalue by Cholesky with a tiny shift: it succeeds iff K + 1e-8 I is PD.
    Matrix l(12, 12);
    bool pd = true;
    for (std::size_t i = 0; i < 12 && pd; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = k(i, j) + (i == j ? 1e-8 : 0.0);
            for (std::size_t t = 0; t < j; ++t) {
                s -= l(i, t) * l(j, t);
            }
            if (i == j) {
                if (s <= 0.0) {
                    pd = false;
                    break;
                }
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    CHECK(pd);
}

TEST_CASE("scale gamma is one over features times variance") {
    Matrix x(2, 2);
    x(0, 0) = 0;
    x(0, 1) = 0;
    x(1, 0) = 2;
    x(1, 1) = 2;
    // Variance of {0,0,2,2} is 1.
    CHECK(ml::scale_gamma(x) == doctest::Approx(0.5));
}

TEST_CASE("backprop matches finite differences on a 5-point toy set") {
    std::vector<LabeledVector> toy;
    std::mt19937_64 g(17);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 5; ++i) {
        LabeledVector r;
        for (double& v : r.features.values) {
            v = u(g);
        }
        r.author = 1000 + i % 3;
        toy.push_back(r);
    }
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        FfnnConfig c;
        c.hiddenUnits = 8;
        c.seed = seed;
        CHECK(gradient_check(c, toy) < 1e-4);
    }
}

TEST_CASE("zero network: loss ln k and softmax bias gradient") {
    const auto p0 = ml::init_ffnn(3, 4, 3, 1);
    FfnnParams p = p0;
    std::vector<double> flat(ml::flatten(p).size(), 0.0);
    ml::unflatten(flat, p);
    Matrix x(4, 3);
    for (double& v : x.data) {
        v = 0.5;
    }
    const std::vector<std::size_t> cls = {0, 0, 1, 2};
    FfnnParams grad = p;
    const double loss = ml::ffnn_loss(p, x, cls, 0.0, &grad);
    CHECK(loss == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    // d loss / d b2_k = mean(p_k - y_k) = 1/3 - share of class k.
    CHECK(grad.b2[0] == doctest::Approx(1.0 / 3.0 - 0.5).epsilon(1e-12));
    CHECK(grad.b2[1] == doctest::Approx(1.0 / 3.0 - 0.25).epsilon(1e-12));
    CHECK(grad.b2[2] == doctest::Approx(1.0 / 3.0 - 0.25).epsilon(1e-12));
}

TEST_CASE("gradient checker detects a broken gradient") {
    const auto p = ml::init_ffnn(4, 5, 3, 2);
    Matrix x(5, 4);
    std::mt19937_64 g(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (double& v : x.data) {
        v = u(g);
    }
    const std::vector<std::size_t> cls = {0, 1, 2, 0, 1};
    const double err = ml::gradient_check(p, x, cls, 0.0,
                                          [](const FfnnParams& q, const Matrix& xs,
                                             std::span<const std::size_t> c, double l2, FfnnParams& out) {
                                              ml::ffnn_loss(q, xs, c, l2, &out);
                                              out.w1.data[0] += 0.5;
                                          });
    CHECK(err > 1e-2);
}

TEST_CASE("full-batch training loss is almost always non-increasing at a small step") {
    std::vector<LabeledVector> toy;
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 8; ++i) {
        LabeledVector r;
        r.features.values[0] = u(g);
        r.features.values[1] = u(g);
        r.author = i % 2;
        toy.push_back(r);
    }
    Matrix x(8, 2);
    std::vector<std::size_t> cls(8);
    for (std::size_t i = 0; i < 8; ++i) {
        x(i, 0) = toy[i].features.values[0];
        x(i, 1) = toy[i].features.values[1];
        cls[i] = static_cast<std::size_t>(toy[i].author);
    }
    FfnnConfig c;
    c.hiddenUnits = 6;
    c.learningRate = 1e-4;
    c.batchSize = 8;
    c.maxIterations = 200;
    c.patience = 100000;
    const auto fit = ml::fit_ffnn(x, cls, 2, c);
    REQUIRE(fit.lossCurve.size() >= 2);
    std::size_t down = 0;
    for (std::size_t i = 1; i < fit.lossCurve.size(); ++i) {
        down += fit.lossCurve[i] <= fit.lossCurve[i - 1];
    }
    CHECK(static_cast<double>(down) >= 0.95 * static_cast<double>(fit.lossCurve.size() - 1));
}
