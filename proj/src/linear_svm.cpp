// One-vs-rest linear SVM trained by dual coordinate descent on the
// L2-regularized hinge loss. The bias is learned as the weight of a constant
// feature of value 1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "advattrib/models.hpp"
#include "advattrib/random.hpp"

namespace advattrib::ml {

namespace {

void train_binary(const Matrix& x, std::span<const double> y, const SvmConfig& config, Rng& rng,
                  std::span<double> w, double& bias) {
    const std::size_t n = x.rows;
    const std::size_t d = x.cols;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> alpha(n, 0.0);
    std::vector<double> qd(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto xi = x.row(i);
        qd[i] = std::inner_product(xi.begin(), xi.end(), xi.begin(), 1.0);
    }
    std::fill(w.begin(), w.end(), 0.0);
    bias = 0.0;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    // Shrinking: variables stuck at a bound are dropped from the active set
    // and brought back for a final full pass before stopping.
    std::size_t active = n;
    double pgMaxOld = inf;
    double pgMinOld = -inf;
    for (std::size_t epoch = 0; epoch < config.maxPasses; ++epoch) {
        for (std::size_t i = active; i > 1; --i) {
            std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        double pgMax = -inf;
        double pgMin = inf;
        std::size_t s = 0;
        while (s < active) {
            const std::size_t i = order[s];
            const auto xi = x.row(i);
            const double g =
                y[i] * (std::inner_product(xi.begin(), xi.end(), w.begin(), 0.0) + bias) - 1.0;
            double pg = 0.0;
            if (alpha[i] <= 0.0) {
                if (g > pgMaxOld) {
                    std::swap(order[s], order[--active]);
                    continue;
                }
                pg = std::min(g, 0.0);
            } else if (alpha[i] >= config.c) {
                if (g < pgMinOld) {
                    std::swap(order[s], order[--active]);
                    continue;
                }
                pg = std::max(g, 0.0);
            } else {
                pg = g;
            }
            pgMax = std::max(pgMax, pg);
            pgMin = std::min(pgMin, pg);
            if (std::fabs(pg) > 1e-12) {
                const double old = alpha[i];
                alpha[i] = std::clamp(old - g / qd[i], 0.0, config.c);
                const double step = (alpha[i] - old) * y[i];
                for (std::size_t j = 0; j < d; ++j) {
                    w[j] += step * xi[j];
                }
                bias += step;
            }
            ++s;
        }
        if (pgMax - pgMin < config.tolerance) {
            if (active == n) {
                break;
            }
            active = n;
            pgMaxOld = inf;
            pgMinOld = -inf;
            continue;
        }
        pgMaxOld = pgMax > 0.0 ? pgMax : inf;
        pgMinOld = pgMin < 0.0 ? pgMin : -inf;
    }
}

}  // namespace

LinearSvmParams fit_linear_svm(const Matrix& x, std::span<const std::size_t> classOf,
                               std::size_t numClasses, const SvmConfig& config) {
    LinearSvmParams p;
    p.weights = Matrix(numClasses, x.cols);
    p.bias.assign(numClasses, 0.0);
    std::vector<double> y(x.rows);
    for (std::size_t k = 0; k < numClasses; ++k) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            y[i] = classOf[i] == k ? 1.0 : -1.0;
        }
        Rng rng(derive_seed(config.seed, "lsvm", k));
        train_binary(x, y, config, rng, p.weights.row(k), p.bias[k]);
    }
    return p;
}

void linear_svm_scores(const LinearSvmParams& p, std::span<const double> x, std::span<double> out) {
    for (std::size_t k = 0; k < p.weights.rows; ++k) {
        const auto wk = p.weights.row(k);
        out[k] = std::inner_product(wk.begin(), wk.end(), x.begin(), p.bias[k]);
    }
}

}  // namespace advattrib::ml
