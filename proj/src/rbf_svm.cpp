// One-vs-rest RBF-kernel SVM. Each binary problem is solved with SMO using
// second-order working-set selection on a precomputed kernel matrix.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "advattrib/models.hpp"

namespace advattrib::ml {

namespace {

constexpr double kTau = 1e-12;

struct BinarySolution {
    std::vector<double> alpha;
    double rho = 0.0;
};

BinarySolution solve_binary(const Matrix& k, std::span<const double> y, double c, double eps,
                            std::size_t maxIterations) {
    const std::size_t n = k.rows;
    BinarySolution s;
    auto& alpha = s.alpha;
    alpha.assign(n, 0.0);
    std::vector<double> grad(n, -1.0);
    auto q = [&](std::size_t i, std::size_t j) { return y[i] * y[j] * k(i, j); };
    auto isUpper = [&](std::size_t t) { return alpha[t] >= c; };
    auto isLower = [&](std::size_t t) { return alpha[t] <= 0.0; };

    for (std::size_t iter = 0; iter < maxIterations; ++iter) {
        double gMax = -std::numeric_limits<double>::infinity();
        std::ptrdiff_t iSel = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (!isUpper(t) && -grad[t] >= gMax) {
                    gMax = -grad[t];
                    iSel = static_cast<std::ptrdiff_t>(t);
                }
            } else if (!isLower(t) && grad[t] >= gMax) {
                gMax = grad[t];
                iSel = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (iSel < 0) {
            break;
        }
        const auto i = static_cast<std::size_t>(iSel);

        double gMax2 = -std::numeric_limits<double>::infinity();
        double objMin = std::numeric_limits<double>::infinity();
        std::ptrdiff_t jSel = -1;
        for (std::size_t t = 0; t < n; ++t) {
            if (y[t] > 0) {
                if (isLower(t)) {
                    continue;
                }
                const double diff = gMax + grad[t];
                gMax2 = std::max(gMax2, grad[t]);
                if (diff > 0.0) {
                    double quad = k(i, i) + k(t, t) - 2.0 * y[i] * q(i, t);
                    quad = quad > 0.0 ? quad : kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= objMin) {
                        objMin = obj;
                        jSel = static_cast<std::ptrdiff_t>(t);
                    }
                }
            } else {
                if (isUpper(t)) {
                    continue;
                }
                const double diff = gMax - grad[t];
                gMax2 = std::max(gMax2, -grad[t]);
                if (diff > 0.0) {
                    double quad = k(i, i) + k(t, t) + 2.0 * y[i] * q(i, t);
                    quad = quad > 0.0 ? quad : kTau;
                    const double obj = -(diff * diff) / quad;
                    if (obj <= objMin) {
                        objMin = obj;
                        jSel = static_cast<std::ptrdiff_t>(t);
                    }
                }
            }
        }
        if (gMax + gMax2 < eps || jSel < 0) {
            break;
        }
        const auto j = static_cast<std::size_t>(jSel);

        const double oldI = alpha[i];
        const double oldJ = alpha[j];
        if (y[i] != y[j]) {
            double quad = k(i, i) + k(j, j) + 2.0 * q(i, j);
            quad = quad > 0.0 ? quad : kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            double quad = k(i, i) + k(j, j) - 2.0 * q(i, j);
            quad = quad > 0.0 ? quad : kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        const double dI = alpha[i] - oldI;
        const double dJ = alpha[j] - oldJ;
        for (std::size_t t = 0; t < n; ++t) {
            grad[t] += q(t, i) * dI + q(t, j) * dJ;
        }
    }

    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sumFree = 0.0;
    std::size_t nFree = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (isUpper(t)) {
            if (y[t] < 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else if (isLower(t)) {
            if (y[t] > 0) {
                ub = std::min(ub, yg);
            } else {
                lb = std::max(lb, yg);
            }
        } else {
            ++nFree;
            sumFree += yg;
        }
    }
    s.rho = nFree > 0 ? sumFree / static_cast<double>(nFree) : 0.5 * (ub + lb);
    return s;
}

}  // namespace

double scale_gamma(const Matrix& x) {
    if (x.data.empty()) {
        return 1.0;
    }
    const double n = static_cast<double>(x.data.size());
    const double mean = std::accumulate(x.data.begin(), x.data.end(), 0.0) / n;
    double var = 0.0;
    for (double v : x.data) {
        var += (v - mean) * (v - mean);
    }
    var /= n;
    return var > 0.0 ? 1.0 / (static_cast<double>(x.cols) * var) : 1.0;
}

double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
    double d2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

Matrix rbf_kernel_matrix(const Matrix& x, double gamma) {
    Matrix k(x.rows, x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
        k(i, i) = 1.0;
        for (std::size_t j = i + 1; j < x.rows; ++j) {
            k(i, j) = k(j, i) = rbf_kernel(x.row(i), x.row(j), gamma);
        }
    }
    return k;
}

RbfSvmParams fit_rbf_svm(const Matrix& x, std::span<const std::size_t> classOf,
                         std::size_t numClasses, const SvmConfig& config) {
    RbfSvmParams p;
    p.gamma = config.gamma.value_or(scale_gamma(x));
    const Matrix k = rbf_kernel_matrix(x, p.gamma);
    const std::size_t maxIterations = std::max<std::size_t>(1, config.maxPasses) * std::max<std::size_t>(x.rows, 1);

    Matrix coef(numClasses, x.rows);
    p.bias.assign(numClasses, 0.0);
    std::vector<double> y(x.rows);
    for (std::size_t c = 0; c < numClasses; ++c) {
        for (std::size_t i = 0; i < x.rows; ++i) {
            y[i] = classOf[i] == c ? 1.0 : -1.0;
        }
        const auto sol = solve_binary(k, y, config.c, config.tolerance, maxIterations);
        for (std::size_t i = 0; i < x.rows; ++i) {
            coef(c, i) = sol.alpha[i] * y[i];
        }
        p.bias[c] = -sol.rho;
    }

    // Keep only rows that are a support vector for some class.
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t c = 0; c < numClasses; ++c) {
            if (coef(c, i) != 0.0) {
                keep.push_back(i);
                break;
            }
        }
    }
    p.supportVectors = Matrix(keep.size(), x.cols);
    p.dualCoef = Matrix(numClasses, keep.size());
    for (std::size_t s = 0; s < keep.size(); ++s) {
        std::copy_n(x.row(keep[s]).begin(), x.cols, p.supportVectors.row(s).begin());
        for (std::size_t c = 0; c < numClasses; ++c) {
            p.dualCoef(c, s) = coef(c, keep[s]);
        }
    }
    return p;
}

void rbf_svm_scores(const RbfSvmParams& p, std::span<const double> x, std::span<double> out) {
    std::vector<double> kx(p.supportVectors.rows);
    for (std::size_t s = 0; s < kx.size(); ++s) {
        kx[s] = rbf_kernel(p.supportVectors.row(s), x, p.gamma);
    }
    for (std::size_t c = 0; c < p.dualCoef.rows; ++c) {
        const auto coef = p.dualCoef.row(c);
        out[c] = std::inner_product(coef.begin(), coef.end(), kx.begin(), p.bias[c]);
    }
}

}  // namespace advattrib::ml
