// Feedforward network: inputs -> ReLU hidden layer -> softmax, trained on
// cross-entropy with mini-batch Adam (or plain SGD).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "advattrib/models.hpp"
#include "advattrib/random.hpp"

namespace advattrib {

std::size_t FfnnParams::parameter_count() const {
    return w1.data.size() + b1.size() + w2.data.size() + b2.size();
}

namespace ml {

namespace {

void softmax_inplace(std::span<double> z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        total += v;
    }
    for (double& v : z) {
        v /= total;
    }
}

FfnnParams zeros_like(const FfnnParams& p) {
    FfnnParams g;
    g.w1 = Matrix(p.w1.rows, p.w1.cols);
    g.b1.assign(p.b1.size(), 0.0);
    g.w2 = Matrix(p.w2.rows, p.w2.cols);
    g.b2.assign(p.b2.size(), 0.0);
    return g;
}

// Loss and gradient over the rows listed in `batch`.
double batch_loss(const FfnnParams& p, const Matrix& x, std::span<const std::size_t> classOf,
                  std::span<const std::size_t> batch, double l2, FfnnParams* grad) {
    const std::size_t nIn = p.inputs();
    const std::size_t nHid = p.hidden();
    const std::size_t nOut = p.classes();
    const double n = static_cast<double>(batch.size());

    if (grad) {
        *grad = zeros_like(p);
    }
    std::vector<double> z1(nHid), h(nHid), z2(nOut), dh(nHid);
    double loss = 0.0;
    for (std::size_t r : batch) {
        const auto xr = x.row(r);
        for (std::size_t u = 0; u < nHid; ++u) {
            const auto wu = p.w1.row(u);
            z1[u] = std::inner_product(wu.begin(), wu.end(), xr.begin(), p.b1[u]);
            h[u] = z1[u] > 0.0 ? z1[u] : 0.0;
        }
        for (std::size_t k = 0; k < nOut; ++k) {
            const auto wk = p.w2.row(k);
            z2[k] = std::inner_product(wk.begin(), wk.end(), h.begin(), p.b2[k]);
        }
        softmax_inplace(z2);
        const std::size_t target = classOf[r];
        loss -= std::log(std::max(z2[target], std::numeric_limits<double>::min()));
        if (!grad) {
            continue;
        }
        // dL/dz2 = (p - onehot) / n
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t k = 0; k < nOut; ++k) {
            const double dz = (z2[k] - (k == target ? 1.0 : 0.0)) / n;
            grad->b2[k] += dz;
            auto gk = grad->w2.row(k);
            const auto wk = p.w2.row(k);
            for (std::size_t u = 0; u < nHid; ++u) {
                gk[u] += dz * h[u];
                dh[u] += dz * wk[u];
            }
        }
        for (std::size_t u = 0; u < nHid; ++u) {
            if (z1[u] <= 0.0) {
                continue;
            }
            const double dz = dh[u];
            grad->b1[u] += dz;
            auto gu = grad->w1.row(u);
            for (std::size_t j = 0; j < nIn; ++j) {
                gu[j] += dz * xr[j];
            }
        }
    }
    loss /= n;

    double sq = 0.0;
    for (double w : p.w1.data) {
        sq += w * w;
    }
    for (double w : p.w2.data) {
        sq += w * w;
    }
    loss += 0.5 * l2 * sq / n;
    if (grad) {
        for (std::size_t i = 0; i < p.w1.data.size(); ++i) {
            grad->w1.data[i] += l2 * p.w1.data[i] / n;
        }
        for (std::size_t i = 0; i < p.w2.data.size(); ++i) {
            grad->w2.data[i] += l2 * p.w2.data[i] / n;
        }
    }
    return loss;
}

}  // namespace

FfnnParams init_ffnn(std::size_t inputs, std::size_t hidden, std::size_t classes,
                     std::uint64_t seed) {
    Rng rng(seed);
    auto fill = [&](std::span<double> values, double bound) {
        for (double& v : values) {
            v = (2.0 * uniform01(rng) - 1.0) * bound;
        }
    };
    FfnnParams p;
    p.w1 = Matrix(hidden, inputs);
    p.b1.assign(hidden, 0.0);
    p.w2 = Matrix(classes, hidden);
    p.b2.assign(classes, 0.0);
    const double bound1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
    const double bound2 = std::sqrt(6.0 / static_cast<double>(hidden + classes));
    fill(p.w1.data, bound1);
    fill(p.b1, bound1);
    fill(p.w2.data, bound2);
    fill(p.b2, bound2);
    return p;
}

double ffnn_loss(const FfnnParams& p, const Matrix& x, std::span<const std::size_t> classOf,
                 double l2, FfnnParams* grad) {
    std::vector<std::size_t> all(x.rows);
    std::iota(all.begin(), all.end(), 0);
    return batch_loss(p, x, classOf, all, l2, grad);
}

std::vector<double> flatten(const FfnnParams& p) {
    std::vector<double> flat;
    flat.reserve(p.parameter_count());
    flat.insert(flat.end(), p.w1.data.begin(), p.w1.data.end());
    flat.insert(flat.end(), p.b1.begin(), p.b1.end());
    flat.insert(flat.end(), p.w2.data.begin(), p.w2.data.end());
    flat.insert(flat.end(), p.b2.begin(), p.b2.end());
    return flat;
}

void unflatten(std::span<const double> flat, FfnnParams& p) {
    auto it = flat.begin();
    auto take = [&](std::span<double> dst) {
        std::copy_n(it, dst.size(), dst.begin());
        it += static_cast<std::ptrdiff_t>(dst.size());
    };
    take(p.w1.data);
    take(p.b1);
    take(p.w2.data);
    take(p.b2);
}

FfnnFit fit_ffnn(const Matrix& x, std::span<const std::size_t> classOf, std::size_t numClasses,
                 const FfnnConfig& config) {
    FfnnFit fit;
    fit.params = init_ffnn(x.cols, config.hiddenUnits, numClasses, derive_seed(config.seed, "init"));
    Rng rng(derive_seed(config.seed, "batches"));

    auto flat = flatten(fit.params);
    std::vector<double> m(flat.size(), 0.0), v(flat.size(), 0.0);
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double epsilon = 1e-8;
    std::size_t step = 0;

    std::vector<std::size_t> order(x.rows);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch = std::clamp<std::size_t>(config.batchSize, 1, std::max<std::size_t>(x.rows, 1));
    double bestLoss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    FfnnParams grad;

    for (std::size_t epoch = 0; epoch < config.maxIterations; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        double epochLoss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            std::span<const std::size_t> rows(order.data() + start, end - start);
            epochLoss += batch_loss(fit.params, x, classOf, rows, config.l2, &grad) *
                         static_cast<double>(rows.size());
            const auto g = flatten(grad);
            ++step;
            if (config.optimizer == Optimizer::Adam) {
                const double lrT = config.learningRate *
                                   std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
                                   (1.0 - std::pow(beta1, static_cast<double>(step)));
                for (std::size_t i = 0; i < flat.size(); ++i) {
                    m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                    v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                    flat[i] -= lrT * m[i] / (std::sqrt(v[i]) + epsilon);
                }
            } else {
                for (std::size_t i = 0; i < flat.size(); ++i) {
                    flat[i] -= config.learningRate * g[i];
                }
            }
            unflatten(flat, fit.params);
        }
        epochLoss /= static_cast<double>(x.rows);
        fit.lossCurve.push_back(epochLoss);
        fit.epochs = epoch + 1;

        if (epochLoss > bestLoss - config.tolerance) {
            ++stale;
        } else {
            stale = 0;
        }
        bestLoss = std::min(bestLoss, epochLoss);
        if (stale >= config.patience) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

void ffnn_probabilities(const FfnnParams& p, std::span<const double> x, std::span<double> out) {
    std::vector<double> h(p.hidden());
    for (std::size_t u = 0; u < h.size(); ++u) {
        const auto wu = p.w1.row(u);
        const double z = std::inner_product(wu.begin(), wu.end(), x.begin(), p.b1[u]);
        h[u] = z > 0.0 ? z : 0.0;
    }
    for (std::size_t k = 0; k < p.classes(); ++k) {
        const auto wk = p.w2.row(k);
        out[k] = std::inner_product(wk.begin(), wk.end(), h.begin(), p.b2[k]);
    }
    softmax_inplace(out.first(p.classes()));
}

double gradient_check(const FfnnParams& p, const Matrix& x, std::span<const std::size_t> classOf,
                      double l2, const GradientFn& analytic, double h) {
    FfnnParams grad = zeros_like(p);
    analytic(p, x, classOf, l2, grad);
    const auto analyticFlat = flatten(grad);

    FfnnParams probe = p;
    auto flat = flatten(p);
    double worst = 0.0;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double saved = flat[i];
        flat[i] = saved + h;
        unflatten(flat, probe);
        const double up = ffnn_loss(probe, x, classOf, l2, nullptr);
        flat[i] = saved - h;
        unflatten(flat, probe);
        const double down = ffnn_loss(probe, x, classOf, l2, nullptr);
        flat[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double a = analyticFlat[i];
        const double denom = std::max(std::fabs(a) + std::fabs(numeric), 1e-6);
        worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
    return worst;
}

}  // namespace ml

}  // namespace advattrib
