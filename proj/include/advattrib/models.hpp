#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "advattrib/corpus.hpp"
#include "advattrib/feature_mask.hpp"
#include "advattrib/scaling.hpp"

namespace advattrib {

enum class ModelKind { Lsvm, RbfSvm, Ffnn };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

struct SplitSpec {
    double trainFrac = 0.9;
    double evalFrac = 0.0;
    double validFrac = 0.0;
    double testFrac = 0.1;
    std::uint64_t seed = 0;

    static SplitSpec svm(std::uint64_t seed) { return {0.9, 0.0, 0.0, 0.1, seed}; }
    static SplitSpec ffnn(std::uint64_t seed) { return {0.8, 0.0, 0.1, 0.1, seed}; }
    static SplitSpec for_kind(ModelKind kind, std::uint64_t seed);
};

struct DatasetSplit {
    std::vector<LabeledVector> train;
    std::vector<LabeledVector> eval;
    std::vector<LabeledVector> valid;
    std::vector<LabeledVector> test;
};

/// Disjoint, exhaustive, deterministic partition. Held-out rows are drawn
/// round-robin across authors so no author loses more than its share.
DatasetSplit split_dataset(std::span<const LabeledVector> vectors, const SplitSpec& spec);

struct SvmConfig {
    double c = 1.0;
    /// RBF width; empty means "scale": 1 / (activeFeatures * Var(trainMatrix)).
    std::optional<double> gamma;
    /// Epoch cap for the linear solver; the kernel solver gets maxPasses * n
    /// pair updates.
    std::size_t maxPasses = 1000;
    double tolerance = 1e-4;
    std::uint64_t seed = 0;
};

enum class Optimizer { Adam, Sgd };

struct FfnnConfig {
    std::size_t hiddenUnits = 100;
    /// Epoch cap.
    std::size_t maxIterations = 2000;
    double learningRate = 1e-3;
    std::size_t batchSize = 16;
    double l2 = 1e-4;
    /// Converged once the epoch loss improves by less than this for
    /// `patience` consecutive epochs.
    double tolerance = 1e-4;
    std::size_t patience = 10;
    Optimizer optimizer = Optimizer::Adam;
    std::uint64_t seed = 0;
};

struct TrainConfig {
    SvmConfig svm;
    FfnnConfig ffnn;
};

/// Dense row-major matrix used by the classifier cores.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// One-vs-rest linear SVM: class k scores w_k . x + b_k.
struct LinearSvmParams {
    Matrix weights;  // classes x features
    std::vector<double> bias;
};

/// One-vs-rest kernel SVM sharing one support set.
struct RbfSvmParams {
    double gamma = 1.0;
    Matrix supportVectors;  // rows x features
    Matrix dualCoef;        // classes x rows, alpha_i * y_i
    std::vector<double> bias;
};

/// Single hidden ReLU layer, softmax output.
struct FfnnParams {
    Matrix w1;  // hidden x inputs
    std::vector<double> b1;
    Matrix w2;  // classes x hidden
    std::vector<double> b2;

    std::size_t inputs() const { return w1.cols; }
    std::size_t hidden() const { return w1.rows; }
    std::size_t classes() const { return w2.rows; }
    std::size_t parameter_count() const;
};

using ModelParams = std::variant<LinearSvmParams, RbfSvmParams, FfnnParams>;

struct TrainedModel {
    ModelKind kind = ModelKind::Lsvm;
    TrainConfig config;
    std::vector<AuthorId> labels;  // ascending
    Pipeline pipeline;
    FeatureMask mask;
    ModelParams params;
    bool converged = true;
    std::size_t iterations = 0;
};

TrainedModel train(ModelKind kind, const TrainConfig& config,
                   std::span<const LabeledVector> trainSet, const FeatureMask& mask,
                   const PipelineSpec& pipeline);

/// Trains against an already fitted pipeline, so several masks can share one.
TrainedModel train(ModelKind kind, const TrainConfig& config,
                   std::span<const LabeledVector> trainSet, const FeatureMask& mask,
                   const Pipeline& pipeline);

/// Per-label scores in `model.labels` order: decision values for the SVMs,
/// softmax probabilities for the network.
std::vector<double> decision_values(const TrainedModel& model, const FeatureVector& v,
                                    Role role = Role::Evaluation);

/// Score vector for an already transformed and masked input.
std::vector<double> decision_values_transformed(const TrainedModel& model,
                                                const FeatureVector& transformed);

AuthorId predict(const TrainedModel& model, const FeatureVector& v, Role role = Role::Evaluation);

/// Raw-count input of arbitrary length; throws ShapeError unless it has 95 entries.
AuthorId predict(const TrainedModel& model, std::span<const double> rawCounts);

double evaluate_accuracy(const TrainedModel& model, std::span<const LabeledVector> labeledSet,
                         Role role = Role::Evaluation);

/// Index of the largest score; ties go to the lowest index.
std::size_t argmax(std::span<const double> scores);

/// Best score minus runner-up.
double top_two_margin(std::span<const double> scores);

namespace ml {

LinearSvmParams fit_linear_svm(const Matrix& x, std::span<const std::size_t> classOf,
                               std::size_t numClasses, const SvmConfig& config);
void linear_svm_scores(const LinearSvmParams& p, std::span<const double> x, std::span<double> out);

double scale_gamma(const Matrix& x);
double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma);
Matrix rbf_kernel_matrix(const Matrix& x, double gamma);
RbfSvmParams fit_rbf_svm(const Matrix& x, std::span<const std::size_t> classOf,
                         std::size_t numClasses, const SvmConfig& config);
void rbf_svm_scores(const RbfSvmParams& p, std::span<const double> x, std::span<double> out);

struct FfnnFit {
    FfnnParams params;
    bool converged = false;
    std::size_t epochs = 0;
    std::vector<double> lossCurve;  // mean mini-batch loss per epoch
};

FfnnParams init_ffnn(std::size_t inputs, std::size_t hidden, std::size_t classes,
                     std::uint64_t seed);

/// Mean cross-entropy plus l2/(2n) * ||W||^2 over the rows; fills `grad`
/// (same shapes as `p`) when non-null.
double ffnn_loss(const FfnnParams& p, const Matrix& x, std::span<const std::size_t> classOf,
                 double l2, FfnnParams* grad);

FfnnFit fit_ffnn(const Matrix& x, std::span<const std::size_t> classOf, std::size_t numClasses,
                 const FfnnConfig& config);
void ffnn_probabilities(const FfnnParams& p, std::span<const double> x, std::span<double> out);

/// Flattened parameter access in the order w1, b1, w2, b2.
std::vector<double> flatten(const FfnnParams& p);
void unflatten(std::span<const double> flat, FfnnParams& p);

using GradientFn = std::function<void(const FfnnParams&, const Matrix&,
                                      std::span<const std::size_t>, double, FfnnParams&)>;

/// Largest |analytic - numeric| / max(|analytic| + |numeric|, 1e-6) over all
/// parameters, numeric gradients by central differences with step h.
double gradient_check(const FfnnParams& p, const Matrix& x, std::span<const std::size_t> classOf,
                      double l2, const GradientFn& analytic, double h = 1e-5);

}  // namespace ml

/// Builds a network from `config` (seeded init) and checks backprop against
/// finite differences on the given toy set.
double gradient_check(const FfnnConfig& config, std::span<const LabeledVector> toySet);

}  // namespace advattrib
