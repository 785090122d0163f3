#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "eradate/container.hpp"
#include "eradate/encoding.hpp"

namespace eradate {

inline constexpr double kChi2Epsilon = 1e-10;

enum class KernelKind : std::uint8_t { kChi2Exp = 0, kLinear = 1 };
std::string_view kernel_kind_name(KernelKind k);
KernelKind parse_kernel_kind(std::string_view s);

// Pairwise chi-square distances sum_d (x_d - y_d)^2 / (x_d + y_d + eps);
// result is rows(y) x rows(x). Throws NegativeFeature on negative input.
Matrix chi2_distances(const Matrix& x, const Matrix& y);
// 1 / mean chi-square distance over the pairs i < j of x.
double chi2_auto_gamma(const Matrix& x);
// exp(-gamma * chi2). A non-positive gamma selects chi2_auto_gamma(x).
Matrix chi2_kernel(const Matrix& x, const Matrix& y, double gamma);
Matrix linear_kernel(const Matrix& x, const Matrix& y);
// Entrywise weighted mean; empty weights mean uniform.
Matrix combine_kernels(const std::vector<Matrix>& kernels,
                       std::vector<double> weights = {});

struct SmoOptions {
  double tolerance = 1e-3;
  // 0 selects max(100000, 100 * N).
  long max_iterations = 0;
};

struct SvmModel {
  std::vector<double> alphas;  // one per training point
  std::vector<int> labels;     // +1 / -1
  double bias = 0.0;           // f(x) = sum_i alpha_i y_i K(x_i, x) + bias
  double C = 1.0;
  // Dual objective sum(alpha) - 1/2 alpha^T Q alpha after every sweep of N
  // working-set updates and at termination.
  std::vector<double> dual_trace;
  long iterations = 0;
  double kkt_gap = 0.0;

  std::vector<int> support() const;
};

// Soft-margin dual by SMO with second-order working-set selection on a
// precomputed N x N kernel. Throws SingleClass if only one label occurs and
// Numerical if the dual objective ever decreases.
SvmModel svm_train_binary(const Matrix& kernel, const std::vector<int>& labels,
                          double C, const SmoOptions& options = {});
// Decision values for M test points; `kernel` is M x N against the
// training points.
std::vector<double> svm_decision(const SvmModel& model, const Matrix& kernel);

struct OvaModel {
  std::vector<int> classes;       // class ids, ascending
  std::vector<SvmModel> models;   // one per class, class vs rest

  int num_classes() const { return static_cast<int>(classes.size()); }
};

OvaModel ova_train(const Matrix& kernel, const std::vector<int>& labels, double C,
                   const SmoOptions& options = {});
// M x num_classes decision values.
Matrix ova_decision(const OvaModel& model, const Matrix& kernel);
// Class id with the largest decision value, lowest position on ties.
std::vector<int> ova_predict(const OvaModel& model, const Matrix& kernel);
std::vector<int> argmax_rows(const Matrix& decision, const std::vector<int>& classes);

inline const std::vector<double>& default_c_grid() {
  static const std::vector<double> grid{0.1, 1.0, 10.0, 100.0};
  return grid;
}

// One feature's share of a combined kernel.
struct KernelBlock {
  KernelKind kind = KernelKind::kChi2Exp;
  double gamma = 0.0;  // resolved value, chi2 only
  int dim = 0;
  double weight = 1.0;
};

// Deployable one-vs-all classifier: kernel recipe, support-vector feature
// rows (concatenated blocks) and per-class expansion coefficients.
struct FeatureClassifier {
  std::vector<KernelBlock> blocks;
  std::vector<int> classes;
  Matrix support;  // S x sum(dim)
  Matrix coef;     // num_classes x S, alpha * y
  std::vector<double> bias;
  double C = 1.0;

  Matrix decision(const std::vector<Matrix>& features) const;
  std::vector<int> predict(const std::vector<Matrix>& features) const;
};

// Kernel of the combined features for training: resolves auto gammas in
// `blocks` from the training features.
Matrix training_kernel(std::vector<KernelBlock>& blocks,
                       const std::vector<Matrix>& features);
Matrix cross_kernel(const std::vector<KernelBlock>& blocks,
                    const std::vector<Matrix>& train,
                    const std::vector<Matrix>& test);

FeatureClassifier make_classifier(const std::vector<KernelBlock>& blocks,
                                  const std::vector<Matrix>& train_features,
                                  const OvaModel& ova, double C);

struct CSelection {
  double C = 1.0;
  std::vector<double> grid;
  std::vector<double> validation_accuracy;
};

// Trains with every C on the grid and keeps the best validation accuracy
// (smallest C on ties). Without validation rows the first grid value is used.
CSelection select_c(const Matrix& train_kernel, const std::vector<int>& train_labels,
                    const Matrix& val_kernel, const std::vector<int>& val_labels,
                    const std::vector<double>& grid = default_c_grid());

// svm:  rows N, cols 2 [alpha, y], meta [bias, C]
// ova:  rows S, cols sum(dim) + classes, payload rows are support features
//       followed by each class coefficient; meta [C, nc, classes..., bias...,
//       nblocks, (kind, gamma, dim, weight) per block]
Container to_container(const SvmModel& m);
SvmModel svm_from_container(const Container& c);
Container to_container(const FeatureClassifier& c);
FeatureClassifier classifier_from_container(const Container& c);
void save_classifier(const FeatureClassifier& c, const std::filesystem::path& path);
FeatureClassifier load_classifier(const std::filesystem::path& path);

}  // namespace eradate
