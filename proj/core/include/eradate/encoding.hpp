#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "eradate/container.hpp"
#include "eradate/descriptor_set.hpp"

namespace eradate {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Copies a descriptor set into a dense double matrix (one row per descriptor).
Matrix to_matrix(const DescriptorSet& set);

struct KmeansModel {
  Matrix centers;  // K x D
  double inertia = 0.0;
  // Objective after every assignment step, in order.
  std::vector<double> objective_trace;
  int iterations = 0;

  int k() const { return static_cast<int>(centers.rows()); }
  int dim() const { return static_cast<int>(centers.cols()); }
};

// k-means++ seeding followed by Lloyd iterations. Stops when assignments
// stop changing, the relative objective decrease drops below `tol`, or after
// `max_iter` iterations. Clusters that empty out are re-seeded with the
// point farthest from its center.
KmeansModel kmeans_fit(const Matrix& data, int k, std::uint64_t seed,
                       int max_iter = 100, double tol = 1e-6);

// Index of the nearest center for each row; ties go to the lower index.
std::vector<int> kmeans_assign(const KmeansModel& model, const Matrix& data);
double kmeans_objective(const KmeansModel& model, const Matrix& data);

// `weighted` is the standard mixture posterior; `printed` drops the mixture
// weights and determinant factors and keeps only the Mahalanobis terms.
enum class PosteriorMode { kWeighted, kPrinted };
std::string_view posterior_mode_name(PosteriorMode m);
PosteriorMode parse_posterior_mode(std::string_view s);

struct GmmModel {
  Vector weights;     // K
  Matrix means;       // K x D
  Matrix variances;   // K x D, diagonal covariances
  double variance_floor = 0.0;
  // Mean log-likelihood per point after every E step.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;

  int k() const { return static_cast<int>(means.rows()); }
  int dim() const { return static_cast<int>(means.cols()); }
};

// EM for a diagonal-covariance mixture, initialized from kmeans_fit.
// A non-positive `variance_floor` selects 1e-4 times the mean per-dimension
// data variance. Throws Numerical if the log-likelihood ever decreases.
GmmModel gmm_fit(const Matrix& data, int k, std::uint64_t seed,
                 int max_iter = 100, double tol = 1e-6,
                 double variance_floor = -1.0);

// N x K responsibilities. Computed in log space; entries below 1e-12 are
// zeroed and each row renormalized.
Matrix gmm_posteriors(const GmmModel& model, const Matrix& data,
                      PosteriorMode mode = PosteriorMode::kWeighted);
// Mean per-point log-likelihood.
double gmm_log_likelihood(const GmmModel& model, const Matrix& data);

enum class EncodingKind : std::uint8_t { kBow, kFv, kIfv, kRcc, kDunnet };
std::string_view encoding_kind_name(EncodingKind k);

struct EncodedVector {
  std::vector<double> values;
  EncodingKind kind = EncodingKind::kBow;

  int dim() const { return static_cast<int>(values.size()); }
};

// L1-normalized hard-assignment histogram; an empty set gives zeros.
EncodedVector bow_encode(const DescriptorSet& desc, const KmeansModel& model);

// Mean and variance deviation vectors: all u_k (k = 0..K-1, D values each)
// followed by all v_k. Dimension 2*K*D.
EncodedVector fisher_vector(const DescriptorSet& desc, const GmmModel& gmm,
                            PosteriorMode mode = PosteriorMode::kWeighted);
EncodedVector fisher_vector(const Matrix& desc, const GmmModel& gmm,
                            PosteriorMode mode = PosteriorMode::kWeighted);

// Signed square root then L2 normalization; zero stays zero.
EncodedVector ifv_normalize(const EncodedVector& v);
void power_l2_normalize(std::vector<double>& v);

// Container layouts.
//   kmeans: rows K, cols D, payload centers, meta [inertia, iterations]
//   gmm:    rows K, cols 1 + 2D, payload [w, mean..., var...],
//           meta [variance_floor, iterations]
Container to_container(const KmeansModel& m);
KmeansModel kmeans_from_container(const Container& c);
Container to_container(const GmmModel& m);
GmmModel gmm_from_container(const Container& c);

void save_kmeans(const KmeansModel& m, const std::filesystem::path& path);
KmeansModel load_kmeans(const std::filesystem::path& path);
void save_gmm(const GmmModel& m, const std::filesystem::path& path);
GmmModel load_gmm(const std::filesystem::path& path);

}  // namespace eradate
