#include <algorithm>
#include <cmath>
#include <numbers>

#include "eradate/encoding.hpp"
#include "eradate/error.hpp"

namespace eradate {

namespace {

constexpr Eigen::Index kChunk = 2048;
constexpr double kPosteriorFloor = 1e-12;
constexpr double kMinWeight = 1e-10;
constexpr double kFloorFactor = 1e-4;

// Per-component log joint terms for a block of rows. In weighted mode this
// is log w_k + log N(x | mu_k, Psi_k); printed mode keeps only the
// Mahalanobis term.
void log_terms(const GmmModel& m, const Matrix& x, PosteriorMode mode,
               Matrix& out) {
  const Matrix precision = m.variances.cwiseInverse();
  const Matrix scaled_means = m.means.cwiseProduct(precision);
  Vector constant(m.k());
  for (int k = 0; k < m.k(); ++k) {
    double c = -0.5 * m.means.row(k).dot(scaled_means.row(k));
    if (mode == PosteriorMode::kWeighted) {
      double log_det = 0.0;
      for (int j = 0; j < m.dim(); ++j) log_det += std::log(m.variances(k, j));
      c += std::log(m.weights(k)) -
           0.5 * (log_det + m.dim() * std::log(2.0 * std::numbers::pi));
    }
    constant(k) = c;
  }
  out.noalias() = x * scaled_means.transpose();
  out.noalias() -= 0.5 * x.cwiseAbs2() * precision.transpose();
  out.rowwise() += constant.transpose();
}

// Normalizes log terms into posteriors in place; returns the sum over rows
// of log sum_k exp(term).
double normalize_rows(Matrix& t) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double mx = t.row(i).maxCoeff();
    double s = 0.0;
    for (Eigen::Index k = 0; k < t.cols(); ++k) {
      const double e = std::exp(t(i, k) - mx);
      t(i, k) = e;
      s += e;
    }
    total += mx + std::log(s);
    double kept = 0.0;
    for (Eigen::Index k = 0; k < t.cols(); ++k) {
      double q = t(i, k) / s;
      if (q < kPosteriorFloor) q = 0.0;
      t(i, k) = q;
      kept += q;
    }
    t.row(i) /= kept;
  }
  return total;
}

void check_model(const GmmModel& m, const Matrix& data) {
  if (data.cols() != m.dim()) {
    throw Error(ErrorCode::kDimMismatch, "data dim != GMM dim");
  }
}

}  // namespace

std::string_view posterior_mode_name(PosteriorMode m) {
  return m == PosteriorMode::kWeighted ? "weighted" : "printed";
}

PosteriorMode parse_posterior_mode(std::string_view s) {
  if (s == "weighted") return PosteriorMode::kWeighted;
  if (s == "printed") return PosteriorMode::kPrinted;
  throw Error(ErrorCode::kInvalidArgument,
              "posterior must be weighted or printed, got " + std::string(s));
}

Matrix gmm_posteriors(const GmmModel& model, const Matrix& data,
                      PosteriorMode mode) {
  check_model(model, data);
  Matrix q(data.rows(), model.k());
  Matrix block;
  for (Eigen::Index start = 0; start < data.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, data.rows() - start);
    log_terms(model, data.middleRows(start, len), mode, block);
    normalize_rows(block);
    q.middleRows(start, len) = block;
  }
  return q;
}

double gmm_log_likelihood(const GmmModel& model, const Matrix& data) {
  check_model(model, data);
  Matrix block;
  double total = 0.0;
  for (Eigen::Index start = 0; start < data.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, data.rows() - start);
    log_terms(model, data.middleRows(start, len), PosteriorMode::kWeighted, block);
    total += normalize_rows(block);
  }
  return total / static_cast<double>(data.rows());
}

GmmModel gmm_fit(const Matrix& data, int k, std::uint64_t seed, int max_iter,
                 double tol, double variance_floor) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n < 2 * static_cast<Eigen::Index>(k)) {
    throw Error(ErrorCode::kTooFewPoints,
                std::to_string(n) + " points for a " + std::to_string(k) +
                    "-component mixture");
  }
  if (!data.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "GMM data not finite");
  }
  const Vector mean = data.colwise().mean().transpose();
  const Vector global_var =
      (data.rowwise() - mean.transpose()).cwiseAbs2().colwise().mean().transpose();
  if (global_var.maxCoeff() <= 0.0) {
    throw Error(ErrorCode::kDegenerateData, "zero variance in every dimension");
  }

  GmmModel m;
  m.variance_floor =
      variance_floor > 0.0 ? variance_floor : kFloorFactor * global_var.mean();

  // Initialization from hard k-means clusters.
  const KmeansModel km = kmeans_fit(data, k, seed, 20, 1e-4);
  const auto assign = kmeans_assign(km, data);
  m.weights = Vector::Zero(k);
  m.means = km.centers;
  m.variances = Matrix::Zero(k, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = assign[static_cast<std::size_t>(i)];
    m.weights(c) += 1.0;
    m.variances.row(c) += (data.row(i) - m.means.row(c)).cwiseAbs2();
  }
  for (int c = 0; c < k; ++c) {
    if (m.weights(c) > 0.0) {
      m.variances.row(c) /= m.weights(c);
    } else {
      m.variances.row(c) = global_var.transpose();
    }
    m.weights(c) = std::max(m.weights(c) / static_cast<double>(n), kMinWeight);
  }
  m.weights /= m.weights.sum();
  m.variances = m.variances.cwiseMax(m.variance_floor);

  Matrix block;
  Vector nk(k);
  Matrix s1(k, d);
  Matrix s2(k, d);
  for (int iter = 0; iter < std::max(1, max_iter); ++iter) {
    // E step with sufficient statistics.
    nk.setZero();
    s1.setZero();
    s2.setZero();
    double ll = 0.0;
    for (Eigen::Index start = 0; start < n; start += kChunk) {
      const Eigen::Index len = std::min(kChunk, n - start);
      const auto x = data.middleRows(start, len);
      log_terms(m, x, PosteriorMode::kWeighted, block);
      ll += normalize_rows(block);
      nk += block.colwise().sum().transpose();
      s1.noalias() += block.transpose() * x;
      s2.noalias() += block.transpose() * x.cwiseAbs2();
    }
    ll /= static_cast<double>(n);
    if (!std::isfinite(ll)) {
      throw Error(ErrorCode::kNumerical, "GMM log-likelihood not finite");
    }
    if (!m.log_likelihood_trace.empty()) {
      const double prev = m.log_likelihood_trace.back();
      const double scale = std::max(std::abs(prev), 1e-12);
      if (ll - prev < -1e-9 * scale) {
        throw Error(ErrorCode::kNumerical, "EM log-likelihood decreased");
      }
      m.log_likelihood_trace.push_back(ll);
      m.iterations = iter;
      if (ll - prev < tol * scale) break;
    } else {
      m.log_likelihood_trace.push_back(ll);
    }

    // M step.
    for (int c = 0; c < k; ++c) {
      if (nk(c) > 0.0) {
        const Eigen::RowVectorXd mu = s1.row(c) / nk(c);
        m.means.row(c) = mu;
        m.variances.row(c) =
            (s2.row(c) / nk(c) - mu.cwiseAbs2()).cwiseMax(m.variance_floor);
      }
      m.weights(c) = std::max(nk(c) / static_cast<double>(n), kMinWeight);
    }
    m.weights /= m.weights.sum();
    m.iterations = iter + 1;
  }
  return m;
}

Container to_container(const GmmModel& m) {
  Container c;
  c.kind = ModelKind::kGmm;
  c.rows = static_cast<std::uint32_t>(m.k());
  c.cols = static_cast<std::uint32_t>(1 + 2 * m.dim());
  c.meta = {m.variance_floor, static_cast<double>(m.iterations)};
  c.payload.reserve(static_cast<std::size_t>(c.rows) * c.cols);
  for (int k = 0; k < m.k(); ++k) {
    c.payload.push_back(m.weights(k));
    for (int j = 0; j < m.dim(); ++j) c.payload.push_back(m.means(k, j));
    for (int j = 0; j < m.dim(); ++j) c.payload.push_back(m.variances(k, j));
  }
  return c;
}

GmmModel gmm_from_container(const Container& c) {
  if (c.kind != ModelKind::kGmm || c.rows == 0 || c.cols < 3 ||
      c.cols % 2 == 0 || c.meta.size() < 2) {
    throw Error(ErrorCode::kDecodeError, "not a GMM container");
  }
  const int k = static_cast<int>(c.rows);
  const int d = static_cast<int>((c.cols - 1) / 2);
  GmmModel m;
  m.weights.resize(k);
  m.means.resize(k, d);
  m.variances.resize(k, d);
  for (int r = 0; r < k; ++r) {
    const double* row = c.payload.data() + static_cast<std::size_t>(r) * c.cols;
    m.weights(r) = row[0];
    for (int j = 0; j < d; ++j) m.means(r, j) = row[1 + j];
    for (int j = 0; j < d; ++j) m.variances(r, j) = row[1 + d + j];
  }
  if (!(m.variances.array() > 0.0).all() || !(m.weights.array() > 0.0).all()) {
    throw Error(ErrorCode::kDecodeError, "GMM container has invalid parameters");
  }
  m.variance_floor = c.meta[0];
  m.iterations = static_cast<int>(c.meta[1]);
  return m;
}

void save_gmm(const GmmModel& m, const std::filesystem::path& path) {
  save_container(to_container(m), path);
}

GmmModel load_gmm(const std::filesystem::path& path) {
  return gmm_from_container(load_container(path, ModelKind::kGmm));
}

}  // namespace eradate
