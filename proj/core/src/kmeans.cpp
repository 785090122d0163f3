#include <algorithm>
#include <cmath>
#include <limits>

#include "eradate/encoding.hpp"
#include "eradate/error.hpp"
#include "eradate/rng.hpp"

namespace eradate {

namespace {

constexpr Eigen::Index kChunk = 2048;

// Nearest center per row via the ||x||^2 - 2 x.c + ||c||^2 expansion.
void nearest_centers(const Matrix& data, const Matrix& centers,
                     std::vector<int>& index) {
  const Eigen::Index n = data.rows();
  index.resize(static_cast<std::size_t>(n));
  const Vector cc = centers.rowwise().squaredNorm();
  Matrix g;
  for (Eigen::Index start = 0; start < n; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, n - start);
    g.noalias() = data.middleRows(start, len) * centers.transpose();
    for (Eigen::Index i = 0; i < len; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const double d = cc(c) - 2.0 * g(i, c);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(c);
        }
      }
      index[static_cast<std::size_t>(start + i)] = best;
    }
  }
}

// Exact squared distances of every row to its assigned center.
double assigned_distances(const Matrix& data, const Matrix& centers,
                          const std::vector<int>& index,
                          std::vector<double>& dist) {
  dist.resize(index.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const double d =
        (data.row(i) - centers.row(index[static_cast<std::size_t>(i)])).squaredNorm();
    dist[static_cast<std::size_t>(i)] = d;
    total += d;
  }
  return total;
}

Matrix seed_plus_plus(const Matrix& data, int k, Rng& rng) {
  const Eigen::Index n = data.rows();
  Matrix centers(k, data.cols());
  auto first = rng.uniform_int(0, static_cast<std::int64_t>(n) - 1);
  centers.row(0) = data.row(static_cast<Eigen::Index>(first));
  Vector d2 = (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2(i);
        if (acc > target && d2(i) > 0.0) {
          pick = i;
          break;
        }
      }
      while (d2(pick) == 0.0 && pick > 0) --pick;
    } else {
      pick = static_cast<Eigen::Index>(
          rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    }
    centers.row(c) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

}  // namespace

Matrix to_matrix(const DescriptorSet& set) {
  Matrix m(static_cast<Eigen::Index>(set.count()), set.dim());
  const auto& v = set.values();
  for (std::size_t i = 0; i < v.size(); ++i) m.data()[i] = v[i];
  return m;
}

KmeansModel kmeans_fit(const Matrix& data, int k, std::uint64_t seed,
                       int max_iter, double tol) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (data.rows() < k) {
    throw Error(ErrorCode::kTooFewPoints,
                std::to_string(data.rows()) + " points for k=" + std::to_string(k));
  }
  if (!data.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "k-means data not finite");
  }
  Rng rng(seed);
  KmeansModel model;
  model.centers = seed_plus_plus(data, k, rng);

  const Eigen::Index n = data.rows();
  std::vector<int> index;
  std::vector<int> previous;
  std::vector<double> dist;
  for (int iter = 0; iter < std::max(1, max_iter); ++iter) {
    nearest_centers(data, model.centers, index);
    const double objective = assigned_distances(data, model.centers, index, dist);
    model.objective_trace.push_back(objective);
    model.iterations = iter + 1;
    if (index == previous) break;

    // Mean update with empty-cluster re-seeding.
    Matrix sums = Matrix::Zero(k, data.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = index[static_cast<std::size_t>(i)];
      sums.row(c) += data.row(i);
      ++counts[static_cast<std::size_t>(c)];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        model.centers.row(c) = sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
        continue;
      }
      const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
      model.centers.row(c) = data.row(far);
      dist[static_cast<std::size_t>(far)] = -1.0;
    }

    const std::size_t t = model.objective_trace.size();
    const bool small_gain =
        t >= 2 && model.objective_trace[t - 2] - objective <=
                      tol * std::max(model.objective_trace[t - 2],
                                     std::numeric_limits<double>::min());
    previous = index;
    if (small_gain) break;
  }
  model.inertia = kmeans_objective(model, data);
  return model;
}

std::vector<int> kmeans_assign(const KmeansModel& model, const Matrix& data) {
  if (data.cols() != model.dim()) {
    throw Error(ErrorCode::kDimMismatch, "data dim != k-means dim");
  }
  std::vector<int> index;
  nearest_centers(data, model.centers, index);
  return index;
}

double kmeans_objective(const KmeansModel& model, const Matrix& data) {
  std::vector<double> dist;
  return assigned_distances(data, model.centers, kmeans_assign(model, data), dist);
}

Container to_container(const KmeansModel& m) {
  Container c;
  c.kind = ModelKind::kKmeans;
  c.rows = static_cast<std::uint32_t>(m.k());
  c.cols = static_cast<std::uint32_t>(m.dim());
  c.meta = {m.inertia, static_cast<double>(m.iterations)};
  c.payload.assign(m.centers.data(), m.centers.data() + m.centers.size());
  return c;
}

KmeansModel kmeans_from_container(const Container& c) {
  if (c.kind != ModelKind::kKmeans || c.rows == 0 || c.meta.size() < 2) {
    throw Error(ErrorCode::kDecodeError, "not a k-means container");
  }
  KmeansModel m;
  m.centers = Eigen::Map<const Matrix>(c.payload.data(), c.rows, c.cols);
  m.inertia = c.meta[0];
  m.iterations = static_cast<int>(c.meta[1]);
  return m;
}

void save_kmeans(const KmeansModel& m, const std::filesystem::path& path) {
  save_container(to_container(m), path);
}

KmeansModel load_kmeans(const std::filesystem::path& path) {
  return kmeans_from_container(load_container(path, ModelKind::kKmeans));
}

}  // namespace eradate
