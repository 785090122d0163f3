#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "eradate/encoding.hpp"
#include "eradate/error.hpp"
#include "eradate/rng.hpp"
#include "oracles.hpp"

using namespace eradate;

namespace {

DescriptorSet to_set(const Matrix& m) {
  DescriptorSet set(static_cast<int>(m.cols()));
  std::vector<double> row(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
    set.add(std::span<const double>(row), {});
  }
  return set;
}

Matrix two_blobs(Rng& rng, int per_blob, double sigma) {
  Matrix m(2 * per_blob, 2);
  for (int i = 0; i < 2 * per_blob; ++i) {
    const double cx = i < per_blob ? -10.0 : 10.0;
    m(i, 0) = rng.normal(cx, sigma);
    m(i, 1) = rng.normal(0.0, sigma);
  }
  return m;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(Kmeans, SingleClusterIsDataMean) {
  Rng rng(1);
  const Matrix data = oracle::random_matrix(rng, 57, 4, -3, 8);
  const auto model = kmeans_fit(data, 1, 5);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(model.centers(0, j), data.col(j).mean(), 1e-12);
}

TEST(Kmeans, TwoBlobsMatchExhaustiveOptimum) {
  Rng rng(2);
  const double sigma = 1.0;
  const Matrix data = two_blobs(rng, 6, sigma);
  const int n = static_cast<int>(data.rows());
  // Best of all 2^n bipartitions.
  double best = std::numeric_limits<double>::infinity();
  Matrix best_centers(2, 2);
  for (int mask = 1; mask + 1 < (1 << n); ++mask) {
    Matrix c = Matrix::Zero(2, 2);
    int count[2] = {0, 0};
    for (int i = 0; i < n; ++i) {
      const int g = (mask >> i) & 1;
      c.row(g) += data.row(i);
      ++count[g];
    }
    c.row(0) /= count[0];
    c.row(1) /= count[1];
    double obj = 0.0;
    for (int i = 0; i < n; ++i) obj += (data.row(i) - c.row((mask >> i) & 1)).squaredNorm();
    if (obj < best) {
      best = obj;
      best_centers = c;
    }
  }
  const auto model = kmeans_fit(data, 2, 3);
  for (int k = 0; k < 2; ++k) {
    const double d0 = (model.centers.row(k) - best_centers.row(0)).norm();
    const double d1 = (model.centers.row(k) - best_centers.row(1)).norm();
    EXPECT_LT(std::min(d0, d1), 0.1 * sigma);
  }
  EXPECT_NEAR(model.inertia, best, 1e-9);
}

TEST(Kmeans, ObjectiveNonIncreasingAndConvergedIsFixedPoint) {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix data = oracle::random_matrix(rng, 80, 3, 0, 1);
    const auto model = kmeans_fit(data, 5, 100 + static_cast<std::uint64_t>(trial), 500, 0.0);
    for (std::size_t i = 1; i < model.objective_trace.size(); ++i) {
      EXPECT_LE(model.objective_trace[i], model.objective_trace[i - 1] * (1 + 1e-12));
    }
    // One more Lloyd step from the converged centers moves nothing.
    const auto assign = kmeans_assign(model, data);
    Matrix next = Matrix::Zero(5, 3);
    std::vector<int> count(5, 0);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      next.row(assign[static_cast<std::size_t>(i)]) += data.row(i);
      ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    for (int k = 0; k < 5; ++k) {
      ASSERT_GT(count[static_cast<std::size_t>(k)], 0);
      for (int j = 0; j < 3; ++j) {
        EXPECT_NEAR(next(k, j) / count[static_cast<std::size_t>(k)], model.centers(k, j), 1e-12);
      }
    }
  }
}

TEST(Kmeans, SameSeedSameModel) {
  Rng rng(4);
  const Matrix data = oracle::random_matrix(rng, 60, 2, 0, 1);
  EXPECT_EQ(kmeans_fit(data, 4, 9).centers, kmeans_fit(data, 4, 9).centers);
}

TEST(Kmeans, TooFewPointsIsRejected) {
  Rng rng(5);
  const Matrix data = oracle::random_matrix(rng, 3, 2, 0, 1);
  EXPECT_EQ(code_of([&] { kmeans_fit(data, 4, 1); }), ErrorCode::kTooFewPoints);
}

TEST(Bow, DescriptorAtCenterIsOneHot) {
  Rng rng(6);
  const auto model = kmeans_fit(oracle::random_matrix(rng, 40, 3, 0, 1), 10, 2);
  const auto v = bow_encode(to_set(model.centers.row(7)), model);
  ASSERT_EQ(v.dim(), 10);
  for (int k = 0; k < 10; ++k) EXPECT_EQ(v.values[static_cast<std::size_t>(k)], k == 7 ? 1.0 : 0.0);
}

TEST(Bow, EmptySetGivesZeros) {
  Rng rng(7);
  const auto model = kmeans_fit(oracle::random_matrix(rng, 20, 3, 0, 1), 4, 2);
  const auto v = bow_encode(DescriptorSet(3), model);
  ASSERT_EQ(v.dim(), 4);
  for (double x : v.values) EXPECT_EQ(x, 0.0);
}

TEST(Bow, ConcatenationIsCountWeightedAverage) {
  Rng rng(8);
  const auto model = kmeans_fit(oracle::random_matrix(rng, 50, 3, 0, 1), 6, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const int na = static_cast<int>(rng.uniform_int(1, 30));
    const int nb = static_cast<int>(rng.uniform_int(1, 30));
    const Matrix a = oracle::random_matrix(rng, na, 3, 0, 1);
    const Matrix b = oracle::random_matrix(rng, nb, 3, 0, 1);
    Matrix ab(na + nb, 3);
    ab << a, b;
    const auto ha = bow_encode(to_set(a), model);
    const auto hb = bow_encode(to_set(b), model);
    const auto hab = bow_encode(to_set(ab), model);
    EXPECT_NEAR(std::accumulate(hab.values.begin(), hab.values.end(), 0.0), 1.0, 1e-12);
    for (std::size_t k = 0; k < 6; ++k) {
      EXPECT_NEAR(hab.values[k], (na * ha.values[k] + nb * hb.values[k]) / (na + nb), 1e-12);
    }
  }
}

TEST(Bow, DimMismatchIsRejected) {
  Rng rng(9);
  const auto model = kmeans_fit(oracle::random_matrix(rng, 20, 3, 0, 1), 4, 2);
  EXPECT_EQ(code_of([&] { bow_encode(DescriptorSet(5), model); }), ErrorCode::kDimMismatch);
}

TEST(Gmm, SingleComponentIsMaximumLikelihood) {
  Rng rng(10);
  const Matrix data = oracle::random_matrix(rng, 200, 3, -2, 5);
  const auto gmm = gmm_fit(data, 1, 4, 100, 1e-6, 1e-12);
  EXPECT_NEAR(gmm.weights(0), 1.0, 1e-12);
  for (int j = 0; j < 3; ++j) {
    const double mean = data.col(j).mean();
    const double var = (data.col(j).array() - mean).square().mean();
    EXPECT_NEAR(gmm.means(0, j), mean, 1e-9);
    EXPECT_NEAR(gmm.variances(0, j), var, 1e-9);
  }
}

TEST(Gmm, LogLikelihoodNonDecreasing) {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix data = oracle::random_matrix(rng, 120, 2, 0, 1);
    const auto gmm = gmm_fit(data, 3, static_cast<std::uint64_t>(trial), 60, 0.0);
    for (std::size_t i = 1; i < gmm.log_likelihood_trace.size(); ++i) {
      const double prev = gmm.log_likelihood_trace[i - 1];
      EXPECT_GE(gmm.log_likelihood_trace[i], prev - 1e-9 * std::fabs(prev));
    }
  }
}

TEST(Gmm, PosteriorsMatchOracleAndSumToOne) {
  Rng rng(12);
  for (auto mode : {PosteriorMode::kWeighted, PosteriorMode::kPrinted}) {
    const auto gmm = oracle::random_gmm(rng, 4, 3);
    const Matrix x = oracle::random_matrix(rng, 25, 3, -2, 2);
    const Matrix got = gmm_posteriors(gmm, x, mode);
    const Matrix want = oracle::posteriors(x, gmm, mode);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      EXPECT_NEAR(got.row(i).sum(), 1.0, 1e-12);
      for (int k = 0; k < 4; ++k) EXPECT_NEAR(got(i, k), want(i, k), 1e-9);
    }
  }
}

TEST(Gmm, ErrorsOnTooFewPointsAndConstantData) {
  Rng rng(13);
  EXPECT_EQ(code_of([&] { gmm_fit(oracle::random_matrix(rng, 5, 2, 0, 1), 3, 1); }),
            ErrorCode::kTooFewPoints);
  EXPECT_EQ(code_of([&] { gmm_fit(Matrix::Constant(20, 2, 0.5), 2, 1); }), ErrorCode::kDegenerateData);
}

TEST(FisherVector, DimensionIsTwoKD) {
  Rng rng(14);
  const auto gmm = oracle::random_gmm(rng, 3, 5);
  const auto fv = fisher_vector(oracle::random_matrix(rng, 7, 5, 0, 1), gmm);
  EXPECT_EQ(fv.dim(), 2 * 3 * 5);
  GmmModel big;
  big.weights = Vector::Constant(128, 1.0 / 128);
  big.means = Matrix::Zero(128, 128);
  big.variances = Matrix::Ones(128, 128);
  EXPECT_EQ(fisher_vector(Matrix::Zero(2, 128), big).dim(), 32768);
}

TEST(FisherVector, SingleComponentAtMean) {
  GmmModel gmm;
  gmm.weights = Vector::Ones(1);
  gmm.means = Matrix(1, 3);
  gmm.means << 0.5, -1.0, 2.0;
  gmm.variances = Matrix(1, 3);
  gmm.variances << 0.3, 1.0, 4.0;
  Matrix x(6, 3);
  for (int i = 0; i < 6; ++i) x.row(i) = gmm.means.row(0);
  const auto fv = fisher_vector(x, gmm);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(fv.values[static_cast<std::size_t>(j)], 0.0);
    EXPECT_NEAR(fv.values[static_cast<std::size_t>(3 + j)], -1.0 / std::sqrt(2.0), 1e-12);
  }
}

TEST(FisherVector, MatchesNaiveEvaluator) {
  Rng rng(15);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = static_cast<int>(rng.uniform_int(1, 4));
    const int d = static_cast<int>(rng.uniform_int(1, 5));
    const int n = static_cast<int>(rng.uniform_int(1, 20));
    const auto gmm = oracle::random_gmm(rng, k, d);
    const Matrix x = oracle::random_matrix(rng, n, d, -2, 2);
    for (auto mode : {PosteriorMode::kWeighted, PosteriorMode::kPrinted}) {
      const auto got = fisher_vector(x, gmm, mode);
      const auto want = oracle::fisher_vector(x, gmm, mode);
      ASSERT_EQ(got.values.size(), want.size());
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got.values[i], want[i], 1e-9);
    }
  }
}

TEST(FisherVector, DoublingTheSetChangesNothing) {
  Rng rng(16);
  const auto gmm = oracle::random_gmm(rng, 3, 4);
  const Matrix x = oracle::random_matrix(rng, 11, 4, -1, 1);
  Matrix xx(22, 4);
  xx << x, x;
  const auto a = fisher_vector(x, gmm);
  const auto b = fisher_vector(xx, gmm);
  for (std::size_t i = 0; i < a.values.size(); ++i) EXPECT_NEAR(a.values[i], b.values[i], 1e-9);
}

TEST(FisherVector, SetAndMatrixInputsAgree) {
  Rng rng(17);
  const auto gmm = oracle::random_gmm(rng, 2, 3);
  const Matrix x = oracle::random_matrix(rng, 9, 3, -1, 1);
  const DescriptorSet set = to_set(x);
  const auto a = fisher_vector(set, gmm);
  const auto b = fisher_vector(to_matrix(set), gmm);
  EXPECT_EQ(a.values, b.values);
}

TEST(FisherVector, ErrorsOnEmptyAndMismatch) {
  Rng rng(18);
  const auto gmm = oracle::random_gmm(rng, 2, 3);
  EXPECT_EQ(code_of([&] { fisher_vector(DescriptorSet(3), gmm); }), ErrorCode::kEmptySet);
  EXPECT_EQ(code_of([&] { fisher_vector(Matrix::Zero(2, 4), gmm); }), ErrorCode::kDimMismatch);
}

TEST(IfvNormalize, SignedSquareRootThenL2) {
  const auto v = ifv_normalize({{4.0, -4.0}, EncodingKind::kFv});
  EXPECT_EQ(v.kind, EncodingKind::kIfv);
  EXPECT_NEAR(v.values[0], 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(v.values[1], -1.0 / std::sqrt(2.0), 1e-12);
  const auto zero = ifv_normalize({{0.0, 0.0, 0.0}, EncodingKind::kFv});
  for (double x : zero.values) EXPECT_EQ(x, 0.0);
}

TEST(IfvNormalize, UnitNormAndSignsKept) {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> in(static_cast<std::size_t>(rng.uniform_int(1, 50)));
    for (auto& x : in) x = rng.normal(0, 3);
    const auto out = ifv_normalize({in, EncodingKind::kFv});
    double n = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
      n += out.values[i] * out.values[i];
      EXPECT_EQ(std::signbit(in[i]), std::signbit(out.values[i]));
    }
    EXPECT_NEAR(n, 1.0, 1e-9);
  }
}

TEST(Containers, KmeansAndGmmRoundTrip) {
  Rng rng(20);
  oracle::TempDir dir("encoding");
  const auto km = kmeans_fit(oracle::random_matrix(rng, 30, 3, 0, 1), 3, 1);
  save_kmeans(km, dir.path() / "k.stym");
  const auto km2 = load_kmeans(dir.path() / "k.stym");
  EXPECT_EQ(km2.centers, km.centers);
  EXPECT_EQ(km2.inertia, km.inertia);
  EXPECT_EQ(km2.iterations, km.iterations);

  const auto gmm = gmm_fit(oracle::random_matrix(rng, 60, 2, 0, 1), 3, 1);
  save_gmm(gmm, dir.path() / "g.stym");
  const auto gmm2 = load_gmm(dir.path() / "g.stym");
  EXPECT_EQ(gmm2.weights, gmm.weights);
  EXPECT_EQ(gmm2.means, gmm.means);
  EXPECT_EQ(gmm2.variances, gmm.variances);
  EXPECT_EQ(gmm2.variance_floor, gmm.variance_floor);

  EXPECT_EQ(code_of([&] { load_gmm(dir.path() / "k.stym"); }), ErrorCode::kDecodeError);
  EXPECT_EQ(code_of([&] { load_gmm(dir.path() / "absent.stym"); }), ErrorCode::kMissingModel);
}

TEST(Containers, DescriptorSetRoundTrip) {
  Rng rng(21);
  DescriptorSet set = to_set(oracle::random_matrix(rng, 5, 4, 0, 1));
  const auto bytes = encode_descriptor_set(set);
  EXPECT_EQ(decode_descriptor_set(bytes), set);
  auto truncated = bytes;
  truncated.pop_back();
  EXPECT_EQ(code_of([&] { decode_descriptor_set(truncated); }), ErrorCode::kDecodeError);
}
