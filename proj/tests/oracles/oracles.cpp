#include "oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>

#include <unistd.h>

#include <Eigen/Eigenvalues>

namespace oracle {

Matrix posteriors(const Matrix& x, const eradate::GmmModel& gmm, eradate::PosteriorMode mode) {
  const int n = static_cast<int>(x.rows());
  const int k = gmm.k();
  const int d = gmm.dim();
  Matrix q(n, k);
  for (int i = 0; i < n; ++i) {
    std::vector<double> logp(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
      double maha = 0.0;
      double log_det = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = x(i, j) - gmm.means(c, j);
        maha += diff * diff / gmm.variances(c, j);
        log_det += std::log(gmm.variances(c, j));
      }
      double lp = -0.5 * maha;
      if (mode == eradate::PosteriorMode::kWeighted) {
        lp += std::log(gmm.weights(c)) - 0.5 * log_det -
              0.5 * d * std::log(2.0 * std::numbers::pi);
      }
      logp[static_cast<std::size_t>(c)] = lp;
    }
    const double top = *std::max_element(logp.begin(), logp.end());
    double total = 0.0;
    for (double lp : logp) total += std::exp(lp - top);
    double kept = 0.0;
    for (int c = 0; c < k; ++c) {
      double p = std::exp(logp[static_cast<std::size_t>(c)] - top) / total;
      if (p < 1e-12) p = 0.0;
      q(i, c) = p;
      kept += p;
    }
    for (int c = 0; c < k; ++c) q(i, c) /= kept;
  }
  return q;
}

std::vector<double> fisher_vector(const Matrix& x, const eradate::GmmModel& gmm,
                                  eradate::PosteriorMode mode) {
  const int n = static_cast<int>(x.rows());
  const int k = gmm.k();
  const int d = gmm.dim();
  const Matrix q = posteriors(x, gmm, mode);
  std::vector<double> u(static_cast<std::size_t>(k * d), 0.0);
  std::vector<double> v(static_cast<std::size_t>(k * d), 0.0);
  for (int c = 0; c < k; ++c) {
    for (int j = 0; j < d; ++j) {
      const double sigma = std::sqrt(gmm.variances(c, j));
      double su = 0.0;
      double sv = 0.0;
      for (int i = 0; i < n; ++i) {
        const double z = (x(i, j) - gmm.means(c, j)) / sigma;
        su += q(i, c) * z;
        sv += q(i, c) * (z * z - 1.0);
      }
      const double w = gmm.weights(c);
      u[static_cast<std::size_t>(c * d + j)] = su / (n * std::sqrt(w));
      v[static_cast<std::size_t>(c * d + j)] = sv / (n * std::sqrt(2.0 * w));
    }
  }
  u.insert(u.end(), v.begin(), v.end());
  return u;
}

eradate::GmmModel random_gmm(eradate::Rng& rng, int k, int d) {
  eradate::GmmModel g;
  g.weights.resize(k);
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    g.weights(c) = rng.uniform(0.2, 1.0);
    total += g.weights(c);
  }
  g.weights /= total;
  g.means = random_matrix(rng, k, d, -1.0, 1.0);
  g.variances = random_matrix(rng, k, d, 0.2, 1.5);
  return g;
}

Matrix random_matrix(eradate::Rng& rng, int rows, int cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  }
  return m;
}

std::vector<eradate::KeyPoint> brute_force_keypoints(const eradate::DogStack& stack,
                                                     double floor) {
  std::vector<eradate::KeyPoint> out;
  const int layers = static_cast<int>(stack.layers.size());
  for (int c = 1; c <= layers - 2; ++c) {
    const auto& mid = stack.layers[static_cast<std::size_t>(c)].image;
    for (int y = 1; y <= mid.height() - 2; ++y) {
      for (int x = 1; x <= mid.width() - 2; ++x) {
        const double v = mid.at(x, y);
        if (std::fabs(v) < floor) continue;
        int above = 0;
        int below = 0;
        for (int s = c - 1; s <= c + 1; ++s) {
          const auto& plane = stack.layers[static_cast<std::size_t>(s)].image;
          for (int yy = y - 1; yy <= y + 1; ++yy) {
            for (int xx = x - 1; xx <= x + 1; ++xx) {
              if (s == c && yy == y && xx == x) continue;
              const double other = plane.at(xx, yy);
              above += v > other ? 1 : 0;
              below += v < other ? 1 : 0;
            }
          }
        }
        if (above == 26 || below == 26) {
          eradate::KeyPoint kp;
          kp.x = x;
          kp.y = y;
          kp.scale_index = c;
          kp.sigma = stack.layers[static_cast<std::size_t>(c)].sigma;
          out.push_back(kp);
        }
      }
    }
  }
  return out;
}

Tally count_votes(std::span<const int> predictions, int num_classes) {
  Tally t;
  for (int c = 0; c < num_classes; ++c) {
    t.votes.push_back(static_cast<int>(std::count(predictions.begin(), predictions.end(), c)));
  }
  const int top = *std::max_element(t.votes.begin(), t.votes.end());
  t.winner = static_cast<int>(std::find(t.votes.begin(), t.votes.end(), top) - t.votes.begin());
  return t;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::fabs(a[i]), std::fabs(b[i]), floor});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
  }
  return worst;
}

double min_eigenvalue(const Matrix& symmetric) {
  const Eigen::MatrixXd m = symmetric;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

double chi2_distance(std::span<const double> x, std::span<const double> y, double eps) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    s += (x[i] - y[i]) * (x[i] - y[i]) / (x[i] + y[i] + eps);
  }
  return s;
}

double mutual_information(const std::vector<std::vector<double>>& joint) {
  double total = 0.0;
  std::vector<double> row_sum(joint.size(), 0.0);
  std::vector<double> col_sum(joint.empty() ? 0 : joint[0].size(), 0.0);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    for (std::size_t j = 0; j < joint[i].size(); ++j) {
      row_sum[i] += joint[i][j];
      col_sum[j] += joint[i][j];
      total += joint[i][j];
    }
  }
  double mi = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    for (std::size_t j = 0; j < joint[i].size(); ++j) {
      if (joint[i][j] <= 0.0) continue;
      const double p = joint[i][j] / total;
      mi += p * std::log(p / ((row_sum[i] / total) * (col_sum[j] / total)));
    }
  }
  return mi;
}

MergeChoice best_merge(const std::vector<std::vector<double>>& clusters) {
  const double before = mutual_information(clusters);
  MergeChoice best;
  bool found = false;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    for (std::size_t j = i + 1; j < clusters.size(); ++j) {
      std::vector<std::vector<double>> merged;
      for (std::size_t m = 0; m < clusters.size(); ++m) {
        if (m == j) continue;
        merged.push_back(clusters[m]);
        if (m == i) {
          for (std::size_t c = 0; c < clusters[j].size(); ++c) merged.back()[c] += clusters[j][c];
        }
      }
      const double loss = before - mutual_information(merged);
      if (!found || loss < best.loss) {
        best = {static_cast<int>(i), static_cast<int>(j), loss};
        found = true;
      }
    }
  }
  return best;
}

void srgb_to_lab(double r, double g, double b, double lab[3]) {
  auto linear = [](double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double rl = linear(r);
  const double gl = linear(g);
  const double bl = linear(b);
  const double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
  const double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
  const double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
  auto f = [](double t) {
    const double e = 216.0 / 24389.0;
    const double k = 24389.0 / 27.0;
    return t > e ? std::cbrt(t) : (k * t + 16.0) / 116.0;
  };
  const double fx = f(x / 0.95047);
  const double fy = f(y / 1.0);
  const double fz = f(z / 1.08883);
  lab[0] = 116.0 * fy - 16.0;
  lab[1] = 500.0 * (fx - fy);
  lab[2] = 200.0 * (fy - fz);
}

eradate::Image sampled_gaussian(int width, int height, double cx, double cy, double sigma) {
  eradate::Image img(width, height, 1);
  double total = 0.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      img.at(x, y) = std::exp(-r2 / (2.0 * sigma * sigma));
      total += img.at(x, y);
    }
  }
  for (auto& v : img.data()) v /= total;
  return img;
}

eradate::Image truncated_gaussian_response(int width, int height, int cx, int cy, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps;
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    taps.push_back(std::exp(-0.5 * i * i / (sigma * sigma)));
    total += taps.back();
  }
  for (auto& t : taps) t /= total;
  eradate::Image img(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int dx = x - cx;
      const int dy = y - cy;
      if (std::abs(dx) > radius || std::abs(dy) > radius) continue;
      img.at(x, y) = taps[static_cast<std::size_t>(dx + radius)] *
                     taps[static_cast<std::size_t>(dy + radius)];
    }
  }
  return img;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("eradate_" + tag + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<std::pair<std::string, std::vector<std::uint8_t>>> read_tree(
    const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    out.emplace_back(std::filesystem::relative(e.path(), dir).generic_string(), std::move(bytes));
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace oracle
