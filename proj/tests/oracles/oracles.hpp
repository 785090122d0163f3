#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is written for clarity, not speed, and shares no
// code with the library beyond its data types.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eradate/color.hpp"
#include "eradate/encoding.hpp"
#include "eradate/rng.hpp"
#include "eradate/scale_space.hpp"

namespace oracle {

using eradate::Matrix;

// Posterior of every component for every row, evaluated one density at a
// time. Weighted mode uses w_k N(x | mu_k, var_k); printed mode only the
// Mahalanobis factor. Entries below 1e-12 are zeroed and rows renormalized.
Matrix posteriors(const Matrix& x, const eradate::GmmModel& gmm,
                  eradate::PosteriorMode mode);

// Fisher vector by a direct loop over points, components and dimensions.
std::vector<double> fisher_vector(const Matrix& x, const eradate::GmmModel& gmm,
                                  eradate::PosteriorMode mode);

// Random diagonal mixture with weights summing to one.
eradate::GmmModel random_gmm(eradate::Rng& rng, int k, int d);
Matrix random_matrix(eradate::Rng& rng, int rows, int cols, double lo, double hi);

// Every interior sample strictly above or strictly below its 26 neighbours
// with |value| >= floor, listed layer, row, column.
std::vector<eradate::KeyPoint> brute_force_keypoints(const eradate::DogStack& stack,
                                                     double floor);

struct Tally {
  std::vector<int> votes;
  int winner = 0;
};

// Counts each class by scanning all predictions once per class; the winner
// is the first class whose count equals the maximum.
Tally count_votes(std::span<const int> predictions, int num_classes);

// Central difference of f at x along every coordinate.
std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h);

// max |a - b| / max(|a|, |b|, floor) over paired entries.
double max_relative_error(std::span<const double> a, std::span<const double> b, double floor);

double min_eigenvalue(const Matrix& symmetric);

// Sum over dimensions of (x - y)^2 / (x + y + eps).
double chi2_distance(std::span<const double> x, std::span<const double> y, double eps);

// I(item; class) of a count table, straight from the definition.
double mutual_information(const std::vector<std::vector<double>>& joint);

// Cluster pair (i < j, indices into `clusters`) whose merge keeps the most
// mutual information, first pair on ties, and the information lost.
struct MergeChoice {
  int i = 0;
  int j = 0;
  double loss = 0.0;
};
MergeChoice best_merge(const std::vector<std::vector<double>>& clusters);

// CIE Lab of an sRGB color from the textbook formulas.
void srgb_to_lab(double r, double g, double b, double lab[3]);

// Sampled 2D Gaussian of the given sigma centered at (cx, cy), unit sum
// over the image.
eradate::Image sampled_gaussian(int width, int height, double cx, double cy, double sigma);

// Response of a separable Gaussian blur truncated at radius ceil(3 sigma)
// to a unit impulse at (cx, cy), evaluated away from the borders.
eradate::Image truncated_gaussian_response(int width, int height, int cx, int cy, double sigma);

// Removes its directory on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Every regular file under `dir` with its bytes, keyed by relative path.
std::vector<std::pair<std::string, std::vector<std::uint8_t>>> read_tree(
    const std::filesystem::path& dir);

}  // namespace oracle
