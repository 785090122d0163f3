#include <benchmark/benchmark.h>

#include "eradate/classification.hpp"
#include "eradate/dunnet_layers.hpp"
#include "eradate/encoding.hpp"
#include "eradate/rng.hpp"
#include "eradate/sift.hpp"

using namespace eradate;

namespace {

Image noise_gray(int side, std::uint64_t seed) {
  Rng rng(seed);
  Image img(side, side, 1);
  for (auto& v : img.data()) v = rng.uniform();
  return img;
}

Matrix noise_matrix(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform();
  return m;
}

GmmModel unit_gmm(int k, int d, std::uint64_t seed) {
  GmmModel g;
  g.weights = Vector::Constant(k, 1.0 / k);
  g.means = noise_matrix(k, d, seed);
  g.variances = Matrix::Constant(k, d, 0.1);
  return g;
}

void BM_DenseSift(benchmark::State& state) {
  const Image img = noise_gray(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(dense_sift(img, 8, 3));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DenseSift)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_FisherVector(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const GmmModel gmm = unit_gmm(k, kSiftDim, 2);
  const Matrix desc = noise_matrix(2000, kSiftDim, 3);
  for (auto _ : state) benchmark::DoNotOptimize(fisher_vector(desc, gmm));
  state.SetItemsProcessed(state.iterations() * desc.rows());
}
BENCHMARK(BM_FisherVector)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Chi2Kernel(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Matrix x = noise_matrix(n, 256, 4);
  for (auto _ : state) benchmark::DoNotOptimize(chi2_kernel(x, x, 1.0));
  state.SetItemsProcessed(state.iterations() * n * n);
}
BENCHMARK(BM_Chi2Kernel)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ConvForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  Rng rng(5);
  nn::Tensor<float> x(16, 8, side, side);
  for (auto& v : x.data) v = static_cast<float>(rng.normal());
  nn::Mat<float> w(16, 8 * 9);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<float>(rng.normal(0, 0.1));
  nn::Vec<float> b = nn::Vec<float>::Zero(16);
  nn::Tensor<float> y;
  for (auto _ : state) {
    nn::conv3x3_forward(x, w, b, y);
    benchmark::DoNotOptimize(y.data.data());
  }
  state.SetItemsProcessed(state.iterations() * x.n);
}
BENCHMARK(BM_ConvForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
