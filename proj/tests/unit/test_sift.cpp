#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eradate/error.hpp"
#include "eradate/rng.hpp"
#include "eradate/scale_space.hpp"
#include "eradate/sift.hpp"
#include "oracles.hpp"

using namespace eradate;

namespace {

Image noise(Rng& rng, int w, int h) {
  Image img(w, h, 1);
  for (auto& v : img.data()) v = rng.uniform();
  return img;
}

double l2(const std::array<double, kSiftDim>& a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

void expect_valid_descriptor(const std::array<double, kSiftDim>& d) {
  for (double v : d) EXPECT_GE(v, 0.0);
  const double n = l2(d);
  EXPECT_TRUE(n == 0.0 || std::fabs(n - 1.0) <= 1e-6) << "norm " << n;
}

}  // namespace

TEST(ScaleSpace, SigmaScheduleDoublesPerOctave) {
  const auto space = build_scale_space(Image(20, 20, 1, 0.5), 1.6, 3, 5);
  ASSERT_EQ(space.levels.size(), 5u);
  for (int c = 0; c < 5; ++c) {
    EXPECT_NEAR(space.levels[static_cast<std::size_t>(c)].sigma, 1.6 * std::pow(2.0, c / 3.0), 1e-12);
  }
  EXPECT_NEAR(space.levels[1].sigma, 2.016, 1e-3);
  EXPECT_NEAR(space.levels[2].sigma, 2.540, 1e-3);
}

TEST(ScaleSpace, ConstantImageStaysConstant) {
  const auto space = build_scale_space(Image(30, 25, 1, 0.5), 1.6, 3, 4);
  for (const auto& level : space.levels) {
    for (double v : level.image.data()) EXPECT_NEAR(v, 0.5, 1e-12);
  }
}

TEST(ScaleSpace, BlurPreservesMean) {
  Rng rng(1);
  const Image img = noise(rng, 64, 72);
  double mean = 0.0;
  for (double v : img.data()) mean += v;
  mean /= static_cast<double>(img.size());
  for (double sigma : {0.8, 1.6, 3.2}) {
    // Interior-dominant: pad with the image mean so border replication
    // cannot shift it.
    Image padded(64 + 40, 72 + 40, 1, mean);
    for (int y = 0; y < 72; ++y) {
      for (int x = 0; x < 64; ++x) padded.at(x + 20, y + 20) = img.at(x, y);
    }
    const Image blurred = gaussian_blur(padded, sigma);
    double bm = 0.0;
    for (double v : blurred.data()) bm += v;
    bm /= static_cast<double>(blurred.size());
    EXPECT_NEAR(bm, mean, 1e-9);
  }
}

TEST(ScaleSpace, KernelHasUnitSumAndThreeSigmaRadius) {
  for (double sigma : {0.7, 1.6, 2.54}) {
    const auto k = gaussian_kernel(sigma);
    EXPECT_EQ(static_cast<int>(k.size()), 2 * static_cast<int>(std::ceil(3 * sigma)) + 1);
    double s = 0.0;
    for (double v : k) s += v;
    EXPECT_NEAR(s, 1.0, 1e-14);
  }
}

TEST(ScaleSpace, ImpulseResponseIsSampledGaussian) {
  Image impulse(61, 61, 1);
  impulse.at(30, 30) = 1.0;
  const auto space = build_scale_space(impulse, 1.6, 3, 4);
  for (const auto& level : space.levels) {
    const Image want = oracle::sampled_gaussian(61, 61, 30, 30, level.sigma);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < want.size(); ++i) {
      num += std::pow(level.image.data()[i] - want.data()[i], 2);
      den += std::pow(want.data()[i], 2);
    }
    EXPECT_LT(std::sqrt(num / den), 0.02) << "sigma " << level.sigma;
  }
}

TEST(ScaleSpace, ImpulseDogIsDifferenceOfGaussians) {
  Image impulse(61, 61, 1);
  impulse.at(30, 30) = 1.0;
  const auto space = build_scale_space(impulse, 1.6, 3, 4);
  const auto stack = dog(space);
  ASSERT_EQ(stack.layers.size(), 3u);
  for (std::size_t c = 0; c < stack.layers.size(); ++c) {
    const Image a = oracle::truncated_gaussian_response(61, 61, 30, 30, space.levels[c].sigma);
    const Image b = oracle::truncated_gaussian_response(61, 61, 30, 30, space.levels[c + 1].sigma);
    EXPECT_EQ(stack.layers[c].sigma, space.levels[c].sigma);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_NEAR(stack.layers[c].image.data()[i], b.data()[i] - a.data()[i], 1e-10);
    }
  }
}

TEST(ScaleSpace, ConstantImageHasZeroDog) {
  const auto stack = dog(build_scale_space(Image(24, 24, 1, 0.37), 1.6, 3, 4));
  ASSERT_EQ(stack.layers.size(), 3u);
  for (const auto& layer : stack.layers) {
    for (double v : layer.image.data()) EXPECT_NEAR(v, 0.0, 1e-12);
  }
  EXPECT_TRUE(detect_keypoints(stack, 1e-9).empty());
}

TEST(Keypoints, BrightDotIsDetected) {
  // A single pixel has DoG magnitude falling with scale and no extremum, so
  // the dot is a disk matched to the middle layers.
  Image img(48, 48, 1);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 48; ++x) {
      if (std::hypot(x - 20, y - 27) <= 4.0) img.at(x, y) = 1.0;
    }
  }
  const auto stack = dog(build_scale_space(img, 1.6, 3, 5));
  const auto kps = detect_keypoints(stack, 1e-4);
  EXPECT_EQ(kps, oracle::brute_force_keypoints(stack, 1e-4));
  bool near = false;
  for (const auto& k : kps) near = near || (std::hypot(k.x - 20, k.y - 27) <= 2.0);
  EXPECT_TRUE(near);
}

TEST(Keypoints, RampHasNoExtrema) {
  Image img(40, 32, 1);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 40; ++x) img.at(x, y) = x / 40.0;
  }
  const auto stack = dog(build_scale_space(img, 1.6, 3, 5));
  EXPECT_TRUE(oracle::brute_force_keypoints(stack, 0.0).empty());
  EXPECT_TRUE(detect_keypoints(stack, 0.0).empty());
}

TEST(Keypoints, RandomStacksMatchBruteForce) {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto stack = dog(build_scale_space(noise(rng, 32, 32), 1.6, 3, 5));
    for (double floor : {0.0, 0.01}) {
      EXPECT_EQ(detect_keypoints(stack, floor), oracle::brute_force_keypoints(stack, floor));
    }
  }
}

TEST(Gradient, HorizontalRamp) {
  const int w = 16;
  Image img(w, 10, 1);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<double>(x) / w;
  }
  const auto g = gradient(img);
  for (int y = 1; y < 9; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      EXPECT_NEAR(g.magnitude.at(x, y), 2.0 / w, 1e-12);
      EXPECT_NEAR(g.orientation.at(x, y), 0.0, 1e-12);
    }
  }
}

TEST(Gradient, VerticalRampPointsDown) {
  const int h = 12;
  Image img(9, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < 9; ++x) img.at(x, y) = static_cast<double>(y) / h;
  }
  const auto g = gradient(img);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < 8; ++x) EXPECT_NEAR(g.orientation.at(x, y), std::numbers::pi / 2, 1e-12);
  }
}

TEST(Gradient, ConstantHasZeroMagnitudeAndOrientation) {
  const auto g = gradient(Image(7, 7, 1, 0.4));
  for (double v : g.magnitude.data()) EXPECT_EQ(v, 0.0);
  for (double v : g.orientation.data()) EXPECT_EQ(v, 0.0);
}

TEST(Orientation, SinglePeakAtZero) {
  Image img(31, 31, 1);
  for (int y = 0; y < 31; ++y) {
    for (int x = 0; x < 31; ++x) img.at(x, y) = 0.01 * x;
  }
  const auto o = principal_orientations(15, 15, gradient(img), 2.0);
  ASSERT_EQ(o.size(), 1u);
  EXPECT_LE(std::fabs(o[0]), std::numbers::pi / 36);
}

TEST(Orientation, TwoEqualPopulationsGiveTwoPeaks) {
  // Gradients at 0 on the left half and pi/2 on the right half, mirrored
  // so both halves carry the same Gaussian-weighted mass.
  GradientField g{Image(31, 31, 1), Image(31, 31, 1)};
  for (int y = 0; y < 31; ++y) {
    for (int x = 0; x < 31; ++x) {
      if (x == 15) continue;
      g.magnitude.at(x, y) = 1.0;
      g.orientation.at(x, y) = x < 15 ? 0.0 : std::numbers::pi / 2;
    }
  }
  const auto o = principal_orientations(15, 15, g, 2.0);
  ASSERT_EQ(o.size(), 2u);
  EXPECT_NEAR(o[0], 0.0, 1e-12);
  EXPECT_NEAR(o[1], std::numbers::pi / 2, 1e-12);
}

TEST(Orientation, EmptyWindowGivesZero) {
  const auto o = principal_orientations(5, 5, gradient(Image(11, 11, 1, 0.2)), 1.6);
  EXPECT_EQ(o, std::vector<double>{0.0});
}

TEST(Descriptor, ConstantRegionIsZero) {
  const auto d = sift_at(gradient(Image(40, 40, 1, 0.6)), 20, 20, 0.3, 3.0, true);
  EXPECT_EQ(l2(d.vector), 0.0);
}

TEST(Descriptor, RandomDescriptorsAreClampedUnitVectors) {
  Rng rng(3);
  const auto g = gradient(noise(rng, 50, 50));
  for (int i = 0; i < 50; ++i) {
    const auto d = sift_at(g, rng.uniform(10, 40), rng.uniform(10, 40), rng.uniform(0, 6.28),
                           rng.uniform(1.5, 4.0), i % 2 == 0);
    EXPECT_EQ(d.vector.size(), 128u);
    expect_valid_descriptor(d.vector);
  }
}

TEST(Descriptor, QuarterTurnRotatesTheDescriptor) {
  Rng rng(4);
  const int w = 41;
  const Image img = gaussian_blur(noise(rng, w, w), 1.5);
  // R(x, y) = I(y, w - 1 - x) turns the content a quarter turn about the
  // center so that gradient orientations grow by pi/2.
  Image rot(w, w, 1);
  for (int y = 0; y < w; ++y) {
    for (int x = 0; x < w; ++x) rot.at(x, y) = img.at(y, w - 1 - x);
  }
  const auto a = sift_at(gradient(img), 20, 20, 0.0, 4.0, true);
  const auto b = sift_at(gradient(rot), 20, 20, std::numbers::pi / 2, 4.0, true);
  double num = 0.0;
  for (int i = 0; i < kSiftDim; ++i) {
    num += std::pow(a.vector[static_cast<std::size_t>(i)] - b.vector[static_cast<std::size_t>(i)], 2);
  }
  EXPECT_LT(std::sqrt(num) / l2(a.vector), 0.15);
}

TEST(Descriptor, SparsePipelineEmitsValidDescriptors) {
  Image img(64, 64, 1, 0.1);
  for (int y = 20; y < 44; ++y) {
    for (int x = 24; x < 40; ++x) img.at(x, y) = 0.9;
  }
  const auto descs = sparse_sift(img);
  EXPECT_FALSE(descs.empty());
  for (const auto& d : descs) expect_valid_descriptor(d.vector);
}

TEST(DenseSift, GridCountMatchesClosedForm) {
  EXPECT_EQ(dense_grid_count(400, 4, 4), 97);
  EXPECT_EQ(dense_bin_size(0), 4);
  EXPECT_EQ(dense_bin_size(4), 12);
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const int w = static_cast<int>(rng.uniform_int(10, 70));
    const int h = static_cast<int>(rng.uniform_int(10, 70));
    const int step = static_cast<int>(rng.uniform_int(1, 12));
    const int scales = static_cast<int>(rng.uniform_int(1, 3));
    std::size_t want = 0;
    for (int s = 0; s < scales; ++s) {
      const int window = 4 * dense_bin_size(s);
      const std::size_t nx = w >= window ? static_cast<std::size_t>((w - window) / step + 1) : 0;
      const std::size_t ny = h >= window ? static_cast<std::size_t>((h - window) / step + 1) : 0;
      want += nx * ny;
    }
    EXPECT_EQ(dense_sift(noise(rng, w, h), step, scales).count(), want)
        << w << "x" << h << " step " << step << " scales " << scales;
  }
}

TEST(DenseSift, StepOfImageWidthGivesOneColumn) {
  Rng rng(6);
  const auto set = dense_sift(noise(rng, 24, 40), 24, 2);
  for (const auto& g : set.geometry()) EXPECT_EQ(g.x, 2 * g.scale);
  EXPECT_GT(set.count(), 0u);
}

TEST(DenseSift, MatchesPointwiseDescriptor) {
  Rng rng(7);
  const Image img = noise(rng, 44, 38);
  const auto set = dense_sift(img, 5, 2);
  const auto space = build_scale_space(img, kDefaultSigma0, kDefaultLevelsPerOctave, 2);
  const GradientField grads[2] = {gradient(space.levels[0].image), gradient(space.levels[1].image)};
  ASSERT_GT(set.count(), 0u);
  for (std::size_t i = 0; i < set.count(); ++i) {
    const auto& g = set.geometry()[i];
    EXPECT_EQ(set.row(i).size(), 128u);
    const int s = g.scale == 4.0f ? 0 : 1;
    const auto want = sift_at(grads[s], g.x - 0.5, g.y - 0.5, 0.0, g.scale, false);
    for (int k = 0; k < kSiftDim; ++k) {
      EXPECT_NEAR(set.row(i)[static_cast<std::size_t>(k)], want.vector[static_cast<std::size_t>(k)], 1e-5);
    }
  }
}

TEST(DenseSift, RejectsColorInput) {
  EXPECT_THROW(dense_sift(Image(40, 40, 3), 4, 1), Error);
}

TEST(Descriptor, NormalizationClampsThenRenormalizes) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(kSiftDim, 0.0);
    const int nonzero = static_cast<int>(rng.uniform_int(1, kSiftDim));
    for (int i = 0; i < nonzero; ++i) raw[static_cast<std::size_t>(rng.uniform_int(kSiftDim))] = rng.uniform(0.0, 5.0);
    double n = 0.0;
    for (double v : raw) n += v * v;
    n = std::sqrt(n);
    std::vector<double> clamped(raw.size());
    double n2 = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      clamped[i] = std::min(raw[i] / n, 0.2);
      EXPECT_LE(clamped[i], 0.2 + 1e-6);
      n2 += clamped[i] * clamped[i];
    }
    n2 = std::sqrt(n2);
    std::vector<double> got = raw;
    normalize_descriptor(got);
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(got[i], clamped[i] / n2, 1e-12);
  }
  std::vector<double> zero(kSiftDim, 0.0);
  normalize_descriptor(zero);
  for (double v : zero) EXPECT_EQ(v, 0.0);
}
