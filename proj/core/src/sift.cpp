#include "eradate/sift.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "eradate/error.hpp"

namespace eradate {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kAngleBins = 8;
constexpr int kCells = 4;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

}  // namespace

void normalize_descriptor(std::span<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm <= 0.0) return;
  norm = std::sqrt(norm);
  double norm2 = 0.0;
  for (auto& x : v) {
    x = std::min(x / norm, kDescriptorClamp);
    norm2 += x * x;
  }
  norm2 = std::sqrt(norm2);
  for (auto& x : v) x /= norm2;
}

std::vector<double> principal_orientations(int x, int y,
                                           const GradientField& grad,
                                           double sigma) {
  const int radius = static_cast<int>(std::lround(3.0 * sigma));
  const double sw = 1.5 * sigma;
  const double bin_width = kTwoPi / kOrientationBins;
  std::array<double, kOrientationBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double g = grad.magnitude.clamped(x + dx, y + dy);
      if (g == 0.0) continue;
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sw * sw));
      const double theta = wrap_angle(grad.orientation.clamped(x + dx, y + dy));
      int bin = static_cast<int>(std::lround(theta / bin_width)) % kOrientationBins;
      hist[static_cast<std::size_t>(bin)] += w * g;
    }
  }
  const double peak = *std::max_element(hist.begin(), hist.end());
  if (peak <= 0.0) return {0.0};
  std::vector<double> out;
  for (int b = 0; b < kOrientationBins; ++b) {
    if (hist[static_cast<std::size_t>(b)] >= kPeakRatio * peak) {
      out.push_back(b * bin_width);
    }
  }
  return out;
}

SiftDescriptor sift_at(const GradientField& grad, double x, double y,
                       double angle, double bin_size, bool gaussian_window) {
  if (!(bin_size > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bin size must be positive");
  }
  SiftDescriptor d;
  d.x = x;
  d.y = y;
  d.bin_size = bin_size;
  d.orientation = angle;
  const double cs = std::cos(angle);
  const double sn = std::sin(angle);
  const double half = kCells / 2.0;  // window half-width in bins
  const int reach = static_cast<int>(std::ceil(half * bin_size * std::sqrt(2.0))) + 1;
  const int cx = static_cast<int>(std::floor(x));
  const int cy = static_cast<int>(std::floor(y));
  const double angle_scale = kAngleBins / kTwoPi;
  for (int py = cy - reach; py <= cy + reach + 1; ++py) {
    for (int px = cx - reach; px <= cx + reach + 1; ++px) {
      const double dx = px - x;
      const double dy = py - y;
      const double rx = (cs * dx + sn * dy) / bin_size;
      const double ry = (-sn * dx + cs * dy) / bin_size;
      if (!(std::abs(rx) < half && std::abs(ry) < half)) continue;
      double mag = grad.magnitude.clamped(px, py);
      if (mag == 0.0) continue;
      if (gaussian_window) {
        mag *= std::exp(-(rx * rx + ry * ry) / (2.0 * half * half));
      }
      const double u = rx + half - 0.5;
      const double v = ry + half - 0.5;
      const double o =
          wrap_angle(grad.orientation.clamped(px, py) - angle) * angle_scale;
      const int u0 = static_cast<int>(std::floor(u));
      const int v0 = static_cast<int>(std::floor(v));
      const int o0 = static_cast<int>(std::floor(o));
      const double fu = u - u0;
      const double fv = v - v0;
      const double fo = o - o0;
      for (int iv = 0; iv < 2; ++iv) {
        const int vb = v0 + iv;
        if (vb < 0 || vb >= kCells) continue;
        const double wv = iv ? fv : 1.0 - fv;
        for (int iu = 0; iu < 2; ++iu) {
          const int ub = u0 + iu;
          if (ub < 0 || ub >= kCells) continue;
          const double wu = iu ? fu : 1.0 - fu;
          for (int io = 0; io < 2; ++io) {
            const int ob = (o0 + io) % kAngleBins;
            const double wo = io ? fo : 1.0 - fo;
            d.vector[static_cast<std::size_t>((vb * kCells + ub) * kAngleBins + ob)] +=
                mag * wv * wu * wo;
          }
        }
      }
    }
  }
  normalize_descriptor(d.vector);
  return d;
}

SiftDescriptor sift_at(const KeyPoint& kp, const ScaleSpace& space) {
  if (kp.scale_index < 0 ||
      kp.scale_index >= static_cast<int>(space.levels.size())) {
    throw Error(ErrorCode::kInvalidArgument, "key point scale outside space");
  }
  const auto grad = gradient(space.levels[static_cast<std::size_t>(kp.scale_index)].image);
  return sift_at(grad, kp.x, kp.y, kp.orientation,
                 kSiftMagnification * kp.sigma, true);
}

std::vector<SiftDescriptor> sparse_sift(const Image& gray,
                                        double contrast_floor,
                                        int num_levels) {
  const auto space = build_scale_space(gray, kDefaultSigma0,
                                       kDefaultLevelsPerOctave, num_levels);
  const auto keypoints = detect_keypoints(dog(space), contrast_floor);
  std::map<int, GradientField> grads;
  std::vector<SiftDescriptor> out;
  for (const auto& kp : keypoints) {
    auto it = grads.find(kp.scale_index);
    if (it == grads.end()) {
      it = grads.emplace(kp.scale_index,
                         gradient(space.levels[static_cast<std::size_t>(kp.scale_index)].image))
               .first;
    }
    const int x = static_cast<int>(kp.x);
    const int y = static_cast<int>(kp.y);
    for (double theta : principal_orientations(x, y, it->second, kp.sigma)) {
      out.push_back(sift_at(it->second, kp.x, kp.y, theta,
                            kSiftMagnification * kp.sigma, true));
    }
  }
  return out;
}

int dense_grid_count(int extent, int step, int bin) {
  const int window = kCells * bin;
  if (extent < window || step < 1) return 0;
  return (extent - window) / step + 1;
}

DescriptorSet dense_sift(const Image& gray, int step, int num_scales) {
  if (step < 1 || num_scales < 1) {
    throw Error(ErrorCode::kInvalidArgument, "dense_sift needs step, scales >= 1");
  }
  if (gray.channels() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "dense_sift expects grayscale");
  }
  const int w = gray.width();
  const int h = gray.height();
  const auto space = build_scale_space(gray, kDefaultSigma0,
                                       kDefaultLevelsPerOctave, num_scales);
  DescriptorSet set(kSiftDim);

  for (int s = 0; s < num_scales; ++s) {
    const int bin = dense_bin_size(s);
    const int window = kCells * bin;
    const int nx = dense_grid_count(w, step, bin);
    const int ny = dense_grid_count(h, step, bin);
    if (nx == 0 || ny == 0) continue;
    const auto grad = gradient(space.levels[static_cast<std::size_t>(s)].image);

    // Orientation channels with linear interpolation between the two
    // nearest of 8 angle bins.
    const std::size_t plane = static_cast<std::size_t>(w) * h;
    std::vector<double> channels(kAngleBins * plane, 0.0);
    for (std::size_t i = 0; i < plane; ++i) {
      const double mag = grad.magnitude.data()[i];
      if (mag == 0.0) continue;
      const double o = wrap_angle(grad.orientation.data()[i]) * (kAngleBins / kTwoPi);
      const int o0 = static_cast<int>(std::floor(o));
      const double fo = o - o0;
      channels[static_cast<std::size_t>(o0 % kAngleBins) * plane + i] += mag * (1.0 - fo);
      channels[static_cast<std::size_t>((o0 + 1) % kAngleBins) * plane + i] += mag * fo;
    }

    // Spatial weights of cell i for pixel offset d in [-2*bin, 2*bin).
    std::array<std::vector<double>, kCells> weights;
    for (int i = 0; i < kCells; ++i) {
      weights[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(window));
      for (int d = 0; d < window; ++d) {
        const double u = (d - 2 * bin + 0.5) / bin + 1.5;
        weights[static_cast<std::size_t>(i)][static_cast<std::size_t>(d)] =
            std::max(0.0, 1.0 - std::abs(u - i));
      }
    }

    // Horizontal pass: per orientation, cell column and grid column, a
    // full-height profile.
    std::vector<double> horiz(static_cast<std::size_t>(kAngleBins) * kCells * nx * h);
    auto hidx = [&](int o, int i, int gx, int y) {
      return ((static_cast<std::size_t>(o) * kCells + i) * nx + gx) * h + y;
    };
    for (int o = 0; o < kAngleBins; ++o) {
      const double* ch = channels.data() + static_cast<std::size_t>(o) * plane;
      for (int gx = 0; gx < nx; ++gx) {
        const int x0 = gx * step;  // window starts at c - 2*bin
        for (int i = 0; i < kCells; ++i) {
          const auto& wt = weights[static_cast<std::size_t>(i)];
          // Non-zero support of cell i is within [i*bin - bin/2, ...).
          int lo = 0;
          while (lo < window && wt[static_cast<std::size_t>(lo)] == 0.0) ++lo;
          int hi = window;
          while (hi > lo && wt[static_cast<std::size_t>(hi - 1)] == 0.0) --hi;
          for (int y = 0; y < h; ++y) {
            const double* row = ch + static_cast<std::size_t>(y) * w + x0;
            double acc = 0.0;
            for (int d = lo; d < hi; ++d) acc += row[d] * wt[static_cast<std::size_t>(d)];
            horiz[hidx(o, i, gx, y)] = acc;
          }
        }
      }
    }

    std::array<double, kSiftDim> desc{};
    for (int gy = 0; gy < ny; ++gy) {
      const int y0 = gy * step;
      for (int gx = 0; gx < nx; ++gx) {
        desc.fill(0.0);
        for (int j = 0; j < kCells; ++j) {
          const auto& wt = weights[static_cast<std::size_t>(j)];
          for (int i = 0; i < kCells; ++i) {
            for (int o = 0; o < kAngleBins; ++o) {
              const double* col = &horiz[hidx(o, i, gx, y0)];
              double acc = 0.0;
              for (int d = 0; d < window; ++d) acc += col[d] * wt[static_cast<std::size_t>(d)];
              desc[static_cast<std::size_t>((j * kCells + i) * kAngleBins + o)] = acc;
            }
          }
        }
        normalize_descriptor(desc);
        set.add(std::span<const double>(desc),
                DescriptorGeometry{static_cast<float>(gx * step + 2 * bin),
                                   static_cast<float>(y0 + 2 * bin),
                                   static_cast<float>(bin)});
      }
    }
  }
  return set;
}

}  // namespace eradate
