#include "eradate/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#include "eradate/error.hpp"
#include "eradate/rng.hpp"

namespace eradate {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInkCoverage = 0.12;
constexpr double kTextureAmplitude = 0.08;

void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
  h = std::fmod(h, 360.0);
  if (h < 0.0) h += 360.0;
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0.0, g = 0.0, b = 0.0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = v - c;
  rgb[0] = r + m;
  rgb[1] = g + m;
  rgb[2] = b + m;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Parchment ground modulated by value noise on a lattice of `cell` pixels.
void paint_background(Image& img, double cell, Rng& rng) {
  const int w = img.width();
  const int h = img.height();
  const int gw = static_cast<int>(std::ceil(w / cell)) + 2;
  const int gh = static_cast<int>(std::ceil(h / cell)) + 2;
  std::vector<double> lattice(static_cast<std::size_t>(gw) * gh);
  for (auto& v : lattice) v = rng.uniform(-1.0, 1.0);
  const double base[3] = {0.86, 0.79, 0.64};
  const double tint = rng.uniform(-0.03, 0.03);
  for (int y = 0; y < h; ++y) {
    const double fy = y / cell;
    const int iy = static_cast<int>(fy);
    const double ty = smooth(fy - iy);
    for (int x = 0; x < w; ++x) {
      const double fx = x / cell;
      const int ix = static_cast<int>(fx);
      const double tx = smooth(fx - ix);
      auto at = [&](int gx, int gy) { return lattice[static_cast<std::size_t>(gy) * gw + gx]; };
      const double top = at(ix, iy) * (1.0 - tx) + at(ix + 1, iy) * tx;
      const double bottom = at(ix, iy + 1) * (1.0 - tx) + at(ix + 1, iy + 1) * tx;
      const double n = top * (1.0 - ty) + bottom * ty;
      for (int c = 0; c < 3; ++c) {
        img.at(x, y, c) = std::clamp(base[c] + tint + kTextureAmplitude * n, 0.0, 1.0);
      }
    }
  }
}

struct Arc {
  double cx, cy, radius, start, sweep, width, alpha;
  double color[3];
};

void draw_arc(Image& img, const Arc& a) {
  const double half = 0.5 * a.width + 1.0;
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  constexpr int kSamples = 64;
  for (int s = 0; s <= kSamples; ++s) {
    const double t = a.start + a.sweep * s / kSamples;
    const double px = a.cx + a.radius * std::cos(t);
    const double py = a.cy + a.radius * std::sin(t);
    x0 = std::min(x0, px);
    y0 = std::min(y0, py);
    x1 = std::max(x1, px);
    y1 = std::max(y1, py);
  }
  // The sampled polygon can undercut the arc by at most r(1 - cos(step/2)).
  const double slack = half + a.radius * (1.0 - std::cos(0.5 * a.sweep / kSamples)) + 1.0;
  const int bx0 = std::max(0, static_cast<int>(std::floor(x0 - slack)));
  const int by0 = std::max(0, static_cast<int>(std::floor(y0 - slack)));
  const int bx1 = std::min(img.width() - 1, static_cast<int>(std::ceil(x1 + slack)));
  const int by1 = std::min(img.height() - 1, static_cast<int>(std::ceil(y1 + slack)));
  const double ex0 = a.cx + a.radius * std::cos(a.start);
  const double ey0 = a.cy + a.radius * std::sin(a.start);
  const double ex1 = a.cx + a.radius * std::cos(a.start + a.sweep);
  const double ey1 = a.cy + a.radius * std::sin(a.start + a.sweep);
  for (int y = by0; y <= by1; ++y) {
    for (int x = bx0; x <= bx1; ++x) {
      const double dx = x - a.cx;
      const double dy = y - a.cy;
      double rel = std::atan2(dy, dx) - a.start;
      rel = std::fmod(rel, kTwoPi);
      if (rel < 0.0) rel += kTwoPi;
      double d;
      if (rel <= a.sweep) {
        d = std::abs(std::hypot(dx, dy) - a.radius);
      } else {
        d = std::min(std::hypot(x - ex0, y - ey0), std::hypot(x - ex1, y - ey1));
      }
      const double cover = std::clamp(0.5 * a.width + 0.5 - d, 0.0, 1.0);
      if (cover <= 0.0) continue;
      const double alpha = cover * a.alpha;
      for (int c = 0; c < 3; ++c) {
        double& p = img.at(x, y, c);
        p = p * (1.0 - alpha) + a.color[c] * alpha;
      }
    }
  }
}

}  // namespace

const StyleParams& synthetic_styles() {
  static const StyleParams params{
      {0.0, 60.0, 120.0, 180.0, 240.0, 300.0},
      {4.0, 7.0, 12.0, 20.0, 34.0, 58.0},
      {2.0, 3.0, 5.0, 8.0, 12.0, 18.0},
  };
  return params;
}

Image render_synthetic(int label, int side, double length_scale, std::uint64_t seed) {
  if (label < 0 || label >= kNumEras) {
    throw Error(ErrorCode::kBadLabel, "synthetic label out of range");
  }
  if (side < kMinImageSide || !(length_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bad synthetic image geometry");
  }
  const auto& style = synthetic_styles();
  const auto k = static_cast<std::size_t>(label);
  Rng rng(seed);
  Image img(side, side, 3);
  paint_background(img, style.texture_cell[k] * length_scale, rng);

  const double target = kInkCoverage * side * side;
  double ink = 0.0;
  while (ink < target) {
    Arc a{};
    a.radius = style.radius_mean[k] * length_scale * std::exp(0.2 * rng.normal());
    const double length = rng.uniform(40.0, 100.0) * length_scale;
    a.sweep = std::min(1.5 * std::numbers::pi, length / a.radius);
    a.start = rng.uniform(0.0, kTwoPi);
    a.cx = rng.uniform(0.0, side);
    a.cy = rng.uniform(0.0, side);
    a.width = rng.uniform(1.2, 2.6) * length_scale;
    a.alpha = rng.uniform(0.85, 0.95);
    hsv_to_rgb(style.hue_lo[k] + rng.uniform(0.0, kStyleHueWidth), rng.uniform(0.45, 0.9),
               rng.uniform(0.3, 0.8), a.color);
    draw_arc(img, a);
    ink += a.sweep * a.radius * a.width;
  }
  return img;
}

std::array<int, 3> synthetic_split_counts(int per_class) {
  constexpr std::array<int, 3> kShares{3000, 700, 160};
  constexpr int kTotal = 3860;
  std::array<int, 3> counts{};
  std::array<long, 3> remainder{};
  int assigned = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    const long num = static_cast<long>(per_class) * kShares[s];
    counts[s] = static_cast<int>(num / kTotal);
    remainder[s] = num % kTotal;
    assigned += counts[s];
  }
  // Leftover samples go to the largest remainders, earlier split on ties.
  while (assigned < per_class) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < 3; ++s) {
      if (remainder[s] > remainder[best]) best = s;
    }
    ++counts[best];
    remainder[best] = -1;
    ++assigned;
  }
  return counts;
}

Manifest generate_synthetic_corpus(const std::filesystem::path& dir,
                                   const SyntheticOptions& options) {
  if (options.per_class < 10) {
    throw Error(ErrorCode::kInvalidArgument, "per_class must be at least 10");
  }
  if (options.paintings < 0) throw Error(ErrorCode::kInvalidArgument, "paintings < 0");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());

  Manifest m;
  m.root = dir;
  const auto counts = synthetic_split_counts(options.per_class);
  char name[32];
  for (int label = 0; label < kNumEras; ++label) {
    const std::string era(era_name(label));
    std::filesystem::create_directories(dir / era, ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (dir / era).string());
    for (int i = 0; i < options.per_class; ++i) {
      std::snprintf(name, sizeof(name), "%04d.png", i);
      ManifestEntry e;
      e.id = era + "/" + name;
      e.path = dir / e.id;
      e.label = label;
      e.split = i < counts[0] ? Split::kTrain
                : i < counts[0] + counts[1] ? Split::kTest
                                            : Split::kVal;
      const auto seed = Rng::derive(options.seed, static_cast<std::uint64_t>(label) * 100003u + i);
      save_png(render_synthetic(label, kSyntheticSide, 1.0, seed), e.path);
      m.entries.push_back(std::move(e));
    }
  }
  if (options.paintings > 0) {
    std::filesystem::create_directories(dir / "predict", ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (dir / "predict").string());
  }
  for (int i = 0; i < options.paintings; ++i) {
    std::snprintf(name, sizeof(name), "%02d.png", i);
    ManifestEntry e;
    e.id = std::string("predict/") + name;
    e.path = dir / e.id;
    e.label = i % kNumEras;
    e.split = Split::kPredict;
    const auto seed = Rng::derive(options.seed, 0x7000000u + static_cast<std::uint64_t>(i));
    save_png(render_synthetic(*e.label, kSyntheticPaintingSide,
                              static_cast<double>(kSyntheticPaintingSide) / kPredictShorterSide, seed),
             e.path);
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, dir / "manifest.csv");
  return m;
}

}  // namespace eradate
