#include "eradate/scale_space.hpp"

#include <cmath>

#include "eradate/error.hpp"

namespace eradate {

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "sigma must be positive");
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

Image gaussian_blur(const Image& gray, double sigma) {
  if (gray.channels() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "gaussian_blur expects one channel");
  }
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int w = gray.width();
  const int h = gray.height();
  Image tmp(w, h, 1);
  std::vector<double> row(w + 2 * r);
  for (int y = 0; y < h; ++y) {
    for (int x = -r; x < w + r; ++x) row[x + r] = gray.clamped(x, y);
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < 2 * r + 1; ++i) acc += k[i] * row[x + i];
      tmp.at(x, y) = acc;
    }
  }
  Image out(w, h, 1);
  std::vector<double> col(h + 2 * r);
  for (int x = 0; x < w; ++x) {
    for (int y = -r; y < h + r; ++y) col[y + r] = tmp.clamped(x, y);
    for (int y = 0; y < h; ++y) {
      double acc = 0.0;
      for (int i = 0; i < 2 * r + 1; ++i) acc += k[i] * col[y + i];
      out.at(x, y) = acc;
    }
  }
  return out;
}

ScaleSpace build_scale_space(const Image& gray, double sigma0,
                             int levels_per_octave, int num_levels) {
  if (!(sigma0 > 0.0) || levels_per_octave < 1 || num_levels < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad scale-space parameters");
  }
  ScaleSpace space;
  space.base = gray;
  space.levels.reserve(num_levels);
  for (int c = 0; c < num_levels; ++c) {
    const double sigma =
        sigma0 * std::pow(2.0, static_cast<double>(c) / levels_per_octave);
    space.levels.push_back({sigma, gaussian_blur(gray, sigma)});
  }
  return space;
}

DogStack dog(const ScaleSpace& space) {
  if (space.levels.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "DoG needs at least two levels");
  }
  DogStack stack;
  for (std::size_t c = 0; c + 1 < space.levels.size(); ++c) {
    const Image& lo = space.levels[c].image;
    const Image& hi = space.levels[c + 1].image;
    Image d(lo.width(), lo.height(), 1);
    for (std::size_t i = 0; i < d.size(); ++i) {
      d.data()[i] = hi.data()[i] - lo.data()[i];
    }
    stack.layers.push_back({space.levels[c].sigma, std::move(d)});
  }
  return stack;
}

std::vector<KeyPoint> detect_keypoints(const DogStack& stack,
                                       double contrast_floor) {
  std::vector<KeyPoint> out;
  const int layers = static_cast<int>(stack.layers.size());
  if (layers < 3) return out;
  const int w = stack.layers[0].image.width();
  const int h = stack.layers[0].image.height();
  for (int c = 1; c + 1 < layers; ++c) {
    const Image* planes[3] = {&stack.layers[c - 1].image,
                              &stack.layers[c].image,
                              &stack.layers[c + 1].image};
    for (int y = 1; y + 1 < h; ++y) {
      for (int x = 1; x + 1 < w; ++x) {
        const double v = planes[1]->at(x, y);
        if (std::abs(v) < contrast_floor) continue;
        bool is_max = true;
        bool is_min = true;
        for (int s = 0; s < 3 && (is_max || is_min); ++s) {
          for (int dy = -1; dy <= 1 && (is_max || is_min); ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (s == 1 && dx == 0 && dy == 0) continue;
              const double n = planes[s]->at(x + dx, y + dy);
              if (!(v > n)) is_max = false;
              if (!(v < n)) is_min = false;
            }
          }
        }
        if (is_max || is_min) {
          out.push_back({static_cast<double>(x), static_cast<double>(y), c,
                         stack.layers[c].sigma, 0.0});
        }
      }
    }
  }
  return out;
}

GradientField gradient(const Image& level) {
  const int w = level.width();
  const int h = level.height();
  GradientField g{Image(w, h, 1), Image(w, h, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = level.clamped(x + 1, y) - level.clamped(x - 1, y);
      const double fy = level.clamped(x, y + 1) - level.clamped(x, y - 1);
      g.magnitude.at(x, y) = std::sqrt(fx * fx + fy * fy);
      g.orientation.at(x, y) =
          (fx == 0.0 && fy == 0.0) ? 0.0 : std::atan2(fy, fx);
    }
  }
  return g;
}

}  // namespace eradate
