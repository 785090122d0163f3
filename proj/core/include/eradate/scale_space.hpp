#pragma once

#include <vector>

#include "eradate/image.hpp"

namespace eradate {

struct ScaleLevel {
  double sigma = 0.0;
  Image image;
};

// Gaussian scale space of a grayscale image. Every level is the base image
// convolved directly with a Gaussian of the level's sigma.
struct ScaleSpace {
  Image base;
  std::vector<ScaleLevel> levels;
};

// Difference-of-Gaussian stack; layer c = levels[c+1] - levels[c] and
// carries levels[c].sigma.
struct DogStack {
  std::vector<ScaleLevel> layers;
};

struct KeyPoint {
  double x = 0.0;  // pixel-center coordinates
  double y = 0.0;
  int scale_index = 0;  // DoG layer, always interior
  double sigma = 0.0;
  double orientation = 0.0;  // radians

  bool operator==(const KeyPoint&) const = default;
};

inline constexpr double kDefaultSigma0 = 1.6;
inline constexpr int kDefaultLevelsPerOctave = 3;
inline constexpr double kDefaultContrastFloor = 0.01;

// Sampled Gaussian, radius ceil(3 sigma), normalized to unit sum.
std::vector<double> gaussian_kernel(double sigma);
// Separable Gaussian blur with replicated borders.
Image gaussian_blur(const Image& gray, double sigma);

// sigma_c = sigma0 * 2^(c / levels_per_octave), c = 0..num_levels-1.
ScaleSpace build_scale_space(const Image& gray, double sigma0,
                             int levels_per_octave, int num_levels);

DogStack dog(const ScaleSpace& space);

// Emits a key point wherever a DoG sample is strictly above or strictly
// below all 26 neighbours in its 3x3x3 neighbourhood and |D| >= floor.
// Border pixels and the outermost layers are never candidates.
std::vector<KeyPoint> detect_keypoints(const DogStack& stack,
                                       double contrast_floor);

struct GradientField {
  Image magnitude;    // sqrt(fx^2 + fy^2)
  Image orientation;  // atan2(fy, fx), 0 where the gradient vanishes
};

// Central differences without the 1/2 factor; borders replicate.
GradientField gradient(const Image& level);

}  // namespace eradate
