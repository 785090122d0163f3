#pragma once

#include <array>
#include <span>
#include <vector>

#include "eradate/descriptor_set.hpp"
#include "eradate/scale_space.hpp"

namespace eradate {

inline constexpr int kSiftDim = 128;
inline constexpr int kOrientationBins = 36;
inline constexpr double kPeakRatio = 0.8;
inline constexpr double kDescriptorClamp = 0.2;
// Descriptor spatial bin size = kSiftMagnification * keypoint sigma.
inline constexpr double kSiftMagnification = 3.0;

// L2 normalize, clamp each component at 0.2, renormalize. Entries can end
// above 0.2 after the second normalization. Zero vectors stay zero.
void normalize_descriptor(std::span<double> v);

struct SiftDescriptor {
  std::array<double, kSiftDim> vector{};
  double x = 0.0;
  double y = 0.0;
  double bin_size = 0.0;
  double orientation = 0.0;
};

// 36-bin orientation histogram around (x, y), bins centered on multiples
// of 10 degrees, weighted by magnitude and a Gaussian of sigma 1.5*sigma
// over a window of radius round(3*sigma). Every bin reaching 80% of the
// maximum yields one orientation (its center, in [0, 2pi)). A window with
// no gradient returns {0}.
std::vector<double> principal_orientations(int x, int y,
                                           const GradientField& grad,
                                           double sigma);

// Raw descriptor sampling. The 4x4 spatial grid of `bin_size` pixel cells is
// centered on (x, y) (pixel-center coordinates) and rotated by `angle`;
// each pixel inside the 4x4 window votes trilinearly into (cell, 8 angle
// bins). `gaussian_window` adds Lowe's Gaussian weight of half the window
// width. Output is L2-normalized, clamped at 0.2 and renormalized; a
// window without gradient yields the zero vector.
SiftDescriptor sift_at(const GradientField& grad, double x, double y,
                       double angle, double bin_size, bool gaussian_window);

// Descriptor for a detected key point, computed on the scale-space level it
// was detected at, using its stored orientation.
SiftDescriptor sift_at(const KeyPoint& kp, const ScaleSpace& space);

// Full sparse pipeline: DoG detection, principal orientations (one key point
// per orientation) and descriptors.
std::vector<SiftDescriptor> sparse_sift(const Image& gray,
                                        double contrast_floor =
                                            kDefaultContrastFloor,
                                        int num_levels = 6);

// Bin size in pixels for dense scale s (0-based): 4, 6, 8, 10, 12, ...
inline int dense_bin_size(int scale) { return 4 + 2 * scale; }

// Number of grid positions along an axis of `extent` pixels: the window of
// 4*bin must lie inside the image.
int dense_grid_count(int extent, int step, int bin);

// Upright dense SIFT. Scale s uses bin size dense_bin_size(s) on level s of
// a single-octave scale space (sigma0 1.6, 3 levels/octave). Grid positions
// are x = 2*bin + k*step with x + 2*bin <= W; each descriptor equals
// sift_at(grad_s, x - 0.5, y - 0.5, 0, bin, false). Geometry stores (x, y)
// on the pixel-edge lattice and the bin size.
DescriptorSet dense_sift(const Image& gray, int step, int num_scales);

}  // namespace eradate
