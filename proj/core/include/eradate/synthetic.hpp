#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "eradate/corpus.hpp"
#include "eradate/image.hpp"

namespace eradate {

// Frozen parameters of the six synthetic styles. Class k draws its stroke
// hues from [hue_lo[k], hue_lo[k] + kStyleHueWidth), its arc radii around
// radius_mean[k] and its background texture at cell size texture_cell[k].
struct StyleParams {
  std::array<double, kNumEras> hue_lo{};
  std::array<double, kNumEras> radius_mean{};
  std::array<double, kNumEras> texture_cell{};
};

inline constexpr double kStyleHueWidth = 50.0;
inline constexpr int kSyntheticSide = 400;
inline constexpr int kSyntheticPaintingSide = 1200;

const StyleParams& synthetic_styles();

// One painting of class `label`. Lengths (radii, widths, texture cells)
// are multiplied by `length_scale`, so a 1200 px painting with scale 2
// shows the same style as 400 px samples once resized to 600 px.
Image render_synthetic(int label, int side, double length_scale, std::uint64_t seed);

// Per-class split counts mirroring 3000/700/160, by largest remainder.
std::array<int, 3> synthetic_split_counts(int per_class);

struct SyntheticOptions {
  int per_class = 100;
  // Full-size paintings written as predict rows, labels cycling through
  // the classes.
  int paintings = 0;
  std::uint64_t seed = 0;
};

// Writes <class>/<nnnn>.png, predict/<nn>.png and manifest.csv under `dir`
// and returns the manifest. Throws InvalidArgument for per_class < 10.
Manifest generate_synthetic_corpus(const std::filesystem::path& dir,
                                   const SyntheticOptions& options);

}  // namespace eradate
