#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "eradate/container.hpp"
#include "eradate/corpus.hpp"
#include "eradate/descriptor_set.hpp"
#include "eradate/encoding.hpp"
#include "eradate/image.hpp"

namespace eradate {

// ---------------------------------------------------------------- color names

inline constexpr int kNumColorNames = 11;

// Fixed term order used by tables and descriptors.
const std::array<std::string_view, kNumColorNames>& color_name_terms();
int color_name_index(std::string_view term);

// p(name | rgb) sampled on a resolution^3 grid of RGB bin centers. Row
// (r, g, b) sits at index (r * res + g) * res + b.
class ColorNameTable {
 public:
  ColorNameTable() = default;
  ColorNameTable(int resolution, std::vector<double> probs);

  int resolution() const { return resolution_; }
  const std::vector<double>& probs() const { return probs_; }
  std::span<const double> row(int r, int g, int b) const;
  // Row of the bin whose center is nearest to the given sRGB value.
  std::span<const double> lookup(double r, double g, double b) const;
  int bin_of(double v) const;

 private:
  int resolution_ = 0;
  std::vector<double> probs_;
};

// One-hot name for an sRGB value from HSV thresholds:
//   black  V < 0.15
//   white  S < 0.12 and V > 0.85
//   grey   S < 0.12
//   hue sectors (degrees): red [0,15) and [345,360), orange [15,45),
//   yellow [45,70), green [70,170), blue [170,260), purple [260,300),
//   pink [300,345); orange with V < 0.6 is brown.
int fallback_color_name(double r, double g, double b);
ColorNameTable fallback_color_name_table(int resolution = 32);

// CSV with header r,g,b followed by the 11 terms; one row per bin center.
ColorNameTable load_color_name_table(const std::filesystem::path& path);
ColorNameTable parse_color_name_table(std::string_view text);
void save_color_name_table(const ColorNameTable& table,
                           const std::filesystem::path& path);

// Mean of the per-pixel name distributions over an RGB region.
std::array<double, kNumColorNames> cn_descriptor(const Image& region,
                                                 const ColorNameTable& table);

// Patches of the given side lengths centered on a lattice of spacing `step`
// (centers are multiples of step and the whole patch lies in the image).
struct PatchGrid {
  int step = 5;
  std::vector<int> sides{12, 20};
};

// Top-left corners and side of every patch of the grid, side-major.
struct Patch {
  int x = 0;
  int y = 0;
  int side = 0;
};
std::vector<Patch> plan_patches(int width, int height, const PatchGrid& grid);

DescriptorSet cn_local_descriptors(const Image& rgb, const ColorNameTable& table,
                                   const PatchGrid& grid = {});

// ------------------------------------------------------ discriminative colors

inline constexpr int kDefaultLabBins = 8;

// Bin of a Lab value on a bins^3 grid over L in [0,100], a and b in
// [-128,128). Out-of-range values clamp to the edge bins.
int lab_bin(double l, double a, double b, int bins);

struct IbResult {
  // Cluster id in [0, r) of every input item. Ids are numbered by the
  // lowest item index they contain.
  std::vector<int> cluster_of_item;
  // Mutual information I(cluster; class) before the first merge and after
  // each merge.
  std::vector<double> mutual_information;
  // Merged pair per step as (kept, absorbed) item representatives.
  std::vector<std::pair<int, int>> merges;
};

// Mutual information between item and class for a joint count table.
double mutual_information(const std::vector<std::vector<double>>& joint);
// Loss of I(cluster; class) caused by merging two clusters given their
// joint class counts and the total count.
double merge_loss(const std::vector<double>& a, const std::vector<double>& b,
                  double total);

// Agglomerative information bottleneck on rows of `joint` (items x classes
// counts): repeatedly merges the pair with the smallest loss (lowest
// (i, j) on ties) until `r` clusters remain.
IbResult agglomerative_ib(const std::vector<std::vector<double>>& joint, int r);

struct DdPartition {
  int r = 0;
  int bins = kDefaultLabBins;
  std::vector<int> assignment;  // bins^3 entries, category in [0, r)

  int category(double l, double a, double b) const {
    return assignment[static_cast<std::size_t>(lab_bin(l, a, b, bins))];
  }
};

struct DdOptions {
  int r = 50;
  int bins = kDefaultLabBins;
  // Pixels sampled across all images for the joint counts.
  std::size_t max_pixels = 2'000'000;
  std::uint64_t seed = 0;
};

// Throws SingleClass with fewer than two labeled classes and TooFewBins
// when fewer than r Lab bins are occupied.
DdPartition train_dd_partition(const std::vector<LabeledImage>& images,
                               const DdOptions& options);

std::vector<double> dd_descriptor(const Image& region, const DdPartition& part);
DescriptorSet dd_local_descriptors(const Image& rgb, const DdPartition& part,
                                   const PatchGrid& grid = {});

// meta [r, bins], rows 1, cols bins^3
Container to_container(const DdPartition& p);
DdPartition dd_from_container(const Container& c);
void save_dd_partition(const DdPartition& p, const std::filesystem::path& path);
DdPartition load_dd_partition(const std::filesystem::path& path);

// ------------------------------------------------------ color co-occurrence

inline constexpr int kDefaultColorCodes = 128;
inline constexpr std::size_t kColorCodebookPixelCap = 200'000;

struct ColorCodebook {
  Matrix centers;  // codes x 3, Lab

  int codes() const { return static_cast<int>(centers.rows()); }
};

// Uniform sample (without replacement) of at most `max_pixels` Lab pixels
// across the images, in image/raster order.
Matrix sample_lab_pixels(const std::vector<LabeledImage>& images,
                         std::size_t max_pixels, std::uint64_t seed);

ColorCodebook train_color_codebook(const std::vector<LabeledImage>& images,
                                   int codes, std::uint64_t seed,
                                   std::size_t max_pixels = kColorCodebookPixelCap);

// Nearest code of every pixel of an RGB image, row-major.
std::vector<int> assign_color_codes(const Image& rgb, const ColorCodebook& book);

// codes x codes co-occurrence of cell histograms summed over all ordered
// pairs of 4-adjacent cells of a grid x grid partition, L1-normalized
// once. Flattened row-major.
std::vector<double> rcc_from_codes(const std::vector<int>& codes, int width,
                                   int height, int num_codes, int grid);
EncodedVector rcc_descriptor(const Image& rgb, const ColorCodebook& book,
                             int grid = 4);

Container to_container(const ColorCodebook& b);
ColorCodebook codebook_from_container(const Container& c);
void save_color_codebook(const ColorCodebook& b, const std::filesystem::path& path);
ColorCodebook load_color_codebook(const std::filesystem::path& path);

}  // namespace eradate
