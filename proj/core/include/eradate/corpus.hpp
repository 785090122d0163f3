#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eradate/image.hpp"

namespace eradate {

// Creation eras in chronological order; the enumerator value is the class
// index used by every classifier.
enum class Era : int {
  kSui = 0,
  kEarlyTang = 1,
  kPeakTang = 2,
  kMiddleTang = 3,
  kLateTang = 4,
  kWuDai = 5,
};

inline constexpr int kNumEras = 6;

std::string_view era_name(int index);
std::optional<int> parse_era(std::string_view name);

enum class Split { kTrain, kTest, kVal, kPredict };

std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view name);

struct ManifestEntry {
  std::string id;               // path as written in the manifest
  std::filesystem::path path;   // resolved against the manifest directory
  std::optional<int> label;     // absent only for "?" on predict rows
  Split split = Split::kTrain;
};

struct Manifest {
  std::filesystem::path root;
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
};

// Parses `path,label,split` CSV. Paths are relative to the manifest's
// directory. Throws MissingFile, BadLabel, BadSplit, BadFormat.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(std::string_view text,
                        const std::filesystem::path& root,
                        bool check_files = true);
void save_manifest(const Manifest& manifest, const std::filesystem::path& path);

struct LabeledImage {
  std::string id;
  Image pixels;
  std::optional<int> label;
  Split split = Split::kTrain;
};

inline constexpr int kMinImageSide = 32;
inline constexpr int kPredictShorterSide = 600;

// Decodes an entry. Predict-split images are resized so their shorter side
// equals `predict_side` (0 disables).
LabeledImage load_labeled_image(const ManifestEntry& entry,
                                int predict_side = kPredictShorterSide);

// Rotation angles -10..10 step 2.5 degrees.
std::vector<double> default_augment_angles();

// One output per (image, angle, flip) in image-major order; for each angle
// the unflipped rotation precedes its horizontal mirror.
std::vector<LabeledImage> augment(const std::vector<LabeledImage>& images,
                                  const std::vector<double>& angles,
                                  bool flip);

// Lazy equivalent of augment(): element i is produced on demand and is
// identical to augment(images, angles, flip)[i].
class AugmentedView {
 public:
  AugmentedView(const std::vector<LabeledImage>* images,
                std::vector<double> angles, bool flip);

  std::size_t size() const;
  Image pixels(std::size_t i) const;
  int label(std::size_t i) const;

 private:
  const std::vector<LabeledImage>* images_;
  std::vector<double> angles_;
  bool flip_;
};

struct CropSpec {
  std::vector<double> scales{0.8, 0.9, 1.0, 1.1, 1.2};
  int crops_per_scale = 20;
  int target_side = 400;
  std::uint64_t seed = 0;
};

struct CropWindow {
  double scale = 1.0;
  int x = 0;
  int y = 0;
  int side = 0;

  bool operator==(const CropWindow&) const = default;
};

// Window geometry for sample_crops. Positions are uniform over all valid
// placements, drawn from Rng(spec.seed) scale by scale.
std::vector<CropWindow> plan_crops(int width, int height, const CropSpec& spec);
std::vector<Image> sample_crops(const Image& img, const CropSpec& spec);

}  // namespace eradate
