#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eradate/classification.hpp"
#include "eradate/color.hpp"
#include "eradate/config.hpp"
#include "eradate/corpus.hpp"
#include "eradate/dunnet.hpp"
#include "eradate/encoding.hpp"

namespace eradate {

enum class FeatureKind { kIfvSift, kCn11, kDd25, kDd50, kRcc, kDunnet };

// Config spelling: ifv_sift, cn11, dd25, dd50, rcc, dunnet.
std::string_view feature_name(FeatureKind k);
// Report spelling: IFV, CN, DD25, DD50, RCC, DunNet.
std::string_view feature_label(FeatureKind k);
FeatureKind parse_feature(std::string_view s);
const std::vector<FeatureKind>& all_features();

using Progress = std::function<void(const std::string&)>;

struct PipelineConfig {
  std::vector<FeatureKind> features{FeatureKind::kIfvSift, FeatureKind::kRcc,
                                    FeatureKind::kDunnet};
  // Kernel weight per entry of `features`; empty means uniform.
  std::vector<double> kernel_weights;

  int sift_step = 4;
  int sift_scales = 5;
  PatchGrid color_grid;

  int gmm_components = 128;
  std::size_t gmm_max_descriptors = 1'000'000;
  int gmm_max_iter = 100;
  double gmm_tol = 1e-6;
  PosteriorMode posterior = PosteriorMode::kWeighted;
  // Linear on the signed IFV, or chi2 on its absolute values.
  KernelKind ifv_kernel = KernelKind::kLinear;

  int bow_centers = 512;
  std::size_t bow_max_descriptors = 500'000;
  int color_codes = kDefaultColorCodes;
  int rcc_grid = 4;
  int dd_bins = kDefaultLabBins;
  std::size_t dd_max_pixels = 2'000'000;
  // Pixels kept per training image for the color models, summed over the
  // training set.
  std::size_t color_pixel_budget = 4'000'000;
  std::string color_name_table;  // CSV path; empty selects the HSV rules

  NetConfig net;
  TrainSchedule schedule;
  std::vector<double> augment_angles = default_augment_angles();
  bool augment_flip = true;

  CropSpec crops;
  int predict_side = kPredictShorterSide;
  std::vector<double> c_grid = default_c_grid();

  // Throws BadFormat on unknown keys or malformed values.
  static PipelineConfig from_config(const Config& config);
  Config to_config() const;
  void validate() const;

  bool uses(FeatureKind k) const;
  double weight_of(FeatureKind k) const;
  static const std::vector<std::string>& known_keys();
};

// Images addressed by index, loaded on demand.
struct ImageList {
  std::size_t size = 0;
  std::function<Image(std::size_t)> image;
  std::vector<int> labels;
};

// Loads manifest entries; predict rows are resized to `predict_side`.
ImageList entry_images(const std::vector<ManifestEntry>& entries, int predict_side);
ImageList memory_images(const std::vector<Image>& images, std::vector<int> labels);

struct PipelineModels {
  PipelineConfig config;
  std::uint64_t seed = 0;
  ColorNameTable cn_table;
  std::optional<GmmModel> gmm;
  std::map<FeatureKind, DdPartition> dd;
  std::map<FeatureKind, KmeansModel> bow;
  std::optional<ColorCodebook> codebook;
  std::optional<NetParams<float>> net;
  std::vector<TrainLogEntry> net_log;
};

// Fits every encoder the configured features need on the training images:
// the GMM for IFV, DD partitions and BoW vocabularies for the local color
// features, the color codebook for RCC and the network for DunNet.
PipelineModels fit_models(const PipelineConfig& config, const ImageList& train,
                          std::uint64_t seed, const Progress& progress = {});

// Local descriptors the BoW/FV features are built from.
DescriptorSet local_descriptors(const PipelineModels& models, FeatureKind kind,
                                const Image& rgb);

// Global feature vectors of one image, one per entry of `kinds` (empty
// selects the configured features).
std::vector<std::vector<double>> extract_image(const PipelineModels& models,
                                               const Image& rgb,
                                               const std::vector<FeatureKind>& kinds = {});

// One row per image for every configured feature.
struct FeatureBank {
  std::vector<FeatureKind> kinds;
  std::vector<Matrix> features;
  std::vector<int> labels;

  const Matrix& of(FeatureKind k) const;
  std::size_t rows() const { return labels.size(); }
};

FeatureBank extract_features(const PipelineModels& models, const ImageList& images,
                             const std::vector<FeatureKind>& kinds = {},
                             const Progress& progress = {});

// One kFeatures container per feature (rows = images, meta = labels).
void save_feature_bank(const FeatureBank& bank, const std::filesystem::path& dir);

// Kernel recipe of a feature under the pipeline settings.
KernelBlock kernel_block(const PipelineConfig& config, FeatureKind k);

// Bundle directory: pipeline.json plus one model file per encoder and
// classifier.
struct ModelBundle {
  PipelineModels models;
  // Classifier per task name ("six" or "<EraA>-<EraB>") and the feature
  // combination it was trained on.
  std::map<std::string, FeatureClassifier> classifiers;
  std::vector<FeatureKind> classifier_features;
};

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
// Throws MissingModel if the directory or a listed model file is absent.
ModelBundle load_bundle(const std::filesystem::path& dir);

// Predicted labels of images with a bundle classifier. Throws MissingModel
// for an unknown task.
std::vector<int> classify_images(const ModelBundle& bundle, const std::string& task,
                                 const std::vector<Image>& images);

}  // namespace eradate
