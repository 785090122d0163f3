#include "eradate/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <json.hpp>
#include <set>
#include <sstream>

#include "eradate/error.hpp"
#include "eradate/rng.hpp"
#include "eradate/sift.hpp"

namespace eradate {

namespace {

constexpr std::uint64_t kSaltGmm = 1;
constexpr std::uint64_t kSaltGmmSample = 2;
constexpr std::uint64_t kSaltBow = 10;
constexpr std::uint64_t kSaltBowSample = 20;
constexpr std::uint64_t kSaltDd = 30;
constexpr std::uint64_t kSaltPixels = 40;
constexpr std::uint64_t kSaltCodebook = 41;
constexpr std::uint64_t kSaltNetInit = 50;
constexpr std::uint64_t kSaltNetTrain = 51;

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

int to_int(long v, const char* key) {
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::kBadFormat, std::string("config ") + key + ": out of range");
  }
  return static_cast<int>(v);
}

std::size_t to_size(long v, const char* key) {
  if (v < 0) throw Error(ErrorCode::kBadFormat, std::string("config ") + key + ": negative");
  return static_cast<std::size_t>(v);
}

int dd_categories(FeatureKind k) { return k == FeatureKind::kDd25 ? 25 : 50; }

// Appends `quota` rows of `set` drawn without replacement (all rows when
// the set is smaller) to `out`.
void sample_rows(const DescriptorSet& set, std::size_t quota, Rng& rng, std::vector<float>& out) {
  const std::size_t n = set.count();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n > quota) {
    for (std::size_t i = 0; i < quota; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(quota);
    std::sort(idx.begin(), idx.end());
  }
  for (std::size_t i : idx) {
    const auto r = set.row(i);
    out.insert(out.end(), r.begin(), r.end());
  }
}

Matrix rows_to_matrix(const std::vector<float>& rows, int dim) {
  const auto n = static_cast<Eigen::Index>(rows.size() / static_cast<std::size_t>(dim));
  Matrix m(n, dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) {
      m(i, d) = rows[static_cast<std::size_t>(i) * dim + d];
    }
  }
  return m;
}

// Random subset of an image's pixels as a one-row strip.
Image pixel_strip(const Image& rgb, std::size_t quota, Rng& rng) {
  const std::size_t n = rgb.size() / 3;
  if (n <= quota) return Image(rgb);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < quota; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform_int(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(quota);
  std::sort(idx.begin(), idx.end());
  Image strip(static_cast<int>(quota), 1, 3);
  const auto& d = rgb.data();
  for (std::size_t k = 0; k < quota; ++k) {
    for (int c = 0; c < 3; ++c) strip.data()[3 * k + c] = d[3 * idx[k] + c];
  }
  return strip;
}

std::size_t per_image(std::size_t budget, std::size_t images) {
  return std::max<std::size_t>(1, (budget + images - 1) / images);
}

void report(const Progress& progress, const std::string& msg) {
  if (progress) progress(msg);
}

std::vector<FeatureKind> resolve_kinds(const PipelineModels& models,
                                       const std::vector<FeatureKind>& kinds) {
  return kinds.empty() ? models.config.features : kinds;
}

void write_text(const std::filesystem::path& path, const std::string& s) {
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace

std::string_view feature_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::kIfvSift: return "ifv_sift";
    case FeatureKind::kCn11: return "cn11";
    case FeatureKind::kDd25: return "dd25";
    case FeatureKind::kDd50: return "dd50";
    case FeatureKind::kRcc: return "rcc";
    case FeatureKind::kDunnet: return "dunnet";
  }
  return "?";
}

std::string_view feature_label(FeatureKind k) {
  switch (k) {
    case FeatureKind::kIfvSift: return "IFV";
    case FeatureKind::kCn11: return "CN";
    case FeatureKind::kDd25: return "DD25";
    case FeatureKind::kDd50: return "DD50";
    case FeatureKind::kRcc: return "RCC";
    case FeatureKind::kDunnet: return "DunNet";
  }
  return "?";
}

const std::vector<FeatureKind>& all_features() {
  static const std::vector<FeatureKind> all{FeatureKind::kIfvSift, FeatureKind::kCn11,
                                            FeatureKind::kDd25,    FeatureKind::kDd50,
                                            FeatureKind::kRcc,     FeatureKind::kDunnet};
  return all;
}

FeatureKind parse_feature(std::string_view s) {
  for (FeatureKind k : all_features()) {
    if (s == feature_name(k)) return k;
  }
  throw Error(ErrorCode::kBadFormat, "unknown feature " + std::string(s));
}

// ---------------------------------------------------------------- config

const std::vector<std::string>& PipelineConfig::known_keys() {
  static const std::vector<std::string> keys{
      "features",       "kernel_weights",  "sift_step",          "sift_scales",
      "color_step",     "color_sides",     "gmm_components",     "gmm_max_descriptors",
      "gmm_max_iter",   "gmm_tol",         "posterior",          "ifv_kernel",
      "bow_centers",    "bow_max_descriptors", "color_codes",    "rcc_grid",
      "dd_bins",        "dd_max_pixels",   "color_pixel_budget", "color_name_table",
      "net_input",      "net_channels",    "net_fc1",            "net_fc2",
      "lr0",            "lr_decay",        "lr_decay_step",      "iterations",
      "batch",          "momentum",        "augment_angles",     "augment_flip",
      "crop_scales",    "crops_per_scale", "crop_side",          "predict_side",
      "c_grid",
  };
  return keys;
}

PipelineConfig PipelineConfig::from_config(const Config& c) {
  c.require_known(known_keys());
  PipelineConfig p;
  if (c.has("features")) {
    p.features.clear();
    std::istringstream in(c.get_string("features", ""));
    std::string item;
    while (std::getline(in, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t"));
      item.erase(item.find_last_not_of(" \t") + 1);
      if (!item.empty()) p.features.push_back(parse_feature(item));
    }
  }
  p.kernel_weights = c.get_doubles("kernel_weights", p.kernel_weights);
  p.sift_step = to_int(c.get_int("sift_step", p.sift_step), "sift_step");
  p.sift_scales = to_int(c.get_int("sift_scales", p.sift_scales), "sift_scales");
  p.color_grid.step = to_int(c.get_int("color_step", p.color_grid.step), "color_step");
  if (c.has("color_sides")) {
    p.color_grid.sides.clear();
    for (long s : c.get_ints("color_sides", {})) p.color_grid.sides.push_back(to_int(s, "color_sides"));
  }
  p.gmm_components = to_int(c.get_int("gmm_components", p.gmm_components), "gmm_components");
  p.gmm_max_descriptors = to_size(
      c.get_int("gmm_max_descriptors", static_cast<long>(p.gmm_max_descriptors)),
      "gmm_max_descriptors");
  p.gmm_max_iter = to_int(c.get_int("gmm_max_iter", p.gmm_max_iter), "gmm_max_iter");
  p.gmm_tol = c.get_double("gmm_tol", p.gmm_tol);
  if (c.has("posterior")) p.posterior = parse_posterior_mode(c.get_string("posterior", ""));
  if (c.has("ifv_kernel")) {
    const std::string k = c.get_string("ifv_kernel", "");
    if (k == "linear") {
      p.ifv_kernel = KernelKind::kLinear;
    } else if (k == "abs-chi2") {
      p.ifv_kernel = KernelKind::kChi2Exp;
    } else {
      throw Error(ErrorCode::kBadFormat, "ifv_kernel must be linear or abs-chi2");
    }
  }
  p.bow_centers = to_int(c.get_int("bow_centers", p.bow_centers), "bow_centers");
  p.bow_max_descriptors = to_size(
      c.get_int("bow_max_descriptors", static_cast<long>(p.bow_max_descriptors)),
      "bow_max_descriptors");
  p.color_codes = to_int(c.get_int("color_codes", p.color_codes), "color_codes");
  p.rcc_grid = to_int(c.get_int("rcc_grid", p.rcc_grid), "rcc_grid");
  p.dd_bins = to_int(c.get_int("dd_bins", p.dd_bins), "dd_bins");
  p.dd_max_pixels =
      to_size(c.get_int("dd_max_pixels", static_cast<long>(p.dd_max_pixels)), "dd_max_pixels");
  p.color_pixel_budget = to_size(
      c.get_int("color_pixel_budget", static_cast<long>(p.color_pixel_budget)),
      "color_pixel_budget");
  p.color_name_table = c.get_string("color_name_table", p.color_name_table);

  p.net.input_side = to_int(c.get_int("net_input", p.net.input_side), "net_input");
  if (c.has("net_channels")) {
    const auto ch = c.get_ints("net_channels", {});
    if (ch.size() != p.net.conv_channels.size()) {
      throw Error(ErrorCode::kBadFormat, "net_channels needs six values");
    }
    for (std::size_t i = 0; i < ch.size(); ++i) p.net.conv_channels[i] = to_int(ch[i], "net_channels");
  }
  p.net.fc1 = to_int(c.get_int("net_fc1", p.net.fc1), "net_fc1");
  p.net.fc2 = to_int(c.get_int("net_fc2", p.net.fc2), "net_fc2");
  p.schedule.lr0 = c.get_double("lr0", p.schedule.lr0);
  p.schedule.decay = c.get_double("lr_decay", p.schedule.decay);
  p.schedule.decay_step = to_int(c.get_int("lr_decay_step", p.schedule.decay_step), "lr_decay_step");
  p.schedule.total_iters = to_int(c.get_int("iterations", p.schedule.total_iters), "iterations");
  p.schedule.batch = to_int(c.get_int("batch", p.schedule.batch), "batch");
  p.schedule.momentum = c.get_double("momentum", p.schedule.momentum);
  p.augment_angles = c.get_doubles("augment_angles", p.augment_angles);
  p.augment_flip = c.get_bool("augment_flip", p.augment_flip);

  p.crops.scales = c.get_doubles("crop_scales", p.crops.scales);
  p.crops.crops_per_scale = to_int(c.get_int("crops_per_scale", p.crops.crops_per_scale), "crops_per_scale");
  p.crops.target_side = to_int(c.get_int("crop_side", p.crops.target_side), "crop_side");
  p.predict_side = to_int(c.get_int("predict_side", p.predict_side), "predict_side");
  p.c_grid = c.get_doubles("c_grid", p.c_grid);
  p.validate();
  return p;
}

Config PipelineConfig::to_config() const {
  Config c;
  std::string names;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (i) names += ',';
    names += feature_name(features[i]);
  }
  c.set("features", names);
  if (!kernel_weights.empty()) c.set("kernel_weights", join(kernel_weights));
  c.set("sift_step", std::to_string(sift_step));
  c.set("sift_scales", std::to_string(sift_scales));
  c.set("color_step", std::to_string(color_grid.step));
  c.set("color_sides", join(color_grid.sides));
  c.set("gmm_components", std::to_string(gmm_components));
  c.set("gmm_max_descriptors", std::to_string(gmm_max_descriptors));
  c.set("gmm_max_iter", std::to_string(gmm_max_iter));
  c.set("gmm_tol", format_double(gmm_tol));
  c.set("posterior", std::string(posterior_mode_name(posterior)));
  c.set("ifv_kernel", ifv_kernel == KernelKind::kLinear ? "linear" : "abs-chi2");
  c.set("bow_centers", std::to_string(bow_centers));
  c.set("bow_max_descriptors", std::to_string(bow_max_descriptors));
  c.set("color_codes", std::to_string(color_codes));
  c.set("rcc_grid", std::to_string(rcc_grid));
  c.set("dd_bins", std::to_string(dd_bins));
  c.set("dd_max_pixels", std::to_string(dd_max_pixels));
  c.set("color_pixel_budget", std::to_string(color_pixel_budget));
  if (!color_name_table.empty()) c.set("color_name_table", color_name_table);
  c.set("net_input", std::to_string(net.input_side));
  c.set("net_channels", join(std::vector<int>(net.conv_channels.begin(), net.conv_channels.end())));
  c.set("net_fc1", std::to_string(net.fc1));
  c.set("net_fc2", std::to_string(net.fc2));
  c.set("lr0", format_double(schedule.lr0));
  c.set("lr_decay", format_double(schedule.decay));
  c.set("lr_decay_step", std::to_string(schedule.decay_step));
  c.set("iterations", std::to_string(schedule.total_iters));
  c.set("batch", std::to_string(schedule.batch));
  c.set("momentum", format_double(schedule.momentum));
  c.set("augment_angles", join(augment_angles));
  c.set("augment_flip", augment_flip ? "true" : "false");
  c.set("crop_scales", join(crops.scales));
  c.set("crops_per_scale", std::to_string(crops.crops_per_scale));
  c.set("crop_side", std::to_string(crops.target_side));
  c.set("predict_side", std::to_string(predict_side));
  c.set("c_grid", join(c_grid));
  return c;
}

void PipelineConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::kBadFormat, msg); };
  if (features.empty()) bad("at least one feature is required");
  if (std::set<FeatureKind>(features.begin(), features.end()).size() != features.size()) {
    bad("features must be distinct");
  }
  if (!kernel_weights.empty()) {
    if (kernel_weights.size() != features.size()) bad("one kernel weight per feature");
    double sum = 0.0;
    for (double w : kernel_weights) {
      if (!(w >= 0.0)) bad("kernel weights must be nonnegative");
      sum += w;
    }
    if (!(sum > 0.0)) bad("kernel weights must not all be zero");
  }
  if (sift_step < 1 || sift_scales < 1) bad("sift_step and sift_scales must be positive");
  if (color_grid.step < 1 || color_grid.sides.empty()) bad("bad color patch grid");
  for (int s : color_grid.sides) {
    if (s < 1) bad("color patch sides must be positive");
  }
  if (gmm_components < 1 || gmm_max_iter < 1 || gmm_max_descriptors < 1) bad("bad GMM settings");
  if (bow_centers < 1 || bow_max_descriptors < 1) bad("bad BoW settings");
  if (color_codes < 1 || rcc_grid < 1 || dd_bins < 1) bad("bad color settings");
  if (color_pixel_budget < 1 || dd_max_pixels < 1) bad("pixel budgets must be positive");
  if (schedule.batch < 1 || schedule.total_iters < 0 || schedule.decay_step < 1 ||
      !(schedule.lr0 > 0.0)) {
    bad("bad training schedule");
  }
  if (augment_angles.empty()) bad("augment_angles must not be empty");
  if (crops.scales.empty() || crops.crops_per_scale < 1 || crops.target_side < kMinImageSide) {
    bad("bad crop settings");
  }
  if (predict_side < 0) bad("predict_side must be nonnegative");
  if (c_grid.empty()) bad("c_grid must not be empty");
  for (double c : c_grid) {
    if (!(c > 0.0)) bad("C values must be positive");
  }
  net.validate();
}

bool PipelineConfig::uses(FeatureKind k) const {
  return std::find(features.begin(), features.end(), k) != features.end();
}

double PipelineConfig::weight_of(FeatureKind k) const {
  if (kernel_weights.empty()) return 1.0;
  const auto it = std::find(features.begin(), features.end(), k);
  if (it == features.end()) return 1.0;
  return kernel_weights[static_cast<std::size_t>(it - features.begin())];
}

// ---------------------------------------------------------------- images

ImageList entry_images(const std::vector<ManifestEntry>& entries, int predict_side) {
  ImageList list;
  list.size = entries.size();
  for (const auto& e : entries) list.labels.push_back(e.label.value_or(-1));
  list.image = [entries, predict_side](std::size_t i) {
    return load_labeled_image(entries[i], predict_side).pixels;
  };
  return list;
}

ImageList memory_images(const std::vector<Image>& images, std::vector<int> labels) {
  if (labels.empty()) labels.assign(images.size(), -1);
  if (labels.size() != images.size()) {
    throw Error(ErrorCode::kDimMismatch, "one label per image");
  }
  ImageList list;
  list.size = images.size();
  list.labels = std::move(labels);
  list.image = [&images](std::size_t i) { return images[i]; };
  return list;
}

// ---------------------------------------------------------------- fitting

DescriptorSet local_descriptors(const PipelineModels& models, FeatureKind kind,
                                const Image& rgb) {
  const auto& cfg = models.config;
  switch (kind) {
    case FeatureKind::kIfvSift:
      return dense_sift(to_grayscale(rgb), cfg.sift_step, cfg.sift_scales);
    case FeatureKind::kCn11:
      return cn_local_descriptors(rgb, models.cn_table, cfg.color_grid);
    case FeatureKind::kDd25:
    case FeatureKind::kDd50: {
      const auto it = models.dd.find(kind);
      if (it == models.dd.end()) {
        throw Error(ErrorCode::kMissingModel, "no DD partition for " + std::string(feature_name(kind)));
      }
      return dd_local_descriptors(rgb, it->second, cfg.color_grid);
    }
    default:
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(feature_name(kind)) + " has no local descriptors");
  }
}

PipelineModels fit_models(const PipelineConfig& config, const ImageList& train,
                          std::uint64_t seed, const Progress& progress) {
  config.validate();
  if (train.size == 0) throw Error(ErrorCode::kEmptySet, "no training images");
  PipelineModels m;
  m.config = config;
  m.seed = seed;
  m.cn_table = config.color_name_table.empty() ? fallback_color_name_table()
                                               : load_color_name_table(config.color_name_table);

  const bool want_sift = config.uses(FeatureKind::kIfvSift);
  const bool want_cn = config.uses(FeatureKind::kCn11);
  std::vector<FeatureKind> dd_kinds;
  for (FeatureKind k : {FeatureKind::kDd25, FeatureKind::kDd50}) {
    if (config.uses(k)) dd_kinds.push_back(k);
  }
  const bool want_pixels = !dd_kinds.empty() || config.uses(FeatureKind::kRcc);
  const bool want_net = config.uses(FeatureKind::kDunnet);

  const std::size_t n = train.size;
  const std::size_t gmm_quota = per_image(config.gmm_max_descriptors, n);
  const std::size_t bow_quota = per_image(config.bow_max_descriptors, n);
  const std::size_t pixel_quota = per_image(config.color_pixel_budget, n);
  Rng gmm_rng(Rng::derive(seed, kSaltGmmSample));
  Rng pixel_rng(Rng::derive(seed, kSaltPixels));
  std::map<FeatureKind, Rng> bow_rng;
  for (FeatureKind k : all_features()) {
    bow_rng.emplace(k, Rng(Rng::derive(seed, kSaltBowSample + static_cast<std::uint64_t>(k))));
  }

  std::vector<float> sift_rows;
  std::map<FeatureKind, std::vector<float>> bow_rows;
  std::vector<LabeledImage> strips;
  std::vector<LabeledImage> net_images;

  for (std::size_t i = 0; i < n; ++i) {
    const Image img = train.image(i);
    const int label = train.labels[i];
    if (want_sift) {
      sample_rows(local_descriptors(m, FeatureKind::kIfvSift, img), gmm_quota, gmm_rng, sift_rows);
    }
    if (want_cn) {
      sample_rows(local_descriptors(m, FeatureKind::kCn11, img), bow_quota,
                  bow_rng.at(FeatureKind::kCn11), bow_rows[FeatureKind::kCn11]);
    }
    if (want_pixels) {
      strips.push_back({"", pixel_strip(img, pixel_quota, pixel_rng), label, Split::kTrain});
    }
    if (want_net) {
      net_images.push_back({"", fit_input(img, config.net.input_side), label, Split::kTrain});
    }
    if ((i + 1) % 50 == 0 || i + 1 == n) {
      report(progress, "fit: sampled " + std::to_string(i + 1) + "/" + std::to_string(n) + " images");
    }
  }

  if (want_sift) {
    const Matrix data = rows_to_matrix(sift_rows, kSiftDim);
    sift_rows.clear();
    sift_rows.shrink_to_fit();
    report(progress, "fit: GMM K=" + std::to_string(config.gmm_components) + " on " +
                         std::to_string(data.rows()) + " descriptors");
    m.gmm = gmm_fit(data, config.gmm_components, Rng::derive(seed, kSaltGmm), config.gmm_max_iter,
                    config.gmm_tol);
  }

  for (FeatureKind k : dd_kinds) {
    DdOptions opt;
    opt.r = dd_categories(k);
    opt.bins = config.dd_bins;
    opt.max_pixels = config.dd_max_pixels;
    opt.seed = Rng::derive(seed, kSaltDd + static_cast<std::uint64_t>(k));
    report(progress, "fit: DD partition r=" + std::to_string(opt.r));
    m.dd.emplace(k, train_dd_partition(strips, opt));
  }
  if (!dd_kinds.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      const Image img = train.image(i);
      for (FeatureKind k : dd_kinds) {
        sample_rows(local_descriptors(m, k, img), bow_quota, bow_rng.at(k), bow_rows[k]);
      }
    }
  }
  for (auto& [k, rows] : bow_rows) {
    const int dim = k == FeatureKind::kCn11 ? kNumColorNames : dd_categories(k);
    const Matrix data = rows_to_matrix(rows, dim);
    rows.clear();
    report(progress, "fit: " + std::string(feature_name(k)) + " vocabulary K=" +
                         std::to_string(config.bow_centers));
    m.bow.emplace(k, kmeans_fit(data, config.bow_centers,
                                Rng::derive(seed, kSaltBow + static_cast<std::uint64_t>(k))));
  }

  if (config.uses(FeatureKind::kRcc)) {
    report(progress, "fit: color codebook K=" + std::to_string(config.color_codes));
    m.codebook = train_color_codebook(strips, config.color_codes, Rng::derive(seed, kSaltCodebook));
  }
  strips.clear();

  if (want_net) {
    m.config.net.seed = Rng::derive(seed, kSaltNetInit);
    const AugmentedView view(&net_images, config.augment_angles, config.augment_flip);
    TrainingSet data;
    data.size = view.size();
    data.image = [&view](std::size_t i) { return view.pixels(i); };
    data.label = [&view](std::size_t i) { return view.label(i); };
    report(progress, "fit: DunNet on " + std::to_string(view.size()) + " augmented inputs, " +
                         std::to_string(config.schedule.total_iters) + " iterations");
    const int every = std::max(1, config.schedule.total_iters / 20);
    auto result = eradate::train(m.config.net, config.schedule, data, Rng::derive(seed, kSaltNetTrain),
                        [&](const TrainLogEntry& e) {
                          if (e.iteration % every == 0) {
                            report(progress, "fit: DunNet iter " + std::to_string(e.iteration) +
                                                 " loss " + format_double(e.loss));
                          }
                        });
    m.net = std::move(result.params);
    m.net_log = std::move(result.log);
  }
  return m;
}

// ---------------------------------------------------------------- features

std::vector<std::vector<double>> extract_image(const PipelineModels& models, const Image& rgb,
                                               const std::vector<FeatureKind>& kinds) {
  const auto& cfg = models.config;
  std::vector<std::vector<double>> out;
  for (FeatureKind k : resolve_kinds(models, kinds)) {
    switch (k) {
      case FeatureKind::kIfvSift: {
        if (!models.gmm) throw Error(ErrorCode::kMissingModel, "no GMM for ifv_sift");
        auto v = ifv_normalize(fisher_vector(local_descriptors(models, k, rgb), *models.gmm,
                                             cfg.posterior))
                     .values;
        if (cfg.ifv_kernel == KernelKind::kChi2Exp) {
          for (double& x : v) x = std::abs(x);
        }
        out.push_back(std::move(v));
        break;
      }
      case FeatureKind::kCn11:
      case FeatureKind::kDd25:
      case FeatureKind::kDd50: {
        const auto it = models.bow.find(k);
        if (it == models.bow.end()) {
          throw Error(ErrorCode::kMissingModel, "no vocabulary for " + std::string(feature_name(k)));
        }
        out.push_back(bow_encode(local_descriptors(models, k, rgb), it->second).values);
        break;
      }
      case FeatureKind::kRcc:
        if (!models.codebook) throw Error(ErrorCode::kMissingModel, "no color codebook for rcc");
        out.push_back(rcc_descriptor(rgb, *models.codebook, cfg.rcc_grid).values);
        break;
      case FeatureKind::kDunnet:
        if (!models.net) throw Error(ErrorCode::kMissingModel, "no network for dunnet");
        out.push_back(extract_codes(*models.net, cfg.net, std::span<const Image>(&rgb, 1))[0].values);
        break;
    }
  }
  return out;
}

const Matrix& FeatureBank::of(FeatureKind k) const {
  const auto it = std::find(kinds.begin(), kinds.end(), k);
  if (it == kinds.end()) {
    throw Error(ErrorCode::kMissingModel, "feature " + std::string(feature_name(k)) + " not extracted");
  }
  return features[static_cast<std::size_t>(it - kinds.begin())];
}

FeatureBank extract_features(const PipelineModels& models, const ImageList& images,
                             const std::vector<FeatureKind>& kinds, const Progress& progress) {
  FeatureBank bank;
  bank.kinds = resolve_kinds(models, kinds);
  bank.labels = images.labels;
  bank.features.resize(bank.kinds.size());
  const auto n = static_cast<Eigen::Index>(images.size);
  for (std::size_t i = 0; i < images.size; ++i) {
    const auto vecs = extract_image(models, images.image(i), bank.kinds);
    for (std::size_t f = 0; f < vecs.size(); ++f) {
      Matrix& m = bank.features[f];
      if (i == 0) m.resize(n, static_cast<Eigen::Index>(vecs[f].size()));
      m.row(static_cast<Eigen::Index>(i)) =
          Eigen::Map<const Eigen::RowVectorXd>(vecs[f].data(), static_cast<Eigen::Index>(vecs[f].size()));
    }
    if ((i + 1) % 50 == 0 || i + 1 == images.size) {
      report(progress, "extract: " + std::to_string(i + 1) + "/" + std::to_string(images.size));
    }
  }
  return bank;
}

void save_feature_bank(const FeatureBank& bank, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  for (std::size_t f = 0; f < bank.kinds.size(); ++f) {
    const Matrix& m = bank.features[f];
    Container c;
    c.kind = ModelKind::kFeatures;
    c.rows = static_cast<std::uint32_t>(m.rows());
    c.cols = static_cast<std::uint32_t>(m.cols());
    c.meta.assign(bank.labels.begin(), bank.labels.end());
    c.payload.assign(m.data(), m.data() + m.size());
    save_container(c, dir / ("features_" + std::string(feature_name(bank.kinds[f])) + ".stym"));
  }
}

KernelBlock kernel_block(const PipelineConfig& config, FeatureKind k) {
  KernelBlock b;
  b.kind = k == FeatureKind::kIfvSift ? config.ifv_kernel : KernelKind::kChi2Exp;
  b.weight = config.weight_of(k);
  return b;
}

// ---------------------------------------------------------------- bundles

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  const auto& m = bundle.models;
  nlohmann::ordered_json j;
  j["format"] = "eradate-bundle";
  j["version"] = 1;
  j["seed"] = m.seed;
  PipelineConfig cfg = m.config;
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  if (!cfg.color_name_table.empty()) {
    save_color_name_table(m.cn_table, dir / "color_names.csv");
    cfg.color_name_table = "color_names.csv";
  }
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  const Config flat = cfg.to_config();
  for (const auto& [key, value] : flat.values()) config[key] = value;
  j["config"] = config;
  if (m.gmm) {
    save_gmm(*m.gmm, dir / "gmm.stym");
    files["gmm"] = "gmm.stym";
  }
  for (const auto& [k, part] : m.dd) {
    const std::string name = "partition_" + std::string(feature_name(k)) + ".stym";
    save_dd_partition(part, dir / name);
    files["partition_" + std::string(feature_name(k))] = name;
  }
  for (const auto& [k, km] : m.bow) {
    const std::string name = "vocabulary_" + std::string(feature_name(k)) + ".stym";
    save_kmeans(km, dir / name);
    files["vocabulary_" + std::string(feature_name(k))] = name;
  }
  if (m.codebook) {
    save_color_codebook(*m.codebook, dir / "codebook.stym");
    files["codebook"] = "codebook.stym";
  }
  if (m.net) {
    save_params(*m.net, m.config.net, dir / "dunnet.dnn1");
    files["dunnet"] = "dunnet.dnn1";
    if (!m.net_log.empty()) write_train_log(m.net_log, dir / "dunnet_train.csv");
  }
  j["files"] = files;
  nlohmann::ordered_json feats = nlohmann::ordered_json::array();
  for (FeatureKind k : bundle.classifier_features) feats.push_back(std::string(feature_name(k)));
  j["classifier_features"] = feats;
  nlohmann::ordered_json clfs = nlohmann::ordered_json::object();
  for (const auto& [task, clf] : bundle.classifiers) {
    const std::string name = "classifier_" + task + ".stym";
    save_classifier(clf, dir / name);
    clfs[task] = name;
  }
  j["classifiers"] = clfs;
  write_text(dir / "pipeline.json", j.dump(2) + "\n");
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "pipeline.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw Error(ErrorCode::kMissingModel, "no model bundle at " + dir.string());
  }
  const auto bytes = read_file(manifest_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDecodeError, manifest_path.string() + ": " + e.what());
  }
  auto file = [&](const std::string& name) {
    const auto p = dir / name;
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::kMissingModel, "missing " + p.string());
    return p;
  };
  ModelBundle b;
  try {
    Config c;
    for (const auto& [key, value] : j.at("config").items()) c.set(key, value.get<std::string>());
    if (c.has("color_name_table")) {
      c.set("color_name_table", file(c.get_string("color_name_table", "")).string());
    }
    auto& m = b.models;
    m.config = PipelineConfig::from_config(c);
    m.seed = j.at("seed").get<std::uint64_t>();
    m.cn_table = m.config.color_name_table.empty() ? fallback_color_name_table()
                                                   : load_color_name_table(m.config.color_name_table);
    const auto& files = j.at("files");
    if (files.contains("gmm")) m.gmm = load_gmm(file(files["gmm"].get<std::string>()));
    for (FeatureKind k : all_features()) {
      const std::string part = "partition_" + std::string(feature_name(k));
      if (files.contains(part)) m.dd.emplace(k, load_dd_partition(file(files[part].get<std::string>())));
      const std::string vocab = "vocabulary_" + std::string(feature_name(k));
      if (files.contains(vocab)) m.bow.emplace(k, load_kmeans(file(files[vocab].get<std::string>())));
    }
    if (files.contains("codebook")) {
      m.codebook = load_color_codebook(file(files["codebook"].get<std::string>()));
    }
    if (files.contains("dunnet")) {
      NetConfig nc;
      m.net = load_params(file(files["dunnet"].get<std::string>()), nc);
      m.config.net = nc;
    }
    for (const auto& f : j.at("classifier_features")) {
      b.classifier_features.push_back(parse_feature(f.get<std::string>()));
    }
    for (const auto& [task, name] : j.at("classifiers").items()) {
      b.classifiers.emplace(task, load_classifier(file(name.get<std::string>())));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDecodeError, manifest_path.string() + ": " + e.what());
  }
  return b;
}

std::vector<int> classify_images(const ModelBundle& bundle, const std::string& task,
                                 const std::vector<Image>& images) {
  const auto it = bundle.classifiers.find(task);
  if (it == bundle.classifiers.end()) {
    throw Error(ErrorCode::kMissingModel, "no classifier for task " + task);
  }
  if (images.empty()) return {};
  const FeatureBank bank = extract_features(bundle.models, memory_images(images, {}),
                                            bundle.classifier_features);
  return it->second.predict(bank.features);
}

}  // namespace eradate
