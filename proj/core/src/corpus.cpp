#include "eradate/corpus.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eradate/error.hpp"
#include "eradate/rng.hpp"

namespace eradate {

namespace {

constexpr std::array<std::string_view, kNumEras> kEraNames = {
    "Sui", "EarlyTang", "PeakTang", "MiddleTang", "LateTang", "WuDai"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Splits one CSV record; double-quoted fields may contain commas and "".
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

bool has_image_magic(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  char head[8] = {};
  in.read(head, 8);
  if (in.gcount() >= 8 && std::memcmp(head, "\x89PNG\r\n\x1a\n", 8) == 0) {
    return true;
  }
  return in.gcount() >= 2 && head[0] == 'P' && head[1] == '6';
}

}  // namespace

std::string_view era_name(int index) {
  if (index < 0 || index >= kNumEras) {
    throw Error(ErrorCode::kBadLabel, "era index " + std::to_string(index));
  }
  return kEraNames[static_cast<std::size_t>(index)];
}

std::optional<int> parse_era(std::string_view name) {
  for (int i = 0; i < kNumEras; ++i) {
    if (kEraNames[static_cast<std::size_t>(i)] == name) return i;
  }
  return std::nullopt;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
    case Split::kVal: return "val";
    case Split::kPredict: return "predict";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  if (name == "val") return Split::kVal;
  if (name == "predict") return Split::kPredict;
  return std::nullopt;
}

Manifest parse_manifest(std::string_view text,
                        const std::filesystem::path& root, bool check_files) {
  Manifest manifest;
  manifest.root = root;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 &&
        std::memcmp(line.data(), "\xEF\xBB\xBF", 3) == 0) {
      line.erase(0, 3);
    }
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = "line " + std::to_string(line_no);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "path" || fields[1] != "label" ||
          fields[2] != "split") {
        throw Error(ErrorCode::kBadFormat,
                    "manifest header must be 'path,label,split'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw Error(ErrorCode::kBadFormat, where + ": expected 3 fields");
    }
    ManifestEntry entry;
    entry.id = fields[0];
    entry.path = root / fields[0];
    const auto split = parse_split(fields[2]);
    if (!split) {
      throw Error(ErrorCode::kBadSplit, where + ": '" + fields[2] + "'");
    }
    entry.split = *split;
    if (fields[1] == "?") {
      if (entry.split != Split::kPredict) {
        throw Error(ErrorCode::kBadLabel,
                    where + ": '?' label only allowed on predict rows");
      }
    } else {
      entry.label = parse_era(fields[1]);
      if (!entry.label) {
        throw Error(ErrorCode::kBadLabel, where + ": '" + fields[1] + "'");
      }
    }
    if (check_files) {
      if (!std::filesystem::is_regular_file(entry.path)) {
        throw Error(ErrorCode::kMissingFile, where + ": " + entry.path.string());
      }
      if (!has_image_magic(entry.path)) {
        throw Error(ErrorCode::kUnsupportedFormat,
                    where + ": " + entry.path.string());
      }
    }
    manifest.entries.push_back(std::move(entry));
  }
  if (!header_seen) {
    throw Error(ErrorCode::kBadFormat, "empty manifest");
  }
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

void save_manifest(const Manifest& manifest,
                   const std::filesystem::path& path) {
  std::ostringstream out;
  out << "path,label,split\n";
  for (const auto& e : manifest.entries) {
    out << e.id << ','
        << (e.label ? std::string(era_name(*e.label)) : std::string("?"))
        << ',' << split_name(e.split) << '\n';
  }
  const std::string s = out.str();
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(s.data()),
                             s.size()));
}

LabeledImage load_labeled_image(const ManifestEntry& entry, int predict_side) {
  LabeledImage img;
  img.id = entry.id;
  img.label = entry.label;
  img.split = entry.split;
  img.pixels = load_image(entry.path);
  if (img.pixels.width() < kMinImageSide || img.pixels.height() < kMinImageSide) {
    throw Error(ErrorCode::kDecodeError,
                entry.id + ": images must be at least 32x32");
  }
  if (entry.split == Split::kPredict && predict_side > 0) {
    img.pixels = resize_shorter_side(img.pixels, predict_side);
  }
  return img;
}

std::vector<double> default_augment_angles() {
  std::vector<double> angles;
  for (int i = -4; i <= 4; ++i) angles.push_back(2.5 * i);
  return angles;
}

std::vector<LabeledImage> augment(const std::vector<LabeledImage>& images,
                                  const std::vector<double>& angles,
                                  bool flip) {
  if (angles.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "augment needs at least one angle");
  }
  std::vector<LabeledImage> out;
  out.reserve(images.size() * angles.size() * (flip ? 2 : 1));
  for (const auto& img : images) {
    for (double angle : angles) {
      LabeledImage rotated{img.id + "@" + std::to_string(angle),
                           angle == 0.0 ? img.pixels : rotate(img.pixels, angle),
                           img.label, img.split};
      if (flip) {
        LabeledImage mirrored{rotated.id + "+flip",
                              flip_horizontal(rotated.pixels), img.label,
                              img.split};
        out.push_back(std::move(rotated));
        out.push_back(std::move(mirrored));
      } else {
        out.push_back(std::move(rotated));
      }
    }
  }
  return out;
}

AugmentedView::AugmentedView(const std::vector<LabeledImage>* images,
                             std::vector<double> angles, bool flip)
    : images_(images), angles_(std::move(angles)), flip_(flip) {
  if (angles_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "augment needs at least one angle");
  }
}

std::size_t AugmentedView::size() const {
  return images_->size() * angles_.size() * (flip_ ? 2 : 1);
}

Image AugmentedView::pixels(std::size_t i) const {
  const std::size_t per_image = angles_.size() * (flip_ ? 2 : 1);
  const auto& src = (*images_)[i / per_image];
  const std::size_t r = i % per_image;
  const std::size_t angle_index = flip_ ? r / 2 : r;
  const bool mirrored = flip_ && (r % 2 == 1);
  const double angle = angles_[angle_index];
  Image out = angle == 0.0 ? src.pixels : rotate(src.pixels, angle);
  return mirrored ? flip_horizontal(out) : out;
}

int AugmentedView::label(std::size_t i) const {
  const std::size_t per_image = angles_.size() * (flip_ ? 2 : 1);
  return (*images_)[i / per_image].label.value_or(-1);
}

std::vector<CropWindow> plan_crops(int width, int height,
                                   const CropSpec& spec) {
  if (spec.crops_per_scale < 1 || spec.target_side < 1) {
    throw Error(ErrorCode::kInvalidArgument, "bad crop spec");
  }
  std::vector<CropWindow> windows;
  windows.reserve(spec.scales.size() * spec.crops_per_scale);
  Rng rng(spec.seed);
  for (double s : spec.scales) {
    if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "scale must be > 0");
    const int side = static_cast<int>(std::lround(s * spec.target_side));
    if (side > std::min(width, height) || side < 1) {
      throw Error(ErrorCode::kCropTooLarge,
                  "scale " + std::to_string(s) + " needs a " +
                      std::to_string(side) + " px window");
    }
    for (int k = 0; k < spec.crops_per_scale; ++k) {
      CropWindow w;
      w.scale = s;
      w.side = side;
      w.x = static_cast<int>(rng.uniform_int(0, width - side));
      w.y = static_cast<int>(rng.uniform_int(0, height - side));
      windows.push_back(w);
    }
  }
  return windows;
}

std::vector<Image> sample_crops(const Image& img, const CropSpec& spec) {
  const auto windows = plan_crops(img.width(), img.height(), spec);
  std::vector<Image> crops;
  crops.reserve(windows.size());
  for (const auto& w : windows) {
    Image c = crop(img, w.x, w.y, w.side, w.side);
    if (w.side != spec.target_side) {
      c = resize_bilinear(c, spec.target_side, spec.target_side);
    }
    crops.push_back(std::move(c));
  }
  return crops;
}

}  // namespace eradate
