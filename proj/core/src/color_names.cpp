#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>

#include "eradate/color.hpp"
#include "eradate/error.hpp"
#include "patch_integral.hpp"

namespace eradate {

namespace {

enum Term {
  kBlack, kBlue, kBrown, kGrey, kGreen, kOrange, kPink, kPurple, kRed, kWhite, kYellow
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

}  // namespace

const std::array<std::string_view, kNumColorNames>& color_name_terms() {
  static const std::array<std::string_view, kNumColorNames> terms{
      "black", "blue", "brown", "grey", "green", "orange",
      "pink", "purple", "red", "white", "yellow"};
  return terms;
}

int color_name_index(std::string_view term) {
  const auto& t = color_name_terms();
  const auto it = std::find(t.begin(), t.end(), term);
  if (it == t.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown color term " + std::string(term));
  }
  return static_cast<int>(it - t.begin());
}

ColorNameTable::ColorNameTable(int resolution, std::vector<double> probs)
    : resolution_(resolution), probs_(std::move(probs)) {
  const std::size_t rows = static_cast<std::size_t>(resolution) * resolution * resolution;
  if (resolution < 1 || probs_.size() != rows * kNumColorNames) {
    throw Error(ErrorCode::kShapeMismatch, "color name table size mismatch");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (int k = 0; k < kNumColorNames; ++k) {
      const double p = probs_[i * kNumColorNames + k];
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw Error(ErrorCode::kBadFormat, "color name table has invalid entry");
      }
      s += p;
    }
    if (std::abs(s - 1.0) > 1e-6) {
      throw Error(ErrorCode::kBadFormat,
                  "color name table row " + std::to_string(i) + " sums to " +
                      std::to_string(s));
    }
  }
}

std::span<const double> ColorNameTable::row(int r, int g, int b) const {
  const std::size_t i =
      (static_cast<std::size_t>(r) * resolution_ + g) * resolution_ + b;
  return {probs_.data() + i * kNumColorNames, kNumColorNames};
}

int ColorNameTable::bin_of(double v) const {
  const int i = static_cast<int>(std::floor(v * resolution_));
  return std::clamp(i, 0, resolution_ - 1);
}

std::span<const double> ColorNameTable::lookup(double r, double g, double b) const {
  return row(bin_of(r), bin_of(g), bin_of(b));
}

int fallback_color_name(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double v = mx;
  const double s = mx > 0.0 ? (mx - mn) / mx : 0.0;
  if (v < 0.15) return kBlack;
  if (s < 0.12) return v > 0.85 ? kWhite : kGrey;
  const double delta = mx - mn;
  double h;
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h < 15.0 || h >= 345.0) return kRed;
  if (h < 45.0) return v < 0.6 ? kBrown : kOrange;
  if (h < 70.0) return kYellow;
  if (h < 170.0) return kGreen;
  if (h < 260.0) return kBlue;
  if (h < 300.0) return kPurple;
  return kPink;
}

ColorNameTable fallback_color_name_table(int resolution) {
  if (resolution < 1) throw Error(ErrorCode::kInvalidArgument, "resolution < 1");
  const std::size_t rows = static_cast<std::size_t>(resolution) * resolution * resolution;
  std::vector<double> probs(rows * kNumColorNames, 0.0);
  std::size_t i = 0;
  for (int r = 0; r < resolution; ++r) {
    for (int g = 0; g < resolution; ++g) {
      for (int b = 0; b < resolution; ++b, ++i) {
        const int name = fallback_color_name((r + 0.5) / resolution,
                                             (g + 0.5) / resolution,
                                             (b + 0.5) / resolution);
        probs[i * kNumColorNames + static_cast<std::size_t>(name)] = 1.0;
      }
    }
  }
  return ColorNameTable(resolution, std::move(probs));
}

ColorNameTable parse_color_name_table(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kBadFormat, "empty color name table");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split_csv_line(line);
  if (header.size() != 3 + kNumColorNames || header[0] != "r" || header[1] != "g" ||
      header[2] != "b") {
    throw Error(ErrorCode::kBadFormat, "color name table header must be r,g,b,<terms>");
  }
  std::array<int, kNumColorNames> column{};
  for (int k = 0; k < kNumColorNames; ++k) {
    column[static_cast<std::size_t>(k)] = color_name_index(header[static_cast<std::size_t>(3 + k)]);
  }
  std::vector<std::array<double, 3 + kNumColorNames>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kBadFormat, "color name table row has wrong arity");
    }
    std::array<double, 3 + kNumColorNames> v{};
    for (std::size_t c = 0; c < cells.size(); ++c) {
      try {
        v[c] = std::stod(cells[c]);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kBadFormat, "non-numeric cell " + cells[c]);
      }
    }
    rows.push_back(v);
  }
  const int res = static_cast<int>(std::lround(std::cbrt(static_cast<double>(rows.size()))));
  if (res < 1 || static_cast<std::size_t>(res) * res * res != rows.size()) {
    throw Error(ErrorCode::kBadFormat, "color name table row count is not a cube");
  }
  std::vector<double> probs(rows.size() * kNumColorNames, -1.0);
  auto bin = [res](double v) {
    return std::clamp(static_cast<int>(std::floor(v * res)), 0, res - 1);
  };
  for (const auto& v : rows) {
    const std::size_t i =
        (static_cast<std::size_t>(bin(v[0])) * res + bin(v[1])) * res + bin(v[2]);
    if (probs[i * kNumColorNames] >= 0.0) {
      throw Error(ErrorCode::kBadFormat, "duplicate color name table bin");
    }
    for (int k = 0; k < kNumColorNames; ++k) {
      probs[i * kNumColorNames + static_cast<std::size_t>(column[static_cast<std::size_t>(k)])] =
          v[static_cast<std::size_t>(3 + k)];
    }
  }
  return ColorNameTable(res, std::move(probs));
}

ColorNameTable load_color_name_table(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return parse_color_name_table(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void save_color_name_table(const ColorNameTable& table,
                           const std::filesystem::path& path) {
  std::ostringstream os;
  os << std::setprecision(17) << "r,g,b";
  for (auto t : color_name_terms()) os << ',' << t;
  os << '\n';
  const int res = table.resolution();
  for (int r = 0; r < res; ++r) {
    for (int g = 0; g < res; ++g) {
      for (int b = 0; b < res; ++b) {
        os << (r + 0.5) / res << ',' << (g + 0.5) / res << ',' << (b + 0.5) / res;
        for (double p : table.row(r, g, b)) os << ',' << p;
        os << '\n';
      }
    }
  }
  const std::string out = os.str();
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(out.data()), out.size()));
}

std::array<double, kNumColorNames> cn_descriptor(const Image& region,
                                                 const ColorNameTable& table) {
  if (region.empty() || region.channels() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "cn_descriptor needs a nonempty RGB region");
  }
  std::array<double, kNumColorNames> out{};
  const auto& d = region.data();
  const std::size_t n = d.size() / 3;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = table.lookup(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
    for (int k = 0; k < kNumColorNames; ++k) out[static_cast<std::size_t>(k)] += row[static_cast<std::size_t>(k)];
  }
  for (auto& v : out) v /= static_cast<double>(n);
  return out;
}

std::vector<Patch> plan_patches(int width, int height, const PatchGrid& grid) {
  if (grid.step < 1) throw Error(ErrorCode::kInvalidArgument, "patch step < 1");
  std::vector<Patch> out;
  for (int side : grid.sides) {
    const int half = side / 2;
    const int first = (half + grid.step - 1) / grid.step * grid.step;
    for (int cy = first; cy - half + side <= height; cy += grid.step) {
      for (int cx = first; cx - half + side <= width; cx += grid.step) {
        out.push_back({cx - half, cy - half, side});
      }
    }
  }
  return out;
}

DescriptorSet cn_local_descriptors(const Image& rgb, const ColorNameTable& table,
                                   const PatchGrid& grid) {
  if (rgb.channels() != 3) throw Error(ErrorCode::kShapeMismatch, "expected RGB image");
  const int w = rgb.width();
  const int h = rgb.height();
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  std::vector<double> planes(plane * kNumColorNames);
  const auto& d = rgb.data();
  for (std::size_t i = 0; i < plane; ++i) {
    const auto row = table.lookup(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
    for (int k = 0; k < kNumColorNames; ++k) {
      planes[static_cast<std::size_t>(k) * plane + i] = row[static_cast<std::size_t>(k)];
    }
  }
  return detail::patch_means(planes, kNumColorNames, w, h, plan_patches(w, h, grid));
}

}  // namespace eradate
