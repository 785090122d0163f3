#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "eradate/color.hpp"
#include "eradate/error.hpp"
#include "eradate/rng.hpp"

namespace eradate {

Matrix sample_lab_pixels(const std::vector<LabeledImage>& images,
                         std::size_t max_pixels, std::uint64_t seed) {
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& img : images) {
    if (img.pixels.channels() != 3) {
      throw Error(ErrorCode::kShapeMismatch, "expected RGB images");
    }
    offsets.push_back(total);
    total += img.pixels.size() / 3;
  }
  std::vector<std::size_t> picks;
  if (total <= max_pixels) {
    picks.resize(total);
    for (std::size_t i = 0; i < total; ++i) picks[i] = i;
  } else {
    // Floyd's sampling of max_pixels distinct indices.
    Rng rng(seed);
    std::unordered_set<std::size_t> chosen;
    chosen.reserve(max_pixels * 2);
    for (std::size_t j = total - max_pixels; j < total; ++j) {
      const auto t = static_cast<std::size_t>(rng.uniform_int(j + 1));
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    picks.assign(chosen.begin(), chosen.end());
    std::sort(picks.begin(), picks.end());
  }
  Matrix out(static_cast<Eigen::Index>(picks.size()), 3);
  std::size_t img = 0;
  double lab[3];
  for (std::size_t k = 0; k < picks.size(); ++k) {
    while (img + 1 < offsets.size() && picks[k] >= offsets[img + 1]) ++img;
    const std::size_t i = picks[k] - offsets[img];
    const auto& d = images[img].pixels.data();
    srgb_to_lab(d[3 * i], d[3 * i + 1], d[3 * i + 2], lab);
    out(static_cast<Eigen::Index>(k), 0) = lab[0];
    out(static_cast<Eigen::Index>(k), 1) = lab[1];
    out(static_cast<Eigen::Index>(k), 2) = lab[2];
  }
  return out;
}

ColorCodebook train_color_codebook(const std::vector<LabeledImage>& images,
                                   int codes, std::uint64_t seed,
                                   std::size_t max_pixels) {
  const Matrix pixels = sample_lab_pixels(images, max_pixels, seed);
  if (pixels.rows() < codes) {
    throw Error(ErrorCode::kInsufficientPixels,
                std::to_string(pixels.rows()) + " pixels for " +
                    std::to_string(codes) + " codes");
  }
  ColorCodebook book;
  book.centers = kmeans_fit(pixels, codes, Rng::derive(seed, 1), 100, 1e-6).centers;
  return book;
}

std::vector<int> assign_color_codes(const Image& rgb, const ColorCodebook& book) {
  if (rgb.channels() != 3) throw Error(ErrorCode::kShapeMismatch, "expected RGB image");
  const auto& d = rgb.data();
  const int k = book.codes();
  std::vector<int> out(d.size() / 3);
  double lab[3];
  const double* c = book.centers.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    srgb_to_lab(d[3 * i], d[3 * i + 1], d[3 * i + 2], lab);
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      const double dl = lab[0] - c[3 * j];
      const double da = lab[1] - c[3 * j + 1];
      const double db = lab[2] - c[3 * j + 2];
      const double dist = dl * dl + da * da + db * db;
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    out[i] = best;
  }
  return out;
}

std::vector<double> rcc_from_codes(const std::vector<int>& codes, int width,
                                   int height, int num_codes, int grid) {
  if (grid < 2) throw Error(ErrorCode::kInvalidArgument, "RCC grid must be >= 2");
  if (width < grid || height < grid) {
    throw Error(ErrorCode::kShapeMismatch, "image smaller than the RCC grid");
  }
  if (codes.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kShapeMismatch, "code map size mismatch");
  }
  const int cw = width / grid;
  const int ch = height / grid;
  const std::size_t k = static_cast<std::size_t>(num_codes);
  std::vector<std::vector<double>> hist(static_cast<std::size_t>(grid * grid),
                                        std::vector<double>(k, 0.0));
  for (int y = 0; y < height; ++y) {
    const int gy = std::min(y / ch, grid - 1);
    for (int x = 0; x < width; ++x) {
      const int gx = std::min(x / cw, grid - 1);
      hist[static_cast<std::size_t>(gy * grid + gx)]
          [static_cast<std::size_t>(codes[static_cast<std::size_t>(y) * width + x])] += 1.0;
    }
  }
  std::vector<double> m(k * k, 0.0);
  auto accumulate = [&](int a, int b) {
    const auto& ha = hist[static_cast<std::size_t>(a)];
    const auto& hb = hist[static_cast<std::size_t>(b)];
    for (std::size_t i = 0; i < k; ++i) {
      if (ha[i] == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) {
        if (hb[j] != 0.0) m[i * k + j] += ha[i] * hb[j];
      }
    }
  };
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      const int a = gy * grid + gx;
      if (gx + 1 < grid) {
        accumulate(a, a + 1);
        accumulate(a + 1, a);
      }
      if (gy + 1 < grid) {
        accumulate(a, a + grid);
        accumulate(a + grid, a);
      }
    }
  }
  double total = 0.0;
  for (double v : m) total += v;
  if (total > 0.0) {
    for (auto& v : m) v /= total;
  }
  return m;
}

EncodedVector rcc_descriptor(const Image& rgb, const ColorCodebook& book, int grid) {
  EncodedVector out;
  out.kind = EncodingKind::kRcc;
  out.values = rcc_from_codes(assign_color_codes(rgb, book), rgb.width(),
                              rgb.height(), book.codes(), grid);
  return out;
}

Container to_container(const ColorCodebook& b) {
  Container c;
  c.kind = ModelKind::kColorCodebook;
  c.rows = static_cast<std::uint32_t>(b.codes());
  c.cols = 3;
  c.payload.assign(b.centers.data(), b.centers.data() + b.centers.size());
  return c;
}

ColorCodebook codebook_from_container(const Container& c) {
  if (c.kind != ModelKind::kColorCodebook || c.cols != 3 || c.rows == 0) {
    throw Error(ErrorCode::kDecodeError, "not a color codebook container");
  }
  ColorCodebook b;
  b.centers = Eigen::Map<const Matrix>(c.payload.data(), c.rows, 3);
  return b;
}

void save_color_codebook(const ColorCodebook& b, const std::filesystem::path& path) {
  save_container(to_container(b), path);
}

ColorCodebook load_color_codebook(const std::filesystem::path& path) {
  return codebook_from_container(load_container(path, ModelKind::kColorCodebook));
}

}  // namespace eradate
