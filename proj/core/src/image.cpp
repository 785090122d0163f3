#include "eradate/image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "eradate/error.hpp"

namespace eradate {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "bad image dimensions");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

double Image::clamped(int x, int y, int c) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return at(x, y, c);
}

double Image::bilinear(double x, double y, int c) const {
  x = std::clamp(x, 0.0, static_cast<double>(width_ - 1));
  y = std::clamp(y, 0.0, static_cast<double>(height_ - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  if (fx == 0.0 && fy == 0.0) return at(x0, y0, c);
  const double top = at(x0, y0, c) * (1.0 - fx) + at(x1, y0, c) * fx;
  const double bottom = at(x0, y1, c) * (1.0 - fx) + at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

Image to_grayscale(const Image& rgb) {
  if (rgb.channels() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "to_grayscale expects RGB");
  }
  Image gray(rgb.width(), rgb.height(), 1);
  const auto src = rgb.pixels();
  auto dst = gray.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] +
             0.114 * src[3 * i + 2];
  }
  return gray;
}

namespace {

double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
  constexpr double kDelta = 6.0 / 29.0;
  return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                      : t / (3.0 * kDelta * kDelta) + 4.0 / 29.0;
}

}  // namespace

void srgb_to_lab(double r, double g, double b, double lab[3]) {
  // sRGB primaries, D65 white. The white point is the row sums so that
  // (1,1,1) lands exactly on a = b = 0.
  constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                               {0.2126729, 0.7151522, 0.0721750},
                               {0.0193339, 0.1191920, 0.9503041}};
  constexpr double kXn = kM[0][0] + kM[0][1] + kM[0][2];
  constexpr double kYn = kM[1][0] + kM[1][1] + kM[1][2];
  constexpr double kZn = kM[2][0] + kM[2][1] + kM[2][2];
  const double lr = srgb_to_linear(r);
  const double lg = srgb_to_linear(g);
  const double lb = srgb_to_linear(b);
  const double x = kM[0][0] * lr + kM[0][1] * lg + kM[0][2] * lb;
  const double y = kM[1][0] * lr + kM[1][1] * lg + kM[1][2] * lb;
  const double z = kM[2][0] * lr + kM[2][1] * lg + kM[2][2] * lb;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  lab[0] = 116.0 * fy - 16.0;
  lab[1] = 500.0 * (fx - fy);
  lab[2] = 200.0 * (fy - fz);
}

Image to_lab(const Image& rgb) {
  if (rgb.channels() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "to_lab expects RGB");
  }
  Image lab(rgb.width(), rgb.height(), 3);
  const auto src = rgb.pixels();
  auto dst = lab.pixels();
  for (std::size_t i = 0; i < src.size(); i += 3) {
    srgb_to_lab(src[i], src[i + 1], src[i + 2], &dst[i]);
  }
  return lab;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width <= 0 || height <= 0 || img.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "resize to empty image");
  }
  Image out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double src_y = (y + 0.5) * sy - 0.5;
    for (int x = 0; x < width; ++x) {
      const double src_x = (x + 0.5) * sx - 0.5;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = img.bilinear(src_x, src_y, c);
      }
    }
  }
  return out;
}

Image resize_area(const Image& img, int width, int height) {
  if (width >= img.width() || height >= img.height()) {
    return resize_bilinear(img, width, height);
  }
  Image out(width, height, img.channels());
  const double sx = static_cast<double>(img.width()) / width;
  const double sy = static_cast<double>(img.height()) / height;
  const int channels = img.channels();
  std::vector<double> acc(channels);
  for (int y = 0; y < height; ++y) {
    const double y0 = y * sy;
    const double y1 = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double x0 = x * sx;
      const double x1 = (x + 1) * sx;
      std::fill(acc.begin(), acc.end(), 0.0);
      double total = 0.0;
      for (int py = static_cast<int>(y0); py < y1 && py < img.height(); ++py) {
        const double wy = std::min<double>(py + 1, y1) - std::max<double>(py, y0);
        if (wy <= 0.0) continue;
        for (int px = static_cast<int>(x0); px < x1 && px < img.width(); ++px) {
          const double wx =
              std::min<double>(px + 1, x1) - std::max<double>(px, x0);
          if (wx <= 0.0) continue;
          const double w = wx * wy;
          total += w;
          for (int c = 0; c < channels; ++c) acc[c] += w * img.at(px, py, c);
        }
      }
      for (int c = 0; c < channels; ++c) out.at(x, y, c) = acc[c] / total;
    }
  }
  return out;
}

Image rotate(const Image& img, double degrees) {
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad);
  const double sn = std::sin(rad);
  const double cx = (img.width() - 1) / 2.0;
  const double cy = (img.height() - 1) / 2.0;
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    const double dy = y - cy;
    for (int x = 0; x < img.width(); ++x) {
      const double dx = x - cx;
      const double sx = cx + cs * dx - sn * dy;
      const double sy = cy + sn * dx + cs * dy;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = img.bilinear(sx, sy, c);
      }
    }
  }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = img.at(img.width() - 1 - x, y, c);
      }
    }
  }
  return out;
}

Image crop(const Image& img, int x0, int y0, int width, int height) {
  if (x0 < 0 || y0 < 0 || width <= 0 || height <= 0 ||
      x0 + width > img.width() || y0 + height > img.height()) {
    throw Error(ErrorCode::kInvalidArgument, "crop window outside image");
  }
  Image out(width, height, img.channels());
  const int ch = img.channels();
  for (int y = 0; y < height; ++y) {
    const double* src = &img.data()[((static_cast<std::size_t>(y0 + y)) *
                                         img.width() + x0) * ch];
    std::copy(src, src + static_cast<std::size_t>(width) * ch,
              &out.at(0, y, 0));
  }
  return out;
}

Image resize_shorter_side(const Image& img, int side) {
  const int shorter = std::min(img.width(), img.height());
  if (shorter == side) return img;
  const double s = static_cast<double>(side) / shorter;
  const int w = img.width() <= img.height()
                    ? side
                    : static_cast<int>(std::lround(img.width() * s));
  const int h = img.height() < img.width()
                    ? side
                    : static_cast<int>(std::lround(img.height() * s));
  return shorter > side ? resize_area(img, w, h) : resize_bilinear(img, w, h);
}

bool all_finite_unit(const Image& img) {
  return std::all_of(img.data().begin(), img.data().end(), [](double v) {
    return std::isfinite(v) && v >= 0.0 && v <= 1.0;
  });
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(
      std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace eradate
