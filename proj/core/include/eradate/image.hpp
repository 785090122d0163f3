#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace eradate {

// Row-major, channel-interleaved raster of doubles. RGB images hold sRGB
// values in [0, 1]; single-channel images are used for grayscale and for
// every intermediate of the scale-space code.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  double& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  // Border-replicating access.
  double clamped(int x, int y, int c = 0) const;
  // Bilinear sample at real coordinates (pixel centers on integers),
  // replicating the border.
  double bilinear(double x, double y, int c = 0) const;

  std::span<double> pixels() { return data_; }
  std::span<const double> pixels() const { return data_; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Image& other) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

// ITU-R BT.601 luma: 0.299 R + 0.587 G + 0.114 B.
Image to_grayscale(const Image& rgb);

// sRGB (D65) -> CIE XYZ -> CIELAB. Output channels are L, a, b.
Image to_lab(const Image& rgb);
void srgb_to_lab(double r, double g, double b, double lab[3]);

// Output pixel centers map to source coordinates (i + 0.5) * s - 0.5.
Image resize_bilinear(const Image& img, int width, int height);
// Box-filter (area-average) downsampling; falls back to bilinear when
// enlarging.
Image resize_area(const Image& img, int width, int height);
// Rotation about the image center by `degrees` (counter-clockwise in the
// usual y-up sense), bilinear interpolation, border pixels replicated.
Image rotate(const Image& img, double degrees);
Image flip_horizontal(const Image& img);
Image crop(const Image& img, int x0, int y0, int width, int height);
// Resizes so that the shorter side equals `side`, preserving aspect ratio.
Image resize_shorter_side(const Image& img, int side);

bool all_finite_unit(const Image& img);

// Codecs. PNG (any bit depth/color type, converted to 8-bit RGB) and
// binary PPM (P6, maxval 255). 8-bit value v maps to v / 255.
Image load_image(const std::filesystem::path& path);
Image decode_image(std::span<const std::uint8_t> bytes);
Image decode_ppm(std::span<const std::uint8_t> bytes);
Image decode_png(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ppm(const Image& rgb);
std::vector<std::uint8_t> encode_png(const Image& rgb);
void save_ppm(const Image& rgb, const std::filesystem::path& path);
void save_png(const Image& rgb, const std::filesystem::path& path);

std::uint8_t to_byte(double v);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

}  // namespace eradate
