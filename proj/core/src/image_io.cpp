#include <png.h>

#include <cctype>
#include <cstring>
#include <fstream>
#include <memory>
#include <string>

#include "eradate/error.hpp"
#include "eradate/image.hpp"

namespace eradate {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::uint8_t> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorCode::kIoError, "short read on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "write failed " + path.string());
}

namespace {

class PpmHeaderReader {
 public:
  explicit PpmHeaderReader(std::span<const std::uint8_t> bytes)
      : bytes_(bytes) {}

  // Reads the next whitespace-delimited unsigned integer, skipping
  // '#' comments.
  unsigned read_uint() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(ErrorCode::kDecodeError, "malformed PPM header");
    }
    unsigned long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > 1u << 24) throw Error(ErrorCode::kDecodeError, "PPM dimension");
    }
    return static_cast<unsigned>(v);
  }

  // Exactly one whitespace byte separates the header from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(ErrorCode::kDecodeError, "malformed PPM header");
    }
    return pos_ + 1;
  }

  std::size_t pos_ = 2;

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
};

bool is_png(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G',
                                           '\r', '\n', 0x1A, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

Image from_rgb8(const std::uint8_t* src, int width, int height) {
  Image img(width, height, 3);
  auto dst = img.pixels();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i] / 255.0;
  return img;
}

std::vector<std::uint8_t> to_rgb8(const Image& rgb) {
  if (rgb.channels() != 3) {
    throw Error(ErrorCode::kShapeMismatch, "encoder expects RGB");
  }
  std::vector<std::uint8_t> out(rgb.size());
  const auto src = rgb.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = to_byte(src[i]);
  return out;
}

}  // namespace

Image decode_ppm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(ErrorCode::kUnsupportedFormat, "not a PPM stream");
  }
  if (bytes[1] != '6') {
    throw Error(ErrorCode::kUnsupportedFormat, "only binary P6 PPM supported");
  }
  PpmHeaderReader reader(bytes);
  const unsigned width = reader.read_uint();
  const unsigned height = reader.read_uint();
  const unsigned maxval = reader.read_uint();
  if (maxval != 255) {
    throw Error(ErrorCode::kUnsupportedFormat, "PPM maxval must be 255");
  }
  if (width == 0 || height == 0) {
    throw Error(ErrorCode::kDecodeError, "empty PPM");
  }
  const std::size_t offset = reader.raster_offset();
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() - offset < need) {
    throw Error(ErrorCode::kDecodeError, "truncated PPM raster");
  }
  return from_rgb8(bytes.data() + offset, static_cast<int>(width),
                   static_cast<int>(height));
}

Image decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kDecodeError, "PNG: " + msg);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::kDecodeError, "PNG: " + msg);
  }
  return from_rgb8(buffer.data(), static_cast<int>(image.width),
                   static_cast<int>(image.height));
}

Image decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_ppm(bytes);
  throw Error(ErrorCode::kUnsupportedFormat, "expected PNG or PPM");
}

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_ppm(const Image& rgb) {
  const std::string header = "P6\n" + std::to_string(rgb.width()) + " " +
                             std::to_string(rgb.height()) + "\n255\n";
  auto raster = to_rgb8(rgb);
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), raster.begin(), raster.end());
  return out;
}

std::vector<std::uint8_t> encode_png(const Image& rgb) {
  if (rgb.channels() != 3) throw Error(ErrorCode::kShapeMismatch, "PNG encoder expects RGB");
  const auto raster = to_rgb8(rgb);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(ErrorCode::kIoError, "PNG: cannot create writer");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::kIoError, "PNG: cannot create info");
  }
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIoError, "PNG: encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
        buf->insert(buf->end(), data, data + n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(rgb.width()),
               static_cast<png_uint_32>(rgb.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 1);
  png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(rgb.width()) * 3;
  for (int y = 0; y < rgb.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(raster.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void save_ppm(const Image& rgb, const std::filesystem::path& path) {
  write_file(path, encode_ppm(rgb));
}

void save_png(const Image& rgb, const std::filesystem::path& path) {
  write_file(path, encode_png(rgb));
}

}  // namespace eradate
