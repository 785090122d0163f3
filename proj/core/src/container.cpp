#include "eradate/container.hpp"

#include <string>

#include "binary_io.hpp"
#include "eradate/error.hpp"
#include "eradate/image.hpp"

namespace eradate {

std::vector<std::uint8_t> encode_container(const Container& c) {
  if (c.payload.size() != static_cast<std::size_t>(c.rows) * c.cols) {
    throw Error(ErrorCode::kShapeMismatch, "container payload size mismatch");
  }
  detail::ByteWriter w;
  w.raw("STYM", 4);
  w.u16(Container::kVersion);
  w.u8(static_cast<std::uint8_t>(c.kind));
  w.u32(c.rows);
  w.u32(c.cols);
  w.u32(static_cast<std::uint32_t>(c.meta.size()));
  for (double v : c.meta) w.f64(v);
  for (double v : c.payload) w.f64(v);
  return std::move(w.bytes());
}

Container decode_container(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "STYM") {
    throw Error(ErrorCode::kDecodeError, "not a STYM model file");
  }
  const auto version = r.u16();
  if (version != Container::kVersion) {
    throw Error(ErrorCode::kDecodeError,
                "unsupported STYM version " + std::to_string(version));
  }
  Container c;
  c.kind = static_cast<ModelKind>(r.u8());
  c.rows = r.u32();
  c.cols = r.u32();
  const auto meta_count = r.u32();
  if (meta_count > r.remaining() / 8) {
    throw Error(ErrorCode::kDecodeError, "STYM meta count too large");
  }
  c.meta.resize(meta_count);
  for (auto& v : c.meta) v = r.f64();
  const std::size_t n = static_cast<std::size_t>(c.rows) * c.cols;
  if (r.remaining() != n * 8) {
    throw Error(ErrorCode::kDecodeError, "STYM payload size mismatch");
  }
  c.payload.resize(n);
  for (auto& v : c.payload) v = r.f64();
  return c;
}

void save_container(const Container& c, const std::filesystem::path& path) {
  write_file(path, encode_container(c));
}

Container load_container(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingModel, path.string());
  }
  return decode_container(read_file(path));
}

Container load_container(const std::filesystem::path& path,
                         ModelKind expected) {
  Container c = load_container(path);
  if (c.kind != expected) {
    throw Error(ErrorCode::kDecodeError,
                path.string() + ": unexpected model kind " +
                    std::to_string(static_cast<int>(c.kind)));
  }
  return c;
}

}  // namespace eradate
