#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace eradate {

enum class ModelKind : std::uint8_t {
  kKmeans = 1,
  kGmm = 2,
  kSvm = 3,
  kOva = 4,
  kDdPartition = 5,
  kColorCodebook = 6,
  kFeatures = 7,
};

// The STYM model container shared by every trained model in the library.
//
//   magic "STYM" | version u16 | kind u8 | rows u32 | cols u32 |
//   meta_count u32 | meta_count x f64 | rows*cols x f64 (row-major)
//
// All integers and floats are little-endian. `meta` holds the scalars a
// model needs besides its main matrix (inertia, kernel parameters, ...);
// each kind documents its own layout next to its to/from functions.
struct Container {
  static constexpr std::uint16_t kVersion = 1;

  ModelKind kind = ModelKind::kKmeans;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> meta;
  std::vector<double> payload;
};

std::vector<std::uint8_t> encode_container(const Container& c);
Container decode_container(std::span<const std::uint8_t> bytes);
void save_container(const Container& c, const std::filesystem::path& path);
Container load_container(const std::filesystem::path& path);
// Loads and checks the kind tag; throws MissingModel / DecodeError.
Container load_container(const std::filesystem::path& path, ModelKind expected);

}  // namespace eradate
