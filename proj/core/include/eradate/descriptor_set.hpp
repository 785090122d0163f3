#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace eradate {

struct DescriptorGeometry {
  float x = 0.0f;
  float y = 0.0f;
  float scale = 0.0f;

  bool operator==(const DescriptorGeometry&) const = default;
};

// Bag of fixed-length local descriptors with their sampling geometry.
// Values are stored row-major as float32, matching the DSC1 file layout.
class DescriptorSet {
 public:
  DescriptorSet() = default;
  explicit DescriptorSet(int dim) : dim_(dim) {}

  int dim() const { return dim_; }
  std::size_t count() const { return geometry_.size(); }
  bool empty() const { return geometry_.empty(); }

  std::span<const float> row(std::size_t i) const {
    return {values_.data() + i * dim_, static_cast<std::size_t>(dim_)};
  }
  const std::vector<float>& values() const { return values_; }
  const std::vector<DescriptorGeometry>& geometry() const { return geometry_; }

  void add(std::span<const double> v, DescriptorGeometry g);
  void add(std::span<const float> v, DescriptorGeometry g);
  void append(const DescriptorSet& other);
  void reserve(std::size_t n);

  bool operator==(const DescriptorSet&) const = default;

 private:
  int dim_ = 0;
  std::vector<float> values_;
  std::vector<DescriptorGeometry> geometry_;
};

// DSC1: magic "DSC1", dim u32, count u64, count*dim f32, count*(x,y,scale)
// f32; all little-endian.
std::vector<std::uint8_t> encode_descriptor_set(const DescriptorSet& set);
DescriptorSet decode_descriptor_set(std::span<const std::uint8_t> bytes);
void save_descriptor_set(const DescriptorSet& set,
                         const std::filesystem::path& path);
DescriptorSet load_descriptor_set(const std::filesystem::path& path);

}  // namespace eradate
