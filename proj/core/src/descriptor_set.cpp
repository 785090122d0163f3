#include "eradate/descriptor_set.hpp"

#include "binary_io.hpp"
#include "eradate/error.hpp"
#include "eradate/image.hpp"

namespace eradate {

void DescriptorSet::add(std::span<const double> v, DescriptorGeometry g) {
  if (static_cast<int>(v.size()) != dim_) {
    throw Error(ErrorCode::kDimMismatch, "descriptor length != set dim");
  }
  for (double x : v) values_.push_back(static_cast<float>(x));
  geometry_.push_back(g);
}

void DescriptorSet::add(std::span<const float> v, DescriptorGeometry g) {
  if (static_cast<int>(v.size()) != dim_) {
    throw Error(ErrorCode::kDimMismatch, "descriptor length != set dim");
  }
  values_.insert(values_.end(), v.begin(), v.end());
  geometry_.push_back(g);
}

void DescriptorSet::append(const DescriptorSet& other) {
  if (other.empty()) return;
  if (empty() && dim_ == 0) dim_ = other.dim_;
  if (other.dim_ != dim_) {
    throw Error(ErrorCode::kDimMismatch, "cannot append sets of different dim");
  }
  values_.insert(values_.end(), other.values_.begin(), other.values_.end());
  geometry_.insert(geometry_.end(), other.geometry_.begin(),
                   other.geometry_.end());
}

void DescriptorSet::reserve(std::size_t n) {
  values_.reserve(n * dim_);
  geometry_.reserve(n);
}

std::vector<std::uint8_t> encode_descriptor_set(const DescriptorSet& set) {
  detail::ByteWriter w;
  w.raw("DSC1", 4);
  w.u32(static_cast<std::uint32_t>(set.dim()));
  w.u64(set.count());
  for (float v : set.values()) w.f32(v);
  for (const auto& g : set.geometry()) {
    w.f32(g.x);
    w.f32(g.y);
    w.f32(g.scale);
  }
  return std::move(w.bytes());
}

DescriptorSet decode_descriptor_set(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "DSC1") {
    throw Error(ErrorCode::kDecodeError, "not a DSC1 descriptor file");
  }
  const auto dim = r.u32();
  const auto count = r.u64();
  if ((dim == 0 && count != 0) ||
      count > r.remaining() / (4ull * (dim + 3))) {
    throw Error(ErrorCode::kDecodeError, "DSC1 header inconsistent with size");
  }
  DescriptorSet set(static_cast<int>(dim));
  set.reserve(count);
  std::vector<float> values(count * dim);
  for (auto& v : values) v = r.f32();
  for (std::uint64_t i = 0; i < count; ++i) {
    DescriptorGeometry g{r.f32(), r.f32(), r.f32()};
    set.add(std::span<const float>(values.data() + i * dim, dim), g);
  }
  if (!r.at_end()) throw Error(ErrorCode::kDecodeError, "trailing DSC1 bytes");
  return set;
}

void save_descriptor_set(const DescriptorSet& set,
                         const std::filesystem::path& path) {
  write_file(path, encode_descriptor_set(set));
}

DescriptorSet load_descriptor_set(const std::filesystem::path& path) {
  return decode_descriptor_set(read_file(path));
}

}  // namespace eradate
