#pragma once

#include <vector>

#include "eradate/color.hpp"

namespace eradate::detail {

// Mean of each of `channels` per-pixel planes over every patch, via one
// summed-area table per channel. `planes` is channel-major (c * w * h).
inline DescriptorSet patch_means(const std::vector<double>& planes,
                                 int channels, int width, int height,
                                 const std::vector<Patch>& patches) {
  const std::size_t stride = static_cast<std::size_t>(width) + 1;
  std::vector<double> table(stride * (static_cast<std::size_t>(height) + 1));
  std::vector<double> out(patches.size() * static_cast<std::size_t>(channels));
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (int c = 0; c < channels; ++c) {
    const double* p = planes.data() + static_cast<std::size_t>(c) * plane;
    for (int y = 0; y < height; ++y) {
      double row = 0.0;
      for (int x = 0; x < width; ++x) {
        row += p[static_cast<std::size_t>(y) * width + x];
        table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
      }
    }
    for (std::size_t i = 0; i < patches.size(); ++i) {
      const auto& q = patches[i];
      const std::size_t x0 = q.x, y0 = q.y;
      const std::size_t x1 = x0 + q.side, y1 = y0 + q.side;
      const double s = table[y1 * stride + x1] - table[y0 * stride + x1] -
                       table[y1 * stride + x0] + table[y0 * stride + x0];
      out[i * channels + c] = s / (static_cast<double>(q.side) * q.side);
    }
  }
  DescriptorSet set(channels);
  set.reserve(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto& q = patches[i];
    set.add(std::span<const double>(out.data() + i * channels,
                                    static_cast<std::size_t>(channels)),
            {static_cast<float>(q.x + q.side / 2.0),
             static_cast<float>(q.y + q.side / 2.0),
             static_cast<float>(q.side)});
  }
  return set;
}

}  // namespace eradate::detail
