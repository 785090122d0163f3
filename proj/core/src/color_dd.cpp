#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "eradate/color.hpp"
#include "eradate/error.hpp"
#include "eradate/rng.hpp"
#include "patch_integral.hpp"

namespace eradate {

namespace {

double xlogx_ratio(double p, double q) { return p > 0.0 ? p * std::log(p / q) : 0.0; }

int axis_bin(double v, double lo, double hi, int bins) {
  const int i = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
  return std::clamp(i, 0, bins - 1);
}

std::vector<int> category_map(const Image& rgb, const DdPartition& part) {
  if (rgb.channels() != 3) throw Error(ErrorCode::kShapeMismatch, "expected RGB image");
  const auto& d = rgb.data();
  std::vector<int> out(d.size() / 3);
  double lab[3];
  for (std::size_t i = 0; i < out.size(); ++i) {
    srgb_to_lab(d[3 * i], d[3 * i + 1], d[3 * i + 2], lab);
    out[i] = part.category(lab[0], lab[1], lab[2]);
  }
  return out;
}

}  // namespace

int lab_bin(double l, double a, double b, int bins) {
  return (axis_bin(l, 0.0, 100.0, bins) * bins + axis_bin(a, -128.0, 128.0, bins)) * bins +
         axis_bin(b, -128.0, 128.0, bins);
}

double mutual_information(const std::vector<std::vector<double>>& joint) {
  if (joint.empty()) return 0.0;
  const std::size_t classes = joint.front().size();
  std::vector<double> pc(classes, 0.0);
  double total = 0.0;
  for (const auto& row : joint) {
    for (std::size_t c = 0; c < classes; ++c) {
      pc[c] += row[c];
      total += row[c];
    }
  }
  if (total <= 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& row : joint) {
    double pi = 0.0;
    for (double v : row) pi += v;
    pi /= total;
    for (std::size_t c = 0; c < classes; ++c) {
      const double p = row[c] / total;
      if (p > 0.0) mi += p * std::log(p / (pi * pc[c] / total));
    }
  }
  return mi;
}

double merge_loss(const std::vector<double>& a, const std::vector<double>& b,
                  double total) {
  double na = 0.0;
  double nb = 0.0;
  for (double v : a) na += v;
  for (double v : b) nb += v;
  const double nab = na + nb;
  double loss = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    loss += xlogx_ratio(a[c], na) + xlogx_ratio(b[c], nb) - xlogx_ratio(a[c] + b[c], nab);
  }
  return loss / total;
}

IbResult agglomerative_ib(const std::vector<std::vector<double>>& joint, int r) {
  const int m = static_cast<int>(joint.size());
  if (r < 1) throw Error(ErrorCode::kInvalidArgument, "r must be >= 1");
  if (m < r) {
    throw Error(ErrorCode::kTooFewBins,
                std::to_string(m) + " occupied bins for r=" + std::to_string(r));
  }
  double total = 0.0;
  for (const auto& row : joint) {
    for (double v : row) total += v;
  }
  std::vector<std::vector<double>> rows = joint;
  std::vector<int> owner(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) owner[static_cast<std::size_t>(i)] = i;
  std::vector<char> active(static_cast<std::size_t>(m), 1);

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> loss(static_cast<std::size_t>(m) * m, inf);
  auto at = [&](int i, int j) -> double& { return loss[static_cast<std::size_t>(i) * m + j]; };
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) at(i, j) = merge_loss(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)], total);
  }

  IbResult result;
  double mi = mutual_information(joint);
  result.mutual_information.push_back(mi);
  for (int clusters = m; clusters > r; --clusters) {
    int bi = -1;
    int bj = -1;
    double best = inf;
    for (int i = 0; i < m; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < m; ++j) {
        if (active[static_cast<std::size_t>(j)] && at(i, j) < best) {
          best = at(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    auto& keep = rows[static_cast<std::size_t>(bi)];
    const auto& gone = rows[static_cast<std::size_t>(bj)];
    for (std::size_t c = 0; c < keep.size(); ++c) keep[c] += gone[c];
    active[static_cast<std::size_t>(bj)] = 0;
    for (auto& o : owner) {
      if (o == bj) o = bi;
    }
    for (int t = 0; t < m; ++t) {
      if (t == bi || !active[static_cast<std::size_t>(t)]) continue;
      const double l = merge_loss(keep, rows[static_cast<std::size_t>(t)], total);
      if (t < bi) {
        at(t, bi) = l;
      } else {
        at(bi, t) = l;
      }
    }
    mi -= best;
    result.mutual_information.push_back(mi);
    result.merges.emplace_back(bi, bj);
  }

  // Compact ids in order of each cluster's lowest member.
  std::vector<int> id_of_owner(static_cast<std::size_t>(m), -1);
  int next = 0;
  result.cluster_of_item.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    int& id = id_of_owner[static_cast<std::size_t>(owner[static_cast<std::size_t>(i)])];
    if (id < 0) id = next++;
    result.cluster_of_item[static_cast<std::size_t>(i)] = id;
  }
  return result;
}

DdPartition train_dd_partition(const std::vector<LabeledImage>& images,
                               const DdOptions& options) {
  const int bins = options.bins;
  if (bins < 1) throw Error(ErrorCode::kInvalidArgument, "bins must be >= 1");
  std::set<int> classes;
  std::size_t total_pixels = 0;
  for (const auto& img : images) {
    if (!img.label) continue;
    classes.insert(*img.label);
    total_pixels += img.pixels.size() / 3;
  }
  if (classes.size() < 2) {
    throw Error(ErrorCode::kSingleClass, "DD training needs at least two classes");
  }
  const int num_classes = *classes.rbegin() + 1;
  const int cells = bins * bins * bins;
  std::vector<std::vector<double>> counts(static_cast<std::size_t>(cells),
                                          std::vector<double>(static_cast<std::size_t>(num_classes), 0.0));

  // Per-image quota proportional to its pixel count.
  Rng rng(options.seed);
  const double fraction =
      total_pixels > options.max_pixels
          ? static_cast<double>(options.max_pixels) / static_cast<double>(total_pixels)
          : 1.0;
  double lab[3];
  for (const auto& img : images) {
    if (!img.label) continue;
    const auto& d = img.pixels.data();
    const std::size_t n = d.size() / 3;
    auto add = [&](std::size_t i) {
      srgb_to_lab(d[3 * i], d[3 * i + 1], d[3 * i + 2], lab);
      counts[static_cast<std::size_t>(lab_bin(lab[0], lab[1], lab[2], bins))]
            [static_cast<std::size_t>(*img.label)] += 1.0;
    };
    if (fraction >= 1.0) {
      for (std::size_t i = 0; i < n; ++i) add(i);
    } else {
      const auto quota = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
      for (std::size_t s = 0; s < quota; ++s) add(static_cast<std::size_t>(rng.uniform_int(n)));
    }
  }

  std::vector<int> occupied;
  std::vector<std::vector<double>> joint;
  for (int b = 0; b < cells; ++b) {
    double s = 0.0;
    for (double v : counts[static_cast<std::size_t>(b)]) s += v;
    if (s > 0.0) {
      occupied.push_back(b);
      joint.push_back(counts[static_cast<std::size_t>(b)]);
    }
  }
  const IbResult ib = agglomerative_ib(joint, options.r);

  DdPartition part;
  part.r = options.r;
  part.bins = bins;
  part.assignment.assign(static_cast<std::size_t>(cells), -1);
  for (std::size_t i = 0; i < occupied.size(); ++i) {
    part.assignment[static_cast<std::size_t>(occupied[i])] = ib.cluster_of_item[i];
  }
  // Empty bins take the category of the nearest occupied bin (grid
  // distance, lowest bin index on ties).
  auto coords = [bins](int b) {
    return std::array<int, 3>{b / (bins * bins), (b / bins) % bins, b % bins};
  };
  for (int b = 0; b < cells; ++b) {
    if (part.assignment[static_cast<std::size_t>(b)] >= 0) continue;
    const auto p = coords(b);
    int best = -1;
    int best_d = std::numeric_limits<int>::max();
    for (int o : occupied) {
      const auto q = coords(o);
      const int dist = (p[0] - q[0]) * (p[0] - q[0]) + (p[1] - q[1]) * (p[1] - q[1]) +
                       (p[2] - q[2]) * (p[2] - q[2]);
      if (dist < best_d) {
        best_d = dist;
        best = o;
      }
    }
    part.assignment[static_cast<std::size_t>(b)] = part.assignment[static_cast<std::size_t>(best)];
  }
  return part;
}

std::vector<double> dd_descriptor(const Image& region, const DdPartition& part) {
  if (region.empty()) throw Error(ErrorCode::kShapeMismatch, "empty region");
  std::vector<double> out(static_cast<std::size_t>(part.r), 0.0);
  const auto cats = category_map(region, part);
  for (int c : cats) out[static_cast<std::size_t>(c)] += 1.0;
  for (auto& v : out) v /= static_cast<double>(cats.size());
  return out;
}

DescriptorSet dd_local_descriptors(const Image& rgb, const DdPartition& part,
                                   const PatchGrid& grid) {
  const auto cats = category_map(rgb, part);
  const std::size_t plane = cats.size();
  std::vector<double> planes(plane * static_cast<std::size_t>(part.r), 0.0);
  for (std::size_t i = 0; i < plane; ++i) {
    planes[static_cast<std::size_t>(cats[i]) * plane + i] = 1.0;
  }
  return detail::patch_means(planes, part.r, rgb.width(), rgb.height(),
                             plan_patches(rgb.width(), rgb.height(), grid));
}

Container to_container(const DdPartition& p) {
  Container c;
  c.kind = ModelKind::kDdPartition;
  c.rows = 1;
  c.cols = static_cast<std::uint32_t>(p.assignment.size());
  c.meta = {static_cast<double>(p.r), static_cast<double>(p.bins)};
  c.payload.assign(p.assignment.begin(), p.assignment.end());
  return c;
}

DdPartition dd_from_container(const Container& c) {
  if (c.kind != ModelKind::kDdPartition || c.meta.size() < 2) {
    throw Error(ErrorCode::kDecodeError, "not a DD partition container");
  }
  DdPartition p;
  p.r = static_cast<int>(c.meta[0]);
  p.bins = static_cast<int>(c.meta[1]);
  if (static_cast<std::size_t>(p.bins) * p.bins * p.bins != c.payload.size()) {
    throw Error(ErrorCode::kDecodeError, "DD partition size mismatch");
  }
  p.assignment.reserve(c.payload.size());
  for (double v : c.payload) {
    const int k = static_cast<int>(v);
    if (k < 0 || k >= p.r) throw Error(ErrorCode::kDecodeError, "DD category out of range");
    p.assignment.push_back(k);
  }
  return p;
}

void save_dd_partition(const DdPartition& p, const std::filesystem::path& path) {
  save_container(to_container(p), path);
}

DdPartition load_dd_partition(const std::filesystem::path& path) {
  return dd_from_container(load_container(path, ModelKind::kDdPartition));
}

}  // namespace eradate
