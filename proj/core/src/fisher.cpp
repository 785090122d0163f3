#include <cmath>

#include "eradate/encoding.hpp"
#include "eradate/error.hpp"

namespace eradate {

std::string_view encoding_kind_name(EncodingKind k) {
  switch (k) {
    case EncodingKind::kBow: return "bow";
    case EncodingKind::kFv: return "fv";
    case EncodingKind::kIfv: return "ifv";
    case EncodingKind::kRcc: return "rcc";
    case EncodingKind::kDunnet: return "dunnet";
  }
  return "unknown";
}

EncodedVector bow_encode(const DescriptorSet& desc, const KmeansModel& model) {
  EncodedVector out;
  out.kind = EncodingKind::kBow;
  out.values.assign(static_cast<std::size_t>(model.k()), 0.0);
  // A default-constructed empty set carries no dimension to check.
  const bool untyped_empty = desc.empty() && desc.dim() == 0;
  if (!untyped_empty && desc.dim() != model.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "descriptor dim " + std::to_string(desc.dim()) +
                    " != codebook dim " + std::to_string(model.dim()));
  }
  if (desc.empty()) return out;
  for (int c : kmeans_assign(model, to_matrix(desc))) {
    out.values[static_cast<std::size_t>(c)] += 1.0;
  }
  const double n = static_cast<double>(desc.count());
  for (auto& v : out.values) v /= n;
  return out;
}

EncodedVector fisher_vector(const DescriptorSet& desc, const GmmModel& gmm,
                            PosteriorMode mode) {
  if (desc.empty()) throw Error(ErrorCode::kEmptySet, "no descriptors to encode");
  if (desc.dim() != gmm.dim()) {
    throw Error(ErrorCode::kDimMismatch,
                "descriptor dim " + std::to_string(desc.dim()) +
                    " != GMM dim " + std::to_string(gmm.dim()));
  }
  return fisher_vector(to_matrix(desc), gmm, mode);
}

EncodedVector fisher_vector(const Matrix& x, const GmmModel& gmm,
                            PosteriorMode mode) {
  if (x.rows() == 0) throw Error(ErrorCode::kEmptySet, "no descriptors to encode");
  if (x.cols() != gmm.dim()) {
    throw Error(ErrorCode::kDimMismatch, "descriptor dim != GMM dim");
  }
  const int k = gmm.k();
  const int d = gmm.dim();
  const double n = static_cast<double>(x.rows());
  const Matrix q = gmm_posteriors(gmm, x, mode);
  const Vector s0 = q.colwise().sum().transpose();
  const Matrix s1 = q.transpose() * x;
  const Matrix s2 = q.transpose() * x.cwiseAbs2();

  EncodedVector out;
  out.kind = EncodingKind::kFv;
  out.values.assign(static_cast<std::size_t>(2 * k * d), 0.0);
  const std::size_t v_offset = static_cast<std::size_t>(k * d);
  for (int c = 0; c < k; ++c) {
    const double w = gmm.weights(c);
    const double u_scale = 1.0 / (n * std::sqrt(w));
    const double v_scale = 1.0 / (n * std::sqrt(2.0 * w));
    for (int j = 0; j < d; ++j) {
      const double mu = gmm.means(c, j);
      const double var = gmm.variances(c, j);
      const double sigma = std::sqrt(var);
      // sum q (x - mu) and sum q (x - mu)^2 from the raw moments.
      const double first = s1(c, j) - s0(c) * mu;
      const double second = s2(c, j) - 2.0 * mu * s1(c, j) + mu * mu * s0(c);
      const std::size_t idx = static_cast<std::size_t>(c * d + j);
      out.values[idx] = u_scale * first / sigma;
      out.values[v_offset + idx] = v_scale * (second / var - s0(c));
    }
  }
  return out;
}

void power_l2_normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (auto& z : v) {
    z = std::copysign(std::sqrt(std::abs(z)), z);
    norm += z * z;
  }
  if (norm <= 0.0) return;
  norm = std::sqrt(norm);
  for (auto& z : v) z /= norm;
}

EncodedVector ifv_normalize(const EncodedVector& v) {
  EncodedVector out = v;
  out.kind = EncodingKind::kIfv;
  power_l2_normalize(out.values);
  return out;
}

}  // namespace eradate
