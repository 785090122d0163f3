#include <algorithm>
#include <cmath>
#include <set>

#include "eradate/classification.hpp"
#include "eradate/error.hpp"

namespace eradate {

namespace {

void check_nonnegative(const Matrix& m) {
  if ((m.array() < 0.0).any()) {
    throw Error(ErrorCode::kNegativeFeature, "chi-square kernel needs nonnegative features");
  }
}

double chi2_pair(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double sum = a[k] + b[k];
    if (sum == 0.0) continue;
    const double diff = a[k] - b[k];
    s += diff * diff / (sum + kChi2Epsilon);
  }
  return s;
}

// Symmetric distance matrix of the rows of x.
Matrix chi2_self(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = chi2_pair(x.row(i).data(), x.row(j).data(), x.cols());
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double mean_upper(const Matrix& d) {
  const Eigen::Index n = d.rows();
  if (n < 2) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) s += d(i, j);
  }
  return s / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double gamma_from_mean(double mean) { return mean > 0.0 ? 1.0 / mean : 1.0; }

}  // namespace

std::string_view kernel_kind_name(KernelKind k) {
  return k == KernelKind::kChi2Exp ? "chi2" : "linear";
}

KernelKind parse_kernel_kind(std::string_view s) {
  if (s == "chi2" || s == "abs-chi2") return KernelKind::kChi2Exp;
  if (s == "linear") return KernelKind::kLinear;
  throw Error(ErrorCode::kInvalidArgument, "unknown kernel " + std::string(s));
}

Matrix chi2_distances(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw Error(ErrorCode::kDimMismatch, "feature dims differ");
  check_nonnegative(x);
  check_nonnegative(y);
  Matrix d(y.rows(), x.rows());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
      d(i, j) = chi2_pair(y.row(i).data(), x.row(j).data(), x.cols());
    }
  }
  return d;
}

double chi2_auto_gamma(const Matrix& x) {
  check_nonnegative(x);
  return gamma_from_mean(mean_upper(chi2_self(x)));
}

Matrix chi2_kernel(const Matrix& x, const Matrix& y, double gamma) {
  if (gamma <= 0.0) gamma = chi2_auto_gamma(x);
  return (-gamma * chi2_distances(x, y).array()).exp().matrix();
}

Matrix linear_kernel(const Matrix& x, const Matrix& y) {
  if (x.cols() != y.cols()) throw Error(ErrorCode::kDimMismatch, "feature dims differ");
  return y * x.transpose();
}

Matrix combine_kernels(const std::vector<Matrix>& kernels, std::vector<double> weights) {
  if (kernels.empty()) throw Error(ErrorCode::kInvalidArgument, "no kernels to combine");
  if (weights.empty()) weights.assign(kernels.size(), 1.0);
  if (weights.size() != kernels.size()) {
    throw Error(ErrorCode::kDimMismatch, "one weight per kernel required");
  }
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error(ErrorCode::kInvalidArgument, "negative kernel weight");
    total += w;
  }
  if (total <= 0.0) throw Error(ErrorCode::kInvalidArgument, "kernel weights all zero");
  Matrix out = Matrix::Zero(kernels[0].rows(), kernels[0].cols());
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (kernels[i].rows() != out.rows() || kernels[i].cols() != out.cols()) {
      throw Error(ErrorCode::kDimMismatch, "kernel matrices differ in shape");
    }
    if (weights[i] > 0.0) out += (weights[i] / total) * kernels[i];
  }
  return out;
}

Matrix training_kernel(std::vector<KernelBlock>& blocks,
                       const std::vector<Matrix>& features) {
  if (blocks.size() != features.size()) {
    throw Error(ErrorCode::kDimMismatch, "one feature matrix per kernel block");
  }
  std::vector<Matrix> kernels;
  std::vector<double> weights;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Matrix& x = features[b];
    blocks[b].dim = static_cast<int>(x.cols());
    if (blocks[b].kind == KernelKind::kLinear) {
      kernels.push_back(linear_kernel(x, x));
    } else {
      check_nonnegative(x);
      const Matrix d = chi2_self(x);
      if (blocks[b].gamma <= 0.0) blocks[b].gamma = gamma_from_mean(mean_upper(d));
      kernels.push_back((-blocks[b].gamma * d.array()).exp().matrix());
    }
    weights.push_back(blocks[b].weight);
  }
  return combine_kernels(kernels, weights);
}

Matrix cross_kernel(const std::vector<KernelBlock>& blocks,
                    const std::vector<Matrix>& train,
                    const std::vector<Matrix>& test) {
  if (blocks.size() != train.size() || blocks.size() != test.size()) {
    throw Error(ErrorCode::kDimMismatch, "one feature matrix per kernel block");
  }
  std::vector<Matrix> kernels;
  std::vector<double> weights;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (blocks[b].kind == KernelKind::kLinear) {
      kernels.push_back(linear_kernel(train[b], test[b]));
    } else {
      kernels.push_back(chi2_kernel(train[b], test[b], blocks[b].gamma));
    }
    weights.push_back(blocks[b].weight);
  }
  return combine_kernels(kernels, weights);
}

Matrix FeatureClassifier::decision(const std::vector<Matrix>& features) const {
  if (features.size() != blocks.size()) {
    throw Error(ErrorCode::kDimMismatch, "one feature matrix per kernel block");
  }
  std::vector<Matrix> train;
  Eigen::Index offset = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (features[b].cols() != blocks[b].dim) {
      throw Error(ErrorCode::kDimMismatch, "feature block has the wrong dimension");
    }
    train.push_back(support.middleCols(offset, blocks[b].dim));
    offset += blocks[b].dim;
  }
  const Matrix k = cross_kernel(blocks, train, features);
  Matrix out = k * coef.transpose();
  for (Eigen::Index c = 0; c < out.cols(); ++c) out.col(c).array() += bias[static_cast<std::size_t>(c)];
  return out;
}

std::vector<int> FeatureClassifier::predict(const std::vector<Matrix>& features) const {
  return argmax_rows(decision(features), classes);
}

FeatureClassifier make_classifier(const std::vector<KernelBlock>& blocks,
                                  const std::vector<Matrix>& train_features,
                                  const OvaModel& ova, double C) {
  std::set<int> sv;
  for (const auto& m : ova.models) {
    for (int i : m.support()) sv.insert(i);
  }
  const std::vector<int> index(sv.begin(), sv.end());
  FeatureClassifier fc;
  fc.blocks = blocks;
  fc.classes = ova.classes;
  fc.C = C;
  Eigen::Index total_dim = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    fc.blocks[b].dim = static_cast<int>(train_features[b].cols());
    total_dim += train_features[b].cols();
  }
  fc.support.resize(static_cast<Eigen::Index>(index.size()), total_dim);
  for (std::size_t s = 0; s < index.size(); ++s) {
    Eigen::Index offset = 0;
    for (const auto& f : train_features) {
      fc.support.row(static_cast<Eigen::Index>(s)).segment(offset, f.cols()) = f.row(index[s]);
      offset += f.cols();
    }
  }
  fc.coef = Matrix::Zero(ova.num_classes(), static_cast<Eigen::Index>(index.size()));
  for (int c = 0; c < ova.num_classes(); ++c) {
    const auto& m = ova.models[static_cast<std::size_t>(c)];
    for (std::size_t s = 0; s < index.size(); ++s) {
      const auto i = static_cast<std::size_t>(index[s]);
      fc.coef(c, static_cast<Eigen::Index>(s)) = m.alphas[i] * m.labels[i];
    }
    fc.bias.push_back(m.bias);
  }
  return fc;
}

Container to_container(const FeatureClassifier& f) {
  Container c;
  c.kind = ModelKind::kOva;
  const auto nc = static_cast<Eigen::Index>(f.classes.size());
  c.rows = static_cast<std::uint32_t>(f.support.rows());
  c.cols = static_cast<std::uint32_t>(f.support.cols() + nc);
  c.meta.push_back(f.C);
  c.meta.push_back(static_cast<double>(nc));
  for (int k : f.classes) c.meta.push_back(k);
  for (double b : f.bias) c.meta.push_back(b);
  c.meta.push_back(static_cast<double>(f.blocks.size()));
  for (const auto& b : f.blocks) {
    c.meta.push_back(static_cast<double>(b.kind));
    c.meta.push_back(b.gamma);
    c.meta.push_back(b.dim);
    c.meta.push_back(b.weight);
  }
  c.payload.reserve(static_cast<std::size_t>(c.rows) * c.cols);
  for (Eigen::Index s = 0; s < f.support.rows(); ++s) {
    for (Eigen::Index j = 0; j < f.support.cols(); ++j) c.payload.push_back(f.support(s, j));
    for (Eigen::Index k = 0; k < nc; ++k) c.payload.push_back(f.coef(k, s));
  }
  return c;
}

FeatureClassifier classifier_from_container(const Container& c) {
  auto fail = [] { return Error(ErrorCode::kDecodeError, "malformed classifier container"); };
  if (c.kind != ModelKind::kOva || c.meta.size() < 3) throw fail();
  FeatureClassifier f;
  std::size_t p = 0;
  f.C = c.meta[p++];
  const auto nc = static_cast<std::size_t>(c.meta[p++]);
  if (c.meta.size() < p + 2 * nc + 1) throw fail();
  for (std::size_t k = 0; k < nc; ++k) f.classes.push_back(static_cast<int>(c.meta[p++]));
  for (std::size_t k = 0; k < nc; ++k) f.bias.push_back(c.meta[p++]);
  const auto nb = static_cast<std::size_t>(c.meta[p++]);
  if (c.meta.size() != p + 4 * nb) throw fail();
  std::size_t total_dim = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    KernelBlock kb;
    kb.kind = static_cast<KernelKind>(static_cast<int>(c.meta[p++]));
    kb.gamma = c.meta[p++];
    kb.dim = static_cast<int>(c.meta[p++]);
    kb.weight = c.meta[p++];
    total_dim += static_cast<std::size_t>(kb.dim);
    f.blocks.push_back(kb);
  }
  if (c.cols != total_dim + nc) throw fail();
  const auto rows = static_cast<Eigen::Index>(c.rows);
  f.support.resize(rows, static_cast<Eigen::Index>(total_dim));
  f.coef.resize(static_cast<Eigen::Index>(nc), rows);
  for (Eigen::Index s = 0; s < rows; ++s) {
    const double* row = c.payload.data() + static_cast<std::size_t>(s) * c.cols;
    for (std::size_t j = 0; j < total_dim; ++j) f.support(s, static_cast<Eigen::Index>(j)) = row[j];
    for (std::size_t k = 0; k < nc; ++k) f.coef(static_cast<Eigen::Index>(k), s) = row[total_dim + k];
  }
  return f;
}

void save_classifier(const FeatureClassifier& c, const std::filesystem::path& path) {
  save_container(to_container(c), path);
}

FeatureClassifier load_classifier(const std::filesystem::path& path) {
  return classifier_from_container(load_container(path, ModelKind::kOva));
}

}  // namespace eradate
