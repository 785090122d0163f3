#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "eradate/classification.hpp"
#include "eradate/error.hpp"

namespace eradate {

namespace {

constexpr double kTau = 1e-12;

double dual_objective(const std::vector<double>& alpha, const std::vector<double>& grad) {
  // With G = Q alpha - e: sum(alpha) - 1/2 alpha^T Q alpha = -1/2 alpha^T (G - e).
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * (grad[i] - 1.0);
  return -0.5 * s;
}

}  // namespace

std::vector<int> SvmModel::support() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (alphas[i] > 0.0) out.push_back(static_cast<int>(i));
  }
  return out;
}

SvmModel svm_train_binary(const Matrix& kernel, const std::vector<int>& labels,
                          double C, const SmoOptions& options) {
  const Eigen::Index n = kernel.rows();
  if (kernel.cols() != n || static_cast<Eigen::Index>(labels.size()) != n) {
    throw Error(ErrorCode::kDimMismatch, "kernel must be N x N with N labels");
  }
  if (!(C > 0.0)) throw Error(ErrorCode::kInvalidArgument, "C must be positive");
  bool pos = false;
  bool neg = false;
  for (int y : labels) {
    if (y == 1) {
      pos = true;
    } else if (y == -1) {
      neg = true;
    } else {
      throw Error(ErrorCode::kInvalidArgument, "binary labels must be +1 or -1");
    }
  }
  if (!pos || !neg) throw Error(ErrorCode::kSingleClass, "both classes must be present");

  const auto un = static_cast<std::size_t>(n);
  std::vector<double> alpha(un, 0.0);
  std::vector<double> grad(un, -1.0);
  std::vector<double> y(un);
  for (std::size_t i = 0; i < un; ++i) y[i] = labels[i];
  const long cap = options.max_iterations > 0
                       ? options.max_iterations
                       : std::max<long>(100000, 100 * static_cast<long>(n));

  SvmModel model;
  model.C = C;
  model.labels = labels;
  auto upper = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0.0);
  };
  auto lower = [&](std::size_t t) {
    return (y[t] > 0 && alpha[t] > 0.0) || (y[t] < 0 && alpha[t] < C);
  };
  auto record = [&] {
    const double d = dual_objective(alpha, grad);
    if (!model.dual_trace.empty()) {
      const double prev = model.dual_trace.back();
      if (d < prev - 1e-9 * std::max(1.0, std::abs(prev))) {
        throw Error(ErrorCode::kNumerical, "SMO dual objective decreased");
      }
    }
    model.dual_trace.push_back(d);
  };

  record();
  long iter = 0;
  double gap = 0.0;
  for (;; ++iter) {
    // Maximal violating index i, then j by second-order gain.
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = un;
    for (std::size_t t = 0; t < un; ++t) {
      if (upper(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t j = un;
    double best_gain = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < un; ++t) {
      if (!lower(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      if (i == un) continue;
      const double b = gmax - v;
      if (b > 0.0) {
        double a = kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) +
                   kernel(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(t)) -
                   2.0 * kernel(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t));
        if (a <= 0.0) a = kTau;
        const double gain = -(b * b) / a;
        if (gain < best_gain) {
          best_gain = gain;
          j = t;
        }
      }
    }
    gap = gmax - gmin;
    if (i == un || j == un || gap < options.tolerance || iter >= cap) break;

    const auto ii = static_cast<Eigen::Index>(i);
    const auto jj = static_cast<Eigen::Index>(j);
    double quad = kernel(ii, ii) + kernel(jj, jj) - 2.0 * kernel(ii, jj);
    if (quad <= 0.0) quad = kTau;
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    // The kernel is symmetric; rows are contiguous.
    const double* ki = kernel.row(ii).data();
    const double* kj = kernel.row(jj).data();
    const double ci = y[i] * di;
    const double cj = y[j] * dj;
    for (std::size_t t = 0; t < un; ++t) grad[t] += y[t] * (ci * ki[t] + cj * kj[t]);
    if ((iter + 1) % n == 0) record();
  }
  record();
  model.iterations = iter;
  model.kkt_gap = gap;

  // Bias from the unbound support vectors; midpoint of the feasible
  // interval when there are none.
  double sum = 0.0;
  int free_count = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < un; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < C) {
      sum += yg;
      ++free_count;
    } else if ((alpha[t] >= C && y[t] < 0) || (alpha[t] <= 0.0 && y[t] > 0)) {
      ub = std::min(ub, yg);
    } else {
      lb = std::max(lb, yg);
    }
  }
  const double rho = free_count > 0 ? sum / free_count : 0.5 * (ub + lb);
  model.bias = -rho;
  model.alphas = std::move(alpha);
  return model;
}

std::vector<double> svm_decision(const SvmModel& model, const Matrix& kernel) {
  if (kernel.cols() != static_cast<Eigen::Index>(model.alphas.size())) {
    throw Error(ErrorCode::kDimMismatch, "kernel columns != training points");
  }
  std::vector<double> out(static_cast<std::size_t>(kernel.rows()), model.bias);
  for (std::size_t t = 0; t < model.alphas.size(); ++t) {
    const double a = model.alphas[t] * model.labels[t];
    if (a == 0.0) continue;
    for (Eigen::Index m = 0; m < kernel.rows(); ++m) {
      out[static_cast<std::size_t>(m)] += a * kernel(m, static_cast<Eigen::Index>(t));
    }
  }
  return out;
}

OvaModel ova_train(const Matrix& kernel, const std::vector<int>& labels, double C,
                   const SmoOptions& options) {
  const std::set<int> present(labels.begin(), labels.end());
  if (present.size() < 2) {
    throw Error(ErrorCode::kSingleClass, "one-vs-all needs at least two classes");
  }
  OvaModel m;
  m.classes.assign(present.begin(), present.end());
  std::vector<int> y(labels.size());
  for (int c : m.classes) {
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == c ? 1 : -1;
    m.models.push_back(svm_train_binary(kernel, y, C, options));
  }
  return m;
}

Matrix ova_decision(const OvaModel& model, const Matrix& kernel) {
  Matrix out(kernel.rows(), model.num_classes());
  for (int c = 0; c < model.num_classes(); ++c) {
    const auto d = svm_decision(model.models[static_cast<std::size_t>(c)], kernel);
    for (std::size_t m = 0; m < d.size(); ++m) out(static_cast<Eigen::Index>(m), c) = d[m];
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& decision, const std::vector<int>& classes) {
  std::vector<int> out(static_cast<std::size_t>(decision.rows()));
  for (Eigen::Index m = 0; m < decision.rows(); ++m) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < decision.cols(); ++c) {
      if (decision(m, c) > decision(m, best)) best = c;
    }
    out[static_cast<std::size_t>(m)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

std::vector<int> ova_predict(const OvaModel& model, const Matrix& kernel) {
  return argmax_rows(ova_decision(model, kernel), model.classes);
}

CSelection select_c(const Matrix& train_kernel, const std::vector<int>& train_labels,
                    const Matrix& val_kernel, const std::vector<int>& val_labels,
                    const std::vector<double>& grid) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty C grid");
  CSelection sel;
  sel.grid = grid;
  sel.C = grid.front();
  if (val_labels.empty()) return sel;
  double best = -1.0;
  for (double c : grid) {
    const auto pred = ova_predict(ova_train(train_kernel, train_labels, c), val_kernel);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == val_labels[i];
    const double acc = static_cast<double>(correct) / static_cast<double>(pred.size());
    sel.validation_accuracy.push_back(acc);
    if (acc > best) {
      best = acc;
      sel.C = c;
    }
  }
  return sel;
}

Container to_container(const SvmModel& m) {
  Container c;
  c.kind = ModelKind::kSvm;
  c.rows = static_cast<std::uint32_t>(m.alphas.size());
  c.cols = 2;
  c.meta = {m.bias, m.C};
  for (std::size_t i = 0; i < m.alphas.size(); ++i) {
    c.payload.push_back(m.alphas[i]);
    c.payload.push_back(m.labels[i]);
  }
  return c;
}

SvmModel svm_from_container(const Container& c) {
  if (c.kind != ModelKind::kSvm || c.cols != 2 || c.meta.size() < 2) {
    throw Error(ErrorCode::kDecodeError, "not an SVM container");
  }
  SvmModel m;
  m.bias = c.meta[0];
  m.C = c.meta[1];
  for (std::uint32_t i = 0; i < c.rows; ++i) {
    m.alphas.push_back(c.payload[2 * i]);
    m.labels.push_back(static_cast<int>(c.payload[2 * i + 1]));
  }
  return m;
}

}  // namespace eradate
