#include "eradate/dunnet_layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eradate/error.hpp"

namespace eradate::nn {

namespace {

template <typename T>
using MapMat = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const Mat<T>>;

// col has Cin*9 rows and H*W columns.
template <typename T>
void im2col(const T* x, int c, int h, int w, Mat<T>& col) {
  col.resize(static_cast<Eigen::Index>(c) * 9, static_cast<Eigen::Index>(h) * w);
  for (int ci = 0; ci < c; ++ci) {
    const T* plane = x + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        T* row = col.row((ci * 3 + ky) * 3 + kx).data();
        const int dx = kx - 1;
        const int x_lo = std::max(0, -dx);
        const int x_hi = std::min(w, w - dx);
        for (int y = 0; y < h; ++y) {
          T* out = row + static_cast<std::size_t>(y) * w;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) {
            std::fill(out, out + w, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(sy) * w;
          std::fill(out, out + x_lo, T(0));
          std::copy(src + x_lo + dx, src + x_hi + dx, out + x_lo);
          std::fill(out + x_hi, out + w, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const Mat<T>& col, int c, int h, int w, T* dx) {
  for (int ci = 0; ci < c; ++ci) {
    T* plane = dx + static_cast<std::size_t>(ci) * h * w;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const T* row = col.row((ci * 3 + ky) * 3 + kx).data();
        const int dxo = kx - 1;
        const int x_lo = std::max(0, -dxo);
        const int x_hi = std::min(w, w - dxo);
        for (int y = 0; y < h; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const T* in = row + static_cast<std::size_t>(y) * w;
          T* dst = plane + static_cast<std::size_t>(sy) * w;
          for (int x = x_lo; x < x_hi; ++x) dst[x + dxo] += in[x];
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv3x3_forward(const Tensor<T>& x, const Mat<T>& weight, const Vec<T>& bias,
                     Tensor<T>& y) {
  if (weight.cols() != static_cast<Eigen::Index>(x.c) * 9 || bias.size() != weight.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "conv weight does not match input channels");
  }
  const int cout = static_cast<int>(weight.rows());
  y = Tensor<T>(x.n, cout, x.h, x.w);
  const Eigen::Index hw = static_cast<Eigen::Index>(x.h) * x.w;
  Mat<T> col;
  for (int i = 0; i < x.n; ++i) {
    im2col(x.sample(i), x.c, x.h, x.w, col);
    MapMat<T> out(y.sample(i), cout, hw);
    out.noalias() = weight * col;
    out.colwise() += bias;
  }
}

template <typename T>
void conv3x3_backward(const Tensor<T>& x, const Mat<T>& weight, const Tensor<T>& dy,
                      Tensor<T>& dx, Mat<T>& dweight, Vec<T>& dbias) {
  const int cout = static_cast<int>(weight.rows());
  if (dy.n != x.n || dy.c != cout || dy.h != x.h || dy.w != x.w) {
    throw Error(ErrorCode::kShapeMismatch, "conv gradient shape mismatch");
  }
  dx = Tensor<T>(x.n, x.c, x.h, x.w);
  const Eigen::Index hw = static_cast<Eigen::Index>(x.h) * x.w;
  Mat<T> col;
  Mat<T> dcol;
  for (int i = 0; i < x.n; ++i) {
    im2col(x.sample(i), x.c, x.h, x.w, col);
    ConstMapMat<T> g(dy.sample(i), cout, hw);
    dweight.noalias() += g * col.transpose();
    // Plain loop: vectorized reductions over this unaligned view would
    // change summation order with the heap address.
    for (int co = 0; co < cout; ++co) {
      const T* row = dy.sample(i) + static_cast<std::size_t>(co) * hw;
      T s = T(0);
      for (Eigen::Index k = 0; k < hw; ++k) s += row[k];
      dbias(co) += s;
    }
    dcol.noalias() = weight.transpose() * g;
    col2im_add(dcol, x.c, x.h, x.w, dx.sample(i));
  }
}

template <typename T>
void relu_forward(Tensor<T>& x) {
  for (auto& v : x.data) v = v > T(0) ? v : T(0);
}

template <typename T>
void relu_backward(const Tensor<T>& y, Tensor<T>& dy) {
  for (std::size_t i = 0; i < dy.data.size(); ++i) {
    if (!(y.data[i] > T(0))) dy.data[i] = T(0);
  }
}

template <typename T>
void maxpool2_forward(const Tensor<T>& x, Tensor<T>& y, std::vector<std::int32_t>& argmax) {
  const int oh = x.h / 2;
  const int ow = x.w / 2;
  if (oh < 1 || ow < 1) throw Error(ErrorCode::kShapeMismatch, "pooling input too small");
  y = Tensor<T>(x.n, x.c, oh, ow);
  argmax.assign(y.data.size(), 0);
  std::size_t o = 0;
  for (int i = 0; i < x.n; ++i) {
    const T* s = x.sample(i);
    for (int c = 0; c < x.c; ++c) {
      const std::size_t base = static_cast<std::size_t>(c) * x.h * x.w;
      for (int py = 0; py < oh; ++py) {
        for (int px = 0; px < ow; ++px, ++o) {
          std::size_t best = base + static_cast<std::size_t>(2 * py) * x.w + 2 * px;
          T best_v = s[best];
          for (int k = 1; k < 4; ++k) {
            const std::size_t idx =
                base + static_cast<std::size_t>(2 * py + k / 2) * x.w + 2 * px + k % 2;
            if (s[idx] > best_v) {
              best_v = s[idx];
              best = idx;
            }
          }
          y.data[o] = best_v;
          argmax[o] = static_cast<std::int32_t>(best);
        }
      }
    }
  }
}

template <typename T>
void maxpool2_backward(const Tensor<T>& x_shape, const Tensor<T>& dy,
                       const std::vector<std::int32_t>& argmax, Tensor<T>& dx) {
  if (argmax.size() != dy.data.size()) {
    throw Error(ErrorCode::kShapeMismatch, "pool gradient shape mismatch");
  }
  dx = Tensor<T>(x_shape.n, x_shape.c, x_shape.h, x_shape.w);
  const std::size_t per_sample = dy.sample_size();
  for (int i = 0; i < dy.n; ++i) {
    T* d = dx.sample(i);
    const std::size_t off = static_cast<std::size_t>(i) * per_sample;
    for (std::size_t k = 0; k < per_sample; ++k) {
      d[argmax[off + k]] += dy.data[off + k];
    }
  }
}

template <typename T>
void fc_forward(const Mat<T>& x, const Mat<T>& weight, const Vec<T>& bias, Mat<T>& y) {
  if (x.cols() != weight.cols() || bias.size() != weight.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "fully connected layer shape mismatch");
  }
  y.noalias() = x * weight.transpose();
  y.rowwise() += bias.transpose();
}

template <typename T>
void fc_backward(const Mat<T>& x, const Mat<T>& weight, const Mat<T>& dy,
                 Mat<T>& dx, Mat<T>& dweight, Vec<T>& dbias) {
  dweight.noalias() += dy.transpose() * x;
  dbias += dy.colwise().sum().transpose();
  dx.noalias() = dy * weight;
}

template <typename T>
T softmax_cross_entropy(const Mat<T>& logits, const std::vector<int>& labels,
                        Mat<T>& probs, Mat<T>& dlogits) {
  const Eigen::Index b = logits.rows();
  if (static_cast<Eigen::Index>(labels.size()) != b) {
    throw Error(ErrorCode::kShapeMismatch, "label count != batch size");
  }
  probs.resize(b, logits.cols());
  dlogits.resize(b, logits.cols());
  T loss = T(0);
  for (Eigen::Index i = 0; i < b; ++i) {
    const int label = labels[static_cast<std::size_t>(i)];
    if (label < 0 || label >= logits.cols()) {
      throw Error(ErrorCode::kInvalidArgument, "label out of range");
    }
    const T mx = logits.row(i).maxCoeff();
    T sum = T(0);
    for (Eigen::Index k = 0; k < logits.cols(); ++k) {
      probs(i, k) = std::exp(logits(i, k) - mx);
      sum += probs(i, k);
    }
    probs.row(i) /= sum;
    loss += -(logits(i, label) - mx - std::log(sum));
    dlogits.row(i) = probs.row(i) / static_cast<T>(b);
    dlogits(i, label) -= T(1) / static_cast<T>(b);
  }
  return loss / static_cast<T>(b);
}

#define ERADATE_INSTANTIATE(T)                                                      \
  template void conv3x3_forward(const Tensor<T>&, const Mat<T>&, const Vec<T>&,     \
                                Tensor<T>&);                                        \
  template void conv3x3_backward(const Tensor<T>&, const Mat<T>&, const Tensor<T>&, \
                                 Tensor<T>&, Mat<T>&, Vec<T>&);                     \
  template void relu_forward(Tensor<T>&);                                           \
  template void relu_backward(const Tensor<T>&, Tensor<T>&);                        \
  template void maxpool2_forward(const Tensor<T>&, Tensor<T>&,                      \
                                 std::vector<std::int32_t>&);                       \
  template void maxpool2_backward(const Tensor<T>&, const Tensor<T>&,               \
                                  const std::vector<std::int32_t>&, Tensor<T>&);    \
  template void fc_forward(const Mat<T>&, const Mat<T>&, const Vec<T>&, Mat<T>&);   \
  template void fc_backward(const Mat<T>&, const Mat<T>&, const Mat<T>&, Mat<T>&,   \
                            Mat<T>&, Vec<T>&);                                      \
  template T softmax_cross_entropy(const Mat<T>&, const std::vector<int>&, Mat<T>&, \
                                   Mat<T>&);

ERADATE_INSTANTIATE(float)
ERADATE_INSTANTIATE(double)

#undef ERADATE_INSTANTIATE

}  // namespace eradate::nn
