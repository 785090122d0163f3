#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace eradate::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Dense NCHW activation tensor.
template <typename T>
struct Tensor {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_, T fill = T(0))
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t sample_size() const { return static_cast<std::size_t>(c) * h * w; }
  T* sample(int i) { return data.data() + static_cast<std::size_t>(i) * sample_size(); }
  const T* sample(int i) const {
    return data.data() + static_cast<std::size_t>(i) * sample_size();
  }
  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }
};

// 3x3 convolution, stride 1, zero padding 1. Weights are Cout x (Cin*9)
// with column index (ci*3 + ky)*3 + kx.
template <typename T>
void conv3x3_forward(const Tensor<T>& x, const Mat<T>& weight, const Vec<T>& bias,
                     Tensor<T>& y);
// Accumulates into dweight/dbias (which must be sized) and writes dx.
template <typename T>
void conv3x3_backward(const Tensor<T>& x, const Mat<T>& weight, const Tensor<T>& dy,
                      Tensor<T>& dx, Mat<T>& dweight, Vec<T>& dbias);

template <typename T>
void relu_forward(Tensor<T>& x);
// Zeroes gradient entries whose forward output was not positive.
template <typename T>
void relu_backward(const Tensor<T>& y, Tensor<T>& dy);

// 2x2 max pooling with stride 2 (odd trailing rows/columns dropped). The
// argmax within each window is the first maximum in raster order; `argmax`
// holds its index inside the input sample.
template <typename T>
void maxpool2_forward(const Tensor<T>& x, Tensor<T>& y, std::vector<std::int32_t>& argmax);
template <typename T>
void maxpool2_backward(const Tensor<T>& x_shape, const Tensor<T>& dy,
                       const std::vector<std::int32_t>& argmax, Tensor<T>& dx);

// Fully connected: y = x W^T + b with x of shape B x In and W Out x In.
template <typename T>
void fc_forward(const Mat<T>& x, const Mat<T>& weight, const Vec<T>& bias, Mat<T>& y);
template <typename T>
void fc_backward(const Mat<T>& x, const Mat<T>& weight, const Mat<T>& dy,
                 Mat<T>& dx, Mat<T>& dweight, Vec<T>& dbias);

// Mean cross-entropy of softmax(logits) against labels. Writes the row
// softmax to `probs` and (probs - onehot) / B to `dlogits`.
template <typename T>
T softmax_cross_entropy(const Mat<T>& logits, const std::vector<int>& labels,
                        Mat<T>& probs, Mat<T>& dlogits);

}  // namespace eradate::nn
