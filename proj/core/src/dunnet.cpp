#include "eradate/dunnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "eradate/error.hpp"
#include "eradate/rng.hpp"

namespace eradate {

namespace {

constexpr std::size_t kInferenceChunk = 32;

template <typename T>
void relu_mask(const nn::Mat<T>& out, nn::Mat<T>& grad) {
  grad = (out.array() > T(0)).select(grad, T(0));
}

template <typename T>
void relu_inplace(nn::Mat<T>& m) {
  m = m.cwiseMax(T(0));
}

}  // namespace

int NetConfig::flat_dim() const {
  int side = input_side;
  for (int l = 0; l < kConvLayers; ++l) {
    if (pool_after(l)) side /= 2;
  }
  return conv_channels[kConvLayers - 1] * side * side;
}

void NetConfig::validate() const {
  if (input_side < 8) {
    throw Error(ErrorCode::kInvalidArgument, "input side must be >= 8");
  }
  for (int c : conv_channels) {
    if (c < 1) throw Error(ErrorCode::kInvalidArgument, "conv channels must be >= 1");
  }
  if (fc1 < 1 || fc2 < 1 || classes < 2) {
    throw Error(ErrorCode::kInvalidArgument, "fc widths must be >= 1 and classes >= 2");
  }
}

double learning_rate(const TrainSchedule& s, int iteration) {
  return s.lr0 * std::pow(s.decay, std::floor(static_cast<double>(iteration) / s.decay_step));
}

template <typename T>
NetParams<T> NetParams<T>::zeros(const NetConfig& config) {
  config.validate();
  NetParams p;
  int cin = 3;
  for (int l = 0; l < kConvLayers; ++l) {
    const int cout = config.conv_channels[static_cast<std::size_t>(l)];
    p.weights[static_cast<std::size_t>(l)] = nn::Mat<T>::Zero(cout, cin * 9);
    p.biases[static_cast<std::size_t>(l)] = nn::Vec<T>::Zero(cout);
    cin = cout;
  }
  const std::array<int, 4> dims{config.flat_dim(), config.fc1, config.fc2, config.classes};
  for (int f = 0; f < 3; ++f) {
    p.weights[static_cast<std::size_t>(kConvLayers + f)] =
        nn::Mat<T>::Zero(dims[static_cast<std::size_t>(f + 1)], dims[static_cast<std::size_t>(f)]);
    p.biases[static_cast<std::size_t>(kConvLayers + f)] =
        nn::Vec<T>::Zero(dims[static_cast<std::size_t>(f + 1)]);
  }
  return p;
}

template <typename T>
NetParams<T> NetParams<T>::he_init(const NetConfig& config) {
  NetParams p = zeros(config);
  Rng rng(config.seed);
  for (auto& w : p.weights) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(w.cols()));
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = static_cast<T>(rng.normal(0.0, stddev));
    }
  }
  return p;
}

template <typename T>
std::size_t NetParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < kLayers; ++l) {
    n += static_cast<std::size_t>(weights[static_cast<std::size_t>(l)].size() +
                                  biases[static_cast<std::size_t>(l)].size());
  }
  return n;
}

template <typename T>
bool NetParams<T>::all_finite() const {
  for (int l = 0; l < kLayers; ++l) {
    if (!weights[static_cast<std::size_t>(l)].allFinite() ||
        !biases[static_cast<std::size_t>(l)].allFinite()) {
      return false;
    }
  }
  return true;
}

template <typename T>
template <typename U>
NetParams<U> NetParams<T>::cast() const {
  NetParams<U> out;
  for (std::size_t l = 0; l < static_cast<std::size_t>(kLayers); ++l) {
    out.weights[l] = weights[l].template cast<U>();
    out.biases[l] = biases[l].template cast<U>();
  }
  return out;
}

Image fit_input(const Image& img, int side) {
  if (img.width() == side && img.height() == side) return img;
  return resize_area(img, side, side);
}

template <typename T>
nn::Tensor<T> make_batch(std::span<const Image> images, const NetConfig& config) {
  const int side = config.input_side;
  nn::Tensor<T> t(static_cast<int>(images.size()), 3, side, side);
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].channels() != 3) {
      throw Error(ErrorCode::kShapeMismatch, "network input must be RGB");
    }
    const Image img = fit_input(images[i], side);
    T* s = t.sample(static_cast<int>(i));
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          s[(static_cast<std::size_t>(c) * side + y) * side + x] =
              static_cast<T>(img.at(x, y, c) - 0.5);
        }
      }
    }
  }
  return t;
}

template <typename T>
void forward(const NetParams<T>& params, const NetConfig& config,
             const nn::Tensor<T>& batch, ForwardCache<T>& cache) {
  if (batch.c != 3 || batch.h != config.input_side || batch.w != config.input_side) {
    throw Error(ErrorCode::kShapeMismatch,
                "batch shape does not match the network input side");
  }
  nn::Tensor<T> x = batch;
  for (int l = 0; l < kConvLayers; ++l) {
    const auto li = static_cast<std::size_t>(l);
    cache.conv_in[li] = x;
    nn::conv3x3_forward(x, params.weights[li], params.biases[li], cache.conv_out[li]);
    nn::relu_forward(cache.conv_out[li]);
    if (NetConfig::pool_after(l)) {
      nn::maxpool2_forward(cache.conv_out[li], x, cache.pool_argmax[li]);
    } else {
      x = cache.conv_out[li];
    }
  }
  cache.flat = Eigen::Map<const nn::Mat<T>>(x.data.data(), x.n,
                                            static_cast<Eigen::Index>(x.sample_size()));
  nn::fc_forward(cache.flat, params.weights[6], params.biases[6], cache.hidden1);
  relu_inplace(cache.hidden1);
  nn::fc_forward(cache.hidden1, params.weights[7], params.biases[7], cache.hidden2);
  relu_inplace(cache.hidden2);
  nn::fc_forward(cache.hidden2, params.weights[8], params.biases[8], cache.logits);
  cache.probs.resize(cache.logits.rows(), cache.logits.cols());
  for (Eigen::Index i = 0; i < cache.logits.rows(); ++i) {
    const T mx = cache.logits.row(i).maxCoeff();
    cache.probs.row(i) = (cache.logits.row(i).array() - mx).exp();
    cache.probs.row(i) /= cache.probs.row(i).sum();
  }
}

template <typename T>
T loss_and_grad(const NetParams<T>& params, const NetConfig& config,
                const nn::Tensor<T>& batch, const std::vector<int>& labels,
                NetParams<T>& grads) {
  ForwardCache<T> cache;
  forward(params, config, batch, cache);
  grads = NetParams<T>::zeros(config);

  nn::Mat<T> probs;
  nn::Mat<T> dlogits;
  const T loss = nn::softmax_cross_entropy(cache.logits, labels, probs, dlogits);

  nn::Mat<T> dh2;
  nn::fc_backward(cache.hidden2, params.weights[8], dlogits, dh2, grads.weights[8],
                  grads.biases[8]);
  relu_mask(cache.hidden2, dh2);
  nn::Mat<T> dh1;
  nn::fc_backward(cache.hidden1, params.weights[7], dh2, dh1, grads.weights[7],
                  grads.biases[7]);
  relu_mask(cache.hidden1, dh1);
  nn::Mat<T> dflat;
  nn::fc_backward(cache.flat, params.weights[6], dh1, dflat, grads.weights[6],
                  grads.biases[6]);

  const auto& last = cache.conv_out[kConvLayers - 1];
  nn::Tensor<T> dx(last.n, last.c, last.h / 2, last.w / 2);
  std::copy(dflat.data(), dflat.data() + dflat.size(), dx.data.begin());
  nn::Tensor<T> dy;
  for (int l = kConvLayers - 1; l >= 0; --l) {
    const auto li = static_cast<std::size_t>(l);
    if (NetConfig::pool_after(l)) {
      nn::maxpool2_backward(cache.conv_out[li], dx, cache.pool_argmax[li], dy);
    } else {
      dy = std::move(dx);
    }
    nn::relu_backward(cache.conv_out[li], dy);
    nn::conv3x3_backward(cache.conv_in[li], params.weights[li], dy, dx,
                         grads.weights[li], grads.biases[li]);
  }
  return loss;
}

template <typename T>
std::vector<TrainLogEntry> train_params(NetParams<T>& params, const NetConfig& config,
                                        const TrainSchedule& schedule,
                                        const TrainingSet& data, std::uint64_t seed,
                                        const TrainProgress& progress) {
  if (data.size == 0) throw Error(ErrorCode::kEmptySet, "no training samples");
  if (schedule.batch < 1 || schedule.total_iters < 0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid training schedule");
  }
  Rng rng(seed);
  std::vector<std::size_t> order(data.size);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::size_t cursor = 0;

  NetParams<T> velocity = NetParams<T>::zeros(config);
  NetParams<T> grads;
  std::vector<TrainLogEntry> log;
  log.reserve(static_cast<std::size_t>(schedule.total_iters));
  std::vector<Image> images(static_cast<std::size_t>(schedule.batch));
  std::vector<int> labels(static_cast<std::size_t>(schedule.batch));
  for (int t = 0; t < schedule.total_iters; ++t) {
    for (int b = 0; b < schedule.batch; ++b) {
      if (cursor == order.size()) {
        rng.shuffle(order);
        cursor = 0;
      }
      const std::size_t idx = order[cursor++];
      images[static_cast<std::size_t>(b)] = fit_input(data.image(idx), config.input_side);
      labels[static_cast<std::size_t>(b)] = data.label(idx);
    }
    const auto batch = make_batch<T>(images, config);
    const T loss = loss_and_grad(params, config, batch, labels, grads);
    const double lr = learning_rate(schedule, t);
    if (!std::isfinite(static_cast<double>(loss))) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "loss is not finite at iteration " + std::to_string(t));
    }
    for (std::size_t l = 0; l < static_cast<std::size_t>(NetParams<T>::kLayers); ++l) {
      velocity.weights[l] = static_cast<T>(schedule.momentum) * velocity.weights[l] -
                            static_cast<T>(lr) * grads.weights[l];
      velocity.biases[l] = static_cast<T>(schedule.momentum) * velocity.biases[l] -
                           static_cast<T>(lr) * grads.biases[l];
      params.weights[l] += velocity.weights[l];
      params.biases[l] += velocity.biases[l];
    }
    if (!params.all_finite()) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "parameters not finite after iteration " + std::to_string(t));
    }
    log.push_back({t, lr, static_cast<double>(loss)});
    if (progress) progress(log.back());
  }
  return log;
}

TrainResult train(const NetConfig& config, const TrainSchedule& schedule,
                  const TrainingSet& data, std::uint64_t seed,
                  const TrainProgress& progress) {
  TrainResult r;
  r.params = NetParams<float>::he_init(config);
  r.log = train_params(r.params, config, schedule, data, seed, progress);
  return r;
}

std::vector<std::vector<double>> predict_probs(const NetParams<float>& params,
                                               const NetConfig& config,
                                               std::span<const Image> images) {
  std::vector<std::vector<double>> out;
  ForwardCache<float> cache;
  for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
    const std::size_t len = std::min(kInferenceChunk, images.size() - start);
    forward(params, config, make_batch<float>(images.subspan(start, len), config), cache);
    for (Eigen::Index i = 0; i < cache.probs.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(cache.probs.cols()));
      for (Eigen::Index k = 0; k < cache.probs.cols(); ++k) {
        row[static_cast<std::size_t>(k)] = cache.probs(i, k);
      }
      out.push_back(std::move(row));
    }
  }
  return out;
}

std::vector<EncodedVector> extract_codes(const NetParams<float>& params,
                                         const NetConfig& config,
                                         std::span<const Image> images) {
  std::vector<EncodedVector> out;
  ForwardCache<float> cache;
  for (std::size_t start = 0; start < images.size(); start += kInferenceChunk) {
    const std::size_t len = std::min(kInferenceChunk, images.size() - start);
    forward(params, config, make_batch<float>(images.subspan(start, len), config), cache);
    for (Eigen::Index i = 0; i < cache.hidden2.rows(); ++i) {
      EncodedVector v;
      v.kind = EncodingKind::kDunnet;
      v.values.resize(static_cast<std::size_t>(cache.hidden2.cols()));
      double norm = 0.0;
      for (Eigen::Index k = 0; k < cache.hidden2.cols(); ++k) {
        const double a = cache.hidden2(i, k);
        v.values[static_cast<std::size_t>(k)] = a;
        norm += a * a;
      }
      if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (auto& a : v.values) a /= norm;
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

template struct NetParams<float>;
template struct NetParams<double>;
template NetParams<double> NetParams<float>::cast<double>() const;
template NetParams<float> NetParams<double>::cast<float>() const;
template NetParams<float> NetParams<float>::cast<float>() const;
template NetParams<double> NetParams<double>::cast<double>() const;
template nn::Tensor<float> make_batch<float>(std::span<const Image>, const NetConfig&);
template nn::Tensor<double> make_batch<double>(std::span<const Image>, const NetConfig&);
template void forward(const NetParams<float>&, const NetConfig&, const nn::Tensor<float>&,
                      ForwardCache<float>&);
template void forward(const NetParams<double>&, const NetConfig&, const nn::Tensor<double>&,
                      ForwardCache<double>&);
template float loss_and_grad(const NetParams<float>&, const NetConfig&,
                             const nn::Tensor<float>&, const std::vector<int>&,
                             NetParams<float>&);
template double loss_and_grad(const NetParams<double>&, const NetConfig&,
                              const nn::Tensor<double>&, const std::vector<int>&,
                              NetParams<double>&);
template std::vector<TrainLogEntry> train_params(NetParams<float>&, const NetConfig&,
                                                 const TrainSchedule&, const TrainingSet&,
                                                 std::uint64_t, const TrainProgress&);
template std::vector<TrainLogEntry> train_params(NetParams<double>&, const NetConfig&,
                                                 const TrainSchedule&, const TrainingSet&,
                                                 std::uint64_t, const TrainProgress&);

}  // namespace eradate
