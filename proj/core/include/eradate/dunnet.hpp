#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "eradate/dunnet_layers.hpp"
#include "eradate/encoding.hpp"
#include "eradate/image.hpp"

namespace eradate {

inline constexpr int kConvLayers = 6;

struct NetConfig {
  int input_side = 128;
  std::array<int, kConvLayers> conv_channels{32, 32, 64, 64, 128, 128};
  int fc1 = 512;
  int fc2 = 256;
  int classes = 6;
  std::uint64_t seed = 0;

  // 2x2 pooling follows conv 2, 4 and 6 (1-based).
  static bool pool_after(int conv_index) { return conv_index % 2 == 1; }
  int flat_dim() const;
  void validate() const;

  bool operator==(const NetConfig&) const = default;
};

struct TrainSchedule {
  double lr0 = 0.001;
  double decay = 0.5;
  int decay_step = 4000;
  int total_iters = 50000;
  int batch = 32;
  double momentum = 0.9;
};

// lr0 * decay^floor(t / decay_step)
double learning_rate(const TrainSchedule& s, int iteration);

// Layers 0..5 are convolutions (weight Cout x Cin*9), 6 and 7 the hidden
// fully connected layers, 8 the output layer.
template <typename T>
struct NetParams {
  static constexpr int kLayers = kConvLayers + 3;

  std::array<nn::Mat<T>, kLayers> weights;
  std::array<nn::Vec<T>, kLayers> biases;

  static NetParams zeros(const NetConfig& config);
  // He-normal weights, zero biases, seeded by config.seed.
  static NetParams he_init(const NetConfig& config);

  std::size_t parameter_count() const;
  bool all_finite() const;
  template <typename U>
  NetParams<U> cast() const;
};

template <typename T>
struct ForwardCache {
  // Input of every conv layer (post-activation of the previous stage).
  std::array<nn::Tensor<T>, kConvLayers> conv_in;
  // Post-ReLU output of every conv layer.
  std::array<nn::Tensor<T>, kConvLayers> conv_out;
  std::array<std::vector<std::int32_t>, kConvLayers> pool_argmax;
  nn::Mat<T> flat;    // input of fc1
  nn::Mat<T> hidden1; // post-ReLU fc1
  nn::Mat<T> hidden2; // post-ReLU fc2, the visual codes
  nn::Mat<T> logits;
  nn::Mat<T> probs;
};

// Batch of B images, each input_side x input_side RGB in [0,1], as an NCHW
// tensor centered by subtracting 0.5.
template <typename T>
nn::Tensor<T> make_batch(std::span<const Image> images, const NetConfig& config);

template <typename T>
void forward(const NetParams<T>& params, const NetConfig& config,
             const nn::Tensor<T>& batch, ForwardCache<T>& cache);

// Mean cross-entropy loss; `grads` is resized and overwritten.
template <typename T>
T loss_and_grad(const NetParams<T>& params, const NetConfig& config,
                const nn::Tensor<T>& batch, const std::vector<int>& labels,
                NetParams<T>& grads);

// Source of training samples. Images of any size are resized to the input
// side with area averaging.
struct TrainingSet {
  std::size_t size = 0;
  std::function<Image(std::size_t)> image;
  std::function<int(std::size_t)> label;
};

struct TrainLogEntry {
  int iteration = 0;
  double lr = 0.0;
  double loss = 0.0;
};

struct TrainResult {
  NetParams<float> params;
  std::vector<TrainLogEntry> log;
};

using TrainProgress = std::function<void(const TrainLogEntry&)>;

// Mini-batch SGD with momentum. Batches walk through a fresh permutation of
// the samples every epoch (Rng(seed)). Throws NonFiniteLoss naming the
// iteration if the loss or any parameter stops being finite.
TrainResult train(const NetConfig& config, const TrainSchedule& schedule,
                  const TrainingSet& data, std::uint64_t seed,
                  const TrainProgress& progress = {});
template <typename T>
std::vector<TrainLogEntry> train_params(NetParams<T>& params, const NetConfig& config,
                                        const TrainSchedule& schedule,
                                        const TrainingSet& data, std::uint64_t seed,
                                        const TrainProgress& progress = {});

// Class probabilities of each image.
std::vector<std::vector<double>> predict_probs(const NetParams<float>& params,
                                               const NetConfig& config,
                                               std::span<const Image> images);

// L2-normalized post-ReLU fc2 activations of each image.
std::vector<EncodedVector> extract_codes(const NetParams<float>& params,
                                         const NetConfig& config,
                                         std::span<const Image> images);

Image fit_input(const Image& img, int side);

// DNN1: magic "DNN1", version u16, config (input_side, 6 channel counts,
// fc1, fc2, classes as u32; seed u64), tensor count u32, then per tensor a
// tag string, rows u32, cols u32 and rows*cols f32.
std::vector<std::uint8_t> encode_params(const NetParams<float>& params,
                                        const NetConfig& config);
NetParams<float> decode_params(std::span<const std::uint8_t> bytes, NetConfig& config);
void save_params(const NetParams<float>& params, const NetConfig& config,
                 const std::filesystem::path& path);
NetParams<float> load_params(const std::filesystem::path& path, NetConfig& config);

void write_train_log(const std::vector<TrainLogEntry>& log,
                     const std::filesystem::path& path);

}  // namespace eradate
