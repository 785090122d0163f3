#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "binary_io.hpp"
#include "eradate/dunnet.hpp"
#include "eradate/error.hpp"

namespace eradate {

namespace {

constexpr std::uint16_t kParamsVersion = 1;

std::string layer_name(int l) {
  if (l < kConvLayers) return "conv" + std::to_string(l + 1);
  if (l == kConvLayers) return "fc1";
  if (l == kConvLayers + 1) return "fc2";
  return "out";
}

}  // namespace

std::vector<std::uint8_t> encode_params(const NetParams<float>& params,
                                        const NetConfig& config) {
  detail::ByteWriter w;
  w.raw("DNN1", 4);
  w.u16(kParamsVersion);
  w.u32(static_cast<std::uint32_t>(config.input_side));
  for (int c : config.conv_channels) w.u32(static_cast<std::uint32_t>(c));
  w.u32(static_cast<std::uint32_t>(config.fc1));
  w.u32(static_cast<std::uint32_t>(config.fc2));
  w.u32(static_cast<std::uint32_t>(config.classes));
  w.u64(config.seed);
  w.u32(static_cast<std::uint32_t>(2 * NetParams<float>::kLayers));
  for (int l = 0; l < NetParams<float>::kLayers; ++l) {
    const auto& wt = params.weights[static_cast<std::size_t>(l)];
    w.str(layer_name(l) + ".weight");
    w.u32(static_cast<std::uint32_t>(wt.rows()));
    w.u32(static_cast<std::uint32_t>(wt.cols()));
    for (Eigen::Index i = 0; i < wt.size(); ++i) w.f32(wt.data()[i]);
    const auto& b = params.biases[static_cast<std::size_t>(l)];
    w.str(layer_name(l) + ".bias");
    w.u32(static_cast<std::uint32_t>(b.size()));
    w.u32(1);
    for (Eigen::Index i = 0; i < b.size(); ++i) w.f32(b(i));
  }
  return std::move(w.bytes());
}

NetParams<float> decode_params(std::span<const std::uint8_t> bytes, NetConfig& config) {
  detail::ByteReader r(bytes);
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "DNN1") {
    throw Error(ErrorCode::kDecodeError, "not a DNN1 parameter file");
  }
  if (r.u16() != kParamsVersion) {
    throw Error(ErrorCode::kDecodeError, "unsupported DNN1 version");
  }
  NetConfig c;
  c.input_side = static_cast<int>(r.u32());
  for (auto& ch : c.conv_channels) ch = static_cast<int>(r.u32());
  c.fc1 = static_cast<int>(r.u32());
  c.fc2 = static_cast<int>(r.u32());
  c.classes = static_cast<int>(r.u32());
  c.seed = r.u64();
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kDecodeError, std::string("DNN1 config: ") + e.what());
  }
  NetParams<float> p = NetParams<float>::zeros(c);
  if (r.u32() != 2 * NetParams<float>::kLayers) {
    throw Error(ErrorCode::kDecodeError, "DNN1 tensor count mismatch");
  }
  auto read_tensor = [&](const std::string& tag, float* dst, Eigen::Index rows,
                         Eigen::Index cols) {
    if (r.str() != tag) throw Error(ErrorCode::kDecodeError, "DNN1 expected tensor " + tag);
    if (r.u32() != rows || r.u32() != cols) {
      throw Error(ErrorCode::kDecodeError, "DNN1 tensor " + tag + " has wrong shape");
    }
    for (Eigen::Index i = 0; i < rows * cols; ++i) dst[i] = r.f32();
  };
  for (int l = 0; l < NetParams<float>::kLayers; ++l) {
    auto& wt = p.weights[static_cast<std::size_t>(l)];
    read_tensor(layer_name(l) + ".weight", wt.data(), wt.rows(), wt.cols());
    auto& b = p.biases[static_cast<std::size_t>(l)];
    read_tensor(layer_name(l) + ".bias", b.data(), b.size(), 1);
  }
  if (!r.at_end()) throw Error(ErrorCode::kDecodeError, "trailing DNN1 bytes");
  config = c;
  return p;
}

void save_params(const NetParams<float>& params, const NetConfig& config,
                 const std::filesystem::path& path) {
  write_file(path, encode_params(params, config));
}

NetParams<float> load_params(const std::filesystem::path& path, NetConfig& config) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingModel, path.string());
  }
  return decode_params(read_file(path), config);
}

void write_train_log(const std::vector<TrainLogEntry>& log,
                     const std::filesystem::path& path) {
  std::ostringstream os;
  os << "iter,lr,loss\n" << std::setprecision(9);
  for (const auto& e : log) os << e.iteration << ',' << e.lr << ',' << e.loss << '\n';
  const std::string s = os.str();
  write_file(path, std::span<const std::uint8_t>(
                       reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace eradate
