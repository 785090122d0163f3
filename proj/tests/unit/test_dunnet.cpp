#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include <Eigen/Dense>

#include "eradate/config.hpp"
#include "eradate/dunnet.hpp"
#include "eradate/error.hpp"
#include "eradate/pipeline.hpp"
#include "eradate/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eradate;

namespace {

Image random_image(Rng& rng, int side) {
  Image img(side, side, 3);
  for (auto& v : img.data()) v = rng.uniform();
  return img;
}

// Colored square (label 0) or disk (label 1) on a dark background.
Image toy_shape(Rng& rng, int side, int label) {
  Image img(side, side, 3, 0.05);
  const double rgb[3] = {rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0)};
  const double r = rng.uniform(0.28, 0.38) * side;
  const double cx = side / 2.0 + rng.uniform(-2, 2);
  const double cy = side / 2.0 + rng.uniform(-2, 2);
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const double dx = x + 0.5 - cx;
      const double dy = y + 0.5 - cy;
      const bool inside = label == 0 ? std::max(std::fabs(dx), std::fabs(dy)) <= r
                                     : std::hypot(dx, dy) <= r;
      if (!inside) continue;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = rgb[c];
    }
  }
  return img;
}

PipelineConfig desk() { return PipelineConfig::from_config(Config::load(ERADATE_DESK_CONFIG)); }

}  // namespace

TEST(Dunnet, ProbabilitiesFormADistribution) {
  const NetConfig cfg = fixture::reduced_net(6);
  Rng rng(1);
  const auto params = NetParams<double>::he_init(cfg);
  std::vector<Image> images;
  for (int i = 0; i < 5; ++i) images.push_back(random_image(rng, 8));
  ForwardCache<double> cache;
  forward(params, cfg, make_batch<double>(images, cfg), cache);
  ASSERT_EQ(cache.probs.rows(), 5);
  ASSERT_EQ(cache.probs.cols(), 6);
  for (Eigen::Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(cache.probs.row(i).sum(), 1.0, 1e-6);
    EXPECT_GE(cache.probs.row(i).minCoeff(), 0.0);
  }
}

TEST(Dunnet, ZeroWeightsGiveUniformProbabilitiesAndLogSixLoss) {
  const NetConfig cfg = fixture::reduced_net(6);
  Rng rng(2);
  const auto params = NetParams<double>::zeros(cfg);
  std::vector<Image> images{random_image(rng, 8), random_image(rng, 8)};
  ForwardCache<double> cache;
  const auto batch = make_batch<double>(images, cfg);
  forward(params, cfg, batch, cache);
  for (Eigen::Index i = 0; i < 2; ++i) {
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(cache.probs(i, k), 1.0 / 6, 1e-15);
  }
  NetParams<double> grads;
  EXPECT_NEAR(loss_and_grad(params, cfg, batch, {0, 4}, grads), std::log(6.0), 1e-12);
}

TEST(Layers, ReluZeroesNegatives) {
  nn::Tensor<double> t(1, 1, 1, 4);
  t.data = {-2.0, -0.0, 0.5, 3.0};
  nn::relu_forward(t);
  EXPECT_EQ(t.data, (std::vector<double>{0.0, 0.0, 0.5, 3.0}));
}

TEST(Layers, SoftmaxCrossEntropyClosedForm) {
  Rng rng(3);
  nn::Mat<double> logits(4, 6);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal(0, 2);
  const std::vector<int> labels{0, 5, 2, 2};
  nn::Mat<double> probs;
  nn::Mat<double> d;
  const double loss = nn::softmax_cross_entropy(logits, labels, probs, d);
  double want_loss = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double z = logits.row(i).array().exp().sum();
    for (int k = 0; k < 6; ++k) {
      const double p = std::exp(logits(i, k)) / z;
      EXPECT_NEAR(probs(i, k), p, 1e-12);
      EXPECT_NEAR(d(i, k), (p - (labels[static_cast<std::size_t>(i)] == k ? 1.0 : 0.0)) / 4, 1e-12);
    }
    want_loss -= std::log(std::exp(logits(i, labels[static_cast<std::size_t>(i)])) / z) / 4;
  }
  EXPECT_NEAR(loss, want_loss, 1e-12);
}

TEST(Layers, OneHotProbabilitiesGiveZeroLoss) {
  nn::Mat<double> logits(1, 6);
  logits << -1000, -1000, 0, -1000, -1000, -1000;
  nn::Mat<double> probs;
  nn::Mat<double> d;
  EXPECT_EQ(nn::softmax_cross_entropy(logits, {2}, probs, d), 0.0);
}

TEST(Layers, MaxPoolRoutesGradientToArgmax) {
  Rng rng(4);
  nn::Tensor<double> x(2, 3, 7, 6);
  for (auto& v : x.data) v = rng.normal();
  nn::Tensor<double> y;
  std::vector<std::int32_t> argmax;
  nn::maxpool2_forward(x, y, argmax);
  ASSERT_EQ(y.h, 3);
  ASSERT_EQ(y.w, 3);
  nn::Tensor<double> dy(y.n, y.c, y.h, y.w);
  for (auto& v : dy.data) v = rng.normal();
  nn::Tensor<double> dx;
  nn::maxpool2_backward(x, dy, argmax, dx);
  EXPECT_NEAR(std::accumulate(dx.data.begin(), dx.data.end(), 0.0),
              std::accumulate(dy.data.begin(), dy.data.end(), 0.0), 1e-12);
  for (int n = 0; n < 2; ++n) {
    for (int c = 0; c < 3; ++c) {
      for (int py = 0; py < 3; ++py) {
        for (int px = 0; px < 3; ++px) {
          double best = -1e300;
          int by = 0;
          int bx = 0;
          for (int dy2 = 0; dy2 < 2; ++dy2) {
            for (int dx2 = 0; dx2 < 2; ++dx2) {
              const double v = x.sample(n)[(c * 7 + 2 * py + dy2) * 6 + 2 * px + dx2];
              if (v > best) {
                best = v;
                by = 2 * py + dy2;
                bx = 2 * px + dx2;
              }
            }
          }
          EXPECT_EQ(y.sample(n)[(c * 3 + py) * 3 + px], best);
          EXPECT_EQ(dx.sample(n)[(c * 7 + by) * 6 + bx], dy.sample(n)[(c * 3 + py) * 3 + px]);
        }
      }
      // The dropped trailing row receives nothing.
      for (int col = 0; col < 6; ++col) EXPECT_EQ(dx.sample(n)[(c * 7 + 6) * 6 + col], 0.0);
    }
  }
}

TEST(Layers, ConvMatchesDirectSum) {
  Rng rng(5);
  nn::Tensor<double> x(2, 3, 5, 4);
  for (auto& v : x.data) v = rng.normal();
  nn::Mat<double> w(2, 27);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  nn::Vec<double> b(2);
  b << 0.3, -0.7;
  nn::Tensor<double> y;
  nn::conv3x3_forward(x, w, b, y);
  for (int n = 0; n < 2; ++n) {
    for (int co = 0; co < 2; ++co) {
      for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 4; ++c) {
          double s = b(co);
          for (int ci = 0; ci < 3; ++ci) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int yy = r + ky - 1;
                const int xx = c + kx - 1;
                if (yy < 0 || yy >= 5 || xx < 0 || xx >= 4) continue;
                s += w(co, (ci * 3 + ky) * 3 + kx) * x.sample(n)[(ci * 5 + yy) * 4 + xx];
              }
            }
          }
          EXPECT_NEAR(y.sample(n)[(co * 5 + r) * 4 + c], s, 1e-12);
        }
      }
    }
  }
}

TEST(Dunnet, ForwardIsDeterministic) {
  const NetConfig cfg = fixture::reduced_net(6);
  Rng rng(6);
  const auto params = NetParams<float>::he_init(cfg);
  std::vector<Image> images{random_image(rng, 8), random_image(rng, 8), random_image(rng, 8)};
  ForwardCache<float> a;
  ForwardCache<float> b;
  forward(params, cfg, make_batch<float>(images, cfg), a);
  forward(params, cfg, make_batch<float>(images, cfg), b);
  EXPECT_EQ(a.logits, b.logits);
  EXPECT_EQ(a.hidden2, b.hidden2);
}

TEST(Dunnet, BatchShapeIsChecked) {
  const NetConfig cfg = fixture::reduced_net(6);
  const auto params = NetParams<double>::zeros(cfg);
  ForwardCache<double> cache;
  nn::Tensor<double> wrong(1, 3, 9, 9);
  try {
    forward(params, cfg, wrong, cache);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Schedule, StepDecay) {
  const TrainSchedule s;
  EXPECT_EQ(learning_rate(s, 0), 0.001);
  EXPECT_EQ(learning_rate(s, 3999), 0.001);
  EXPECT_EQ(learning_rate(s, 4000), 0.0005);
  EXPECT_EQ(learning_rate(s, 8000), 0.00025);
  EXPECT_EQ(s.total_iters, 50000);
}

TEST(Train, SingleSampleLossFallsAlmostMonotonically) {
  const NetConfig cfg = fixture::reduced_net(6);
  Rng rng(7);
  const Image img = random_image(rng, 8);
  TrainSchedule s;
  s.batch = 1;
  s.total_iters = 50;
  s.lr0 = 0.01;
  auto params = NetParams<double>::he_init(cfg);
  const auto log = train_params(params, cfg, s, TrainingSet{1, [&](std::size_t) { return img; },
                                                             [](std::size_t) { return 3; }},
                                7);
  ASSERT_EQ(log.size(), 50u);
  int rises = 0;
  for (std::size_t i = 1; i < log.size(); ++i) rises += log[i].loss > log[i - 1].loss ? 1 : 0;
  EXPECT_LE(rises, 2);
  EXPECT_LT(log.back().loss, log.front().loss);
}

TEST(Train, NonFiniteLossAborts) {
  const NetConfig cfg = fixture::reduced_net(6);
  Rng rng(8);
  const Image img = random_image(rng, 8);
  TrainSchedule s;
  s.batch = 1;
  s.total_iters = 200;
  s.lr0 = 1e6;
  try {
    train(cfg, s, TrainingSet{1, [&](std::size_t) { return img; }, [](std::size_t) { return 0; }}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteLoss);
    EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
  }
}

TEST(Train, ToySquaresAndDisks) {
  const PipelineConfig pc = desk();
  NetConfig cfg = pc.net;
  cfg.classes = 2;
  const int side = cfg.input_side;
  Rng rng(9);
  std::vector<Image> images;
  std::vector<int> labels;
  for (int i = 0; i < 200; ++i) {
    labels.push_back(i % 2);
    images.push_back(toy_shape(rng, side, i % 2));
  }

  // A least-squares linear model on 8x8 gray thumbnails reaches 0.9 on
  // held-out shapes, so the set is learnable.
  auto features = [&](const Image& img) {
    const Image small = resize_area(to_grayscale(img), 8, 8);
    Eigen::VectorXd f(65);
    for (int i = 0; i < 64; ++i) f(i) = small.data()[static_cast<std::size_t>(i)];
    f(64) = 1.0;
    return f;
  };
  Eigen::MatrixXd a(100, 65);
  Eigen::VectorXd t(100);
  for (int i = 0; i < 100; ++i) {
    a.row(i) = features(images[static_cast<std::size_t>(i)]).transpose();
    t(i) = labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
  }
  const Eigen::VectorXd beta =
      (a.transpose() * a + 1e-3 * Eigen::MatrixXd::Identity(65, 65)).ldlt().solve(a.transpose() * t);
  int linear_correct = 0;
  for (int i = 100; i < 200; ++i) {
    const int pred = features(images[static_cast<std::size_t>(i)]).dot(beta) > 0 ? 1 : 0;
    linear_correct += pred == labels[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  ASSERT_GE(linear_correct, 90);

  TrainSchedule s = pc.schedule;
  s.total_iters = 2000;
  const auto result = train(cfg, s,
                            TrainingSet{images.size(), [&](std::size_t i) { return images[i]; },
                                        [&](std::size_t i) { return labels[i]; }},
                            5);
  const auto probs = predict_probs(result.params, cfg, images);
  int correct = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const int pred = probs[i][1] > probs[i][0] ? 1 : 0;
    correct += pred == labels[i] ? 1 : 0;
  }
  EXPECT_GE(correct, 190);
}

TEST(Codes, NonNegativeUnitVectors) {
  NetConfig cfg = fixture::reduced_net(6);
  cfg.seed = 3;
  Rng rng(10);
  const auto params = NetParams<float>::he_init(cfg);
  std::vector<Image> images;
  for (int i = 0; i < 6; ++i) images.push_back(random_image(rng, 8 + i));
  const auto codes = extract_codes(params, cfg, images);
  ASSERT_EQ(codes.size(), 6u);
  for (const auto& c : codes) {
    EXPECT_EQ(c.kind, EncodingKind::kDunnet);
    EXPECT_EQ(c.dim(), cfg.fc2);
    double n = 0.0;
    for (double v : c.values) {
      EXPECT_GE(v, 0.0);
      n += v * v;
    }
    EXPECT_TRUE(n == 0.0 || std::fabs(std::sqrt(n) - 1.0) <= 1e-6);
  }
  EXPECT_EQ(NetConfig{}.fc2, 256);
}

TEST(Params, FileRoundTrip) {
  NetConfig cfg = fixture::reduced_net(6);
  cfg.seed = 77;
  const auto params = NetParams<float>::he_init(cfg);
  oracle::TempDir dir("dnn");
  save_params(params, cfg, dir.path() / "net.dnn");
  NetConfig back_cfg;
  const auto back = load_params(dir.path() / "net.dnn", back_cfg);
  EXPECT_EQ(back_cfg, cfg);
  for (int l = 0; l < NetParams<float>::kLayers; ++l) {
    EXPECT_EQ(back.weights[static_cast<std::size_t>(l)], params.weights[static_cast<std::size_t>(l)]);
    EXPECT_EQ(back.biases[static_cast<std::size_t>(l)], params.biases[static_cast<std::size_t>(l)]);
  }
  auto bytes = encode_params(params, cfg);
  bytes.resize(bytes.size() - 3);
  NetConfig ignored;
  try {
    decode_params(bytes, ignored);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDecodeError);
  }
}

TEST(Params, HeInitIsSeeded) {
  NetConfig cfg = fixture::reduced_net(6);
  const auto a = NetParams<double>::he_init(cfg);
  const auto b = NetParams<double>::he_init(cfg);
  EXPECT_EQ(a.weights[0], b.weights[0]);
  cfg.seed += 1;
  const auto c = NetParams<double>::he_init(cfg);
  EXPECT_NE(a.weights[0], c.weights[0]);
  for (int l = 0; l < NetParams<double>::kLayers; ++l) {
    EXPECT_TRUE(a.biases[static_cast<std::size_t>(l)].isZero());
  }
}
