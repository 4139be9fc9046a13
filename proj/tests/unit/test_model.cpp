#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <vector>

#include "asdscreen/errors.hpp"
#include "asdscreen/model.hpp"
#include "test_util.hpp"

using namespace asdscreen;
using namespace asdscreen::testing;

namespace {

// Extractor returning a fixed 1x1 feature map regardless of the image.
class FixedExtractor final : public FeatureExtractor {
 public:
  explicit FixedExtractor(Eigen::VectorXd features) : features_(std::move(features)) {}
  int input_side() const override { return 8; }
  int channels() const override { return static_cast<int>(features_.size()); }
  FeatureMap extract(const ImageTensor&) const override {
    FeatureMap map;
    map.rows = 1;
    map.cols = 1;
    map.channels = channels();
    map.data.assign(features_.data(), features_.data() + features_.size());
    return map;
  }

 private:
  Eigen::VectorXd features_;
};

Classifier tiny_stub_classifier(int channels, int hidden, double dropout, uint64_t seed,
                                int side = 16) {
  BackboneSpec spec = BackboneSpec::for_name(BackboneName::stub, channels, side);
  HeadConfig head;
  head.hidden_units = hidden;
  head.dropout_rate = dropout;
  return build_classifier(spec, head, seed);
}

double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Loss evaluated the way head_backward defines it, for finite differencing.
double loss_at(const Classifier& clf, const Eigen::MatrixXd& f,
               const std::vector<int>& labels, uint64_t seed) {
  const Eigen::VectorXd probs = head_forward(clf, f, true, seed);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    double p = probs(i);
    if (p < 1e-7) p = 1e-7;
    if (p > 1.0 - 1e-7) p = 1.0 - 1e-7;
    sum += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(probs.size());
}

}  // namespace

TEST_CASE("head parameter count follows the architecture arithmetic") {
  const Classifier clf = tiny_stub_classifier(64, 512, 0.5, 1);
  CHECK(clf.head_parameter_count() == 64 * 512 + 512 + 512 + 1);
}

TEST_CASE("canonical backbone specs pin the published input contract") {
  CHECK(BackboneSpec::for_name(BackboneName::xception).input_side == 299);
  CHECK(BackboneSpec::for_name(BackboneName::vgg19).input_side == 224);
  CHECK(BackboneSpec::for_name(BackboneName::vgg19).feature_channels == 512);
  CHECK(BackboneSpec::for_name(BackboneName::resnet50v2).input_side == 224);

  BackboneSpec bad = BackboneSpec::for_name(BackboneName::xception);
  bad.input_side = 224;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("unfreezing is rejected: no trainable extractor exists") {
  BackboneSpec spec = BackboneSpec::for_name(BackboneName::stub, 8, 16);
  spec.frozen = false;
  CHECK_THROWS_AS(build_classifier(spec, HeadConfig{}, 1), ConfigError);
}

TEST_CASE("pretrained backbones demand their weights file by path") {
  unsetenv("ASDSCREEN_WEIGHTS_DIR");
  try {
    build_classifier(BackboneSpec::for_name(BackboneName::xception), HeadConfig{}, 0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("xception.weights") != std::string::npos);
  }
}

TEST_CASE("pooled-linear extractor loads from a weights container") {
  TempDir tmp;
  Eigen::MatrixXd map(512, 3);
  Rng rng(3);
  for (int c = 0; c < 512; ++c) {
    for (int k = 0; k < 3; ++k) map(c, k) = rng.uniform(-1, 1);
  }
  PooledLinearExtractor::save(tmp / "vgg19.weights", 224, 7, map);
  setenv("ASDSCREEN_WEIGHTS_DIR", tmp.path().c_str(), 1);
  const Classifier clf =
      build_classifier(BackboneSpec::for_name(BackboneName::vgg19), HeadConfig{}, 9);
  CHECK(clf.extractor->channels() == 512);
  CHECK(clf.extractor->input_side() == 224);
  Rng img_rng(4);
  const ImageTensor img = random_image(img_rng, 224, 224);
  const Eigen::VectorXd p = forward(clf, {img}, false);
  CHECK(p(0) > 0.0);
  CHECK(p(0) < 1.0);

  // Channel mismatch between file and canonical spec is rejected.
  PooledLinearExtractor::save(tmp / "resnet50v2.weights", 224, 7, map);  // 512 != 2048
  CHECK_THROWS_AS(
      build_classifier(BackboneSpec::for_name(BackboneName::resnet50v2), HeadConfig{}, 9),
      ConfigError);
  unsetenv("ASDSCREEN_WEIGHTS_DIR");
}

TEST_CASE("build_classifier is deterministic per seed") {
  const Classifier a = tiny_stub_classifier(16, 8, 0.5, 77);
  const Classifier b = tiny_stub_classifier(16, 8, 0.5, 77);
  const Classifier c = tiny_stub_classifier(16, 8, 0.5, 78);
  CHECK(a.w1 == b.w1);
  CHECK(a.w2 == b.w2);
  CHECK(a.b1 == b.b1);
  CHECK(a.b2 == b.b2);
  CHECK(a.w1 != c.w1);
}

TEST_CASE("zero head weights force probability one half") {
  Classifier clf = tiny_stub_classifier(8, 4, 0.0, 5);
  clf.w1.setZero();
  clf.b1.setZero();
  clf.w2.setZero();
  clf.b2 = 0.0;
  Rng rng(6);
  const std::vector<ImageTensor> batch = {random_image(rng, 16, 16),
                                          random_image(rng, 16, 16)};
  const Eigen::VectorXd p = forward(clf, batch, false);
  CHECK(p(0) == 0.5);
  CHECK(p(1) == 0.5);
}

TEST_CASE("inference is deterministic; training dropout varies with the seed") {
  const Classifier clf = tiny_stub_classifier(8, 16, 0.5, 5);
  Rng rng(7);
  const std::vector<ImageTensor> batch = {random_image(rng, 16, 16)};
  const Eigen::VectorXd a = forward(clf, batch, false);
  const Eigen::VectorXd b = forward(clf, batch, false);
  CHECK(a == b);
  const Eigen::VectorXd t1 = forward(clf, batch, true, 11);
  const Eigen::VectorXd t2 = forward(clf, batch, true, 11);
  const Eigen::VectorXd t3 = forward(clf, batch, true, 12);
  CHECK(t1 == t2);
  CHECK(t1 != t3);
}

TEST_CASE("forward matches the closed-form head on a 1x1 feature map") {
  Eigen::VectorXd f(3);
  f << 0.2, -1.4, 0.7;
  Classifier clf;
  clf.backbone = BackboneSpec::for_name(BackboneName::stub, 3, 8);
  clf.head.hidden_units = 2;
  clf.head.dropout_rate = 0.0;
  clf.extractor = std::make_shared<FixedExtractor>(f);
  clf.w1.resize(3, 2);
  clf.w1 << 0.5, -0.3, 0.1, 0.8, -0.2, 0.4;
  clf.b1.resize(2);
  clf.b1 << 0.05, -0.02;
  clf.w2.resize(2);
  clf.w2 << 1.2, -0.7;
  clf.b2 = 0.3;

  const ImageTensor dummy = ImageTensor::filled(8, 8, 0.0);
  const Eigen::VectorXd p = forward(clf, {dummy}, false);

  const double z1a = 0.5 * 0.2 + 0.1 * (-1.4) + (-0.2) * 0.7 + 0.05;
  const double z1b = (-0.3) * 0.2 + 0.8 * (-1.4) + 0.4 * 0.7 + (-0.02);
  const double a1a = std::max(0.0, z1a);
  const double a1b = std::max(0.0, z1b);
  const double want = sigmoid_ref(1.2 * a1a + (-0.7) * a1b + 0.3);
  CHECK(std::abs(p(0) - want) <= 1e-10);
}

TEST_CASE("probabilities stay inside the open unit interval even when saturated") {
  Classifier clf = tiny_stub_classifier(4, 2, 0.0, 9);
  clf.b2 = 500.0;  // drives sigmoid to 1 in double arithmetic
  Rng rng(10);
  const Eigen::VectorXd hi = forward(clf, {random_image(rng, 16, 16)}, false);
  CHECK(hi(0) < 1.0);
  CHECK(hi(0) > 0.0);
  clf.b2 = -500.0;
  const Eigen::VectorXd lo = forward(clf, {random_image(rng, 16, 16)}, false);
  CHECK(lo(0) > 0.0);
}

TEST_CASE("shape mismatches are reported with expected vs got") {
  const Classifier clf = tiny_stub_classifier(8, 4, 0.0, 3);
  Rng rng(11);
  try {
    forward(clf, {random_image(rng, 20, 20)}, false);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("16") != std::string::npos);
    CHECK(msg.find("20") != std::string::npos);
  }
}

TEST_CASE("gradients: saturated correct predictions give vanishing gradients") {
  Classifier clf = tiny_stub_classifier(4, 2, 0.0, 13);
  clf.w1.setZero();
  clf.b1.setOnes();
  clf.w2.setZero();
  Rng rng(14);
  const std::vector<ImageTensor> batch = {random_image(rng, 16, 16),
                                          random_image(rng, 16, 16)};

  clf.b2 = 40.0;  // p clamps at 1 - 1e-12
  HeadGradients g = gradients(clf, batch, std::vector<int>{1, 1}, 0);
  CHECK(std::abs(g.b2) <= 1e-9);
  CHECK(g.w1.cwiseAbs().maxCoeff() <= 1e-9);
  CHECK(g.w2.cwiseAbs().maxCoeff() <= 1e-9);

  clf.b2 = -40.0;
  g = gradients(clf, batch, std::vector<int>{0, 0}, 0);
  CHECK(std::abs(g.b2) <= 1e-9);
}

TEST_CASE("gradients: single-sample logit gradient equals p minus y") {
  Classifier clf = tiny_stub_classifier(4, 3, 0.0, 15);
  Rng rng(16);
  const std::vector<ImageTensor> batch = {random_image(rng, 16, 16)};
  const Eigen::VectorXd p = forward(clf, batch, false);
  // With one sample, dL/db2 = dL/dz2 = p - y.
  const HeadGradients g1 = gradients(clf, batch, std::vector<int>{1}, 0);
  CHECK(g1.b2 == doctest::Approx(p(0) - 1.0).epsilon(1e-12));
  const HeadGradients g0 = gradients(clf, batch, std::vector<int>{0}, 0);
  CHECK(g0.b2 == doctest::Approx(p(0)).epsilon(1e-12));
}

TEST_CASE("gradients: label domain is enforced") {
  const Classifier clf = tiny_stub_classifier(4, 3, 0.0, 17);
  Rng rng(18);
  const std::vector<ImageTensor> batch = {random_image(rng, 16, 16)};
  CHECK_THROWS_AS(gradients(clf, batch, std::vector<int>{2}, 0), ValueError);
}

TEST_CASE("gradients match central finite differences on a tiny head") {
  Rng rng(19);
  for (int trial = 0; trial < 4; ++trial) {
    Classifier clf = tiny_stub_classifier(4, 3, trial % 2 == 0 ? 0.0 : 0.5,
                                          100 + static_cast<uint64_t>(trial));
    const int batch_n = 3;
    Eigen::MatrixXd f(batch_n, 4);
    std::vector<int> labels(batch_n);
    for (int i = 0; i < batch_n; ++i) {
      for (int j = 0; j < 4; ++j) f(i, j) = rng.uniform(-1.5, 1.5);
      labels[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    const uint64_t seed = 500 + trial;
    const HeadBackward back = head_backward(clf, f, labels, {}, seed);
    const double eps = 1e-5;

    auto check_coord = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + eps;
      const double up = loss_at(clf, f, labels, seed);
      param = saved - eps;
      const double down = loss_at(clf, f, labels, seed);
      param = saved;
      const double fd = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
      CHECK(std::abs(fd - analytic) / denom <= 1e-4);
    };

    for (int i = 0; i < clf.w1.rows(); ++i) {
      for (int j = 0; j < clf.w1.cols(); ++j) check_coord(clf.w1(i, j), back.grads.w1(i, j));
    }
    for (int j = 0; j < clf.b1.size(); ++j) check_coord(clf.b1(j), back.grads.b1(j));
    for (int j = 0; j < clf.w2.size(); ++j) check_coord(clf.w2(j), back.grads.w2(j));
    check_coord(clf.b2, back.grads.b2);
  }
}

TEST_CASE("dropout: expectation over many masks matches the inference logit") {
  Classifier clf = tiny_stub_classifier(8, 32, 0.5, 23);
  clf.w2 = clf.w2.cwiseAbs();  // same-sign terms keep the relative error tight
  clf.b2 = 0.0;
  Rng rng(24);
  Eigen::MatrixXd f(1, 8);
  for (int j = 0; j < 8; ++j) f(0, j) = rng.uniform(0.2, 1.0);

  // Compare pre-sigmoid activations: average the masked logit over 1e4 draws.
  const Eigen::VectorXd base = head_forward(clf, f, false);
  const double base_logit = std::log(base(0) / (1.0 - base(0)));
  double mean_logit = 0.0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const Eigen::VectorXd p = head_forward(clf, f, true, static_cast<uint64_t>(t));
    mean_logit += std::log(p(0) / (1.0 - p(0)));
  }
  mean_logit /= trials;
  CHECK(std::abs(mean_logit - base_logit) / std::max(1e-8, std::abs(base_logit)) <= 0.02);
}

TEST_CASE("frozen backbone: extractor output identical before and after training steps") {
  const Classifier clf = tiny_stub_classifier(8, 8, 0.0, 31);
  CHECK(clf.backbone.frozen);
  Rng rng(32);
  const ImageTensor probe = random_image(rng, 16, 16);
  const Eigen::VectorXd before = extract_features(clf, probe);

  Classifier trained = clf;  // shares the extractor
  Eigen::MatrixXd f(2, 8);
  f.setRandom();
  for (int step = 0; step < 5; ++step) {
    const HeadBackward back = head_backward(trained, f, std::vector<int>{1, 0}, {}, step);
    trained.w1 -= 0.01 * back.grads.w1;
  }
  const Eigen::VectorXd after = extract_features(trained, probe);
  CHECK(before == after);
}

TEST_CASE("checkpoint round-trip preserves metadata and parameters to f32") {
  TempDir tmp;
  const Classifier clf = tiny_stub_classifier(8, 4, 0.25, 37);
  save_checkpoint(clf, tmp / "model.ckpt");
  const Classifier back = load_checkpoint(tmp / "model.ckpt");
  CHECK(back.backbone.name == BackboneName::stub);
  CHECK(back.backbone.input_side == clf.backbone.input_side);
  CHECK(back.backbone.feature_channels == 8);
  CHECK(back.head.hidden_units == 4);
  CHECK(back.head.dropout_rate == doctest::Approx(0.25));
  for (int i = 0; i < clf.w1.rows(); ++i) {
    for (int j = 0; j < clf.w1.cols(); ++j) {
      CHECK(back.w1(i, j) == static_cast<double>(static_cast<float>(clf.w1(i, j))));
    }
  }
  CHECK(back.b2 == static_cast<double>(static_cast<float>(clf.b2)));

  // Same seed, same build, same on-disk bytes.
  const Classifier twin = tiny_stub_classifier(8, 4, 0.25, 37);
  save_checkpoint(twin, tmp / "twin.ckpt");
  CHECK(read_file(tmp / "model.ckpt") == read_file(tmp / "twin.ckpt"));

  // Corrupt magic is rejected.
  std::string bytes = read_file(tmp / "model.ckpt");
  bytes[0] = 'X';
  {
    std::ofstream out(tmp / "bad.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(tmp / "bad.ckpt"), ParseError);
}

TEST_CASE("stub extractor: averages blocks and is shape-strict") {
  const StubExtractor stub(16, 8);
  CHECK(stub.channels() == 8);
  // A constant image pools to a constant per-cell color, so every grid cell
  // carries identical features.
  const ImageTensor img = ImageTensor::filled(16, 16, 0.6);
  const FeatureMap map = stub.extract(img);
  CHECK(map.rows == 7);
  CHECK(map.cols == 7);
  for (int c = 0; c < map.channels; ++c) {
    const double first = map.at(0, 0, c);
    for (int cell = 0; cell < 49; ++cell) {
      CHECK(map.data[static_cast<size_t>(cell) * map.channels + c] ==
            doctest::Approx(first).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(stub.extract(ImageTensor::filled(8, 8, 0.0)), ShapeError);
}

TEST_CASE("global_average_pool averages each channel over the grid") {
  FeatureMap map;
  map.rows = 2;
  map.cols = 1;
  map.channels = 2;
  map.data = {1.0, 10.0, 3.0, 30.0};
  const Eigen::VectorXd pooled = global_average_pool(map);
  CHECK(pooled(0) == 2.0);
  CHECK(pooled(1) == 20.0);
}
