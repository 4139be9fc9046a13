#include "asdscreen/model.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include "asdscreen/errors.hpp"
#include "asdscreen/random.hpp"

namespace fs = std::filesystem;

namespace asdscreen {

namespace {

// Fixed seed of the stub's RGB->channel map; part of the stub's definition,
// not of any experiment seed.
constexpr uint64_t kStubMapSeed = 0x5ad5c4ee7ull;
constexpr int kStubGrid = 7;

constexpr double kProbabilityFloor = 1e-12;

Eigen::MatrixXd seeded_channel_map(int channels, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd map(channels, 3);
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 3; ++k) {
      map(c, k) = rng.uniform(-1.0, 1.0);
    }
  }
  return map;
}

// Block-average pooling of an RGB tensor to grid x grid cells.
Eigen::MatrixXd block_average(const ImageTensor& img, int grid) {
  Eigen::MatrixXd pooled(grid * grid, 3);
  for (int gy = 0; gy < grid; ++gy) {
    const int y0 = gy * img.height / grid;
    const int y1 = (gy + 1) * img.height / grid;
    for (int gx = 0; gx < grid; ++gx) {
      const int x0 = gx * img.width / grid;
      const int x1 = (gx + 1) * img.width / grid;
      double sum[3] = {0.0, 0.0, 0.0};
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          for (int c = 0; c < 3; ++c) sum[c] += img.at(y, x, c);
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (int c = 0; c < 3; ++c) pooled(gy * grid + gx, c) = sum[c] / n;
    }
  }
  return pooled;
}

FeatureMap mapped_features(const ImageTensor& img, int grid, const Eigen::MatrixXd& map) {
  const Eigen::MatrixXd pooled = block_average(img, grid);       // (grid*grid) x 3
  const Eigen::MatrixXd feats = pooled * map.transpose();        // (grid*grid) x C
  FeatureMap out;
  out.rows = grid;
  out.cols = grid;
  out.channels = static_cast<int>(map.rows());
  out.data.resize(static_cast<size_t>(grid) * grid * out.channels);
  for (int cell = 0; cell < grid * grid; ++cell) {
    for (int c = 0; c < out.channels; ++c) {
      out.data[static_cast<size_t>(cell) * out.channels + c] = feats(cell, c);
    }
  }
  return out;
}

double stable_sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Little-endian primitive IO. The build targets little-endian hosts; the
// readers validate magic bytes so a foreign byte order fails loudly.
void put_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void put_f32(std::ostream& out, float v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint32_t get_u32(std::istream& in, const std::string& ctx) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw ParseError(ctx + ": truncated file");
  }
  return v;
}
float get_f32(std::istream& in, const std::string& ctx) {
  float v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw ParseError(ctx + ": truncated file");
  }
  return v;
}

constexpr char kCheckpointMagic[4] = {'A', 'S', 'D', 'C'};
constexpr char kExtractorMagic[4] = {'A', 'S', 'D', 'X'};
constexpr uint32_t kFormatVersion = 1;

std::shared_ptr<const FeatureExtractor> make_extractor(const BackboneSpec& spec) {
  if (spec.name == BackboneName::stub) {
    return std::make_shared<StubExtractor>(spec.input_side, spec.feature_channels);
  }
  const fs::path dir = weights_dir();
  const fs::path expected = (dir.empty() ? fs::path("$ASDSCREEN_WEIGHTS_DIR") : dir) /
                            (to_string(spec.name) + ".weights");
  if (dir.empty() || !fs::exists(dir / (to_string(spec.name) + ".weights"))) {
    throw ConfigError("pretrained weights for '" + to_string(spec.name) +
                      "' not found; expected file: " + expected.string() +
                      (dir.empty() ? " (ASDSCREEN_WEIGHTS_DIR is unset)" : ""));
  }
  auto ext = std::make_shared<PooledLinearExtractor>(
      PooledLinearExtractor::load(dir / (to_string(spec.name) + ".weights")));
  if (ext->input_side() != spec.input_side || ext->channels() != spec.feature_channels) {
    throw ConfigError("weights file " + expected.string() + " declares " +
                      std::to_string(ext->input_side()) + "px/" +
                      std::to_string(ext->channels()) + "ch but '" +
                      to_string(spec.name) + "' requires " +
                      std::to_string(spec.input_side) + "px/" +
                      std::to_string(spec.feature_channels) + "ch");
  }
  return ext;
}

}  // namespace

std::string to_string(BackboneName name) {
  switch (name) {
    case BackboneName::vgg19: return "vgg19";
    case BackboneName::xception: return "xception";
    case BackboneName::resnet50v2: return "resnet50v2";
    case BackboneName::mobilenetv2: return "mobilenetv2";
    case BackboneName::efficientnetb0: return "efficientnetb0";
    case BackboneName::stub: return "stub";
  }
  throw ValueError("unknown backbone");
}

BackboneName backbone_from_string(const std::string& s) {
  if (s == "vgg19") return BackboneName::vgg19;
  if (s == "xception") return BackboneName::xception;
  if (s == "resnet50v2") return BackboneName::resnet50v2;
  if (s == "mobilenetv2") return BackboneName::mobilenetv2;
  if (s == "efficientnetb0") return BackboneName::efficientnetb0;
  if (s == "stub") return BackboneName::stub;
  throw ConfigError("unknown backbone '" + s + "'");
}

BackboneSpec BackboneSpec::for_name(BackboneName name, int stub_channels, int stub_side) {
  BackboneSpec spec;
  spec.name = name;
  switch (name) {
    case BackboneName::vgg19:
      spec.input_side = 224;
      spec.feature_channels = 512;
      break;
    case BackboneName::xception:
      spec.input_side = 299;
      spec.feature_channels = 2048;
      break;
    case BackboneName::resnet50v2:
      spec.input_side = 224;
      spec.feature_channels = 2048;
      break;
    case BackboneName::mobilenetv2:
      spec.input_side = 224;
      spec.feature_channels = 1280;
      break;
    case BackboneName::efficientnetb0:
      spec.input_side = 224;
      spec.feature_channels = 1280;
      break;
    case BackboneName::stub:
      spec.input_side = stub_side;
      spec.feature_channels = stub_channels;
      break;
  }
  return spec;
}

void BackboneSpec::validate() const {
  if (feature_channels <= 0) {
    throw ConfigError("feature_channels must be positive");
  }
  if (input_side < 8) {
    throw ConfigError("backbone input_side must be >= 8");
  }
  if (name != BackboneName::stub) {
    const int required = name == BackboneName::xception ? 299 : 224;
    if (input_side != required) {
      throw ConfigError("backbone '" + to_string(name) + "' requires input_side " +
                        std::to_string(required) + ", got " + std::to_string(input_side));
    }
  }
}

void HeadConfig::validate() const {
  if (hidden_units <= 0) {
    throw ConfigError("hidden_units must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("dropout_rate must lie in [0, 1)");
  }
}

StubExtractor::StubExtractor(int input_side, int channels)
    : side_(input_side), channels_(channels),
      map_(seeded_channel_map(channels, kStubMapSeed)) {}

FeatureMap StubExtractor::extract(const ImageTensor& img) const {
  if (img.height != side_ || img.width != side_) {
    throw ShapeError("stub extractor expects " + std::to_string(side_) + "x" +
                     std::to_string(side_) + " input, got " +
                     std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  return mapped_features(img, kStubGrid, map_);
}

PooledLinearExtractor::PooledLinearExtractor(int side, int grid, Eigen::MatrixXd map)
    : side_(side), grid_(grid), map_(std::move(map)) {}

PooledLinearExtractor PooledLinearExtractor::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights file " + path.string());
  const std::string ctx = path.string();
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kExtractorMagic, 4) != 0) {
    throw ParseError(ctx + ": not an extractor weights file");
  }
  if (get_u32(in, ctx) != kFormatVersion) throw ParseError(ctx + ": unsupported version");
  const int side = static_cast<int>(get_u32(in, ctx));
  const int channels = static_cast<int>(get_u32(in, ctx));
  const int grid = static_cast<int>(get_u32(in, ctx));
  if (side < 8 || channels < 1 || grid < 1 || grid > side) {
    throw ParseError(ctx + ": implausible extractor dimensions");
  }
  Eigen::MatrixXd map(channels, 3);
  for (int c = 0; c < channels; ++c) {
    for (int k = 0; k < 3; ++k) map(c, k) = get_f32(in, ctx);
  }
  char extra;
  if (in.read(&extra, 1)) throw ParseError(ctx + ": trailing bytes");
  return PooledLinearExtractor(side, grid, std::move(map));
}

void PooledLinearExtractor::save(const fs::path& path, int input_side, int grid,
                                 const Eigen::MatrixXd& channel_map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kExtractorMagic, 4);
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<uint32_t>(input_side));
  put_u32(out, static_cast<uint32_t>(channel_map.rows()));
  put_u32(out, static_cast<uint32_t>(grid));
  for (int c = 0; c < channel_map.rows(); ++c) {
    for (int k = 0; k < 3; ++k) put_f32(out, static_cast<float>(channel_map(c, k)));
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

FeatureMap PooledLinearExtractor::extract(const ImageTensor& img) const {
  if (img.height != side_ || img.width != side_) {
    throw ShapeError("extractor expects " + std::to_string(side_) + "x" +
                     std::to_string(side_) + " input, got " +
                     std::to_string(img.height) + "x" + std::to_string(img.width));
  }
  return mapped_features(img, grid_, map_);
}

size_t Classifier::head_parameter_count() const {
  return static_cast<size_t>(w1.rows()) * w1.cols() + b1.size() + w2.size() + 1;
}

HeadParameters head_parameters(const Classifier& clf) {
  return {clf.w1, clf.b1, clf.w2, clf.b2};
}

void set_head_parameters(Classifier& clf, const HeadParameters& params) {
  clf.w1 = params.w1;
  clf.b1 = params.b1;
  clf.w2 = params.w2;
  clf.b2 = params.b2;
}

fs::path weights_dir() {
  const char* dir = std::getenv("ASDSCREEN_WEIGHTS_DIR");
  return dir ? fs::path(dir) : fs::path();
}

Classifier build_classifier(const BackboneSpec& spec, const HeadConfig& head,
                            uint64_t seed) {
  spec.validate();
  head.validate();
  if (!spec.frozen) {
    // Every available extractor is fixed-weight; only the head trains.
    throw ConfigError("backbone unfreezing is not supported: extractors are "
                      "fixed-weight, only the head is trainable");
  }
  Classifier clf;
  clf.backbone = spec;
  clf.head = head;
  clf.extractor = make_extractor(spec);

  const int c = spec.feature_channels;
  const int h = head.hidden_units;
  Rng rng(seed);
  const double limit1 = std::sqrt(6.0 / (c + h));
  clf.w1.resize(c, h);
  for (int i = 0; i < c; ++i) {
    for (int j = 0; j < h; ++j) clf.w1(i, j) = rng.uniform(-limit1, limit1);
  }
  const double limit2 = std::sqrt(6.0 / (h + 1));
  clf.w2.resize(h);
  for (int j = 0; j < h; ++j) clf.w2(j) = rng.uniform(-limit2, limit2);
  clf.b1 = Eigen::VectorXd::Zero(h);
  clf.b2 = 0.0;
  return clf;
}

Eigen::VectorXd global_average_pool(const FeatureMap& features) {
  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(features.channels);
  const int cells = features.rows * features.cols;
  for (int cell = 0; cell < cells; ++cell) {
    for (int c = 0; c < features.channels; ++c) {
      pooled(c) += features.data[static_cast<size_t>(cell) * features.channels + c];
    }
  }
  return pooled / static_cast<double>(cells);
}

Eigen::VectorXd extract_features(const Classifier& clf, const ImageTensor& img) {
  return global_average_pool(clf.extractor->extract(img));
}

namespace {

struct HeadPass {
  Eigen::MatrixXd z1;       // B x H pre-activation
  Eigen::MatrixXd dropped;  // B x H post-relu, post-dropout
  Eigen::VectorXd z2;       // B logits
  Eigen::VectorXd probs;    // B probabilities, clamped into (0, 1)
  Eigen::MatrixXd scale;    // B x H dropout scale (1 when inference)
};

HeadPass run_head(const Classifier& clf, const Eigen::MatrixXd& features, bool training,
                  uint64_t dropout_seed) {
  if (features.cols() != clf.w1.rows()) {
    throw ShapeError("head expects " + std::to_string(clf.w1.rows()) +
                     " feature channels, got " + std::to_string(features.cols()));
  }
  HeadPass pass;
  const auto b = features.rows();
  const auto h = clf.w1.cols();
  pass.z1 = features * clf.w1;
  pass.z1.rowwise() += clf.b1.transpose();
  Eigen::MatrixXd a1 = pass.z1.cwiseMax(0.0);

  pass.scale = Eigen::MatrixXd::Ones(b, h);
  if (training && clf.head.dropout_rate > 0.0) {
    const double keep = 1.0 - clf.head.dropout_rate;
    Rng rng(dropout_seed);
    // Mask drawn row-major (sample, then unit); inverted scaling keeps the
    // inference path correction-free.
    for (Eigen::Index i = 0; i < b; ++i) {
      for (Eigen::Index j = 0; j < h; ++j) {
        pass.scale(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      }
    }
  }
  pass.dropped = a1.cwiseProduct(pass.scale);
  pass.z2 = pass.dropped * clf.w2;
  pass.z2.array() += clf.b2;

  pass.probs.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    double p = stable_sigmoid(pass.z2(i));
    if (!std::isfinite(p)) {
      throw NumericError("non-finite activation in head forward");
    }
    if (p < kProbabilityFloor) p = kProbabilityFloor;
    if (p > 1.0 - kProbabilityFloor) p = 1.0 - kProbabilityFloor;
    pass.probs(i) = p;
  }
  return pass;
}

Eigen::MatrixXd batch_features(const Classifier& clf, const std::vector<ImageTensor>& batch) {
  if (batch.empty()) throw ShapeError("empty batch");
  Eigen::MatrixXd features(batch.size(), clf.backbone.feature_channels);
  for (size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].height != clf.backbone.input_side ||
        batch[i].width != clf.backbone.input_side) {
      throw ShapeError("batch image " + std::to_string(i) + " is " +
                       std::to_string(batch[i].height) + "x" +
                       std::to_string(batch[i].width) + ", backbone expects " +
                       std::to_string(clf.backbone.input_side) + "x" +
                       std::to_string(clf.backbone.input_side));
    }
    features.row(i) = extract_features(clf, batch[i]).transpose();
  }
  return features;
}

}  // namespace

Eigen::VectorXd head_forward(const Classifier& clf, const Eigen::MatrixXd& features,
                             bool training, uint64_t dropout_seed) {
  return run_head(clf, features, training, dropout_seed).probs;
}

Eigen::VectorXd forward(const Classifier& clf, const std::vector<ImageTensor>& batch,
                        bool training, uint64_t dropout_seed) {
  return head_forward(clf, batch_features(clf, batch), training, dropout_seed);
}

HeadBackward head_backward(const Classifier& clf, const Eigen::MatrixXd& features,
                           std::span<const int> labels, std::span<const double> weights,
                           uint64_t dropout_seed) {
  const auto b = features.rows();
  if (static_cast<Eigen::Index>(labels.size()) != b) {
    throw ShapeError("labels size " + std::to_string(labels.size()) +
                     " does not match batch size " + std::to_string(b));
  }
  if (!weights.empty() && weights.size() != labels.size()) {
    throw ShapeError("weights size does not match batch size");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) {
      throw ValueError("labels must be 0 or 1, got " + std::to_string(y));
    }
  }

  HeadPass pass = run_head(clf, features, true, dropout_seed);

  double weight_sum = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    weight_sum += weights.empty() ? 1.0 : weights[i];
  }

  // dL/dz2 via the sigmoid-BCE identity (p - y), scaled by the normalized
  // sample weight.
  Eigen::VectorXd dz2(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const double w = (weights.empty() ? 1.0 : weights[i]) / weight_sum;
    dz2(i) = w * (pass.probs(i) - static_cast<double>(labels[i]));
  }

  HeadBackward out;
  out.probabilities = pass.probs;
  out.grads.w2 = pass.dropped.transpose() * dz2;
  out.grads.b2 = dz2.sum();

  // Back through dropout scaling and relu.
  Eigen::MatrixXd dz1 = (dz2 * clf.w2.transpose()).cwiseProduct(pass.scale);
  dz1 = dz1.cwiseProduct((pass.z1.array() > 0.0).cast<double>().matrix());
  out.grads.w1 = features.transpose() * dz1;
  out.grads.b1 = dz1.colwise().sum().transpose();
  return out;
}

HeadGradients gradients(const Classifier& clf, const std::vector<ImageTensor>& batch,
                        std::span<const int> labels, uint64_t dropout_seed) {
  return head_backward(clf, batch_features(clf, batch), labels, {}, dropout_seed).grads;
}

void save_checkpoint(const Classifier& clf, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, 4);
  put_u32(out, kFormatVersion);
  const std::string name = to_string(clf.backbone.name);
  put_u32(out, static_cast<uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  put_u32(out, static_cast<uint32_t>(clf.backbone.input_side));
  put_u32(out, static_cast<uint32_t>(clf.backbone.feature_channels));
  put_u32(out, clf.backbone.frozen ? 1 : 0);
  put_u32(out, static_cast<uint32_t>(clf.head.hidden_units));
  put_f32(out, static_cast<float>(clf.head.dropout_rate));
  for (int i = 0; i < clf.w1.rows(); ++i) {
    for (int j = 0; j < clf.w1.cols(); ++j) put_f32(out, static_cast<float>(clf.w1(i, j)));
  }
  for (int j = 0; j < clf.b1.size(); ++j) put_f32(out, static_cast<float>(clf.b1(j)));
  for (int j = 0; j < clf.w2.size(); ++j) put_f32(out, static_cast<float>(clf.w2(j)));
  put_f32(out, static_cast<float>(clf.b2));
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

Classifier load_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  const std::string ctx = path.string();
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw ParseError(ctx + ": not a classifier checkpoint");
  }
  if (get_u32(in, ctx) != kFormatVersion) throw ParseError(ctx + ": unsupported version");
  const uint32_t name_len = get_u32(in, ctx);
  if (name_len > 64) throw ParseError(ctx + ": implausible backbone name length");
  std::string name(name_len, '\0');
  if (!in.read(name.data(), name_len)) throw ParseError(ctx + ": truncated file");

  BackboneSpec spec;
  spec.name = backbone_from_string(name);
  spec.input_side = static_cast<int>(get_u32(in, ctx));
  spec.feature_channels = static_cast<int>(get_u32(in, ctx));
  spec.frozen = get_u32(in, ctx) != 0;
  HeadConfig head;
  head.hidden_units = static_cast<int>(get_u32(in, ctx));
  head.dropout_rate = get_f32(in, ctx);

  Classifier clf;
  clf.backbone = spec;
  clf.head = head;
  clf.extractor = make_extractor(spec);
  clf.w1.resize(spec.feature_channels, head.hidden_units);
  for (int i = 0; i < clf.w1.rows(); ++i) {
    for (int j = 0; j < clf.w1.cols(); ++j) clf.w1(i, j) = get_f32(in, ctx);
  }
  clf.b1.resize(head.hidden_units);
  for (int j = 0; j < clf.b1.size(); ++j) clf.b1(j) = get_f32(in, ctx);
  clf.w2.resize(head.hidden_units);
  for (int j = 0; j < clf.w2.size(); ++j) clf.w2(j) = get_f32(in, ctx);
  clf.b2 = get_f32(in, ctx);
  char extra;
  if (in.read(&extra, 1)) throw ParseError(ctx + ": trailing bytes");
  return clf;
}

}  // namespace asdscreen
