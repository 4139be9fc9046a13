#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "asdscreen/image.hpp"

namespace asdscreen {

enum class BackboneName { vgg19, xception, resnet50v2, mobilenetv2, efficientnetb0, stub };

std::string to_string(BackboneName name);
BackboneName backbone_from_string(const std::string& s);

// Declarative description of a feature extractor. The pretrained backbones
// are fixed-weight extractors supplied by the user as weight files (see
// docs/formats.md); the stub is always available and needs no file.
struct BackboneSpec {
  BackboneName name = BackboneName::stub;
  int input_side = 224;
  int feature_channels = 64;
  bool frozen = true;

  // Canonical spec for a named backbone: xception takes 299x299 input, all
  // other pretrained backbones 224x224, with their published channel widths.
  static BackboneSpec for_name(BackboneName name, int stub_channels = 64,
                               int stub_side = 224);

  void validate() const;
};

// The replacement classification head: global average pooling, then
// dense(hidden_units, relu), dropout, dense(1, sigmoid).
struct HeadConfig {
  int hidden_units = 512;
  double dropout_rate = 0.5;

  void validate() const;
};

// Spatial feature grid emitted by an extractor, row-major [row][col][channel].
struct FeatureMap {
  int rows = 0;
  int cols = 0;
  int channels = 0;
  std::vector<double> data;

  double at(int r, int c, int ch) const {
    return data[(static_cast<size_t>(r) * cols + c) * channels + ch];
  }
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int input_side() const = 0;
  virtual int channels() const = 0;
  virtual FeatureMap extract(const ImageTensor& img) const = 0;
};

// Test-scale extractor: block-average pooling of the input to a 7x7 grid,
// then a fixed seeded linear map from RGB to `channels`. Deterministic,
// dependency-free, and information-bearing enough for a head to overfit.
class StubExtractor final : public FeatureExtractor {
 public:
  StubExtractor(int input_side, int channels);
  int input_side() const override { return side_; }
  int channels() const override { return channels_; }
  FeatureMap extract(const ImageTensor& img) const override;
  const Eigen::MatrixXd& channel_map() const { return map_; }

 private:
  int side_;
  int channels_;
  Eigen::MatrixXd map_;  // channels x 3
};

// Extractor loaded from a user-supplied weights container: pooling grid plus
// a per-channel linear map. This is the declared integration point for
// externally produced backbone weights; the repo never bundles any.
class PooledLinearExtractor final : public FeatureExtractor {
 public:
  static PooledLinearExtractor load(const std::filesystem::path& path);
  static void save(const std::filesystem::path& path, int input_side, int grid,
                   const Eigen::MatrixXd& channel_map);

  int input_side() const override { return side_; }
  int channels() const override { return static_cast<int>(map_.rows()); }
  FeatureMap extract(const ImageTensor& img) const override;

 private:
  PooledLinearExtractor(int side, int grid, Eigen::MatrixXd map);
  int side_;
  int grid_;
  Eigen::MatrixXd map_;
};

// Trainable head state, snapshotable for best-epoch restore and checkpoints.
struct HeadParameters {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

// Backbone plus head parameters. Head parameters are the only trainable
// state; extractors are immutable once constructed.
struct Classifier {
  BackboneSpec backbone;
  HeadConfig head;
  std::shared_ptr<const FeatureExtractor> extractor;

  Eigen::MatrixXd w1;  // feature_channels x hidden_units
  Eigen::VectorXd b1;  // hidden_units
  Eigen::VectorXd w2;  // hidden_units
  double b2 = 0.0;

  size_t head_parameter_count() const;
};

HeadParameters head_parameters(const Classifier& clf);
void set_head_parameters(Classifier& clf, const HeadParameters& params);

// Directory searched for "<backbone>.weights" files ($ASDSCREEN_WEIGHTS_DIR).
std::filesystem::path weights_dir();

// Builds extractor plus seeded head. Head weights use uniform
// Glorot initialization (+-sqrt(6/(fan_in+fan_out))), biases zero; identical
// seeds yield bit-identical parameters. Pretrained backbones require their
// weights file and fail with the expected path otherwise.
Classifier build_classifier(const BackboneSpec& spec, const HeadConfig& head,
                            uint64_t seed);

// Spatial mean per channel.
Eigen::VectorXd global_average_pool(const FeatureMap& features);

// extract + GAP for one image.
Eigen::VectorXd extract_features(const Classifier& clf, const ImageTensor& img);

// Head forward from pooled features (one row per sample). With training
// enabled, dropout masks are drawn from dropout_seed with inverted 1/(1-rate)
// scaling; inference is deterministic. Outputs lie strictly inside (0, 1).
Eigen::VectorXd head_forward(const Classifier& clf, const Eigen::MatrixXd& features,
                             bool training, uint64_t dropout_seed = 0);

// Full forward pass over a batch of images.
Eigen::VectorXd forward(const Classifier& clf, const std::vector<ImageTensor>& batch,
                        bool training, uint64_t dropout_seed = 0);

struct HeadGradients {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

struct HeadBackward {
  HeadGradients grads;
  Eigen::VectorXd probabilities;  // from the same (masked) pass
};

// Gradients of the (weighted) mean BCE loss with respect to head parameters.
// `weights` may be empty for the unweighted mean. Dropout is active, drawn
// from dropout_seed, so a fixed seed makes the result reproducible.
HeadBackward head_backward(const Classifier& clf, const Eigen::MatrixXd& features,
                           std::span<const int> labels, std::span<const double> weights,
                           uint64_t dropout_seed);

HeadGradients gradients(const Classifier& clf, const std::vector<ImageTensor>& batch,
                        std::span<const int> labels, uint64_t dropout_seed);

// Versioned binary container with little-endian float32 parameter blocks;
// byte layout in docs/formats.md. Loading reconstructs the extractor from the
// backbone name (pretrained backbones need their weights file again).
void save_checkpoint(const Classifier& clf, const std::filesystem::path& path);
Classifier load_checkpoint(const std::filesystem::path& path);

}  // namespace asdscreen
