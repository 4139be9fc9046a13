#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "asdscreen/manifest.hpp"
#include "asdscreen/model.hpp"

namespace asdscreen {

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 32;
  int max_epochs = 50;
  int early_stop_patience = 5;
  double adagrad_epsilon = 1e-7;
  // Validation loss must drop by strictly more than this to count as an
  // improvement.
  double min_improvement = 1e-6;
  uint64_t seed = 0;
  // (weight for label 0, weight for label 1); applied to the training
  // objective only, validation loss stays unweighted.
  std::optional<std::pair<double, double>> class_weights;
  bool restore_best = true;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double elapsed_seconds = 0.0;
};

enum class StopReason { max_epochs, early_stop };

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7]
// before the logs. With weights, the weighted mean sum(w*l)/sum(w); weights
// of all ones reproduce the unweighted value bit for bit.
double bce_loss(std::span<const double> probabilities, std::span<const int> labels,
                std::span<const double> weights = {});

// Per-coordinate squared-gradient accumulators; nondecreasing, start at zero.
struct AdagradState {
  Eigen::MatrixXd w1_acc;
  Eigen::VectorXd b1_acc;
  Eigen::VectorXd w2_acc;
  double b2_acc = 0.0;

  static AdagradState zeros_like(const Classifier& clf);
};

// acc += g^2; w -= lr * g / (sqrt(acc) + eps). Non-finite gradients abort the
// step with NumericError before touching any state.
void adagrad_step(Classifier& clf, const HeadGradients& grads, AdagradState& state,
                  double learning_rate, double epsilon);

// Validation-loss early stopping. observe() consumes one epoch's loss and
// returns true when patience consecutive non-improving epochs have elapsed.
class EarlyStopper {
 public:
  EarlyStopper(int patience, double min_improvement);
  bool observe(double val_loss);
  bool last_was_improvement() const { return last_improved_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  int patience_;
  double min_improvement_;
  int epoch_ = 0;
  int streak_ = 0;
  int best_epoch_ = 0;
  double best_loss_ = 0.0;
  bool has_best_ = false;
  bool last_improved_ = false;
};

// Labeled input provider. Implementations must be pure per index: the
// trainer assumes repeated reads yield identical tensors.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual size_t size() const = 0;
  virtual ImageTensor image(size_t i) const = 0;
  virtual int label(size_t i) const = 0;
};

class MemorySource final : public SampleSource {
 public:
  MemorySource(std::vector<ImageTensor> images, std::vector<int> labels);
  size_t size() const override { return images_.size(); }
  ImageTensor image(size_t i) const override { return images_[i]; }
  int label(size_t i) const override { return labels_[i]; }

 private:
  std::vector<ImageTensor> images_;
  std::vector<int> labels_;
};

struct TrainResult {
  std::vector<EpochStats> history;
  StopReason stop_reason = StopReason::max_epochs;
  int best_epoch = 0;  // 1-based epoch whose parameters were best on val loss
  HeadParameters best_parameters;
  HeadParameters last_parameters;
};

// The training loop: seeded per-epoch shuffling (epoch order derives from
// (cfg.seed, epoch), independent of history), mini-batch Adagrad on the head,
// per-epoch validation with training=false, early stopping, best-epoch
// restore. Extracted features are cached across epochs; the backbone is
// fixed, so this changes nothing observable.
TrainResult train(Classifier& clf, const SampleSource& train_set,
                  const SampleSource& val_set, const TrainConfig& cfg);

// weight_c = N_total / (2 * N_c) over the train split; balanced data gives
// (1, 1). Errors if either class is absent (re-sampling is the remedy there).
std::pair<double, double> class_weights_from_manifest(const DatasetManifest& manifest);

// Duplicates minority-class train records (seeded uniform draws with
// replacement) until class counts match. Duplicates get a "#dup<k>" sample_id
// suffix; val/test are untouched.
DatasetManifest oversample(const DatasetManifest& manifest, uint64_t seed);

// CSV with header epoch,train_loss,train_acc,val_loss,val_acc,elapsed_s.
// with_timestamps=false zeroes the elapsed column for byte-reproducible runs.
void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochStats>& history, bool with_timestamps);

}  // namespace asdscreen
