#include "asdscreen/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "asdscreen/errors.hpp"
#include "asdscreen/random.hpp"

namespace asdscreen {

namespace {

constexpr double kProbClamp = 1e-7;

double clamp_probability(double p) {
  if (p < kProbClamp) return kProbClamp;
  if (p > 1.0 - kProbClamp) return 1.0 - kProbClamp;
  return p;
}

bool all_finite(const HeadGradients& g) {
  return g.w1.allFinite() && g.b1.allFinite() && g.w2.allFinite() && std::isfinite(g.b2);
}

// Feature extraction is the expensive part of a desk-scale epoch; the
// extractor is immutable, so pooled features are computed once per sample.
class FeatureCache {
 public:
  FeatureCache(const Classifier& clf, const SampleSource& source)
      : clf_(clf), source_(source), cache_(source.size()) {}

  const Eigen::VectorXd& at(size_t i) {
    if (!cache_[i]) {
      cache_[i] = extract_features(clf_, source_.image(i));
    }
    return *cache_[i];
  }

  Eigen::MatrixXd rows(std::span<const size_t> indices) {
    Eigen::MatrixXd out(indices.size(), clf_.backbone.feature_channels);
    for (size_t r = 0; r < indices.size(); ++r) {
      out.row(static_cast<Eigen::Index>(r)) = at(indices[r]).transpose();
    }
    return out;
  }

 private:
  const Classifier& clf_;
  const SampleSource& source_;
  std::vector<std::optional<Eigen::VectorXd>> cache_;
};

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be >= 1");
  if (!(adagrad_epsilon > 0.0)) throw ConfigError("adagrad_epsilon must be positive");
  if (class_weights) {
    if (!(class_weights->first > 0.0 && class_weights->second > 0.0)) {
      throw ConfigError("class weights must be positive");
    }
  }
}

double bce_loss(std::span<const double> probabilities, std::span<const int> labels,
                std::span<const double> weights) {
  if (probabilities.size() != labels.size()) {
    throw ShapeError("probabilities size " + std::to_string(probabilities.size()) +
                     " does not match labels size " + std::to_string(labels.size()));
  }
  if (!weights.empty() && weights.size() != labels.size()) {
    throw ShapeError("weights size does not match labels size");
  }
  if (probabilities.empty()) throw ValueError("bce_loss needs at least one sample");

  double loss_sum = 0.0;
  double weight_sum = 0.0;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValueError("labels must be 0 or 1, got " + std::to_string(labels[i]));
    }
    const double p = clamp_probability(probabilities[i]);
    const double w = weights.empty() ? 1.0 : weights[i];
    const double term = labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    loss_sum += w * term;
    weight_sum += w;
  }
  return loss_sum / weight_sum;
}

AdagradState AdagradState::zeros_like(const Classifier& clf) {
  AdagradState s;
  s.w1_acc = Eigen::MatrixXd::Zero(clf.w1.rows(), clf.w1.cols());
  s.b1_acc = Eigen::VectorXd::Zero(clf.b1.size());
  s.w2_acc = Eigen::VectorXd::Zero(clf.w2.size());
  s.b2_acc = 0.0;
  return s;
}

void adagrad_step(Classifier& clf, const HeadGradients& grads, AdagradState& state,
                  double learning_rate, double epsilon) {
  if (grads.w1.rows() != clf.w1.rows() || grads.w1.cols() != clf.w1.cols() ||
      grads.b1.size() != clf.b1.size() || grads.w2.size() != clf.w2.size()) {
    throw ShapeError("gradient shapes do not match parameters");
  }
  if (!all_finite(grads)) {
    throw NumericError("non-finite gradient; aborting update step");
  }
  state.w1_acc.array() += grads.w1.array().square();
  clf.w1.array() -=
      learning_rate * grads.w1.array() / (state.w1_acc.array().sqrt() + epsilon);
  state.b1_acc.array() += grads.b1.array().square();
  clf.b1.array() -=
      learning_rate * grads.b1.array() / (state.b1_acc.array().sqrt() + epsilon);
  state.w2_acc.array() += grads.w2.array().square();
  clf.w2.array() -=
      learning_rate * grads.w2.array() / (state.w2_acc.array().sqrt() + epsilon);
  state.b2_acc += grads.b2 * grads.b2;
  clf.b2 -= learning_rate * grads.b2 / (std::sqrt(state.b2_acc) + epsilon);
}

EarlyStopper::EarlyStopper(int patience, double min_improvement)
    : patience_(patience), min_improvement_(min_improvement) {
  if (patience < 1) throw ConfigError("patience must be >= 1");
}

bool EarlyStopper::observe(double val_loss) {
  ++epoch_;
  if (!has_best_ || val_loss < best_loss_ - min_improvement_) {
    has_best_ = true;
    best_loss_ = val_loss;
    best_epoch_ = epoch_;
    streak_ = 0;
    last_improved_ = true;
    return false;
  }
  last_improved_ = false;
  return ++streak_ >= patience_;
}

MemorySource::MemorySource(std::vector<ImageTensor> images, std::vector<int> labels)
    : images_(std::move(images)), labels_(std::move(labels)) {
  if (images_.size() != labels_.size()) {
    throw ShapeError("images and labels differ in length");
  }
  for (int y : labels_) {
    if (y != 0 && y != 1) throw ValueError("labels must be 0 or 1");
  }
}

TrainResult train(Classifier& clf, const SampleSource& train_set,
                  const SampleSource& val_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.size() == 0) throw ConfigError("train set is empty");
  if (val_set.size() == 0) throw ConfigError("validation set is empty");

  FeatureCache train_features(clf, train_set);
  FeatureCache val_features(clf, val_set);

  std::vector<int> train_labels(train_set.size());
  for (size_t i = 0; i < train_set.size(); ++i) train_labels[i] = train_set.label(i);
  std::vector<int> val_labels(val_set.size());
  for (size_t i = 0; i < val_set.size(); ++i) val_labels[i] = val_set.label(i);

  auto sample_weight = [&](int label) {
    if (!cfg.class_weights) return 1.0;
    return label == 1 ? cfg.class_weights->second : cfg.class_weights->first;
  };

  TrainResult result;
  EarlyStopper stopper(cfg.early_stop_patience, cfg.min_improvement);
  HeadParameters best = head_parameters(clf);
  AdagradState state = AdagradState::zeros_like(clf);
  result.stop_reason = StopReason::max_epochs;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(mix_seed(cfg.seed, static_cast<uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    double epoch_loss_sum = 0.0;
    double epoch_weight_sum = 0.0;
    size_t correct = 0;
    size_t batch_index = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::span<const size_t> batch_indices(order.data() + start, end - start);
      Eigen::MatrixXd features = train_features.rows(batch_indices);
      std::vector<int> labels(batch_indices.size());
      std::vector<double> weights(batch_indices.size());
      for (size_t i = 0; i < batch_indices.size(); ++i) {
        labels[i] = train_labels[batch_indices[i]];
        weights[i] = sample_weight(labels[i]);
      }
      const uint64_t dropout_seed =
          mix_seed(cfg.seed ^ 0x9e3779b97f4a7c15ull,
                   (static_cast<uint64_t>(epoch) << 32) | batch_index);
      try {
        HeadBackward step = head_backward(clf, features, labels,
                                          cfg.class_weights ? std::span<const double>(weights)
                                                            : std::span<const double>(),
                                          dropout_seed);
        std::vector<double> probs(step.probabilities.data(),
                                  step.probabilities.data() + step.probabilities.size());
        const double batch_loss =
            bce_loss(probs, labels,
                     cfg.class_weights ? std::span<const double>(weights)
                                       : std::span<const double>());
        double batch_weight = 0.0;
        for (double w : weights) batch_weight += cfg.class_weights ? w : 1.0;
        epoch_loss_sum += batch_loss * batch_weight;
        epoch_weight_sum += batch_weight;
        for (size_t i = 0; i < probs.size(); ++i) {
          if ((probs[i] >= 0.5 ? 1 : 0) == labels[i]) ++correct;
        }
        adagrad_step(clf, step.grads, state, cfg.learning_rate, cfg.adagrad_epsilon);
      } catch (const NumericError& e) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + e.what());
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss_sum / epoch_weight_sum;
    stats.train_accuracy = static_cast<double>(correct) / train_set.size();

    // Validation runs the deterministic inference path, unweighted.
    {
      std::vector<double> val_probs;
      val_probs.reserve(val_set.size());
      for (size_t start = 0; start < val_set.size();
           start += static_cast<size_t>(cfg.batch_size)) {
        const size_t end =
            std::min(val_set.size(), start + static_cast<size_t>(cfg.batch_size));
        std::vector<size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        Eigen::MatrixXd features = val_features.rows(idx);
        Eigen::VectorXd probs = head_forward(clf, features, false);
        for (Eigen::Index i = 0; i < probs.size(); ++i) val_probs.push_back(probs(i));
      }
      stats.val_loss = bce_loss(val_probs, val_labels);
      size_t val_correct = 0;
      for (size_t i = 0; i < val_probs.size(); ++i) {
        if ((val_probs[i] >= 0.5 ? 1 : 0) == val_labels[i]) ++val_correct;
      }
      stats.val_accuracy = static_cast<double>(val_correct) / val_set.size();
    }

    stats.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.history.push_back(stats);

    const bool stop = stopper.observe(stats.val_loss);
    if (stopper.last_was_improvement()) {
      best = head_parameters(clf);
    }
    if (stop) {
      result.stop_reason = StopReason::early_stop;
      break;
    }
  }

  result.best_epoch = stopper.best_epoch();
  result.best_parameters = best;
  result.last_parameters = head_parameters(clf);
  if (cfg.restore_best) {
    set_head_parameters(clf, best);
  }
  return result;
}

std::pair<double, double> class_weights_from_manifest(const DatasetManifest& manifest) {
  const auto [neg, pos] = manifest.class_counts(Split::train);
  if (neg == 0 || pos == 0) {
    throw ValueError("class weighting needs both classes in the train split (got " +
                     std::to_string(pos) + " positive / " + std::to_string(neg) +
                     " negative); consider re-sampling instead");
  }
  const double total = static_cast<double>(neg + pos);
  return {total / (2.0 * static_cast<double>(neg)),
          total / (2.0 * static_cast<double>(pos))};
}

DatasetManifest oversample(const DatasetManifest& manifest, uint64_t seed) {
  std::vector<size_t> neg_idx, pos_idx;
  for (size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split != Split::train) continue;
    (r.label == 1 ? pos_idx : neg_idx).push_back(i);
  }
  if (neg_idx.empty() || pos_idx.empty()) {
    throw ValueError("oversample needs both classes in the train split");
  }
  DatasetManifest out = manifest;
  const bool pos_minority = pos_idx.size() < neg_idx.size();
  const auto& minority = pos_minority ? pos_idx : neg_idx;
  const size_t deficit = (pos_minority ? neg_idx.size() : pos_idx.size()) - minority.size();

  Rng rng(seed);
  for (size_t k = 0; k < deficit; ++k) {
    SampleRecord dup = manifest.records[minority[rng.index(minority.size())]];
    dup.sample_id += "#dup" + std::to_string(k + 1);
    out.records.push_back(std::move(dup));
  }
  return out;
}

void write_history_csv(const std::filesystem::path& path,
                       const std::vector<EpochStats>& history, bool with_timestamps) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,train_acc,val_loss,val_acc,elapsed_s\n";
  char buf[160];
  for (const auto& e : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.9f,%.6f,%.9f,%.6f,%.3f\n", e.epoch,
                  e.train_loss, e.train_accuracy, e.val_loss, e.val_accuracy,
                  with_timestamps ? e.elapsed_seconds : 0.0);
    out << buf;
  }
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace asdscreen
