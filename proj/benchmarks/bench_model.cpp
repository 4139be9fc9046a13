#include <benchmark/benchmark.h>

#include <vector>

#include "asdscreen/model.hpp"
#include "asdscreen/random.hpp"
#include "asdscreen/trainer.hpp"

using namespace asdscreen;

namespace {

Classifier bench_classifier(int channels, int hidden) {
  BackboneSpec spec = BackboneSpec::for_name(BackboneName::stub, channels, 64);
  HeadConfig head;
  head.hidden_units = hidden;
  return build_classifier(spec, head, 1);
}

Eigen::MatrixXd bench_features(int batch, int channels) {
  Rng rng(3);
  Eigen::MatrixXd f(batch, channels);
  for (int i = 0; i < batch; ++i) {
    for (int j = 0; j < channels; ++j) f(i, j) = rng.uniform(-1, 1);
  }
  return f;
}

}  // namespace

static void BM_ExtractFeatures(benchmark::State& state) {
  const Classifier clf = bench_classifier(64, 512);
  Rng rng(5);
  ImageTensor img = ImageTensor::filled(64, 64, 0.0);
  for (double& v : img.data) v = rng.uniform();
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_features(clf, img));
  }
}
BENCHMARK(BM_ExtractFeatures);

static void BM_HeadForward(benchmark::State& state) {
  const Classifier clf = bench_classifier(64, 512);
  const Eigen::MatrixXd f = bench_features(32, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(head_forward(clf, f, false));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_HeadForward);

static void BM_TrainStep(benchmark::State& state) {
  Classifier clf = bench_classifier(64, 512);
  AdagradState opt = AdagradState::zeros_like(clf);
  const Eigen::MatrixXd f = bench_features(32, 64);
  std::vector<int> labels(32);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2;
  uint64_t seed = 0;
  for (auto _ : state) {
    const HeadBackward back = head_backward(clf, f, labels, {}, seed++);
    adagrad_step(clf, back.grads, opt, 0.001, 1e-7);
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_TrainStep);

BENCHMARK_MAIN();
