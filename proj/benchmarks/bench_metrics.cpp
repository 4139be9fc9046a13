#include <benchmark/benchmark.h>

#include <vector>

#include "asdscreen/metrics.hpp"
#include "asdscreen/random.hpp"

using namespace asdscreen;

namespace {

void make_scores(size_t n, std::vector<double>& scores, std::vector<int>& labels) {
  Rng rng(42);
  scores.resize(n);
  labels.resize(n);
  for (size_t i = 0; i < n; ++i) {
    scores[i] = rng.uniform();
    labels[i] = rng.uniform() < 0.5 ? 1 : 0;
  }
  labels[0] = 1;
  labels[1] = 0;
}

}  // namespace

static void BM_Auc(benchmark::State& state) {
  std::vector<double> scores;
  std::vector<int> labels;
  make_scores(static_cast<size_t>(state.range(0)), scores, labels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(auc(scores, labels));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(10000)->Arg(100000);

static void BM_RocCurve(benchmark::State& state) {
  std::vector<double> scores;
  std::vector<int> labels;
  make_scores(static_cast<size_t>(state.range(0)), scores, labels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(roc_curve(scores, labels).area());
  }
}
BENCHMARK(BM_RocCurve)->Arg(1000)->Arg(10000);

static void BM_Confusion(benchmark::State& state) {
  std::vector<double> scores;
  std::vector<int> labels;
  make_scores(static_cast<size_t>(state.range(0)), scores, labels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(confusion(scores, labels, 0.5));
  }
}
BENCHMARK(BM_Confusion)->Arg(10000);

BENCHMARK_MAIN();
