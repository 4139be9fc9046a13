#include <benchmark/benchmark.h>

#include "asdscreen/random.hpp"
#include "asdscreen/transforms.hpp"

using namespace asdscreen;

namespace {

ImageTensor bench_image(int side) {
  Rng rng(7);
  ImageTensor img = ImageTensor::filled(side, side, 0.0);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

}  // namespace

static void BM_Resize(benchmark::State& state) {
  const ImageTensor img = bench_image(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(resize(img, 224));
  }
}
BENCHMARK(BM_Resize)->Arg(299)->Arg(512);

static void BM_Rotate(benchmark::State& state) {
  const ImageTensor img = bench_image(224);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rotate_image(img, 15.0));
  }
}
BENCHMARK(BM_Rotate);

static void BM_AugmentPlan(benchmark::State& state) {
  const ImageTensor img = bench_image(224);
  const auto specs = default_augmentations();
  for (auto _ : state) {
    for (const auto& spec : specs) {
      benchmark::DoNotOptimize(augment(img, spec));
    }
  }
  state.SetItemsProcessed(state.iterations() * specs.size());
}
BENCHMARK(BM_AugmentPlan);

BENCHMARK_MAIN();
