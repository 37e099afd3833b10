#include <benchmark/benchmark.h>

#include "kernelcount/baseline/hog.hpp"
#include "kernelcount/data/synthetic.hpp"
#include "kernelcount/detect/detector.hpp"
#include "kernelcount/models/models.hpp"
#include "kernelcount/nn/layers.hpp"
#include "kernelcount/util/random.hpp"

using namespace kc;

namespace {

nn::Tensor<float> random_batch(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  nn::Tensor<float> t({n, 32, 32, 3});
  for (auto& v : t.values()) v = static_cast<float>(rng.uniform());
  return t;
}

models::Net classifier_with_stats() {
  auto net = models::build_classifier(1);
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (net.layer(i).kind() == nn::LayerKind::batchnorm) static_cast<nn::BatchNorm<float>&>(net.layer(i)).mark_statistics();
  }
  return net;
}

void BM_ClassifierInfer(benchmark::State& state) {
  const auto net = classifier_with_stats();
  const auto batch = random_batch(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(net.infer(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ClassifierInfer)->Arg(1)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ClassifierTrainStep(benchmark::State& state) {
  auto net = models::build_classifier(1);
  const auto batch = random_batch(128, 3);
  nn::Tensor<float> grad({128, 1}, 1.0f / 128);
  for (auto _ : state) {
    net.zero_grad();
    net.forward(batch, nn::Mode::train);
    net.backward(grad);
  }
}
BENCHMARK(BM_ClassifierTrainStep)->Unit(benchmark::kMillisecond);

void BM_Scan(benchmark::State& state) {
  const auto net = classifier_with_stats();
  SyntheticEarParams p;
  p.width = static_cast<int>(state.range(0));
  p.height = static_cast<int>(state.range(1));
  p.rows = 8;
  p.cols = 5;
  const auto ear = generate_synthetic_ear(p, 4);
  detect::ScanConfig cfg;
  cfg.shared_strips = state.range(2) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(detect::sliding_window_scan(ear.image, net, cfg));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(detect::scan_window_count(p.width, p.height, cfg)));
}
BENCHMARK(BM_Scan)->Args({320, 400, 1})->Args({320, 400, 0})->Unit(benchmark::kMillisecond);

void BM_Nms(benchmark::State& state) {
  Rng rng(5);
  std::vector<detect::Detection> d(static_cast<std::size_t>(state.range(0)));
  for (auto& x : d) {
    x.window = {static_cast<int>(rng.below(1000)), static_cast<int>(rng.below(740)), 22, 32};
    x.confidence = static_cast<float>(rng.uniform(0.5, 1.0));
  }
  for (auto _ : state) benchmark::DoNotOptimize(detect::nms(d, 0.3));
}
BENCHMARK(BM_Nms)->Arg(500)->Arg(2000);

void BM_Hog(benchmark::State& state) {
  const auto batch = random_batch(1, 6);
  const Patch p = batch.reshaped({32, 32, 3});
  for (auto _ : state) benchmark::DoNotOptimize(baseline::hog_features(p));
}
BENCHMARK(BM_Hog);

}  // namespace
BENCHMARK_MAIN();
