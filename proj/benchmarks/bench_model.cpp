#include <benchmark/benchmark.h>

#include "slicevol/autodiff/ops.hpp"
#include "slicevol/heads/losses.hpp"
#include "slicevol/model.hpp"
#include "slicevol/random.hpp"

namespace {

using namespace slicevol;

data::MaskVolume noise_volume(const ModelConfig& cfg, std::size_t slices, std::uint64_t seed) {
  Rng rng(seed);
  data::MaskVolume v;
  v.patient_id = "B";
  v.height = v.width = cfg.encoder.image_size;
  v.slices = slices;
  v.voxels.resize(v.height * v.width * slices);
  for (float& x : v.voxels) x = static_cast<float>(uniform01(rng));
  return v;
}

void BM_FrozenPrefix(benchmark::State& state) {
  const ModelConfig cfg;
  const ModelParams p = init_model(cfg, 0);
  const auto slices = data::slice_tensors(noise_volume(cfg, state.range(0), 1));
  for (auto _ : state) benchmark::DoNotOptimize(compute_prefix(p, cfg, slices));
}
BENCHMARK(BM_FrozenPrefix)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ForwardFromPrefix(benchmark::State& state) {
  const ModelConfig cfg;
  const ModelParams p = init_model(cfg, 0);
  const ad::Tensor prefix = compute_prefix(p, cfg, data::slice_tensors(noise_volume(cfg, state.range(0), 1)));
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(forward_from_prefix(p, cfg, prefix, false, rng));
}
BENCHMARK(BM_ForwardFromPrefix)->Arg(16)->Arg(32)->Unit(benchmark::kMicrosecond);

// One volume pair through the multi-loss and back.
void BM_ForwardBackward(benchmark::State& state) {
  const ModelConfig cfg;
  const ModelParams p = init_model(cfg, 0);
  const ad::Tensor pa = compute_prefix(p, cfg, data::slice_tensors(noise_volume(cfg, 16, 1)));
  const ad::Tensor pb = compute_prefix(p, cfg, data::slice_tensors(noise_volume(cfg, 16, 2)));
  Rng rng(3);
  for (auto _ : state) {
    const ModelOutput a = forward_from_prefix(p, cfg, pa, true, rng);
    const ModelOutput b = forward_from_prefix(p, cfg, pb, true, rng);
    const ad::Tensor loss = heads::multi_loss(a.logits, 1, a.projection, b.projection, 0, 0.3, 1.0);
    benchmark::DoNotOptimize(ad::backward(loss));
  }
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMicrosecond);

void BM_Linear(benchmark::State& state) {
  const std::size_t n = state.range(0), d = 32;
  Rng rng(4);
  std::vector<double> xv(n * d), wv(4 * d * d);
  for (double& v : xv) v = standard_normal(rng);
  for (double& v : wv) v = standard_normal(rng);
  const ad::Tensor x({n, d}, xv), w({4 * d, d}, wv, true), b = ad::Tensor::zeros({4 * d}, true);
  for (auto _ : state) benchmark::DoNotOptimize(ad::linear(x, w, b));
}
BENCHMARK(BM_Linear)->Arg(17)->Arg(272)->Unit(benchmark::kMicrosecond);

}  // namespace
