#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "groupdir/contrastive.hpp"
#include "groupdir/grouping.hpp"
#include "groupdir/matrix.hpp"
#include "groupdir/model.hpp"
#include "groupdir/rng.hpp"
#include "groupdir/softlabel.hpp"
#include "groupdir/training.hpp"

namespace {

using namespace groupdir;

Matrix random_matrix(rng::Engine& eng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng::uniform(eng, -1.0, 1.0);
  return m;
}

std::vector<int> random_groups(rng::Engine& eng, std::size_t n, int num_groups) {
  std::vector<int> groups(n);
  for (auto& g : groups) {
    g = static_cast<int>(rng::below(eng, static_cast<std::uint64_t>(num_groups)));
  }
  return groups;
}

void bm_grc_forward(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  rng::Engine eng(7);
  const Matrix z = random_matrix(eng, b, 16);
  const auto groups = random_groups(eng, b, 20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grc_eval(z, groups, 2.5, nullptr));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_grc_forward)->RangeMultiplier(4)->Range(8, 512)->Complexity();

void bm_grc_backward(benchmark::State& state) {
  const auto b = static_cast<std::size_t>(state.range(0));
  rng::Engine eng(7);
  const Matrix z = random_matrix(eng, b, 16);
  const auto groups = random_groups(eng, b, 20);
  Matrix grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grc_eval(z, groups, 2.5, &grad));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(bm_grc_backward)->RangeMultiplier(4)->Range(8, 512)->Complexity();

void bm_encode_backward(benchmark::State& state) {
  rng::Engine eng(11);
  const std::vector<int> hidden = {64, 64};
  const auto params = init_params(1, 16, hidden, 16, 20);
  const Matrix x = random_matrix(eng, 64, 16);
  const auto route = random_groups(eng, 64, 20);
  UpstreamGrads upstream;
  upstream.d_embeddings = random_matrix(eng, 64, 16);
  upstream.d_logits = random_matrix(eng, 64, 20);
  upstream.d_expert_out.assign(64, 0.5);
  upstream.expert_route = route;
  for (auto _ : state) {
    ForwardCache cache;
    benchmark::DoNotOptimize(encode(params, x, &cache));
    ModelParams grads = zeros_like(params);
    benchmark::DoNotOptimize(backward(params, cache, upstream, grads));
  }
}
BENCHMARK(bm_encode_backward);

void bm_soft_ce_loss(benchmark::State& state) {
  const auto num_groups = static_cast<int>(state.range(0));
  rng::Engine eng(13);
  const auto codec = make_codec(num_groups, 1.0);
  std::vector<double> logits(num_groups);
  for (auto& v : logits) v = rng::uniform(eng, -3.0, 3.0);
  const auto target = soft_target(codec, num_groups / 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(soft_ce_loss(logits, target));
  }
}
BENCHMARK(bm_soft_ce_loss)->Arg(10)->Arg(20)->Arg(50);

void bm_final_loss_step(benchmark::State& state) {
  rng::Engine eng(17);
  const std::vector<int> hidden = {64, 64};
  auto params = init_params(1, 16, hidden, 16, 20);
  TrainConfig config;
  const auto scheme = make_grouping(0.0, 100.0, 20);

  Batch batch;
  batch.x = random_matrix(eng, 64, 16);
  batch.y.resize(64);
  batch.groups.resize(64);
  for (std::size_t i = 0; i < 64; ++i) {
    batch.y[i] = rng::uniform(eng, 0.0, 100.0);
    batch.groups[i] = group_of(scheme, batch.y[i]);
  }
  batch.weights.assign(64, 1.0);
  const std::vector<double> prior(20, 0.05);

  auto adam = make_adam_state(params);
  for (auto _ : state) {
    ModelParams grads = zeros_like(params);
    benchmark::DoNotOptimize(final_loss(params, batch, config, prior, &grads));
    adam_step(adam, params, grads, config);
  }
}
BENCHMARK(bm_final_loss_step);

}  // namespace

BENCHMARK_MAIN();
