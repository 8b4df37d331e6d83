#include <numeric>
#include <vector>

#include <benchmark/benchmark.h>

#include "ltcil/data.hpp"
#include "ltcil/matrix.hpp"
#include "ltcil/memory.hpp"
#include "ltcil/model.hpp"
#include "ltcil/rng.hpp"
#include "ltcil/training.hpp"

using namespace ltcil;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

void BM_matmul(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  Matrix a = random_matrix(n, n, 1);
  Matrix b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * n * n * n);
}
BENCHMARK(BM_matmul)->Arg(32)->Arg(64)->Arg(128);

void BM_softmax_rows(benchmark::State& state) {
  Matrix z = random_matrix(static_cast<std::size_t>(state.range(0)), 100, 3);
  for (auto _ : state) benchmark::DoNotOptimize(softmax_rows(z));
}
BENCHMARK(BM_softmax_rows)->Arg(32)->Arg(256);

void BM_herding(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<int> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  Matrix feats = random_matrix(n, 32, 4);
  for (auto _ : state)
    benchmark::DoNotOptimize(select_herding(pool, feats, n / 10));
}
BENCHMARK(BM_herding)->Arg(200)->Arg(1000);

void BM_forward_backward(benchmark::State& state) {
  IncrementalModel model({16, 32}, HeadKind::Linear, 5);
  model.add_task_head(10, 6);
  model.add_task_head(10, 7);
  Matrix x = random_matrix(32, 16, 8);
  std::vector<int> labels(32);
  Rng rng(9);
  for (int& y : labels) y = static_cast<int>(rng.index(20));
  for (auto _ : state) {
    ModelCache cache;
    Matrix logits = model.forward_train(x, false, cache);
    LossGrad ce = cross_entropy(logits, labels);
    model.params().zero_grads();
    model.backward(ce.grad, cache);
    benchmark::DoNotOptimize(ce.value);
  }
}
BENCHMARK(BM_forward_backward);

void BM_stage1_epoch(benchmark::State& state) {
  Dataset train = generate_synthetic(10, 100, 16, 0.5, 11);
  IncrementalModel model({16, 32}, HeadKind::Linear, 12);
  model.add_task_head(10, 13);
  ClassLayout layout;
  layout.extend({0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, 10);
  ExemplarMemory mem(BudgetMode::FixedPerClass, 10, SelectionKind::Herding, 14);
  std::vector<int> idx(train.size());
  std::iota(idx.begin(), idx.end(), 0);
  TrainConfig cfg;
  cfg.epochs_stage1 = 1;
  cfg.milestones = {};
  for (auto _ : state)
    benchmark::DoNotOptimize(
        train_stage1(model, train, idx, mem, nullptr, cfg, AuxKind::None, layout));
}
BENCHMARK(BM_stage1_epoch);

}  // namespace

BENCHMARK_MAIN();
