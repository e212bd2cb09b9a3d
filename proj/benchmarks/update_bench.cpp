// Update time of the incremental methods against full retraining.

#include <benchmark/benchmark.h>

#include <map>
#include <utility>

#include "priu/baselines.hpp"
#include "priu/capture.hpp"
#include "priu/ingest.hpp"
#include "priu/opt.hpp"
#include "priu/synthetic.hpp"
#include "priu/trainer.hpp"
#include "priu/update.hpp"

using namespace priu;

namespace {

struct Fixture {
  TrainingDataset ds;
  Hyperparams hp;
  ProvenanceCache cache;
  EigenCache eigen;
  DeletionRequest request;
};

// Built once per (model, deletion rate in thousandths).
const Fixture& fixture(ModelKind kind, int rate_permille) {
  static std::map<std::pair<ModelKind, int>, Fixture> cache;
  auto key = std::make_pair(kind, rate_permille);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  SyntheticOptions so;
  so.n = 10000;
  so.m = 50;
  so.seed = 21;
  so.margin = 0.1;
  auto ds = kind == ModelKind::kLinear ? make_linear(so) : make_binary(so);
  Hyperparams hp;
  hp.kind = kind;
  hp.batch_size = 500;
  hp.iterations = 500;
  hp.lambda = 0.01;
  hp.eta = default_learning_rate(ds, hp);
  CaptureOptions co;
  if (kind != ModelKind::kLinear) co.t_s = default_early_stop(hp.iterations);
  auto tc = train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), InterpolationTable(), co);
  auto eigen = kind == ModelKind::kLinear ? build_eigen_cache(ds) : build_eigen_cache(ds, tc.cache);
  DeletionRequest request(sample_rate(ds.rows(), rate_permille / 1000.0, 5), ds.rows());
  return cache.emplace(key, Fixture{std::move(ds), hp, std::move(tc.cache), std::move(eigen), std::move(request)})
      .first->second;
}

ModelKind kind_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ModelKind::kLinear : ModelKind::kBinaryLogistic;
}

void BM_Retrain(benchmark::State& state) {
  const auto& f = fixture(kind_of(state), static_cast<int>(state.range(1)));
  for (auto _ : state)
    benchmark::DoNotOptimize(retrain(f.ds, f.hp, f.cache.schedule(), f.request, f.cache.w0).params.w.data());
}

void BM_Priu(benchmark::State& state) {
  const auto& f = fixture(kind_of(state), static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(priu_update(f.ds, f.cache, f.request).params.w.data());
}

void BM_PriuOpt(benchmark::State& state) {
  const auto& f = fixture(kind_of(state), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto r = kind_of(state) == ModelKind::kLinear ? opt_linear(f.ds, f.eigen, f.hp, f.request, f.cache.w0)
                                                  : opt_logistic(f.ds, f.cache, f.eigen, f.request);
    benchmark::DoNotOptimize(r.params.w.data());
  }
}

// Arguments: model (0 linear, 1 binary logistic), deletion rate in thousandths.
void rates(benchmark::internal::Benchmark* b) {
  for (int model : {0, 1})
    for (int permille : {1, 10, 100}) b->Args({model, permille});
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(BM_Retrain)->Apply(rates);
BENCHMARK(BM_Priu)->Apply(rates);
BENCHMARK(BM_PriuOpt)->Apply(rates);

BENCHMARK_MAIN();
