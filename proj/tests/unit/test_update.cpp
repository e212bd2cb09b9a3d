#include <doctest.h>

#include "fixtures.hpp"
#include "priu/baselines.hpp"
#include "priu/capture.hpp"
#include "priu/error.hpp"
#include "priu/ingest.hpp"
#include "priu/metrics.hpp"
#include "priu/update.hpp"

using namespace priu;

namespace {

TrainedCache capture_of(const TrainingDataset& ds, const Hyperparams& hp, CaptureOptions opts = {}) {
  return train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), InterpolationTable(), opts);
}

}  // namespace

TEST_CASE("linear updates match retraining to rounding") {
  auto ds = fixtures::linear(400, 6);
  Hyperparams hp = fixtures::params(ds, 40, 150);
  auto tc = capture_of(ds, hp);
  for (double rate : {0.005, 0.05, 0.3}) {
    DeletionRequest r(sample_rate(ds.rows(), rate, 3), ds.rows());
    auto inc = priu_linear(ds, tc.cache, r);
    auto ref = retrain(ds, hp, tc.cache.schedule(), r);
    CHECK(max_relative_difference(inc.params.w, ref.params.w) <= 1e-9);
    CHECK(inc.report.removed == r.size());
    CHECK(inc.report.method == "priu");
    CHECK(inc.params.iteration == hp.iterations);
  }
  auto none = priu_linear(ds, tc.cache, DeletionRequest::none(ds.rows()));
  CHECK(max_relative_difference(none.params.w, tc.cache.final_w) <= 1e-9);
}

TEST_CASE("linear SVD caches approach the full result as epsilon shrinks") {
  auto ds = fixtures::linear(300, 40);
  Hyperparams hp = fixtures::params(ds, 30, 100);
  auto full = capture_of(ds, hp);
  DeletionRequest r(sample_rate(ds.rows(), 0.1, 5), ds.rows());
  Vector exact = priu_update(ds, full.cache, r).params.w;
  double previous = 1e300;
  for (double eps : {0.5, 0.1, 0.0}) {
    CaptureOptions o;
    o.mode = CacheMode::kDenseSvd;
    o.epsilon = eps;
    auto svd = capture_of(ds, hp, o);
    double dev = l2_dist(priu_update(ds, svd.cache, r).params.w, exact);
    CHECK(dev <= previous * (1 + 1e-9));
    previous = dev;
  }
  CHECK(previous <= 1e-8 * exact.norm());
}

TEST_CASE("logistic updates equal the linearized replay over survivors") {
  for (auto ds : {fixtures::binary(300, 5), fixtures::multinomial(300, 4, 3)}) {
    CAPTURE(to_string(ds.kind()));
    Hyperparams hp = fixtures::params(ds, 30, 120);
    auto tc = capture_of(ds, hp);
    DeletionRequest r(sample_rate(ds.rows(), 0.1, 9), ds.rows());
    Vector inc = priu_logistic(ds, tc.cache, r).params.w;
    Vector replay = linearized_replay(ds, hp, tc.cache.schedule(), tc.cache.coeffs, tc.cache.table(),
                                      tc.cache.w0, &r);
    CHECK(l2_dist(inc, replay) <= 1e-9 * std::max(1.0, replay.norm()));
    Vector exact = retrain(ds, hp, tc.cache.schedule(), r).params.w;
    CHECK(cosine_sim(inc, exact) > 0.99);
  }
}

TEST_CASE("sparse updates agree with the dense path on the same data") {
  auto sp = fixtures::sparse_binary(300, 40);
  auto dn = sp.to_dense();
  Hyperparams hp = fixtures::params(sp, 30, 100);
  CaptureOptions so;
  so.mode = CacheMode::kSparseLinearized;
  auto sparse_cache = capture_of(sp, hp, so);
  auto dense_cache = capture_of(dn, hp);
  DeletionRequest r(sample_rate(sp.rows(), 0.05, 2), sp.rows());
  Vector a = priu_sparse_logistic(sp, sparse_cache.cache, r).params.w;
  Vector b = priu_logistic(dn, dense_cache.cache, r).params.w;
  CHECK(l2_dist(a, b) <= 1e-9 * std::max(1.0, b.norm()));
  CHECK(l2_dist(priu_update(sp, sparse_cache.cache, r).params.w, a) == 0.0);
}

TEST_CASE("early-stopped updates return intermediate iterates") {
  auto ds = fixtures::linear(100, 3);
  Hyperparams hp = fixtures::params(ds, 10, 40);
  auto tc = capture_of(ds, hp);
  auto none = DeletionRequest::none(ds.rows());
  TrainOptions opts;
  auto run = train(ds, hp, tc.cache.schedule(), opts);
  auto mid = priu_update(ds, tc.cache, none, 17);
  CHECK(mid.params.iteration == 17);
  CHECK(max_relative_difference(mid.params.w, run.at(17)) <= 1e-9);
  CHECK_THROWS_AS(priu_update(ds, tc.cache, none, 41), Error);
}

TEST_CASE("updates reject mismatched inputs") {
  auto ds = fixtures::binary(100, 3);
  Hyperparams hp = fixtures::params(ds, 10, 20);
  auto tc = capture_of(ds, hp);
  auto code = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kConfig;
  };
  CHECK(code([&] { priu_logistic(ds, tc.cache, DeletionRequest({1}, 99)); }) == ErrorCode::kMismatch);
  auto other = fixtures::binary(100, 3, 7);
  CHECK(code([&] { priu_logistic(other, tc.cache, DeletionRequest({1}, 100)); }) == ErrorCode::kFingerprint);
  CHECK(code([&] { priu_linear(ds, tc.cache, DeletionRequest({1}, 100)); }) == ErrorCode::kMismatch);
  ProvenanceCache broken = tc.cache;
  broken.entries.pop_back();
  CHECK(code([&] { priu_logistic(ds, broken, DeletionRequest({1}, 100)); }) == ErrorCode::kCacheCorrupt);
}
