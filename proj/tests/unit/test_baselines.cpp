#include <doctest.h>

#include "fixtures.hpp"
#include "priu/baselines.hpp"
#include "priu/error.hpp"
#include "priu/ingest.hpp"
#include "priu/metrics.hpp"

using namespace priu;

TEST_CASE("retrain equals training on the surviving rows with full batches") {
  auto ds = fixtures::linear(100, 3);
  DeletionRequest r({2, 50, 77}, ds.rows());
  Hyperparams hp = fixtures::params(ds, ds.rows(), 60);
  auto gd = retrain_gd(ds, hp, r);
  CHECK(gd.report.gd_semantics);
  auto rest = ds.without(r.removed());
  Hyperparams rest_hp = hp;
  rest_hp.batch_size = rest.rows();
  auto run = train(rest, rest_hp, BatchSchedule::build(rest.rows(), rest_hp));
  CHECK(l2_dist(gd.params.w, run.final.w) < 1e-12);

  Hyperparams sgd = fixtures::params(ds, 10, 60);
  auto schedule = BatchSchedule::build(ds.rows(), sgd);
  auto basel = retrain(ds, sgd, schedule, r);
  CHECK(basel.report.method == "basel");
  CHECK(basel.params.w == train_excluding(ds, sgd, schedule, r));
}

TEST_CASE("closed form is the limit of gradient descent") {
  auto ds = fixtures::linear(150, 4);
  DeletionRequest r(sample_rate(ds.rows(), 0.1, 1), ds.rows());
  Hyperparams hp = fixtures::params(ds, ds.rows(), 5000, 0.05);
  auto exact = closed_form_linear(ds, hp.lambda, r);
  auto gd = retrain_gd(ds, hp, r);
  CHECK(l2_dist(exact.w, gd.params.w) <= 1e-8 * std::max(1.0, exact.w.norm()));
  auto logistic = fixtures::binary(50, 3);
  CHECK_THROWS_AS(closed_form_linear(logistic, 0.01, DeletionRequest::none(50)), Error);
}

TEST_CASE("objective Hessian matches finite differences of the gradient") {
  for (auto ds : {fixtures::linear(40, 3), fixtures::binary(40, 3), fixtures::multinomial(40, 3, 3)}) {
    CAPTURE(to_string(ds.kind()));
    Hyperparams hp = fixtures::params(ds, ds.rows(), 1, 0.1);
    Vector w = fixtures::random_vector(ds.param_dim(), 5, 0.4);
    Matrix H = objective_hessian(ds, hp.lambda, w);
    std::vector<Index> rows(ds.rows());
    for (Index i = 0; i < ds.rows(); ++i) rows[i] = i;
    Matrix fd(w.size(), w.size());
    for (Eigen::Index k = 0; k < w.size(); ++k) {
      Vector up = w, down = w;
      up[k] += 1e-6;
      down[k] -= 1e-6;
      fd.col(k) = (gradient(ds, hp, up, rows) - gradient(ds, hp, down, rows)) / 2e-6;
    }
    CHECK((H - fd).norm() <= 1e-5 * H.norm());
  }
}

TEST_CASE("influence estimate is close for a small linear deletion") {
  auto ds = fixtures::linear(500, 4);
  Hyperparams hp = fixtures::params(ds, ds.rows(), 3000, 0.05);
  auto run = train(ds, hp, BatchSchedule::build(ds.rows(), hp));
  DeletionRequest r({7}, ds.rows());
  auto infl = infl_update(ds, hp, run.final, r);
  auto exact = closed_form_linear(ds, hp.lambda, r);
  CHECK(infl.report.method == "infl");
  // A Newton step from the full optimum is exact up to the 1/(n - 1) reweighting.
  CHECK(l2_dist(infl.params.w, exact.w) < 1e-3 * exact.w.norm());
  CHECK(l2_dist(infl.params.w, run.final.w) > 0);
}
