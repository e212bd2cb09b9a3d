#include <doctest.h>

#include "fixtures.hpp"
#include "priu/baselines.hpp"
#include "priu/capture.hpp"
#include "priu/error.hpp"
#include "priu/ingest.hpp"
#include "priu/metrics.hpp"
#include "priu/opt.hpp"

using namespace priu;

TEST_CASE("diagonal recurrence equals the naive loop") {
  Vector rho = fixtures::random_vector(5, 1, 0.3).array() + 0.5;
  Vector b = fixtures::random_vector(5, 2);
  Vector u0 = fixtures::random_vector(5, 3);
  for (Index steps : {0u, 1u, 7u, 100u}) {
    Vector u = u0;
    for (Index s = 0; s < steps; ++s) u = rho.cwiseProduct(u) + b;
    CHECK((diagonal_recurrence(rho, b, u0, steps) - u).norm() <= 1e-12 * std::max(1.0, u.norm()));
  }
  Vector one = Vector::Ones(5);
  Vector u = u0;
  for (int s = 0; s < 9; ++s) u = u + b;
  CHECK((diagonal_recurrence(one, b, u0, 9) - u).norm() < 1e-12);
}

TEST_CASE("linear eigen cache reconstructs the Gram matrix") {
  auto ds = fixtures::linear(200, 6);
  auto ec = build_eigen_cache(ds);
  const RowMatrix& X = ds.dense_features();
  Matrix M = X.transpose() * X;
  CHECK((ec.Q * ec.c.asDiagonal() * ec.Q.transpose() - M).norm() / M.norm() <= 1e-8);
  CHECK(ec.reconstruction_error <= 1e-8);
  CHECK((ec.moment - X.transpose() * ds.labels()).norm() < 1e-9);
}

TEST_CASE("refreshed eigenvalues subtract the removed rows") {
  auto ds = fixtures::linear(100, 4);
  auto ec = build_eigen_cache(ds);
  DeletionRequest r({3, 17, 40}, ds.rows());
  Vector c = refreshed_eigenvalues(ds, ec, r);
  Matrix dM = Matrix::Zero(4, 4);
  for (Index i : r.removed()) dM += ds.row(i) * ds.row(i).transpose();
  Vector expect = ec.c - (ec.Q.transpose() * dM * ec.Q).diagonal();
  CHECK((c - expect).norm() < 1e-10);
}

TEST_CASE("orthogonal removals make the eigen path exact") {
  // Two copies of a row along an eigenvector leave the eigenvectors unchanged.
  auto base = fixtures::linear(120, 4);
  auto ec0 = build_eigen_cache(base);
  RowMatrix X(base.rows() + 2, 4);
  X.topRows(base.rows()) = base.dense_features();
  X.row(base.rows()) = 0.8 * ec0.Q.col(1).transpose();
  X.row(base.rows() + 1) = -0.5 * ec0.Q.col(1).transpose();
  Vector y(base.rows() + 2);
  y << base.labels(), 0.0, 0.0;
  auto ds = TrainingDataset::dense(X, y, ModelKind::kLinear);
  Hyperparams hp = fixtures::params(ds, ds.rows(), 200);
  auto ec = build_eigen_cache(ds);
  DeletionRequest r({base.rows(), base.rows() + 1}, ds.rows());
  auto opt = opt_linear(ds, ec, hp, r);
  auto exact = retrain_gd(ds, hp, r);
  CHECK(opt.report.gd_semantics);
  CHECK(l2_dist(opt.params.w, exact.params.w) <= 1e-8);
}

TEST_CASE("eigen path deviation grows with the removed Gram norm") {
  auto ds = fixtures::linear(400, 5);
  Hyperparams hp = fixtures::params(ds, ds.rows(), 150);
  auto ec = build_eigen_cache(ds);
  DeletionRequest none = DeletionRequest::none(ds.rows());
  CHECK(l2_dist(opt_linear(ds, ec, hp, none).params.w, retrain_gd(ds, hp, none).params.w) < 1e-9);
  DeletionRequest small(sample_rows(ds.rows(), 2, 1), ds.rows());
  DeletionRequest large(sample_rows(ds.rows(), 80, 1), ds.rows());
  double d_small = l2_dist(opt_linear(ds, ec, hp, small).params.w, retrain_gd(ds, hp, small).params.w);
  double d_large = l2_dist(opt_linear(ds, ec, hp, large).params.w, retrain_gd(ds, hp, large).params.w);
  CHECK(d_small < d_large);
}

TEST_CASE("logistic eigen path follows the cache up to the early-stop point") {
  auto ds = fixtures::binary(300, 5);
  Hyperparams hp = fixtures::params(ds, 30, 100);
  CaptureOptions o;
  o.t_s = 70;
  auto tc = train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), InterpolationTable(), o);
  auto ec = build_eigen_cache(ds, tc.cache);
  CHECK(ec.t_s == 70);
  CHECK(ec.reconstruction_error <= 1e-8);
  DeletionRequest r(sample_rate(ds.rows(), 0.05, 4), ds.rows());
  auto opt = opt_logistic(ds, tc.cache, ec, r);
  auto exact = retrain(ds, hp, tc.cache.schedule(), r);
  CHECK(cosine_sim(opt.params.w, exact.params.w) > 0.99);

  o.t_s = 100;
  auto at_end = train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), InterpolationTable(), o);
  auto ec_end = build_eigen_cache(ds, at_end.cache);
  auto same = opt_logistic(ds, at_end.cache, ec_end, r);
  CHECK(l2_dist(same.params.w, priu_update(ds, at_end.cache, r).params.w) < 1e-12);

  auto multi = fixtures::multinomial(300, 3, 3);
  Hyperparams mhp = fixtures::params(multi, 30, 80);
  o.t_s = 56;
  auto mtc = train_and_capture(multi, mhp, BatchSchedule::build(multi.rows(), mhp), InterpolationTable(), o);
  auto mec = build_eigen_cache(multi, mtc.cache);
  DeletionRequest mr(sample_rate(multi.rows(), 0.05, 4), multi.rows());
  auto mopt = opt_logistic(multi, mtc.cache, mec, mr);
  CHECK(cosine_sim(mopt.params.w, retrain(multi, mhp, mtc.cache.schedule(), mr).params.w) > 0.99);
}

TEST_CASE("logistic eigen path needs an early-stop snapshot") {
  auto ds = fixtures::binary(100, 3);
  Hyperparams hp = fixtures::params(ds, 10, 20);
  auto tc = train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), InterpolationTable(), {});
  CHECK_THROWS_AS(build_eigen_cache(ds, tc.cache), Error);
}
