#include "priu/trainer.hpp"

#include <cmath>
#include <numbers>

#include "priu/error.hpp"

namespace priu {

double one_minus_sigmoid(double x) {
  // 1 - 1/(1+e^-x) == 1/(1+e^x); exp overflow gives 1/inf = 0.
  return 1.0 / (1.0 + std::exp(x));
}

namespace {

// ln(1 + e^-z), stable for large |z|.
double logistic_loss(double z) {
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

void check_shape(const TrainingDataset& ds, const Vector& w) {
  require(w.size() == ds.param_dim(), ErrorCode::kMismatch,
          "parameter length " + std::to_string(w.size()) + " does not match expected " +
              std::to_string(ds.param_dim()));
}

Vector class_scores(const TrainingDataset& ds, const Vector& w, Index row) {
  const Eigen::Index m = ds.cols();
  Vector z(ds.classes());
  for (int k = 0; k < ds.classes(); ++k) z[k] = ds.row_dot(row, w.data() + k * m);
  return z;
}

Vector softmax(const Vector& z) {
  Vector p = (z.array() - z.maxCoeff()).exp();
  return p / p.sum();
}

// out += scale * grad of the loss of `row` at w.
void add_loss_gradient(const TrainingDataset& ds, const Vector& w, Index row, double scale,
                       Vector& out) {
  switch (ds.kind()) {
    case ModelKind::kLinear: {
      double r = ds.row_dot(row, w.data()) - ds.label(row);
      ds.add_row(row, scale * 2.0 * r, out.data());
      break;
    }
    case ModelKind::kBinaryLogistic: {
      double y = ds.label(row);
      double z = y * ds.row_dot(row, w.data());
      ds.add_row(row, -scale * y * one_minus_sigmoid(z), out.data());
      break;
    }
    case ModelKind::kMultinomialLogistic: {
      Vector p = softmax(class_scores(ds, w, row));
      p[static_cast<Eigen::Index>(ds.label(row))] -= 1.0;
      const Eigen::Index m = ds.cols();
      for (int k = 0; k < ds.classes(); ++k) ds.add_row(row, scale * p[k], out.data() + k * m);
      break;
    }
  }
}

}  // namespace

Vector class_probabilities(const TrainingDataset& ds, const Vector& w, Index row) {
  return softmax(class_scores(ds, w, row));
}

double objective(const TrainingDataset& ds, const Hyperparams& hp, const Vector& w) {
  check_shape(ds, w);
  double total = 0.0;
  for (Index i = 0; i < ds.rows(); ++i) {
    switch (ds.kind()) {
      case ModelKind::kLinear: {
        double r = ds.label(i) - ds.row_dot(i, w.data());
        total += r * r;
        break;
      }
      case ModelKind::kBinaryLogistic:
        total += logistic_loss(ds.label(i) * ds.row_dot(i, w.data()));
        break;
      case ModelKind::kMultinomialLogistic: {
        Vector z = class_scores(ds, w, i);
        double zmax = z.maxCoeff();
        double lse = zmax + std::log((z.array() - zmax).exp().sum());
        total += lse - z[static_cast<Eigen::Index>(ds.label(i))];
        break;
      }
    }
  }
  return total / ds.rows() + 0.5 * hp.lambda * w.squaredNorm();
}

Vector sample_gradient(const TrainingDataset& ds, const Vector& w, Index row) {
  check_shape(ds, w);
  Vector g = Vector::Zero(ds.param_dim());
  add_loss_gradient(ds, w, row, 1.0, g);
  return g;
}

Vector gradient(const TrainingDataset& ds, const Hyperparams& hp, const Vector& w,
                std::span<const Index> batch) {
  check_shape(ds, w);
  require(!batch.empty(), ErrorCode::kConfig, "gradient over an empty batch");
  Vector g = Vector::Zero(ds.param_dim());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (Index row : batch) add_loss_gradient(ds, w, row, scale, g);
  g += hp.lambda * w;
  return g;
}

const Vector& TrainRun::at(Index t) const {
  require(record_stride == 1 && t < trajectory.size(), ErrorCode::kConfig,
          "trajectory does not hold iteration " + std::to_string(t));
  return trajectory[t].w;
}

namespace {

// One pass over the schedule; rows with mask[row] != 0 are skipped.
template <class Observer>
Vector run_iterations(const TrainingDataset& ds, const Hyperparams& hp,
                      const BatchSchedule& schedule, const std::vector<char>* mask, Vector w,
                      Observer&& observe) {
  const double shrink = 1.0 - hp.eta * hp.lambda;
  Vector acc(ds.param_dim());
  for (Index t = 0; t < hp.iterations; ++t) {
    observe(t, w);
    acc.setZero();
    Index kept = 0;
    for (Index row : schedule.batch(t)) {
      if (mask && (*mask)[row]) continue;
      add_loss_gradient(ds, w, row, 1.0, acc);
      ++kept;
    }
    w *= shrink;
    if (kept > 0) w.noalias() -= (hp.eta / kept) * acc;
    if (!w.allFinite())
      fail(ErrorCode::kNumeric, "training diverged at iteration " + std::to_string(t + 1));
  }
  observe(hp.iterations, w);
  return w;
}

void check_schedule(const TrainingDataset& ds, const Hyperparams& hp, const BatchSchedule& schedule) {
  hp.validate(ds.rows());
  require(hp.kind == ds.kind(), ErrorCode::kMismatch, "hyperparameters and dataset disagree on model kind");
  require(schedule.rows() == ds.rows() && schedule.batch_size() == hp.batch_size &&
              schedule.iterations() == hp.iterations && schedule.seed() == hp.seed,
          ErrorCode::kMismatch, "schedule was not built for this dataset and hyperparameters");
}

}  // namespace

TrainRun train(const TrainingDataset& ds, const Hyperparams& hp, const BatchSchedule& schedule,
               const TrainOptions& options) {
  check_schedule(ds, hp, schedule);
  Vector w0 = options.w0 ? *options.w0 : Vector::Zero(ds.param_dim());
  check_shape(ds, w0);

  TrainRun run;
  run.schedule = schedule;
  run.hp = hp;
  run.record_stride = options.record_stride;

  auto record = [&](Index t, const Vector& w) {
    if (options.observer) options.observer(t, w);
    bool keep = t == hp.iterations ||
                (options.record_stride > 0 && t % options.record_stride == 0);
    if (!keep) return;
    run.trajectory.push_back({w, t});
    if (options.trace_objective) run.objective_trace.push_back(objective(ds, hp, w));
  };
  Vector w = run_iterations(ds, hp, schedule, nullptr, std::move(w0), record);
  run.final = {std::move(w), hp.iterations};
  return run;
}

Vector train_excluding(const TrainingDataset& ds, const Hyperparams& hp,
                       const BatchSchedule& schedule, const DeletionRequest& request,
                       const std::optional<Vector>& w0) {
  check_schedule(ds, hp, schedule);
  require(request.n() == ds.rows(), ErrorCode::kMismatch, "deletion request row count mismatch");
  Vector start = w0 ? *w0 : Vector::Zero(ds.param_dim());
  check_shape(ds, start);
  std::vector<char> mask = request.mask();
  return run_iterations(ds, hp, schedule, &mask, std::move(start), [](Index, const Vector&) {});
}

double gram_spectral_norm(const TrainingDataset& ds, double tolerance, int max_steps) {
  const Index m = ds.cols();
  if (m == 0 || ds.rows() == 0) return 0.0;
  // Deterministic, non-degenerate start vector.
  Vector v(m);
  for (Index j = 0; j < m; ++j) v[j] = 1.0 + 0.1 * std::sin(1.0 + j);
  v.normalize();
  Vector xv(ds.rows());
  auto apply = [&](const Vector& in) {
    for (Index i = 0; i < ds.rows(); ++i) xv[i] = ds.row_dot(i, in.data());
    Vector out = Vector::Zero(m);
    for (Index i = 0; i < ds.rows(); ++i)
      if (xv[i] != 0.0) ds.add_row(i, xv[i], out.data());
    return out;
  };
  double estimate = 0.0;
  for (int step = 0; step < max_steps; ++step) {
    Vector next = apply(v);
    double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    estimate = norm;
    double change = std::min((next - v).norm(), (next + v).norm());
    v = std::move(next);
    if (change < tolerance) {
      // Rayleigh quotient at the converged vector.
      return v.dot(apply(v));
    }
  }
  fail(ErrorCode::kNumeric, "power iteration did not converge in " + std::to_string(max_steps) +
                                " steps (last estimate " + std::to_string(estimate) + ")");
}

double estimate_lipschitz(const TrainingDataset& ds, const Hyperparams& hp, double tolerance,
                          int max_steps) {
  // Hessian bounds: linear (2/n) X^T X, binary max|f'| = 1/4, softmax Jacobian <= 1/2.
  double curvature = 0.0;
  switch (ds.kind()) {
    case ModelKind::kLinear: curvature = 2.0; break;
    case ModelKind::kBinaryLogistic: curvature = 0.25; break;
    case ModelKind::kMultinomialLogistic: curvature = 0.5; break;
  }
  double gram = gram_spectral_norm(ds, tolerance, max_steps);
  return hp.lambda + curvature * gram / ds.rows();
}

double default_learning_rate(const TrainingDataset& ds, const Hyperparams& hp) {
  return 0.9 / estimate_lipschitz(ds, hp);
}

}  // namespace priu
