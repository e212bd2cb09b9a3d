#include "priu/linearizer.hpp"

#include <cmath>

#include "priu/error.hpp"

namespace priu {

InterpolationTable::InterpolationTable(double a_bound, std::uint32_t segments)
    : a_bound_(a_bound), segments_(segments) {
  require(a_bound > 0 && std::isfinite(a_bound), ErrorCode::kConfig,
          "interpolation half-width must be positive");
  require(segments >= 1 && segments < 0x7fffffffu, ErrorCode::kConfig,
          "interpolation segment count out of range");
}

double InterpolationTable::breakpoint(std::int64_t j) const {
  return -a_bound_ + (2.0 * a_bound_ * static_cast<double>(j)) / segments_;
}

std::int32_t InterpolationTable::segment_of(double x) const {
  require(!std::isnan(x), ErrorCode::kNumeric, "interpolant evaluated at NaN");
  if (x < -a_bound_) return -1;
  if (x > a_bound_) return static_cast<std::int32_t>(segments_);
  auto j = static_cast<std::int64_t>(std::floor((x + a_bound_) * segments_ / (2.0 * a_bound_)));
  if (j >= static_cast<std::int64_t>(segments_)) j = segments_ - 1;
  if (j < 0) j = 0;
  // Floating rounding of the scaled position may land one segment off.
  if (x < breakpoint(j) && j > 0) --j;
  if (x >= breakpoint(j + 1) && j + 1 < static_cast<std::int64_t>(segments_)) ++j;
  return static_cast<std::int32_t>(j);
}

InterpolationTable::Coeffs InterpolationTable::coeffs(std::int32_t segment) const {
  if (segment < 0) return {0.0, one_minus_sigmoid(-a_bound_)};
  if (segment >= static_cast<std::int32_t>(segments_)) return {0.0, one_minus_sigmoid(a_bound_)};
  const double x0 = breakpoint(segment);
  const double x1 = breakpoint(segment + 1);
  const double f0 = one_minus_sigmoid(x0);
  const double f1 = one_minus_sigmoid(x1);
  const double a = (f1 - f0) / (x1 - x0);
  return {a, f0 - a * x0};
}

InterpolationTable::Value InterpolationTable::interpolant(double x) const {
  std::int32_t seg = segment_of(x);
  Coeffs c = coeffs(seg);
  return {c.a * x + c.b, c.a, c.b, seg};
}

double InterpolationTable::error_bound() const {
  const double max_f2 = 1.0 / (6.0 * std::sqrt(3.0));
  const double dx = delta_x();
  return dx * dx / 8.0 * max_f2;
}

namespace {

void fill_iteration(const TrainingDataset& ds, const BatchSchedule& schedule,
                    const InterpolationTable& table, Index t, const Vector& w, LinearCoeffs& out) {
  const auto batch = schedule.batch(t);
  if (ds.kind() == ModelKind::kBinaryLogistic) {
    for (Index pos = 0; pos < batch.size(); ++pos) {
      Index row = batch[pos];
      double z = ds.label(row) * ds.row_dot(row, w.data());
      out.segments[out.slot(t, pos)] = table.segment_of(z);
    }
    return;
  }
  const int q = ds.classes();
  const Eigen::Index m = ds.cols();
  for (Index pos = 0; pos < batch.size(); ++pos) {
    Index row = batch[pos];
    Vector z(q);
    for (int k = 0; k < q; ++k) z[k] = ds.row_dot(row, w.data() + k * m);
    Vector p = class_probabilities(ds, w, row);
    Matrix J = Matrix(p.asDiagonal()) - p * p.transpose();
    Vector c = p - J * z;
    c[static_cast<Eigen::Index>(ds.label(row))] -= 1.0;
    const std::size_t base = out.slot(t, pos) * q;
    for (int k = 0; k < q; ++k) {
      out.probs[base + k] = p[k];
      out.offsets[base + k] = c[k];
    }
  }
}

LinearCoeffs allocate(const TrainingDataset& ds, const BatchSchedule& schedule) {
  require(is_logistic(ds.kind()), ErrorCode::kMismatch,
          "linearization coefficients only exist for logistic models");
  LinearCoeffs c;
  c.kind = ds.kind();
  c.iterations = schedule.iterations();
  c.batch_size = schedule.batch_size();
  c.classes = ds.classes();
  const std::size_t slots = static_cast<std::size_t>(c.iterations) * c.batch_size;
  if (c.kind == ModelKind::kBinaryLogistic) {
    c.segments.assign(slots, 0);
  } else {
    c.probs.assign(slots * c.classes, 0.0);
    c.offsets.assign(slots * c.classes, 0.0);
  }
  return c;
}

}  // namespace

LinearCoeffs extract_coeffs(const TrainingDataset& ds, const TrainRun& run,
                            const InterpolationTable& table) {
  require(run.complete(), ErrorCode::kConfig,
          "coefficient extraction needs every iterate of the training trajectory");
  LinearCoeffs out = allocate(ds, run.schedule);
  for (Index t = 0; t < run.hp.iterations; ++t) fill_iteration(ds, run.schedule, table, t, run.at(t), out);
  return out;
}

CoeffExtractor::CoeffExtractor(const TrainingDataset& ds, const BatchSchedule& schedule,
                               const InterpolationTable& table)
    : ds_(ds), schedule_(schedule), table_(table), coeffs_(allocate(ds, schedule)) {}

void CoeffExtractor::observe(Index t, const Vector& w) {
  if (t < schedule_.iterations()) fill_iteration(ds_, schedule_, table_, t, w, coeffs_);
}

SampleStep sample_step(const TrainingDataset& ds, const LinearCoeffs* coeffs,
                       const InterpolationTable* table, Index t, Index position, Index row) {
  Vector x = ds.row(row);
  const double y = ds.label(row);
  SampleStep step;
  switch (ds.kind()) {
    case ModelKind::kLinear:
      step.K = -2.0 * x * x.transpose();
      step.d = 2.0 * y * x;
      break;
    case ModelKind::kBinaryLogistic: {
      require(coeffs && table, ErrorCode::kConfig, "logistic steps need linearization coefficients");
      auto c = table->coeffs(coeffs->segments[coeffs->slot(t, position)]);
      step.K = c.a * x * x.transpose();
      step.d = c.b * y * x;
      break;
    }
    case ModelKind::kMultinomialLogistic: {
      require(coeffs != nullptr, ErrorCode::kConfig, "multinomial steps need linearization coefficients");
      const int q = coeffs->classes;
      const std::size_t base = coeffs->slot(t, position) * q;
      Eigen::Map<const Vector> p(coeffs->probs.data() + base, q);
      Eigen::Map<const Vector> c(coeffs->offsets.data() + base, q);
      Matrix J = Matrix(p.asDiagonal()) - p * p.transpose();
      Matrix xxT = x * x.transpose();
      const Eigen::Index m = x.size();
      step.K.resize(m * q, m * q);
      for (int k = 0; k < q; ++k)
        for (int l = 0; l < q; ++l) step.K.block(k * m, l * m, m, m) = -J(k, l) * xxT;
      step.d.resize(m * q);
      for (int k = 0; k < q; ++k) step.d.segment(k * m, m) = -c[k] * x;
      break;
    }
  }
  return step;
}

Vector linearized_replay(const TrainingDataset& ds, const Hyperparams& hp,
                         const BatchSchedule& schedule, const LinearCoeffs& coeffs,
                         const InterpolationTable& table, const Vector& w0,
                         const DeletionRequest* request) {
  require(coeffs.iterations == hp.iterations && coeffs.batch_size == hp.batch_size,
          ErrorCode::kMismatch, "coefficients do not match the hyperparameters");
  std::vector<char> mask = request ? request->mask() : std::vector<char>(ds.rows(), 0);
  const double shrink = 1.0 - hp.eta * hp.lambda;
  const Eigen::Index m = ds.cols();
  const int q = ds.classes();
  Vector w = w0;
  Vector acc(ds.param_dim());
  Vector z(q);
  for (Index t = 0; t < hp.iterations; ++t) {
    acc.setZero();
    Index kept = 0;
    const auto batch = schedule.batch(t);
    for (Index pos = 0; pos < batch.size(); ++pos) {
      Index row = batch[pos];
      if (mask[row]) continue;
      ++kept;
      const double y = ds.label(row);
      if (ds.kind() == ModelKind::kBinaryLogistic) {
        auto c = table.coeffs(coeffs.segments[coeffs.slot(t, pos)]);
        // a x x^T w + b y x = (a x^T w + b y) x
        ds.add_row(row, c.a * ds.row_dot(row, w.data()) + c.b * y, acc.data());
      } else {
        const std::size_t base = coeffs.slot(t, pos) * q;
        Eigen::Map<const Vector> p(coeffs.probs.data() + base, q);
        Eigen::Map<const Vector> c(coeffs.offsets.data() + base, q);
        for (int k = 0; k < q; ++k) z[k] = ds.row_dot(row, w.data() + k * m);
        // -(J z + c) with J = diag(p) - p p^T
        Vector r = -(p.cwiseProduct(z) - p * p.dot(z) + c);
        for (int k = 0; k < q; ++k) ds.add_row(row, r[k], acc.data() + k * m);
      }
    }
    w *= shrink;
    if (kept > 0) w.noalias() += (hp.eta / kept) * acc;
    if (!w.allFinite())
      fail(ErrorCode::kNumeric, "linearized replay diverged at iteration " + std::to_string(t + 1));
  }
  return w;
}

}  // namespace priu
