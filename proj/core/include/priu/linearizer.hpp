#pragma once

#include <cstdint>
#include <vector>

#include "priu/dataset.hpp"
#include "priu/schedule.hpp"
#include "priu/trainer.hpp"

namespace priu {

/// Piecewise linear interpolant of f(x) = 1 - 1/(1+e^-x) on a uniform grid over
/// [-a_bound, a_bound]; constant f(+-a_bound) outside.
///
/// Breakpoints are implicit, x_j = -a + 2a*j/K, and segment coefficients are
/// computed on demand from the segment index. Segment ids -1 and K denote the
/// left and right tails.
class InterpolationTable {
 public:
  explicit InterpolationTable(double a_bound = 20.0, std::uint32_t segments = 1'000'000);

  double a_bound() const { return a_bound_; }
  std::uint32_t segments() const { return segments_; }
  double delta_x() const { return 2.0 * a_bound_ / segments_; }
  double breakpoint(std::int64_t j) const;

  std::int32_t segment_of(double x) const;

  struct Coeffs {
    double a;  // slope
    double b;  // intercept
  };
  Coeffs coeffs(std::int32_t segment) const;

  struct Value {
    double s;
    double a;
    double b;
    std::int32_t segment;
  };
  Value interpolant(double x) const;

  // (dx)^2/8 * max|f''|; max|f''| = 1/(6 sqrt 3) for this f.
  double error_bound() const;

  bool operator==(const InterpolationTable&) const = default;

 private:
  double a_bound_;
  std::uint32_t segments_;
};

/// Per-iteration, per-batch-position linearization coefficients taken along the
/// full-data training trajectory.
///
/// Binary logistic: one segment id per (t, position); (a, b) are rebuilt from the
/// table so s(y w^(t)T x) = a * (y w^(t)T x) + b.
/// Multinomial: the softmax residual is replaced by its tangent plane at the
/// training-time scores z0 = W^(t)T x: r(z) ~ J z + c with J = diag(p) - p p^T,
/// p = softmax(z0) and c = p - J z0 - e_y; stored as (p, c).
struct LinearCoeffs {
  ModelKind kind = ModelKind::kBinaryLogistic;
  Index iterations = 0;
  Index batch_size = 0;
  int classes = 1;
  std::vector<std::int32_t> segments;  // iterations * batch_size (binary)
  std::vector<double> probs;           // iterations * batch_size * q (multinomial)
  std::vector<double> offsets;         // iterations * batch_size * q (multinomial)

  std::size_t slot(Index t, Index position) const {
    return static_cast<std::size_t>(t) * batch_size + position;
  }
  bool operator==(const LinearCoeffs&) const = default;
};

/// Coefficients for every (t, i in batch(t)) from a run whose trajectory holds
/// every iterate.
LinearCoeffs extract_coeffs(const TrainingDataset& ds, const TrainRun& run,
                            const InterpolationTable& table);

/// Streaming variant fed by TrainOptions::observer so the trajectory need not be kept.
class CoeffExtractor {
 public:
  CoeffExtractor(const TrainingDataset& ds, const BatchSchedule& schedule,
                 const InterpolationTable& table);

  void observe(Index t, const Vector& w);
  LinearCoeffs take() { return std::move(coeffs_); }

 private:
  const TrainingDataset& ds_;
  const BatchSchedule& schedule_;
  const InterpolationTable& table_;
  LinearCoeffs coeffs_;
};

/// Affine per-sample contribution to the update direction: the step adds
/// eta/B_U * (K w + d) for every surviving sample. For linear regression
/// K = -2 x x^T and d = 2 y x; for binary logistic K = a x x^T and d = b y x;
/// for multinomial K = -(J kron x x^T) and d = -vec(x c^T).
struct SampleStep {
  Matrix K;
  Vector d;
};

SampleStep sample_step(const TrainingDataset& ds, const LinearCoeffs* coeffs,
                       const InterpolationTable* table, Index t, Index position, Index row);

/// Replays the linearized iteration row by row. With no request this is the
/// reference w_L^(tau); with a request the removed rows are skipped and batches
/// are averaged over B_U^(t) (w_LU^(tau)).
Vector linearized_replay(const TrainingDataset& ds, const Hyperparams& hp,
                         const BatchSchedule& schedule, const LinearCoeffs& coeffs,
                         const InterpolationTable& table, const Vector& w0,
                         const DeletionRequest* request = nullptr);

}  // namespace priu
