#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "priu/dataset.hpp"
#include "priu/schedule.hpp"

namespace priu {

/// h(w): mean loss over all rows plus (lambda/2)|w|^2.
double objective(const TrainingDataset& ds, const Hyperparams& hp, const Vector& w);

/// Average loss gradient over `batch` plus lambda*w.
Vector gradient(const TrainingDataset& ds, const Hyperparams& hp, const Vector& w,
                std::span<const Index> batch);

/// Gradient of the loss of a single row, without the regularizer.
Vector sample_gradient(const TrainingDataset& ds, const Vector& w, Index row);

/// Numerically stable f(x) = 1 - 1/(1+exp(-x)).
double one_minus_sigmoid(double x);

// Softmax of W^T x for multinomial parameters w (column-major m x q).
Vector class_probabilities(const TrainingDataset& ds, const Vector& w, Index row);

struct TrainOptions {
  Index record_stride = 1;          // 0 keeps only the final iterate
  bool trace_objective = false;     // evaluate h(w) at every recorded iterate
  std::optional<Vector> w0;         // defaults to zeros
  // Called with (t, w^(t)) for every t in [0, tau] before w^(t) is consumed.
  std::function<void(Index, const Vector&)> observer;
};

struct TrainRun {
  std::vector<ModelParams> trajectory;  // w^(0), w^(s), w^(2s), ..., plus the final iterate
  ModelParams final;
  std::vector<double> objective_trace;  // one entry per trajectory element when traced
  BatchSchedule schedule;
  Hyperparams hp;
  Index record_stride = 1;

  // w^(t) when the trajectory holds every iterate.
  const Vector& at(Index t) const;
  bool complete() const { return record_stride == 1 && trajectory.size() == hp.iterations + 1; }
};

/// Mini-batch gradient steps w <- (1 - eta*lambda) w - eta * (batch loss gradient).
TrainRun train(const TrainingDataset& ds, const Hyperparams& hp, const BatchSchedule& schedule,
               const TrainOptions& options = {});

/// Same iteration as `train` but every removed row is excluded from its batch and
/// the average is taken over the B_U^(t) survivors; an emptied batch applies the
/// shrinkage (1 - eta*lambda) only.
Vector train_excluding(const TrainingDataset& ds, const Hyperparams& hp,
                       const BatchSchedule& schedule, const DeletionRequest& request,
                       const std::optional<Vector>& w0 = std::nullopt);

/// Upper estimate of the smoothness constant L of h via power iteration on X^T X.
double estimate_lipschitz(const TrainingDataset& ds, const Hyperparams& hp, double tolerance = 1e-6,
                          int max_steps = 10'000);

/// Largest eigenvalue of X^T X by power iteration (dense or sparse X).
double gram_spectral_norm(const TrainingDataset& ds, double tolerance = 1e-6, int max_steps = 10'000);

/// 0.9 / L-hat.
double default_learning_rate(const TrainingDataset& ds, const Hyperparams& hp);

}  // namespace priu
