#pragma once

#include <optional>

#include "priu/dataset.hpp"
#include "priu/schedule.hpp"
#include "priu/update.hpp"

namespace priu {

/// BaseL: retrains from w0 on the same schedule with the removed rows excluded
/// from every batch.
UpdateResult retrain(const TrainingDataset& ds, const Hyperparams& hp, const BatchSchedule& schedule,
                     const DeletionRequest& request, const std::optional<Vector>& w0 = std::nullopt);

/// Full-gradient retraining on the surviving rows (the reference for the eigen path).
UpdateResult retrain_gd(const TrainingDataset& ds, const Hyperparams& hp, const DeletionRequest& request,
                        const std::optional<Vector>& w0 = std::nullopt);

/// Normal equations of the regularized least-squares objective after deletion:
/// (X'^T X' + (n' lambda / 2) I) w = X'^T y'.
ModelParams closed_form_linear(const TrainingDataset& ds, double lambda, const DeletionRequest& request);

/// Influence-function estimate of the model without the removed rows:
/// w_full + H^-1 sum_removed grad loss_i(w_full) / (n - |R|), with H the Hessian
/// of the full-data objective at w_full.
UpdateResult infl_update(const TrainingDataset& ds, const Hyperparams& hp, const ModelParams& w_full,
                         const DeletionRequest& request);

/// Hessian of the regularized full-data objective at w (includes lambda I).
Matrix objective_hessian(const TrainingDataset& ds, double lambda, const Vector& w);

}  // namespace priu
