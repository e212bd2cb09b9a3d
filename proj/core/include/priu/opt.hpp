#pragma once

#include <optional>

#include "priu/capture.hpp"
#include "priu/update.hpp"

namespace priu {

// Largest parameter dimension the eigen path accepts; beyond it use priu_update.
inline constexpr Eigen::Index kEigenDimGuard = 2048;

/// Offline eigendecomposition backing the optimized update paths.
///
/// Linear: M = X^T X = Q diag(c) Q^T and moment = X^T y.
/// Logistic: the frozen operator C* = sum over all rows of the per-row operator
/// at w^(t_s), and moment = D*; Q, c decompose (C* + C*^T)/2.
struct EigenCache {
  ModelKind kind = ModelKind::kLinear;
  Fingerprint fingerprint;
  Index n = 0;
  Matrix Q;
  Vector c;
  Vector moment;
  std::optional<Index> t_s;
  // |Q diag(c) Q^T - M|_F / |M|_F measured at build time.
  double reconstruction_error = 0.0;
};

EigenCache build_eigen_cache(const TrainingDataset& ds);
EigenCache build_eigen_cache(const TrainingDataset& ds, const ProvenanceCache& cache);

/// Eigenvalues of the operator with the removed rows subtracted, keeping the
/// eigenvectors fixed: c'_k = c_k - q_k^T (sum_removed K_i) q_k.
Vector refreshed_eigenvalues(const TrainingDataset& ds, const EigenCache& ecache,
                             const DeletionRequest& request, const ProvenanceCache* cache = nullptr);

/// u^(steps) of u <- rho .* u + b started at u0, evaluated per coordinate.
Vector diagonal_recurrence(const Vector& rho, const Vector& b, const Vector& u0, Index steps);

/// Full-gradient linear regression over the surviving rows, run in the eigenbasis
/// of X^T X with refreshed eigenvalues.
UpdateResult opt_linear(const TrainingDataset& ds, const EigenCache& ecache, const Hyperparams& hp,
                        const DeletionRequest& request, const std::optional<Vector>& w0 = std::nullopt);

/// Logistic update that follows the cached iterations up to t_s and then runs the
/// frozen operator's eigen recurrence for the remaining tau - t_s steps.
UpdateResult opt_logistic(const TrainingDataset& ds, const ProvenanceCache& cache,
                          const EigenCache& ecache, const DeletionRequest& request);

}  // namespace priu
