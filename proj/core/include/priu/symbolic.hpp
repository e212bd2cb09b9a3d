#pragma once

#include <functional>

#include "priu/linearizer.hpp"
#include "priu/provenance.hpp"
#include "priu/schedule.hpp"

namespace priu {

struct SymbolicLimits {
  Index max_samples = 6;
  Index max_iterations = 4;
  std::size_t term_cap = kDefaultTermCap;
};

// Non-idempotent expansion is only meaningful as a divergence demonstration.
inline constexpr Index kNonIdempotentIterationCap = 12;

struct SymbolicOptions {
  bool idempotent = true;
  SymbolicLimits limits{};
  // Rows whose tokens will be zeroed when the expression is specialized; fixes the
  // divisor B_U^(t) of every batch. Empty means divide by B.
  const DeletionRequest* divisor_request = nullptr;
  std::optional<Vector> w0;
  // Called with (t, W^(t)) for t in [0, tau].
  std::function<void(Index, const AnnotatedMatrix&)> observer;
};

/// Runs the provenance-annotated update rule
///   W^(t+1) = (1 - eta*lambda)(1_prov * I) W^(t)
///           + eta/B_U^(t) * sum_{i in batch(t)} p_i^2 * (K_i^(t) W^(t) + d_i^(t))
/// and returns W^(tau) over the dataset's tokens (a column vector per term).
///
/// The batch divisor is the integer B_U^(t) resolved from `divisor_request`; the
/// polynomials themselves are never divided. The expression is refused for
/// instances above the configured limits.
AnnotatedMatrix symbolic_train(const TrainingDataset& ds, const Hyperparams& hp,
                               const BatchSchedule& schedule, const LinearCoeffs* coeffs,
                               const InterpolationTable* table, const SymbolicOptions& options = {});

/// Specializes with every token of `request` set to 0_prov and the rest to 1_prov.
Vector specialize_deletion(const AnnotatedMatrix& expr, const TrainingDataset& ds,
                           const DeletionRequest& request);

}  // namespace priu
