#pragma once

#include <optional>
#include <string>

#include "priu/capture.hpp"
#include "priu/dataset.hpp"

namespace priu {

/// Wall time of the phases of one update, in seconds.
struct UpdateReport {
  std::string method;
  double prepare_seconds = 0.0;  // plan building, eigenvalue refresh, cache decoding
  double loop_seconds = 0.0;     // the iteration loop
  double total_seconds = 0.0;
  Index removed = 0;
  // True when the path follows full-gradient (GD) semantics instead of the mb-SGD trajectory.
  bool gd_semantics = false;
};

struct UpdateResult {
  ModelParams params;
  UpdateReport report;
};

/// Incremental update for linear regression from a dense-full or dense-svd cache.
UpdateResult priu_linear(const TrainingDataset& ds, const ProvenanceCache& cache,
                         const DeletionRequest& request);

/// Incremental update for binary or multinomial logistic regression from a dense cache.
UpdateResult priu_logistic(const TrainingDataset& ds, const ProvenanceCache& cache,
                           const DeletionRequest& request);

/// Linearized replay over the surviving rows of each batch, for sparse datasets.
UpdateResult priu_sparse_logistic(const TrainingDataset& ds, const ProvenanceCache& cache,
                                  const DeletionRequest& request);

/// Dispatches on the cache's model kind and mode. When given, `iterations`
/// stops after that many steps and returns w_U^(iterations).
UpdateResult priu_update(const TrainingDataset& ds, const ProvenanceCache& cache,
                         const DeletionRequest& request, std::optional<Index> iterations = std::nullopt);

}  // namespace priu
