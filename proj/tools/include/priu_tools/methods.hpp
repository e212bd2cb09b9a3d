#pragma once

#include <memory>
#include <mutex>
#include <string>

#include "priu/capture.hpp"
#include "priu/opt.hpp"
#include "priu/update.hpp"

namespace priu::tools {

/// Runs any of the update methods by name against one (dataset, cache) pair.
/// The eigen cache for priu-opt is built on first use and shared afterwards.
class MethodRunner {
 public:
  MethodRunner(const TrainingDataset& ds, const ProvenanceCache& cache) : ds_(ds), cache_(cache) {}

  // Throws kMismatch when the method does not apply to the model kind or cache.
  UpdateResult run(const std::string& method, const DeletionRequest& request);
  // Throws like `run` without running anything.
  void check_applicable(const std::string& method) const;

  const EigenCache& eigen();

 private:
  const TrainingDataset& ds_;
  const ProvenanceCache& cache_;
  std::mutex mutex_;
  std::shared_ptr<const EigenCache> eigen_;
};

}  // namespace priu::tools
