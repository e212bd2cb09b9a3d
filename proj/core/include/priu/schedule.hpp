#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "priu/dataset.hpp"

namespace priu {

/// Deterministic mini-batch assignment shared by training, incremental updates
/// and retraining.
///
/// Each epoch draws a fresh seeded permutation of [0, n) and cuts it into
/// floor(n / B) batches; the tail of the permutation (n mod B rows) is dropped.
/// The shuffle uses its own Fisher-Yates over mt19937_64 so that the same
/// (seed, n, B, tau) gives the same schedule on every standard library.
class BatchSchedule {
 public:
  BatchSchedule() = default;

  static BatchSchedule build(Index n, const Hyperparams& hp);
  static BatchSchedule build(Index n, Index batch_size, Index iterations, std::uint64_t seed);

  Index rows() const { return n_; }
  Index batch_size() const { return batch_size_; }
  Index iterations() const { return iterations_; }
  std::uint64_t seed() const { return seed_; }
  Index batches_per_epoch() const { return per_epoch_; }
  Index epochs() const { return static_cast<Index>(permutations_.size()); }

  std::span<const Index> batch(Index t) const {
    return {assignments_.data() + static_cast<std::size_t>(t) * batch_size_, batch_size_};
  }
  std::span<const Index> permutation(Index epoch) const { return permutations_[epoch]; }

  // Every (iteration, position-in-batch) at which `row` is used, ascending in t.
  struct Occurrence {
    Index iteration;
    Index position;
  };
  std::vector<Occurrence> occurrences(Index row) const;

  bool operator==(const BatchSchedule& other) const = default;

 private:
  Index n_ = 0;
  Index batch_size_ = 0;
  Index iterations_ = 0;
  Index per_epoch_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<Index> assignments_;
  std::vector<std::vector<Index>> permutations_;
  std::vector<std::vector<Index>> inverse_;  // inverse_[e][row] = position in epoch e
};

/// B_U^(t) = |batch(t) \ removed|.
Index effective_batch_size(const BatchSchedule& schedule, Index t, const DeletionRequest& request);

/// Removed rows grouped by the iteration whose batch contains them.
///
/// Built in O(|R| * epochs + tau) from the schedule's inverse permutations so the
/// update paths never scan whole batches to find deleted samples.
class DeletionPlan {
 public:
  DeletionPlan(const BatchSchedule& schedule, const DeletionRequest& request);

  struct Hit {
    Index row;
    Index position;  // position of the row inside batch(t)
  };

  std::span<const Hit> removed_in(Index t) const {
    return {hits_.data() + offsets_[t], offsets_[t + 1] - offsets_[t]};
  }
  Index effective_batch_size(Index t) const { return effective_[t]; }
  Index iterations() const { return static_cast<Index>(effective_.size()); }

 private:
  std::vector<Hit> hits_;
  std::vector<std::size_t> offsets_;
  std::vector<Index> effective_;
};

}  // namespace priu
