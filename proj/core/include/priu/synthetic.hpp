#pragma once

#include <cstdint>

#include "priu/dataset.hpp"

namespace priu {

struct SyntheticOptions {
  Index n = 1000;
  Index m = 10;
  int classes = 3;            // multinomial only
  double noise = 0.1;         // linear: label noise sd; logistic: label flip probability
  Index nnz_per_row = 5;      // sparse only
  // Logistic only: minimum distance from every point to the true decision
  // boundary (rows closer than this are redrawn).
  double margin = 0.0;
  std::uint64_t seed = 1;
};

/// y = x^T w* + N(0, noise^2), x ~ N(0, I).
TrainingDataset make_linear(const SyntheticOptions& options);

/// Labels sign(x^T w*) with a `noise` fraction flipped; with a margin the clean
/// labels are separable with that gap.
TrainingDataset make_binary(const SyntheticOptions& options);

/// argmax_k x^T w*_k with a `noise` fraction relabelled uniformly.
TrainingDataset make_multinomial(const SyntheticOptions& options);

/// Sparse rows with `nnz_per_row` nonzeros at distinct random columns; labels as in make_binary.
TrainingDataset make_sparse_binary(const SyntheticOptions& options);

/// Seeded standard normal matrix (Box-Muller over mt19937_64, portable across libraries).
RowMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed);

}  // namespace priu
