#include "priu/schedule.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "priu/error.hpp"
#include "priu/random.hpp"

namespace priu {

BatchSchedule BatchSchedule::build(Index n, const Hyperparams& hp) {
  return build(n, hp.batch_size, hp.iterations, hp.seed);
}

BatchSchedule BatchSchedule::build(Index n, Index batch_size, Index iterations, std::uint64_t seed) {
  require(batch_size >= 1, ErrorCode::kConfig, "batch size must be >= 1");
  require(n >= batch_size, ErrorCode::kConfig,
          "row count " + std::to_string(n) + " is smaller than batch size " +
              std::to_string(batch_size));

  BatchSchedule s;
  s.n_ = n;
  s.batch_size_ = batch_size;
  s.iterations_ = iterations;
  s.seed_ = seed;
  s.per_epoch_ = n / batch_size;
  const Index epochs = (iterations + s.per_epoch_ - 1) / s.per_epoch_;

  std::mt19937_64 rng(seed);
  s.permutations_.reserve(epochs);
  s.inverse_.reserve(epochs);
  s.assignments_.reserve(static_cast<std::size_t>(iterations) * batch_size);
  for (Index e = 0; e < epochs; ++e) {
    std::vector<Index> perm(n);
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index i = n; i > 1; --i) {
      auto j = static_cast<Index>(uniform_below(rng, i));
      std::swap(perm[i - 1], perm[j]);
    }
    std::vector<Index> inv(n);
    for (Index p = 0; p < n; ++p) inv[perm[p]] = p;

    const Index first = e * s.per_epoch_;
    const Index count = std::min(s.per_epoch_, iterations - first);
    s.assignments_.insert(s.assignments_.end(), perm.begin(),
                          perm.begin() + static_cast<std::ptrdiff_t>(count) * batch_size);
    s.permutations_.push_back(std::move(perm));
    s.inverse_.push_back(std::move(inv));
  }
  return s;
}

std::vector<BatchSchedule::Occurrence> BatchSchedule::occurrences(Index row) const {
  std::vector<Occurrence> out;
  const Index used = per_epoch_ * batch_size_;
  for (Index e = 0; e < epochs(); ++e) {
    Index pos = inverse_[e][row];
    if (pos >= used) continue;
    Index t = e * per_epoch_ + pos / batch_size_;
    if (t >= iterations_) continue;
    out.push_back({t, pos % batch_size_});
  }
  return out;
}

Index effective_batch_size(const BatchSchedule& schedule, Index t, const DeletionRequest& request) {
  require(t < schedule.iterations(), ErrorCode::kConfig, "iteration out of range");
  Index kept = 0;
  for (Index row : schedule.batch(t))
    if (!request.contains(row)) ++kept;
  return kept;
}

DeletionPlan::DeletionPlan(const BatchSchedule& schedule, const DeletionRequest& request) {
  require(request.n() == schedule.rows(), ErrorCode::kMismatch,
          "deletion request and schedule disagree on the row count");
  const Index tau = schedule.iterations();
  std::vector<std::pair<Index, Hit>> pairs;
  for (Index row : request.removed())
    for (const auto& occ : schedule.occurrences(row))
      pairs.push_back({occ.iteration, Hit{row, occ.position}});
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first < b.first : a.second.position < b.second.position;
  });

  offsets_.assign(tau + 1, 0);
  for (const auto& p : pairs) ++offsets_[p.first + 1];
  for (Index t = 0; t < tau; ++t) offsets_[t + 1] += offsets_[t];
  hits_.reserve(pairs.size());
  for (const auto& p : pairs) hits_.push_back(p.second);

  effective_.resize(tau);
  for (Index t = 0; t < tau; ++t)
    effective_[t] = schedule.batch_size() - static_cast<Index>(offsets_[t + 1] - offsets_[t]);
}

}  // namespace priu
