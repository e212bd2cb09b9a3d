#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "priu/dataset.hpp"
#include "priu/linearizer.hpp"
#include "priu/schedule.hpp"
#include "priu/trainer.hpp"

namespace priu {

enum class CacheMode : std::uint8_t { kDenseFull = 0, kDenseSvd = 1, kSparseLinearized = 2 };

const char* to_string(CacheMode mode) noexcept;
CacheMode parse_cache_mode(const std::string& text);

struct Fingerprint {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  bool operator==(const Fingerprint&) const = default;
  std::string hex() const;
};

/// 128-bit hash over the shape, model kind, raw feature bytes and labels.
Fingerprint fingerprint(const TrainingDataset& ds);

struct CacheHeader {
  Fingerprint fingerprint;
  Index n = 0;
  Index m = 0;
  int q = 1;
  Hyperparams hp;
  CacheMode mode = CacheMode::kDenseFull;
  double epsilon = 0.0;
  std::optional<Index> t_s;
  double a_bound = 20.0;
  std::uint32_t segments = 1'000'000;

  bool operator==(const CacheHeader&) const = default;
};

/// Model-free intermediates of one iteration.
///
/// Linear models keep G = sum x x^T (packed upper triangle, or its truncated SVD
/// factors) and g = sum y x. Logistic models keep the operator C (binary:
/// sum a x x^T; multinomial: -sum J kron x x^T) and offset D in the same slots.
/// Sparse-linearized caches leave every entry empty and rely on the coefficients.
struct IterationEntry {
  std::vector<double> packed;  // d*(d+1)/2, row-major upper triangle
  Matrix P;                    // d x r, U_r * S_r
  Matrix V;                    // d x r
  Vector moment;

  Eigen::Index rank() const { return P.cols(); }
  bool operator==(const IterationEntry& other) const;
};

class ProvenanceCache {
 public:
  CacheHeader header;
  std::vector<IterationEntry> entries;
  LinearCoeffs coeffs;                 // logistic only
  std::optional<LinearCoeffs> frozen;  // coefficients of every row at w^(t_s)
  Vector w0;
  Vector final_w;

  // Rebuilt by decode() so updates do not pay for reshuffling.
  const BatchSchedule& schedule() const;
  InterpolationTable table() const { return InterpolationTable(header.a_bound, header.segments); }
  Eigen::Index param_dim() const { return static_cast<Eigen::Index>(header.m) * header.q; }

  // Throws kFingerprint when `ds` is not the dataset the cache was captured on.
  void check_dataset(const TrainingDataset& ds) const;
  // Throws kCacheCorrupt when sections required by the header are missing.
  void check_complete() const;

  // Decoded binary coefficients, one (a, b) per (t, position); rebuilt from the
  // stored segment ids by `decode()` (called by capture and load, and needed
  // again after editing the header or coefficients by hand).
  std::span<const double> slope() const { return slope_; }
  std::span<const double> intercept() const { return intercept_; }
  void decode();

  bool operator==(const ProvenanceCache& other) const;

 private:
  std::vector<double> slope_;
  std::vector<double> intercept_;
  std::shared_ptr<const BatchSchedule> schedule_;
};

struct CaptureOptions {
  CacheMode mode = CacheMode::kDenseFull;
  double epsilon = 0.01;
  // Iteration at which PrIU-opt freezes the logistic coefficients; none disables.
  std::optional<Index> t_s;
};

/// Index of the t_s default: 70% of tau.
Index default_early_stop(Index iterations);

/// Builds the cache from a finished run. Logistic models need `coeffs`; a t_s
/// snapshot needs w^(t_s) in the run's trajectory.
ProvenanceCache capture(const TrainingDataset& ds, const TrainRun& run, const LinearCoeffs* coeffs,
                        const InterpolationTable& table, const CaptureOptions& options);

/// Trains and captures in one pass, streaming coefficients out of the trajectory
/// so that no iterate is retained.
struct TrainedCache {
  TrainRun run;
  ProvenanceCache cache;
};
TrainedCache train_and_capture(const TrainingDataset& ds, const Hyperparams& hp,
                               const BatchSchedule& schedule, const InterpolationTable& table,
                               const CaptureOptions& options);

// Smallest rank r with sigma_{r+1} <= epsilon * sigma_1 among `singular` (descending),
// capped at `max_rank`; singular values below d*eps*sigma_1 count as zero.
Eigen::Index select_rank(const Vector& singular, double epsilon, Eigen::Index max_rank);

inline constexpr std::uint16_t kCacheFormatVersion = 1;

void save_cache(const ProvenanceCache& cache, const std::filesystem::path& path);
ProvenanceCache load_cache(const std::filesystem::path& path);

struct CacheStats {
  std::size_t header_bytes = 0;
  std::size_t operator_bytes = 0;  // packed matrices
  std::size_t factor_bytes = 0;    // P and V
  std::size_t moment_bytes = 0;
  std::size_t coeff_bytes = 0;
  std::size_t param_bytes = 0;     // w0 and final w
  std::size_t total_bytes = 0;
  double average_rank = 0.0;
  // tau * r * d doubles for each of P and V, the dominant factor term.
  double analytic_factor_bytes = 0.0;
};

CacheStats cache_stats(const ProvenanceCache& cache);

}  // namespace priu
