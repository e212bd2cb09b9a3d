#include "priu/update.hpp"

#include <chrono>

#include "priu/error.hpp"
#include "priu/schedule.hpp"

namespace priu {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_inputs(const TrainingDataset& ds, const ProvenanceCache& cache, const DeletionRequest& request) {
  cache.check_dataset(ds);
  require(request.n() == ds.rows(), ErrorCode::kMismatch,
          "deletion request was built for " + std::to_string(request.n()) + " rows, dataset has " +
              std::to_string(ds.rows()));
  cache.check_complete();
}

// acc += K_i w + d_i for the sample at (t, position); K and d are the affine
// per-sample terms of the model, rebuilt from the stored coefficients.
class SampleTerms {
 public:
  SampleTerms(const TrainingDataset& ds, const ProvenanceCache& cache)
      : ds_(ds), cache_(cache), z_(ds.classes()), r_(ds.classes()) {}

  void add(Index t, Index position, Index row, const Vector& w, double sign, Vector& acc) {
    const double y = ds_.label(row);
    switch (ds_.kind()) {
      case ModelKind::kLinear:
        // -2 x x^T w + 2 y x
        ds_.add_row(row, sign * 2.0 * (y - ds_.row_dot(row, w.data())), acc.data());
        return;
      case ModelKind::kBinaryLogistic: {
        const std::size_t slot = cache_.coeffs.slot(t, position);
        const double a = cache_.slope()[slot];
        const double b = cache_.intercept()[slot];
        ds_.add_row(row, sign * (a * ds_.row_dot(row, w.data()) + b * y), acc.data());
        return;
      }
      case ModelKind::kMultinomialLogistic: {
        const int q = ds_.classes();
        const Eigen::Index m = ds_.cols();
        const std::size_t base = cache_.coeffs.slot(t, position) * q;
        Eigen::Map<const Vector> p(cache_.coeffs.probs.data() + base, q);
        Eigen::Map<const Vector> c(cache_.coeffs.offsets.data() + base, q);
        for (int k = 0; k < q; ++k) z_[k] = ds_.row_dot(row, w.data() + k * m);
        r_ = -(p.cwiseProduct(z_) - p * p.dot(z_) + c);
        for (int k = 0; k < q; ++k) ds_.add_row(row, sign * r_[k], acc.data() + k * m);
        return;
      }
    }
  }

 private:
  const TrainingDataset& ds_;
  const ProvenanceCache& cache_;
  Vector z_;
  Vector r_;
};

// out = A w for A symmetric, stored as its row-major upper triangle.
void packed_symv(const std::vector<double>& packed, const Vector& w, Vector& out) {
  const Eigen::Index d = w.size();
  out.setZero();
  const double* a = packed.data();
  for (Eigen::Index i = 0; i < d; ++i) {
    const double wi = w[i];
    double sum = a[0] * wi;
    for (Eigen::Index j = i + 1; j < d; ++j) {
      const double aij = a[j - i];
      sum += aij * w[j];
      out[j] += aij * wi;
    }
    out[i] += sum;
    a += d - i;
  }
}

// Shared loop for the dense caches: w <- (1 - eta*lambda) w
//   + eta/B_U * (op_scale * Op w + moment_scale * moment - sum_removed (K_i w + d_i)).
UpdateResult dense_update(const TrainingDataset& ds, const ProvenanceCache& cache,
                          const DeletionRequest& request, double op_scale, double moment_scale,
                          const char* method, Index iterations) {
  check_inputs(ds, cache, request);
  require(cache.header.mode != CacheMode::kSparseLinearized, ErrorCode::kMismatch,
          "a sparse-linearized cache holds no dense operators");
  require(ds.is_dense(), ErrorCode::kMismatch, "dense cache modes need a dense dataset");

  UpdateResult out;
  out.report.method = method;
  out.report.removed = static_cast<Index>(request.size());
  const auto start = Clock::now();
  const BatchSchedule& schedule = cache.schedule();
  const DeletionPlan plan(schedule, request);
  out.report.prepare_seconds = seconds_since(start);

  const auto loop_start = Clock::now();
  const auto& hp = cache.header.hp;
  const double shrink = 1.0 - hp.eta * hp.lambda;
  const bool svd = cache.header.mode == CacheMode::kDenseSvd;
  SampleTerms terms(ds, cache);
  Vector w = cache.w0;
  Vector acc(w.size());
  Vector proj;
  for (Index t = 0; t < iterations; ++t) {
    const Index kept = plan.effective_batch_size(t);
    if (kept == 0) {
      w *= shrink;
      continue;
    }
    const auto& e = cache.entries[t];
    if (svd) {
      proj.noalias() = e.V.transpose() * w;
      acc.noalias() = e.P * proj;
    } else {
      packed_symv(e.packed, w, acc);
    }
    acc *= op_scale;
    acc.noalias() += moment_scale * e.moment;
    for (const auto& hit : plan.removed_in(t)) terms.add(t, hit.position, hit.row, w, -1.0, acc);
    w *= shrink;
    w.noalias() += (hp.eta / kept) * acc;
    if (!w.allFinite())
      fail(ErrorCode::kNumeric, "update diverged at iteration " + std::to_string(t + 1));
  }
  out.report.loop_seconds = seconds_since(loop_start);
  out.report.total_seconds = seconds_since(start);
  out.params = {std::move(w), iterations};
  return out;
}

UpdateResult sparse_update(const TrainingDataset& ds, const ProvenanceCache& cache,
                           const DeletionRequest& request, Index iterations);

Index resolve(const ProvenanceCache& cache, std::optional<Index> iterations) {
  const Index tau = cache.header.hp.iterations;
  require(!iterations || *iterations <= tau, ErrorCode::kConfig,
          "cannot stop after " + std::to_string(iterations.value_or(0)) + " of " + std::to_string(tau) +
              " iterations");
  return iterations.value_or(tau);
}

}  // namespace

UpdateResult priu_linear(const TrainingDataset& ds, const ProvenanceCache& cache,
                         const DeletionRequest& request) {
  require(cache.header.hp.kind == ModelKind::kLinear && ds.kind() == ModelKind::kLinear,
          ErrorCode::kMismatch, "priu_linear needs a linear model and cache");
  // Cached G and g enter the step as -2 G w + 2 g.
  return dense_update(ds, cache, request, -2.0, 2.0, "priu", cache.header.hp.iterations);
}

UpdateResult priu_logistic(const TrainingDataset& ds, const ProvenanceCache& cache,
                           const DeletionRequest& request) {
  require(is_logistic(cache.header.hp.kind) && ds.kind() == cache.header.hp.kind,
          ErrorCode::kMismatch, "priu_logistic needs a logistic model and a matching cache");
  return dense_update(ds, cache, request, 1.0, 1.0, "priu", cache.header.hp.iterations);
}

UpdateResult priu_sparse_logistic(const TrainingDataset& ds, const ProvenanceCache& cache,
                                  const DeletionRequest& request) {
  return sparse_update(ds, cache, request, cache.header.hp.iterations);
}

namespace {

UpdateResult sparse_update(const TrainingDataset& ds, const ProvenanceCache& cache,
                           const DeletionRequest& request, Index iterations) {
  require(!ds.is_dense(), ErrorCode::kMismatch, "sparse update needs a sparse dataset");
  require(cache.header.mode == CacheMode::kSparseLinearized, ErrorCode::kMismatch,
          "sparse update needs a sparse-linearized cache");
  require(is_logistic(ds.kind()) && ds.kind() == cache.header.hp.kind, ErrorCode::kMismatch,
          "sparse update needs a logistic model and a matching cache");
  check_inputs(ds, cache, request);

  UpdateResult out;
  out.report.method = "priu-sparse";
  out.report.removed = static_cast<Index>(request.size());
  const auto start = Clock::now();
  const BatchSchedule& schedule = cache.schedule();
  const std::vector<char> mask = request.mask();
  out.report.prepare_seconds = seconds_since(start);

  const auto loop_start = Clock::now();
  const auto& hp = cache.header.hp;
  const double shrink = 1.0 - hp.eta * hp.lambda;
  SampleTerms terms(ds, cache);
  Vector w = cache.w0;
  Vector acc(w.size());
  for (Index t = 0; t < iterations; ++t) {
    acc.setZero();
    Index kept = 0;
    const auto batch = schedule.batch(t);
    for (Index pos = 0; pos < batch.size(); ++pos) {
      if (mask[batch[pos]]) continue;
      ++kept;
      terms.add(t, pos, batch[pos], w, 1.0, acc);
    }
    w *= shrink;
    if (kept > 0) w.noalias() += (hp.eta / kept) * acc;
    if (!w.allFinite())
      fail(ErrorCode::kNumeric, "update diverged at iteration " + std::to_string(t + 1));
  }
  out.report.loop_seconds = seconds_since(loop_start);
  out.report.total_seconds = seconds_since(start);
  out.params = {std::move(w), hp.iterations};
  return out;
}

}  // namespace

UpdateResult priu_update(const TrainingDataset& ds, const ProvenanceCache& cache,
                         const DeletionRequest& request, std::optional<Index> iterations) {
  const Index stop = resolve(cache, iterations);
  if (cache.header.mode == CacheMode::kSparseLinearized) return sparse_update(ds, cache, request, stop);
  require(ds.kind() == cache.header.hp.kind, ErrorCode::kMismatch, "dataset and cache model kinds differ");
  const bool linear = cache.header.hp.kind == ModelKind::kLinear;
  return dense_update(ds, cache, request, linear ? -2.0 : 1.0, linear ? 2.0 : 1.0, "priu", stop);
}

}  // namespace priu
