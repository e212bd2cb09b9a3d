#include "priu/opt.hpp"

#include <chrono>

#include <Eigen/Eigenvalues>

#include "priu/error.hpp"

namespace priu {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void decompose(const Matrix& M, EigenCache& out) {
  Matrix sym = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  require(solver.info() == Eigen::Success, ErrorCode::kNumeric, "eigendecomposition failed");
  out.Q = solver.eigenvectors();
  out.c = solver.eigenvalues();
  const double norm = sym.norm();
  out.reconstruction_error =
      norm > 0 ? (out.Q * out.c.asDiagonal() * out.Q.transpose() - sym).norm() / norm : 0.0;
}

void guard(Eigen::Index d) {
  require(d <= kEigenDimGuard, ErrorCode::kConfig,
          "parameter dimension " + std::to_string(d) + " exceeds the eigen path limit of " +
              std::to_string(kEigenDimGuard) + "; use the plain update instead");
}

}  // namespace

EigenCache build_eigen_cache(const TrainingDataset& ds) {
  require(ds.kind() == ModelKind::kLinear, ErrorCode::kMismatch, "linear eigen cache needs a linear model");
  guard(ds.cols());
  const RowMatrix X = ds.densified();
  EigenCache out;
  out.kind = ModelKind::kLinear;
  out.fingerprint = fingerprint(ds);
  out.n = ds.rows();
  Matrix M = Matrix::Zero(ds.cols(), ds.cols());
  M.selfadjointView<Eigen::Upper>().rankUpdate(X.transpose());
  M.triangularView<Eigen::StrictlyLower>() = M.transpose();
  decompose(M, out);
  out.moment = X.transpose() * ds.labels();
  return out;
}

EigenCache build_eigen_cache(const TrainingDataset& ds, const ProvenanceCache& cache) {
  require(is_logistic(ds.kind()) && ds.kind() == cache.header.hp.kind, ErrorCode::kMismatch,
          "logistic eigen cache needs a logistic model and a matching cache");
  require(cache.header.t_s && cache.frozen, ErrorCode::kConfig,
          "cache was captured without an early-stop iteration");
  cache.check_dataset(ds);
  guard(ds.param_dim());
  const RowMatrix X = ds.densified();
  const auto& fz = *cache.frozen;
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const Eigen::Index d = ds.param_dim();
  EigenCache out;
  out.kind = ds.kind();
  out.fingerprint = cache.header.fingerprint;
  out.n = ds.rows();
  out.t_s = cache.header.t_s;
  Matrix C(d, d);
  out.moment.resize(d);
  if (ds.kind() == ModelKind::kBinaryLogistic) {
    const InterpolationTable table = cache.table();
    Vector a(n), by(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto co = table.coeffs(fz.segments[i]);
      a[i] = co.a;
      by[i] = co.b * ds.label(static_cast<Index>(i));
    }
    C.noalias() = X.transpose() * a.asDiagonal() * X;
    out.moment.noalias() = X.transpose() * by;
  } else {
    const int q = ds.classes();
    Vector weights(n);
    for (int k = 0; k < q; ++k) {
      for (int l = k; l < q; ++l) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double pk = fz.probs[i * q + k];
          const double pl = fz.probs[i * q + l];
          weights[i] = -((k == l ? pk : 0.0) - pk * pl);
        }
        Matrix block = X.transpose() * weights.asDiagonal() * X;
        C.block(k * m, l * m, m, m) = block;
        if (l != k) C.block(l * m, k * m, m, m) = block.transpose();
      }
      for (Eigen::Index i = 0; i < n; ++i) weights[i] = -fz.offsets[i * q + k];
      out.moment.segment(k * m, m).noalias() = X.transpose() * weights;
    }
  }
  decompose(C, out);
  return out;
}

Vector refreshed_eigenvalues(const TrainingDataset& ds, const EigenCache& ecache,
                             const DeletionRequest& request, const ProvenanceCache* cache) {
  Vector c = ecache.c;
  if (request.empty()) return c;
  const Eigen::Index m = ds.cols();
  const int q = ds.classes();
  std::optional<InterpolationTable> table;
  if (ds.kind() == ModelKind::kBinaryLogistic) {
    require(cache && cache->frozen, ErrorCode::kConfig, "logistic refresh needs the frozen coefficients");
    table = cache->table();
  }
  Vector proj(ecache.Q.cols());
  Matrix U(q, ecache.Q.cols());
  for (Index row : request.removed()) {
    const Vector x = ds.row(row);
    switch (ds.kind()) {
      case ModelKind::kLinear:
        // K = x x^T here (the cached operator is X^T X itself).
        proj.noalias() = ecache.Q.transpose() * x;
        c -= proj.cwiseAbs2();
        break;
      case ModelKind::kBinaryLogistic: {
        const double a = table->coeffs(cache->frozen->segments[row]).a;
        proj.noalias() = ecache.Q.transpose() * x;
        c -= a * proj.cwiseAbs2();
        break;
      }
      case ModelKind::kMultinomialLogistic: {
        require(cache && cache->frozen, ErrorCode::kConfig, "logistic refresh needs the frozen coefficients");
        Eigen::Map<const Vector> p(cache->frozen->probs.data() + static_cast<std::size_t>(row) * q, q);
        const Matrix J = Matrix(p.asDiagonal()) - p * p.transpose();
        // Column k of U holds x^T applied to every class block of eigenvector k.
        for (int a = 0; a < q; ++a) U.row(a).noalias() = x.transpose() * ecache.Q.middleRows(a * m, m);
        // q_k^T (-(J kron x x^T)) q_k = -u_k^T J u_k
        c += (U.array() * (J * U).array()).colwise().sum().transpose().matrix();
        break;
      }
    }
  }
  return c;
}

Vector diagonal_recurrence(const Vector& rho, const Vector& b, const Vector& u0, Index steps) {
  Vector u = u0;
  for (Eigen::Index k = 0; k < u.size(); ++k) {
    const double r = rho[k];
    const double bk = b[k];
    double v = u[k];
    for (Index t = 0; t < steps; ++t) v = r * v + bk;
    u[k] = v;
  }
  return u;
}

UpdateResult opt_linear(const TrainingDataset& ds, const EigenCache& ecache, const Hyperparams& hp,
                        const DeletionRequest& request, const std::optional<Vector>& w0) {
  require(ds.kind() == ModelKind::kLinear && ecache.kind == ModelKind::kLinear, ErrorCode::kMismatch,
          "opt_linear needs a linear model and eigen cache");
  require(fingerprint(ds) == ecache.fingerprint, ErrorCode::kFingerprint,
          "eigen cache was built on a different dataset");
  require(request.n() == ds.rows(), ErrorCode::kMismatch, "deletion request does not match the dataset");
  require(hp.eta > 0 && hp.lambda >= 0 && hp.iterations >= 1, ErrorCode::kConfig,
          "invalid hyperparameters for the eigen path");

  UpdateResult out;
  out.report.method = "priu-opt";
  out.report.removed = static_cast<Index>(request.size());
  out.report.gd_semantics = true;
  const auto start = Clock::now();
  const Index kept = ds.rows() - static_cast<Index>(request.size());
  Vector c = refreshed_eigenvalues(ds, ecache, request);
  Vector moment = ecache.moment;
  for (Index row : request.removed()) ds.add_row(row, -ds.label(row), moment.data());
  out.report.prepare_seconds = seconds_since(start);

  const auto loop_start = Clock::now();
  // w <- (1 - eta*lambda) w + (2 eta / n') (N' - M' w), diagonal in Q's basis.
  const double s = 2.0 * hp.eta / kept;
  const Vector rho = Vector::Constant(c.size(), 1.0 - hp.eta * hp.lambda) - s * c;
  const Vector b = s * (ecache.Q.transpose() * moment);
  const Vector u0 = w0 ? Vector(ecache.Q.transpose() * *w0) : Vector::Zero(c.size());
  Vector w = ecache.Q * diagonal_recurrence(rho, b, u0, hp.iterations);
  require(w.allFinite(), ErrorCode::kNumeric, "eigen recurrence diverged; reduce the learning rate");
  out.report.loop_seconds = seconds_since(loop_start);
  out.report.total_seconds = seconds_since(start);
  out.params = {std::move(w), hp.iterations};
  return out;
}

UpdateResult opt_logistic(const TrainingDataset& ds, const ProvenanceCache& cache,
                          const EigenCache& ecache, const DeletionRequest& request) {
  require(is_logistic(ds.kind()) && ecache.kind == ds.kind(), ErrorCode::kMismatch,
          "opt_logistic needs a logistic model and eigen cache");
  require(cache.header.t_s.has_value(), ErrorCode::kConfig, "cache carries no early-stop iteration");
  require(ecache.t_s == cache.header.t_s && ecache.fingerprint == cache.header.fingerprint,
          ErrorCode::kMismatch, "eigen cache was built from a different provenance cache");
  const auto& hp = cache.header.hp;
  const Index t_s = *cache.header.t_s;
  require(t_s <= hp.iterations, ErrorCode::kConfig, "t_s must not exceed tau");

  // Input validation inside priu_update stays outside the timed phases.
  UpdateResult out = priu_update(ds, cache, request, t_s);
  out.report.method = "priu-opt";
  if (t_s == hp.iterations) return out;
  out.report.gd_semantics = true;

  const auto prep = Clock::now();
  const Index kept = ds.rows() - static_cast<Index>(request.size());
  Vector c = refreshed_eigenvalues(ds, ecache, request, &cache);
  // D* - Delta D*, with the removed rows' frozen offsets.
  Vector moment = ecache.moment;
  const auto& fz = *cache.frozen;
  const int q = ds.classes();
  const Eigen::Index m = ds.cols();
  const InterpolationTable table = cache.table();
  for (Index row : request.removed()) {
    if (ds.kind() == ModelKind::kBinaryLogistic) {
      ds.add_row(row, -table.coeffs(fz.segments[row]).b * ds.label(row), moment.data());
    } else {
      for (int k = 0; k < q; ++k)
        ds.add_row(row, fz.offsets[static_cast<std::size_t>(row) * q + k], moment.data() + k * m);
    }
  }
  out.report.prepare_seconds += seconds_since(prep);

  const auto loop_start = Clock::now();
  const double s = hp.eta / kept;
  const Vector rho = Vector::Constant(c.size(), 1.0 - hp.eta * hp.lambda) + s * c;
  const Vector b = s * (ecache.Q.transpose() * moment);
  Vector u0 = ecache.Q.transpose() * out.params.w;
  Vector w = ecache.Q * diagonal_recurrence(rho, b, u0, hp.iterations - t_s);
  require(w.allFinite(), ErrorCode::kNumeric, "eigen recurrence diverged; reduce the learning rate");
  out.report.loop_seconds += seconds_since(loop_start);
  out.report.total_seconds += seconds_since(prep);
  out.params = {std::move(w), hp.iterations};
  return out;
}

}  // namespace priu
