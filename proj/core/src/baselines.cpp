#include "priu/baselines.hpp"

#include <chrono>

#include <Eigen/Cholesky>

#include "priu/error.hpp"
#include "priu/trainer.hpp"

namespace priu {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

UpdateResult retrain(const TrainingDataset& ds, const Hyperparams& hp, const BatchSchedule& schedule,
                     const DeletionRequest& request, const std::optional<Vector>& w0) {
  UpdateResult out;
  out.report.method = "basel";
  out.report.removed = static_cast<Index>(request.size());
  const auto start = Clock::now();
  Vector w = train_excluding(ds, hp, schedule, request, w0);
  out.report.loop_seconds = out.report.total_seconds = seconds_since(start);
  out.params = {std::move(w), hp.iterations};
  return out;
}

UpdateResult retrain_gd(const TrainingDataset& ds, const Hyperparams& hp, const DeletionRequest& request,
                        const std::optional<Vector>& w0) {
  require(request.n() == ds.rows(), ErrorCode::kMismatch, "deletion request does not match the dataset");
  UpdateResult out;
  out.report.method = "basel-gd";
  out.report.removed = static_cast<Index>(request.size());
  out.report.gd_semantics = true;
  const auto start = Clock::now();
  const TrainingDataset rest = ds.without(request.removed());
  Hyperparams gd = hp;
  gd.batch_size = rest.rows();
  TrainOptions opts;
  opts.record_stride = 0;
  opts.w0 = w0;
  TrainRun run = train(rest, gd, BatchSchedule::build(rest.rows(), gd), opts);
  out.report.loop_seconds = out.report.total_seconds = seconds_since(start);
  out.params = std::move(run.final);
  return out;
}

ModelParams closed_form_linear(const TrainingDataset& ds, double lambda, const DeletionRequest& request) {
  require(ds.kind() == ModelKind::kLinear, ErrorCode::kMismatch, "closed form needs a linear model");
  require(lambda >= 0, ErrorCode::kConfig, "lambda must be non-negative");
  require(request.n() == ds.rows(), ErrorCode::kMismatch, "deletion request does not match the dataset");
  const RowMatrix X = ds.densified();
  const Eigen::Index m = X.cols();
  Matrix M = Matrix::Zero(m, m);
  M.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  Vector N = X.transpose() * ds.labels();
  for (Index row : request.removed()) {
    const Vector x = X.row(row).transpose();
    M.selfadjointView<Eigen::Lower>().rankUpdate(x, -1.0);
    N -= ds.label(row) * x;
  }
  const double kept = static_cast<double>(ds.rows() - request.size());
  M.diagonal().array() += kept * lambda / 2.0;
  Eigen::LDLT<Matrix, Eigen::Lower> ldlt(M);
  const Vector w = ldlt.solve(N);
  const double scale = M.diagonal().cwiseAbs().maxCoeff();
  bool singular = ldlt.info() != Eigen::Success || !w.allFinite() ||
                  ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-13 * std::max(scale, 1.0);
  require(!singular, ErrorCode::kNumeric, "closed-form system is singular");
  return {w, 0};
}

Matrix objective_hessian(const TrainingDataset& ds, double lambda, const Vector& w) {
  const RowMatrix X = ds.densified();
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  const Eigen::Index d = ds.param_dim();
  Matrix H(d, d);
  switch (ds.kind()) {
    case ModelKind::kLinear:
      H.noalias() = (2.0 / n) * X.transpose() * X;
      break;
    case ModelKind::kBinaryLogistic: {
      Vector s(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double f = one_minus_sigmoid(ds.label(static_cast<Index>(i)) * X.row(i).dot(w));
        s[i] = f * (1.0 - f) / n;
      }
      H.noalias() = X.transpose() * s.asDiagonal() * X;
      break;
    }
    case ModelKind::kMultinomialLogistic: {
      const int q = ds.classes();
      Matrix P(n, q);
      for (Eigen::Index i = 0; i < n; ++i)
        P.row(i) = class_probabilities(ds, w, static_cast<Index>(i)).transpose();
      Vector s(n);
      for (int k = 0; k < q; ++k)
        for (int l = k; l < q; ++l) {
          s = -P.col(k).cwiseProduct(P.col(l));
          if (k == l) s += P.col(k);
          s /= static_cast<double>(n);
          Matrix block = X.transpose() * s.asDiagonal() * X;
          H.block(k * m, l * m, m, m) = block;
          if (l != k) H.block(l * m, k * m, m, m) = block.transpose();
        }
      break;
    }
  }
  H.diagonal().array() += lambda;
  return H;
}

UpdateResult infl_update(const TrainingDataset& ds, const Hyperparams& hp, const ModelParams& w_full,
                         const DeletionRequest& request) {
  require(ds.is_dense(), ErrorCode::kMismatch, "influence update needs a dense dataset");
  require(request.n() == ds.rows(), ErrorCode::kMismatch, "deletion request does not match the dataset");
  require(w_full.w.size() == ds.param_dim(), ErrorCode::kMismatch, "parameter length does not match the model");
  UpdateResult out;
  out.report.method = "infl";
  out.report.removed = static_cast<Index>(request.size());
  const auto start = Clock::now();
  if (request.empty()) {
    out.params = w_full;
    return out;
  }
  const Matrix H = objective_hessian(ds, hp.lambda, w_full.w);
  Vector g = Vector::Zero(ds.param_dim());
  for (Index row : request.removed()) g += sample_gradient(ds, w_full.w, row);
  out.report.prepare_seconds = seconds_since(start);
  Eigen::LLT<Matrix> llt(H);
  require(llt.info() == Eigen::Success, ErrorCode::kNumeric, "Hessian is not positive definite");
  const double kept = static_cast<double>(ds.rows() - request.size());
  out.params = {w_full.w + llt.solve(g) / kept, w_full.iteration};
  require(out.params.w.allFinite(), ErrorCode::kNumeric, "influence step is not finite");
  out.report.total_seconds = seconds_since(start);
  out.report.loop_seconds = out.report.total_seconds - out.report.prepare_seconds;
  return out;
}

}  // namespace priu
