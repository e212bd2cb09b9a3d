#include "priu_tools/methods.hpp"

#include <chrono>

#include "priu/baselines.hpp"
#include "priu/error.hpp"

namespace priu::tools {

void MethodRunner::check_applicable(const std::string& method) const {
  const ModelKind kind = cache_.header.hp.kind;
  if (method == "priu" || method == "basel" || method == "basel-gd") return;
  if (method == "closed-form") {
    require(kind == ModelKind::kLinear, ErrorCode::kMismatch, "closed-form only applies to linear regression");
    return;
  }
  if (method == "infl") {
    require(ds_.is_dense(), ErrorCode::kMismatch, "infl needs a dense dataset");
    return;
  }
  if (method == "priu-opt") {
    require(ds_.param_dim() <= kEigenDimGuard, ErrorCode::kMismatch,
            "priu-opt is limited to small feature spaces; use priu");
    require(kind == ModelKind::kLinear || cache_.header.t_s.has_value(), ErrorCode::kMismatch,
            "priu-opt for logistic models needs a cache captured with an early-stop iteration");
    return;
  }
  fail(ErrorCode::kConfig, "unknown method '" + method + "'");
}

const EigenCache& MethodRunner::eigen() {
  std::lock_guard lock(mutex_);
  if (!eigen_) {
    eigen_ = std::make_shared<const EigenCache>(cache_.header.hp.kind == ModelKind::kLinear
                                                    ? build_eigen_cache(ds_)
                                                    : build_eigen_cache(ds_, cache_));
  }
  return *eigen_;
}

UpdateResult MethodRunner::run(const std::string& method, const DeletionRequest& request) {
  check_applicable(method);
  const Hyperparams& hp = cache_.header.hp;
  if (method == "priu") return priu_update(ds_, cache_, request);
  if (method == "basel") {
    cache_.check_dataset(ds_);
    return retrain(ds_, hp, cache_.schedule(), request, cache_.w0);
  }
  if (method == "basel-gd") return retrain_gd(ds_, hp, request, cache_.w0);
  if (method == "priu-opt") {
    const EigenCache& ec = eigen();
    if (hp.kind == ModelKind::kLinear) return opt_linear(ds_, ec, hp, request, cache_.w0);
    return opt_logistic(ds_, cache_, ec, request);
  }
  if (method == "closed-form") {
    UpdateResult out;
    out.report.method = method;
    out.report.removed = static_cast<Index>(request.size());
    const auto start = std::chrono::steady_clock::now();
    out.params = closed_form_linear(ds_, hp.lambda, request);
    out.report.total_seconds = out.report.loop_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
  }
  // infl
  return infl_update(ds_, hp, {cache_.final_w, hp.iterations}, request);
}

}  // namespace priu::tools
