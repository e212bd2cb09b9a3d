#include "priu/symbolic.hpp"

#include <unordered_set>

#include "priu/error.hpp"

namespace priu {

AnnotatedMatrix symbolic_train(const TrainingDataset& ds, const Hyperparams& hp,
                               const BatchSchedule& schedule, const LinearCoeffs* coeffs,
                               const InterpolationTable* table, const SymbolicOptions& options) {
  const auto& limits = options.limits;
  require(ds.rows() <= limits.max_samples, ErrorCode::kRefused,
          "symbolic training refused: " + std::to_string(ds.rows()) + " samples exceed the limit of " +
              std::to_string(limits.max_samples));
  require(hp.iterations <= limits.max_iterations, ErrorCode::kRefused,
          "symbolic training refused: " + std::to_string(hp.iterations) +
              " iterations exceed the limit of " + std::to_string(limits.max_iterations));
  require(options.idempotent || hp.iterations <= kNonIdempotentIterationCap, ErrorCode::kRefused,
          "non-idempotent expansion is capped at " + std::to_string(kNonIdempotentIterationCap) +
              " iterations");
  require(schedule.iterations() == hp.iterations && schedule.rows() == ds.rows(),
          ErrorCode::kMismatch, "schedule does not match the instance");

  const bool idem = options.idempotent;
  const Eigen::Index d = ds.param_dim();
  const std::size_t cap = limits.term_cap;

  std::optional<DeletionPlan> plan;
  if (options.divisor_request) plan.emplace(schedule, *options.divisor_request);

  Vector w0 = options.w0 ? *options.w0 : Vector::Zero(d);
  AnnotatedMatrix W(d, 1, idem);
  W.add_term(ProvPolynomial::one(idem), w0);

  const double shrink = 1.0 - hp.eta * hp.lambda;
  if (options.observer) options.observer(0, W);
  for (Index t = 0; t < hp.iterations; ++t) {
    const Index divisor = plan ? plan->effective_batch_size(t) : schedule.batch_size();
    AnnotatedMatrix next = W.scaled(shrink);
    if (divisor > 0) {
      const double scale = hp.eta / divisor;
      // Operator and offset sums: sum p_i^2 * K_i and sum p_i^2 * d_i.
      AnnotatedMatrix op(d, d, idem);
      AnnotatedMatrix offset(d, 1, idem);
      const auto batch = schedule.batch(t);
      for (Index pos = 0; pos < batch.size(); ++pos) {
        Index row = batch[pos];
        SampleStep step = sample_step(ds, coeffs, table, t, pos, row);
        ProvPolynomial annotation = ProvPolynomial::token(ds.tokens()[row], idem, 2);
        op.add_term(annotation, scale * step.K);
        offset.add_term(annotation, scale * step.d);
      }
      next = annot_add(next, annot_mul(op, W, cap), cap);
      next = annot_add(next, offset, cap);
    }
    W = next.normalized();
    require(W.size() <= cap, ErrorCode::kRefused, "symbolic expression exceeds the term cap");
    if (options.observer) options.observer(t + 1, W);
  }
  return W;
}

Vector specialize_deletion(const AnnotatedMatrix& expr, const TrainingDataset& ds,
                           const DeletionRequest& request) {
  std::unordered_set<Token> dead;
  for (Index r : request.removed()) dead.insert(ds.tokens()[r]);
  Matrix out = expr.specialize([&](Token t) { return dead.count(t) == 0; });
  return out.col(0);
}

}  // namespace priu
