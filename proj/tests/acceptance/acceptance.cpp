// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "priu/baselines.hpp"
#include "priu/capture.hpp"
#include "priu/error.hpp"
#include "priu/ingest.hpp"
#include "priu/metrics.hpp"
#include "priu/opt.hpp"
#include "priu/provenance.hpp"
#include "priu/symbolic.hpp"
#include "priu/synthetic.hpp"
#include "priu/trainer.hpp"
#include "priu/update.hpp"

using namespace priu;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Hyperparams make_hp(const TrainingDataset& ds, Index batch, Index iterations, double lambda,
                    std::uint64_t seed = 1) {
  Hyperparams hp;
  hp.kind = ds.kind();
  hp.batch_size = batch;
  hp.iterations = iterations;
  hp.lambda = lambda;
  hp.seed = seed;
  hp.eta = default_learning_rate(ds, hp);
  return hp;
}

TrainedCache capture(const TrainingDataset& ds, const Hyperparams& hp, CaptureOptions opts = {},
                     const InterpolationTable& table = InterpolationTable()) {
  return train_and_capture(ds, hp, BatchSchedule::build(ds.rows(), hp), table, opts);
}

// Minimum wall time over `reps` runs.
double best_time(int reps, const std::function<double()>& run) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) best = std::min(best, run());
  return best;
}

Outcome linear_exactness() {
  const auto start = Clock::now();
  SyntheticOptions so;
  so.n = 2000;
  so.m = 20;
  so.seed = 11;
  auto ds = make_linear(so);
  Hyperparams hp = make_hp(ds, 50, 400, 0.01);
  auto tc = capture(ds, hp);
  double worst = 0.0;
  int sets = 0;
  for (double rate : {0.001, 0.01, 0.05, 0.1, 0.2}) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed, ++sets) {
      DeletionRequest r(sample_rate(ds.rows(), rate, 1000 * seed + static_cast<std::uint64_t>(rate * 1e4)),
                        ds.rows());
      Vector inc = priu_linear(ds, tc.cache, r).params.w;
      Vector ref = retrain(ds, hp, tc.cache.schedule(), r).params.w;
      worst = std::max(worst, max_relative_difference(inc, ref));
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-9 && elapsed < 30.0,
          fmt("%d deletion sets, max relative difference %.3e, %.2f s", sets, worst, elapsed)};
}

Outcome symbolic_closure() {
  const auto start = Clock::now();
  SyntheticOptions so;
  so.n = 5;
  so.m = 2;
  so.classes = 2;
  so.seed = 5;
  std::vector<TrainingDataset> instances{make_linear(so), make_binary(so), make_multinomial(so)};
  double worst = 0.0;
  int checked = 0;
  for (const auto& ds : instances) {
    Hyperparams hp = make_hp(ds, 2, 3, 0.1);
    auto schedule = BatchSchedule::build(ds.rows(), hp);
    InterpolationTable table;
    auto tc = train_and_capture(ds, hp, schedule, table, {});
    const LinearCoeffs* coeffs = is_logistic(ds.kind()) ? &tc.cache.coeffs : nullptr;
    // Deleting all rows is not a valid request, so the full subset is skipped.
    for (unsigned mask = 0; mask + 1 < (1u << ds.rows()); ++mask) {
      std::vector<Index> rows;
      for (Index i = 0; i < ds.rows(); ++i)
        if ((mask >> i) & 1u) rows.push_back(i);
      DeletionRequest r(rows, ds.rows());
      SymbolicOptions opts;
      opts.divisor_request = &r;
      Vector sym = specialize_deletion(symbolic_train(ds, hp, schedule, coeffs, &table, opts), ds, r);
      Vector inc = priu_update(ds, tc.cache, r).params.w;
      worst = std::max(worst, (sym - inc).cwiseAbs().maxCoeff());
      ++checked;
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-10 && elapsed < 60.0,
          fmt("%d subsets over linear/binary/multinomial, max abs difference %.3e, %.2f s", checked, worst,
              elapsed)};
}

struct LogisticInstance {
  Split split;
  InjectedErrors injected;
  Hyperparams hp;
};

LogisticInstance logistic_instance(ModelKind kind, std::uint64_t seed) {
  SyntheticOptions so;
  so.n = 5000;
  so.m = 10;
  so.classes = 3;
  so.noise = 0.05;
  so.margin = 0.25;
  so.seed = seed;
  auto clean = kind == ModelKind::kBinaryLogistic ? make_binary(so) : make_multinomial(so);
  auto split = split_dataset(clean, 0.9, seed);
  auto injected = inject_errors(split.train, 0.2, -10.0, seed + 10);
  Hyperparams hp = make_hp(injected.dirty, 500, 1000, 0.01, seed);
  return {std::move(split), std::move(injected), hp};
}

struct LogisticResult {
  double priu_cos, infl_cos, base_acc, priu_acc, infl_acc;
};

LogisticResult logistic_run(ModelKind kind, std::uint64_t seed) {
  auto inst = logistic_instance(kind, seed);
  const auto& ds = inst.injected.dirty;
  auto tc = capture(ds, inst.hp);
  DeletionRequest r(inst.injected.rows, ds.rows());
  Vector p = priu_update(ds, tc.cache, r).params.w;
  Vector b = retrain(ds, inst.hp, tc.cache.schedule(), r).params.w;
  Vector i = infl_update(ds, inst.hp, tc.run.final, r).params.w;
  const auto& val = inst.split.validation;
  return {cosine_sim(p, b), cosine_sim(i, b), validation_accuracy(val, b), validation_accuracy(val, p),
          validation_accuracy(val, i)};
}

std::vector<LogisticResult> binary_results() {
  static std::vector<LogisticResult> results = [] {
    std::vector<LogisticResult> out;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) out.push_back(logistic_run(ModelKind::kBinaryLogistic, seed));
    return out;
  }();
  return results;
}

Outcome logistic_similarity() {
  bool pass = true;
  double min_cos = 1.0, worst_acc = 0.0;
  for (const auto& r : binary_results()) {
    min_cos = std::min(min_cos, r.priu_cos);
    worst_acc = std::max(worst_acc, std::abs(r.priu_acc - r.base_acc));
    pass = pass && r.priu_cos >= 0.99 && std::abs(r.priu_acc - r.base_acc) <= 0.005;
  }
  return {pass, fmt("3 seeds, rate 0.2: min cosine %.6f, max accuracy shift %.4f", min_cos, worst_acc)};
}

Outcome infl_ordering() {
  bool pass = true;
  std::string detail;
  for (const auto& r : binary_results()) {
    pass = pass && r.infl_cos < r.priu_cos && r.infl_acc <= r.priu_acc;
    detail += fmt("[cos infl %.4f priu %.4f, acc infl %.4f priu %.4f] ", r.infl_cos, r.priu_cos, r.infl_acc,
                  r.priu_acc);
  }
  return {pass, detail};
}

Outcome interpolation_bound() {
  InterpolationTable table;
  const double dx = table.delta_x();
  // max |f''| by second differences, refined around the best grid point.
  auto curvature = [](double x) {
    const double h = 1e-4;
    return std::abs((one_minus_sigmoid(x + h) - 2 * one_minus_sigmoid(x) + one_minus_sigmoid(x - h)) / (h * h));
  };
  double best_x = 0.0, f2 = 0.0;
  for (double x = -5.0; x <= 5.0; x += 1e-3)
    if (curvature(x) > f2) f2 = curvature(x), best_x = x;
  for (double x = best_x - 1e-3; x <= best_x + 1e-3; x += 1e-6) f2 = std::max(f2, curvature(x));
  // s(x) - f(x) is evaluated in double precision near f = 1/2, so a few ulps of slack.
  const double rounding = 8 * std::numeric_limits<double>::epsilon();
  const double bound = dx * dx / 8.0 * f2;
  double worst = 0.0;
  const std::int64_t K = table.segments();
  for (std::int64_t j = 0; j < K; ++j) {
    const double mid = 0.5 * (table.breakpoint(j) + table.breakpoint(j + 1));
    worst = std::max(worst, std::abs(table.interpolant(mid).s - one_minus_sigmoid(mid)));
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-table.a_bound(), table.a_bound());
  for (int k = 0; k < 1'000'000; ++k) {
    const double x = u(rng);
    worst = std::max(worst, std::abs(table.interpolant(x).s - one_minus_sigmoid(x)));
  }
  return {worst <= bound + rounding && worst < 1e-10,
          fmt("dx %.1e, observed max %.6e, bound %.6e (max|f''| %.8f, rounding slack %.1e)", dx, worst, bound, f2,
              rounding)};
}

Outcome speedup() {
  bool pass = true;
  std::string detail;
  constexpr int kReps = 5;
  SyntheticOptions so;
  so.n = 10000;
  so.m = 50;
  so.seed = 21;
  so.margin = 0.1;
  for (ModelKind kind : {ModelKind::kLinear, ModelKind::kBinaryLogistic}) {
    auto ds = kind == ModelKind::kLinear ? make_linear(so) : make_binary(so);
    Hyperparams hp = make_hp(ds, 500, 500, 0.01);
    CaptureOptions co;
    if (kind != ModelKind::kLinear) co.t_s = default_early_stop(hp.iterations);
    auto tc = capture(ds, hp, co);
    auto ec = kind == ModelKind::kLinear ? build_eigen_cache(ds) : build_eigen_cache(ds, tc.cache);
    DeletionRequest r(sample_rate(ds.rows(), 0.001, 5), ds.rows());
    double t_priu = best_time(kReps, [&] { return priu_update(ds, tc.cache, r).report.total_seconds; });
    double t_base = best_time(kReps, [&] { return retrain(ds, hp, tc.cache.schedule(), r, tc.cache.w0).report.total_seconds; });
    double t_opt = best_time(kReps, [&] {
      return (kind == ModelKind::kLinear ? opt_linear(ds, ec, hp, r, tc.cache.w0) : opt_logistic(ds, tc.cache, ec, r))
          .report.total_seconds;
    });
    pass = pass && t_priu <= 0.5 * t_base && t_opt <= 0.5 * t_base;
    detail += fmt("%s: basel/priu %.1fx basel/priu-opt %.1fx; ", kind == ModelKind::kLinear ? "linear" : "binary",
                  t_base / t_priu, t_base / t_opt);
  }
  SyntheticOptions sso;
  sso.n = 10000;
  sso.m = 1000;
  sso.nnz_per_row = 5;
  sso.seed = 22;
  auto sp = make_sparse_binary(sso);
  Hyperparams hp = make_hp(sp, 500, 300, 0.01);
  CaptureOptions co;
  co.mode = CacheMode::kSparseLinearized;
  auto tc = capture(sp, hp, co);
  DeletionRequest r(sample_rate(sp.rows(), 0.01, 5), sp.rows());
  double t_priu = best_time(kReps, [&] { return priu_update(sp, tc.cache, r).report.total_seconds; });
  double t_base = best_time(kReps, [&] { return retrain(sp, hp, tc.cache.schedule(), r, tc.cache.w0).report.total_seconds; });
  pass = pass && t_priu <= t_base;
  detail += fmt("sparse: basel/priu %.2fx", t_base / t_priu);
  return {pass, detail};
}

Outcome linearization_trends() {
  SyntheticOptions so;
  so.n = 2000;
  so.m = 10;
  so.noise = 0.05;
  so.seed = 31;
  auto ds = make_binary(so);
  Hyperparams hp = make_hp(ds, 100, 300, 0.01);
  auto schedule = BatchSchedule::build(ds.rows(), hp);
  auto run = train(ds, hp, schedule);
  std::vector<double> by_segments;
  for (std::uint32_t segments : {100u, 1000u, 10000u}) {
    InterpolationTable table(20.0, segments);
    auto coeffs = extract_coeffs(ds, run, table);
    Vector wl = linearized_replay(ds, hp, schedule, coeffs, table, Vector::Zero(ds.param_dim()));
    by_segments.push_back(l2_dist(wl, run.final.w));
  }
  auto tc = capture(ds, hp);
  std::vector<double> by_rate;
  for (double rate : {0.01, 0.05, 0.1}) {
    DeletionRequest r(sample_rate(ds.rows(), rate, 4), ds.rows());
    by_rate.push_back(l2_dist(priu_update(ds, tc.cache, r).params.w, retrain(ds, hp, schedule, r).params.w));
  }
  const bool pass = by_segments[0] > by_segments[1] && by_segments[1] > by_segments[2] &&
                    by_rate[0] <= by_rate[1] && by_rate[1] <= by_rate[2];
  return {pass, fmt("|w_L - w| over segments 1e2/1e3/1e4: %.3e %.3e %.3e; |w_LU - w_RU| over rates "
                    "0.01/0.05/0.1: %.3e %.3e %.3e",
                    by_segments[0], by_segments[1], by_segments[2], by_rate[0], by_rate[1], by_rate[2])};
}

Outcome svd_truncation() {
  // Rank-5 signal with spread scales over a 1e-3 noise floor: the batch Gram spectrum has a gap,
  // which is the regime truncation is meant for.
  const Index n = 2000, m = 30, signal = 5;
  const double scales[signal] = {1.0, 0.6, 0.4, 0.3, 0.2};
  RowMatrix Z = gaussian_matrix(n, signal, 41);
  for (Index j = 0; j < signal; ++j) Z.col(j) *= scales[j];
  RowMatrix R = gaussian_matrix(signal, m, 44) / std::sqrt(static_cast<double>(m));
  RowMatrix X = Z * R + 1e-3 * gaussian_matrix(n, m, 45);
  Vector w_true = gaussian_matrix(m, 1, 42).col(0);
  Vector noise = gaussian_matrix(n, 1, 43).col(0);
  Vector y = X * w_true + 0.1 * noise;
  auto ds = TrainingDataset::dense(X, y, ModelKind::kLinear);
  Hyperparams hp = make_hp(ds, 100, 300, 0.01);
  auto full = capture(ds, hp);
  DeletionRequest r(sample_rate(n, 0.1, 6), n);
  Vector exact = priu_update(ds, full.cache, r).params.w;
  std::vector<double> dev, cos, rank;
  for (double eps : {0.1, 0.01, 0.001}) {
    CaptureOptions o;
    o.mode = CacheMode::kDenseSvd;
    o.epsilon = eps;
    auto svd = capture(ds, hp, o);
    Vector w = priu_update(ds, svd.cache, r).params.w;
    dev.push_back(l2_dist(w, exact));
    cos.push_back(cosine_sim(w, exact));
    rank.push_back(cache_stats(svd.cache).average_rank);
  }
  const bool pass = dev[0] >= dev[1] && dev[1] >= dev[2] && cos[1] >= 0.999;
  return {pass, fmt("deviation at eps 0.1/0.01/0.001: %.3e %.3e %.3e (avg rank %.1f %.1f %.1f), cosine at 0.01 %.6f",
                    dev[0], dev[1], dev[2], rank[0], rank[1], rank[2], cos[1])};
}

Outcome eigen_path() {
  // Diagonal recurrence against the naive GD recursion on a random 5x5 problem.
  RowMatrix A = gaussian_matrix(20, 5, 51);
  Matrix M = A.transpose() * A;
  Vector N = A.transpose() * Vector(gaussian_matrix(20, 1, 52).col(0));
  const double n = 20, lambda = 0.05;
  Eigen::SelfAdjointEigenSolver<Matrix> es(M);
  const double eta = 0.9 / (2.0 / n * es.eigenvalues().maxCoeff() + lambda);
  Vector w = Vector::Zero(5);
  const Index tau = 100;
  for (Index t = 0; t < tau; ++t) w = (1 - eta * lambda) * w - 2 * eta / n * (M * w - N);
  Vector rho = (1 - eta * lambda) - 2 * eta / n * es.eigenvalues().array();
  Vector b = 2 * eta / n * es.eigenvectors().transpose() * N;
  Vector w_diag = es.eigenvectors() * diagonal_recurrence(rho, b, Vector::Zero(5), tau);
  const double recurrence_err = (w - w_diag).cwiseAbs().maxCoeff();

  // Deviation against the removed Gram norm along a ray of scaled removals.
  SyntheticOptions so;
  so.n = 2000;
  so.m = 10;
  so.seed = 3;
  auto base = make_linear(so);
  auto rows = sample_rows(base.rows(), 5, 99);
  std::vector<double> xs, ys;
  for (int k = 1; k <= 20; ++k) {
    auto ds = base.with_scaled_rows(rows, 0.02 * k);
    Hyperparams hp = make_hp(ds, ds.rows(), 200, 0.01);
    auto ec = build_eigen_cache(ds);
    DeletionRequest r(rows, ds.rows());
    Matrix dM = Matrix::Zero(10, 10);
    for (Index i : rows) dM += ds.row(i) * ds.row(i).transpose();
    xs.push_back(Eigen::SelfAdjointEigenSolver<Matrix>(dM).eigenvalues().cwiseAbs().maxCoeff());
    ys.push_back(l2_dist(opt_linear(ds, ec, hp, r).params.w, retrain_gd(ds, hp, r).params.w));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double cnt = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  const double intercept = (sy - slope * sx) / cnt;

  // Removing rows along an eigenvector leaves the eigenvectors unchanged.
  auto ec0 = build_eigen_cache(base);
  RowMatrix X(base.rows() + 2, 10);
  X.topRows(base.rows()) = base.dense_features();
  X.row(base.rows()) = 0.9 * ec0.Q.col(3).transpose();
  X.row(base.rows() + 1) = -0.4 * ec0.Q.col(3).transpose();
  Vector y(base.rows() + 2);
  y << base.labels(), 0.0, 0.0;
  auto ortho = TrainingDataset::dense(X, y, ModelKind::kLinear);
  Hyperparams hp = make_hp(ortho, ortho.rows(), 200, 0.01);
  DeletionRequest r({base.rows(), base.rows() + 1}, ortho.rows());
  const double ortho_err =
      l2_dist(opt_linear(ortho, build_eigen_cache(ortho), hp, r).params.w, retrain_gd(ortho, hp, r).params.w);

  const bool pass = recurrence_err <= 1e-9 && std::abs(intercept) <= 1e-6 && ortho_err <= 1e-8;
  return {pass, fmt("recurrence error %.3e; deviation fit slope %.3e intercept %.3e; orthogonal removal error %.3e",
                    recurrence_err, slope, intercept, ortho_err)};
}

ProvPolynomial random_poly(std::mt19937_64& rng, bool idempotent) {
  ProvPolynomial p(idempotent);
  const int terms = static_cast<int>(rng() % 4);
  for (int k = 0; k < terms; ++k) {
    Monomial mono;
    for (int f = static_cast<int>(rng() % 3); f > 0; --f)
      mono = mono.times(Monomial(static_cast<Token>(rng() % 5), 1 + static_cast<std::uint32_t>(rng() % 2)),
                        idempotent);
    p = poly_add(p, ProvPolynomial::monomial(mono, 1 + rng() % 3, idempotent));
  }
  return p;
}

Outcome algebra_and_gradients() {
  std::mt19937_64 rng(77);
  int failures = 0, cases = 0;
  for (bool idem : {true, false}) {
    const auto zero = ProvPolynomial::zero(idem), one = ProvPolynomial::one(idem);
    for (int i = 0; i < 1000; ++i, ++cases) {
      auto a = random_poly(rng, idem), b = random_poly(rng, idem), c = random_poly(rng, idem);
      const bool ok = poly_add(a, b) == poly_add(b, a) &&
                      poly_add(poly_add(a, b), c) == poly_add(a, poly_add(b, c)) && poly_add(a, zero) == a &&
                      poly_mul(a, b) == poly_mul(b, a) &&
                      poly_mul(poly_mul(a, b), c) == poly_mul(a, poly_mul(b, c)) && poly_mul(a, one) == a &&
                      poly_mul(a, zero).is_zero() &&
                      poly_mul(a, poly_add(b, c)) == poly_add(poly_mul(a, b), poly_mul(a, c));
      failures += !ok;
    }
  }
  // Specialization must be a homomorphism into the naturals.
  for (int i = 0; i < 1000; ++i, ++cases) {
    auto a = random_poly(rng, false), b = random_poly(rng, false);
    const unsigned mask = static_cast<unsigned>(rng() % 32);
    auto alive = [mask](Token t) { return ((mask >> t) & 1u) != 0; };
    failures += poly_add(a, b).evaluate(alive) != a.evaluate(alive) + b.evaluate(alive) ||
                poly_mul(a, b).evaluate(alive) != a.evaluate(alive) * b.evaluate(alive);
  }

  SyntheticOptions so;
  so.n = 80;
  so.m = 4;
  so.classes = 3;
  so.seed = 61;
  double worst = 0.0;
  for (const auto& ds : {make_linear(so), make_binary(so), make_multinomial(so)}) {
    Hyperparams hp = make_hp(ds, 10, 1, 0.05);
    std::vector<Index> rows(ds.rows());
    for (Index i = 0; i < ds.rows(); ++i) rows[i] = i;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Vector w = 0.5 * Vector(gaussian_matrix(ds.param_dim(), 1, seed).col(0));
      Vector g = gradient(ds, hp, w, rows);
      Vector fd(w.size());
      for (Eigen::Index k = 0; k < w.size(); ++k) {
        Vector up = w, down = w;
        const double h = 1e-6;
        up[k] += h;
        down[k] -= h;
        fd[k] = (objective(ds, hp, up) - objective(ds, hp, down)) / (2 * h);
      }
      worst = std::max(worst, (g - fd).norm() / fd.norm());
    }
  }
  return {failures == 0 && worst < 1e-5,
          fmt("%d algebra cases, %d failures; worst gradient relative error %.3e", cases, failures, worst)};
}

Outcome idempotence_demo() {
  // One sample, full-batch steps: with 2*eta*|x|^2 = 0.8 the central binomial
  // term of the unrolled product outgrows the contraction.
  RowMatrix X(1, 2);
  X << 1.0, 0.5;
  Vector y(1);
  y << 1.0;
  auto ds = TrainingDataset::dense(X, y, ModelKind::kLinear);
  Hyperparams hp;
  hp.kind = ModelKind::kLinear;
  hp.batch_size = 1;
  hp.iterations = 12;
  hp.lambda = 0.01;
  hp.seed = 1;
  hp.eta = 0.8 / (2.0 * X.row(0).squaredNorm());
  auto schedule = BatchSchedule::build(1, hp);

  std::vector<double> central(13, 0.0);
  SymbolicOptions raw;
  raw.idempotent = false;
  raw.limits.max_iterations = 12;
  raw.observer = [&](Index t, const AnnotatedMatrix& W) {
    central[t] = W.term_for(Monomial(0, 2 * (t / 2))).norm();
  };
  symbolic_train(ds, hp, schedule, nullptr, nullptr, raw);
  bool increasing = true;
  for (Index t = 5; t <= 12; ++t) increasing = increasing && central[t] > central[t - 1];

  auto run = train(ds, hp, schedule);
  double bound = 0.0;
  for (const auto& p : run.trajectory) bound = std::max(bound, p.w.norm());
  double largest = 0.0;
  SymbolicOptions idem;
  idem.limits.max_iterations = 12;
  idem.observer = [&](Index, const AnnotatedMatrix& W) {
    const AnnotatedMatrix normal = W.normalized();
    for (const auto& [poly, value] : normal.terms()) largest = std::max(largest, value.norm());
  };
  symbolic_train(ds, hp, schedule, nullptr, nullptr, idem);
  return {increasing && largest <= 10.0 * bound,
          fmt("non-idempotent central term norms t=4..12: %.3g -> %.3g (%s); idempotent max term %.3g vs trajectory "
              "bound %.3g",
              central[4], central[12], increasing ? "strictly increasing" : "not monotone", largest, bound)};
}

void multinomial_info() {
  double min_cos = 1.0, worst_acc = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto r = logistic_run(ModelKind::kMultinomialLogistic, seed);
    min_cos = std::min(min_cos, r.priu_cos);
    worst_acc = std::max(worst_acc, std::abs(r.priu_acc - r.base_acc));
  }
  std::printf("INFO multinomial similarity at rate 0.2: min cosine %.6f, max accuracy shift %.4f\n", min_cos,
              worst_acc);
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"A1", "linear exactness", linear_exactness},
      {"A2", "symbolic closure", symbolic_closure},
      {"A3", "logistic similarity", logistic_similarity},
      {"A4", "influence ordering", infl_ordering},
      {"A5", "interpolation bound", interpolation_bound},
      {"A6", "speedup", speedup},
      {"A7", "linearization trends", linearization_trends},
      {"A8", "svd truncation", svd_truncation},
      {"A9", "eigen path", eigen_path},
      {"A10", "algebra and gradients", algebra_and_gradients},
      {"A11", "idempotence demo", idempotence_demo},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  try {
    multinomial_info();
  } catch (const std::exception& e) {
    std::printf("INFO multinomial run threw: %s\n", e.what());
  }
  return failed == 0 ? 0 : 1;
}
