#include "priu/capture.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include <Eigen/SVD>

#include "priu/error.hpp"

namespace priu {

const char* to_string(CacheMode mode) noexcept {
  switch (mode) {
    case CacheMode::kDenseFull: return "dense-full";
    case CacheMode::kDenseSvd: return "dense-svd";
    case CacheMode::kSparseLinearized: return "sparse-linearized";
  }
  return "unknown";
}

CacheMode parse_cache_mode(const std::string& text) {
  if (text == "dense-full") return CacheMode::kDenseFull;
  if (text == "dense-svd") return CacheMode::kDenseSvd;
  if (text == "sparse-linearized" || text == "sparse") return CacheMode::kSparseLinearized;
  fail(ErrorCode::kConfig, "unknown cache mode '" + text + "'");
}

std::string Fingerprint::hex() const {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

namespace {

// Two 64-bit multiply-rotate lanes over pre-mixed 8-byte words. Word-at-a-time
// keeps hashing a large dataset cheap relative to an update.
class Hasher128 {
 public:
  void bytes(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::size_t i = 0;
    for (; i < len && fill_ != 0; ++i) push(p[i]);
    for (; i + 8 <= len; i += 8) {
      std::uint64_t w;
      std::memcpy(&w, p + i, 8);
      absorb(w);
    }
    for (; i < len; ++i) push(p[i]);
  }
  template <class T>
  void value(const T& v) {
    bytes(&v, sizeof v);
  }
  Fingerprint finish() {
    if (fill_) absorb(word_);
    return {splitmix(rot_ ^ count_), splitmix(mix_ ^ count_)};
  }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }
  void push(unsigned char b) {
    word_ |= static_cast<std::uint64_t>(b) << (8 * fill_);
    if (++fill_ == 8) absorb(word_);
  }
  void absorb(std::uint64_t w) {
    // The pre-mix does not depend on the lanes, so only a rotate and a multiply sit on each chain.
    const std::uint64_t pre = splitmix(w + count_ * 0xd6e8feb86659fd93ULL);
    rot_ = std::rotl(rot_ ^ pre, 27) * 0x9fb21c651e98df25ULL;
    mix_ = std::rotl(mix_ + (pre ^ w), 31) * 0x632be59bd9b4e019ULL;
    ++count_;
    word_ = 0;
    fill_ = 0;
  }

  std::uint64_t rot_ = 0xcbf29ce484222325ULL;
  std::uint64_t mix_ = 0x6a09e667f3bcc908ULL;
  std::uint64_t word_ = 0;
  std::uint64_t count_ = 0;
  int fill_ = 0;
};

}  // namespace

Fingerprint fingerprint(const TrainingDataset& ds) {
  Hasher128 h;
  h.value(static_cast<std::uint64_t>(ds.rows()));
  h.value(static_cast<std::uint64_t>(ds.cols()));
  h.value(static_cast<std::uint64_t>(ds.classes()));
  h.value(static_cast<std::uint8_t>(ds.kind()));
  h.value(static_cast<std::uint8_t>(ds.storage()));
  if (ds.is_dense()) {
    const auto& X = ds.dense_features();
    h.bytes(X.data(), sizeof(double) * static_cast<std::size_t>(X.size()));
  } else {
    const auto& X = ds.sparse_features();
    h.bytes(X.outerIndexPtr(), sizeof(std::int64_t) * static_cast<std::size_t>(X.outerSize() + 1));
    h.bytes(X.innerIndexPtr(), sizeof(std::int64_t) * static_cast<std::size_t>(X.nonZeros()));
    h.bytes(X.valuePtr(), sizeof(double) * static_cast<std::size_t>(X.nonZeros()));
  }
  h.bytes(ds.labels().data(), sizeof(double) * static_cast<std::size_t>(ds.labels().size()));
  return h.finish();
}

const BatchSchedule& ProvenanceCache::schedule() const {
  require(schedule_ != nullptr, ErrorCode::kConfig, "cache has not been decoded");
  return *schedule_;
}

void ProvenanceCache::check_dataset(const TrainingDataset& ds) const {
  const Fingerprint actual = fingerprint(ds);
  if (actual != header.fingerprint)
    fail(ErrorCode::kFingerprint, "dataset fingerprint " + actual.hex() + " does not match cache fingerprint " +
                                      header.fingerprint.hex());
}

void ProvenanceCache::check_complete() const {
  const Index tau = header.hp.iterations;
  const Eigen::Index d = param_dim();
  if (header.mode != CacheMode::kSparseLinearized) {
    require(entries.size() == tau, ErrorCode::kCacheCorrupt, "cache is missing iteration entries");
    for (Index t = 0; t < tau; ++t) {
      const auto& e = entries[t];
      bool has_op = header.mode == CacheMode::kDenseFull
                        ? e.packed.size() == static_cast<std::size_t>(d * (d + 1) / 2)
                        : (e.P.rows() == d && e.V.rows() == d && e.P.cols() == e.V.cols());
      require(has_op && e.moment.size() == d, ErrorCode::kCacheCorrupt,
              "cache entry for iteration " + std::to_string(t) + " is incomplete");
    }
  }
  if (is_logistic(header.hp.kind)) {
    const std::size_t slots = static_cast<std::size_t>(tau) * header.hp.batch_size;
    bool ok = coeffs.iterations == tau && coeffs.batch_size == header.hp.batch_size &&
              (header.hp.kind == ModelKind::kBinaryLogistic
                   ? coeffs.segments.size() == slots
                   : coeffs.probs.size() == slots * header.q && coeffs.offsets.size() == slots * header.q);
    require(ok, ErrorCode::kCacheCorrupt, "cache is missing linearization coefficients");
    if (header.t_s) {
      require(frozen.has_value(), ErrorCode::kCacheCorrupt, "cache is missing frozen coefficients");
      const std::size_t rows = header.n;
      bool fz = header.hp.kind == ModelKind::kBinaryLogistic
                    ? frozen->segments.size() == rows
                    : frozen->probs.size() == rows * header.q && frozen->offsets.size() == rows * header.q;
      require(fz, ErrorCode::kCacheCorrupt, "frozen coefficients do not cover every row");
    }
  }
  require(w0.size() == d && final_w.size() == d, ErrorCode::kCacheCorrupt,
          "cache is missing model parameters");
}

void ProvenanceCache::decode() {
  schedule_ = std::make_shared<const BatchSchedule>(BatchSchedule::build(header.n, header.hp));
  slope_.clear();
  intercept_.clear();
  if (header.hp.kind != ModelKind::kBinaryLogistic) return;
  InterpolationTable tab = table();
  slope_.resize(coeffs.segments.size());
  intercept_.resize(coeffs.segments.size());
  for (std::size_t k = 0; k < coeffs.segments.size(); ++k) {
    auto c = tab.coeffs(coeffs.segments[k]);
    slope_[k] = c.a;
    intercept_[k] = c.b;
  }
}

namespace {

template <class A, class B>
bool same(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

}  // namespace

bool IterationEntry::operator==(const IterationEntry& other) const {
  return packed == other.packed && same(P, other.P) && same(V, other.V) && same(moment, other.moment);
}

bool ProvenanceCache::operator==(const ProvenanceCache& other) const {
  return header == other.header && entries == other.entries && coeffs == other.coeffs &&
         frozen == other.frozen && same(w0, other.w0) && same(final_w, other.final_w);
}

Index default_early_stop(Index iterations) {
  return static_cast<Index>(std::floor(0.7 * iterations));
}

Eigen::Index select_rank(const Vector& singular, double epsilon, Eigen::Index max_rank) {
  const Eigen::Index k = singular.size();
  if (k == 0 || singular[0] <= 0.0) return 0;
  const double top = singular[0];
  const double zero = static_cast<double>(k) * std::numeric_limits<double>::epsilon() * top;
  // sigma is descending, so "residual small enough at r" is monotone in r.
  auto residual_ok = [&](Eigen::Index r) {
    double next = r < k ? singular[r] : 0.0;
    return next <= zero || next <= epsilon * top;
  };
  Eigen::Index lo = 1;
  Eigen::Index hi = k;
  while (lo < hi) {
    Eigen::Index mid = lo + (hi - lo) / 2;
    if (residual_ok(mid))
      hi = mid;
    else
      lo = mid + 1;
  }
  return std::min(lo, std::max<Eigen::Index>(max_rank, 1));
}

namespace {

std::vector<double> pack_upper(const Matrix& A) {
  const Eigen::Index d = A.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(d * (d + 1) / 2));
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) out.push_back(A(i, j));
  return out;
}

RowMatrix gather(const TrainingDataset& ds, std::span<const Index> rows) {
  const auto& X = ds.dense_features();
  RowMatrix out(rows.size(), ds.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
  return out;
}

// Operator and moment of iteration t in the layout described on IterationEntry.
std::pair<Matrix, Vector> iteration_terms(const TrainingDataset& ds, const BatchSchedule& schedule,
                                          const LinearCoeffs* coeffs, const InterpolationTable& table,
                                          Index t) {
  const auto batch = schedule.batch(t);
  RowMatrix XB = gather(ds, batch);
  const Eigen::Index B = XB.rows();
  const Eigen::Index m = ds.cols();
  Vector yB(B);
  for (Eigen::Index k = 0; k < B; ++k) yB[k] = ds.label(batch[k]);

  switch (ds.kind()) {
    case ModelKind::kLinear: {
      Matrix G = Matrix::Zero(m, m);
      G.selfadjointView<Eigen::Upper>().rankUpdate(XB.transpose());
      G.triangularView<Eigen::StrictlyLower>() = G.transpose();
      return {std::move(G), XB.transpose() * yB};
    }
    case ModelKind::kBinaryLogistic: {
      Vector a(B), by(B);
      for (Eigen::Index k = 0; k < B; ++k) {
        auto c = table.coeffs(coeffs->segments[coeffs->slot(t, static_cast<Index>(k))]);
        a[k] = c.a;
        by[k] = c.b * yB[k];
      }
      Matrix C = XB.transpose() * a.asDiagonal() * XB;
      C = 0.5 * (C + C.transpose()).eval();
      return {std::move(C), XB.transpose() * by};
    }
    case ModelKind::kMultinomialLogistic: {
      const int q = ds.classes();
      Matrix C(m * q, m * q);
      Vector D(m * q);
      Vector weights(B);
      for (int k = 0; k < q; ++k) {
        for (int l = k; l < q; ++l) {
          for (Eigen::Index s = 0; s < B; ++s) {
            const std::size_t base = coeffs->slot(t, static_cast<Index>(s)) * q;
            const double pk = coeffs->probs[base + k];
            const double pl = coeffs->probs[base + l];
            weights[s] = -((k == l ? pk : 0.0) - pk * pl);
          }
          Matrix block = XB.transpose() * weights.asDiagonal() * XB;
          block = 0.5 * (block + block.transpose()).eval();
          C.block(k * m, l * m, m, m) = block;
          if (l != k) C.block(l * m, k * m, m, m) = block;
        }
        for (Eigen::Index s = 0; s < B; ++s)
          weights[s] = -coeffs->offsets[coeffs->slot(t, static_cast<Index>(s)) * q + k];
        D.segment(k * m, m) = XB.transpose() * weights;
      }
      return {std::move(C), std::move(D)};
    }
  }
  return {};
}

LinearCoeffs frozen_coefficients(const TrainingDataset& ds, const Vector& w,
                                 const InterpolationTable& table) {
  // Treat "every row at one iterate" as a one-iteration schedule with batch = all rows.
  LinearCoeffs out;
  out.kind = ds.kind();
  out.iterations = 1;
  out.batch_size = ds.rows();
  out.classes = ds.classes();
  if (ds.kind() == ModelKind::kBinaryLogistic) {
    out.segments.resize(ds.rows());
    for (Index i = 0; i < ds.rows(); ++i)
      out.segments[i] = table.segment_of(ds.label(i) * ds.row_dot(i, w.data()));
    return out;
  }
  const int q = ds.classes();
  const Eigen::Index m = ds.cols();
  out.probs.resize(static_cast<std::size_t>(ds.rows()) * q);
  out.offsets.resize(out.probs.size());
  for (Index i = 0; i < ds.rows(); ++i) {
    Vector z(q);
    for (int k = 0; k < q; ++k) z[k] = ds.row_dot(i, w.data() + k * m);
    Vector p = class_probabilities(ds, w, i);
    Vector c = p - (p.cwiseProduct(z) - p * p.dot(z));
    c[static_cast<Eigen::Index>(ds.label(i))] -= 1.0;
    for (int k = 0; k < q; ++k) {
      out.probs[static_cast<std::size_t>(i) * q + k] = p[k];
      out.offsets[static_cast<std::size_t>(i) * q + k] = c[k];
    }
  }
  return out;
}

ProvenanceCache build_cache(const TrainingDataset& ds, const Hyperparams& hp,
                            const BatchSchedule& schedule, const LinearCoeffs* coeffs,
                            const InterpolationTable& table, const CaptureOptions& options,
                            const Vector& w0, const Vector& final_w, const Vector* w_ts) {
  const bool logistic = is_logistic(ds.kind());
  require(!logistic || coeffs != nullptr, ErrorCode::kConfig,
          "logistic capture needs linearization coefficients");
  require(!logistic || (coeffs->kind == ds.kind() && coeffs->iterations == hp.iterations &&
                        coeffs->batch_size == hp.batch_size),
          ErrorCode::kMismatch, "linearization coefficients do not match the model");
  if (options.mode == CacheMode::kSparseLinearized) {
    require(!ds.is_dense(), ErrorCode::kMismatch, "sparse-linearized mode needs a sparse dataset");
    require(logistic, ErrorCode::kMismatch, "sparse-linearized mode is for logistic models");
  } else {
    require(ds.is_dense(), ErrorCode::kMismatch,
            std::string(to_string(options.mode)) + " mode needs a dense dataset");
  }
  require(options.epsilon >= 0.0 && options.epsilon < 1.0, ErrorCode::kConfig,
          "SVD threshold must lie in [0, 1)");
  if (options.t_s) {
    require(logistic, ErrorCode::kConfig, "early stop only applies to logistic models");
    require(*options.t_s <= hp.iterations, ErrorCode::kConfig, "t_s must not exceed tau");
    require(w_ts != nullptr, ErrorCode::kConfig, "run does not hold w^(t_s)");
  }

  ProvenanceCache cache;
  auto& h = cache.header;
  h.fingerprint = fingerprint(ds);
  h.n = ds.rows();
  h.m = ds.cols();
  h.q = ds.classes();
  h.hp = hp;
  h.mode = options.mode;
  h.epsilon = options.mode == CacheMode::kDenseSvd ? options.epsilon : 0.0;
  h.t_s = options.t_s;
  h.a_bound = table.a_bound();
  h.segments = table.segments();
  cache.w0 = w0;
  cache.final_w = final_w;
  if (logistic) cache.coeffs = *coeffs;
  if (options.t_s) cache.frozen = frozen_coefficients(ds, *w_ts, table);

  if (options.mode != CacheMode::kSparseLinearized) {
    const Eigen::Index d = ds.param_dim();
    const Eigen::Index max_rank =
        std::min<Eigen::Index>(static_cast<Eigen::Index>(hp.batch_size) * ds.classes(), d);
    cache.entries.resize(hp.iterations);
    for (Index t = 0; t < hp.iterations; ++t) {
      auto [op, moment] = iteration_terms(ds, schedule, coeffs, table, t);
      auto& e = cache.entries[t];
      e.moment = std::move(moment);
      if (options.mode == CacheMode::kDenseFull) {
        e.packed = pack_upper(op);
        continue;
      }
      Eigen::JacobiSVD<Matrix> svd(op, Eigen::ComputeThinU | Eigen::ComputeThinV);
      if (svd.info() != Eigen::Success)
        fail(ErrorCode::kNumeric, "SVD failed at iteration " + std::to_string(t));
      Eigen::Index r = select_rank(svd.singularValues(), options.epsilon, max_rank);
      e.P = svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal();
      e.V = svd.matrixV().leftCols(r);
    }
  }
  cache.decode();
  return cache;
}

}  // namespace

ProvenanceCache capture(const TrainingDataset& ds, const TrainRun& run, const LinearCoeffs* coeffs,
                        const InterpolationTable& table, const CaptureOptions& options) {
  require(!run.trajectory.empty(), ErrorCode::kConfig, "run has no recorded iterates");
  const Vector* w_ts = nullptr;
  if (options.t_s)
    for (const auto& p : run.trajectory)
      if (p.iteration == *options.t_s) w_ts = &p.w;
  return build_cache(ds, run.hp, run.schedule, coeffs, table, options, run.trajectory.front().w,
                     run.final.w, w_ts);
}

TrainedCache train_and_capture(const TrainingDataset& ds, const Hyperparams& hp,
                               const BatchSchedule& schedule, const InterpolationTable& table,
                               const CaptureOptions& options) {
  std::optional<CoeffExtractor> extractor;
  if (is_logistic(ds.kind())) extractor.emplace(ds, schedule, table);
  Vector w0, w_ts;
  TrainOptions topts;
  topts.record_stride = 0;
  topts.observer = [&](Index t, const Vector& w) {
    if (t == 0) w0 = w;
    if (options.t_s && t == *options.t_s) w_ts = w;
    if (extractor) extractor->observe(t, w);
  };
  TrainedCache out;
  out.run = train(ds, hp, schedule, topts);
  LinearCoeffs coeffs;
  if (extractor) coeffs = extractor->take();
  out.cache = build_cache(ds, hp, schedule, extractor ? &coeffs : nullptr, table, options, w0,
                          out.run.final.w, options.t_s ? &w_ts : nullptr);
  return out;
}

CacheStats cache_stats(const ProvenanceCache& cache) {
  CacheStats s;
  // magic + version + kinds + fixed header block (see docs/format.md).
  s.header_bytes = 128;
  std::size_t rank_sum = 0;
  for (const auto& e : cache.entries) {
    s.operator_bytes += e.packed.size() * sizeof(double);
    s.factor_bytes += static_cast<std::size_t>(e.P.size() + e.V.size()) * sizeof(double);
    s.moment_bytes += static_cast<std::size_t>(e.moment.size()) * sizeof(double);
    rank_sum += static_cast<std::size_t>(e.rank());
  }
  auto coeff_size = [](const LinearCoeffs& c) {
    return c.segments.size() * sizeof(std::int32_t) + (c.probs.size() + c.offsets.size()) * sizeof(double);
  };
  s.coeff_bytes = coeff_size(cache.coeffs) + (cache.frozen ? coeff_size(*cache.frozen) : 0);
  s.param_bytes = static_cast<std::size_t>(cache.w0.size() + cache.final_w.size()) * sizeof(double);
  s.total_bytes = s.header_bytes + s.operator_bytes + s.factor_bytes + s.moment_bytes + s.coeff_bytes +
                  s.param_bytes;
  if (!cache.entries.empty() && cache.header.mode == CacheMode::kDenseSvd) {
    s.average_rank = static_cast<double>(rank_sum) / cache.entries.size();
    s.analytic_factor_bytes = 2.0 * cache.entries.size() * s.average_rank *
                              static_cast<double>(cache.param_dim()) * sizeof(double);
  }
  return s;
}

}  // namespace priu
