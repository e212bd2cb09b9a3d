#include "priu/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "priu/error.hpp"
#include "priu/random.hpp"

namespace priu {

namespace {

class Normal {
 public:
  explicit Normal(std::uint64_t seed) : rng_(seed) {}

  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform_unit(rng_);
    } while (u1 <= 0.0);
    const double u2 = uniform_unit(rng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::mt19937_64& rng() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

void check(const SyntheticOptions& o) {
  require(o.n >= 1 && o.m >= 1, ErrorCode::kConfig, "synthetic data needs n >= 1 and m >= 1");
  require(o.noise >= 0.0, ErrorCode::kConfig, "noise must be non-negative");
  require(o.margin >= 0.0, ErrorCode::kConfig, "margin must be non-negative");
}

// Redraws a row until `accept` holds; gives up after a bounded number of tries.
template <class Accept>
void draw_row(Normal& normal, RowMatrix& X, Index i, Accept accept) {
  for (int attempt = 0; attempt < 10'000; ++attempt) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = normal();
    if (accept()) return;
  }
  fail(ErrorCode::kConfig, "margin too large: could not draw a row outside it");
}

}  // namespace

RowMatrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Normal normal(seed);
  RowMatrix X(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) X(i, j) = normal();
  return X;
}

TrainingDataset make_linear(const SyntheticOptions& o) {
  check(o);
  RowMatrix X = gaussian_matrix(o.n, o.m, o.seed);
  Normal normal(o.seed ^ 0x5bd1e995ULL);
  Vector w(o.m);
  for (auto& v : w) v = normal();
  Vector y = X * w;
  for (auto& v : y) v += o.noise * normal();
  return TrainingDataset::dense(std::move(X), std::move(y), ModelKind::kLinear);
}

TrainingDataset make_binary(const SyntheticOptions& o) {
  check(o);
  require(o.noise < 1.0, ErrorCode::kConfig, "flip probability must be below 1");
  Normal normal(o.seed ^ 0x5bd1e995ULL);
  Vector w(o.m);
  for (auto& v : w) v = normal();
  const double norm = w.norm();
  Normal rows(o.seed);
  RowMatrix X(o.n, o.m);
  Vector y(o.n);
  for (Index i = 0; i < o.n; ++i) {
    draw_row(rows, X, i, [&] { return std::abs(X.row(i).dot(w)) >= o.margin * norm; });
    y[i] = X.row(i).dot(w) >= 0.0 ? 1.0 : -1.0;
    if (uniform_unit(normal.rng()) < o.noise) y[i] = -y[i];
  }
  return TrainingDataset::dense(std::move(X), std::move(y), ModelKind::kBinaryLogistic);
}

TrainingDataset make_multinomial(const SyntheticOptions& o) {
  check(o);
  require(o.classes >= 2, ErrorCode::kConfig, "multinomial data needs at least 2 classes");
  Normal normal(o.seed ^ 0x5bd1e995ULL);
  Matrix W(o.m, o.classes);
  for (Eigen::Index k = 0; k < W.size(); ++k) W.data()[k] = normal();
  Normal rows(o.seed);
  RowMatrix X(o.n, o.m);
  Vector y(o.n);
  Eigen::Index best = 0;
  for (Index i = 0; i < o.n; ++i) {
    // Distance to the nearest boundary between the winning class and any other.
    draw_row(rows, X, i, [&] {
      const Eigen::RowVectorXd s = X.row(i) * W;
      s.maxCoeff(&best);
      for (Eigen::Index k = 0; k < s.size(); ++k)
        if (k != best && s[best] - s[k] < o.margin * (W.col(best) - W.col(k)).norm()) return false;
      return true;
    });
    y[i] = static_cast<double>(best);
    if (uniform_unit(normal.rng()) < o.noise)
      y[i] = static_cast<double>(uniform_below(normal.rng(), static_cast<std::uint64_t>(o.classes)));
  }
  return TrainingDataset::dense(std::move(X), std::move(y), ModelKind::kMultinomialLogistic, {}, o.classes);
}

TrainingDataset make_sparse_binary(const SyntheticOptions& o) {
  check(o);
  require(o.nnz_per_row >= 1 && o.nnz_per_row <= o.m, ErrorCode::kConfig,
          "nonzeros per row must lie in [1, m]");
  Normal normal(o.seed);
  Vector w(o.m);
  for (auto& v : w) v = normal();
  std::vector<Eigen::Triplet<double, std::int64_t>> entries;
  entries.reserve(static_cast<std::size_t>(o.n) * o.nnz_per_row);
  Vector y(o.n);
  std::vector<Index> cols;
  for (Index i = 0; i < o.n; ++i) {
    cols.clear();
    while (cols.size() < o.nnz_per_row) {
      auto c = static_cast<Index>(uniform_below(normal.rng(), o.m));
      if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
    }
    double score = 0.0;
    for (Index c : cols) {
      const double v = normal();
      entries.emplace_back(i, c, v);
      score += v * w[c];
    }
    y[i] = score >= 0.0 ? 1.0 : -1.0;
    if (uniform_unit(normal.rng()) < o.noise) y[i] = -y[i];
  }
  SparseRowMatrix X(o.n, o.m);
  X.setFromTriplets(entries.begin(), entries.end());
  X.makeCompressed();
  return TrainingDataset::sparse(std::move(X), std::move(y), ModelKind::kBinaryLogistic);
}

}  // namespace priu
