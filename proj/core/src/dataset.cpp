#include "priu/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "priu/error.hpp"

namespace priu {

const char* to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::kLinear: return "linear";
    case ModelKind::kBinaryLogistic: return "binary_logistic";
    case ModelKind::kMultinomialLogistic: return "multinomial_logistic";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "linear") return ModelKind::kLinear;
  if (text == "binary" || text == "binary_logistic" || text == "logistic")
    return ModelKind::kBinaryLogistic;
  if (text == "multinomial" || text == "multinomial_logistic")
    return ModelKind::kMultinomialLogistic;
  fail(ErrorCode::kConfig, "unknown model kind '" + text + "'");
}

namespace {

std::vector<Token> default_tokens(Index n) {
  std::vector<Token> tokens(n);
  for (Index i = 0; i < n; ++i) tokens[i] = i;
  return tokens;
}

int infer_classes(ModelKind kind, const Vector& labels, int requested) {
  if (kind != ModelKind::kMultinomialLogistic) return 1;
  if (requested > 0) return requested;
  double max_label = labels.size() ? labels.maxCoeff() : 0.0;
  return static_cast<int>(max_label) + 1;
}

}  // namespace

TrainingDataset TrainingDataset::dense(RowMatrix features, Vector labels, ModelKind kind,
                                       std::vector<Token> tokens, int num_classes) {
  TrainingDataset ds;
  ds.n_ = static_cast<Index>(features.rows());
  ds.m_ = static_cast<Index>(features.cols());
  ds.features_ = std::move(features);
  ds.storage_ = StorageKind::kDense;
  ds.kind_ = kind;
  ds.q_ = infer_classes(kind, labels, num_classes);
  ds.labels_ = std::move(labels);
  ds.tokens_ = tokens.empty() ? default_tokens(ds.n_) : std::move(tokens);
  ds.validate();
  return ds;
}

TrainingDataset TrainingDataset::sparse(SparseRowMatrix features, Vector labels, ModelKind kind,
                                        std::vector<Token> tokens, int num_classes) {
  TrainingDataset ds;
  features.makeCompressed();
  ds.n_ = static_cast<Index>(features.rows());
  ds.m_ = static_cast<Index>(features.cols());
  ds.features_ = std::move(features);
  ds.storage_ = StorageKind::kSparse;
  ds.kind_ = kind;
  ds.q_ = infer_classes(kind, labels, num_classes);
  ds.labels_ = std::move(labels);
  ds.tokens_ = tokens.empty() ? default_tokens(ds.n_) : std::move(tokens);
  ds.validate();
  return ds;
}

void TrainingDataset::validate() const {
  require(static_cast<Index>(labels_.size()) == n_, ErrorCode::kData,
          "label count does not match feature rows");
  require(tokens_.size() == n_, ErrorCode::kData, "token count does not match feature rows");
  std::unordered_set<Token> seen(tokens_.begin(), tokens_.end());
  require(seen.size() == tokens_.size(), ErrorCode::kData, "provenance tokens must be distinct");
  require(labels_.allFinite(), ErrorCode::kData, "labels must be finite");
  switch (kind_) {
    case ModelKind::kLinear:
      break;
    case ModelKind::kBinaryLogistic:
      for (Index i = 0; i < n_; ++i)
        require(labels_[i] == 1.0 || labels_[i] == -1.0, ErrorCode::kData,
                "binary logistic labels must be +1 or -1 (row " + std::to_string(i) + ")");
      break;
    case ModelKind::kMultinomialLogistic:
      require(q_ >= 2, ErrorCode::kData, "multinomial logistic regression needs q >= 2");
      for (Index i = 0; i < n_; ++i) {
        double y = labels_[i];
        require(y >= 0 && y < q_ && std::floor(y) == y, ErrorCode::kData,
                "multinomial label out of [0, q) at row " + std::to_string(i));
      }
      break;
  }
}

const RowMatrix& TrainingDataset::dense_features() const {
  require(is_dense(), ErrorCode::kMismatch, "dataset is sparse");
  return std::get<RowMatrix>(features_);
}

const SparseRowMatrix& TrainingDataset::sparse_features() const {
  require(!is_dense(), ErrorCode::kMismatch, "dataset is dense");
  return std::get<SparseRowMatrix>(features_);
}

double TrainingDataset::row_dot(Index i, const double* w) const {
  if (storage_ == StorageKind::kDense) {
    const auto& X = std::get<RowMatrix>(features_);
    return X.row(i).dot(Eigen::Map<const Vector>(w, m_));
  }
  const auto& X = std::get<SparseRowMatrix>(features_);
  double acc = 0.0;
  for (SparseRowMatrix::InnerIterator it(X, i); it; ++it) acc += it.value() * w[it.col()];
  return acc;
}

void TrainingDataset::add_row(Index i, double alpha, double* out) const {
  if (storage_ == StorageKind::kDense) {
    const auto& X = std::get<RowMatrix>(features_);
    Eigen::Map<Vector>(out, m_) += alpha * X.row(i).transpose();
    return;
  }
  const auto& X = std::get<SparseRowMatrix>(features_);
  for (SparseRowMatrix::InnerIterator it(X, i); it; ++it) out[it.col()] += alpha * it.value();
}

Vector TrainingDataset::row(Index i) const {
  if (storage_ == StorageKind::kDense) return std::get<RowMatrix>(features_).row(i).transpose();
  Vector out = Vector::Zero(m_);
  add_row(i, 1.0, out.data());
  return out;
}

RowMatrix TrainingDataset::densified() const {
  if (storage_ == StorageKind::kDense) return std::get<RowMatrix>(features_);
  return RowMatrix(std::get<SparseRowMatrix>(features_));
}

TrainingDataset TrainingDataset::to_dense() const {
  return dense(densified(), labels_, kind_, tokens_, kind_ == ModelKind::kMultinomialLogistic ? q_ : 0);
}

TrainingDataset TrainingDataset::select(std::span<const Index> rows) const {
  Vector labels(rows.size());
  std::vector<Token> tokens(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    require(rows[k] < n_, ErrorCode::kData, "row index out of range");
    labels[static_cast<Eigen::Index>(k)] = labels_[rows[k]];
    tokens[k] = tokens_[rows[k]];
  }
  int q = kind_ == ModelKind::kMultinomialLogistic ? q_ : 0;
  if (storage_ == StorageKind::kDense) {
    const auto& X = std::get<RowMatrix>(features_);
    RowMatrix out(rows.size(), m_);
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = X.row(rows[k]);
    return dense(std::move(out), std::move(labels), kind_, std::move(tokens), q);
  }
  const auto& X = std::get<SparseRowMatrix>(features_);
  std::vector<Eigen::Triplet<double, std::int64_t>> triplets;
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (SparseRowMatrix::InnerIterator it(X, rows[k]); it; ++it)
      triplets.emplace_back(static_cast<std::int64_t>(k), it.col(), it.value());
  SparseRowMatrix out(static_cast<Eigen::Index>(rows.size()), m_);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return sparse(std::move(out), std::move(labels), kind_, std::move(tokens), q);
}

TrainingDataset TrainingDataset::without(std::span<const Index> removed) const {
  std::vector<char> drop(n_, 0);
  for (Index r : removed) {
    require(r < n_, ErrorCode::kData, "removed row out of range");
    drop[r] = 1;
  }
  std::vector<Index> keep;
  keep.reserve(n_);
  for (Index i = 0; i < n_; ++i)
    if (!drop[i]) keep.push_back(i);
  return select(keep);
}

TrainingDataset TrainingDataset::with_scaled_rows(std::span<const Index> rows, double factor) const {
  TrainingDataset out = *this;
  if (storage_ == StorageKind::kDense) {
    auto& X = std::get<RowMatrix>(out.features_);
    for (Index r : rows) X.row(r) *= factor;
  } else {
    auto& X = std::get<SparseRowMatrix>(out.features_);
    for (Index r : rows)
      for (SparseRowMatrix::InnerIterator it(X, r); it; ++it) it.valueRef() *= factor;
  }
  return out;
}

void Hyperparams::validate(Index n) const {
  require(std::isfinite(eta) && eta > 0, ErrorCode::kConfig, "learning rate must be > 0");
  require(std::isfinite(lambda) && lambda > 0, ErrorCode::kConfig,
          "regularization rate must be > 0");
  require(batch_size >= 1, ErrorCode::kConfig, "batch size must be >= 1");
  require(batch_size <= n, ErrorCode::kConfig,
          "batch size " + std::to_string(batch_size) + " exceeds row count " + std::to_string(n));
  require(iterations >= 1, ErrorCode::kConfig, "iteration count must be >= 1");
}

DeletionRequest::DeletionRequest(std::vector<Index> removed, Index n, std::string label)
    : removed_(std::move(removed)), n_(n), label_(std::move(label)) {
  std::sort(removed_.begin(), removed_.end());
  removed_.erase(std::unique(removed_.begin(), removed_.end()), removed_.end());
  require(removed_.empty() || removed_.back() < n, ErrorCode::kConfig,
          "deletion request references a row outside [0, n)");
  require(removed_.size() < n, ErrorCode::kConfig, "deleting every training sample is not allowed");
}

bool DeletionRequest::contains(Index row) const {
  return std::binary_search(removed_.begin(), removed_.end(), row);
}

std::vector<char> DeletionRequest::mask() const {
  std::vector<char> m(n_, 0);
  for (Index r : removed_) m[r] = 1;
  return m;
}

}  // namespace priu
