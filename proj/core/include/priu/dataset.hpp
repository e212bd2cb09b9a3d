#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace priu {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, std::int64_t>;

using Index = std::uint32_t;
using Token = std::uint32_t;

enum class ModelKind : std::uint8_t { kLinear = 0, kBinaryLogistic = 1, kMultinomialLogistic = 2 };
enum class StorageKind : std::uint8_t { kDense = 0, kSparse = 1 };

const char* to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(const std::string& text);

inline bool is_logistic(ModelKind kind) {
  return kind != ModelKind::kLinear;
}

/// Training samples with one provenance token per row.
///
/// Labels are validated against the model kind at construction: continuous for
/// linear regression, exactly {+1, -1} for binary logistic regression and class
/// indices in [0, q) for multinomial logistic regression.
class TrainingDataset {
 public:
  TrainingDataset() = default;

  static TrainingDataset dense(RowMatrix features, Vector labels, ModelKind kind,
                               std::vector<Token> tokens = {}, int num_classes = 0);
  static TrainingDataset sparse(SparseRowMatrix features, Vector labels, ModelKind kind,
                                std::vector<Token> tokens = {}, int num_classes = 0);

  Index rows() const { return n_; }
  Index cols() const { return m_; }
  // Number of classes: 1 for linear and binary models (one weight vector), q otherwise.
  int classes() const { return q_; }
  // Length of the flattened parameter vector (m, or m*q column-major per class).
  Eigen::Index param_dim() const { return static_cast<Eigen::Index>(m_) * q_; }

  ModelKind kind() const { return kind_; }
  StorageKind storage() const { return storage_; }
  bool is_dense() const { return storage_ == StorageKind::kDense; }

  const Vector& labels() const { return labels_; }
  double label(Index i) const { return labels_[i]; }
  std::span<const Token> tokens() const { return tokens_; }

  const RowMatrix& dense_features() const;
  const SparseRowMatrix& sparse_features() const;

  double row_dot(Index i, const double* w) const;
  // out += alpha * x_i
  void add_row(Index i, double alpha, double* out) const;
  // Copies row i into a dense vector (any storage).
  Vector row(Index i) const;

  RowMatrix densified() const;
  TrainingDataset to_dense() const;

  // Rows kept in order, tokens carried along.
  TrainingDataset select(std::span<const Index> rows) const;
  TrainingDataset without(std::span<const Index> removed) const;

  // Rescale the feature rows listed in `rows` by `factor`.
  TrainingDataset with_scaled_rows(std::span<const Index> rows, double factor) const;

 private:
  void validate() const;

  std::variant<RowMatrix, SparseRowMatrix> features_;
  Vector labels_;
  std::vector<Token> tokens_;
  Index n_ = 0;
  Index m_ = 0;
  int q_ = 1;
  ModelKind kind_ = ModelKind::kLinear;
  StorageKind storage_ = StorageKind::kDense;
};

struct Hyperparams {
  double eta = 0.0;
  double lambda = 0.0;
  Index batch_size = 1;
  Index iterations = 1;
  std::uint64_t seed = 0;
  ModelKind kind = ModelKind::kLinear;

  void validate(Index n) const;
  bool operator==(const Hyperparams&) const = default;
};

/// Parameters w (or vec([w_1..w_q]) for multinomial) tagged with the iteration
/// that produced them.
struct ModelParams {
  Vector w;
  Index iteration = 0;

  bool finite() const { return w.allFinite(); }
};

/// Sorted, de-duplicated set of row indices to delete.
class DeletionRequest {
 public:
  DeletionRequest() = default;
  DeletionRequest(std::vector<Index> removed, Index n, std::string label = {});

  static DeletionRequest none(Index n) { return DeletionRequest({}, n); }

  std::span<const Index> removed() const { return removed_; }
  std::size_t size() const { return removed_.size(); }
  bool empty() const { return removed_.empty(); }
  bool contains(Index row) const;
  Index n() const { return n_; }
  const std::string& label() const { return label_; }

  // Boolean mask of length n with true for removed rows.
  std::vector<char> mask() const;

 private:
  std::vector<Index> removed_;
  Index n_ = 0;
  std::string label_;
};

}  // namespace priu
