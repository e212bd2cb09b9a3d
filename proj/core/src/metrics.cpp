#include "priu/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "priu/error.hpp"

namespace priu {

namespace {

void same_length(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), ErrorCode::kMismatch,
          "vector lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

void check_params(const TrainingDataset& ds, const Vector& w) {
  require(w.size() == ds.param_dim(), ErrorCode::kMismatch,
          "parameter length " + std::to_string(w.size()) + " does not match the dataset (" +
              std::to_string(ds.param_dim()) + ")");
}

}  // namespace

double l2_dist(const Vector& a, const Vector& b) {
  same_length(a, b);
  return (a - b).norm();
}

double cosine_sim(const Vector& a, const Vector& b) {
  same_length(a, b);
  const double na = a.norm();
  const double nb = b.norm();
  require(na > 0 && nb > 0, ErrorCode::kNumeric, "cosine similarity is undefined for a zero vector");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

double mse(const TrainingDataset& ds, const Vector& w) {
  require(ds.kind() == ModelKind::kLinear, ErrorCode::kMismatch, "mse applies to linear models");
  check_params(ds, w);
  require(ds.rows() > 0, ErrorCode::kData, "validation set is empty");
  double sum = 0.0;
  for (Index i = 0; i < ds.rows(); ++i) {
    const double r = ds.label(i) - ds.row_dot(i, w.data());
    sum += r * r;
  }
  return sum / ds.rows();
}

double validation_accuracy(const TrainingDataset& ds, const Vector& w) {
  require(is_logistic(ds.kind()), ErrorCode::kMismatch, "accuracy applies to classification models");
  check_params(ds, w);
  require(ds.rows() > 0, ErrorCode::kData, "validation set is empty");
  const Eigen::Index m = ds.cols();
  Index correct = 0;
  for (Index i = 0; i < ds.rows(); ++i) {
    if (ds.kind() == ModelKind::kBinaryLogistic) {
      const double predicted = ds.row_dot(i, w.data()) >= 0.0 ? 1.0 : -1.0;
      correct += predicted == ds.label(i);
    } else {
      int best = 0;
      double best_score = ds.row_dot(i, w.data());
      for (int k = 1; k < ds.classes(); ++k) {
        const double score = ds.row_dot(i, w.data() + k * m);
        if (score > best_score) {
          best = k;
          best_score = score;
        }
      }
      correct += best == static_cast<int>(ds.label(i));
    }
  }
  return static_cast<double>(correct) / ds.rows();
}

SignFlipReport sign_flip_report(const Vector& a, const Vector& b) {
  same_length(a, b);
  SignFlipReport r;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    if ((a[k] >= 0.0) != (b[k] >= 0.0)) ++r.flips;
    r.max_magnitude_change = std::max(r.max_magnitude_change, std::abs(a[k] - b[k]));
  }
  return r;
}

double max_relative_difference(const Vector& a, const Vector& b, double floor) {
  same_length(a, b);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(a[k] - b[k]) / std::max(std::abs(b[k]), floor));
  return worst;
}

}  // namespace priu
