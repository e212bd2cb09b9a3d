#pragma once

#include "priu/dataset.hpp"

namespace priu {

double l2_dist(const Vector& a, const Vector& b);

/// Cosine of the angle between a and b; throws kNumeric for a zero vector.
double cosine_sim(const Vector& a, const Vector& b);

/// Mean squared error of a linear model on `ds`.
double mse(const TrainingDataset& ds, const Vector& w);

/// Fraction of rows classified correctly. Binary ties (w^T x = 0) go to +1,
/// multinomial ties to the lowest class index.
double validation_accuracy(const TrainingDataset& ds, const Vector& w);

struct SignFlipReport {
  Index flips = 0;
  double max_magnitude_change = 0.0;
};

/// Coordinates whose sign differs (zero counts as positive) and the largest
/// absolute coordinate change.
SignFlipReport sign_flip_report(const Vector& a, const Vector& b);

/// max_k |a_k - b_k| / max(|b_k|, floor).
double max_relative_difference(const Vector& a, const Vector& b, double floor = 1e-12);

}  // namespace priu
