#pragma once

#include <cmath>
#include <random>

#include "priu/dataset.hpp"
#include "priu/synthetic.hpp"
#include "priu/trainer.hpp"

namespace fixtures {

using namespace priu;

inline TrainingDataset linear(Index n = 200, Index m = 5, std::uint64_t seed = 1) {
  SyntheticOptions o;
  o.n = n;
  o.m = m;
  o.seed = seed;
  return make_linear(o);
}

inline TrainingDataset binary(Index n = 200, Index m = 5, std::uint64_t seed = 1) {
  SyntheticOptions o;
  o.n = n;
  o.m = m;
  o.seed = seed;
  o.noise = 0.05;
  return make_binary(o);
}

inline TrainingDataset multinomial(Index n = 200, Index m = 4, int q = 3, std::uint64_t seed = 1) {
  SyntheticOptions o;
  o.n = n;
  o.m = m;
  o.classes = q;
  o.seed = seed;
  o.noise = 0.05;
  return make_multinomial(o);
}

inline TrainingDataset sparse_binary(Index n = 200, Index m = 40, std::uint64_t seed = 1) {
  SyntheticOptions o;
  o.n = n;
  o.m = m;
  o.seed = seed;
  o.nnz_per_row = 4;
  o.noise = 0.05;
  return make_sparse_binary(o);
}

inline Hyperparams params(const TrainingDataset& ds, Index batch, Index iterations, double lambda = 0.01,
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

inline Vector random_vector(Eigen::Index d, std::uint64_t seed, double scale = 1.0) {
  RowMatrix g = gaussian_matrix(d, 1, seed);
  return scale * Vector(g.col(0));
}

}  // namespace fixtures
