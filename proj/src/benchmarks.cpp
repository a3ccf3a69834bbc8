#include "fairkit/benchmarks.hpp"

namespace fairkit::benchmarks {

namespace {

Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace

ExperimentConfig leveldown() {
  ExperimentConfig cfg;
  SyntheticSpec spec;
  spec.n_per_group = {1200, 1200};
  spec.dims = 2;
  // group 0: well separated along x0; group 1: overlapping clusters
  spec.cluster_means = {
      {vec2(-2.0, 1.5), vec2(2.0, 1.5)},
      {vec2(-0.6, -1.5), vec2(0.6, -1.5)},
  };
  spec.cluster_stddev = {{0.7, 0.7}, {1.0, 1.0}};
  spec.label_noise_rate = {0.0, 0.0};
  spec.seed = 20240901;
  cfg.synthetic = spec;
  cfg.split = {0.5, 0.25, 0.25, 11};
  cfg.model.kind = ModelKind::mlp;
  cfg.model.hidden = 16;
  cfg.train.steps = 3000;
  cfg.train.batch_size = 64;
  cfg.train.learning_rate = 0.05;
  cfg.train.momentum = 0.9;
  cfg.train.eval_every = 100;
  cfg.train.reg_pair = {0, 1};
  cfg.objective = Objective::min_group_accuracy;
  cfg.sweep = {0.0, 0.5, 1.0, 2.0, 5.0, 10.0};
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

ExperimentConfig imbalanced() {
  ExperimentConfig cfg;
  SyntheticSpec spec;
  spec.n_per_group = {1000, 50};
  spec.dims = 2;
  // the label boundary is x1 = 0 for both groups, so every same-label region
  // is convex and latent interpolation stays label-consistent; the minority
  // group sits elsewhere in x0 with a smaller margin, making it the hard one
  spec.cluster_means = {
      {vec2(-1.0, -1.0), vec2(-1.0, 1.0)},
      {vec2(1.5, -0.7), vec2(1.5, 0.7)},
  };
  spec.cluster_stddev = {{0.6, 0.6}, {0.7, 0.7}};
  spec.label_noise_rate = {0.0, 0.0};
  spec.seed = 20240902;
  cfg.synthetic = spec;
  cfg.split = {0.6, 0.2, 0.2, 12};
  cfg.model.kind = ModelKind::mlp;
  cfg.model.hidden = 16;
  cfg.train.steps = 3000;
  cfg.train.batch_size = 32;
  cfg.train.learning_rate = 0.05;
  cfg.train.momentum = 0.9;
  cfg.train.eval_every = 50;
  cfg.mix_prob = 0.5;
  cfg.augment.m = 10;
  cfg.augment.k = 3;
  cfg.objective = Objective::min_group_accuracy;
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

ExperimentConfig interpolating() {
  ExperimentConfig cfg;
  SyntheticSpec spec;
  spec.n_per_group = {400, 100};
  spec.dims = 2;
  spec.cluster_means = {
      {vec2(-1.5, 0.0), vec2(1.5, 0.0)},
      {vec2(0.0, -1.5), vec2(0.0, 1.5)},
  };
  spec.cluster_stddev = {{0.6, 0.6}, {0.6, 0.6}};
  spec.label_noise_rate = {0.0, 0.0};
  spec.seed = 20240903;
  cfg.synthetic = spec;
  // tight split so the training split stays near 100 + 25 points
  cfg.split = {0.25, 0.25, 0.5, 13};
  cfg.model.kind = ModelKind::mlp;
  cfg.model.hidden = 160;  // >= training split size: interpolating regime
  cfg.train.steps = 3000;
  cfg.train.batch_size = 32;
  cfg.train.learning_rate = 0.1;
  cfg.train.momentum = 0.9;
  cfg.train.eval_every = 500;
  cfg.decompose.replicates = 25;
  cfg.decompose.loss = LossKind::zero_one;
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

ExperimentConfig xor_leak() {
  ExperimentConfig cfg;
  SyntheticSpec spec;
  spec.n_per_group = {600, 600};
  spec.dims = 2;
  // both groups XOR-like; the small x0 offset is a weak linear leak that
  // gives the logistic fit a stable (but poor) solution
  spec.cluster_means = {
      {vec2(-1.0, -1.0), vec2(-0.8, 1.0)},
      {vec2(1.0, 1.2), vec2(1.2, -1.0)},
  };
  spec.cluster_stddev = {{0.6, 0.6}, {0.6, 0.6}};
  spec.label_noise_rate = {0.1, 0.1};
  spec.seed = 20240904;
  cfg.synthetic = spec;
  cfg.split = {0.5, 0.25, 0.25, 14};
  cfg.model.kind = ModelKind::logistic;
  cfg.train.steps = 1500;
  cfg.train.batch_size = 64;
  cfg.train.learning_rate = 0.1;
  cfg.train.momentum = 0.9;
  cfg.train.eval_every = 500;
  cfg.decompose.replicates = 25;
  cfg.decompose.loss = LossKind::zero_one;
  cfg.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  return cfg;
}

}  // namespace fairkit::benchmarks
