#pragma once

#include "fairkit/experiment.hpp"

namespace fairkit::benchmarks {

/// Two equal-sized groups, one easy to separate and one overlapping, so the
/// baseline has a large TPR gap. Used to demonstrate what strong score
/// regularization does to both groups' accuracy.
ExperimentConfig leveldown();

/// Group sizes 1000 vs 50 with a harder minority distribution; the setting
/// where adaptive augmentation is expected to lift min-group accuracy.
ExperimentConfig imbalanced();

/// Small noise-free split (80/20 per group) for the interpolating-MLP
/// decomposition regime: bias vanishes, minority variance dominates.
ExperimentConfig interpolating();

/// XOR-like clusters with a weak linear leak: a logistic model converges to
/// a stable but poor fit, so bias + noise dominate variance.
ExperimentConfig xor_leak();

}  // namespace fairkit::benchmarks
