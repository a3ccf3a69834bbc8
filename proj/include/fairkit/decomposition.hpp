#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fairkit/data.hpp"

namespace fairkit {

/// false_negative_rate is zero_one restricted to points with Y = 1.
enum class LossKind { squared, zero_one, false_negative_rate };

std::string to_string(LossKind k);

/// Scores a matrix of rows; values in [0,1]. Hard predictions derive as
/// score >= 0.5 where the loss needs labels.
using Predictor = std::function<Eigen::VectorXd(const Eigen::Ref<const Eigen::MatrixXd>&)>;

/// Trains on one resampled dataset; must be deterministic given (data, seed).
using Trainer = std::function<Predictor(const Dataset&, std::uint64_t seed)>;

struct OptimalPrediction {
  double y_star = 0.0;
  double noise = 0.0;  // N(x)
};

/// squared: y* = E[y|x] = p, N = p(1-p). zero_one / fnr: y* = [p >= 0.5],
/// N = min(p, 1-p). Single-label mode (p in {0,1}) gives N = 0.
OptimalPrediction optimal_prediction(double p1, LossKind loss);

/// squared: mean of replicate scores. zero_one / fnr: majority vote over
/// hard replicate predictions, ties to 1.
double main_prediction(const Eigen::Ref<const Eigen::VectorXd>& replicate_scores, LossKind loss,
                       bool* tie = nullptr);

struct PointDecomposition {
  Eigen::Index row = 0;
  double y_star = 0.0;
  double y_main = 0.0;
  double noise = 0.0;     // N(x)
  double bias = 0.0;      // B(x) = L(y*, y_m)
  double variance = 0.0;  // V(x) = E_D[L(y_m, f(x))]
  double c1 = 1.0;
  double c2 = 1.0;
  double err = 0.0;  // E_{D,y|x}[L(y, f(x))]
  int replicate_count = 0;
  bool vote_tie = false;
};

/// Pure core shared by the Monte-Carlo estimator and enumeration oracles:
/// decomposes one point given the replicate scores and P(Y=1|x).
/// For zero-one losses: c2 = +1 if y_m = y*, else -1;
/// c1 = 2 P_D(f = y*) - 1 estimated from the replicates.
/// For squared loss c1 = c2 = 1. err reconstructs as c1 N + B + c2 V.
PointDecomposition decompose_from_replicates(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                             double p1, LossKind loss);

struct GroupDecomposition {
  std::string name;
  Eigen::Index count = 0;
  // coefficient-weighted aggregates (the forms entering the fairness gap):
  // N_G = E[c1 N], B_G = E[B], V_G = E[c2 V]
  double noise_weighted = 0.0;
  double bias = 0.0;
  double variance_weighted = 0.0;
  // raw (unweighted) means, reported alongside
  double noise_raw = 0.0;
  double variance_raw = 0.0;
  double mean_err = 0.0;
  double regime_ratio_raw = 0.0;  // (B_G + N_G raw) / V_G raw; inf when V = 0
};

struct DecompositionReport {
  std::vector<GroupDecomposition> groups;
  double e_fair = 0.0;        // |sum_A - sum_B| of weighted aggregates (2 groups)
  double e_fair_stderr = 0.0; // replicate-level standard error of the gap
  // total stderr also counts the finite test-sample noise of each group mean
  double e_fair_stderr_total = 0.0;
  double variance_gap = 0.0;  // |V_A - V_B|, weighted forms
  // estimator metadata
  int replicates_requested = 0;
  int replicates_used = 0;
  LossKind loss = LossKind::zero_one;
  std::string resample_mode;
  std::uint64_t seed = 0;
  bool single_label_mode = false;
  long vote_ties = 0;
  std::vector<PointDecomposition> points;  // aligned with the (filtered) test rows
  std::vector<Eigen::Index> point_rows;    // original test-row index per entry
};

struct DecomposeConfig {
  int replicates = 41;  // odd by default so zero-one votes cannot tie
  LossKind loss = LossKind::zero_one;
  ResampleSpec resample{};
  std::uint64_t seed = 0;
};

/// Trains cfg.replicates models on resampled copies of `base`, scores the
/// test set with each, and aggregates per-point decompositions per group.
/// `cond` may be null: single-label mode, where y* is the observed label and
/// N = 0. Replicates whose training throws are skipped; fewer than half
/// surviving aborts. FNR loss restricts the test set to rows with label 1.
DecompositionReport decompose_fairness(const Dataset& test, const TrueConditional* cond,
                                       const Trainer& trainer, const Dataset& base,
                                       const DecomposeConfig& cfg);

/// Single-point convenience wrapper over the same estimator path.
PointDecomposition decompose_point(const Eigen::Ref<const Eigen::VectorXd>& x, int y_obs,
                                   const TrueConditional* cond, const Trainer& trainer,
                                   const Dataset& base, const DecomposeConfig& cfg);

std::string report_to_json(const DecompositionReport& report);
void write_point_csv(const DecompositionReport& report, const std::string& path);

}  // namespace fairkit
