#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "fairkit/data.hpp"

namespace fairkit {

/// Confusion counts and rates for one group. Rates are nullopt when their
/// denominator is zero; undefinedness is explicit, never coerced to 0 or 1.
struct GroupStats {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  long size() const { return tp + fp + tn + fn; }
  long positives() const { return tp + fn; }
  long negatives() const { return fp + tn; }

  std::optional<double> accuracy() const;
  std::optional<double> tpr() const;
  std::optional<double> fpr() const;
};

struct GroupReport {
  std::vector<GroupStats> groups;        // indexed by group id
  std::vector<std::string> group_names;  // aligned with groups
  double overall_accuracy = 0.0;

  int num_groups() const { return static_cast<int>(groups.size()); }
};

GroupReport confusion_by_group(const Eigen::Ref<const Eigen::VectorXi>& predictions,
                               const Dataset& ds);

/// |TPR_a - TPR_a'|; nullopt when either group has no positives.
std::optional<double> deo(const GroupReport& report, int a, int b);

/// Sum over y in {0,1} of |P(Yhat=1 | Y=y, A=a) - P(Yhat=1 | Y=y, A=a')|,
/// i.e. TPR gap + FPR gap; value in [0,2], not normalized (recorded in
/// report metadata). nullopt when any conditional is undefined.
std::optional<double> deodds(const GroupReport& report, int a, int b);

struct MinMaxSummary {
  double min_group_accuracy = 0.0;
  int argmin_group = 0;  // ties broken by lowest group id
  std::optional<double> min_group_tpr;
  double max_group_accuracy = 0.0;
  std::optional<double> max_group_tpr;
  std::optional<double> overall_tpr;
};

MinMaxSummary minmax_summary(const GroupReport& report);

/// Max over group pairs; nullopt if every pair is undefined.
std::optional<double> max_pairwise_deo(const GroupReport& report);
std::optional<double> max_pairwise_deodds(const GroupReport& report);

enum class Verdict {
  pareto_improvement,
  trade_off,
  leveling_down,
  pareto_degradation_partial,
  unchanged,
};

std::string to_string(Verdict v);

struct ParetoVerdict {
  std::vector<double> deltas;  // intervention - baseline accuracy, per group
  Verdict verdict = Verdict::unchanged;
  double worst_group_delta = 0.0;  // delta of the group worst under baseline
  int baseline_worst_group = 0;
  double tolerance = 0.0;
};

/// Classifies an intervention against a baseline by the sign pattern of the
/// per-group accuracy deltas (sign at tolerance tol):
///   all |d| <= tol                 -> unchanged
///   all d > +tol                   -> pareto_improvement
///   all d < -tol                   -> leveling_down
///   worst gains, some group loses  -> trade_off
///   otherwise                      -> pareto_degradation_partial
ParetoVerdict classify_intervention(const GroupReport& baseline, const GroupReport& intervention,
                                    double tolerance = 0.001);

}  // namespace fairkit
