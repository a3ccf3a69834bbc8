#include "fairkit/metrics.hpp"

#include <cmath>

namespace fairkit {

std::optional<double> GroupStats::accuracy() const {
  if (size() == 0) return std::nullopt;
  return static_cast<double>(tp + tn) / static_cast<double>(size());
}

std::optional<double> GroupStats::tpr() const {
  if (positives() == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(positives());
}

std::optional<double> GroupStats::fpr() const {
  if (negatives() == 0) return std::nullopt;
  return static_cast<double>(fp) / static_cast<double>(negatives());
}

GroupReport confusion_by_group(const Eigen::Ref<const Eigen::VectorXi>& predictions,
                               const Dataset& ds) {
  if (predictions.size() != ds.size())
    throw ValidationError("predictions length " + std::to_string(predictions.size()) +
                          " does not match dataset size " + std::to_string(ds.size()));
  GroupReport report;
  report.groups.resize(static_cast<std::size_t>(ds.num_groups()));
  report.group_names = ds.group_names;
  long correct = 0;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    const int y = ds.labels[i];
    const int p = predictions[i];
    if (p != 0 && p != 1)
      throw ValidationError("prediction at row " + std::to_string(i) + " is not in {0,1}");
    GroupStats& s = report.groups[static_cast<std::size_t>(ds.groups[i])];
    if (y == 1 && p == 1) ++s.tp;
    else if (y == 1 && p == 0) ++s.fn;
    else if (y == 0 && p == 1) ++s.fp;
    else ++s.tn;
    if (p == y) ++correct;
  }
  report.overall_accuracy = static_cast<double>(correct) / static_cast<double>(ds.size());
  return report;
}

std::optional<double> deo(const GroupReport& report, int a, int b) {
  const auto ta = report.groups.at(static_cast<std::size_t>(a)).tpr();
  const auto tb = report.groups.at(static_cast<std::size_t>(b)).tpr();
  if (!ta || !tb) return std::nullopt;
  return std::fabs(*ta - *tb);
}

std::optional<double> deodds(const GroupReport& report, int a, int b) {
  const auto& ga = report.groups.at(static_cast<std::size_t>(a));
  const auto& gb = report.groups.at(static_cast<std::size_t>(b));
  const auto ta = ga.tpr(), tb = gb.tpr();
  const auto fa = ga.fpr(), fb = gb.fpr();
  if (!ta || !tb || !fa || !fb) return std::nullopt;
  return std::fabs(*ta - *tb) + std::fabs(*fa - *fb);
}

MinMaxSummary minmax_summary(const GroupReport& report) {
  MinMaxSummary out;
  bool first = true;
  long tp_total = 0, pos_total = 0;
  for (int g = 0; g < report.num_groups(); ++g) {
    const auto& s = report.groups[static_cast<std::size_t>(g)];
    const auto acc = s.accuracy();
    if (!acc) continue;
    if (first || *acc < out.min_group_accuracy) {
      out.min_group_accuracy = *acc;
      out.argmin_group = g;
    }
    if (first || *acc > out.max_group_accuracy) out.max_group_accuracy = *acc;
    first = false;
    const auto t = s.tpr();
    if (t) {
      if (!out.min_group_tpr || *t < *out.min_group_tpr) out.min_group_tpr = *t;
      if (!out.max_group_tpr || *t > *out.max_group_tpr) out.max_group_tpr = *t;
    }
    tp_total += s.tp;
    pos_total += s.positives();
  }
  if (pos_total > 0)
    out.overall_tpr = static_cast<double>(tp_total) / static_cast<double>(pos_total);
  return out;
}

namespace {

template <typename Fn>
std::optional<double> max_pairwise(const GroupReport& report, Fn&& fn) {
  std::optional<double> best;
  for (int a = 0; a < report.num_groups(); ++a)
    for (int b = a + 1; b < report.num_groups(); ++b) {
      const auto v = fn(report, a, b);
      if (v && (!best || *v > *best)) best = v;
    }
  return best;
}

}  // namespace

std::optional<double> max_pairwise_deo(const GroupReport& report) {
  return max_pairwise(report, [](const GroupReport& r, int a, int b) { return deo(r, a, b); });
}

std::optional<double> max_pairwise_deodds(const GroupReport& report) {
  return max_pairwise(report, [](const GroupReport& r, int a, int b) { return deodds(r, a, b); });
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pareto_improvement: return "pareto_improvement";
    case Verdict::trade_off: return "trade_off";
    case Verdict::leveling_down: return "leveling_down";
    case Verdict::pareto_degradation_partial: return "pareto_degradation_partial";
    case Verdict::unchanged: return "unchanged";
  }
  return "unknown";
}

ParetoVerdict classify_intervention(const GroupReport& baseline, const GroupReport& intervention,
                                    double tolerance) {
  if (baseline.group_names != intervention.group_names)
    throw ValidationError("group sets differ between baseline and intervention reports");
  if (tolerance < 0.0) throw ValidationError("tolerance must be >= 0");

  ParetoVerdict out;
  out.tolerance = tolerance;
  double worst_acc = 2.0;
  for (int g = 0; g < baseline.num_groups(); ++g) {
    const auto ba = baseline.groups[static_cast<std::size_t>(g)].accuracy();
    const auto ia = intervention.groups[static_cast<std::size_t>(g)].accuracy();
    if (!ba || !ia)
      throw ValidationError("group '" + baseline.group_names[static_cast<std::size_t>(g)] +
                            "' has undefined accuracy");
    out.deltas.push_back(*ia - *ba);
    if (*ba < worst_acc) {
      worst_acc = *ba;
      out.baseline_worst_group = g;
    }
  }
  out.worst_group_delta = out.deltas[static_cast<std::size_t>(out.baseline_worst_group)];

  bool all_zero = true, all_up = true, all_down = true, any_down = false;
  for (double d : out.deltas) {
    const int sign = d > tolerance ? 1 : (d < -tolerance ? -1 : 0);
    all_zero &= sign == 0;
    all_up &= sign == 1;
    all_down &= sign == -1;
    any_down |= sign == -1;
  }
  if (all_zero) out.verdict = Verdict::unchanged;
  else if (all_up) out.verdict = Verdict::pareto_improvement;
  else if (all_down) out.verdict = Verdict::leveling_down;
  else if (out.worst_group_delta > tolerance && any_down) out.verdict = Verdict::trade_off;
  else out.verdict = Verdict::pareto_degradation_partial;
  return out;
}

}  // namespace fairkit
