#include "fairkit/decomposition.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "fairkit/rng.hpp"
#include "fairkit/stats.hpp"

namespace fairkit {

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::squared: return "squared";
    case LossKind::zero_one: return "zero_one";
    case LossKind::false_negative_rate: return "false_negative_rate";
  }
  return "unknown";
}

OptimalPrediction optimal_prediction(double p1, LossKind loss) {
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw ValidationError("P(Y=1|x) must be in [0,1]");
  if (loss == LossKind::squared) return {p1, p1 * (1.0 - p1)};
  const double y_star = p1 >= 0.5 ? 1.0 : 0.0;
  return {y_star, std::min(p1, 1.0 - p1)};
}

double main_prediction(const Eigen::Ref<const Eigen::VectorXd>& replicate_scores, LossKind loss,
                       bool* tie) {
  if (replicate_scores.size() == 0) throw ValidationError("no replicate predictions");
  if (tie) *tie = false;
  if (loss == LossKind::squared) return replicate_scores.mean();
  Eigen::Index ones = 0;
  for (Eigen::Index i = 0; i < replicate_scores.size(); ++i)
    if (replicate_scores[i] >= 0.5) ++ones;
  if (2 * ones == replicate_scores.size() && tie) *tie = true;
  return 2 * ones >= replicate_scores.size() ? 1.0 : 0.0;  // ties to 1
}

PointDecomposition decompose_from_replicates(const Eigen::Ref<const Eigen::VectorXd>& scores,
                                             double p1, LossKind loss) {
  PointDecomposition out;
  out.replicate_count = static_cast<int>(scores.size());
  const OptimalPrediction opt = optimal_prediction(p1, loss);
  out.y_star = opt.y_star;
  out.noise = opt.noise;
  out.y_main = main_prediction(scores, loss, &out.vote_tie);

  const double r = static_cast<double>(scores.size());
  if (loss == LossKind::squared) {
    out.bias = (out.y_star - out.y_main) * (out.y_star - out.y_main);
    double v = 0.0, err = 0.0;
    for (Eigen::Index i = 0; i < scores.size(); ++i) {
      v += (scores[i] - out.y_main) * (scores[i] - out.y_main);
      err += opt.noise + (p1 - scores[i]) * (p1 - scores[i]);
    }
    out.variance = v / r;
    out.err = err / r;
    out.c1 = 1.0;
    out.c2 = 1.0;
    return out;
  }

  // zero-one (fnr is zero-one on a filtered test set)
  double agree_main = 0.0, agree_star = 0.0, err = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double pred = scores[i] >= 0.5 ? 1.0 : 0.0;
    agree_main += pred == out.y_main ? 1.0 : 0.0;
    agree_star += pred == out.y_star ? 1.0 : 0.0;
    err += pred == 1.0 ? 1.0 - p1 : p1;  // E_{y|x} L(y, pred)
  }
  out.bias = out.y_star == out.y_main ? 0.0 : 1.0;
  out.variance = 1.0 - agree_main / r;
  out.c1 = 2.0 * agree_star / r - 1.0;
  out.c2 = out.y_main == out.y_star ? 1.0 : -1.0;
  out.err = err / r;
  return out;
}

namespace {

struct GroupAccum {
  Eigen::Index count = 0;
  double nw = 0, b = 0, vw = 0, nr = 0, vr = 0, err = 0;
};

}  // namespace

DecompositionReport decompose_fairness(const Dataset& test, const TrueConditional* cond,
                                       const Trainer& trainer, const Dataset& base,
                                       const DecomposeConfig& cfg) {
  validate_dataset(test);
  validate_dataset(base);
  if (cfg.replicates < 2) throw ValidationError("need at least 2 replicates");

  // FNR restricts attention to observed positives
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < test.size(); ++i)
    if (cfg.loss != LossKind::false_negative_rate || test.labels[i] == 1) rows.push_back(i);
  if (rows.empty()) throw ValidationError("no test rows with Y=1 for the FNR decomposition");
  for (int g = 0; g < test.num_groups(); ++g) {
    bool seen = false;
    for (auto r : rows) seen |= test.groups[r] == g;
    if (!seen)
      throw ValidationError("group '" + test.group_names[static_cast<std::size_t>(g)] +
                            "' absent from the (filtered) test split");
  }

  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), test.dim());
  for (std::size_t i = 0; i < rows.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = test.features.row(rows[i]);

  // train replicates and score the test rows
  std::vector<Eigen::VectorXd> replicate_scores;
  replicate_scores.reserve(static_cast<std::size_t>(cfg.replicates));
  for (int r = 0; r < cfg.replicates; ++r) {
    const std::uint64_t rep_seed = derive_seed(cfg.seed, 0xdec0, static_cast<std::uint64_t>(r));
    try {
      const Dataset sample = cfg.resample.draw(base, rep_seed);
      const Predictor predictor = trainer(sample, rep_seed);
      Eigen::VectorXd s = predictor(x);
      if (s.size() != static_cast<Eigen::Index>(rows.size()))
        throw ComputeError("predictor returned wrong number of scores");
      replicate_scores.push_back(std::move(s));
    } catch (const DivergenceError&) {
      // replicate skipped; counted below
    }
  }
  const int used = static_cast<int>(replicate_scores.size());
  if (2 * used < cfg.replicates)
    throw ComputeError("fewer than half of the replicates trained successfully (" +
                       std::to_string(used) + "/" + std::to_string(cfg.replicates) + ")");

  DecompositionReport report;
  report.replicates_requested = cfg.replicates;
  report.replicates_used = used;
  report.loss = cfg.loss;
  report.resample_mode = cfg.resample.name();
  report.seed = cfg.seed;
  report.single_label_mode = cond == nullptr;

  // per-replicate per-group mean expected losses, for the stderr of the gap
  Eigen::MatrixXd group_err = Eigen::MatrixXd::Zero(used, test.num_groups());

  std::vector<GroupAccum> acc(static_cast<std::size_t>(test.num_groups()));
  Eigen::VectorXd scores(used);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Eigen::Index row = rows[i];
    for (int r = 0; r < used; ++r) scores[r] = replicate_scores[static_cast<std::size_t>(r)][static_cast<Eigen::Index>(i)];
    const double p1 = cond ? (*cond)(test.features.row(row).transpose())
                           : static_cast<double>(test.labels[row]);
    PointDecomposition pd = decompose_from_replicates(scores, p1, cfg.loss);
    pd.row = row;
    if (pd.vote_tie) ++report.vote_ties;

    GroupAccum& a = acc[static_cast<std::size_t>(test.groups[row])];
    ++a.count;
    a.nw += pd.c1 * pd.noise;
    a.b += pd.bias;
    a.vw += pd.c2 * pd.variance;
    a.nr += pd.noise;
    a.vr += pd.variance;
    a.err += pd.err;

    for (int r = 0; r < used; ++r) {
      double el;  // E_{y|x} L(y, f_r(x))
      if (cfg.loss == LossKind::squared)
        el = p1 * (1.0 - p1) + (p1 - scores[r]) * (p1 - scores[r]);
      else
        el = scores[r] >= 0.5 ? 1.0 - p1 : p1;
      group_err(r, test.groups[row]) += el;
    }

    report.points.push_back(std::move(pd));
    report.point_rows.push_back(row);
  }

  for (int g = 0; g < test.num_groups(); ++g) {
    const GroupAccum& a = acc[static_cast<std::size_t>(g)];
    GroupDecomposition gd;
    gd.name = test.group_names[static_cast<std::size_t>(g)];
    gd.count = a.count;
    const double n = static_cast<double>(a.count);
    gd.noise_weighted = a.nw / n;
    gd.bias = a.b / n;
    gd.variance_weighted = a.vw / n;
    gd.noise_raw = a.nr / n;
    gd.variance_raw = a.vr / n;
    gd.mean_err = a.err / n;
    gd.regime_ratio_raw = gd.variance_raw > 0.0
                              ? (gd.bias + gd.noise_raw) / gd.variance_raw
                              : std::numeric_limits<double>::infinity();
    group_err.col(g) /= n;
    report.groups.push_back(std::move(gd));
  }

  if (test.num_groups() == 2) {
    const auto sum = [](const GroupDecomposition& g) {
      return g.noise_weighted + g.bias + g.variance_weighted;
    };
    report.e_fair = std::fabs(sum(report.groups[0]) - sum(report.groups[1]));
    report.variance_gap =
        std::fabs(report.groups[0].variance_weighted - report.groups[1].variance_weighted);
    // gap = mean over replicates of (err_A^(r) - err_B^(r)); replicates are
    // independent, so the stderr comes from their spread
    std::vector<double> gaps;
    for (int r = 0; r < used; ++r) gaps.push_back(group_err(r, 0) - group_err(r, 1));
    const MeanStd ms = mean_std(gaps);
    report.e_fair_stderr = ms.stddev / std::sqrt(static_cast<double>(used));
    // test-sampling term: spread of per-point errs within each group
    double point_var = 0.0;
    for (int g = 0; g < 2; ++g) {
      std::vector<double> errs;
      for (const auto& p : report.points)
        if (test.groups[p.row] == g) errs.push_back(p.err);
      const MeanStd pm = mean_std(errs);
      point_var += pm.stddev * pm.stddev / static_cast<double>(errs.size());
    }
    report.e_fair_stderr_total =
        std::sqrt(report.e_fair_stderr * report.e_fair_stderr + point_var);
  }
  return report;
}

PointDecomposition decompose_point(const Eigen::Ref<const Eigen::VectorXd>& x, int y_obs,
                                   const TrueConditional* cond, const Trainer& trainer,
                                   const Dataset& base, const DecomposeConfig& cfg) {
  Dataset single;
  single.features = x.transpose();
  single.labels = Eigen::VectorXi::Constant(1, y_obs);
  single.groups = Eigen::VectorXi::Zero(1);
  single.group_names = {"point"};
  const DecompositionReport report = decompose_fairness(single, cond, trainer, base, cfg);
  return report.points.at(0);
}

namespace {

nlohmann::json group_json(const GroupDecomposition& g) {
  return {
      {"name", g.name},
      {"count", g.count},
      {"noise_weighted", g.noise_weighted},
      {"bias", g.bias},
      {"variance_weighted", g.variance_weighted},
      {"noise_raw", g.noise_raw},
      {"variance_raw", g.variance_raw},
      {"mean_err", g.mean_err},
      {"regime_ratio_raw", std::isinf(g.regime_ratio_raw) ? nlohmann::json("inf")
                                                          : nlohmann::json(g.regime_ratio_raw)},
  };
}

}  // namespace

std::string report_to_json(const DecompositionReport& report) {
  nlohmann::json j;
  for (const auto& g : report.groups) j["groups"].push_back(group_json(g));
  j["e_fair"] = report.e_fair;
  j["e_fair_stderr"] = report.e_fair_stderr;
  j["e_fair_stderr_total"] = report.e_fair_stderr_total;
  j["variance_gap_weighted"] = report.variance_gap;
  j["replicates_requested"] = report.replicates_requested;
  j["replicates_used"] = report.replicates_used;
  j["loss"] = to_string(report.loss);
  j["resample_mode"] = report.resample_mode;
  j["seed"] = report.seed;
  j["single_label_mode"] = report.single_label_mode;
  j["vote_ties"] = report.vote_ties;
  j["notes"] = "aggregates: N_G = E[c1 N], B_G = E[B], V_G = E[c2 V]; e_fair uses the "
               "weighted forms; *_raw are unweighted means; regime_ratio_raw = (B+N)/V raw";
  return j.dump(2);
}

void write_point_csv(const DecompositionReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "row,y_star,y_main,noise,bias,variance,c1,c2,err,replicates,vote_tie\n";
  char buf[512];
  for (const auto& p : report.points) {
    std::snprintf(buf, sizeof(buf),
                  "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%d\n",
                  static_cast<long>(p.row), p.y_star, p.y_main, p.noise, p.bias, p.variance, p.c1,
                  p.c2, p.err, p.replicate_count, p.vote_tie ? 1 : 0);
    out << buf;
  }
}

}  // namespace fairkit
