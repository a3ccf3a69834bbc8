#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "fairkit/data.hpp"
#include "fairkit/decomposition.hpp"
#include "fairkit/rng.hpp"
#include "fairkit/stats.hpp"

using namespace fairkit;

namespace {

// ---------------------------------------------------------------------------
// Enumeration oracle: a discrete domain of points with known P(Y=1|x), all
// training sets of a fixed size enumerated exhaustively. Label randomness is
// expanded into equiprobable "tickets" (probabilities in quarters), so the
// uniform enumeration IS the exact distribution and the estimator's
// unweighted replicate math applies verbatim.
// ---------------------------------------------------------------------------

struct DiscreteDomain {
  Eigen::MatrixXd points;  // one row per point, 1-d features
  std::vector<double> p1;  // P(Y=1 | x), multiples of 0.25
};

/// Deterministic 1-NN: label of the nearest training row, distance ties
/// broken by the earlier row in the tuple.
Eigen::VectorXd one_nn_predict(const Eigen::MatrixXd& train_x, const Eigen::VectorXi& train_y,
                               const Eigen::MatrixXd& test_x) {
  Eigen::VectorXd out(test_x.rows());
  for (Eigen::Index i = 0; i < test_x.rows(); ++i) {
    Eigen::Index best = 0;
    double best_dist = (train_x.row(0) - test_x.row(i)).squaredNorm();
    for (Eigen::Index j = 1; j < train_x.rows(); ++j) {
      const double d = (train_x.row(j) - test_x.row(i)).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = j;
      }
    }
    out[i] = static_cast<double>(train_y[best]);
  }
  return out;
}

struct Enumeration {
  // scores[t](i): prediction of the model trained on tuple t at domain point i
  std::vector<Eigen::VectorXd> scores;
};

/// All training tuples of `size` slots; each slot enumerates (domain point x
/// 4 label tickets), so every tuple is equiprobable.
Enumeration enumerate_training_sets(const DiscreteDomain& dom, int size) {
  const int n = static_cast<int>(dom.points.rows());
  const int slots = n * 4;
  long total = 1;
  for (int s = 0; s < size; ++s) total *= slots;

  Enumeration out;
  Eigen::MatrixXd train_x(size, dom.points.cols());
  Eigen::VectorXi train_y(size);
  for (long code = 0; code < total; ++code) {
    long c = code;
    for (int s = 0; s < size; ++s) {
      const int slot = static_cast<int>(c % slots);
      c /= slots;
      const int point = slot / 4;
      const int ticket = slot % 4;
      train_x.row(s) = dom.points.row(point);
      // ticket < 4*p1 has label 1: exactly probability p1 in quarters
      train_y[s] = ticket < static_cast<int>(std::lround(4.0 * dom.p1[static_cast<std::size_t>(point)])) ? 1 : 0;
    }
    out.scores.push_back(one_nn_predict(train_x, train_y, dom.points));
  }
  return out;
}

/// Direct mean loss over all training sets: err(x_i) = E_T E_{y|x} L(y, f_T(x)).
double oracle_err(const Enumeration& en, const DiscreteDomain& dom, int i, LossKind loss) {
  double total = 0.0;
  const double p = dom.p1[static_cast<std::size_t>(i)];
  for (const auto& s : en.scores) {
    if (loss == LossKind::squared) {
      total += p * (1.0 - s[i]) * (1.0 - s[i]) + (1.0 - p) * s[i] * s[i];
    } else {
      const double pred = s[i] >= 0.5 ? 1.0 : 0.0;
      total += pred == 1.0 ? 1.0 - p : p;
    }
  }
  return total / static_cast<double>(en.scores.size());
}

DiscreteDomain small_domain() {
  DiscreteDomain dom;
  dom.points.resize(5, 1);
  dom.points << -2.0, -1.0, 0.0, 1.0, 2.0;
  dom.p1 = {0.0, 0.25, 0.5, 0.75, 1.0};
  return dom;
}

Dataset tiny_base(Rng& rng, Eigen::Index n) {
  Dataset ds;
  ds.features.resize(n, 1);
  ds.labels.resize(n);
  ds.groups.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.features(i, 0) = rng.normal();
    ds.labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    ds.groups[i] = static_cast<int>(i % 2);
  }
  ds.group_names = {"a", "b"};
  return ds;
}

}  // namespace

TEST_CASE("optimal_prediction per loss kind") {
  SUBCASE("zero-one at p=0.8: majority label, noise 0.2") {
    const auto opt = optimal_prediction(0.8, LossKind::zero_one);
    CHECK(opt.y_star == 1.0);
    CHECK(opt.noise == doctest::Approx(0.2));
  }
  SUBCASE("squared at p=0.8: mean, Bernoulli variance") {
    const auto opt = optimal_prediction(0.8, LossKind::squared);
    CHECK(opt.y_star == doctest::Approx(0.8));
    CHECK(opt.noise == doctest::Approx(0.16));
  }
  SUBCASE("single-label mode has zero noise") {
    CHECK(optimal_prediction(1.0, LossKind::zero_one).noise == 0.0);
    CHECK(optimal_prediction(0.0, LossKind::squared).noise == 0.0);
  }
  CHECK_THROWS_AS(optimal_prediction(1.5, LossKind::squared), ValidationError);
}

TEST_CASE("main_prediction: mode for zero-one, mean for squared") {
  Eigen::VectorXd votes(3);
  votes << 1.0, 1.0, 0.0;
  CHECK(main_prediction(votes, LossKind::zero_one) == 1.0);
  // mode minimizes expected zero-one disagreement: enumerate both candidates
  for (double candidate : {0.0, 1.0}) {
    double loss = 0;
    for (int r = 0; r < 3; ++r) loss += votes[r] == candidate ? 0.0 : 1.0;
    if (candidate == 1.0) CHECK(loss == doctest::Approx(1.0));
    else CHECK(loss == doctest::Approx(2.0));
  }

  Eigen::VectorXd unanimous = Eigen::VectorXd::Ones(4);
  CHECK(main_prediction(unanimous, LossKind::zero_one) == 1.0);

  Eigen::VectorXd scores(3);
  scores << 0.2, 0.4, 0.6;
  CHECK(main_prediction(scores, LossKind::squared) == doctest::Approx(0.4));

  bool tie = false;
  Eigen::VectorXd split(4);
  split << 1.0, 1.0, 0.0, 0.0;
  CHECK(main_prediction(split, LossKind::zero_one, &tie) == 1.0);  // ties to 1
  CHECK(tie);

  Eigen::VectorXd empty(0);
  CHECK_THROWS_AS(main_prediction(empty, LossKind::zero_one), ValidationError);
}

TEST_CASE("decomposition identity on the exhaustive instance (criterion oracle)") {
  const DiscreteDomain dom = small_domain();
  for (int train_size : {2, 3}) {
    const Enumeration en = enumerate_training_sets(dom, train_size);
    const Eigen::Index reps = static_cast<Eigen::Index>(en.scores.size());
    for (const LossKind loss : {LossKind::squared, LossKind::zero_one}) {
      for (int i = 0; i < 5; ++i) {
        Eigen::VectorXd scores(reps);
        for (Eigen::Index r = 0; r < reps; ++r) scores[r] = en.scores[static_cast<std::size_t>(r)][i];
        const PointDecomposition pd =
            decompose_from_replicates(scores, dom.p1[static_cast<std::size_t>(i)], loss);
        const double want = oracle_err(en, dom, i, loss);
        const double reconstructed = pd.c1 * pd.noise + pd.bias + pd.c2 * pd.variance;
        CHECK(std::fabs(reconstructed - want) < 1e-10);
        CHECK(std::fabs(pd.err - want) < 1e-10);
        CHECK(pd.noise >= 0.0);
        CHECK(pd.bias >= 0.0);
        CHECK(pd.variance >= 0.0);
      }
    }
  }
}

TEST_CASE("squared loss specializes to err = N + B + V exactly") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd scores(9);
    for (Eigen::Index r = 0; r < 9; ++r) scores[r] = rng.uniform01();
    const double p = rng.uniform01();
    const PointDecomposition pd = decompose_from_replicates(scores, p, LossKind::squared);
    CHECK(pd.c1 == 1.0);
    CHECK(pd.c2 == 1.0);
    CHECK(std::fabs(pd.err - (pd.noise + pd.bias + pd.variance)) < 1e-12);
  }
}

TEST_CASE("decompose_point: constant perfect and constant wrong learners") {
  Rng rng(3);
  const Dataset base = tiny_base(rng, 12);
  DecomposeConfig cfg;
  cfg.replicates = 7;
  cfg.loss = LossKind::zero_one;
  Eigen::VectorXd x(1);
  x << 0.3;

  SUBCASE("learner that always predicts y_star") {
    // cond says p = 0.8 so y_star = 1; trainer ignores data, scores 1
    TrueConditional cond = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.8; };
    Trainer trainer = [](const Dataset&, std::uint64_t) -> Predictor {
      return [](const Eigen::Ref<const Eigen::MatrixXd>& q) {
        return Eigen::VectorXd::Constant(q.rows(), 1.0);
      };
    };
    const PointDecomposition pd = decompose_point(x, 1, &cond, trainer, base, cfg);
    CHECK(pd.bias == 0.0);
    CHECK(pd.variance == 0.0);
    CHECK(pd.c1 == 1.0);  // every replicate agrees with y_star
    CHECK(pd.err == doctest::Approx(pd.c1 * pd.noise).epsilon(1e-12));
    CHECK(pd.noise == doctest::Approx(0.2));
  }

  SUBCASE("constant wrong learner: B = 1, V = 0, err = 1") {
    TrueConditional cond = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.0; };
    Trainer trainer = [](const Dataset&, std::uint64_t) -> Predictor {
      return [](const Eigen::Ref<const Eigen::MatrixXd>& q) {
        return Eigen::VectorXd::Constant(q.rows(), 1.0);
      };
    };
    const PointDecomposition pd = decompose_point(x, 0, &cond, trainer, base, cfg);
    CHECK(pd.bias == 1.0);
    CHECK(pd.variance == 0.0);
    CHECK(pd.noise == 0.0);
    CHECK(pd.err == doctest::Approx(1.0));
    // reconstruction still exact: c1 N + B + c2 V = 1
    CHECK(pd.c1 * pd.noise + pd.bias + pd.c2 * pd.variance == doctest::Approx(1.0));
  }
}

TEST_CASE("single-label mode sets y_star to the observed label with zero noise") {
  Rng rng(5);
  const Dataset base = tiny_base(rng, 10);
  DecomposeConfig cfg;
  cfg.replicates = 5;
  cfg.loss = LossKind::zero_one;
  Trainer trainer = [](const Dataset&, std::uint64_t) -> Predictor {
    return [](const Eigen::Ref<const Eigen::MatrixXd>& q) {
      return Eigen::VectorXd::Constant(q.rows(), 0.9);
    };
  };
  Eigen::VectorXd x(1);
  x << -0.4;
  const PointDecomposition pd = decompose_point(x, 0, nullptr, trainer, base, cfg);
  CHECK(pd.noise == 0.0);
  CHECK(pd.y_star == 0.0);
  CHECK(pd.bias == 1.0);  // constant-positive learner vs observed 0
}

TEST_CASE("FNR decomposition equals zero-one restricted to observed positives") {
  Rng rng(11);
  const Dataset base = tiny_base(rng, 30);
  Dataset test = tiny_base(rng, 40);
  TrueConditional cond = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return 1.0 / (1.0 + std::exp(-x[0]));
  };
  // cheap stochastic trainer: logistic-like threshold on the bootstrap mean
  Trainer trainer = [](const Dataset& sample, std::uint64_t) -> Predictor {
    const double mean_label = sample.labels.cast<double>().mean();
    return [mean_label](const Eigen::Ref<const Eigen::MatrixXd>& q) {
      Eigen::VectorXd s(q.rows());
      for (Eigen::Index i = 0; i < q.rows(); ++i)
        s[i] = 1.0 / (1.0 + std::exp(-(q(i, 0) + mean_label - 0.5)));
      return s;
    };
  };
  DecomposeConfig cfg;
  cfg.replicates = 9;
  cfg.seed = 4;

  cfg.loss = LossKind::false_negative_rate;
  const DecompositionReport fnr = decompose_fairness(test, &cond, trainer, base, cfg);
  cfg.loss = LossKind::zero_one;
  const DecompositionReport zo = decompose_fairness(test, &cond, trainer, base, cfg);

  // match FNR points against the zero-one points with observed label 1
  std::size_t matched = 0;
  for (std::size_t i = 0; i < fnr.point_rows.size(); ++i) {
    const Eigen::Index row = fnr.point_rows[i];
    CHECK(test.labels[row] == 1);
    for (std::size_t j = 0; j < zo.point_rows.size(); ++j) {
      if (zo.point_rows[j] != row) continue;
      CHECK(fnr.points[i].err == zo.points[j].err);
      CHECK(fnr.points[i].bias == zo.points[j].bias);
      CHECK(fnr.points[i].variance == zo.points[j].variance);
      CHECK(fnr.points[i].noise == zo.points[j].noise);
      ++matched;
    }
  }
  CHECK(matched == fnr.point_rows.size());
}

TEST_CASE("symmetric groups: E_fair within 3 standard errors of zero") {
  // identical group distributions, group-blind stochastic learner
  Rng rng(17);
  Dataset base;
  const Eigen::Index n = 200;
  base.features.resize(n, 1);
  base.labels.resize(n);
  base.groups.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    base.features(i, 0) = (y == 1 ? 1.0 : -1.0) + rng.normal();
    base.labels[i] = y;
    base.groups[i] = static_cast<int>(i % 2);  // groups identically distributed
  }
  base.group_names = {"a", "b"};
  Dataset test = base;  // same distribution; reuse is fine for this check

  TrueConditional cond = [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    const double l1 = -0.5 * (x[0] - 1.0) * (x[0] - 1.0);
    const double l0 = -0.5 * (x[0] + 1.0) * (x[0] + 1.0);
    return std::exp(l1) / (std::exp(l1) + std::exp(l0));
  };
  Trainer trainer = [](const Dataset& sample, std::uint64_t) -> Predictor {
    // decision stump at the midpoint of the per-label means
    double m1 = 0, m0 = 0;
    long c1 = 0, c0 = 0;
    for (Eigen::Index i = 0; i < sample.size(); ++i) {
      if (sample.labels[i] == 1) {
        m1 += sample.features(i, 0);
        ++c1;
      } else {
        m0 += sample.features(i, 0);
        ++c0;
      }
    }
    const double threshold = (c1 > 0 && c0 > 0) ? 0.5 * (m1 / c1 + m0 / c0) : 0.0;
    return [threshold](const Eigen::Ref<const Eigen::MatrixXd>& q) {
      Eigen::VectorXd s(q.rows());
      for (Eigen::Index i = 0; i < q.rows(); ++i) s[i] = q(i, 0) >= threshold ? 1.0 : 0.0;
      return s;
    };
  };
  DecomposeConfig cfg;
  cfg.replicates = 41;
  cfg.loss = LossKind::zero_one;
  cfg.seed = 23;
  const DecompositionReport report = decompose_fairness(test, &cond, trainer, base, cfg);
  CHECK(report.e_fair <= 3.0 * report.e_fair_stderr_total + 1e-9);
  CHECK(report.replicates_used == 41);
}

TEST_CASE("Monte-Carlo standard error of V scales as 1/sqrt(R)") {
  Rng data_rng(29);
  const Dataset base = tiny_base(data_rng, 40);
  Eigen::VectorXd x(1);
  x << 0.0;
  TrueConditional cond = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.7; };
  // stochastic learner: score = mean bootstrap label (squared-loss V is its variance)
  Trainer trainer = [](const Dataset& sample, std::uint64_t) -> Predictor {
    const double mean_label = sample.labels.cast<double>().mean();
    return [mean_label](const Eigen::Ref<const Eigen::MatrixXd>& q) {
      return Eigen::VectorXd::Constant(q.rows(), mean_label);
    };
  };

  const auto stderr_at = [&](int reps) {
    std::vector<double> vs;
    DecomposeConfig cfg;
    cfg.replicates = reps;
    cfg.loss = LossKind::squared;
    for (int run = 0; run < 60; ++run) {
      cfg.seed = static_cast<std::uint64_t>(run) * 977 + 13;
      vs.push_back(decompose_point(x, 1, &cond, trainer, base, cfg).variance);
    }
    return mean_std(vs).stddev;
  };

  const double se10 = stderr_at(10);
  const double se40 = stderr_at(40);
  const double se160 = stderr_at(160);
  // ideal ratios are 2; within a factor of 2 either way
  CHECK(se10 / se40 > 1.0);
  CHECK(se10 / se40 < 4.0);
  CHECK(se40 / se160 > 1.0);
  CHECK(se40 / se160 < 4.0);
}

TEST_CASE("failed replicates are skipped; majority failure aborts") {
  Rng rng(31);
  const Dataset base = tiny_base(rng, 10);
  Dataset test = tiny_base(rng, 8);
  TrueConditional cond = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.5; };

  int calls = 0;
  Trainer flaky = [&calls](const Dataset&, std::uint64_t) -> Predictor {
    if (++calls % 3 == 0) throw DivergenceError("synthetic divergence", calls);
    return [](const Eigen::Ref<const Eigen::MatrixXd>& q) {
      return Eigen::VectorXd::Constant(q.rows(), 1.0);
    };
  };
  DecomposeConfig cfg;
  cfg.replicates = 9;
  cfg.loss = LossKind::zero_one;
  const DecompositionReport report = decompose_fairness(test, &cond, flaky, base, cfg);
  CHECK(report.replicates_used == 6);
  CHECK(report.replicates_requested == 9);

  Trainer broken = [](const Dataset&, std::uint64_t) -> Predictor {
    throw DivergenceError("always", 0);
  };
  CHECK_THROWS_AS(decompose_fairness(test, &cond, broken, base, cfg), ComputeError);
}

TEST_CASE("decompose_fairness validates inputs") {
  Rng rng(37);
  const Dataset base = tiny_base(rng, 10);
  Dataset test = tiny_base(rng, 6);
  TrueConditional cond = [](const Eigen::Ref<const Eigen::VectorXd>&) { return 0.5; };
  Trainer trainer = [](const Dataset&, std::uint64_t) -> Predictor {
    return [](const Eigen::Ref<const Eigen::MatrixXd>& q) {
      return Eigen::VectorXd::Constant(q.rows(), 0.4);
    };
  };
  DecomposeConfig cfg;
  cfg.replicates = 1;
  CHECK_THROWS_AS(decompose_fairness(test, &cond, trainer, base, cfg), ValidationError);

  cfg.replicates = 4;
  cfg.loss = LossKind::false_negative_rate;
  for (Eigen::Index i = 0; i < test.size(); ++i) test.labels[i] = i % 2;
  // all positives sit in group 1 after this relabeling: group 0 absent
  for (Eigen::Index i = 0; i < test.size(); ++i) test.groups[i] = static_cast<int>(i % 2);
  CHECK_THROWS_AS(decompose_fairness(test, &cond, trainer, base, cfg), ValidationError);
}
