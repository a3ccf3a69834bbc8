#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fairkit/models.hpp"
#include "oracles.hpp"

using namespace fairkit;

namespace {

Dataset random_batch(Rng& rng, Eigen::Index n, Eigen::Index d, int groups = 2) {
  Dataset ds;
  ds.features.resize(n, d);
  ds.labels.resize(n);
  ds.groups.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) ds.features(i, j) = rng.normal();
    ds.labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    ds.groups[i] = i < groups ? static_cast<int>(i) : static_cast<int>(rng.uniform_below(groups));
  }
  for (int g = 0; g < groups; ++g) ds.group_names.push_back("g" + std::to_string(g));
  return ds;
}

/// Batch where both groups are guaranteed positives.
Dataset batch_with_positives(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Dataset ds = random_batch(rng, n, d);
  ds.labels[0] = 1;
  ds.labels[1] = 1;  // rows 0/1 are groups 0/1 by construction
  return ds;
}

PredictionModel random_model(Rng& rng, ModelKind kind, Eigen::Index d, Eigen::Index h) {
  PredictionModel m = kind == ModelKind::logistic ? PredictionModel::logistic(d)
                                                  : PredictionModel::mlp(d, h, rng.raw());
  for (Eigen::Index i = 0; i < m.param_count(); ++i) m.parameters[i] += 0.5 * rng.normal();
  return m;
}

double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm()));
}

Dataset separable_instance(Rng& rng, Eigen::Index n) {
  Dataset ds;
  ds.features.resize(n, 2);
  ds.labels.resize(n);
  ds.groups.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = rng.bernoulli(0.5) ? 1 : 0;
    ds.features(i, 0) = (y == 1 ? 2.0 : -2.0) + 0.5 * rng.normal();
    ds.features(i, 1) = rng.normal();
    ds.labels[i] = y;
    ds.groups[i] = static_cast<int>(i % 2);
  }
  ds.group_names = {"a", "b"};
  return ds;
}

}  // namespace

TEST_CASE("zero models score one half") {
  const PredictionModel logistic = PredictionModel::logistic(3);
  Eigen::VectorXd x(3);
  x << 0.4, -2.0, 31.0;
  CHECK(predict_score(logistic, x) == doctest::Approx(0.5));

  // output-layer weights and bias zero => logit 0 regardless of W1
  PredictionModel mlp = PredictionModel::mlp(3, 8, 7);
  for (Eigen::Index i = 3 * 8 + 8; i < mlp.param_count(); ++i) mlp.parameters[i] = 0.0;
  CHECK(predict_score(mlp, x) == doctest::Approx(0.5));
}

TEST_CASE("logistic closed form: w=(1,-1), b=0 at x=(3,1)") {
  PredictionModel m = PredictionModel::logistic(2);
  m.parameters << 1.0, -1.0, 0.0;
  Eigen::VectorXd x(2);
  x << 3.0, 1.0;
  CHECK(predict_score(m, x) == doctest::Approx(0.880797).epsilon(1e-5));
}

TEST_CASE("scores stay strictly inside (0,1) for extreme inputs") {
  PredictionModel m = PredictionModel::logistic(1);
  m.parameters << 1000.0, 0.0;
  Eigen::VectorXd x(1);
  x << 700.0;
  const double hi = predict_score(m, x);
  x << -700.0;
  const double lo = predict_score(m, x);
  CHECK(hi < 1.0);
  CHECK(hi > 0.99);
  CHECK(lo > 0.0);
  CHECK(lo < 0.01);
}

TEST_CASE("predict rejects dimension mismatch") {
  const PredictionModel m = PredictionModel::logistic(2);
  Eigen::VectorXd x(3);
  x.setZero();
  CHECK_THROWS_AS(predict_score(m, x), ValidationError);
}

TEST_CASE("deo_regularizer values") {
  Rng rng(31);
  Dataset ds = batch_with_positives(rng, 40, 2);

  SUBCASE("constant scorer gives zero") {
    const PredictionModel m = PredictionModel::logistic(2);  // all scores 0.5
    CHECK(deo_regularizer(m, ds, {0, 1}) == doctest::Approx(0.0));
  }

  SUBCASE("hand-computed squared gap and symmetry") {
    // force disjoint score levels via a feature aligned with group membership
    for (Eigen::Index i = 0; i < ds.size(); ++i) ds.features(i, 0) = ds.groups[i] == 0 ? 2.0 : 0.0;
    PredictionModel m = PredictionModel::logistic(2);
    m.parameters << 1.0, 0.0, 0.0;  // score = sigmoid(x0): 0.880797 vs 0.5
    const double gap = 1.0 / (1.0 + std::exp(-2.0)) - 0.5;
    CHECK(deo_regularizer(m, ds, {0, 1}) == doctest::Approx(gap * gap).epsilon(1e-12));
    CHECK(deo_regularizer(m, ds, {0, 1}) == doctest::Approx(deo_regularizer(m, ds, {1, 0})));
  }

  SUBCASE("mean scores 0.9 vs 0.7 give 0.04") {
    // one positive per group with logits matching the target scores
    Dataset tiny;
    tiny.features.resize(2, 1);
    tiny.features << std::log(0.9 / 0.1), std::log(0.7 / 0.3);
    tiny.labels.resize(2);
    tiny.labels << 1, 1;
    tiny.groups.resize(2);
    tiny.groups << 0, 1;
    tiny.group_names = {"a", "b"};
    PredictionModel m = PredictionModel::logistic(1);
    m.parameters << 1.0, 0.0;
    CHECK(deo_regularizer(m, tiny, {0, 1}) == doctest::Approx(0.04).epsilon(1e-9));
  }

  SUBCASE("no positives in a group is an error, never silently zero") {
    for (Eigen::Index i = 0; i < ds.size(); ++i)
      if (ds.groups[i] == 1) ds.labels[i] = 0;
    const PredictionModel m = PredictionModel::logistic(2);
    CHECK_THROWS_AS(deo_regularizer(m, ds, {0, 1}), DegenerateGroupError);
  }
}

TEST_CASE("gradients match central finite differences (plain and regularized)") {
  Rng rng(422);
  for (const ModelKind kind : {ModelKind::logistic, ModelKind::mlp}) {
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::Index d = 2 + static_cast<Eigen::Index>(rng.uniform_below(3));
      const PredictionModel m = random_model(rng, kind, d, 5);
      const Dataset batch = batch_with_positives(rng, 24, d);
      for (const double reg : {0.0, 1.7}) {
        const LossResult lr = loss_and_gradient(m, batch, nullptr, reg, {0, 1});
        const Eigen::VectorXd fd = oracle::fd_gradient(m, batch, reg, {0, 1});
        CHECK(relative_error(lr.gradient, fd) < 1e-4);
      }
    }
  }
}

TEST_CASE("reg_weight 0 reduces bitwise to plain cross-entropy") {
  Rng rng(77);
  const Dataset batch = batch_with_positives(rng, 16, 3);
  const PredictionModel m = random_model(rng, ModelKind::mlp, 3, 4);
  const LossResult plain = loss_and_gradient(m, batch, nullptr, 0.0, {0, 1});
  const LossResult with_ctx = loss_and_gradient(m, batch, &batch, 0.0, {0, 1});
  CHECK(plain.loss == with_ctx.loss);
  CHECK(plain.gradient == with_ctx.gradient);
  CHECK(!plain.regularizer_applied);
}

TEST_CASE("loss is affine in reg_weight") {
  Rng rng(5);
  const Dataset batch = batch_with_positives(rng, 20, 2);
  const PredictionModel m = random_model(rng, ModelKind::logistic, 2, 0);
  const double l0 = loss_and_gradient(m, batch, nullptr, 0.0, {0, 1}).loss;
  const double l1 = loss_and_gradient(m, batch, nullptr, 1.0, {0, 1}).loss;
  const double l2 = loss_and_gradient(m, batch, nullptr, 2.0, {0, 1}).loss;
  const double l5 = loss_and_gradient(m, batch, nullptr, 5.0, {0, 1}).loss;
  CHECK(std::fabs(l2 - (l0 + 2.0 * (l1 - l0))) < 1e-10);
  CHECK(std::fabs(l5 - (l0 + 5.0 * (l1 - l0))) < 1e-10);
}

TEST_CASE("duplicating every batch row leaves loss and gradient unchanged") {
  Rng rng(6);
  const Dataset batch = batch_with_positives(rng, 12, 2);
  std::vector<Eigen::Index> twice;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    twice.push_back(i);
    twice.push_back(i);
  }
  const Dataset doubled = batch.select(twice);
  const PredictionModel m = random_model(rng, ModelKind::logistic, 2, 0);
  const LossResult a = loss_and_gradient(m, batch, nullptr, 1.3, {0, 1});
  const LossResult b = loss_and_gradient(m, doubled, nullptr, 1.3, {0, 1});
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-12));
  CHECK(relative_error(a.gradient, b.gradient) < 1e-12);
}

TEST_CASE("batch without group positives skips the regularizer term") {
  Rng rng(8);
  Dataset batch = random_batch(rng, 10, 2);
  for (Eigen::Index i = 0; i < batch.size(); ++i)
    if (batch.groups[i] == 1) batch.labels[i] = 0;
  const PredictionModel m = random_model(rng, ModelKind::logistic, 2, 0);
  const LossResult lr = loss_and_gradient(m, batch, nullptr, 2.0, {0, 1});
  CHECK(!lr.regularizer_applied);
  const LossResult plain = loss_and_gradient(m, batch, nullptr, 0.0, {0, 1});
  CHECK(lr.loss == plain.loss);

  // but a context with the same degeneracy is a hard error
  CHECK_THROWS_AS(loss_and_gradient(m, batch, &batch, 2.0, {0, 1}), DegenerateGroupError);
}

TEST_CASE("train: steps=0 returns the initial model and evaluation") {
  Rng rng(9);
  const Dataset train_ds = separable_instance(rng, 60);
  const Dataset eval_ds = separable_instance(rng, 40);
  const PredictionModel init = PredictionModel::logistic(2);
  TrainConfig cfg;
  cfg.steps = 0;
  const TrainResult r = train(init, train_ds, eval_ds, cfg, Objective::overall_accuracy);
  CHECK(r.model.parameters == init.parameters);
  CHECK(r.checkpoints.size() == 1);
  CHECK(r.best_index == 0);
  CHECK(r.best().step == 0);
}

TEST_CASE("train separates a separable instance") {
  Rng rng(10);
  const Dataset train_ds = separable_instance(rng, 300);
  const Dataset eval_ds = separable_instance(rng, 200);
  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.5;
  cfg.momentum = 0.9;
  cfg.eval_every = 200;
  cfg.seed = 3;
  const TrainResult r = train(PredictionModel::logistic(2), train_ds, eval_ds, cfg,
                              Objective::overall_accuracy);
  const Eigen::VectorXi pred = predict_labels(r.model, train_ds.features);
  const GroupReport report = confusion_by_group(pred, train_ds);
  CHECK(report.overall_accuracy >= 0.99);
  // margin-based check: the fitted direction matches the generating one
  CHECK(r.model.parameters[0] > 0.0);
  CHECK(std::fabs(r.model.parameters[1]) < r.model.parameters[0]);
}

TEST_CASE("train is bitwise deterministic given the seed") {
  Rng rng(11);
  const Dataset train_ds = separable_instance(rng, 100);
  const Dataset eval_ds = separable_instance(rng, 60);
  TrainConfig cfg;
  cfg.steps = 300;
  cfg.eval_every = 50;
  cfg.seed = 12345;
  const PredictionModel init = PredictionModel::mlp(2, 8, 4);
  const TrainResult a = train(init, train_ds, eval_ds, cfg, Objective::min_group_accuracy);
  const TrainResult b = train(init, train_ds, eval_ds, cfg, Objective::min_group_accuracy);
  CHECK(a.model.parameters == b.model.parameters);
  REQUIRE(a.checkpoints.size() == b.checkpoints.size());
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i)
    CHECK(a.checkpoints[i].parameters == b.checkpoints[i].parameters);
}

TEST_CASE("divergence raises with the step index") {
  Rng rng(12);
  const Dataset train_ds = separable_instance(rng, 50);
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.learning_rate = 1e308;  // parameters overflow almost immediately
  cfg.eval_every = 10;
  try {
    train(PredictionModel::logistic(2), train_ds, train_ds, cfg, Objective::overall_accuracy);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.step >= 1);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("an over-parameterized MLP interpolates 100 arbitrary labels") {
  Rng rng(13);
  Dataset ds;
  const Eigen::Index n = 100;
  ds.features.resize(n, 2);
  ds.labels.resize(n);
  ds.groups.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    ds.features(i, 0) = 4.0 * rng.uniform01() - 2.0;
    ds.features(i, 1) = 4.0 * rng.uniform01() - 2.0;
    ds.labels[i] = rng.bernoulli(0.5) ? 1 : 0;  // labels carry no structure
    ds.groups[i] = static_cast<int>(i % 2);
  }
  ds.group_names = {"a", "b"};

  TrainConfig cfg;
  cfg.steps = 20000;
  cfg.batch_size = 100;
  cfg.learning_rate = 1.0;
  cfg.momentum = 0.9;
  cfg.eval_every = 4000;
  cfg.seed = 21;
  const TrainResult r =
      train(PredictionModel::mlp(2, 256, 77), ds, ds, cfg, Objective::overall_accuracy);
  const GroupReport report = confusion_by_group(predict_labels(r.model, ds.features), ds);
  CHECK(report.overall_accuracy >= 0.99);  // <= 1% training error
}

TEST_CASE("model JSON round-trip preserves parameters exactly") {
  Rng rng(14);
  const PredictionModel m = random_model(rng, ModelKind::mlp, 3, 5);
  const PredictionModel back = model_from_json(model_to_json(m));
  CHECK(back.kind == m.kind);
  CHECK(back.input_dim == m.input_dim);
  CHECK(back.hidden == m.hidden);
  CHECK(back.parameters == m.parameters);

  CHECK_THROWS_AS(model_from_json("{\"kind\":\"tree\"}"), ValidationError);
  CHECK_THROWS_AS(model_from_json("not json"), ValidationError);
}
