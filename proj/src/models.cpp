#include "fairkit/models.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace fairkit {

namespace {

constexpr double kScoreFloor = 1e-15;

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z))); }

struct ParamView {
  // mlp layout: W1 (h x d, column-major), b1 (h), w2 (h), b2.
  // logistic reuses the (w2, b2) slots for its (w, b); w1/b1 stay empty.
  Eigen::Map<const Eigen::MatrixXd> w1;
  Eigen::Map<const Eigen::VectorXd> b1;
  Eigen::Map<const Eigen::VectorXd> w2;
  double b2;
};

ParamView view(const PredictionModel& m) {
  const double* p = m.parameters.data();
  if (m.kind == ModelKind::logistic) {
    return {Eigen::Map<const Eigen::MatrixXd>(nullptr, 0, 0),
            Eigen::Map<const Eigen::VectorXd>(nullptr, 0),
            Eigen::Map<const Eigen::VectorXd>(p, m.input_dim), p[m.input_dim]};
  }
  const Eigen::Index h = m.hidden, d = m.input_dim;
  return {Eigen::Map<const Eigen::MatrixXd>(p, h, d),
          Eigen::Map<const Eigen::VectorXd>(p + h * d, h),
          Eigen::Map<const Eigen::VectorXd>(p + h * d + h, h), p[h * d + 2 * h]};
}

struct Forward {
  Eigen::VectorXd z;   // logits
  Eigen::MatrixXd a1;  // tanh activations, empty for logistic
};

Forward forward(const PredictionModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x) {
  if (x.cols() != m.input_dim)
    throw ValidationError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                          std::to_string(m.input_dim));
  const ParamView p = view(m);
  Forward f;
  if (m.kind == ModelKind::logistic) {
    f.z = (x * p.w2).array() + p.b2;
  } else {
    f.a1 = (x * p.w1.transpose()).rowwise() + p.b1.transpose();
    // tanh via exp, which Eigen vectorizes for doubles (array().tanh() does
    // not); overflow saturates to +-1 like the real thing
    f.a1 = 1.0 - 2.0 / ((2.0 * f.a1.array()).exp() + 1.0);
    f.z = (f.a1 * p.w2).array() + p.b2;
  }
  return f;
}

/// Accumulates d(loss)/d(params) from d(loss)/d(logits).
Eigen::VectorXd backprop(const PredictionModel& m, const Eigen::Ref<const Eigen::MatrixXd>& x,
                         const Forward& f, const Eigen::VectorXd& dz) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.param_count());
  double* gp = grad.data();
  if (m.kind == ModelKind::logistic) {
    Eigen::Map<Eigen::VectorXd>(gp, m.input_dim) = x.transpose() * dz;
    gp[m.input_dim] = dz.sum();
    return grad;
  }
  const Eigen::Index h = m.hidden, d = m.input_dim;
  const ParamView p = view(m);
  Eigen::Map<Eigen::MatrixXd> g_w1(gp, h, d);
  Eigen::Map<Eigen::VectorXd> g_b1(gp + h * d, h);
  Eigen::Map<Eigen::VectorXd> g_w2(gp + h * d + h, h);
  g_w2 = f.a1.transpose() * dz;
  gp[h * d + 2 * h] = dz.sum();
  const Eigen::MatrixXd dz1 =
      (dz * p.w2.transpose()).array() * (1.0 - f.a1.array().square());
  g_w1 = dz1.transpose() * x;
  g_b1 = dz1.colwise().sum();
  return grad;
}

Eigen::VectorXd scores_from_logits(const Eigen::VectorXd& z) {
  Eigen::VectorXd s(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i)
    s[i] = std::clamp(stable_sigmoid(z[i]), kScoreFloor, 1.0 - kScoreFloor);
  return s;
}

}  // namespace

PredictionModel PredictionModel::logistic(Eigen::Index input_dim) {
  if (input_dim < 1) throw ValidationError("input_dim must be >= 1");
  PredictionModel m;
  m.kind = ModelKind::logistic;
  m.input_dim = input_dim;
  m.parameters = Eigen::VectorXd::Zero(input_dim + 1);
  return m;
}

PredictionModel PredictionModel::mlp(Eigen::Index input_dim, Eigen::Index hidden,
                                     std::uint64_t seed) {
  if (input_dim < 1 || hidden < 1) throw ValidationError("mlp dimensions must be >= 1");
  PredictionModel m;
  m.kind = ModelKind::mlp;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.parameters = Eigen::VectorXd::Zero(m.param_count());
  Rng rng(derive_seed(seed, 0x1417));
  const double w1_bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  for (Eigen::Index i = 0; i < hidden * input_dim; ++i)
    m.parameters[i] = w1_bound * (2.0 * rng.uniform01() - 1.0);
  const double w2_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Eigen::Index i = 0; i < hidden; ++i)
    m.parameters[hidden * input_dim + hidden + i] = w2_bound * (2.0 * rng.uniform01() - 1.0);
  return m;
}

Eigen::VectorXd predict_scores(const PredictionModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& x) {
  return scores_from_logits(forward(model, x).z);
}

double predict_score(const PredictionModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return predict_scores(model, x.transpose())[0];
}

Eigen::VectorXi predict_labels(const PredictionModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& x) {
  const Eigen::VectorXd s = predict_scores(model, x);
  Eigen::VectorXi out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = s[i] >= 0.5 ? 1 : 0;
  return out;
}

double deo_regularizer(const PredictionModel& model, const Dataset& ds, GroupPair pair) {
  const auto pos_a = ds.rows_of_group(pair.a, 1);
  const auto pos_b = ds.rows_of_group(pair.b, 1);
  if (pos_a.empty())
    throw DegenerateGroupError("group '" + ds.group_names.at(static_cast<std::size_t>(pair.a)) +
                               "' has no positives; regularizer undefined");
  if (pos_b.empty())
    throw DegenerateGroupError("group '" + ds.group_names.at(static_cast<std::size_t>(pair.b)) +
                               "' has no positives; regularizer undefined");
  const Eigen::VectorXd s = predict_scores(model, ds.features);
  double mean_a = 0.0, mean_b = 0.0;
  for (auto i : pos_a) mean_a += s[i];
  for (auto i : pos_b) mean_b += s[i];
  mean_a /= static_cast<double>(pos_a.size());
  mean_b /= static_cast<double>(pos_b.size());
  const double gap = mean_a - mean_b;
  return gap * gap;
}

LossResult loss_and_gradient(const PredictionModel& model, const Dataset& batch,
                             const Dataset* full_positive_context, double reg_weight,
                             GroupPair pair) {
  if (batch.size() < 1) throw ValidationError("batch is empty");
  if (reg_weight < 0.0) throw ValidationError("reg_weight must be >= 0");
  if (reg_weight > 0.0 && full_positive_context != nullptr) {
    for (int g : {pair.a, pair.b})
      if (full_positive_context->rows_of_group(g, 1).empty())
        throw DegenerateGroupError(
            "group '" + full_positive_context->group_names.at(static_cast<std::size_t>(g)) +
            "' has no positives in the regularizer context");
  }

  const Eigen::Index n = batch.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const Forward f = forward(model, batch.features);

  LossResult out;
  Eigen::VectorXd dz(n);
  out.loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = static_cast<double>(batch.labels[i]);
    out.loss += inv_n * (softplus(f.z[i]) - y * f.z[i]);
    dz[i] = inv_n * (stable_sigmoid(f.z[i]) - y);
  }

  if (reg_weight > 0.0) {
    const auto pos_a = batch.rows_of_group(pair.a, 1);
    const auto pos_b = batch.rows_of_group(pair.b, 1);
    if (!pos_a.empty() && !pos_b.empty()) {
      const Eigen::VectorXd s = scores_from_logits(f.z);
      double mean_a = 0.0, mean_b = 0.0;
      for (auto i : pos_a) mean_a += s[i];
      for (auto i : pos_b) mean_b += s[i];
      mean_a /= static_cast<double>(pos_a.size());
      mean_b /= static_cast<double>(pos_b.size());
      const double gap = mean_a - mean_b;
      out.loss += reg_weight * gap * gap;
      const double scale = 2.0 * reg_weight * gap;
      for (auto i : pos_a)
        dz[i] += scale / static_cast<double>(pos_a.size()) * s[i] * (1.0 - s[i]);
      for (auto i : pos_b)
        dz[i] -= scale / static_cast<double>(pos_b.size()) * s[i] * (1.0 - s[i]);
      out.regularizer_applied = true;
    }
  }

  out.gradient = backprop(model, batch.features, f, dz);
  return out;
}

std::string to_string(Objective o) {
  return o == Objective::overall_accuracy ? "overall_accuracy" : "min_group_accuracy";
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.steps < 0) throw ValidationError("steps must be >= 0");
  if (cfg.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0))
    throw ValidationError("momentum must be in [0,1)");
  if (cfg.eval_every < 1) throw ValidationError("eval_every must be >= 1");
  if (cfg.reg_weight < 0.0) throw ValidationError("reg_weight must be >= 0");
}

PredictionModel TrainResult::best_model() const {
  PredictionModel m = model;
  m.parameters = checkpoints[best_index].parameters;
  return m;
}

void BatchSource::after_checkpoint(long, const PredictionModel&, Rng&) {}

void DatasetBatchSource::sample(Eigen::Index batch_size, Rng& batch_rng, Eigen::MatrixXd& x,
                                Eigen::VectorXi& y, Eigen::VectorXi& g) {
  x.resize(batch_size, ds_.dim());
  y.resize(batch_size);
  g.resize(batch_size);
  for (Eigen::Index i = 0; i < batch_size; ++i) {
    const auto r =
        static_cast<Eigen::Index>(batch_rng.uniform_below(static_cast<std::uint64_t>(ds_.size())));
    x.row(i) = ds_.features.row(r);
    y[i] = ds_.labels[r];
    g[i] = ds_.groups[r];
  }
}

namespace {

double objective_of(const GroupReport& report, Objective objective) {
  if (objective == Objective::overall_accuracy) return report.overall_accuracy;
  return minmax_summary(report).min_group_accuracy;
}

}  // namespace

TrainResult train_with_source(PredictionModel model, BatchSource& source, const Dataset& eval,
                              const Dataset* reg_context, const TrainConfig& cfg,
                              Objective objective) {
  validate_train_config(cfg);
  validate_dataset(eval);

  Rng batch_rng(derive_seed(cfg.seed, 0xba7c));
  Rng aug_rng(derive_seed(cfg.seed, 0xa06e));

  TrainResult result;
  Eigen::VectorXd velocity = Eigen::VectorXd::Zero(model.param_count());

  double loss_acc = 0.0;
  long loss_count = 0;
  long skip_count = 0;
  long reg_steps = 0;

  const auto record = [&](long step) {
    Checkpoint ck;
    ck.parameters = model.parameters;
    ck.step = step;
    ck.eval_report = confusion_by_group(predict_labels(model, eval.features), eval);
    ck.objective_value = objective_of(ck.eval_report, objective);
    ck.mean_batch_loss =
        loss_count > 0 ? loss_acc / static_cast<double>(loss_count)
                       : std::numeric_limits<double>::quiet_NaN();
    ck.regularizer_skip_rate =
        reg_steps > 0 ? static_cast<double>(skip_count) / static_cast<double>(reg_steps) : 0.0;
    loss_acc = 0.0;
    loss_count = 0;
    skip_count = 0;
    reg_steps = 0;
    result.checkpoints.push_back(std::move(ck));
  };

  record(0);

  Eigen::MatrixXd bx;
  Eigen::VectorXi by, bg;
  Dataset batch;
  batch.group_names = eval.group_names;

  for (long step = 1; step <= cfg.steps; ++step) {
    source.sample(cfg.batch_size, batch_rng, bx, by, bg);
    batch.features = std::move(bx);
    batch.labels = std::move(by);
    batch.groups = std::move(bg);

    const LossResult lr =
        loss_and_gradient(model, batch, reg_context, cfg.reg_weight, cfg.reg_pair);
    if (!std::isfinite(lr.loss))
      throw DivergenceError("non-finite loss at step " + std::to_string(step), step);

    velocity = cfg.momentum * velocity + lr.gradient;
    model.parameters -= cfg.learning_rate * velocity;

    bx = std::move(batch.features);
    by = std::move(batch.labels);
    bg = std::move(batch.groups);

    loss_acc += lr.loss;
    ++loss_count;
    if (cfg.reg_weight > 0.0) {
      ++reg_steps;
      if (!lr.regularizer_applied) ++skip_count;
    }

    if (step % cfg.eval_every == 0 || step == cfg.steps) {
      record(step);
      source.after_checkpoint(step, model, aug_rng);
    }
  }

  result.best_index = 0;
  for (std::size_t i = 1; i < result.checkpoints.size(); ++i)
    if (result.checkpoints[i].objective_value >
        result.checkpoints[result.best_index].objective_value)
      result.best_index = i;
  result.model = std::move(model);
  return result;
}

TrainResult train(const PredictionModel& model, const Dataset& train, const Dataset& eval,
                  const TrainConfig& cfg, Objective objective) {
  validate_dataset(train);
  DatasetBatchSource source(train);
  const Dataset* context = cfg.reg_weight > 0.0 ? &train : nullptr;
  return train_with_source(model, source, eval, context, cfg, objective);
}

std::string model_to_json(const PredictionModel& model) {
  nlohmann::json j;
  j["kind"] = model.kind == ModelKind::logistic ? "logistic" : "mlp";
  j["input_dim"] = model.input_dim;
  if (model.kind == ModelKind::mlp) j["hidden"] = model.hidden;
  j["parameters"] = std::vector<double>(model.parameters.data(),
                                        model.parameters.data() + model.parameters.size());
  return j.dump(2);
}

PredictionModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model JSON: ") + e.what());
  }
  PredictionModel m;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "logistic") m.kind = ModelKind::logistic;
  else if (kind == "mlp") m.kind = ModelKind::mlp;
  else throw ValidationError("unknown model kind '" + kind + "'");
  m.input_dim = j.at("input_dim").get<Eigen::Index>();
  if (m.kind == ModelKind::mlp) m.hidden = j.at("hidden").get<Eigen::Index>();
  const auto params = j.at("parameters").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(params.size()) != m.param_count())
    throw ValidationError("parameter count does not match architecture");
  m.parameters = Eigen::Map<const Eigen::VectorXd>(params.data(),
                                                   static_cast<Eigen::Index>(params.size()));
  return m;
}

void save_model(const PredictionModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << model_to_json(model) << "\n";
}

PredictionModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace fairkit
