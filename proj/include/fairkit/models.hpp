#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "fairkit/data.hpp"
#include "fairkit/metrics.hpp"
#include "fairkit/rng.hpp"

namespace fairkit {

enum class ModelKind { logistic, mlp };

/// Binary scorer with a flat parameter vector and analytic gradients.
/// logistic: sigmoid(w.x + b). mlp: sigmoid(w2 . tanh(W1 x + b1) + b2).
struct PredictionModel {
  ModelKind kind = ModelKind::logistic;
  Eigen::Index input_dim = 0;
  Eigen::Index hidden = 0;  // mlp only
  Eigen::VectorXd parameters;

  Eigen::Index param_count() const {
    return kind == ModelKind::logistic ? input_dim + 1
                                       : hidden * input_dim + 2 * hidden + 1;
  }

  /// Zero-initialized logistic model.
  static PredictionModel logistic(Eigen::Index input_dim);

  /// MLP with weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)], zero biases.
  static PredictionModel mlp(Eigen::Index input_dim, Eigen::Index hidden, std::uint64_t seed);
};

/// Scores in (0,1) for a batch of rows. Clamped away from exact 0/1 so the
/// open-interval contract holds for any finite input.
Eigen::VectorXd predict_scores(const PredictionModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& x);

double predict_score(const PredictionModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Hard predictions: 1 iff score >= 0.5.
Eigen::VectorXi predict_labels(const PredictionModel& model,
                               const Eigen::Ref<const Eigen::MatrixXd>& x);

struct GroupPair {
  int a = 0;
  int b = 1;
};

/// Squared difference of the two groups' mean scores over positives only.
/// Throws DegenerateGroupError when either group has no positives.
double deo_regularizer(const PredictionModel& model, const Dataset& ds, GroupPair pair);

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd gradient;
  bool regularizer_applied = false;  // false when reg_weight == 0 or the batch skipped it
};

/// Mean binary cross-entropy over the batch plus reg_weight times the score
/// regularizer evaluated on the batch's own positives per group. When the
/// batch lacks positives for either group the term is skipped and
/// regularizer_applied is false; callers track the skip rate. The
/// full_positive_context (usually the training split) is only consulted to
/// reject degenerate tasks where a group has no positives at all.
LossResult loss_and_gradient(const PredictionModel& model, const Dataset& batch,
                             const Dataset* full_positive_context, double reg_weight,
                             GroupPair pair);

enum class Objective { overall_accuracy, min_group_accuracy };

std::string to_string(Objective o);

struct TrainConfig {
  long steps = 2000;
  Eigen::Index batch_size = 32;
  double learning_rate = 0.1;
  double momentum = 0.0;   // in [0, 1)
  long eval_every = 50;    // checkpoint cadence in steps
  std::uint64_t seed = 0;
  double reg_weight = 0.0;
  GroupPair reg_pair{};
};

void validate_train_config(const TrainConfig& cfg);

struct Checkpoint {
  Eigen::VectorXd parameters;
  long step = 0;
  GroupReport eval_report;
  double objective_value = 0.0;
  double mean_batch_loss = 0.0;        // over steps since the previous checkpoint
  double regularizer_skip_rate = 0.0;  // ditto
};

struct TrainResult {
  PredictionModel model;  // parameters after the final step
  std::vector<Checkpoint> checkpoints;
  std::size_t best_index = 0;  // maximizes the objective; ties -> earliest step

  const Checkpoint& best() const { return checkpoints[best_index]; }
  PredictionModel best_model() const;
};

/// Supplies minibatches to the SGD loop. The loop owns two RNG streams:
/// batch_rng is handed to sample() and must only be consumed for batch index
/// draws; aug_rng is handed to after_checkpoint(). Keeping the streams
/// separate is what makes the degenerate adaptive configurations reproduce
/// plain training bitwise.
class BatchSource {
public:
  virtual ~BatchSource() = default;
  virtual void sample(Eigen::Index batch_size, Rng& batch_rng, Eigen::MatrixXd& x,
                      Eigen::VectorXi& y, Eigen::VectorXi& g) = 0;
  virtual void after_checkpoint(long step, const PredictionModel& model, Rng& aug_rng);
};

/// Uniform sampling with replacement from a fixed dataset.
class DatasetBatchSource final : public BatchSource {
public:
  explicit DatasetBatchSource(const Dataset& ds) : ds_(ds) {}
  void sample(Eigen::Index batch_size, Rng& batch_rng, Eigen::MatrixXd& x, Eigen::VectorXi& y,
              Eigen::VectorXi& g) override;

private:
  const Dataset& ds_;
};

/// SGD with optional momentum over batches from `source`; evaluates on
/// `eval` at step 0, every eval_every steps, and after the final step.
/// The returned best checkpoint maximizes the objective on `eval`.
TrainResult train_with_source(PredictionModel model, BatchSource& source, const Dataset& eval,
                              const Dataset* reg_context, const TrainConfig& cfg,
                              Objective objective);

/// Plain training on uniformly sampled batches from `train`.
TrainResult train(const PredictionModel& model, const Dataset& train, const Dataset& eval,
                  const TrainConfig& cfg, Objective objective);

/// JSON round-trip: kind, architecture, parameters.
std::string model_to_json(const PredictionModel& model);
PredictionModel model_from_json(const std::string& text);
void save_model(const PredictionModel& model, const std::string& path);
PredictionModel load_model(const std::string& path);

}  // namespace fairkit
