#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairkit/augment.hpp"
#include "fairkit/data.hpp"
#include "fairkit/models.hpp"

namespace fairkit {

enum class RowOrigin { original, synthetic };

/// Append-only extended training set. Starts as an exact copy of the
/// training split (the original rows form an immutable prefix); synthetic
/// rows carry the group they were generated for and their creation step.
class AugmentedPool {
public:
  explicit AugmentedPool(const Dataset& train);

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels_.size()); }
  Eigen::Index original_size() const { return original_size_; }
  Eigen::Index dim() const { return dim_; }

  void append(Eigen::VectorXd features, int label, int group, RowOrigin origin, long step);

  const Eigen::VectorXd& features(Eigen::Index i) const {
    return features_[static_cast<std::size_t>(i)];
  }
  int label(Eigen::Index i) const { return labels_[static_cast<std::size_t>(i)]; }
  int group(Eigen::Index i) const { return groups_[static_cast<std::size_t>(i)]; }
  RowOrigin origin(Eigen::Index i) const { return origin_[static_cast<std::size_t>(i)]; }
  long creation_step(Eigen::Index i) const { return creation_step_[static_cast<std::size_t>(i)]; }

  Dataset to_dataset(const std::vector<std::string>& group_names) const;
  void write_provenance_csv(const std::string& path) const;

private:
  Eigen::Index dim_ = 0;
  Eigen::Index original_size_ = 0;
  std::vector<Eigen::VectorXd> features_;
  std::vector<int> labels_;
  std::vector<int> groups_;
  std::vector<RowOrigin> origin_;
  std::vector<long> creation_step_;
};

/// protected_only targets one protected group; protected_x_label crosses the
/// protected groups with the target label into cells.
enum class GroupMode { protected_only, protected_x_label };

std::string to_string(GroupMode m);

struct WeakestCell {
  int group = 0;
  std::optional<int> label;  // set under protected_x_label
  double accuracy = 0.0;
};

/// Lowest-accuracy group (or group-x-label cell) of the model on eval;
/// ties broken by lowest group id, then lowest label.
WeakestCell weakest_group(const PredictionModel& model, const Dataset& eval, GroupMode mode);

struct AdaptiveConfig {
  TrainConfig train;                 // steps, batch size, lr, momentum, eval cadence, seed
  double mix_prob = 0.5;             // probability a batch comes from the original split
  Eigen::Index augment_batch = -1;   // synthetic rows per evaluation; -1 means batch_size
  GroupMode group_mode = GroupMode::protected_only;
  Objective objective = Objective::min_group_accuracy;
};

void validate_adaptive_config(const AdaptiveConfig& cfg);

struct AdaptiveResult {
  TrainResult training;
  AugmentedPool pool;
  long augmentation_fallbacks = 0;  // duplication used because a cohort was too small
};

/// Algorithm: per step a single Bernoulli(mix_prob) draw picks the batch's
/// source (original split vs pool), the batch is sampled uniformly from it,
/// and one SGD update runs. At every checkpoint the weakest group on eval is
/// re-computed and augment_batch g-SMOTE rows seeded in that group's rows of
/// the original split are appended to the pool. Seeds for synthetic rows are
/// always drawn from the original split so synthetic drift cannot compound.
AdaptiveResult adaptive_train(const PredictionModel& model, const Dataset& train,
                              const Dataset& eval, const LatentCodec& codec,
                              const AugmentConfig& aug_cfg, const AdaptiveConfig& cfg);

/// Same loop, but augmentation targets are drawn uniformly over groups
/// (cells under protected_x_label) instead of the weakest one.
AdaptiveResult static_gsmote_train(const PredictionModel& model, const Dataset& train,
                                   const Dataset& eval, const LatentCodec& codec,
                                   const AugmentConfig& aug_cfg, const AdaptiveConfig& cfg);

}  // namespace fairkit
