#include "fairkit/adaptive.hpp"

#include <cstdio>
#include <fstream>

namespace fairkit {

AugmentedPool::AugmentedPool(const Dataset& train) {
  validate_dataset(train);
  dim_ = train.dim();
  original_size_ = train.size();
  features_.reserve(static_cast<std::size_t>(train.size()) * 2);
  for (Eigen::Index i = 0; i < train.size(); ++i) {
    features_.push_back(train.features.row(i));
    labels_.push_back(train.labels[i]);
    groups_.push_back(train.groups[i]);
    origin_.push_back(RowOrigin::original);
    creation_step_.push_back(0);
  }
}

void AugmentedPool::append(Eigen::VectorXd features, int label, int group, RowOrigin origin,
                           long step) {
  if (features.size() != dim_) throw ValidationError("pool row dimension mismatch");
  features_.push_back(std::move(features));
  labels_.push_back(label);
  groups_.push_back(group);
  origin_.push_back(origin);
  creation_step_.push_back(step);
}

Dataset AugmentedPool::to_dataset(const std::vector<std::string>& group_names) const {
  Dataset ds;
  ds.features.resize(size(), dim_);
  ds.labels.resize(size());
  ds.groups.resize(size());
  for (Eigen::Index i = 0; i < size(); ++i) {
    ds.features.row(i) = features_[static_cast<std::size_t>(i)];
    ds.labels[i] = labels_[static_cast<std::size_t>(i)];
    ds.groups[i] = groups_[static_cast<std::size_t>(i)];
  }
  ds.group_names = group_names;
  return ds;
}

void AugmentedPool::write_provenance_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << "row_id,provenance,group,label,creation_step\n";
  for (Eigen::Index i = 0; i < size(); ++i)
    out << i << ","
        << (origin_[static_cast<std::size_t>(i)] == RowOrigin::original ? "original"
                                                                             : "synthetic")
        << "," << groups_[static_cast<std::size_t>(i)] << ","
        << labels_[static_cast<std::size_t>(i)] << ","
        << creation_step_[static_cast<std::size_t>(i)] << "\n";
}

std::string to_string(GroupMode m) {
  return m == GroupMode::protected_only ? "protected_only" : "protected_x_label";
}

WeakestCell weakest_group(const PredictionModel& model, const Dataset& eval, GroupMode mode) {
  validate_dataset(eval);
  const Eigen::VectorXi pred = predict_labels(model, eval.features);
  const int cells = mode == GroupMode::protected_only ? eval.num_groups() : eval.num_groups() * 2;
  std::vector<long> correct(static_cast<std::size_t>(cells), 0);
  std::vector<long> total(static_cast<std::size_t>(cells), 0);
  for (Eigen::Index i = 0; i < eval.size(); ++i) {
    const int cell = mode == GroupMode::protected_only ? eval.groups[i]
                                                       : eval.groups[i] * 2 + eval.labels[i];
    ++total[static_cast<std::size_t>(cell)];
    if (pred[i] == eval.labels[i]) ++correct[static_cast<std::size_t>(cell)];
  }
  WeakestCell out;
  bool found = false;
  for (int c = 0; c < cells; ++c) {
    if (total[static_cast<std::size_t>(c)] == 0) {
      if (mode == GroupMode::protected_x_label)
        throw ValidationError("empty (group,label) cell " + std::to_string(c / 2) + "x" +
                              std::to_string(c % 2) + " in eval split");
      continue;
    }
    const double acc = static_cast<double>(correct[static_cast<std::size_t>(c)]) /
                       static_cast<double>(total[static_cast<std::size_t>(c)]);
    if (!found || acc < out.accuracy) {
      out.accuracy = acc;
      if (mode == GroupMode::protected_only) {
        out.group = c;
      } else {
        out.group = c / 2;
        out.label = c % 2;
      }
      found = true;
    }
  }
  if (!found) throw ValidationError("eval split has no populated groups");
  return out;
}

void validate_adaptive_config(const AdaptiveConfig& cfg) {
  validate_train_config(cfg.train);
  if (!(cfg.mix_prob >= 0.0 && cfg.mix_prob <= 1.0))
    throw ValidationError("mix_prob must be in [0,1]");
  if (cfg.augment_batch < -1) throw ValidationError("augment_batch must be >= 0 (or -1 for default)");
}

namespace {

/// Batch source mixing the original split with the growing pool. Bernoulli
/// draws come from a stream owned here, so the loop's batch stream stays
/// aligned with plain training when mix_prob = 1 or the pool never grows.
class MixedBatchSource final : public BatchSource {
public:
  MixedBatchSource(const Dataset& train, const LatentCodec& codec, const AugmentConfig& aug_cfg,
                   const AdaptiveConfig& cfg, bool target_weakest, const Dataset& eval)
      : train_(train),
        eval_(eval),
        codec_(codec),
        cache_(train, codec),
        aug_cfg_(aug_cfg),
        cfg_(cfg),
        target_weakest_(target_weakest),
        pool_(train),
        mix_rng_(derive_seed(cfg.train.seed, 0x313c)),
        augment_batch_(cfg.augment_batch < 0 ? cfg.train.batch_size : cfg.augment_batch) {
    for (int g = 0; g < train.num_groups(); ++g) {
      group_rows_.push_back(train.rows_of_group(g));
      for (int y = 0; y < 2; ++y) cell_rows_.push_back(train.rows_of_group(g, y));
    }
  }

  void sample(Eigen::Index batch_size, Rng& batch_rng, Eigen::MatrixXd& x, Eigen::VectorXi& y,
              Eigen::VectorXi& g) override {
    const bool from_train = mix_rng_.bernoulli(cfg_.mix_prob);
    x.resize(batch_size, train_.dim());
    y.resize(batch_size);
    g.resize(batch_size);
    if (from_train) {
      for (Eigen::Index i = 0; i < batch_size; ++i) {
        const auto r = static_cast<Eigen::Index>(
            batch_rng.uniform_below(static_cast<std::uint64_t>(train_.size())));
        x.row(i) = train_.features.row(r);
        y[i] = train_.labels[r];
        g[i] = train_.groups[r];
      }
    } else {
      for (Eigen::Index i = 0; i < batch_size; ++i) {
        const auto r = static_cast<Eigen::Index>(
            batch_rng.uniform_below(static_cast<std::uint64_t>(pool_.size())));
        x.row(i) = pool_.features(r);
        y[i] = pool_.label(r);
        g[i] = pool_.group(r);
      }
    }
  }

  void after_checkpoint(long step, const PredictionModel& model, Rng& aug_rng) override {
    for (Eigen::Index j = 0; j < augment_batch_; ++j) {
      int group;
      std::optional<int> label;
      if (target_weakest_) {
        if (j == 0) weakest_ = weakest_group(model, eval_, cfg_.group_mode);
        group = weakest_.group;
        label = weakest_.label;
      } else {
        // static mode: uniform over groups (cells under protected_x_label)
        group = static_cast<int>(aug_rng.uniform_below(
            static_cast<std::uint64_t>(train_.num_groups())));
        if (cfg_.group_mode == GroupMode::protected_x_label)
          label = static_cast<int>(aug_rng.uniform_below(2));
      }
      const auto& rows = label ? cell_rows_[static_cast<std::size_t>(group * 2 + *label)]
                               : group_rows_[static_cast<std::size_t>(group)];
      if (rows.empty())
        throw ValidationError("cannot augment: group " + std::to_string(group) +
                              (label ? " label " + std::to_string(*label) : std::string{}) +
                              " has no training rows");
      const Eigen::Index seed_row =
          rows[static_cast<std::size_t>(aug_rng.uniform_below(rows.size()))];
      try {
        AugmentSample s = gsmote_sample(train_, codec_, cache_, seed_row, aug_cfg_, aug_rng);
        pool_.append(std::move(s.features), s.label, group, RowOrigin::synthetic, step);
      } catch (const AugmentationUnavailableError&) {
        // cohort too small: fall back to duplicating the seed row
        pool_.append(train_.features.row(seed_row), train_.labels[seed_row], group,
                     RowOrigin::synthetic, step);
        ++fallbacks_;
      }
    }
  }

  AugmentedPool take_pool() { return std::move(pool_); }
  long fallbacks() const { return fallbacks_; }

private:
  const Dataset& train_;
  const Dataset& eval_;
  const LatentCodec& codec_;
  LatentCache cache_;
  AugmentConfig aug_cfg_;
  AdaptiveConfig cfg_;
  bool target_weakest_;
  AugmentedPool pool_;
  Rng mix_rng_;
  Eigen::Index augment_batch_;
  WeakestCell weakest_;
  std::vector<std::vector<Eigen::Index>> group_rows_;
  std::vector<std::vector<Eigen::Index>> cell_rows_;
  long fallbacks_ = 0;
};

AdaptiveResult run(const PredictionModel& model, const Dataset& train, const Dataset& eval,
                   const LatentCodec& codec, const AugmentConfig& aug_cfg,
                   const AdaptiveConfig& cfg, bool target_weakest) {
  validate_adaptive_config(cfg);
  validate_dataset(train);
  MixedBatchSource source(train, codec, aug_cfg, cfg, target_weakest, eval);
  const Dataset* context = cfg.train.reg_weight > 0.0 ? &train : nullptr;
  TrainResult tr = train_with_source(model, source, eval, context, cfg.train, cfg.objective);
  return {std::move(tr), source.take_pool(), source.fallbacks()};
}

}  // namespace

AdaptiveResult adaptive_train(const PredictionModel& model, const Dataset& train,
                              const Dataset& eval, const LatentCodec& codec,
                              const AugmentConfig& aug_cfg, const AdaptiveConfig& cfg) {
  return run(model, train, eval, codec, aug_cfg, cfg, true);
}

AdaptiveResult static_gsmote_train(const PredictionModel& model, const Dataset& train,
                                   const Dataset& eval, const LatentCodec& codec,
                                   const AugmentConfig& aug_cfg, const AdaptiveConfig& cfg) {
  return run(model, train, eval, codec, aug_cfg, cfg, false);
}

}  // namespace fairkit
