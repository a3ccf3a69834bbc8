#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairkit/common.hpp"

namespace fairkit {

/// Immutable table of feature vectors, binary labels and dense group ids.
/// Safely shareable across threads once built.
struct Dataset {
  Eigen::MatrixXd features;              // n x d
  Eigen::VectorXi labels;                // n, values in {0,1}
  Eigen::VectorXi groups;                // n, values in [0, num_groups)
  std::vector<std::string> group_names;  // size num_groups

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dim() const { return features.cols(); }
  int num_groups() const { return static_cast<int>(group_names.size()); }

  /// Rows selected by index, in the given order. Group names are shared.
  Dataset select(const std::vector<Eigen::Index>& rows) const;

  /// Row indices belonging to group g (optionally restricted to one label).
  std::vector<Eigen::Index> rows_of_group(int g, std::optional<int> label = std::nullopt) const;
};

/// Throws ValidationError when the Dataset invariants do not hold:
/// aligned lengths, n >= 1, d >= 1, labels binary, ids dense, groups non-empty.
void validate_dataset(const Dataset& ds);

struct SplitSpec {
  double train_fraction = 0.6;
  double eval_fraction = 0.2;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Two-group-or-more Gaussian mixture generator with a known posterior.
/// Per point: clean label ~ Bernoulli(0.5), feature ~ N(mean[g][label],
/// stddev[g][label]^2 I), observed label flips with label_noise_rate[g].
struct SyntheticSpec {
  std::vector<Eigen::Index> n_per_group;
  Eigen::Index dims = 2;
  std::vector<std::array<Eigen::VectorXd, 2>> cluster_means;  // [group][label]
  std::vector<std::array<double, 2>> cluster_stddev;          // [group][label]
  std::vector<double> label_noise_rate;                       // per group, in [0, 0.5)
  std::uint64_t seed = 0;
};

/// Exact posterior P(Y=1 | x) of the generating process; only available for
/// synthetic data. Marginal over group membership, observation noise folded in.
using TrueConditional = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

struct CsvSchema {
  std::string label_column = "label";
  std::string group_column = "group";
  std::string feature_prefix = "feature_";
};

Dataset load_csv(const std::string& path, const CsvSchema& schema = {});
void save_csv(const Dataset& ds, const std::string& path);

/// Metadata sidecar ({group_names, seed, spec}) written next to generated CSVs.
void save_metadata(const Dataset& ds, const SyntheticSpec& spec, const std::string& path);

std::pair<Dataset, TrueConditional> generate_synthetic(const SyntheticSpec& spec);

struct SplitResult {
  Dataset train;
  Dataset eval;
  Dataset test;
};

/// Stratified by (group, label); per-cell split sizes are within one element
/// of the exact fractions. Requires every cell to have >= 3 members.
SplitResult stratified_split(const Dataset& ds, const SplitSpec& spec);

/// n rows sampled uniformly with replacement.
Dataset bootstrap_resample(const Dataset& ds, std::uint64_t seed);

/// size rows sampled uniformly without replacement.
Dataset subsample_resample(const Dataset& ds, Eigen::Index size, std::uint64_t seed);

/// How the distribution over training sets is realized by the decomposition
/// estimator; the source material never pins this down, so both are offered.
struct ResampleSpec {
  enum class Mode { bootstrap, subsample } mode = Mode::bootstrap;
  Eigen::Index subsample_size = 0;  // required when mode == subsample

  Dataset draw(const Dataset& base, std::uint64_t seed) const;
  std::string name() const { return mode == Mode::bootstrap ? "bootstrap" : "subsample"; }
};

/// Duplicates every (group, label) cell up to the largest cell size by
/// sampling with replacement. All cells end up exactly equal.
Dataset oversample_to_balance(const Dataset& ds, std::uint64_t seed);

}  // namespace fairkit
