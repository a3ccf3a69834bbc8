#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairkit/adaptive.hpp"
#include "fairkit/stats.hpp"
#include "fairkit/augment.hpp"
#include "fairkit/data.hpp"
#include "fairkit/decomposition.hpp"
#include "fairkit/metrics.hpp"
#include "fairkit/models.hpp"

namespace fairkit {

enum class Method { baseline, regularized, gsmote, adaptive_gsmote, oversample };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct ModelSpec {
  ModelKind kind = ModelKind::logistic;
  Eigen::Index hidden = 16;  // mlp only
};

struct CodecSpec {
  enum class Kind { identity, file_backed } kind = Kind::identity;
  std::string latent_csv;
};

struct DecomposeSpec {
  int replicates = 41;
  LossKind loss = LossKind::zero_one;
  ResampleSpec resample{};
  bool single_label = false;
};

struct MkGrid {
  std::vector<Eigen::Index> m_values;
  std::vector<Eigen::Index> k_values;
};

/// One reviewable document driving every subcommand; all randomness flows
/// from the seeds recorded here.
struct ExperimentConfig {
  // exactly one of: synthetic spec, single csv (split on load), three csvs
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> csv;
  std::optional<std::string> train_csv, eval_csv, test_csv;

  SplitSpec split{};
  ModelSpec model{};
  TrainConfig train{};
  AugmentConfig augment{};
  double mix_prob = 0.5;
  Eigen::Index augment_batch = -1;
  GroupMode group_mode = GroupMode::protected_only;
  Objective objective = Objective::min_group_accuracy;
  Method method = Method::baseline;
  std::vector<double> sweep;
  MkGrid mk_grid{};
  DecomposeSpec decompose{};
  CodecSpec codec{};
  std::vector<std::uint64_t> seeds{1};
  double audit_tolerance = 0.001;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a hash of the config file contents, stamped into every output.
std::string config_hash(const std::string& text);

struct Provenance {
  std::string version;
  std::string hash;
};

/// Fully materialized data for one experiment.
struct DataBundle {
  Dataset train;
  Dataset eval;
  Dataset test;
  std::optional<TrueConditional> cond;  // synthetic only
};

DataBundle prepare_data(const ExperimentConfig& cfg);

std::unique_ptr<LatentCodec> make_codec(const CodecSpec& spec, const Dataset& train);

PredictionModel make_model(const ModelSpec& spec, Eigen::Index dim, std::uint64_t seed);

/// Result of one (method, seed) run, evaluated on the test split with the
/// best-on-eval checkpoint.
struct RunResult {
  std::uint64_t seed = 0;
  TrainResult training;
  GroupReport test_report;
  std::optional<AugmentedPool> pool;  // gsmote methods only
  long augmentation_fallbacks = 0;
};

RunResult run_method(Method method, const DataBundle& data, const ExperimentConfig& cfg,
                     std::uint64_t seed);

/// Mean/stddev rows shaped like the usual fairness summary tables:
/// accuracy, max/min group accuracy, TPR triplet, DEO, DEOdds.
struct AggregateRow {
  std::string label;
  int n_seeds = 0;
  MeanStd accuracy, max_group_acc, min_group_acc;
  MeanStd tpr, max_group_tpr, min_group_tpr;
  MeanStd deo, deodds;
};

AggregateRow aggregate_reports(const std::string& label, const std::vector<GroupReport>& reports);

std::string group_report_to_json(const GroupReport& report, const Provenance& prov);
GroupReport group_report_from_json(const std::string& text);

std::string pareto_verdict_to_json(const ParetoVerdict& verdict,
                                   const std::vector<std::string>& group_names,
                                   const Provenance& prov);

/// Runs fn(i) for i in [0, n) on up to `jobs` worker threads.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

// ---- subcommands (shared by the CLI binary and the test suites) ----

struct CommonOptions {
  std::string out_dir = ".";
  int jobs = 1;
  std::uint64_t seed_offset = 0;
};

void cmd_generate(const ExperimentConfig& cfg, const Provenance& prov, const CommonOptions& opt);

struct TrainOutputs {
  std::vector<RunResult> runs;
  AggregateRow aggregate;
};
TrainOutputs cmd_train(const ExperimentConfig& cfg, const Provenance& prov,
                       const CommonOptions& opt);

void cmd_evaluate(const std::string& model_path, const std::string& data_path,
                  const std::string& out_path, const Provenance& prov);

struct SweepRow {
  double reg_weight = 0.0;
  AggregateRow stats;
  std::vector<MeanStd> group_acc;
};
struct SweepOutputs {
  std::vector<SweepRow> rows;  // sorted by reg_weight ascending
  std::optional<double> spearman_deo;      // rank corr of (reg_weight, mean DEO)
  std::optional<double> spearman_min_acc;  // rank corr of (reg_weight, mean min-group acc)
};
SweepOutputs cmd_sweep(const ExperimentConfig& cfg, const Provenance& prov,
                       const CommonOptions& opt);

ParetoVerdict cmd_audit(const std::string& baseline_path, const std::string& intervention_path,
                        double tolerance, const std::string& out_path, const Provenance& prov);

DecompositionReport cmd_decompose(const ExperimentConfig& cfg, const Provenance& prov,
                                  const CommonOptions& opt);

struct MkCell {
  Eigen::Index m = 0;
  Eigen::Index k = 0;
  bool valid = true;
  MeanStd min_group_acc;
  int n_seeds = 0;
};
std::vector<MkCell> cmd_sweep_mk(const ExperimentConfig& cfg, const Provenance& prov,
                                 const CommonOptions& opt);

}  // namespace fairkit
