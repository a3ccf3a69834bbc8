#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fairkit/benchmarks.hpp"
#include "fairkit/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitAuditFailed = 3;
constexpr int kExitRuntime = 4;

struct ConfigInput {
  fairkit::ExperimentConfig config;
  fairkit::Provenance provenance;
};

ConfigInput read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fairkit::ValidationError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  return {fairkit::config_from_json(text), {fairkit::kVersion, fairkit::config_hash(text)}};
}

void print_aggregate(const fairkit::AggregateRow& row) {
  std::printf("%-16s  seeds=%d\n", row.label.c_str(), row.n_seeds);
  std::printf("  accuracy        %.4f +- %.4f\n", row.accuracy.mean, row.accuracy.stddev);
  std::printf("  max group acc   %.4f +- %.4f\n", row.max_group_acc.mean, row.max_group_acc.stddev);
  std::printf("  min group acc   %.4f +- %.4f\n", row.min_group_acc.mean, row.min_group_acc.stddev);
  std::printf("  TPR             %.4f +- %.4f\n", row.tpr.mean, row.tpr.stddev);
  std::printf("  max group TPR   %.4f +- %.4f\n", row.max_group_tpr.mean, row.max_group_tpr.stddev);
  std::printf("  min group TPR   %.4f +- %.4f\n", row.min_group_tpr.mean, row.min_group_tpr.stddev);
  std::printf("  DEO             %.4f +- %.4f\n", row.deo.mean, row.deo.stddev);
  std::printf("  DEOdds          %.4f +- %.4f\n", row.deodds.mean, row.deodds.stddev);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairkit: accuracy-based group fairness toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int jobs = 1;
  std::uint64_t seed_offset = 0;
  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--jobs", jobs, "worker threads for independent runs");
  app.add_option("--seed-offset", seed_offset, "added to every config seed");

  auto* generate = app.add_subcommand("generate", "write train/eval/test CSVs + metadata");
  auto* train_cmd = app.add_subcommand("train", "train the configured method over all seeds");
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a saved model on a CSV dataset");
  auto* decompose = app.add_subcommand("decompose", "bias/variance/noise fairness decomposition");
  auto* sweep = app.add_subcommand("sweep", "regularizer strength sweep");
  auto* audit = app.add_subcommand("audit", "classify intervention vs baseline reports");
  auto* sweep_mk = app.add_subcommand("sweep-mk", "g-SMOTE (m, k) grid sweep");

  std::string model_path, data_path, eval_out = "report.json";
  evaluate->add_option("--model", model_path, "model JSON")->required();
  evaluate->add_option("--data", data_path, "dataset CSV")->required();
  evaluate->add_option("--report-out", eval_out, "output report path");

  std::string baseline_path, intervention_path, verdict_out = "verdict.json";
  double tolerance = 0.001;
  audit->add_option("--baseline", baseline_path, "baseline GroupReport JSON")->required();
  audit->add_option("--intervention", intervention_path, "intervention GroupReport JSON")
      ->required();
  audit->add_option("--tolerance", tolerance, "accuracy delta treated as unchanged");
  audit->add_option("--verdict-out", verdict_out, "output verdict path");

  CLI11_PARSE(app, argc, argv);

  const fairkit::CommonOptions opt{out_dir, jobs, seed_offset};

  try {
    if (audit->parsed()) {
      const fairkit::Provenance prov{fairkit::kVersion, "audit"};
      const fairkit::ParetoVerdict verdict = fairkit::cmd_audit(
          baseline_path, intervention_path, tolerance, out_dir + "/" + verdict_out, prov);
      std::printf("verdict: %s\n", fairkit::to_string(verdict.verdict).c_str());
      std::printf("worst baseline group delta: %+.4f (tolerance %.4f)\n",
                  verdict.worst_group_delta, verdict.tolerance);
      for (std::size_t g = 0; g < verdict.deltas.size(); ++g)
        std::printf("  group %zu: %+.4f\n", g, verdict.deltas[g]);
      const bool ok = verdict.verdict == fairkit::Verdict::pareto_improvement ||
                      verdict.verdict == fairkit::Verdict::trade_off ||
                      verdict.verdict == fairkit::Verdict::unchanged;
      return ok ? kExitOk : kExitAuditFailed;
    }

    if (evaluate->parsed()) {
      const fairkit::Provenance prov{fairkit::kVersion, "evaluate"};
      fairkit::cmd_evaluate(model_path, data_path, eval_out, prov);
      std::printf("wrote %s\n", eval_out.c_str());
      return kExitOk;
    }

    if (config_path.empty())
      throw fairkit::ValidationError("--config is required for this subcommand");
    ConfigInput input = read_config(config_path);

    if (generate->parsed()) {
      fairkit::cmd_generate(input.config, input.provenance, opt);
      std::printf("wrote train/eval/test CSVs and meta.json to %s\n", out_dir.c_str());
    } else if (train_cmd->parsed()) {
      const fairkit::TrainOutputs outputs = fairkit::cmd_train(input.config, input.provenance, opt);
      print_aggregate(outputs.aggregate);
      std::printf("artifacts in %s\n", out_dir.c_str());
    } else if (decompose->parsed()) {
      const fairkit::DecompositionReport report =
          fairkit::cmd_decompose(input.config, input.provenance, opt);
      for (const auto& g : report.groups) {
        std::printf("group %-8s N=%.4f B=%.4f V=%.4f err=%.4f (B+N)/V=%.3g\n", g.name.c_str(),
                    g.noise_weighted, g.bias, g.variance_weighted, g.mean_err,
                    g.regime_ratio_raw);
        // squared loss: err = N + B + V exactly; printed so runs are self-checking
        const double recon = g.noise_weighted + g.bias + g.variance_weighted;
        std::printf("  reconstruction N+B+V = %.4f (gap %.2e)\n", recon,
                    std::abs(recon - g.mean_err));
      }
      std::printf("E_fair = %.4f +- %.4f, |V_A - V_B| = %.4f\n", report.e_fair,
                  report.e_fair_stderr, report.variance_gap);
    } else if (sweep->parsed()) {
      const fairkit::SweepOutputs outputs = fairkit::cmd_sweep(input.config, input.provenance, opt);
      for (const auto& row : outputs.rows)
        std::printf("reg=%-6g acc=%.4f min_grp_acc=%.4f DEO=%.4f DEOdds=%.4f\n", row.reg_weight,
                    row.stats.accuracy.mean, row.stats.min_group_acc.mean, row.stats.deo.mean,
                    row.stats.deodds.mean);
      if (outputs.spearman_deo)
        std::printf("spearman(reg, DEO) = %.3f\n", *outputs.spearman_deo);
      else
        std::printf("spearman(reg, DEO) undefined (single point)\n");
      if (outputs.spearman_min_acc)
        std::printf("spearman(reg, min group acc) = %.3f\n", *outputs.spearman_min_acc);
      else
        std::printf("spearman(reg, min group acc) undefined (single point)\n");
    } else if (sweep_mk->parsed()) {
      const auto cells = fairkit::cmd_sweep_mk(input.config, input.provenance, opt);
      for (const auto& c : cells) {
        if (c.valid)
          std::printf("m=%-4ld k=%-4ld min_grp_acc=%.4f +- %.4f\n", static_cast<long>(c.m),
                      static_cast<long>(c.k), c.min_group_acc.mean, c.min_group_acc.stddev);
        else
          std::printf("m=%-4ld k=%-4ld invalid (k > m)\n", static_cast<long>(c.m),
                      static_cast<long>(c.k));
      }
    }
    return kExitOk;
  } catch (const fairkit::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitRuntime;
  }
}
