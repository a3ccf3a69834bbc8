#include "fairkit/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace fairkit {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::regularized: return "regularized";
    case Method::gsmote: return "gsmote";
    case Method::adaptive_gsmote: return "adaptive_gsmote";
    case Method::oversample: return "oversample";
  }
  return "unknown";
}

Method method_from_string(const std::string& s) {
  if (s == "baseline") return Method::baseline;
  if (s == "regularized") return Method::regularized;
  if (s == "gsmote") return Method::gsmote;
  if (s == "adaptive_gsmote") return Method::adaptive_gsmote;
  if (s == "oversample") return Method::oversample;
  throw ValidationError("unknown method '" + s + "'");
}

namespace {

LossKind loss_from_string(const std::string& s) {
  if (s == "squared") return LossKind::squared;
  if (s == "zero_one") return LossKind::zero_one;
  if (s == "false_negative_rate" || s == "fnr") return LossKind::false_negative_rate;
  throw ValidationError("unknown loss '" + s + "'");
}

SyntheticSpec synthetic_from_json(const json& j) {
  SyntheticSpec spec;
  spec.n_per_group = j.at("n_per_group").get<std::vector<Eigen::Index>>();
  spec.dims = j.at("dims").get<Eigen::Index>();
  for (const auto& per_group : j.at("cluster_means")) {
    std::array<Eigen::VectorXd, 2> pair;
    for (int y = 0; y < 2; ++y) {
      const auto vals = per_group.at(y).get<std::vector<double>>();
      pair[static_cast<std::size_t>(y)] =
          Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
    }
    spec.cluster_means.push_back(std::move(pair));
  }
  for (const auto& per_group : j.at("cluster_stddev"))
    spec.cluster_stddev.push_back({per_group.at(0).get<double>(), per_group.at(1).get<double>()});
  spec.label_noise_rate = j.at("label_noise_rate").get<std::vector<double>>();
  spec.seed = j.value("seed", std::uint64_t{0});
  return spec;
}

template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    if (j.contains("data")) {
      const json& d = j.at("data");
      if (d.contains("synthetic")) cfg.synthetic = synthetic_from_json(d.at("synthetic"));
      if (d.contains("csv")) cfg.csv = d.at("csv").get<std::string>();
      if (d.contains("train_csv")) {
        cfg.train_csv = d.at("train_csv").get<std::string>();
        cfg.eval_csv = d.at("eval_csv").get<std::string>();
        cfg.test_csv = d.at("test_csv").get<std::string>();
      }
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      read_into(s, "train_fraction", cfg.split.train_fraction);
      read_into(s, "eval_fraction", cfg.split.eval_fraction);
      read_into(s, "test_fraction", cfg.split.test_fraction);
      read_into(s, "seed", cfg.split.seed);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      const std::string kind = m.value("kind", std::string("logistic"));
      if (kind == "logistic") cfg.model.kind = ModelKind::logistic;
      else if (kind == "mlp") cfg.model.kind = ModelKind::mlp;
      else throw ValidationError("unknown model kind '" + kind + "'");
      read_into(m, "hidden", cfg.model.hidden);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      read_into(t, "steps", cfg.train.steps);
      read_into(t, "batch_size", cfg.train.batch_size);
      read_into(t, "learning_rate", cfg.train.learning_rate);
      read_into(t, "momentum", cfg.train.momentum);
      read_into(t, "eval_every", cfg.train.eval_every);
      read_into(t, "reg_weight", cfg.train.reg_weight);
      if (t.contains("reg_pair")) {
        cfg.train.reg_pair.a = t.at("reg_pair").at(0).get<int>();
        cfg.train.reg_pair.b = t.at("reg_pair").at(1).get<int>();
      }
    }
    if (j.contains("augment")) {
      const json& a = j.at("augment");
      read_into(a, "m", cfg.augment.m);
      read_into(a, "k", cfg.augment.k);
      read_into(a, "include_seed", cfg.augment.include_seed);
    }
    if (j.contains("adaptive")) {
      const json& a = j.at("adaptive");
      read_into(a, "mix_prob", cfg.mix_prob);
      read_into(a, "augment_batch", cfg.augment_batch);
      if (a.contains("group_mode")) {
        const std::string gm = a.at("group_mode").get<std::string>();
        if (gm == "protected_only") cfg.group_mode = GroupMode::protected_only;
        else if (gm == "protected_x_label") cfg.group_mode = GroupMode::protected_x_label;
        else throw ValidationError("unknown group_mode '" + gm + "'");
      }
    }
    if (j.contains("objective")) {
      const std::string o = j.at("objective").get<std::string>();
      if (o == "overall_accuracy") cfg.objective = Objective::overall_accuracy;
      else if (o == "min_group_accuracy") cfg.objective = Objective::min_group_accuracy;
      else throw ValidationError("unknown objective '" + o + "'");
    }
    if (j.contains("method")) cfg.method = method_from_string(j.at("method").get<std::string>());
    read_into(j, "sweep", cfg.sweep);
    if (j.contains("mk_grid")) {
      cfg.mk_grid.m_values = j.at("mk_grid").at("m").get<std::vector<Eigen::Index>>();
      cfg.mk_grid.k_values = j.at("mk_grid").at("k").get<std::vector<Eigen::Index>>();
    }
    if (j.contains("decompose")) {
      const json& d = j.at("decompose");
      read_into(d, "replicates", cfg.decompose.replicates);
      if (d.contains("loss")) cfg.decompose.loss = loss_from_string(d.at("loss").get<std::string>());
      if (d.contains("resample")) {
        const std::string r = d.at("resample").get<std::string>();
        if (r == "bootstrap") cfg.decompose.resample.mode = ResampleSpec::Mode::bootstrap;
        else if (r == "subsample") cfg.decompose.resample.mode = ResampleSpec::Mode::subsample;
        else throw ValidationError("unknown resample mode '" + r + "'");
      }
      read_into(d, "subsample_size", cfg.decompose.resample.subsample_size);
      read_into(d, "single_label", cfg.decompose.single_label);
    }
    if (j.contains("codec")) {
      const json& c = j.at("codec");
      const std::string kind = c.value("kind", std::string("identity"));
      if (kind == "identity") cfg.codec.kind = CodecSpec::Kind::identity;
      else if (kind == "file_backed") {
        cfg.codec.kind = CodecSpec::Kind::file_backed;
        cfg.codec.latent_csv = c.at("latent_csv").get<std::string>();
      } else {
        throw ValidationError("unknown codec kind '" + kind + "'");
      }
    }
    read_into(j, "seeds", cfg.seeds);
    read_into(j, "audit_tolerance", cfg.audit_tolerance);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config error: ") + e.what());
  }
  if (cfg.seeds.empty()) throw ValidationError("config error: seeds must be non-empty");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_hash(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

DataBundle prepare_data(const ExperimentConfig& cfg) {
  const int sources = (cfg.synthetic ? 1 : 0) + (cfg.csv ? 1 : 0) + (cfg.train_csv ? 1 : 0);
  if (sources != 1)
    throw ValidationError("config must name exactly one data source "
                          "(data.synthetic, data.csv, or data.train_csv/eval_csv/test_csv)");
  DataBundle out;
  if (cfg.synthetic) {
    auto [ds, cond] = generate_synthetic(*cfg.synthetic);
    SplitResult split = stratified_split(ds, cfg.split);
    out.train = std::move(split.train);
    out.eval = std::move(split.eval);
    out.test = std::move(split.test);
    out.cond = std::move(cond);
  } else if (cfg.csv) {
    SplitResult split = stratified_split(load_csv(*cfg.csv), cfg.split);
    out.train = std::move(split.train);
    out.eval = std::move(split.eval);
    out.test = std::move(split.test);
  } else {
    out.train = load_csv(*cfg.train_csv);
    out.eval = load_csv(*cfg.eval_csv);
    out.test = load_csv(*cfg.test_csv);
  }
  return out;
}

std::unique_ptr<LatentCodec> make_codec(const CodecSpec& spec, const Dataset& train) {
  if (spec.kind == CodecSpec::Kind::identity) return std::make_unique<IdentityCodec>();
  return std::make_unique<FileBackedCodec>(FileBackedCodec::from_csv(spec.latent_csv, train));
}

PredictionModel make_model(const ModelSpec& spec, Eigen::Index dim, std::uint64_t seed) {
  if (spec.kind == ModelKind::logistic) return PredictionModel::logistic(dim);
  return PredictionModel::mlp(dim, spec.hidden, derive_seed(seed, 0x1a17));
}

RunResult run_method(Method method, const DataBundle& data, const ExperimentConfig& cfg,
                     std::uint64_t seed) {
  RunResult out;
  out.seed = seed;
  TrainConfig tc = cfg.train;
  tc.seed = seed;

  PredictionModel init = make_model(cfg.model, data.train.dim(), seed);

  switch (method) {
    case Method::baseline: {
      tc.reg_weight = 0.0;
      out.training = train(init, data.train, data.eval, tc, cfg.objective);
      break;
    }
    case Method::regularized: {
      out.training = train(init, data.train, data.eval, tc, cfg.objective);
      break;
    }
    case Method::oversample: {
      const Dataset balanced = oversample_to_balance(data.train, derive_seed(seed, 0xba1a));
      tc.reg_weight = 0.0;
      out.training = train(init, balanced, data.eval, tc, cfg.objective);
      break;
    }
    case Method::gsmote:
    case Method::adaptive_gsmote: {
      const auto codec = make_codec(cfg.codec, data.train);
      AdaptiveConfig ac;
      ac.train = tc;
      ac.mix_prob = cfg.mix_prob;
      ac.augment_batch = cfg.augment_batch;
      ac.group_mode = cfg.group_mode;
      ac.objective = cfg.objective;
      AdaptiveResult ar =
          method == Method::adaptive_gsmote
              ? adaptive_train(init, data.train, data.eval, *codec, cfg.augment, ac)
              : static_gsmote_train(init, data.train, data.eval, *codec, cfg.augment, ac);
      out.training = std::move(ar.training);
      out.pool = std::move(ar.pool);
      out.augmentation_fallbacks = ar.augmentation_fallbacks;
      break;
    }
  }

  const PredictionModel best = out.training.best_model();
  out.test_report = confusion_by_group(predict_labels(best, data.test.features), data.test);
  return out;
}

AggregateRow aggregate_reports(const std::string& label, const std::vector<GroupReport>& reports) {
  AggregateRow row;
  row.label = label;
  row.n_seeds = static_cast<int>(reports.size());
  std::vector<double> acc, max_acc, min_acc, tpr, max_tpr, min_tpr, deo_v, deodds_v;
  for (const auto& r : reports) {
    const MinMaxSummary mm = minmax_summary(r);
    acc.push_back(r.overall_accuracy);
    max_acc.push_back(mm.max_group_accuracy);
    min_acc.push_back(mm.min_group_accuracy);
    if (mm.overall_tpr) tpr.push_back(*mm.overall_tpr);
    if (mm.max_group_tpr) max_tpr.push_back(*mm.max_group_tpr);
    if (mm.min_group_tpr) min_tpr.push_back(*mm.min_group_tpr);
    const auto d = max_pairwise_deo(r);
    const auto dd = max_pairwise_deodds(r);
    if (d) deo_v.push_back(*d);
    if (dd) deodds_v.push_back(*dd);
  }
  row.accuracy = mean_std(acc);
  row.max_group_acc = mean_std(max_acc);
  row.min_group_acc = mean_std(min_acc);
  row.tpr = mean_std(tpr);
  row.max_group_tpr = mean_std(max_tpr);
  row.min_group_tpr = mean_std(min_tpr);
  row.deo = mean_std(deo_v);
  row.deodds = mean_std(deodds_v);
  return row;
}

namespace {

json provenance_json(const Provenance& prov) {
  return {{"version", prov.version}, {"config_hash", prov.hash}};
}

json optional_rate(const std::optional<double>& v, const char* reason) {
  if (v) return *v;
  return {{"undefined", true}, {"reason", reason}};
}

}  // namespace

std::string group_report_to_json(const GroupReport& report, const Provenance& prov) {
  json j;
  j["provenance"] = provenance_json(prov);
  j["group_names"] = report.group_names;
  j["overall_accuracy"] = report.overall_accuracy;
  for (int g = 0; g < report.num_groups(); ++g) {
    const GroupStats& s = report.groups[static_cast<std::size_t>(g)];
    json gj;
    gj["name"] = report.group_names[static_cast<std::size_t>(g)];
    gj["tp"] = s.tp;
    gj["fp"] = s.fp;
    gj["tn"] = s.tn;
    gj["fn"] = s.fn;
    gj["accuracy"] = optional_rate(s.accuracy(), "group is empty");
    gj["tpr"] = optional_rate(s.tpr(), "group has no positives");
    gj["fpr"] = optional_rate(s.fpr(), "group has no negatives");
    j["groups"].push_back(std::move(gj));
  }
  const MinMaxSummary mm = minmax_summary(report);
  j["min_group_accuracy"] = mm.min_group_accuracy;
  j["argmin_group"] = mm.argmin_group;
  j["max_group_accuracy"] = mm.max_group_accuracy;
  j["min_group_tpr"] = optional_rate(mm.min_group_tpr, "no group has positives");
  for (int a = 0; a < report.num_groups(); ++a)
    for (int b = a + 1; b < report.num_groups(); ++b) {
      json pj;
      pj["a"] = report.group_names[static_cast<std::size_t>(a)];
      pj["b"] = report.group_names[static_cast<std::size_t>(b)];
      pj["deo"] = optional_rate(deo(report, a, b), "a group has no positives");
      pj["deodds"] = optional_rate(deodds(report, a, b), "a conditional is undefined");
      j["pairs"].push_back(std::move(pj));
    }
  j["max_deo"] = optional_rate(max_pairwise_deo(report), "all pairs undefined");
  j["max_deodds"] = optional_rate(max_pairwise_deodds(report), "all pairs undefined");
  j["deodds_convention"] = "raw sum of TPR and FPR gaps, range [0,2], not divided by 2";
  return j.dump(2);
}

GroupReport group_report_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
  GroupReport report;
  try {
    report.group_names = j.at("group_names").get<std::vector<std::string>>();
    report.overall_accuracy = j.at("overall_accuracy").get<double>();
    for (const auto& gj : j.at("groups")) {
      GroupStats s;
      s.tp = gj.at("tp").get<long>();
      s.fp = gj.at("fp").get<long>();
      s.tn = gj.at("tn").get<long>();
      s.fn = gj.at("fn").get<long>();
      report.groups.push_back(s);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report error: ") + e.what());
  }
  if (report.groups.size() != report.group_names.size())
    throw ValidationError("report error: groups and group_names differ in length");
  return report;
}

std::string pareto_verdict_to_json(const ParetoVerdict& verdict,
                                   const std::vector<std::string>& group_names,
                                   const Provenance& prov) {
  json j;
  j["provenance"] = provenance_json(prov);
  j["verdict"] = to_string(verdict.verdict);
  j["tolerance"] = verdict.tolerance;
  j["worst_group_delta"] = verdict.worst_group_delta;
  j["baseline_worst_group"] = group_names.at(static_cast<std::size_t>(verdict.baseline_worst_group));
  for (std::size_t g = 0; g < verdict.deltas.size(); ++g)
    j["deltas"].push_back({{"group", group_names.at(g)}, {"accuracy_delta", verdict.deltas[g]}});
  return j.dump(2);
}

void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

std::string provenance_comment(const Provenance& prov) {
  return "# fairkit " + prov.version + " config " + prov.hash + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << text;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_checkpoint_log(const TrainResult& tr, const std::vector<std::string>& group_names,
                          const std::string& path, const Provenance& prov) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << provenance_comment(prov);
  out << "step,mean_batch_loss,overall_accuracy,min_group_accuracy";
  for (const auto& name : group_names) out << ",acc_" << name;
  out << ",deo,deodds,regularizer_skip_rate\n";
  for (const auto& ck : tr.checkpoints) {
    const MinMaxSummary mm = minmax_summary(ck.eval_report);
    out << ck.step << "," << fmt(ck.mean_batch_loss) << "," << fmt(ck.eval_report.overall_accuracy)
        << "," << fmt(mm.min_group_accuracy);
    for (int g = 0; g < ck.eval_report.num_groups(); ++g) {
      const auto acc = ck.eval_report.groups[static_cast<std::size_t>(g)].accuracy();
      out << "," << (acc ? fmt(*acc) : "nan");
    }
    const auto d = max_pairwise_deo(ck.eval_report);
    const auto dd = max_pairwise_deodds(ck.eval_report);
    out << "," << (d ? fmt(*d) : "nan") << "," << (dd ? fmt(*dd) : "nan") << ","
        << fmt(ck.regularizer_skip_rate) << "\n";
  }
}

std::string aggregate_csv_header() {
  return "label,n_seeds,accuracy_mean,accuracy_std,max_group_acc_mean,max_group_acc_std,"
         "min_group_acc_mean,min_group_acc_std,tpr_mean,tpr_std,max_group_tpr_mean,"
         "max_group_tpr_std,min_group_tpr_mean,min_group_tpr_std,deo_mean,deo_std,"
         "deodds_mean,deodds_std\n";
}

std::string aggregate_csv_row(const AggregateRow& r) {
  std::ostringstream out;
  out << r.label << "," << r.n_seeds;
  for (const MeanStd* ms : {&r.accuracy, &r.max_group_acc, &r.min_group_acc, &r.tpr,
                            &r.max_group_tpr, &r.min_group_tpr, &r.deo, &r.deodds})
    out << "," << fmt(ms->mean) << "," << fmt(ms->stddev);
  out << "\n";
  return out.str();
}

}  // namespace

void cmd_generate(const ExperimentConfig& cfg, const Provenance& prov, const CommonOptions& opt) {
  if (!cfg.synthetic) throw ValidationError("generate requires a data.synthetic section");
  auto [ds, cond] = generate_synthetic(*cfg.synthetic);
  (void)cond;
  const SplitResult split = stratified_split(ds, cfg.split);
  fs::create_directories(opt.out_dir);
  const std::string base = opt.out_dir + "/";
  save_csv(split.train, base + "train.csv");
  save_csv(split.eval, base + "eval.csv");
  save_csv(split.test, base + "test.csv");
  save_metadata(ds, *cfg.synthetic, base + "meta.json");
  // stamp provenance into the metadata file as well
  std::ifstream in(base + "meta.json");
  json meta;
  in >> meta;
  in.close();
  meta["provenance"] = provenance_json(prov);
  write_text(base + "meta.json", meta.dump(2) + "\n");
}

TrainOutputs cmd_train(const ExperimentConfig& cfg, const Provenance& prov,
                       const CommonOptions& opt) {
  const DataBundle data = prepare_data(cfg);
  fs::create_directories(opt.out_dir);

  TrainOutputs out;
  out.runs.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), opt.jobs, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i] + opt.seed_offset;
    out.runs[i] = run_method(cfg.method, data, cfg, seed);
  });

  std::vector<GroupReport> reports;
  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    const RunResult& run = out.runs[i];
    const std::string tag = "_seed" + std::to_string(run.seed);
    save_model(out.runs[i].training.best_model(), opt.out_dir + "/model" + tag + ".json");
    write_checkpoint_log(run.training, data.eval.group_names,
                         opt.out_dir + "/checkpoints" + tag + ".csv", prov);
    write_text(opt.out_dir + "/report" + tag + ".json",
               group_report_to_json(run.test_report, prov) + "\n");
    if (run.pool)
      run.pool->write_provenance_csv(opt.out_dir + "/pool" + tag + ".csv");
    reports.push_back(run.test_report);
  }
  out.aggregate = aggregate_reports(to_string(cfg.method), reports);
  write_text(opt.out_dir + "/aggregate.csv",
             provenance_comment(prov) + aggregate_csv_header() + aggregate_csv_row(out.aggregate));
  return out;
}

void cmd_evaluate(const std::string& model_path, const std::string& data_path,
                  const std::string& out_path, const Provenance& prov) {
  const PredictionModel model = load_model(model_path);
  const Dataset ds = load_csv(data_path);
  const GroupReport report = confusion_by_group(predict_labels(model, ds.features), ds);
  write_text(out_path, group_report_to_json(report, prov) + "\n");
}

SweepOutputs cmd_sweep(const ExperimentConfig& cfg, const Provenance& prov,
                       const CommonOptions& opt) {
  if (cfg.sweep.empty()) throw ValidationError("sweep requires a non-empty sweep list");
  const DataBundle data = prepare_data(cfg);
  fs::create_directories(opt.out_dir);

  std::vector<double> weights = cfg.sweep;
  std::sort(weights.begin(), weights.end());

  struct Cell {
    GroupReport report;
  };
  std::vector<std::vector<Cell>> cells(weights.size());
  for (auto& c : cells) c.resize(cfg.seeds.size());

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t w = 0; w < weights.size(); ++w)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.emplace_back(w, s);

  parallel_for(jobs.size(), opt.jobs, [&](std::size_t i) {
    const auto [w, s] = jobs[i];
    ExperimentConfig run_cfg = cfg;
    run_cfg.train.reg_weight = weights[w];
    run_cfg.method = weights[w] > 0.0 ? Method::regularized : Method::baseline;
    const RunResult r =
        run_method(run_cfg.method, data, run_cfg, cfg.seeds[s] + opt.seed_offset);
    cells[w][s].report = r.test_report;
  });

  SweepOutputs out;
  std::vector<double> mean_deo, mean_min_acc;
  for (std::size_t w = 0; w < weights.size(); ++w) {
    std::vector<GroupReport> reports;
    for (auto& c : cells[w]) reports.push_back(std::move(c.report));
    SweepRow row;
    row.reg_weight = weights[w];
    row.stats = aggregate_reports(fmt(weights[w]), reports);
    for (int g = 0; g < data.test.num_groups(); ++g) {
      std::vector<double> accs;
      for (const auto& rep : reports) {
        const auto a = rep.groups[static_cast<std::size_t>(g)].accuracy();
        if (a) accs.push_back(*a);
      }
      row.group_acc.push_back(mean_std(accs));
    }
    mean_deo.push_back(row.stats.deo.mean);
    mean_min_acc.push_back(row.stats.min_group_acc.mean);
    out.rows.push_back(std::move(row));
  }
  out.spearman_deo = spearman(weights, mean_deo);
  out.spearman_min_acc = spearman(weights, mean_min_acc);

  std::ostringstream csv;
  csv << provenance_comment(prov);
  csv << "reg_weight,accuracy_mean,accuracy_std";
  for (const auto& name : data.test.group_names) csv << ",acc_" << name << "_mean,acc_" << name << "_std";
  csv << ",min_group_acc_mean,min_group_acc_std,deo_mean,deo_std,deodds_mean,deodds_std\n";
  for (const auto& row : out.rows) {
    csv << fmt(row.reg_weight) << "," << fmt(row.stats.accuracy.mean) << ","
        << fmt(row.stats.accuracy.stddev);
    for (const auto& g : row.group_acc) csv << "," << fmt(g.mean) << "," << fmt(g.stddev);
    csv << "," << fmt(row.stats.min_group_acc.mean) << "," << fmt(row.stats.min_group_acc.stddev)
        << "," << fmt(row.stats.deo.mean) << "," << fmt(row.stats.deo.stddev) << ","
        << fmt(row.stats.deodds.mean) << "," << fmt(row.stats.deodds.stddev) << "\n";
  }
  csv << "# spearman_reg_weight_vs_deo,"
      << (out.spearman_deo ? fmt(*out.spearman_deo) : "undefined (need >= 2 distinct points)")
      << "\n";
  csv << "# spearman_reg_weight_vs_min_group_acc,"
      << (out.spearman_min_acc ? fmt(*out.spearman_min_acc)
                               : "undefined (need >= 2 distinct points)")
      << "\n";
  write_text(opt.out_dir + "/sweep.csv", csv.str());
  return out;
}

ParetoVerdict cmd_audit(const std::string& baseline_path, const std::string& intervention_path,
                        double tolerance, const std::string& out_path, const Provenance& prov) {
  std::ifstream bin(baseline_path), iin(intervention_path);
  if (!bin) throw ValidationError("cannot open report: " + baseline_path);
  if (!iin) throw ValidationError("cannot open report: " + intervention_path);
  std::stringstream bs, is;
  bs << bin.rdbuf();
  is << iin.rdbuf();
  const GroupReport baseline = group_report_from_json(bs.str());
  const GroupReport intervention = group_report_from_json(is.str());
  if (baseline.group_names != intervention.group_names) {
    std::string msg = "group sets differ: baseline {";
    for (const auto& n : baseline.group_names) msg += n + " ";
    msg += "} vs intervention {";
    for (const auto& n : intervention.group_names) msg += n + " ";
    msg += "}";
    throw ValidationError(msg);
  }
  const ParetoVerdict verdict = classify_intervention(baseline, intervention, tolerance);
  if (!out_path.empty())
    write_text(out_path, pareto_verdict_to_json(verdict, baseline.group_names, prov) + "\n");
  return verdict;
}

DecompositionReport cmd_decompose(const ExperimentConfig& cfg, const Provenance& prov,
                                  const CommonOptions& opt) {
  const DataBundle data = prepare_data(cfg);
  fs::create_directories(opt.out_dir);

  DecomposeConfig dc;
  dc.replicates = cfg.decompose.replicates;
  dc.loss = cfg.decompose.loss;
  dc.resample = cfg.decompose.resample;
  if (dc.resample.mode == ResampleSpec::Mode::subsample && dc.resample.subsample_size == 0)
    dc.resample.subsample_size = std::max<Eigen::Index>(1, data.train.size() / 2);
  dc.seed = cfg.seeds.front() + opt.seed_offset;

  const ExperimentConfig cfg_copy = cfg;
  const Dataset& eval = data.eval;
  Trainer trainer = [cfg_copy, &eval](const Dataset& sample, std::uint64_t seed) -> Predictor {
    TrainConfig tc = cfg_copy.train;
    tc.seed = seed;
    tc.reg_weight = 0.0;
    PredictionModel init = make_model(cfg_copy.model, sample.dim(), seed);
    PredictionModel trained =
        train(init, sample, eval, tc, cfg_copy.objective).model;
    return [model = std::move(trained)](const Eigen::Ref<const Eigen::MatrixXd>& x) {
      return predict_scores(model, x);
    };
  };

  const TrueConditional* cond =
      (!cfg.decompose.single_label && data.cond) ? &*data.cond : nullptr;
  DecompositionReport report = decompose_fairness(data.test, cond, trainer, data.train, dc);

  json j = json::parse(report_to_json(report));
  j["provenance"] = provenance_json(prov);
  write_text(opt.out_dir + "/decomposition.json", j.dump(2) + "\n");
  write_point_csv(report, opt.out_dir + "/decomposition_points.csv");
  return report;
}

std::vector<MkCell> cmd_sweep_mk(const ExperimentConfig& cfg, const Provenance& prov,
                                 const CommonOptions& opt) {
  if (cfg.mk_grid.m_values.empty() || cfg.mk_grid.k_values.empty())
    throw ValidationError("sweep-mk requires mk_grid.m and mk_grid.k");
  const DataBundle data = prepare_data(cfg);
  fs::create_directories(opt.out_dir);

  std::vector<MkCell> cells;
  for (const auto m : cfg.mk_grid.m_values)
    for (const auto k : cfg.mk_grid.k_values) {
      MkCell cell;
      cell.m = m;
      cell.k = k;
      cell.valid = k >= 1 && k <= m;
      cells.push_back(cell);
    }

  const Method method =
      cfg.method == Method::adaptive_gsmote ? Method::adaptive_gsmote : Method::gsmote;

  std::vector<std::vector<double>> cell_accs(cells.size());
  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (!cells[c].valid) continue;
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) jobs.emplace_back(c, s);
    cell_accs[c].resize(cfg.seeds.size());
  }

  parallel_for(jobs.size(), opt.jobs, [&](std::size_t i) {
    const auto [c, s] = jobs[i];
    ExperimentConfig run_cfg = cfg;
    run_cfg.augment.m = cells[c].m;
    run_cfg.augment.k = cells[c].k;
    const RunResult r = run_method(method, data, run_cfg, cfg.seeds[s] + opt.seed_offset);
    cell_accs[c][s] = minmax_summary(r.test_report).min_group_accuracy;
  });

  std::ostringstream csv;
  csv << provenance_comment(prov);
  csv << "m,k,status,min_group_acc_mean,min_group_acc_std,n_seeds\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (cells[c].valid) {
      const MeanStd ms = mean_std(cell_accs[c]);
      cells[c].min_group_acc = ms;
      cells[c].n_seeds = static_cast<int>(cfg.seeds.size());
      csv << cells[c].m << "," << cells[c].k << ",ok," << fmt(ms.mean) << "," << fmt(ms.stddev)
          << "," << cells[c].n_seeds << "\n";
    } else {
      csv << cells[c].m << "," << cells[c].k << ",invalid_k_gt_m,nan,nan,0\n";
    }
  }
  write_text(opt.out_dir + "/sweep_mk.csv", csv.str());
  return cells;
}

}  // namespace fairkit
