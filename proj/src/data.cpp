#include "fairkit/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fairkit/rng.hpp"

namespace fairkit {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset Dataset::select(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.resize(static_cast<Eigen::Index>(rows.size()));
  out.groups.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(rows[i]);
    out.labels[static_cast<Eigen::Index>(i)] = labels[rows[i]];
    out.groups[static_cast<Eigen::Index>(i)] = groups[rows[i]];
  }
  out.group_names = group_names;
  return out;
}

std::vector<Eigen::Index> Dataset::rows_of_group(int g, std::optional<int> label) const {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < size(); ++i) {
    if (groups[i] != g) continue;
    if (label && labels[i] != *label) continue;
    out.push_back(i);
  }
  return out;
}

void validate_dataset(const Dataset& ds) {
  const Eigen::Index n = ds.features.rows();
  if (n < 1) throw ValidationError("dataset is empty");
  if (ds.features.cols() < 1) throw ValidationError("dataset has no feature columns");
  if (ds.labels.size() != n || ds.groups.size() != n)
    throw ValidationError("features, labels and groups have mismatched lengths");
  const int num_groups = ds.num_groups();
  if (num_groups < 1) throw ValidationError("dataset has no group names");
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(num_groups), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (ds.labels[i] != 0 && ds.labels[i] != 1)
      throw ValidationError("label at row " + std::to_string(i) + " is not in {0,1}");
    if (ds.groups[i] < 0 || ds.groups[i] >= num_groups)
      throw ValidationError("group id at row " + std::to_string(i) + " is out of range");
    ++counts[static_cast<std::size_t>(ds.groups[i])];
  }
  for (int g = 0; g < num_groups; ++g)
    if (counts[static_cast<std::size_t>(g)] == 0)
      throw ValidationError("group '" + ds.group_names[static_cast<std::size_t>(g)] + "' is empty");
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path);

  std::string line;
  // skip provenance comment lines
  do {
    if (!std::getline(in, line)) throw ValidationError("empty file: " + path);
  } while (!line.empty() && line[0] == '#');
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  std::ptrdiff_t label_col = -1, group_col = -1;
  std::vector<std::pair<int, std::size_t>> feature_cols;  // (feature index, column)
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) label_col = static_cast<std::ptrdiff_t>(c);
    else if (header[c] == schema.group_column) group_col = static_cast<std::ptrdiff_t>(c);
    else if (header[c].rfind(schema.feature_prefix, 0) == 0) {
      const std::string suffix = header[c].substr(schema.feature_prefix.size());
      try {
        feature_cols.emplace_back(std::stoi(suffix), c);
      } catch (const std::exception&) {
        throw ValidationError("schema error: malformed feature column '" + header[c] + "'");
      }
    }
  }
  if (label_col < 0)
    throw ValidationError("schema error: missing column '" + schema.label_column + "'");
  if (group_col < 0)
    throw ValidationError("schema error: missing column '" + schema.group_column + "'");
  if (feature_cols.empty())
    throw ValidationError("schema error: no columns with prefix '" + schema.feature_prefix + "'");
  std::sort(feature_cols.begin(), feature_cols.end());
  for (std::size_t i = 0; i < feature_cols.size(); ++i)
    if (feature_cols[i].first != static_cast<int>(i))
      throw ValidationError("schema error: feature columns are not contiguous from 0");

  const Eigen::Index d = static_cast<Eigen::Index>(feature_cols.size());
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<int> group_ids;
  std::vector<std::string> group_names;
  std::map<std::string, int> group_index;

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    ++row;
    const std::vector<std::string> fields = split_line(line);
    if (fields.size() != header.size())
      throw ValidationError("parse error at row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    const std::string& label_str = fields[static_cast<std::size_t>(label_col)];
    if (label_str != "0" && label_str != "1")
      throw ValidationError("parse error at row " + std::to_string(row) + ": label '" +
                            label_str + "' is not 0 or 1");
    labels.push_back(label_str == "1" ? 1 : 0);
    const std::string& group_str = fields[static_cast<std::size_t>(group_col)];
    auto [it, inserted] = group_index.try_emplace(group_str, static_cast<int>(group_names.size()));
    if (inserted) group_names.push_back(group_str);
    group_ids.push_back(it->second);
    for (const auto& [idx, col] : feature_cols) {
      (void)idx;
      try {
        std::size_t pos = 0;
        const double v = std::stod(fields[col], &pos);
        if (pos != fields[col].size()) throw std::invalid_argument("trailing characters");
        values.push_back(v);
      } catch (const std::exception&) {
        throw ValidationError("parse error at row " + std::to_string(row) + ": bad number '" +
                              fields[col] + "'");
      }
    }
  }
  if (row == 0) throw ValidationError("empty dataset: " + path + " has no data rows");

  Dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(row);
  ds.features.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      ds.features(i, j) = values[static_cast<std::size_t>(i * d + j)];
  ds.labels = Eigen::Map<Eigen::VectorXi>(labels.data(), n);
  ds.groups = Eigen::Map<Eigen::VectorXi>(group_ids.data(), n);
  ds.group_names = std::move(group_names);
  validate_dataset(ds);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  for (Eigen::Index j = 0; j < ds.dim(); ++j) out << "feature_" << j << ",";
  out << "label,group\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dim(); ++j) out << format_double(ds.features(i, j)) << ",";
    out << ds.labels[i] << "," << ds.group_names[static_cast<std::size_t>(ds.groups[i])] << "\n";
  }
}

void save_metadata(const Dataset& ds, const SyntheticSpec& spec, const std::string& path) {
  nlohmann::json j;
  j["group_names"] = ds.group_names;
  j["seed"] = spec.seed;
  nlohmann::json s;
  s["n_per_group"] = spec.n_per_group;
  s["dims"] = spec.dims;
  std::vector<std::vector<std::vector<double>>> means;
  for (const auto& per_group : spec.cluster_means) {
    std::vector<std::vector<double>> pair;
    for (const auto& m : per_group)
      pair.emplace_back(m.data(), m.data() + m.size());
    means.push_back(std::move(pair));
  }
  s["cluster_means"] = means;
  std::vector<std::vector<double>> stddev;
  for (const auto& per_group : spec.cluster_stddev)
    stddev.push_back({per_group[0], per_group[1]});
  s["cluster_stddev"] = stddev;
  s["label_noise_rate"] = spec.label_noise_rate;
  j["spec"] = s;
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

namespace {

void validate_synthetic_spec(const SyntheticSpec& spec) {
  const std::size_t g = spec.n_per_group.size();
  if (g < 2) throw ValidationError("synthetic spec needs at least 2 groups");
  if (spec.dims < 1) throw ValidationError("synthetic spec: dims must be >= 1");
  if (spec.cluster_means.size() != g || spec.cluster_stddev.size() != g ||
      spec.label_noise_rate.size() != g)
    throw ValidationError("synthetic spec: per-group arrays have mismatched lengths");
  for (std::size_t i = 0; i < g; ++i) {
    if (spec.n_per_group[i] < 1)
      throw ValidationError("synthetic spec: n_per_group must be positive");
    for (int y = 0; y < 2; ++y) {
      if (spec.cluster_means[i][static_cast<std::size_t>(y)].size() != spec.dims)
        throw ValidationError("synthetic spec: cluster mean dimension mismatch");
      if (!spec.cluster_means[i][static_cast<std::size_t>(y)].allFinite())
        throw ValidationError("synthetic spec: cluster means must be finite");
      if (!(spec.cluster_stddev[i][static_cast<std::size_t>(y)] > 0.0))
        throw ValidationError("synthetic spec: cluster stddev must be positive");
    }
    if (!(spec.label_noise_rate[i] >= 0.0 && spec.label_noise_rate[i] < 0.5))
      throw ValidationError("synthetic spec: label_noise_rate must be in [0, 0.5)");
  }
}

}  // namespace

std::pair<Dataset, TrueConditional> generate_synthetic(const SyntheticSpec& spec) {
  validate_synthetic_spec(spec);
  const int num_groups = static_cast<int>(spec.n_per_group.size());
  const Eigen::Index n = std::accumulate(spec.n_per_group.begin(), spec.n_per_group.end(),
                                         Eigen::Index{0});

  Dataset ds;
  ds.features.resize(n, spec.dims);
  ds.labels.resize(n);
  ds.groups.resize(n);
  for (int g = 0; g < num_groups; ++g) ds.group_names.push_back("g" + std::to_string(g));

  Rng rng(derive_seed(spec.seed, 0xda7a));
  Eigen::Index row = 0;
  for (int g = 0; g < num_groups; ++g) {
    const auto gs = static_cast<std::size_t>(g);
    for (Eigen::Index i = 0; i < spec.n_per_group[gs]; ++i, ++row) {
      const int clean = rng.bernoulli(0.5) ? 1 : 0;
      const auto& mean = spec.cluster_means[gs][static_cast<std::size_t>(clean)];
      const double sd = spec.cluster_stddev[gs][static_cast<std::size_t>(clean)];
      for (Eigen::Index j = 0; j < spec.dims; ++j)
        ds.features(row, j) = mean[j] + sd * rng.normal();
      const bool flip = rng.bernoulli(spec.label_noise_rate[gs]);
      ds.labels[row] = flip ? 1 - clean : clean;
      ds.groups[row] = g;
    }
  }

  // Posterior marginalizing group membership:
  //   P(Y=1|x) = sum_g P(g|x) [ (1-rho_g) q_g(x) + rho_g (1 - q_g(x)) ]
  // with q_g the clean-label posterior of group g's mixture and
  // P(g|x) proportional to pi_g * (phi_g1 + phi_g0) / 2.
  const SyntheticSpec frozen = spec;
  const double total = static_cast<double>(n);
  TrueConditional cond = [frozen, total](const Eigen::Ref<const Eigen::VectorXd>& x) -> double {
    double norm = 0.0;
    double p1 = 0.0;
    for (std::size_t g = 0; g < frozen.n_per_group.size(); ++g) {
      const double pi_g = static_cast<double>(frozen.n_per_group[g]) / total;
      double dens[2];
      for (int y = 0; y < 2; ++y) {
        const auto ys = static_cast<std::size_t>(y);
        const double sd = frozen.cluster_stddev[g][ys];
        const double sq = (x - frozen.cluster_means[g][ys]).squaredNorm();
        const double dim = static_cast<double>(x.size());
        dens[y] = std::exp(-0.5 * sq / (sd * sd)) /
                  std::pow(2.0 * M_PI * sd * sd, 0.5 * dim);
      }
      const double mix = 0.5 * (dens[0] + dens[1]);
      const double w = pi_g * mix;
      if (w <= 0.0) continue;
      const double q = dens[1] / (dens[0] + dens[1]);  // clean posterior within group
      const double rho = frozen.label_noise_rate[g];
      p1 += w * ((1.0 - rho) * q + rho * (1.0 - q));
      norm += w;
    }
    if (norm <= 0.0) return 0.5;  // point infinitely far from every cluster
    return std::clamp(p1 / norm, 0.0, 1.0);
  };

  return {std::move(ds), std::move(cond)};
}

SplitResult stratified_split(const Dataset& ds, const SplitSpec& spec) {
  validate_dataset(ds);
  const double sum = spec.train_fraction + spec.eval_fraction + spec.test_fraction;
  if (std::fabs(sum - 1.0) > 1e-9)
    throw ValidationError("split fractions sum to " + std::to_string(sum) + ", expected 1");
  if (!(spec.train_fraction > 0.0 && spec.eval_fraction > 0.0 && spec.test_fraction > 0.0))
    throw ValidationError("split fractions must be in (0,1)");

  std::vector<std::vector<Eigen::Index>> splits(3);
  for (int g = 0; g < ds.num_groups(); ++g) {
    for (int y = 0; y < 2; ++y) {
      std::vector<Eigen::Index> cell = ds.rows_of_group(g, y);
      if (cell.empty()) continue;  // a group may legitimately have a single label
      if (cell.size() < 3)
        throw StratificationError("cell (group=" + ds.group_names[static_cast<std::size_t>(g)] +
                                  ", label=" + std::to_string(y) + ") has " +
                                  std::to_string(cell.size()) + " members, need >= 3");
      Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(g) * 2 + static_cast<std::uint64_t>(y)));
      for (std::size_t i = cell.size(); i > 1; --i)
        std::swap(cell[i - 1], cell[rng.uniform_below(i)]);

      const double fracs[3] = {spec.train_fraction, spec.eval_fraction, spec.test_fraction};
      const double cn = static_cast<double>(cell.size());
      std::size_t sizes[3];
      double rema[3];
      std::size_t assigned = 0;
      for (int s = 0; s < 3; ++s) {
        const double exact = fracs[s] * cn;
        sizes[s] = static_cast<std::size_t>(std::floor(exact));
        rema[s] = exact - std::floor(exact);
        assigned += sizes[s];
      }
      // largest remainder; ties by split order (train, eval, test)
      while (assigned < cell.size()) {
        int best = 0;
        for (int s = 1; s < 3; ++s)
          if (rema[s] > rema[best]) best = s;
        ++sizes[best];
        rema[best] = -1.0;
        ++assigned;
      }
      for (int s = 0; s < 3; ++s)
        if (sizes[s] == 0)
          throw StratificationError("cell (group=" + ds.group_names[static_cast<std::size_t>(g)] +
                                    ", label=" + std::to_string(y) +
                                    ") yields an empty split; use larger fractions or more data");
      std::size_t offset = 0;
      for (int s = 0; s < 3; ++s) {
        for (std::size_t i = 0; i < sizes[s]; ++i)
          splits[static_cast<std::size_t>(s)].push_back(cell[offset + i]);
        offset += sizes[s];
      }
    }
  }
  for (auto& part : splits) std::sort(part.begin(), part.end());
  return {ds.select(splits[0]), ds.select(splits[1]), ds.select(splits[2])};
}

Dataset bootstrap_resample(const Dataset& ds, std::uint64_t seed) {
  validate_dataset(ds);
  Rng rng(derive_seed(seed, 0xb007));
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(ds.size()));
  for (auto& r : rows)
    r = static_cast<Eigen::Index>(rng.uniform_below(static_cast<std::uint64_t>(ds.size())));
  return ds.select(rows);
}

Dataset subsample_resample(const Dataset& ds, Eigen::Index size, std::uint64_t seed) {
  validate_dataset(ds);
  if (size < 1 || size > ds.size())
    throw ValidationError("subsample size must be in [1, n]");
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(ds.size()));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  Rng rng(derive_seed(seed, 0x5ab5));
  for (std::size_t i = rows.size(); i > 1; --i)
    std::swap(rows[i - 1], rows[rng.uniform_below(i)]);
  rows.resize(static_cast<std::size_t>(size));
  std::sort(rows.begin(), rows.end());
  return ds.select(rows);
}

Dataset ResampleSpec::draw(const Dataset& base, std::uint64_t seed) const {
  if (mode == Mode::bootstrap) return bootstrap_resample(base, seed);
  return subsample_resample(base, subsample_size, seed);
}

Dataset oversample_to_balance(const Dataset& ds, std::uint64_t seed) {
  validate_dataset(ds);
  std::size_t max_cell = 0;
  std::vector<std::vector<Eigen::Index>> cells;
  for (int g = 0; g < ds.num_groups(); ++g)
    for (int y = 0; y < 2; ++y) {
      auto cell = ds.rows_of_group(g, y);
      if (!cell.empty()) max_cell = std::max(max_cell, cell.size());
      cells.push_back(std::move(cell));
    }
  std::vector<Eigen::Index> rows;
  Rng rng(derive_seed(seed, 0x07e2));
  for (auto& cell : cells) {
    if (cell.empty()) continue;
    rows.insert(rows.end(), cell.begin(), cell.end());
    for (std::size_t i = cell.size(); i < max_cell; ++i)
      rows.push_back(cell[rng.uniform_below(cell.size())]);
  }
  std::sort(rows.begin(), rows.end());
  return ds.select(rows);
}

}  // namespace fairkit
