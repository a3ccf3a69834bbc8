#include "fairkit/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace fairkit {

FileBackedCodec::FileBackedCodec(Eigen::MatrixXd latents, Eigen::MatrixXd features)
    : latents_(std::move(latents)), features_(std::move(features)) {
  if (latents_.rows() != features_.rows())
    throw ValidationError("latent table and feature table have different row counts");
  if (latents_.rows() == 0) throw ValidationError("latent table is empty");
}

FileBackedCodec FileBackedCodec::from_csv(const std::string& latent_path, const Dataset& ds) {
  std::ifstream in(latent_path);
  if (!in) throw ValidationError("cannot open file: " + latent_path);
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty latent file: " + latent_path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream header(line);
  std::string col;
  std::vector<std::string> cols;
  while (std::getline(header, col, ',')) cols.push_back(col);
  if (cols.empty() || cols[0] != "row_id")
    throw ValidationError("latent file must start with a row_id column");
  const Eigen::Index nz = static_cast<Eigen::Index>(cols.size()) - 1;
  if (nz < 1) throw ValidationError("latent file has no z_* columns");

  Eigen::MatrixXd latents = Eigen::MatrixXd::Constant(ds.size(), nz,
                                                      std::numeric_limits<double>::quiet_NaN());
  std::size_t row_count = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> vals;
    while (std::getline(ss, field, ',')) vals.push_back(std::stod(field));
    if (static_cast<Eigen::Index>(vals.size()) != nz + 1)
      throw ValidationError("latent file row has wrong field count");
    const Eigen::Index row = static_cast<Eigen::Index>(vals[0]);
    if (row < 0 || row >= ds.size())
      throw ValidationError("latent file row_id " + std::to_string(row) + " out of range");
    for (Eigen::Index j = 0; j < nz; ++j) latents(row, j) = vals[static_cast<std::size_t>(j) + 1];
    ++row_count;
  }
  if (static_cast<Eigen::Index>(row_count) != ds.size() || latents.hasNaN())
    throw ValidationError("latent file must provide exactly one latent per training row");
  return FileBackedCodec(std::move(latents), ds.features);
}

void FileBackedCodec::add_generator_table(Eigen::MatrixXd latents, Eigen::MatrixXd features) {
  if (latents.rows() != features.rows())
    throw ValidationError("generator table latents/features row mismatch");
  if (latents.cols() != latents_.cols() || features.cols() != features_.cols())
    throw ValidationError("generator table dimension mismatch");
  gen_latents_ = std::move(latents);
  gen_features_ = std::move(features);
}

Eigen::VectorXd FileBackedCodec::encode(Eigen::Index row,
                                        const Eigen::Ref<const Eigen::VectorXd>&) const {
  if (row < 0 || row >= latents_.rows())
    throw ValidationError("no stored latent for row " + std::to_string(row));
  return latents_.row(row);
}

Eigen::VectorXd FileBackedCodec::decode(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (z.size() != latents_.cols()) throw ValidationError("latent dimension mismatch in decode");
  Eigen::Index best = 0;
  double best_dist = (latents_.row(0).transpose() - z).squaredNorm();
  bool best_is_gen = false;
  for (Eigen::Index i = 1; i < latents_.rows(); ++i) {
    const double d = (latents_.row(i).transpose() - z).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  for (Eigen::Index i = 0; i < gen_latents_.rows(); ++i) {
    const double d = (gen_latents_.row(i).transpose() - z).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = i;
      best_is_gen = true;
    }
  }
  return best_is_gen ? gen_features_.row(best) : features_.row(best);
}

void validate_augment_config(const AugmentConfig& cfg) {
  if (cfg.m < 1) throw ValidationError("m must be >= 1");
  if (cfg.k < 1 || cfg.k > cfg.m) throw ValidationError("k must satisfy 1 <= k <= m");
}

Eigen::VectorXd sample_simplex(const std::vector<Eigen::VectorXd>& vertices, Rng& rng) {
  if (vertices.empty()) throw ValidationError("sample_simplex needs at least one vertex");
  const Eigen::Index dim = vertices[0].size();
  for (const auto& v : vertices)
    if (v.size() != dim) throw ValidationError("simplex vertices have mixed dimensions");
  Eigen::VectorXd rho = vertices[0];
  for (std::size_t i = 1; i < vertices.size(); ++i) {
    const double u = rng.uniform01();
    const double w = std::pow(u, 1.0 / static_cast<double>(i));
    rho = w * rho + (1.0 - w) * vertices[i];
  }
  return rho;
}

std::vector<Eigen::Index> nearest_neighbors(
    const Eigen::Ref<const Eigen::VectorXd>& seed_latent,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::Index>>& cohort, Eigen::Index m) {
  if (static_cast<Eigen::Index>(cohort.size()) < m)
    throw ValidationError("cohort of size " + std::to_string(cohort.size()) +
                          " cannot provide m=" + std::to_string(m) + " neighbors");
  std::vector<std::pair<double, Eigen::Index>> by_dist;
  by_dist.reserve(cohort.size());
  for (const auto& [z, row] : cohort) {
    if (z.size() != seed_latent.size())
      throw ValidationError("latent dimension mismatch in nearest_neighbors");
    by_dist.emplace_back((z - seed_latent).squaredNorm(), row);
  }
  std::partial_sort(by_dist.begin(), by_dist.begin() + m, by_dist.end());
  std::vector<Eigen::Index> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) out.push_back(by_dist[static_cast<std::size_t>(i)].second);
  return out;
}

LatentCache::LatentCache(const Dataset& ds, const LatentCodec& codec) {
  const Eigen::Index nz = codec.latent_dim(ds.dim());
  latents_.resize(ds.size(), nz);
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    latents_.row(i) = codec.encode(i, ds.features.row(i).transpose());
}

AugmentSample gsmote_sample(const Dataset& ds, const LatentCodec& codec, const LatentCache& cache,
                            Eigen::Index seed_row, const AugmentConfig& cfg, Rng& rng) {
  validate_augment_config(cfg);
  if (seed_row < 0 || seed_row >= ds.size()) throw ValidationError("seed_row out of range");

  const int label = ds.labels[seed_row];
  std::vector<std::pair<Eigen::VectorXd, Eigen::Index>> cohort;
  for (Eigen::Index i = 0; i < ds.size(); ++i)
    if (i != seed_row && ds.labels[i] == label) cohort.emplace_back(cache.latent(i), i);
  if (static_cast<Eigen::Index>(cohort.size()) < cfg.m)
    throw AugmentationUnavailableError("label-" + std::to_string(label) + " cohort has " +
                                       std::to_string(cohort.size()) + " members, need m=" +
                                       std::to_string(cfg.m));

  const Eigen::VectorXd seed_z = cache.latent(seed_row);
  std::vector<Eigen::Index> pool = nearest_neighbors(seed_z, cohort, cfg.m);

  // choose k of the m without replacement (partial Fisher-Yates)
  for (Eigen::Index i = 0; i < cfg.k; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(rng.uniform_below(
                       static_cast<std::uint64_t>(cfg.m - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }

  std::vector<Eigen::VectorXd> vertices;
  if (cfg.include_seed) vertices.push_back(seed_z);
  for (Eigen::Index i = 0; i < cfg.k; ++i)
    vertices.push_back(cache.latent(pool[static_cast<std::size_t>(i)]));

  AugmentSample out;
  out.features = codec.decode(sample_simplex(vertices, rng));
  out.label = label;
  return out;
}

AugmentSample gsmote_sample(const Dataset& ds, const LatentCodec& codec, const LatentCache& cache,
                            Eigen::Index seed_row, const AugmentConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, 0x65e7));
  return gsmote_sample(ds, codec, cache, seed_row, cfg, rng);
}

AugmentSample smote_classic(const Dataset& ds, const LatentCodec& codec, const LatentCache& cache,
                            Eigen::Index seed_row, Eigen::Index m, std::uint64_t seed) {
  AugmentConfig cfg;
  cfg.m = m;
  cfg.k = 1;
  cfg.include_seed = true;
  cfg.seed = seed;
  return gsmote_sample(ds, codec, cache, seed_row, cfg);
}

}  // namespace fairkit
