#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fairkit/data.hpp"
#include "fairkit/rng.hpp"

namespace fairkit {

/// Encoder/decoder pair standing in for an invertible generative model.
/// The identity codec makes the pipeline plain feature-space SMOTE; the
/// file-backed codec carries one stored latent per training row (real
/// embeddings produced offline) and decodes new latents through the nearest
/// stored latent, unless an explicit generator table row matches better.
class LatentCodec {
public:
  virtual ~LatentCodec() = default;
  virtual std::string kind() const = 0;
  virtual Eigen::Index latent_dim(Eigen::Index feature_dim) const = 0;
  /// Latent of training row `row` with features `x`.
  virtual Eigen::VectorXd encode(Eigen::Index row,
                                 const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;
  virtual Eigen::VectorXd decode(const Eigen::Ref<const Eigen::VectorXd>& z) const = 0;
};

class IdentityCodec final : public LatentCodec {
public:
  std::string kind() const override { return "identity"; }
  Eigen::Index latent_dim(Eigen::Index feature_dim) const override { return feature_dim; }
  Eigen::VectorXd encode(Eigen::Index, const Eigen::Ref<const Eigen::VectorXd>& x) const override {
    return x;
  }
  Eigen::VectorXd decode(const Eigen::Ref<const Eigen::VectorXd>& z) const override { return z; }
};

/// Latent table aligned with training rows, loaded from CSV with columns
/// row_id, z_0..z_{n_z-1}. decode(z) returns the feature row whose stored
/// latent is nearest to z; a second optional table of (latent, feature)
/// pairs extends the decode dictionary.
class FileBackedCodec final : public LatentCodec {
public:
  FileBackedCodec(Eigen::MatrixXd latents, Eigen::MatrixXd features);

  static FileBackedCodec from_csv(const std::string& latent_path, const Dataset& ds);

  /// Adds (latent, feature) rows consulted by decode alongside the stored rows.
  void add_generator_table(Eigen::MatrixXd latents, Eigen::MatrixXd features);

  std::string kind() const override { return "file_backed"; }
  Eigen::Index latent_dim(Eigen::Index) const override { return latents_.cols(); }
  Eigen::VectorXd encode(Eigen::Index row,
                         const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  Eigen::VectorXd decode(const Eigen::Ref<const Eigen::VectorXd>& z) const override;

private:
  Eigen::MatrixXd latents_;   // one row per training row
  Eigen::MatrixXd features_;  // aligned features
  Eigen::MatrixXd gen_latents_;
  Eigen::MatrixXd gen_features_;
};

struct AugmentConfig {
  Eigen::Index m = 10;  // neighbor pool size
  Eigen::Index k = 3;   // chosen neighbors
  bool include_seed = true;
  std::uint64_t seed = 0;
};

void validate_augment_config(const AugmentConfig& cfg);

/// Uniform sample from the simplex spanned by the vertices (uniform when
/// they are affinely independent; still inside the hull otherwise).
/// Inductive rule: rho_1 = p_1; rho_{i+1} = u^{1/i} rho_i + (1 - u^{1/i}) p_{i+1}.
Eigen::VectorXd sample_simplex(const std::vector<Eigen::VectorXd>& vertices, Rng& rng);

/// The m cohort entries nearest to `seed_latent` in squared Euclidean
/// distance; ties broken by lower row id. The cohort must exclude the seed.
std::vector<Eigen::Index> nearest_neighbors(
    const Eigen::Ref<const Eigen::VectorXd>& seed_latent,
    const std::vector<std::pair<Eigen::VectorXd, Eigen::Index>>& cohort, Eigen::Index m);

/// Encoded latents of a dataset, built once and reused across samples.
class LatentCache {
public:
  LatentCache(const Dataset& ds, const LatentCodec& codec);
  const Eigen::MatrixXd& latents() const { return latents_; }
  Eigen::VectorXd latent(Eigen::Index row) const { return latents_.row(row); }

private:
  Eigen::MatrixXd latents_;
};

struct AugmentSample {
  Eigen::VectorXd features;
  int label = 0;
};

/// One g-SMOTE draw seeded at `seed_row`: m same-label nearest neighbors in
/// latent space, k of them chosen uniformly, a uniform simplex sample over
/// {seed} + chosen (or chosen only when include_seed is false), decoded back
/// to feature space with the seed's label. Throws AugmentationUnavailableError
/// when the same-label cohort has fewer than m other members.
AugmentSample gsmote_sample(const Dataset& ds, const LatentCodec& codec, const LatentCache& cache,
                            Eigen::Index seed_row, const AugmentConfig& cfg, Rng& rng);

/// Convenience overload constructing its own RNG from cfg.seed.
AugmentSample gsmote_sample(const Dataset& ds, const LatentCodec& codec, const LatentCache& cache,
                            Eigen::Index seed_row, const AugmentConfig& cfg);

/// Classic SMOTE: linear interpolation with one of the m nearest neighbors,
/// i.e. g-SMOTE with k = 1 and the seed included.
AugmentSample smote_classic(const Dataset& ds, const LatentCodec& codec, const LatentCache& cache,
                            Eigen::Index seed_row, Eigen::Index m, std::uint64_t seed);

}  // namespace fairkit
