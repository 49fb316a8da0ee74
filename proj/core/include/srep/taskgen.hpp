#pragma once

#include <srep/common.hpp>
#include <srep/rng.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace srep {

// Latent factor distribution.
//   ar_decay(base):      Gaussian with covariance Sigma_ij = base^|i-j|.
//   grid(levels, alpha): uniform over a factor grid; each factor f takes
//                        levels[f] evenly spaced values, standardized to mean
//                        zero and unit variance, plus a per-grid-point jitter
//                        drawn uniformly from +-alpha * spacing / 2 and fixed
//                        for the lifetime of the sampler.
//   equicorrelated(rho): same grid support, with point probabilities given by
//                        the N(0, Sigma_rho) density at the (jittered)
//                        standardized points, Sigma_rho = rho + (1-rho) I.
struct LatentSpec {
    enum class Kind { ar_decay, grid, equicorrelated };
    Kind kind = Kind::ar_decay;
    Index m = 0;
    double param = 0.0;  // ar_decay: base in [0, 1); equicorrelated: rho in [0, 1)
    std::vector<Index> levels;  // grid kinds: factor cardinalities
    double noise_alpha = 0.0;   // grid kinds: jitter fraction in [0, 1]
    bool standardize = true;

    static LatentSpec ar(Index m, double base);
    static LatentSpec grid(std::vector<Index> levels, double noise_alpha);
    static LatentSpec equicorrelated(std::vector<Index> levels, double rho, double noise_alpha);
    // The canonical six-factor grid used by the shape experiments:
    // cardinalities (10, 10, 10, 8, 4, 15).
    static LatentSpec shapes_grid(double rho, double noise_alpha);

    void validate() const;
    [[nodiscard]] Index grid_size() const;  // product of levels
};

// Task weight draw: which coordinates are active and how.
//   bernoulli(p):    independent coin per coordinate, resampled until nonempty.
//   blocks(B):       one block of the given partition, chosen uniformly.
//   fixed_size(l):   uniformly random subset of exactly l coordinates.
//   full:            all coordinates.
//   laplace_dense:   dense Laplace(mu, b) weights, support = all coordinates.
// Active weights are standard Gaussian except for laplace_dense.
struct SupportSpec {
    enum class Kind { bernoulli, blocks, fixed_size, full, laplace_dense };
    Kind kind = Kind::bernoulli;
    double p = 0.5;
    Index size = 0;
    std::vector<std::vector<Index>> blocks;
    double mu = 0.0;
    double b = 1.0;

    static SupportSpec bernoulli(double p);
    static SupportSpec block_partition(std::vector<std::vector<Index>> blocks);
    // Contiguous blocks of the given width covering [0, m); m % width == 0.
    static SupportSpec contiguous_blocks(Index m, Index width);
    static SupportSpec fixed_size(Index size);
    static SupportSpec full();
    static SupportSpec laplace_dense(double mu, double b);

    void validate(Index m) const;
};

struct TaskWeight {
    Vector w;
    std::vector<Index> support;
};

// One supervised task. X is what representation learners see; F_true holds
// the ground-truth latent features that generated the targets.
struct TaskDataset {
    Matrix X;       // n x d observations
    Vector y;       // n regression targets (empty for classification)
    Matrix Y;       // n x k one-hot labels (empty for regression)
    Matrix F_true;  // n x m ground-truth features
    Vector w_true;  // m (empty for classification)
    std::vector<Index> support_true;
    double noise_sigma = 0.0;

    [[nodiscard]] Index n() const noexcept { return X.rows(); }
    [[nodiscard]] Index d() const noexcept { return X.cols(); }
    [[nodiscard]] Index m() const noexcept { return F_true.cols(); }
    [[nodiscard]] bool is_classification() const noexcept { return Y.size() > 0; }
};

// Latent sampler with precomputed tables. Grid jitter is a pure function of
// (noise_seed, grid point, factor), so equal seeds give equal samplers.
class LatentSampler {
public:
    LatentSampler(LatentSpec spec, std::uint64_t noise_seed);

    [[nodiscard]] Matrix sample(Index n, RngStream& rng) const;
    [[nodiscard]] const LatentSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::uint64_t noise_seed() const noexcept { return noise_seed_; }

    // Grid internals, exposed for diagnostics and tests.
    [[nodiscard]] Vector grid_point(Index flat_index) const;  // jittered, standardized
    [[nodiscard]] Vector grid_point_exact(Index flat_index) const;  // no jitter
    [[nodiscard]] double factor_spacing(Index factor) const;

private:
    LatentSpec spec_;
    std::uint64_t noise_seed_ = 0;
    Matrix ar_chol_;  // ar_decay: Cholesky factor of the covariance
    std::vector<std::vector<double>> std_levels_;  // grid: standardized values
    std::vector<double> spacing_;                  // grid: standardized spacing
    std::vector<double> cumulative_;               // grid: cumulative weights
};

// One-off sampling front end; grid jitter seed is derived from rng's own seed.
[[nodiscard]] Matrix sample_latents(const LatentSpec& spec, Index n, RngStream& rng);

[[nodiscard]] TaskWeight sample_task_weight(const SupportSpec& spec, Index m, RngStream& rng);

// Regression task: Z = latents, y = Z w + sigma * noise, X = F_true = Z.
[[nodiscard]] TaskDataset make_task(const LatentSampler& latents, const SupportSpec& support,
                                    Index n, double noise_sigma, RngStream& rng);
[[nodiscard]] TaskDataset make_task(const LatentSpec& latents, const SupportSpec& support,
                                    Index n, double noise_sigma, RngStream& rng);

// Classification task: k Gaussian class clusters in latent space with means
// scaled by mean_scale, per_class samples each, one-hot labels. When
// informative is in (0, m), class means are nonzero only on a uniformly
// random subset of that size (recorded in support_true); noise covers all
// coordinates either way. informative == 0 means all coordinates.
[[nodiscard]] TaskDataset make_classification_task(Index m, Index k, Index per_class,
                                                   double mean_scale, RngStream& rng,
                                                   Index informative = 0);

// Replace observations with X = F_true L^T (features mixed by L). Rejects L
// whose condition number exceeds 1e12.
[[nodiscard]] TaskDataset entangle(const TaskDataset& task, const Matrix& L);
[[nodiscard]] std::vector<TaskDataset> entangle(const std::vector<TaskDataset>& tasks,
                                                const Matrix& L);

// Bundle layout: <dir>/manifest.json (dims, seed, specs, per-task ground
// truth) and <dir>/tasks.csv (task, row, target, x..., f... columns). Equal
// seeds and specs serialize to byte-identical files.
struct TaskBundle {
    std::vector<TaskDataset> tasks;
    LatentSpec latent;
    SupportSpec support;
    std::uint64_t seed = 0;
};

void save_bundle(const std::string& dir, const TaskBundle& bundle);
[[nodiscard]] TaskBundle load_bundle(const std::string& dir);

// Spec (de)serialization as standalone JSON text, matching the manifest
// encoding.
[[nodiscard]] std::string latent_spec_to_json(const LatentSpec& spec);
[[nodiscard]] LatentSpec latent_spec_from_json(const std::string& text);
[[nodiscard]] std::string support_spec_to_json(const SupportSpec& spec);
[[nodiscard]] SupportSpec support_spec_from_json(const std::string& text);

// Convenience generator used by the CLI: T tasks drawn from child streams of
// the given seed, optionally entangled by a Haar orthogonal mixing matrix.
[[nodiscard]] TaskBundle generate_bundle(const LatentSpec& latent, const SupportSpec& support,
                                         Index tasks, Index n, double noise_sigma,
                                         bool entangle_orthogonal, std::uint64_t seed);

}  // namespace srep
