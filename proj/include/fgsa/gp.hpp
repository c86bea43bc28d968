#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "fgsa/basis.hpp"
#include "fgsa/models_io.hpp"
#include "fgsa/random.hpp"

namespace fgsa {

/// Anisotropic Matern 5/2 hyperparameters.
struct KernelParams {
  Eigen::VectorXd lengthscales;
  double signal_variance = 1.0;
  double nugget = 0.0;  // absolute, added to the training diagonal only
};

/// sigma^2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r), r^2 = sum_i ((x_i - y_i) / theta_i)^2.
double matern52(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                const KernelParams& params);

/// Cross-covariance between the rows of `a` and the rows of `b` (no nugget).
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& params);

/// Log-space hyperparameter vector [log theta_1..d, log sigma^2, log(nugget / sigma^2)].
Eigen::VectorXd to_log_params(const KernelParams& params);
KernelParams from_log_params(const Eigen::VectorXd& z);

struct LogLikelihood {
  double value = 0.0;         // -inf when K(D,D) + nugget I is not positive definite
  Eigen::VectorXd gradient;   // d value / d log-params, empty if not requested
};

/// Zero-mean Gaussian log marginal likelihood of `targets` at the design rows.
LogLikelihood log_marginal_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                                      const KernelParams& params, bool with_gradient = true);

struct GpOptions {
  int starts = 8;
  int max_iterations = 200;
  // lengthscale bounds relative to each variable's range
  double lengthscale_lower = 1e-3;
  double lengthscale_upper = 1e3;
  // nugget bounds relative to the signal variance
  double nugget_lower = 1e-10;
  double nugget_upper = 1e-2;
  // signal-variance bounds relative to the empirical target variance (1 when it is zero)
  double variance_lower = 1e-8;
  double variance_upper = 1e4;
  Seed start_seed = 0x6d756c7469ULL;
};

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Zero-prior-mean GP conditioned on (design, targets) with fixed hyperparameters.
class GpSurrogate {
 public:
  GpSurrogate(DesignMatrix design, Eigen::VectorXd targets, KernelParams params);

  const KernelParams& params() const { return params_; }
  const DesignMatrix& design() const { return design_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  /// Lower Cholesky factor of K(D,D) + (nugget + jitter) I.
  const Eigen::MatrixXd& chol() const { return chol_; }
  /// K(D,D)^-1 y with the factor above.
  const Eigen::VectorXd& alpha() const { return alpha_; }
  /// Extra diagonal added beyond the nugget to make the factorization succeed.
  double jitter() const { return jitter_; }
  double log_likelihood() const { return log_likelihood_; }

  Eigen::VectorXd predict(const Eigen::MatrixXd& query) const;
  Moments conditional_moments(const Eigen::MatrixXd& query) const;

  /// L^-1 K(D, query), n×L. Conditional quantities follow from it:
  /// mean = W^T L^-1 y, cov = K(Q,Q) - W^T W.
  Eigen::MatrixXd cross_solve(const Eigen::MatrixXd& query) const;
  const Eigen::VectorXd& whitened_targets() const { return whitened_; }

 private:
  DesignMatrix design_;
  Eigen::VectorXd targets_;
  KernelParams params_;
  Eigen::MatrixXd chol_;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd whitened_;
  double jitter_ = 0.0;
  double log_likelihood_ = 0.0;
};

struct GpFitReport {
  std::vector<Eigen::VectorXd> starts;  // log-params of each start
  std::vector<double> start_values;     // log-likelihood at each start
  std::vector<double> final_values;     // log-likelihood after local search
  int best = -1;
};

/// Maximum-likelihood fit: deterministic Latin grid of starts in log space,
/// projected quasi-Newton local search from each, best result kept.
GpSurrogate fit_gp(const DesignMatrix& design, const Eigen::VectorXd& targets, const GpOptions& options = {},
                   GpFitReport* report = nullptr);

/// One independent GP per basis coefficient, sharing the design.
class VectorGp {
 public:
  explicit VectorGp(std::vector<GpSurrogate> components);

  int size() const { return static_cast<int>(gps_.size()); }
  const GpSurrogate& operator[](int q) const { return gps_.at(q); }
  const DesignMatrix& design() const { return gps_.front().design(); }
  const std::vector<GpSurrogate>& components() const { return gps_; }

 private:
  std::vector<GpSurrogate> gps_;
};

VectorGp fit_vector_gp(const DesignMatrix& design, const BasisExpansion& basis, const GpOptions& options = {},
                       int threads = 1);

/// Hyperparameters + design reference as JSON; loading re-conditions on the
/// stored design and the basis coefficients without refitting.
void save_surrogates(const VectorGp& vgp, const std::filesystem::path& path, const std::string& design_ref);
VectorGp load_surrogates(const std::filesystem::path& path, const DesignMatrix& design, const BasisExpansion& basis);

enum class SamplingMode { Batch, PerTrajectory };

/// How the conditional covariance at the query points is factorized.
///  - Dense: full Cholesky of cov, retried on failure with jitter I
///    escalating from 1e-10 sigma^2 by doubling up to 1e-4 sigma^2.
///  - LowRank: pivoted Cholesky stopped once every residual variance is
///    below low_rank_tolerance * sigma^2; the residual diagonal is sampled as
///    independent per-point noise.
///  - Auto: LowRank when it converges within low_rank_max_fraction * L
///    pivots (and L is large), Dense otherwise.
enum class Factorization { Auto, Dense, LowRank };

struct SamplingOptions {
  SamplingMode mode = SamplingMode::Batch;
  Factorization factorization = Factorization::Auto;
  double low_rank_tolerance = 1e-12;
  double low_rank_max_fraction = 1.0 / 16.0;
  int auto_dense_below = 1024;
  int threads = 1;
};

/// N_Z joint draws of the vector GP at L query points.
struct TrajectoryBatch {
  std::vector<Eigen::MatrixXd> draws;  // draws[j] is L×p
  Seed seed = 0;
  int factorizations = 0;
  std::vector<int> ranks;  // factor rank per coefficient (L when dense)

  int count() const { return static_cast<int>(draws.size()); }
  int locations() const { return draws.empty() ? 0 : static_cast<int>(draws.front().rows()); }
  int coefficients() const { return draws.empty() ? 0 : static_cast<int>(draws.front().cols()); }
};

/// Draw j of coefficient q uses the normal stream derive_seed(seed, {q, j}),
/// so batch and per-trajectory modes (and any thread count) agree bit for bit.
TrajectoryBatch sample_trajectories(const VectorGp& vgp, const Eigen::MatrixXd& query, int n_z, Seed seed,
                                    const SamplingOptions& options = {});

/// Trajectory j alone (L×p), factorizing each coefficient's covariance for
/// this draw. Equal to sample_trajectories(...).draws[j].
Eigen::MatrixXd sample_trajectory(const VectorGp& vgp, const Eigen::MatrixXd& query, int j, Seed seed,
                                  const SamplingOptions& options = {});

/// Bytes held by a batch of n_z draws at `locations` points for p coefficients.
inline double trajectory_storage_bytes(int p, int n_z, int locations) {
  return 8.0 * p * static_cast<double>(n_z) * locations;
}

}  // namespace fgsa
