#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "fgsa/basis.hpp"
#include "fgsa/gp.hpp"
#include "fgsa/pickfreeze.hpp"
#include "fgsa/sensitivity.hpp"

namespace fgsa {

enum class CovarianceMode { Empirical, Fixed };

struct RunConfig {
  int n_pf = 1000;
  int n_z = 100;
  int n_x = 50;
  bool totals = false;  // Jansen and plug-in totals besides the closed index
  SamplingOptions sampling;
  CovarianceMode covariance = CovarianceMode::Empirical;
  Seed seed = 0;
  int threads = 1;
  bool keep_components = false;  // retain map numerators and denominators

  void validate() const;
};

/// Estimates of one index kind over all (trajectory j, replicate b) pairs.
struct IndexEstimates {
  IndexKind kind = IndexKind::Closed;
  Eigen::MatrixXd maps;          // m × (n_z·n_x), column j·n_x + b; NaN = undefined
  Eigen::MatrixXd gsi;           // n_z × n_x; NaN = undefined
  Eigen::MatrixXd numerators;    // same layout as maps, only with keep_components
  Eigen::MatrixXd denominators;
};

struct IndexDistribution {
  IndexSet index_set;
  int n_pf = 0;
  int n_z = 0;
  int n_x = 0;
  std::vector<IndexEstimates> estimates;  // closed first, then totals if requested

  const IndexEstimates& get(IndexKind kind) const;
  bool has(IndexKind kind) const;
  static int column(int j, int b, int n_x) { return j * n_x + b; }
};

/// Operation and sampling counters. Flops count the arithmetic of the
/// estimation stage only (not GP sampling).
struct OpCounter {
  std::atomic<std::uint64_t> flops{0};
  std::atomic<std::uint64_t> trajectory_draws{0};
  std::atomic<std::uint64_t> sampler_calls{0};
  std::atomic<std::uint64_t> factorizations{0};
};

/// Basis-derived estimation: one PF design, n_z vector-GP trajectories,
/// n_x - 1 bootstrap replicates per trajectory plus the un-resampled one.
IndexDistribution run_algorithm3(const VectorGp& vgp, const BasisExpansion& basis, const InputSpace& space,
                                 const IndexSet& u, const RunConfig& cfg, OpCounter* counter = nullptr);

/// Estimation stage only, from coefficient trajectories at the stacked PF
/// locations (x_hat; x_star[; x_star_total]), each draws[j] of 2n_pf or 3n_pf rows.
IndexDistribution run_algorithm3(const std::vector<Eigen::MatrixXd>& draws, const BasisExpansion& basis,
                                 const IndexSet& u, const RunConfig& cfg, OpCounter* counter = nullptr);

/// Dimension-wise baseline: reconstructs each output dimension from the same
/// trajectories and runs the scalar estimator per dimension, with the same
/// bootstrap indices as run_algorithm3.
IndexDistribution run_algorithm2_dimensionwise(const std::vector<Eigen::MatrixXd>& draws, const BasisExpansion& basis,
                                               const IndexSet& u, const RunConfig& cfg, OpCounter* counter = nullptr);

IndexDistribution run_algorithm2_dimensionwise(const VectorGp& vgp, const BasisExpansion& basis,
                                               const InputSpace& space, const IndexSet& u, const RunConfig& cfg,
                                               OpCounter* counter = nullptr);

/// Reference sampler: a fresh PF design for each b and fresh trajectories
/// for each (b, j), no bootstrap. Replicate b = 0 reuses run_algorithm3's
/// design and trajectory streams.
IndexDistribution run_algorithm1_crude(const VectorGp& vgp, const BasisExpansion& basis, const InputSpace& space,
                                       const IndexSet& u, const RunConfig& cfg, OpCounter* counter = nullptr);

/// Stacked PF locations and trajectory draws used by run_algorithm3.
PfDesign algorithm3_design(const InputSpace& space, const IndexSet& u, const RunConfig& cfg);
Eigen::MatrixXd stacked_locations(const PfDesign& design, bool totals);
Seed trajectory_seed(const IndexSet& u, const RunConfig& cfg);
Seed bootstrap_seed(const IndexSet& u, const RunConfig& cfg, int j);

enum class Scope { MetamodelOnly, Overall };

const char* to_string(Scope scope);

struct BoxplotSummary {
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  int outliers = 0;
  int count = 0;
  int missing = 0;

  double iqr() const { return q3 - q1; }
};

/// Linear-interpolation percentile (q in [0, 100]) of sorted data.
double percentile_sorted(const std::vector<double>& sorted, double q);

/// NaNs are excluded and counted. Whiskers reach the most extreme data
/// point within 1.5 IQR of the quartiles. Throws DegenerateData when no
/// finite value remains.
BoxplotSummary summarize_values(const std::vector<double>& values);

struct DistributionSummary {
  std::vector<BoxplotSummary> maps;  // per output dimension; count 0 where all missing
  BoxplotSummary gsi;
};

DistributionSummary summarize(const IndexEstimates& est, int n_x, Scope scope);

struct Attribution {
  double metamodel_share = 0.0;
  double estimation_share = 0.0;
  bool defined = false;
};

/// IQR-based split of the overall spread into metamodel and PF-estimation parts.
Attribution error_attribution(const BoxplotSummary& metamodel, const BoxplotSummary& overall, double eps = 1e-12);
std::vector<Attribution> error_attribution(const std::vector<BoxplotSummary>& metamodel,
                                           const std::vector<BoxplotSummary>& overall, double eps = 1e-12);

struct CostPrediction {
  std::uint64_t cost_dw = 0;
  std::uint64_t cost_bd = 0;
  double lower_bound_ratio = 0.0;  // H(2 n_pf, m) / (3 p)

  double ratio() const { return static_cast<double>(cost_dw) / static_cast<double>(cost_bd); }
};

/// Flop model of one closed-index estimate: dimension-wise
/// 4(p+2) n_pf m versus basis-derived 2p(3p+1) n_pf + 3p(p+1) m.
CostPrediction predicted_costs(int p, int n_pf, int m);

}  // namespace fgsa
