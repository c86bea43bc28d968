#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgsa/models_io.hpp"
#include "fgsa/random.hpp"

namespace fgsa {

/// Non-empty sorted set of 0-based input indices.
class IndexSet {
 public:
  IndexSet(std::vector<int> variables, int dims);
  static IndexSet single(int variable, int dims) { return IndexSet({variable}, dims); }

  const std::vector<int>& variables() const { return vars_; }
  int dims() const { return dims_; }
  int size() const { return static_cast<int>(vars_.size()); }
  bool contains(int variable) const;
  bool full() const { return size() == dims_; }
  /// Variables not in the set; throws for the full set.
  IndexSet complement() const;
  /// Bit mask of the members, used as a seed key.
  std::uint64_t key() const;
  /// "x1" or "x1+x3" from the variable names of `space`.
  std::string label(const InputSpace& space) const;

  bool operator==(const IndexSet&) const = default;

 private:
  std::vector<int> vars_;
  int dims_;
};

/// Pick-freeze input samples for one index set u. With independent samples
/// X1, X2: x_hat = X1, x_star = (X1_u, X2_-u), x_star_total = (X2_u, X1_-u).
struct PfDesign {
  Eigen::MatrixXd x_hat;
  Eigen::MatrixXd x_star;
  Eigen::MatrixXd x_star_total;
  IndexSet index_set;

  int size() const { return static_cast<int>(x_hat.rows()); }
};

PfDesign make_pf_design(const InputSpace& space, int n_pf, const IndexSet& u, Seed seed);

/// Outputs at x_hat and x_star, one row per PF point, one column per output.
struct PfOutputs {
  Eigen::MatrixXd y;
  Eigen::MatrixXd y_star;
};

/// Variance floor below which an index is treated as undefined.
inline double variance_floor(double mean_square) { return 1e-12 * std::max(1.0, mean_square); }

struct ScalarPfEstimate {
  double index = 0.0;
  double closed_variance = 0.0;  // D_u
  double variance = 0.0;         // D
  double mean = 0.0;             // f0
};

/// Janon-Monod estimator. Throws DegenerateVariance when D is below the floor.
ScalarPfEstimate scalar_closed_pf(const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::VectorXd>& y_star);

/// Same, but reports an undefined index as NaN instead of throwing.
ScalarPfEstimate scalar_closed_pf_unchecked(const Eigen::Ref<const Eigen::VectorXd>& y,
                                            const Eigen::Ref<const Eigen::VectorXd>& y_star);

struct SobolMatrixEstimate {
  Eigen::MatrixXd closed;  // D_u, p×p (not symmetric in general)
  Eigen::MatrixXd cov;     // D, symmetric
  Eigen::VectorXd mean;    // f0
  std::optional<Eigen::MatrixXd> total;  // Jansen T_u when requested
};

/// Vector-valued Janon-Monod estimator on p-dimensional outputs.
SobolMatrixEstimate vector_closed_pf(const PfOutputs& outputs);

/// Same estimator without the degeneracy check.
SobolMatrixEstimate vector_closed_pf_unchecked(const Eigen::MatrixXd& y, const Eigen::MatrixXd& y_star);

/// Jansen estimator (1/2n) sum_k (Y_k - Y_k^-u)(Y_k - Y_k^-u)^T.
Eigen::MatrixXd vector_total_jansen(const Eigen::MatrixXd& y, const Eigen::MatrixXd& y_star_total);

/// 1 - closed index of the complement.
double plug_in_total(double closed_complement);

using IndexMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// (n_x - 1)×n_pf resample indices in [0, n_pf), one bootstrap replicate per
/// row. Replicate 0 (the un-resampled estimate) has no row.
IndexMatrix bootstrap_indices(int n_pf, int n_x, Seed seed);

}  // namespace fgsa
