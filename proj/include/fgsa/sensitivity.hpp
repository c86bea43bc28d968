#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fgsa/pickfreeze.hpp"

namespace fgsa {

/// Evaluates v_l^T M v_l for every column v_l of a p×m component matrix.
///
/// For small p the quadratic forms are rewritten as one product with a
/// precomputed m × p(p+1)/2 feature matrix acting on the packed lower
/// triangle of sym(M); for large p it falls back to (M V) .* V.
class QuadraticFormMap {
 public:
  explicit QuadraticFormMap(const Eigen::MatrixXd& components);

  int size() const { return p_; }
  int output_dims() const { return m_; }

  Eigen::VectorXd apply(const Eigen::MatrixXd& matrix) const;
  /// Floating point operations of one apply().
  std::uint64_t flops() const;

 private:
  int p_;
  int m_;
  bool packed_;
  Eigen::MatrixXd features_;    // packed path
  Eigen::MatrixXd components_;  // direct path
};

/// Per-output-dimension index estimates.
struct SensitivityMap {
  Eigen::VectorXd values;        // NaN where the local variance is below the floor
  Eigen::VectorXd numerators;    // v_l^T M v_l
  Eigen::VectorXd denominators;  // v_l^T D v_l
  std::vector<bool> out_of_range;

  int undefined() const;
  int flagged() const;
};

/// Default slack for the out-of-range flag on normalized indices.
inline double range_slack(int n_pf) { return 2.0 / std::sqrt(static_cast<double>(n_pf)); }

/// Ratio of quadratic forms per output dimension. `mean` (f0 in coefficient
/// space) sets the per-dimension variance floor; values outside
/// [-slack, 1 + slack] are flagged, not clamped.
SensitivityMap reproject_map(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance,
                             const Eigen::MatrixXd& components, const Eigen::VectorXd& mean = {},
                             double slack = std::numeric_limits<double>::infinity());

SensitivityMap reproject_map(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance,
                             const QuadraticFormMap& forms, const Eigen::MatrixXd& components,
                             const Eigen::VectorXd& mean = {},
                             double slack = std::numeric_limits<double>::infinity());

/// Tr(A B) as sum(A .* B^T).
double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

enum class IndexKind { Closed, Total, PluginTotal };

const char* to_string(IndexKind kind);

struct GsiValue {
  double value = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  IndexKind kind = IndexKind::Closed;
};

/// Closed: Tr(D_u G) / Tr(D G). Total: Tr(T_u G) / Tr(D G).
/// PluginTotal: `numerator` is the closed matrix of the complement and
/// `variance` its own D; the result is 1 - the closed ratio.
/// Throws DegenerateVariance when Tr(D G) is below the floor.
GsiValue gsi(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance, const Eigen::MatrixXd& gram,
             IndexKind kind, const Eigen::VectorXd& mean = {});

/// As gsi(), with a fixed denominator matrix (typically the DoE coefficient
/// covariance) shared by every trajectory and replicate.
GsiValue gsi_fixed_covariance(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& gram,
                              const Eigen::MatrixXd& fixed_variance, IndexKind kind);

/// Covariance of the rows of `coefficients` with the 1/n convention.
Eigen::MatrixXd coefficient_covariance(const Eigen::MatrixXd& coefficients);

}  // namespace fgsa
