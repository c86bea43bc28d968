#pragma once

#include <filesystem>

#include <Eigen/Dense>

#include "fgsa/models_io.hpp"

namespace fgsa {

/// How many principal components to keep.
struct PcaCriterion {
  enum class Kind { FixedCount, VarianceThreshold };
  Kind kind = Kind::VarianceThreshold;
  int count = 0;
  double threshold = 0.99;

  static PcaCriterion fixed(int p) { return {Kind::FixedCount, p, 0.0}; }
  static PcaCriterion variance(double tau) { return {Kind::VarianceThreshold, 0, tau}; }
};

/// Truncated linear expansion f(x) ~ mean + a(x)^T V.
///
/// `components` is p×m with one basis vector per row. The class accepts any
/// V; PCA fits produce orthonormal rows so that the Gram matrix is I_p, but
/// projection and every downstream estimator use the general G = V V^T.
class BasisExpansion {
 public:
  BasisExpansion(Eigen::VectorXd mean, Eigen::MatrixXd components, Eigen::MatrixXd coefficients,
                 Eigen::VectorXd spectrum = {}, double explained_ratio = 1.0);

  int size() const { return static_cast<int>(components_.rows()); }
  int output_dims() const { return static_cast<int>(components_.cols()); }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& components() const { return components_; }
  const Eigen::MatrixXd& coefficients() const { return coefficients_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  double explained_ratio() const { return explained_ratio_; }

  /// Squared singular values of the centered training data, all of them
  /// (retained and discarded), in decreasing order. Empty for custom bases.
  const Eigen::VectorXd& spectrum() const { return spectrum_; }
  double discarded_mass() const;

  /// Coefficients of new outputs (rows): (Y - mean) V^T G^-1.
  Eigen::MatrixXd project(const Eigen::MatrixXd& outputs) const;

  /// mean + A V.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& coefficients) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd components_;
  Eigen::MatrixXd coefficients_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd spectrum_;
  double explained_ratio_;
  bool orthonormal_ = false;
};

/// Centers the data, takes the thin SVD, keeps the leading right singular
/// vectors as unit-norm rows of V.
BasisExpansion fit_pca(const FunctionalOutputs& outputs, PcaCriterion criterion = {});

/// Persists mean.csv, components.csv, coefficients.csv, spectrum.csv.
void save_basis(const BasisExpansion& basis, const std::filesystem::path& dir);
BasisExpansion load_basis(const std::filesystem::path& dir);

}  // namespace fgsa
