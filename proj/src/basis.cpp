#include "fgsa/basis.hpp"

#include <Eigen/SVD>

#include "fgsa/error.hpp"

namespace fgsa {

BasisExpansion::BasisExpansion(Eigen::VectorXd mean, Eigen::MatrixXd components, Eigen::MatrixXd coefficients,
                               Eigen::VectorXd spectrum, double explained_ratio)
    : mean_(std::move(mean)),
      components_(std::move(components)),
      coefficients_(std::move(coefficients)),
      spectrum_(std::move(spectrum)),
      explained_ratio_(explained_ratio) {
  if (components_.rows() < 1) throw InvalidArgument("basis needs at least one component");
  if (mean_.size() != components_.cols())
    throw DimensionMismatch("basis mean has length " + std::to_string(mean_.size()) + ", components have width " +
                            std::to_string(components_.cols()));
  if (coefficients_.size() > 0 && coefficients_.cols() != components_.rows())
    throw DimensionMismatch("coefficient width does not match the number of components");
  gram_ = components_ * components_.transpose();
  gram_ = 0.5 * (gram_ + gram_.transpose());
  const double off = (gram_ - Eigen::MatrixXd::Identity(size(), size())).cwiseAbs().maxCoeff();
  orthonormal_ = off <= 1e-12;
}

double BasisExpansion::discarded_mass() const {
  if (spectrum_.size() == 0) return 0.0;
  return spectrum_.tail(spectrum_.size() - std::min<Eigen::Index>(size(), spectrum_.size())).sum();
}

Eigen::MatrixXd BasisExpansion::project(const Eigen::MatrixXd& outputs) const {
  if (outputs.cols() != output_dims())
    throw DimensionMismatch("outputs have width " + std::to_string(outputs.cols()) + ", basis expects " +
                            std::to_string(output_dims()));
  Eigen::MatrixXd centered = outputs.rowwise() - mean_.transpose();
  Eigen::MatrixXd raw = centered * components_.transpose();
  if (orthonormal_) return raw;
  // least-squares coefficients; pseudo-inverse when G is singular
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(gram_);
  return cod.solve(raw.transpose()).transpose();
}

Eigen::MatrixXd BasisExpansion::reconstruct(const Eigen::MatrixXd& coefficients) const {
  if (coefficients.cols() != size())
    throw DimensionMismatch("coefficients have width " + std::to_string(coefficients.cols()) + ", basis has " +
                            std::to_string(size()) + " components");
  Eigen::MatrixXd out = coefficients * components_;
  out.rowwise() += mean_.transpose();
  return out;
}

BasisExpansion fit_pca(const FunctionalOutputs& outputs, PcaCriterion criterion) {
  const Eigen::MatrixXd& y = outputs.values;
  const int n = static_cast<int>(y.rows());
  const int m = static_cast<int>(y.cols());
  if (n < 2) throw InvalidDesign("PCA needs at least 2 output rows");
  if (!y.allFinite()) throw InvalidArgument("outputs contain non-finite values");

  Eigen::VectorXd mean = y.colwise().mean().transpose();
  Eigen::MatrixXd centered = y.rowwise() - mean.transpose();

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  Eigen::VectorXd spectrum = svd.singularValues().array().square();
  const double total = spectrum.sum();
  if (!(total > 0.0) || total <= 1e-28 * std::max(1.0, centered.squaredNorm()))
    throw DegenerateData("outputs have zero variance; nothing to expand");

  const int max_p = std::min(n, m);
  int p = 0;
  if (criterion.kind == PcaCriterion::Kind::FixedCount) {
    if (criterion.count < 1 || criterion.count > max_p)
      throw InvalidArgument("component count must be in [1, " + std::to_string(max_p) + "]");
    p = criterion.count;
  } else {
    if (!(criterion.threshold > 0.0 && criterion.threshold <= 1.0))
      throw InvalidArgument("variance threshold must be in (0, 1]");
    double acc = 0.0;
    for (p = 0; p < spectrum.size();) {
      acc += spectrum(p++);
      if (acc >= criterion.threshold * total * (1.0 - 1e-14)) break;
    }
  }
  p = std::min<int>(p, static_cast<int>(spectrum.size()));

  Eigen::MatrixXd components = svd.matrixV().leftCols(p).transpose();
  // deterministic sign: largest-magnitude entry of each component positive
  for (int q = 0; q < p; ++q) {
    Eigen::Index arg;
    components.row(q).cwiseAbs().maxCoeff(&arg);
    if (components(q, arg) < 0) components.row(q) *= -1.0;
  }
  Eigen::MatrixXd coefficients = centered * components.transpose();
  const double ratio = spectrum.head(p).sum() / total;
  return BasisExpansion(std::move(mean), std::move(components), std::move(coefficients), std::move(spectrum),
                        std::min(1.0, ratio));
}

void save_basis(const BasisExpansion& basis, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(basis.mean().transpose(), dir / "mean.csv");
  write_matrix_csv(basis.components(), dir / "components.csv");
  write_matrix_csv(basis.coefficients(), dir / "coefficients.csv");
  if (basis.spectrum().size() > 0) write_matrix_csv(basis.spectrum().transpose(), dir / "spectrum.csv");
}

BasisExpansion load_basis(const std::filesystem::path& dir) {
  Eigen::VectorXd mean = read_matrix_csv(dir / "mean.csv").row(0).transpose();
  Eigen::MatrixXd components = read_matrix_csv(dir / "components.csv");
  Eigen::MatrixXd coefficients = read_matrix_csv(dir / "coefficients.csv");
  Eigen::VectorXd spectrum;
  double ratio = 1.0;
  if (std::filesystem::exists(dir / "spectrum.csv")) {
    spectrum = read_matrix_csv(dir / "spectrum.csv").row(0).transpose();
    ratio = spectrum.head(std::min<Eigen::Index>(components.rows(), spectrum.size())).sum() / spectrum.sum();
  }
  return BasisExpansion(std::move(mean), std::move(components), std::move(coefficients), std::move(spectrum), ratio);
}

}  // namespace fgsa
