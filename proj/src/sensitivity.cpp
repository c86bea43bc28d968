#include "fgsa/sensitivity.hpp"

#include <algorithm>
#include <cmath>

#include "fgsa/error.hpp"

namespace fgsa {

namespace {

constexpr int kPackedMaxSize = 64;

void check_square(const Eigen::MatrixXd& a, int p, const char* what) {
  if (a.rows() != p || a.cols() != p)
    throw DimensionMismatch(std::string(what) + " is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                            ", expected " + std::to_string(p) + "x" + std::to_string(p));
}

}  // namespace

QuadraticFormMap::QuadraticFormMap(const Eigen::MatrixXd& components)
    : p_(static_cast<int>(components.rows())), m_(static_cast<int>(components.cols())), packed_(p_ <= kPackedMaxSize) {
  if (p_ < 1 || m_ < 1) throw InvalidArgument("component matrix must be non-empty");
  if (!packed_) {
    components_ = components;
    return;
  }
  features_.resize(m_, p_ * (p_ + 1) / 2);
  int c = 0;
  for (int q = 0; q < p_; ++q)
    for (int r = q; r < p_; ++r, ++c) {
      const double w = q == r ? 1.0 : 2.0;
      features_.col(c) = w * components.row(q).transpose().cwiseProduct(components.row(r).transpose());
    }
}

Eigen::VectorXd QuadraticFormMap::apply(const Eigen::MatrixXd& matrix) const {
  check_square(matrix, p_, "matrix");
  if (!packed_) return (matrix * components_).cwiseProduct(components_).colwise().sum().transpose();
  Eigen::VectorXd packed(features_.cols());
  int c = 0;
  for (int q = 0; q < p_; ++q)
    for (int r = q; r < p_; ++r, ++c) packed(c) = 0.5 * (matrix(q, r) + matrix(r, q));
  return features_ * packed;
}

std::uint64_t QuadraticFormMap::flops() const {
  const auto p = static_cast<std::uint64_t>(p_);
  const auto m = static_cast<std::uint64_t>(m_);
  return packed_ ? m * p * (p + 1) : 2 * p * p * m + 2 * p * m;
}

int SensitivityMap::undefined() const { return static_cast<int>(values.array().isNaN().count()); }

int SensitivityMap::flagged() const { return static_cast<int>(std::count(out_of_range.begin(), out_of_range.end(), true)); }

SensitivityMap reproject_map(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance,
                             const QuadraticFormMap& forms, const Eigen::MatrixXd& components,
                             const Eigen::VectorXd& mean, double slack) {
  const int p = forms.size();
  check_square(numerator, p, "numerator matrix");
  check_square(variance, p, "variance matrix");
  if (components.rows() != p || components.cols() != forms.output_dims())
    throw DimensionMismatch("component matrix does not match the quadratic form map");
  if (mean.size() != 0 && mean.size() != p) throw DimensionMismatch("mean vector length differs from p");

  SensitivityMap map;
  map.numerators = forms.apply(numerator);
  map.denominators = forms.apply(variance);
  const Eigen::Index m = map.numerators.size();
  Eigen::VectorXd f0 = mean.size() ? Eigen::VectorXd(components.transpose() * mean) : Eigen::VectorXd::Zero(m);
  map.values.resize(m);
  map.out_of_range.assign(m, false);
  for (Eigen::Index l = 0; l < m; ++l) {
    if (map.denominators(l) > variance_floor(f0(l) * f0(l))) {
      const double v = map.numerators(l) / map.denominators(l);
      map.values(l) = v;
      map.out_of_range[l] = v < -slack || v > 1.0 + slack;
    } else {
      map.values(l) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return map;
}

SensitivityMap reproject_map(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance,
                             const Eigen::MatrixXd& components, const Eigen::VectorXd& mean, double slack) {
  return reproject_map(numerator, variance, QuadraticFormMap(components), components, mean, slack);
}

double trace_product(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows())
    throw DimensionMismatch("trace product needs square matrices of equal size");
  return a.cwiseProduct(b.transpose()).sum();
}

const char* to_string(IndexKind kind) {
  switch (kind) {
    case IndexKind::Closed:
      return "closed";
    case IndexKind::Total:
      return "total";
    case IndexKind::PluginTotal:
      return "plugin_total";
  }
  return "?";
}

namespace {

GsiValue make_gsi(double num, double den, double floor, IndexKind kind) {
  if (!(den > floor)) throw DegenerateVariance("GSI denominator trace is (near) zero");
  GsiValue g;
  g.numerator = num;
  g.denominator = den;
  g.kind = kind;
  g.value = kind == IndexKind::PluginTotal ? plug_in_total(num / den) : num / den;
  return g;
}

}  // namespace

GsiValue gsi(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& variance, const Eigen::MatrixXd& gram,
             IndexKind kind, const Eigen::VectorXd& mean) {
  const int p = static_cast<int>(gram.rows());
  check_square(gram, p, "Gram matrix");
  check_square(numerator, p, "numerator matrix");
  check_square(variance, p, "variance matrix");
  const double f02 = mean.size() == p ? mean.dot(gram * mean) : 0.0;
  return make_gsi(trace_product(numerator, gram), trace_product(variance, gram), variance_floor(f02), kind);
}

GsiValue gsi_fixed_covariance(const Eigen::MatrixXd& numerator, const Eigen::MatrixXd& gram,
                              const Eigen::MatrixXd& fixed_variance, IndexKind kind) {
  const int p = static_cast<int>(gram.rows());
  check_square(gram, p, "Gram matrix");
  check_square(numerator, p, "numerator matrix");
  check_square(fixed_variance, p, "fixed variance matrix");
  return make_gsi(trace_product(numerator, gram), trace_product(fixed_variance, gram), variance_floor(0.0), kind);
}

Eigen::MatrixXd coefficient_covariance(const Eigen::MatrixXd& coefficients) {
  if (coefficients.rows() < 2) throw InvalidArgument("covariance needs at least 2 rows");
  const Eigen::MatrixXd centered = coefficients.rowwise() - coefficients.colwise().mean();
  Eigen::MatrixXd c = centered.transpose() * centered / static_cast<double>(coefficients.rows());
  return 0.5 * (c + c.transpose());
}

}  // namespace fgsa
