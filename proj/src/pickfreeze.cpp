#include "fgsa/pickfreeze.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fgsa/error.hpp"

namespace fgsa {

IndexSet::IndexSet(std::vector<int> variables, int dims) : vars_(std::move(variables)), dims_(dims) {
  if (dims_ < 1 || dims_ > 64) throw InvalidArgument("index sets support 1 to 64 input variables");
  std::sort(vars_.begin(), vars_.end());
  vars_.erase(std::unique(vars_.begin(), vars_.end()), vars_.end());
  if (vars_.empty()) throw InvalidArgument("index set must not be empty");
  if (vars_.front() < 0 || vars_.back() >= dims_)
    throw InvalidArgument("index set member out of range [0, " + std::to_string(dims_) + ")");
}

bool IndexSet::contains(int variable) const { return std::binary_search(vars_.begin(), vars_.end(), variable); }

IndexSet IndexSet::complement() const {
  std::vector<int> rest;
  for (int i = 0; i < dims_; ++i)
    if (!contains(i)) rest.push_back(i);
  if (rest.empty()) throw InvalidArgument("the full index set has an empty complement");
  return IndexSet(std::move(rest), dims_);
}

std::uint64_t IndexSet::key() const {
  std::uint64_t k = 0;
  for (int v : vars_) k |= std::uint64_t{1} << v;
  return k;
}

std::string IndexSet::label(const InputSpace& space) const {
  std::string out;
  for (int v : vars_) {
    if (!out.empty()) out += '+';
    out += space.name(v);
  }
  return out;
}

PfDesign make_pf_design(const InputSpace& space, int n_pf, const IndexSet& u, Seed seed) {
  if (n_pf < 2) throw InvalidArgument("PF sample size must be at least 2");
  if (u.dims() != space.dims())
    throw DimensionMismatch("index set is over " + std::to_string(u.dims()) + " variables, space has " +
                            std::to_string(space.dims()));
  Eigen::MatrixXd x1 = mc_sample(space, n_pf, derive_seed(seed, {1})).points();
  Eigen::MatrixXd x2 = mc_sample(space, n_pf, derive_seed(seed, {2})).points();
  Eigen::MatrixXd star = x2;
  Eigen::MatrixXd star_total = x1;
  for (int v : u.variables()) {
    star.col(v) = x1.col(v);
    star_total.col(v) = x2.col(v);
  }
  return PfDesign{std::move(x1), std::move(star), std::move(star_total), u};
}

ScalarPfEstimate scalar_closed_pf_unchecked(const Eigen::Ref<const Eigen::VectorXd>& y,
                                            const Eigen::Ref<const Eigen::VectorXd>& y_star) {
  if (y.size() != y_star.size()) throw DimensionMismatch("PF output vectors differ in length");
  if (y.size() < 2) throw InvalidArgument("PF estimator needs at least 2 samples");
  const double n = static_cast<double>(y.size());
  ScalarPfEstimate e;
  e.mean = 0.5 * (y.sum() + y_star.sum()) / n;
  const double f02 = e.mean * e.mean;
  e.closed_variance = y.dot(y_star) / n - f02;
  e.variance = 0.5 * (y.squaredNorm() + y_star.squaredNorm()) / n - f02;
  e.index = e.variance > variance_floor(f02) ? e.closed_variance / e.variance : std::numeric_limits<double>::quiet_NaN();
  return e;
}

ScalarPfEstimate scalar_closed_pf(const Eigen::Ref<const Eigen::VectorXd>& y,
                                  const Eigen::Ref<const Eigen::VectorXd>& y_star) {
  ScalarPfEstimate e = scalar_closed_pf_unchecked(y, y_star);
  if (std::isnan(e.index)) throw DegenerateVariance("PF outputs have (near) zero variance");
  return e;
}

SobolMatrixEstimate vector_closed_pf_unchecked(const Eigen::MatrixXd& y, const Eigen::MatrixXd& ys) {
  if (y.rows() != ys.rows() || y.cols() != ys.cols()) throw DimensionMismatch("PF output matrices differ in shape");
  if (y.rows() < 2) throw InvalidArgument("PF estimator needs at least 2 samples");
  if (y.cols() < 1) throw InvalidArgument("PF outputs need at least one column");
  const double n = static_cast<double>(y.rows());

  SobolMatrixEstimate e;
  e.mean = 0.5 * (y.colwise().sum() + ys.colwise().sum()).transpose() / n;
  const Eigen::MatrixXd f0f0 = e.mean * e.mean.transpose();
  e.closed.noalias() = y.transpose() * ys / n;
  e.closed -= f0f0;
  e.cov.noalias() = y.transpose() * y;
  e.cov.noalias() += ys.transpose() * ys;
  e.cov = e.cov / (2.0 * n) - f0f0;
  e.cov = 0.5 * (e.cov + e.cov.transpose()).eval();
  return e;
}

SobolMatrixEstimate vector_closed_pf(const PfOutputs& outputs) {
  SobolMatrixEstimate e = vector_closed_pf_unchecked(outputs.y, outputs.y_star);
  if (e.cov.diagonal().maxCoeff() <= variance_floor(e.mean.squaredNorm()))
    throw DegenerateVariance("PF outputs have (near) zero variance in every component");
  return e;
}

Eigen::MatrixXd vector_total_jansen(const Eigen::MatrixXd& y, const Eigen::MatrixXd& y_star_total) {
  if (y.rows() != y_star_total.rows() || y.cols() != y_star_total.cols())
    throw DimensionMismatch("PF output matrices differ in shape");
  if (y.rows() < 1) throw InvalidArgument("PF estimator needs at least 1 sample");
  const Eigen::MatrixXd diff = y - y_star_total;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(y.cols(), y.cols());
  t.selfadjointView<Eigen::Lower>().rankUpdate(diff.transpose(), 1.0 / (2.0 * static_cast<double>(y.rows())));
  return t.selfadjointView<Eigen::Lower>();
}

double plug_in_total(double closed_complement) { return 1.0 - closed_complement; }

IndexMatrix bootstrap_indices(int n_pf, int n_x, Seed seed) {
  if (n_pf < 1) throw InvalidArgument("PF sample size must be positive");
  if (n_x < 2) throw InvalidArgument("bootstrap needs at least 2 replicates");
  Rng rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, n_pf - 1);
  IndexMatrix idx(n_x - 1, n_pf);
  for (int b = 0; b < n_x - 1; ++b)
    for (int k = 0; k < n_pf; ++k) idx(b, k) = pick(rng);
  return idx;
}

}  // namespace fgsa
