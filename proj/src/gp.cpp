#include "fgsa/gp.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <json.hpp>

#include "fgsa/error.hpp"
#include "fgsa/parallel.hpp"

namespace fgsa {

namespace {

constexpr double kSqrt5 = 2.2360679774997896964;
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr int kPanelWidth = 16;

// Matern 5/2 correlation as a function of s = sqrt(5) r.
inline double matern_of_s(double s) { return (1.0 + s + s * s / 3.0) * std::exp(-s); }

Eigen::MatrixXd scaled(const Eigen::MatrixXd& x, const Eigen::VectorXd& lengthscales) {
  return x * lengthscales.cwiseInverse().asDiagonal();
}

void check_params(const KernelParams& params, int dims) {
  if (params.lengthscales.size() != dims)
    throw DimensionMismatch("kernel has " + std::to_string(params.lengthscales.size()) + " lengthscales, inputs have " +
                            std::to_string(dims) + " dimensions");
  if (!(params.lengthscales.array() > 0.0).all() || !(params.signal_variance > 0.0) || !(params.nugget >= 0.0))
    throw InvalidArgument("kernel lengthscales and variance must be positive, nugget non-negative");
}

// Direct pairwise evaluation for training matrices; exact diagonal.
Eigen::MatrixXd training_kernel(const Eigen::MatrixXd& x, const KernelParams& params) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd xs = scaled(x, params.lengthscales);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    k(b, b) = params.signal_variance;
    for (Eigen::Index a = b + 1; a < n; ++a) {
      double s = kSqrt5 * (xs.row(a) - xs.row(b)).norm();
      k(a, b) = k(b, a) = params.signal_variance * matern_of_s(s);
    }
  }
  return k;
}

struct MinimizeResult {
  Eigen::VectorXd x;
  double value;
};

// Projected quasi-Newton (BFGS) on a box. `f` returns the objective and
// fills the gradient; non-finite values are treated as infeasible.
MinimizeResult minimize_box(const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& f,
                            Eigen::VectorXd x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi, int max_iterations) {
  const Eigen::Index k = x.size();
  x = x.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd g(k);
  double fx = f(x, g);
  if (!std::isfinite(fx)) return {x, fx};
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(k, k);

  for (int it = 0; it < max_iterations; ++it) {
    Eigen::Array<bool, Eigen::Dynamic, 1> free(k);
    for (Eigen::Index i = 0; i < k; ++i)
      free(i) = !((x(i) <= lo(i) && g(i) > 0.0) || (x(i) >= hi(i) && g(i) < 0.0));
    Eigen::VectorXd pg = free.select(g, 0.0);
    if (pg.lpNorm<Eigen::Infinity>() < 1e-7) break;

    Eigen::VectorXd d = free.select(-(h * pg), 0.0);
    if (d.dot(pg) >= 0.0) {
      h.setIdentity();
      d = -pg;
    }
    const double step_cap = 2.0 / std::max(1e-300, d.lpNorm<Eigen::Infinity>());
    double alpha = std::min(1.0, step_cap);

    Eigen::VectorXd xn, gn(k);
    double fn = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      xn = (x + alpha * d).cwiseMax(lo).cwiseMin(hi);
      fn = f(xn, gn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    Eigen::VectorXd s = xn - x;
    Eigen::VectorXd y = gn - g;
    const double sy = s.dot(y);
    const double change = fx - fn;
    x = xn;
    fx = fn;
    g = gn;
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      Eigen::MatrixXd v = Eigen::MatrixXd::Identity(k, k) - rho * s * y.transpose();
      h = v * h * v.transpose() + rho * s * s.transpose();
    }
    if (change < 1e-10 * (1.0 + std::abs(fx))) break;
  }
  return {x, fx};
}

struct Factor {
  Eigen::MatrixXd matrix;  // dense: lower triangle is the factor; low rank: L×r
  Eigen::VectorXd noise_sd;  // low rank only: independent per-point term
  bool triangular = false;
  int rank = 0;
};

Factor dense_factor(const GpSurrogate& gp, const Eigen::MatrixXd& query, const Eigen::MatrixXd& w) {
  const double sig2 = gp.params().signal_variance;
  Factor out;
  out.matrix = kernel_matrix(query, query, gp.params());
  out.matrix.noalias() -= w.transpose() * w;
  Eigen::MatrixXd& cov = out.matrix;
  const Eigen::Index l = cov.rows();
  Eigen::VectorXd diag = cov.diagonal().cwiseMax(0.0);

  // plain factorization first; jitter only after a failure
  const double max_jitter = 1e-4 * sig2;
  double jitter = 0.0;
  while (true) {
    cov.diagonal() = diag.array() + jitter;
    Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(cov);
    if (llt.info() == Eigen::Success) break;
    if (jitter >= max_jitter)
      throw IllConditionedKernel("conditional covariance not positive definite with jitter " +
                                 std::to_string(jitter / sig2) + " sigma^2");
    // the in-place factorization only touched the lower triangle
    for (Eigen::Index j = 0; j < l; ++j)
      for (Eigen::Index i = j + 1; i < l; ++i) cov(i, j) = cov(j, i);
    jitter = jitter == 0.0 ? 1e-10 * sig2 : std::min(2.0 * jitter, max_jitter);
  }
  out.triangular = true;
  out.rank = static_cast<int>(l);
  return out;
}

// Pivoted Cholesky of K(Q,Q) - W^T W evaluated column by column. The
// residual diagonal becomes an independent per-point term, so marginal
// variances match the dense factorization. Returns false
// when `max_rank` pivots are not enough to reach the tolerance.
bool low_rank_factor(const GpSurrogate& gp, const Eigen::MatrixXd& query, const Eigen::MatrixXd& w, double tolerance,
                     int max_rank, Factor& out) {
  const KernelParams& params = gp.params();
  const double sig2 = params.signal_variance;
  const Eigen::Index l = query.rows();
  const double tol = tolerance * sig2;
  Eigen::MatrixXd qs = scaled(query, params.lengthscales);
  Eigen::VectorXd diag = (sig2 - w.colwise().squaredNorm().array()).matrix().cwiseMax(0.0);

  Eigen::MatrixXd f(l, std::min<Eigen::Index>(max_rank, 64));
  Eigen::VectorXd col(l);
  int rank = 0;
  while (true) {
    Eigen::Index pivot;
    const double dmax = diag.maxCoeff(&pivot);
    if (dmax <= tol) break;
    if (rank >= max_rank) return false;
    if (rank == f.cols()) f.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(2 * f.cols(), max_rank));

    Eigen::RowVectorXd center = qs.row(pivot);
    col = ((qs.rowwise() - center).rowwise().norm() * kSqrt5).unaryExpr([sig2](double s) {
      return sig2 * matern_of_s(s);
    });
    col.noalias() -= w.transpose() * w.col(pivot);
    if (rank > 0) col.noalias() -= f.leftCols(rank) * f.row(pivot).head(rank).transpose();
    col /= std::sqrt(dmax);
    f.col(rank) = col;
    diag -= col.cwiseAbs2();
    diag(pivot) = 0.0;
    diag = diag.cwiseMax(0.0);
    ++rank;
  }
  f.conservativeResize(Eigen::NoChange, rank);
  out.noise_sd = diag.cwiseSqrt();
  out.matrix = std::move(f);
  out.triangular = false;
  out.rank = rank;
  return true;
}

Factor factor_conditional(const GpSurrogate& gp, const Eigen::MatrixXd& query, const Eigen::MatrixXd& w,
                          const SamplingOptions& opts) {
  const auto l = static_cast<int>(query.rows());
  Factor out;
  switch (opts.factorization) {
    case Factorization::Dense:
      return dense_factor(gp, query, w);
    case Factorization::LowRank:
      low_rank_factor(gp, query, w, opts.low_rank_tolerance, l, out);
      return out;
    case Factorization::Auto:
      if (l >= opts.auto_dense_below) {
        const int cap = std::max(32, static_cast<int>(opts.low_rank_max_fraction * l));
        if (low_rank_factor(gp, query, w, opts.low_rank_tolerance, std::min(cap, l), out)) return out;
      }
      return dense_factor(gp, query, w);
  }
  return out;
}

void fill_normals(Eigen::Ref<Eigen::VectorXd> out, Seed seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < out.size(); ++k) out(k) = normal(rng);
}

// Rows of normals consumed per draw.
Eigen::Index normals_per_draw(const Factor& factor) {
  return factor.triangular ? factor.rank : factor.rank + factor.noise_sd.size();
}

// Correlated part from the first `rank` rows of the panel, independent part
// from the remaining rows (low rank only).
Eigen::MatrixXd apply_factor(const Factor& factor, const Eigen::MatrixXd& panel) {
  if (factor.triangular) return factor.matrix.triangularView<Eigen::Lower>() * panel;
  const Eigen::Index l = factor.noise_sd.size();
  Eigen::MatrixXd out = factor.noise_sd.asDiagonal() * panel.bottomRows(l);
  if (factor.rank > 0) out.noalias() += factor.matrix * panel.topRows(factor.rank);
  return out;
}

}  // namespace

double matern52(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
                const KernelParams& params) {
  if (x.size() != y.size()) throw DimensionMismatch("kernel arguments differ in dimension");
  check_params(params, static_cast<int>(x.size()));
  const double r = ((x - y).array() / params.lengthscales.array()).matrix().norm();
  return params.signal_variance * matern_of_s(kSqrt5 * r);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const KernelParams& params) {
  if (a.cols() != b.cols()) throw DimensionMismatch("kernel arguments differ in dimension");
  check_params(params, static_cast<int>(a.cols()));
  Eigen::MatrixXd as = scaled(a, params.lengthscales);
  Eigen::MatrixXd bs = scaled(b, params.lengthscales);
  Eigen::MatrixXd k(a.rows(), b.rows());
  k.noalias() = -2.0 * as * bs.transpose();
  k.colwise() += as.rowwise().squaredNorm();
  k.rowwise() += bs.rowwise().squaredNorm().transpose();
  const double sig2 = params.signal_variance;
  k = k.unaryExpr([sig2](double r2) { return sig2 * matern_of_s(kSqrt5 * std::sqrt(std::max(r2, 0.0))); });
  return k;
}

Eigen::VectorXd to_log_params(const KernelParams& params) {
  const Eigen::Index d = params.lengthscales.size();
  Eigen::VectorXd z(d + 2);
  z.head(d) = params.lengthscales.array().log();
  z(d) = std::log(params.signal_variance);
  z(d + 1) = std::log(std::max(params.nugget / params.signal_variance, std::numeric_limits<double>::min()));
  return z;
}

KernelParams from_log_params(const Eigen::VectorXd& z) {
  const Eigen::Index d = z.size() - 2;
  KernelParams p;
  p.lengthscales = z.head(d).array().exp();
  p.signal_variance = std::exp(z(d));
  p.nugget = p.signal_variance * std::exp(z(d + 1));
  return p;
}

LogLikelihood log_marginal_likelihood(const Eigen::MatrixXd& design, const Eigen::VectorXd& targets,
                                      const KernelParams& params, bool with_gradient) {
  const Eigen::Index n = design.rows();
  const Eigen::Index d = design.cols();
  check_params(params, static_cast<int>(d));
  if (targets.size() != n) throw DimensionMismatch("targets and design differ in length");

  const double sig2 = params.signal_variance;
  Eigen::MatrixXd xs = scaled(design, params.lengthscales);
  Eigen::MatrixXd k(n, n);
  Eigen::MatrixXd base;  // d k / d (r^2-weighted) term, see gradient below
  if (with_gradient) base.resize(n, n);
  for (Eigen::Index b = 0; b < n; ++b) {
    k(b, b) = sig2 + params.nugget;
    if (with_gradient) base(b, b) = 0.0;
    for (Eigen::Index a = b + 1; a < n; ++a) {
      const double s = kSqrt5 * (xs.row(a) - xs.row(b)).norm();
      const double e = std::exp(-s);
      k(a, b) = k(b, a) = sig2 * (1.0 + s + s * s / 3.0) * e;
      if (with_gradient) base(a, b) = base(b, a) = sig2 * (5.0 / 3.0) * (1.0 + s) * e;
    }
  }

  LogLikelihood out;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  const Eigen::VectorXd alpha = llt.solve(targets);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  out.value = -0.5 * targets.dot(alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * kLog2Pi;
  if (!std::isfinite(out.value)) {
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  if (!with_gradient) return out;

  // dL/dphi = 1/2 tr((alpha alpha^T - K^-1) dK/dphi)
  Eigen::MatrixXd q = alpha * alpha.transpose() - llt.solve(Eigen::MatrixXd::Identity(n, n));
  out.gradient.resize(d + 2);
  for (Eigen::Index i = 0; i < d; ++i) {
    // dk/dlog(theta_i) = base * (delta_i / theta_i)^2
    double acc = 0.0;
    for (Eigen::Index b = 0; b < n; ++b)
      for (Eigen::Index a = b + 1; a < n; ++a) {
        const double di = xs(a, i) - xs(b, i);
        acc += q(a, b) * base(a, b) * di * di;
      }
    out.gradient(i) = acc;  // factor 2 from symmetry cancels the 1/2
  }
  const double eta = params.nugget / sig2;
  out.gradient(d) = 0.5 * q.cwiseProduct(k).sum();
  out.gradient(d + 1) = 0.5 * sig2 * eta * q.trace();
  return out;
}

GpSurrogate::GpSurrogate(DesignMatrix design, Eigen::VectorXd targets, KernelParams params)
    : design_(std::move(design)), targets_(std::move(targets)), params_(std::move(params)) {
  const int n = design_.rows();
  if (n < 2) throw InvalidDesign("GP needs at least 2 design points");
  if (targets_.size() != n) throw DimensionMismatch("targets and design differ in length");
  if (!targets_.allFinite()) throw InvalidArgument("GP targets must be finite");
  check_params(params_, design_.dims());

  Eigen::MatrixXd k = training_kernel(design_.points(), params_);
  k.diagonal().array() += params_.nugget;
  const double sig2 = params_.signal_variance;
  Eigen::LLT<Eigen::MatrixXd> llt;
  while (true) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter_;
    llt.compute(kj);
    if (llt.info() == Eigen::Success) break;
    if (jitter_ >= 1e-4 * sig2)
      throw IllConditionedKernel("training covariance not positive definite after jitter escalation");
    jitter_ = jitter_ == 0.0 ? 1e-10 * sig2 : std::min(2.0 * jitter_, 1e-4 * sig2);
  }
  chol_ = llt.matrixL();
  alpha_ = llt.solve(targets_);
  whitened_ = chol_.triangularView<Eigen::Lower>().solve(targets_);
  log_likelihood_ = -0.5 * whitened_.squaredNorm() - chol_.diagonal().array().log().sum() -
                    0.5 * static_cast<double>(n) * kLog2Pi;
}

Eigen::MatrixXd GpSurrogate::cross_solve(const Eigen::MatrixXd& query) const {
  if (query.cols() != design_.dims()) throw DimensionMismatch("query dimension differs from the design");
  Eigen::MatrixXd w = kernel_matrix(design_.points(), query, params_);
  chol_.triangularView<Eigen::Lower>().solveInPlace(w);
  return w;
}

Eigen::VectorXd GpSurrogate::predict(const Eigen::MatrixXd& query) const {
  if (query.cols() != design_.dims()) throw DimensionMismatch("query dimension differs from the design");
  return kernel_matrix(query, design_.points(), params_) * alpha_;
}

Moments GpSurrogate::conditional_moments(const Eigen::MatrixXd& query) const {
  if (!query.allFinite()) throw InvalidArgument("query points must be finite");
  Eigen::MatrixXd w = cross_solve(query);
  Moments out;
  out.mean = w.transpose() * whitened_;
  out.cov = kernel_matrix(query, query, params_);
  out.cov.noalias() -= w.transpose() * w;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  out.cov.diagonal() = out.cov.diagonal().cwiseMax(0.0);
  return out;
}

GpSurrogate fit_gp(const DesignMatrix& design, const Eigen::VectorXd& targets, const GpOptions& options,
                   GpFitReport* report) {
  const int n = design.rows();
  const int d = design.dims();
  if (n < 2) throw InvalidDesign("GP needs at least 2 design points");
  if (targets.size() != n) throw DimensionMismatch("targets and design differ in length");
  if (!targets.allFinite()) throw InvalidArgument("GP targets must be finite");
  if (options.starts < 1) throw InvalidArgument("need at least one optimizer start");

  const double mean = targets.mean();
  double scale = (targets.array() - mean).square().mean();
  if (!(scale > 0.0)) scale = 1.0;

  Eigen::VectorXd lo(d + 2), hi(d + 2), start_lo(d + 2), start_hi(d + 2);
  for (int i = 0; i < d; ++i) {
    const double range = design.space().bounds(i).width();
    lo(i) = std::log(options.lengthscale_lower * range);
    hi(i) = std::log(options.lengthscale_upper * range);
    start_lo(i) = std::log(0.1 * range);
    start_hi(i) = std::log(10.0 * range);
  }
  lo(d) = std::log(options.variance_lower * scale);
  hi(d) = std::log(options.variance_upper * scale);
  start_lo(d) = std::log(0.1 * scale);
  start_hi(d) = std::log(10.0 * scale);
  lo(d + 1) = std::log(options.nugget_lower);
  hi(d + 1) = std::log(options.nugget_upper);
  start_lo(d + 1) = std::log(std::max(options.nugget_lower, 1e-8));
  start_hi(d + 1) = std::log(std::min(options.nugget_upper, 1e-4));
  start_lo = start_lo.cwiseMax(lo).cwiseMin(hi);
  start_hi = start_hi.cwiseMax(lo).cwiseMin(hi);

  // Latin grid of starts on the unit cube, mapped into the start box.
  Eigen::MatrixXd unit(options.starts, d + 2);
  if (options.starts == 1) {
    unit.setConstant(0.5);
  } else {
    unit = lhs_sample(InputSpace::unit_cube(d + 2), options.starts, options.start_seed).points();
  }

  const Eigen::MatrixXd& x = design.points();
  auto objective = [&](const Eigen::VectorXd& z, Eigen::VectorXd& grad) {
    LogLikelihood ll = log_marginal_likelihood(x, targets, from_log_params(z), true);
    if (!std::isfinite(ll.value)) return std::numeric_limits<double>::infinity();
    grad = -ll.gradient;
    return -ll.value;
  };

  GpFitReport local;
  GpFitReport& rep = report ? *report : local;
  rep = GpFitReport{};
  double best_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best;
  for (int s = 0; s < options.starts; ++s) {
    Eigen::VectorXd z0 = start_lo.array() + unit.row(s).transpose().array() * (start_hi - start_lo).array();
    rep.starts.push_back(z0);
    rep.start_values.push_back(log_marginal_likelihood(x, targets, from_log_params(z0), false).value);
    MinimizeResult res = minimize_box(objective, z0, lo, hi, options.max_iterations);
    rep.final_values.push_back(std::isfinite(res.value) ? -res.value : -std::numeric_limits<double>::infinity());
    if (std::isfinite(res.value) && res.value < best_value) {
      best_value = res.value;
      best = res.x;
      rep.best = s;
    }
  }
  if (rep.best < 0) throw IllConditionedKernel("no optimizer start produced a positive definite kernel");

  // The likelihood is nearly flat in small nuggets, so local search leaves the
  // nugget close to its start. Scan decades down to the lower bound and take
  // the smaller nugget whenever the likelihood is not worse beyond rounding.
  for (double z = best(d + 1) - std::log(10.0); z >= lo(d + 1) - 1e-9; z -= std::log(10.0)) {
    Eigen::VectorXd trial = best;
    trial(d + 1) = std::max(z, lo(d + 1));
    const double value = -log_marginal_likelihood(x, targets, from_log_params(trial), false).value;
    if (value <= best_value + 1e-10 * std::max(1.0, std::abs(best_value))) {
      best_value = std::min(best_value, value);
      best = trial;
    }
  }
  return GpSurrogate(design, targets, from_log_params(best));
}

VectorGp::VectorGp(std::vector<GpSurrogate> components) : gps_(std::move(components)) {
  if (gps_.empty()) throw InvalidArgument("vector GP needs at least one component");
  for (const auto& gp : gps_)
    if (gp.design().points().rows() != gps_.front().design().points().rows() ||
        gp.design().points() != gps_.front().design().points())
      throw InvalidArgument("all coefficient GPs must share the same design");
}

VectorGp fit_vector_gp(const DesignMatrix& design, const BasisExpansion& basis, const GpOptions& options,
                       int threads) {
  if (basis.coefficients().rows() != design.rows())
    throw DimensionMismatch("basis has " + std::to_string(basis.coefficients().rows()) + " training rows, design has " +
                            std::to_string(design.rows()));
  const int p = basis.size();
  std::vector<std::optional<GpSurrogate>> fitted(p);
  parallel_for(p, threads, [&](int q) {
    fitted[q].emplace(fit_gp(design, basis.coefficients().col(q), options));
  });
  std::vector<GpSurrogate> gps;
  gps.reserve(p);
  for (auto& g : fitted) gps.push_back(std::move(*g));
  return VectorGp(std::move(gps));
}

void save_surrogates(const VectorGp& vgp, const std::filesystem::path& path, const std::string& design_ref) {
  nlohmann::json j;
  j["format"] = "fgsa-surrogates";
  j["version"] = 1;
  j["design"] = design_ref;
  j["rows"] = vgp.design().rows();
  j["variables"] = vgp.design().space().names();
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& gp : vgp.components()) {
    const auto& p = gp.params();
    comps.push_back({{"lengthscales", std::vector<double>(p.lengthscales.data(), p.lengthscales.data() + p.lengthscales.size())},
                     {"signal_variance", p.signal_variance},
                     {"nugget", p.nugget},
                     {"log_likelihood", gp.log_likelihood()}});
  }
  j["components"] = comps;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

VectorGp load_surrogates(const std::filesystem::path& path, const DesignMatrix& design, const BasisExpansion& basis) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "fgsa-surrogates") throw IoError(path.string() + ": not a surrogate file");
  if (j.at("rows").get<int>() != design.rows()) throw DimensionMismatch("surrogate file was fitted on another design");
  const auto& comps = j.at("components");
  if (static_cast<int>(comps.size()) != basis.size())
    throw DimensionMismatch("surrogate file has " + std::to_string(comps.size()) + " components, basis has " +
                            std::to_string(basis.size()));
  std::vector<GpSurrogate> gps;
  for (std::size_t q = 0; q < comps.size(); ++q) {
    KernelParams p;
    auto ls = comps[q].at("lengthscales").get<std::vector<double>>();
    p.lengthscales = Eigen::Map<Eigen::VectorXd>(ls.data(), static_cast<Eigen::Index>(ls.size()));
    p.signal_variance = comps[q].at("signal_variance").get<double>();
    p.nugget = comps[q].at("nugget").get<double>();
    gps.emplace_back(design, basis.coefficients().col(static_cast<Eigen::Index>(q)), p);
  }
  return VectorGp(std::move(gps));
}

namespace {

// Draw j of one coefficient with its own factorization, placed in the same
// panel column as in batch mode so the result is bit-identical.
Eigen::VectorXd single_draw(const GpSurrogate& gp, const Eigen::MatrixXd& query, const Eigen::MatrixXd& w,
                            const Eigen::VectorXd& mean, int q, int j, Seed seed, const SamplingOptions& options,
                            int* rank) {
  const Factor factor = factor_conditional(gp, query, w, options);
  if (rank) *rank = factor.rank;
  Eigen::MatrixXd panel = Eigen::MatrixXd::Zero(normals_per_draw(factor), kPanelWidth);
  fill_normals(panel.col(j % kPanelWidth),
               derive_seed(seed, {static_cast<std::uint64_t>(q), static_cast<std::uint64_t>(j)}));
  return mean + apply_factor(factor, panel).col(j % kPanelWidth);
}

void check_query(const Eigen::MatrixXd& query, int n_z) {
  if (query.rows() < 1) throw InvalidArgument("need at least one query location");
  if (n_z < 1) throw InvalidArgument("need at least one trajectory");
  if (!query.allFinite()) throw InvalidArgument("query points must be finite");
}

}  // namespace

Eigen::MatrixXd sample_trajectory(const VectorGp& vgp, const Eigen::MatrixXd& query, int j, Seed seed,
                                  const SamplingOptions& options) {
  check_query(query, 1);
  if (j < 0) throw InvalidArgument("trajectory index must be non-negative");
  Eigen::MatrixXd out(query.rows(), vgp.size());
  parallel_for(vgp.size(), options.threads, [&](int q) {
    const GpSurrogate& gp = vgp[q];
    const Eigen::MatrixXd w = gp.cross_solve(query);
    const Eigen::VectorXd mean = w.transpose() * gp.whitened_targets();
    out.col(q) = single_draw(gp, query, w, mean, q, j, seed, options, nullptr);
  });
  return out;
}

TrajectoryBatch sample_trajectories(const VectorGp& vgp, const Eigen::MatrixXd& query, int n_z, Seed seed,
                                    const SamplingOptions& options) {
  check_query(query, n_z);
  const int p = vgp.size();
  const Eigen::Index l = query.rows();

  TrajectoryBatch batch;
  batch.seed = seed;
  batch.draws.assign(n_z, Eigen::MatrixXd(l, p));
  batch.ranks.assign(p, 0);
  std::atomic<int> factorizations{0};

  parallel_for(p, options.threads, [&](int q) {
    const GpSurrogate& gp = vgp[q];
    const Eigen::MatrixXd w = gp.cross_solve(query);
    const Eigen::VectorXd mean = w.transpose() * gp.whitened_targets();

    if (options.mode == SamplingMode::Batch) {
      const Factor factor = factor_conditional(gp, query, w, options);
      ++factorizations;
      batch.ranks[q] = factor.rank;
      for (int start = 0; start < n_z; start += kPanelWidth) {
        Eigen::MatrixXd panel = Eigen::MatrixXd::Zero(normals_per_draw(factor), kPanelWidth);
        const int width = std::min(kPanelWidth, n_z - start);
        for (int c = 0; c < width; ++c)
          fill_normals(panel.col(c), derive_seed(seed, {static_cast<std::uint64_t>(q), static_cast<std::uint64_t>(start + c)}));
        const Eigen::MatrixXd prod = apply_factor(factor, panel);
        for (int c = 0; c < width; ++c) batch.draws[start + c].col(q) = mean + prod.col(c);
      }
    } else {
      for (int j = 0; j < n_z; ++j) {
        batch.draws[j].col(q) = single_draw(gp, query, w, mean, q, j, seed, options, &batch.ranks[q]);
        ++factorizations;
      }
    }
  });
  batch.factorizations = factorizations;
  return batch;
}

}  // namespace fgsa
