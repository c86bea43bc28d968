#include "fgsa/errquant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fgsa/error.hpp"
#include "fgsa/parallel.hpp"

namespace fgsa {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio_or_nan(double num, double den, double floor) { return den > floor ? num / den : kNaN; }

std::vector<IndexKind> requested_kinds(bool totals) {
  if (totals) return {IndexKind::Closed, IndexKind::Total, IndexKind::PluginTotal};
  return {IndexKind::Closed};
}

IndexDistribution allocate(const IndexSet& u, const RunConfig& cfg, int m, bool totals) {
  IndexDistribution dist{u, cfg.n_pf, cfg.n_z, cfg.n_x, {}};
  for (IndexKind kind : requested_kinds(totals)) {
    IndexEstimates e;
    e.kind = kind;
    e.maps.resize(m, static_cast<Eigen::Index>(cfg.n_z) * cfg.n_x);
    e.gsi.resize(cfg.n_z, cfg.n_x);
    if (cfg.keep_components) {
      e.numerators.resize(m, e.maps.cols());
      e.denominators.resize(m, e.maps.cols());
    }
    dist.estimates.push_back(std::move(e));
  }
  return dist;
}

// Checks the trajectory stack and tells whether total-index rows are present.
bool check_draws(const std::vector<Eigen::MatrixXd>& draws, const BasisExpansion& basis, const RunConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(draws.size()) != cfg.n_z)
    throw DimensionMismatch("got " + std::to_string(draws.size()) + " trajectories, config asks for " +
                            std::to_string(cfg.n_z));
  const Eigen::Index n = cfg.n_pf;
  const Eigen::Index rows = draws.front().rows();
  if (rows != 2 * n && rows != 3 * n)
    throw DimensionMismatch("trajectories must have 2 n_pf or 3 n_pf rows, got " + std::to_string(rows));
  if (cfg.totals && rows != 3 * n) throw DimensionMismatch("total indices need trajectories at 3 n_pf locations");
  for (const auto& d : draws)
    if (d.rows() != rows || d.cols() != basis.size())
      throw DimensionMismatch("trajectory shape does not match the basis size");
  return cfg.totals;
}

void add(OpCounter* counter, std::uint64_t flops) {
  if (counter) counter->flops += flops;
}

// Stores one replicate's map and GSI for one index kind.
void store(IndexEstimates& e, int col, int j, int b, const Eigen::VectorXd& num, const Eigen::VectorXd& den,
           const Eigen::VectorXd& floors, double gsi_value, bool plugin) {
  for (Eigen::Index l = 0; l < num.size(); ++l) {
    const double r = ratio_or_nan(num(l), den(l), floors(l));
    e.maps(l, col) = plugin ? plug_in_total(r) : r;
  }
  if (e.numerators.size()) {
    e.numerators.col(col) = num;
    e.denominators.col(col) = den;
  }
  e.gsi(j, b) = gsi_value;
}

void annotate(int j, const std::exception_ptr& ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const NumericalError& e) {
    throw NumericalError("trajectory " + std::to_string(j) + ": " + e.what());
  }
}

}  // namespace

void RunConfig::validate() const {
  if (n_pf < 2) throw InvalidArgument("n_pf must be at least 2");
  if (n_z < 1) throw InvalidArgument("n_z must be at least 1");
  if (n_x < 1) throw InvalidArgument("n_x must be at least 1");
}

const IndexEstimates& IndexDistribution::get(IndexKind kind) const {
  for (const auto& e : estimates)
    if (e.kind == kind) return e;
  throw InvalidArgument(std::string("distribution has no ") + to_string(kind) + " estimates");
}

bool IndexDistribution::has(IndexKind kind) const {
  return std::any_of(estimates.begin(), estimates.end(), [kind](const auto& e) { return e.kind == kind; });
}

PfDesign algorithm3_design(const InputSpace& space, const IndexSet& u, const RunConfig& cfg) {
  return make_pf_design(space, cfg.n_pf, u, derive_seed(cfg.seed, {stream::kPfDesign, u.key()}));
}

Eigen::MatrixXd stacked_locations(const PfDesign& design, bool totals) {
  const Eigen::Index n = design.size();
  Eigen::MatrixXd q((totals ? 3 : 2) * n, design.x_hat.cols());
  q.topRows(n) = design.x_hat;
  q.middleRows(n, n) = design.x_star;
  if (totals) q.bottomRows(n) = design.x_star_total;
  return q;
}

Seed trajectory_seed(const IndexSet& u, const RunConfig& cfg) {
  return derive_seed(cfg.seed, {stream::kTrajectory, u.key()});
}

Seed bootstrap_seed(const IndexSet& u, const RunConfig& cfg, int j) {
  return derive_seed(cfg.seed, {stream::kBootstrap, u.key(), static_cast<std::uint64_t>(j)});
}

namespace {

// Basis-derived estimates for every replicate of one trajectory.
class BasisDerived {
 public:
  BasisDerived(const BasisExpansion& basis, const IndexSet& u, const RunConfig& cfg, bool totals)
      : basis_(basis), u_(u), cfg_(cfg), totals_(totals), forms_(basis.components()),
        fixed_(cfg.covariance == CovarianceMode::Fixed) {
    if (fixed_) {
      fixed_cov_ = coefficient_covariance(basis.coefficients());
      fixed_den_ = forms_.apply(fixed_cov_);
      fixed_trace_ = trace_product(fixed_cov_, basis.gram());
      if (!(fixed_trace_ > variance_floor(0.0))) throw DegenerateVariance("DoE coefficient covariance is zero");
    }
  }

  void run(const Eigen::MatrixXd& all, int j, IndexDistribution& dist, OpCounter* counter) const {
    const int n = cfg_.n_pf;
    const int p = basis_.size();
    const auto np = static_cast<std::uint64_t>(n) * p;
    const Eigen::MatrixXd& gram = basis_.gram();
    const IndexMatrix boot =
        cfg_.n_x > 1 ? bootstrap_indices(n, cfg_.n_x, bootstrap_seed(u_, cfg_, j)) : IndexMatrix();
    Eigen::MatrixXd y, ys, yt;
    for (int b = 0; b < cfg_.n_x; ++b) {
      if (b == 0) {
        y = all.topRows(n);
        ys = all.middleRows(n, n);
        if (totals_) yt = all.bottomRows(n);
      } else {
        const auto idx = boot.row(b - 1);
        y = all.topRows(n)(idx, Eigen::all);
        ys = all.middleRows(n, n)(idx, Eigen::all);
        if (totals_) yt = all.bottomRows(n)(idx, Eigen::all);
      }
      const int col = IndexDistribution::column(j, b, cfg_.n_x);

      const SobolMatrixEstimate est = vector_closed_pf_unchecked(y, ys);
      add(counter, 2 * np * (3 * p + 1));
      Denominators d = denominators(est, counter);
      const Eigen::VectorXd num = forms_.apply(est.closed);
      add(counter, forms_.flops());
      store(dist.estimates[0], col, j, b, num, d.pixels, d.floors,
            ratio_or_nan(trace_product(est.closed, gram), d.trace, d.trace_floor), false);
      if (!totals_) continue;

      const Eigen::MatrixXd t = vector_total_jansen(y, yt);
      const Eigen::VectorXd tnum = forms_.apply(t);
      add(counter, np + 2 * np * p + forms_.flops());
      store(dist.estimates[1], col, j, b, tnum, d.pixels, d.floors,
            ratio_or_nan(trace_product(t, gram), d.trace, d.trace_floor), false);

      // closed index of the complement from (Y, Y^-u)
      const SobolMatrixEstimate comp = vector_closed_pf_unchecked(y, yt);
      add(counter, np + 4 * np * p);
      Denominators cd = denominators(comp, counter);
      const Eigen::VectorXd cnum = forms_.apply(comp.closed);
      add(counter, forms_.flops());
      store(dist.estimates[2], col, j, b, cnum, cd.pixels, cd.floors,
            plug_in_total(ratio_or_nan(trace_product(comp.closed, gram), cd.trace, cd.trace_floor)), true);
    }
  }

 private:
  struct Denominators {
    Eigen::VectorXd pixels;
    Eigen::VectorXd floors;
    double trace;
    double trace_floor;
  };

  Denominators denominators(const SobolMatrixEstimate& est, OpCounter* counter) const {
    const int m = basis_.output_dims();
    if (fixed_) return {fixed_den_, Eigen::VectorXd::Constant(m, variance_floor(0.0)), fixed_trace_, variance_floor(0.0)};
    const Eigen::VectorXd f0 = basis_.components().transpose() * est.mean;
    add(counter, forms_.flops());
    return {forms_.apply(est.cov), f0.unaryExpr([](double f) { return variance_floor(f * f); }),
            trace_product(est.cov, basis_.gram()), variance_floor(f0.squaredNorm())};
  }

  const BasisExpansion& basis_;
  const IndexSet& u_;
  const RunConfig& cfg_;
  bool totals_;
  QuadraticFormMap forms_;
  bool fixed_;
  Eigen::MatrixXd fixed_cov_;
  Eigen::VectorXd fixed_den_;
  double fixed_trace_ = 0.0;
};

void count_sampling(OpCounter* counter, std::uint64_t draws, std::uint64_t calls, std::uint64_t factorizations) {
  if (!counter) return;
  counter->trajectory_draws += draws;
  counter->sampler_calls += calls;
  counter->factorizations += factorizations;
}

}  // namespace

IndexDistribution run_algorithm3(const std::vector<Eigen::MatrixXd>& draws, const BasisExpansion& basis,
                                 const IndexSet& u, const RunConfig& cfg, OpCounter* counter) {
  const bool totals = check_draws(draws, basis, cfg);
  const BasisDerived estimator(basis, u, cfg, totals);
  IndexDistribution dist = allocate(u, cfg, basis.output_dims(), totals);
  parallel_for(cfg.n_z, cfg.threads, [&](int j) {
    try {
      estimator.run(draws[j], j, dist, counter);
    } catch (...) {
      annotate(j, std::current_exception());
    }
  });
  return dist;
}

IndexDistribution run_algorithm3(const VectorGp& vgp, const BasisExpansion& basis, const InputSpace& space,
                                 const IndexSet& u, const RunConfig& cfg, OpCounter* counter) {
  cfg.validate();
  if (vgp.size() != basis.size())
    throw DimensionMismatch("vector GP has " + std::to_string(vgp.size()) + " components, basis has " +
                            std::to_string(basis.size()));
  if (space.dims() != vgp.design().dims()) throw DimensionMismatch("input space does not match the GP design");
  const PfDesign pf = algorithm3_design(space, u, cfg);
  const Eigen::MatrixXd query = stacked_locations(pf, cfg.totals);
  const Seed seed = trajectory_seed(u, cfg);
  SamplingOptions opts = cfg.sampling;
  opts.threads = cfg.threads;

  if (opts.mode == SamplingMode::Batch) {
    TrajectoryBatch batch = sample_trajectories(vgp, query, cfg.n_z, seed, opts);
    count_sampling(counter, cfg.n_z, 1, batch.factorizations);
    return run_algorithm3(batch.draws, basis, u, cfg, counter);
  }

  // one trajectory at a time: only `threads` trajectories are held in memory
  const BasisDerived estimator(basis, u, cfg, cfg.totals);
  IndexDistribution dist = allocate(u, cfg, basis.output_dims(), cfg.totals);
  opts.threads = 1;
  parallel_for(cfg.n_z, cfg.threads, [&](int j) {
    try {
      const Eigen::MatrixXd draw = sample_trajectory(vgp, query, j, seed, opts);
      count_sampling(counter, 1, 1, vgp.size());
      estimator.run(draw, j, dist, counter);
    } catch (...) {
      annotate(j, std::current_exception());
    }
  });
  return dist;
}

namespace {

struct ScalarSums {
  double index_num;  // D_u
  double index_den;  // D
  double mean;
};

// Janon-Monod sums over (optionally resampled) scalar outputs.
template <class Index>
ScalarSums scalar_sums(const double* y, const double* ys, int n, Index idx) {
  double s = 0.0, sp = 0.0, sq = 0.0;
  for (int k = 0; k < n; ++k) {
    const double a = y[idx(k)];
    const double c = ys[idx(k)];
    s += a + c;
    sp += a * c;
    sq += a * a + c * c;
  }
  const double f0 = 0.5 * s / n;
  return {sp / n - f0 * f0, 0.5 * sq / n - f0 * f0, f0};
}

template <class Index>
double jansen_sum(const double* y, const double* yt, int n, Index idx) {
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double dlt = y[idx(k)] - yt[idx(k)];
    acc += dlt * dlt;
  }
  return acc / (2.0 * n);
}

}  // namespace

IndexDistribution run_algorithm2_dimensionwise(const std::vector<Eigen::MatrixXd>& draws, const BasisExpansion& basis,
                                               const IndexSet& u, const RunConfig& cfg, OpCounter* counter) {
  const bool totals = check_draws(draws, basis, cfg);
  const int n = cfg.n_pf;
  const int p = basis.size();
  const int m = basis.output_dims();
  const int n_x = cfg.n_x;
  const Eigen::MatrixXd& v = basis.components();
  const bool fixed = cfg.covariance == CovarianceMode::Fixed;

  Eigen::VectorXd fixed_den;
  if (fixed) {
    const Eigen::MatrixXd c = coefficient_covariance(basis.coefficients());
    fixed_den = (c * v).cwiseProduct(v).colwise().sum().transpose();
  }

  IndexDistribution dist = allocate(u, cfg, m, totals);
  const int kinds = static_cast<int>(dist.estimates.size());
  parallel_for(cfg.n_z, cfg.threads, [&](int j) {
    try {
      const Eigen::MatrixXd& all = draws[j];
      const int rows = totals ? 3 * n : 2 * n;
      IndexMatrix boot = n_x > 1 ? bootstrap_indices(n, n_x, bootstrap_seed(u, cfg, j)) : IndexMatrix();
      Eigen::VectorXd yl(rows);
      // per replicate: numerator and denominator sums over l, and the f0 floor sums
      Eigen::MatrixXd num_sum = Eigen::MatrixXd::Zero(n_x, kinds), den_sum = Eigen::MatrixXd::Zero(n_x, kinds);
      Eigen::MatrixXd f0_sum = Eigen::MatrixXd::Zero(n_x, kinds);
      std::uint64_t flops = 0;

      for (int l = 0; l < m; ++l) {
        yl.noalias() = all.topRows(rows) * v.col(l);
        flops += 2ull * p * rows;
        const double* y = yl.data();
        const double* ys = y + n;
        const double* yt = y + 2 * n;
        for (int b = 0; b < n_x; ++b) {
          const int col = IndexDistribution::column(j, b, n_x);
          auto compute = [&](auto idx) {
            const ScalarSums c = scalar_sums(y, ys, n, idx);
            flops += 8ull * n;
            const double den = fixed ? fixed_den(l) : c.index_den;
            const double floor = fixed ? variance_floor(0.0) : variance_floor(c.mean * c.mean);
            IndexEstimates& ec = dist.estimates[0];
            ec.maps(l, col) = ratio_or_nan(c.index_num, den, floor);
            if (ec.numerators.size()) {
              ec.numerators(l, col) = c.index_num;
              ec.denominators(l, col) = den;
            }
            num_sum(b, 0) += c.index_num;
            den_sum(b, 0) += den;
            f0_sum(b, 0) += c.mean * c.mean;
            if (!totals) return;

            const double t = jansen_sum(y, yt, n, idx);
            flops += 3ull * n;
            IndexEstimates& et = dist.estimates[1];
            et.maps(l, col) = ratio_or_nan(t, den, floor);
            if (et.numerators.size()) {
              et.numerators(l, col) = t;
              et.denominators(l, col) = den;
            }
            num_sum(b, 1) += t;
            den_sum(b, 1) += den;
            f0_sum(b, 1) += c.mean * c.mean;

            const ScalarSums cc = scalar_sums(y, yt, n, idx);
            flops += 8ull * n;
            const double cden = fixed ? fixed_den(l) : cc.index_den;
            const double cfloor = fixed ? variance_floor(0.0) : variance_floor(cc.mean * cc.mean);
            IndexEstimates& ep = dist.estimates[2];
            ep.maps(l, col) = plug_in_total(ratio_or_nan(cc.index_num, cden, cfloor));
            if (ep.numerators.size()) {
              ep.numerators(l, col) = cc.index_num;
              ep.denominators(l, col) = cden;
            }
            num_sum(b, 2) += cc.index_num;
            den_sum(b, 2) += cden;
            f0_sum(b, 2) += cc.mean * cc.mean;
          };
          if (b == 0) {
            compute([](int k) { return k; });
          } else {
            const int* row = boot.row(b - 1).data();
            compute([row](int k) { return row[k]; });
          }
        }
      }
      for (int b = 0; b < n_x; ++b)
        for (int k = 0; k < kinds; ++k) {
          const double floor = fixed ? variance_floor(0.0) : variance_floor(f0_sum(b, k));
          const double r = ratio_or_nan(num_sum(b, k), den_sum(b, k), floor);
          dist.estimates[k].gsi(j, b) = dist.estimates[k].kind == IndexKind::PluginTotal ? plug_in_total(r) : r;
        }
      add(counter, flops);
    } catch (...) {
      annotate(j, std::current_exception());
    }
  });
  return dist;
}

IndexDistribution run_algorithm2_dimensionwise(const VectorGp& vgp, const BasisExpansion& basis,
                                               const InputSpace& space, const IndexSet& u, const RunConfig& cfg,
                                               OpCounter* counter) {
  cfg.validate();
  if (vgp.size() != basis.size()) throw DimensionMismatch("vector GP and basis differ in size");
  const PfDesign pf = algorithm3_design(space, u, cfg);
  SamplingOptions opts = cfg.sampling;
  opts.threads = cfg.threads;
  TrajectoryBatch batch = sample_trajectories(vgp, stacked_locations(pf, cfg.totals), cfg.n_z, trajectory_seed(u, cfg), opts);
  count_sampling(counter, cfg.n_z, 1, batch.factorizations);
  return run_algorithm2_dimensionwise(batch.draws, basis, u, cfg, counter);
}

IndexDistribution run_algorithm1_crude(const VectorGp& vgp, const BasisExpansion& basis, const InputSpace& space,
                                       const IndexSet& u, const RunConfig& cfg, OpCounter* counter) {
  cfg.validate();
  if (vgp.size() != basis.size()) throw DimensionMismatch("vector GP and basis differ in size");
  RunConfig single = cfg;
  single.n_x = 1;
  SamplingOptions opts = cfg.sampling;
  opts.threads = cfg.threads;

  IndexDistribution dist = allocate(u, cfg, basis.output_dims(), cfg.totals);
  for (int b = 0; b < cfg.n_x; ++b) {
    const PfDesign pf = b == 0 ? algorithm3_design(space, u, cfg)
                               : make_pf_design(space, cfg.n_pf, u,
                                                derive_seed(cfg.seed, {stream::kCrudeDesign, u.key(),
                                                                       static_cast<std::uint64_t>(b)}));
    const Seed seed = b == 0 ? trajectory_seed(u, cfg)
                             : derive_seed(cfg.seed, {stream::kCrudeDesign, u.key(), static_cast<std::uint64_t>(b),
                                                      stream::kTrajectory});
    TrajectoryBatch batch = sample_trajectories(vgp, stacked_locations(pf, cfg.totals), cfg.n_z, seed, opts);
    count_sampling(counter, cfg.n_z, 1, batch.factorizations);
    IndexDistribution part = run_algorithm3(batch.draws, basis, u, single, counter);
    for (std::size_t k = 0; k < dist.estimates.size(); ++k) {
      IndexEstimates& dst = dist.estimates[k];
      const IndexEstimates& src = part.estimates[k];
      for (int j = 0; j < cfg.n_z; ++j) {
        const int col = IndexDistribution::column(j, b, cfg.n_x);
        dst.maps.col(col) = src.maps.col(j);
        dst.gsi(j, b) = src.gsi(j, 0);
        if (dst.numerators.size()) {
          dst.numerators.col(col) = src.numerators.col(j);
          dst.denominators.col(col) = src.denominators.col(j);
        }
      }
    }
  }
  return dist;
}

const char* to_string(Scope scope) { return scope == Scope::MetamodelOnly ? "metamodel" : "overall"; }

double percentile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DegenerateData("percentile of an empty sample");
  if (!(q >= 0.0 && q <= 100.0)) throw InvalidArgument("percentile must be in [0, 100]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

BoxplotSummary summarize_values(const std::vector<double>& values) {
  std::vector<double> s;
  s.reserve(values.size());
  for (double x : values)
    if (!std::isnan(x)) s.push_back(x);
  BoxplotSummary out;
  out.missing = static_cast<int>(values.size() - s.size());
  if (s.empty()) throw DegenerateData("every value in the slice is missing");
  std::sort(s.begin(), s.end());
  out.count = static_cast<int>(s.size());
  out.median = percentile_sorted(s, 50.0);
  out.q1 = percentile_sorted(s, 25.0);
  out.q3 = percentile_sorted(s, 75.0);
  out.p5 = percentile_sorted(s, 5.0);
  out.p95 = percentile_sorted(s, 95.0);
  const double lo = out.q1 - 1.5 * out.iqr();
  const double hi = out.q3 + 1.5 * out.iqr();
  out.whisker_low = *std::lower_bound(s.begin(), s.end(), lo);
  out.whisker_high = *(std::upper_bound(s.begin(), s.end(), hi) - 1);
  out.outliers = static_cast<int>(std::count_if(s.begin(), s.end(), [&](double x) { return x < lo || x > hi; }));
  return out;
}

DistributionSummary summarize(const IndexEstimates& est, int n_x, Scope scope) {
  if (n_x < 1 || est.maps.cols() % n_x != 0 || est.gsi.cols() != n_x)
    throw DimensionMismatch("estimate layout does not match n_x");
  const Eigen::Index n_z = est.gsi.rows();
  const int per_traj = scope == Scope::MetamodelOnly ? 1 : n_x;
  DistributionSummary out;
  std::vector<double> buf;
  buf.reserve(static_cast<std::size_t>(n_z) * per_traj);
  out.maps.reserve(est.maps.rows());
  for (Eigen::Index l = 0; l < est.maps.rows(); ++l) {
    buf.clear();
    for (Eigen::Index j = 0; j < n_z; ++j)
      for (int b = 0; b < per_traj; ++b) buf.push_back(est.maps(l, j * n_x + b));
    BoxplotSummary s;
    try {
      s = summarize_values(buf);
    } catch (const DegenerateData&) {
      s.median = s.q1 = s.q3 = s.whisker_low = s.whisker_high = s.p5 = s.p95 = kNaN;
      s.missing = static_cast<int>(buf.size());
    }
    out.maps.push_back(s);
  }
  buf.clear();
  for (Eigen::Index j = 0; j < n_z; ++j)
    for (int b = 0; b < per_traj; ++b) buf.push_back(est.gsi(j, b));
  out.gsi = summarize_values(buf);
  return out;
}

Attribution error_attribution(const BoxplotSummary& metamodel, const BoxplotSummary& overall, double eps) {
  Attribution a;
  const double w_overall = overall.iqr();
  const double w_meta = metamodel.iqr();
  if (!(w_overall > eps) || std::isnan(w_meta)) {
    a.metamodel_share = a.estimation_share = kNaN;
    return a;
  }
  a.estimation_share = std::max(w_overall - w_meta, 0.0) / w_overall;
  a.metamodel_share = 1.0 - a.estimation_share;
  a.defined = true;
  return a;
}

std::vector<Attribution> error_attribution(const std::vector<BoxplotSummary>& metamodel,
                                           const std::vector<BoxplotSummary>& overall, double eps) {
  if (metamodel.size() != overall.size()) throw DimensionMismatch("summary lists differ in length");
  std::vector<Attribution> out;
  out.reserve(metamodel.size());
  for (std::size_t l = 0; l < metamodel.size(); ++l) out.push_back(error_attribution(metamodel[l], overall[l], eps));
  return out;
}

CostPrediction predicted_costs(int p, int n_pf, int m) {
  if (p < 1 || n_pf < 1 || m < 1) throw InvalidArgument("cost model needs positive p, n_pf and m");
  const auto P = static_cast<std::uint64_t>(p);
  const auto N = static_cast<std::uint64_t>(n_pf);
  const auto M = static_cast<std::uint64_t>(m);
  CostPrediction c;
  c.cost_dw = 4 * (P + 2) * N * M;
  c.cost_bd = 2 * P * (3 * P + 1) * N + 3 * P * (P + 1) * M;
  const double a = 2.0 * n_pf;
  const double harmonic = 2.0 * a * m / (a + m);
  c.lower_bound_ratio = harmonic / (3.0 * p);
  return c;
}

}  // namespace fgsa
