#include <algorithm>
#include <numeric>

#include <doctest.h>

#include "fgsa/error.hpp"
#include "fgsa/errquant.hpp"
#include "fgsa/pipeline.hpp"
#include "oracles.hpp"

using namespace fgsa;

namespace {

struct Synthetic {
  BasisExpansion basis;
  std::vector<Eigen::MatrixXd> draws;
};

// Random non-orthonormal basis and coefficient trajectories at 2n or 3n rows;
// the x_star block shares a component with x_hat so indices are non-trivial.
Synthetic synthetic(int p, int m, int n, int n_z, bool totals, unsigned seed) {
  Synthetic s{BasisExpansion(oracle::gaussian(m, 1, seed).col(0), oracle::gaussian(p, m, seed + 1),
                             oracle::gaussian(30, p, seed + 2)),
              {}};
  for (int j = 0; j < n_z; ++j) {
    const Eigen::MatrixXd shared = oracle::gaussian(n, p, seed + 10 * j + 3);
    Eigen::MatrixXd d(totals ? 3 * n : 2 * n, p);
    d.topRows(n) = shared + 0.3 * oracle::gaussian(n, p, seed + 10 * j + 4);
    d.middleRows(n, n) = shared + 0.3 * oracle::gaussian(n, p, seed + 10 * j + 5);
    if (totals) d.bottomRows(n) = 0.5 * shared + oracle::gaussian(n, p, seed + 10 * j + 6);
    s.draws.push_back(d);
  }
  return s;
}

RunConfig config(int n_pf, int n_z, int n_x, bool totals) {
  RunConfig c;
  c.n_pf = n_pf;
  c.n_z = n_z;
  c.n_x = n_x;
  c.totals = totals;
  c.seed = 99;
  return c;
}

double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data()[i], y = b.data()[i];
    if (std::isnan(x) || std::isnan(y)) {
      if (std::isnan(x) != std::isnan(y)) return INFINITY;
      continue;
    }
    worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(y)));
  }
  return worst;
}

Surrogate additive_surrogate(int n_doe, int m, Seed seed) {
  PipelineConfig cfg;
  cfg.data.output_dims = m;
  cfg.data.doe_size = n_doe;
  cfg.run.seed = seed;
  cfg.gp.starts = 4;
  return fit_surrogate(cfg, prepare_data(cfg));
}

}  // namespace

TEST_CASE("single trajectory and replicate reduce to a direct estimate") {
  const Synthetic s = synthetic(3, 9, 100, 1, false, 1);
  const RunConfig cfg = config(100, 1, 1, false);
  const IndexDistribution dist = run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), cfg);
  const Eigen::MatrixXd& all = s.draws[0];
  const SobolMatrixEstimate est = vector_closed_pf({all.topRows(100), all.bottomRows(100)});
  const SensitivityMap map = reproject_map(est.closed, est.cov, s.basis.components(), est.mean);
  CHECK(max_rel_diff(dist.get(IndexKind::Closed).maps.col(0), map.values) <= 1e-12);
  CHECK(oracle::close(dist.get(IndexKind::Closed).gsi(0, 0),
                      gsi(est.closed, est.cov, s.basis.gram(), IndexKind::Closed).value, 1e-12));
}

TEST_CASE("replicate zero never uses bootstrap indices") {
  const Synthetic s = synthetic(2, 5, 60, 3, false, 2);
  const auto a = run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), config(60, 3, 1, false));
  const auto b = run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), config(60, 3, 6, false));
  for (int j = 0; j < 3; ++j) {
    CHECK(a.get(IndexKind::Closed).maps.col(j) == b.get(IndexKind::Closed).maps.col(IndexDistribution::column(j, 0, 6)));
    CHECK(a.get(IndexKind::Closed).gsi(j, 0) == b.get(IndexKind::Closed).gsi(j, 0));
  }
}

TEST_CASE("basis-derived and dimension-wise estimates agree") {
  const Synthetic s = synthetic(4, 50, 500, 3, true, 3);
  const RunConfig cfg = config(500, 3, 4, true);
  const IndexSet u = IndexSet::single(1, 3);
  const IndexDistribution bd = run_algorithm3(s.draws, s.basis, u, cfg);
  const IndexDistribution dw = run_algorithm2_dimensionwise(s.draws, s.basis, u, cfg);
  for (IndexKind kind : {IndexKind::Closed, IndexKind::Total, IndexKind::PluginTotal}) {
    CHECK(max_rel_diff(bd.get(kind).maps, dw.get(kind).maps) <= 1e-10);
    CHECK(max_rel_diff(bd.get(kind).gsi, dw.get(kind).gsi) <= 1e-10);
  }
}

TEST_CASE("dimension-wise with one output is the scalar estimator") {
  const Synthetic s = synthetic(1, 1, 80, 2, false, 4);
  const RunConfig cfg = config(80, 2, 1, false);
  const auto dw = run_algorithm2_dimensionwise(s.draws, s.basis, IndexSet::single(0, 2), cfg);
  for (int j = 0; j < 2; ++j) {
    const Eigen::VectorXd f = s.draws[j].topRows(80) * s.basis.components()(0, 0);
    const Eigen::VectorXd fs = s.draws[j].bottomRows(80) * s.basis.components()(0, 0);
    const oracle::Scalar o = oracle::janon_monod(f, fs);
    CHECK(oracle::close(dw.get(IndexKind::Closed).gsi(j, 0), o.closed / o.variance));
  }
}

TEST_CASE("degenerate replicates become missing values") {
  Synthetic s = synthetic(2, 4, 30, 2, false, 5);
  s.draws[1].setConstant(0.5);
  const auto dist = run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), config(30, 2, 3, false));
  const IndexEstimates& e = dist.get(IndexKind::Closed);
  CHECK(std::isnan(e.gsi(1, 0)));
  CHECK(std::isnan(e.maps(0, IndexDistribution::column(1, 2, 3))));
  CHECK(!std::isnan(e.gsi(0, 0)));
  const DistributionSummary sum = summarize(e, 3, Scope::Overall);
  CHECK(sum.gsi.missing == 3);
  CHECK(sum.gsi.count == 3);
}

TEST_CASE("wrong trajectory shapes are rejected") {
  const Synthetic s = synthetic(2, 4, 30, 2, false, 6);
  CHECK_THROWS_AS(run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), config(31, 2, 1, false)),
                  DimensionMismatch);
  CHECK_THROWS_AS(run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), config(30, 2, 1, true)),
                  DimensionMismatch);
  CHECK_THROWS_AS(run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), config(30, 3, 1, false)),
                  DimensionMismatch);
}

TEST_CASE("runs are deterministic across sampling modes and thread counts") {
  const Surrogate sur = additive_surrogate(30, 20, 1);
  const InputSpace space = InputSpace::unit_cube(2);
  const IndexSet u = IndexSet::single(0, 2);
  RunConfig base = config(200, 6, 4, true);
  const auto ref = run_algorithm3(sur.vgp, sur.basis, space, u, base);
  RunConfig per = base;
  per.sampling.mode = SamplingMode::PerTrajectory;
  RunConfig threaded = base;
  threaded.threads = 3;
  for (const RunConfig& c : {base, per, threaded}) {
    const auto d = run_algorithm3(sur.vgp, sur.basis, space, u, c);
    for (std::size_t k = 0; k < ref.estimates.size(); ++k) {
      CHECK(max_rel_diff(d.estimates[k].maps, ref.estimates[k].maps) == 0.0);
      CHECK(max_rel_diff(d.estimates[k].gsi, ref.estimates[k].gsi) == 0.0);
    }
  }
  const auto dw = run_algorithm2_dimensionwise(sur.vgp, sur.basis, space, u, base);
  CHECK(max_rel_diff(dw.get(IndexKind::Closed).maps, ref.get(IndexKind::Closed).maps) <= 1e-10);
}

TEST_CASE("crude sampler draws fresh trajectories for every replicate") {
  const Surrogate sur = additive_surrogate(30, 20, 2);
  const InputSpace space = InputSpace::unit_cube(2);
  const IndexSet u = IndexSet::single(1, 2);
  const auto a3 = run_algorithm3(sur.vgp, sur.basis, space, u, config(150, 1, 1, false));
  const auto c1 = run_algorithm1_crude(sur.vgp, sur.basis, space, u, config(150, 1, 1, false));
  CHECK(a3.get(IndexKind::Closed).maps == c1.get(IndexKind::Closed).maps);
  OpCounter counter;
  run_algorithm1_crude(sur.vgp, sur.basis, space, u, config(150, 4, 3, false), &counter);
  CHECK(counter.sampler_calls == 3);
  CHECK(counter.trajectory_draws == 12);
}

TEST_CASE("crude and bootstrap samplers target the same gsi law") {
  const Surrogate sur = additive_surrogate(60, 30, 3);
  const InputSpace space = InputSpace::unit_cube(2);
  const IndexSet u = IndexSet::single(0, 2);
  const RunConfig cfg = config(2000, 20, 20, false);
  const auto a3 = run_algorithm3(sur.vgp, sur.basis, space, u, cfg);
  const auto a1 = run_algorithm1_crude(sur.vgp, sur.basis, space, u, cfg);
  CHECK(std::abs(a3.get(IndexKind::Closed).gsi.mean() - a1.get(IndexKind::Closed).gsi.mean()) <= 0.05);
}

TEST_CASE("median maps recover the analytic first-order indices") {
  const Surrogate sur = additive_surrogate(200, 50, 4);
  const auto dist = run_algorithm3(sur.vgp, sur.basis, InputSpace::unit_cube(2), IndexSet::single(0, 2),
                                   config(10000, 10, 5, false));
  const DistributionSummary s = summarize(dist.get(IndexKind::Closed), 5, Scope::Overall);
  const std::vector<double> grid = angle_grid(50);
  for (int l = 0; l < 50; ++l) CHECK(std::abs(s.maps[l].median - std::pow(std::cos(grid[l]), 2)) <= 0.05);
}

TEST_CASE("fixed covariance mode uses the DoE coefficient covariance") {
  const Synthetic s = synthetic(3, 8, 200, 2, false, 7);
  RunConfig cfg = config(200, 2, 2, false);
  cfg.covariance = CovarianceMode::Fixed;
  const auto dist = run_algorithm3(s.draws, s.basis, IndexSet::single(0, 2), cfg);
  const Eigen::MatrixXd fixed = coefficient_covariance(s.basis.coefficients());
  const Eigen::MatrixXd& all = s.draws[0];
  const SobolMatrixEstimate est = vector_closed_pf({all.topRows(200), all.bottomRows(200)});
  CHECK(oracle::close(dist.get(IndexKind::Closed).gsi(0, 0),
                      gsi_fixed_covariance(est.closed, s.basis.gram(), fixed, IndexKind::Closed).value, 1e-12));
}

TEST_CASE("boxplot summaries") {
  const BoxplotSummary c = summarize_values(std::vector<double>(9, 2.5));
  CHECK(c.median == 2.5);
  CHECK(c.q1 == 2.5);
  CHECK(c.q3 == 2.5);
  CHECK(c.whisker_low == 2.5);
  CHECK(c.whisker_high == 2.5);
  CHECK(c.outliers == 0);

  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  const BoxplotSummary s = summarize_values(v);
  CHECK(s.median == doctest::Approx(50.5));
  CHECK(s.q1 == doctest::Approx(25.75));
  CHECK(s.q3 == doctest::Approx(75.25));
  CHECK(s.p5 == doctest::Approx(5.95));
  CHECK(s.p95 == doctest::Approx(95.05));
  CHECK(s.whisker_low == 1.0);
  CHECK(s.whisker_high == 100.0);

  v.push_back(1000.0);
  v.push_back(NAN);
  const BoxplotSummary o = summarize_values(v);
  CHECK(o.outliers == 1);
  CHECK(o.missing == 1);
  CHECK(o.whisker_high == 100.0);
  CHECK_THROWS_AS(summarize_values({NAN, NAN}), DegenerateData);
}

TEST_CASE("error attribution") {
  BoxplotSummary meta, overall;
  meta.q1 = 0.4;
  meta.q3 = 0.6;
  const Attribution same = error_attribution(meta, meta);
  CHECK(same.defined);
  CHECK(same.metamodel_share == 1.0);
  CHECK(same.estimation_share == 0.0);
  BoxplotSummary perfect;
  perfect.q1 = perfect.q3 = 0.5;
  overall.q1 = 0.3;
  overall.q3 = 0.7;
  CHECK(error_attribution(perfect, overall).estimation_share == 1.0);
  CHECK(error_attribution(meta, overall).estimation_share == doctest::Approx(0.5));
  CHECK_FALSE(error_attribution(perfect, perfect).defined);
}

TEST_CASE("cost model") {
  const CostPrediction c = predicted_costs(10, 5000, 4096);
  CHECK(c.cost_dw == 983040000ULL);
  CHECK(c.cost_bd == 4451680ULL);
  CHECK(c.ratio() == doctest::Approx(220.8).epsilon(1e-3));
  const double h = 2.0 * (2.0 * 5000) * 4096 / (2.0 * 5000 + 4096);
  CHECK(c.lower_bound_ratio == doctest::Approx(h / 30.0));
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 20000)(rng);
    const int m = std::uniform_int_distribution<int>(1, 20000)(rng);
    const int p = std::uniform_int_distribution<int>(1, std::min(n, m))(rng);
    const CostPrediction r = predicted_costs(p, n, m);
    CHECK(r.ratio() >= r.lower_bound_ratio);
  }
}

TEST_CASE("metamodel-only spread shrinks as the DoE grows") {
  std::vector<double> small, large;
  for (Seed seed = 1; seed <= 5; ++seed)
    for (int n : {20, 200}) {
      const Surrogate sur = additive_surrogate(n, 20, seed);
      RunConfig cfg = config(500, 30, 2, false);
      cfg.seed = seed;
      const auto dist = run_algorithm3(sur.vgp, sur.basis, InputSpace::unit_cube(2), IndexSet::single(0, 2), cfg);
      const double w = summarize(dist.get(IndexKind::Closed), 2, Scope::MetamodelOnly).gsi.iqr();
      (n == 20 ? small : large).push_back(w);
    }
  std::sort(small.begin(), small.end());
  std::sort(large.begin(), large.end());
  CHECK(large[2] < small[2]);
}

TEST_CASE("estimation share falls as the PF sample grows") {
  const Surrogate sur = additive_surrogate(200, 30, 6);
  std::vector<double> sizes, shares;
  for (int n_pf : {1000, 3000, 5000, 11000}) {
    const auto dist = run_algorithm3(sur.vgp, sur.basis, InputSpace::unit_cube(2), IndexSet::single(0, 2),
                                     config(n_pf, 20, 20, false));
    const IndexEstimates& e = dist.get(IndexKind::Closed);
    const Attribution a =
        error_attribution(summarize(e, 20, Scope::MetamodelOnly).gsi, summarize(e, 20, Scope::Overall).gsi);
    sizes.push_back(n_pf);
    shares.push_back(a.estimation_share);
  }
  CHECK(spearman(sizes, shares) < 0.0);
}
