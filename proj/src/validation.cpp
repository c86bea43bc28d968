#include "fgsa/validation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fgsa/errquant.hpp"
#include "fgsa/error.hpp"

namespace fgsa {

double q2(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed) {
  if (predicted.size() != observed.size()) throw DimensionMismatch("predicted and observed differ in length");
  if (observed.size() < 2) throw InvalidArgument("Q2 needs at least 2 validation points");
  const double sst = (observed.array() - observed.mean()).square().sum();
  if (!(sst > 1e-300)) throw DegenerateVariance("observed values are constant; Q2 is undefined");
  return 1.0 - (observed - predicted).squaredNorm() / sst;
}

Q2Report q2_trajectory_report(const VectorGp& vgp, const BasisExpansion& basis, const DesignMatrix& validation,
                              const FunctionalOutputs& observed, int n_z, Seed seed, const SamplingOptions& options) {
  if (observed.rows() != validation.rows())
    throw DimensionMismatch("validation design has " + std::to_string(validation.rows()) + " rows, outputs have " +
                            std::to_string(observed.rows()));
  if (observed.dims() != basis.output_dims()) throw DimensionMismatch("validation outputs do not match the basis");
  if (vgp.size() != basis.size()) throw DimensionMismatch("vector GP and basis differ in size");

  const TrajectoryBatch batch = sample_trajectories(vgp, validation.points(), n_z, seed, options);
  const int m = observed.dims();
  Q2Report r;
  r.values.resize(n_z, m);
  std::vector<bool> constant(m);
  for (int l = 0; l < m; ++l) {
    const auto col = observed.values.col(l);
    constant[l] = !((col.array() - col.mean()).square().sum() > 1e-300);
  }
  for (int j = 0; j < n_z; ++j) {
    const Eigen::MatrixXd pred = basis.reconstruct(batch.draws[j]);
    for (int l = 0; l < m; ++l)
      r.values(j, l) = constant[l] ? std::numeric_limits<double>::quiet_NaN() : q2(pred.col(l), observed.values.col(l));
  }
  r.p5.resize(m);
  r.p50.resize(m);
  r.p95.resize(m);
  std::vector<double> s;
  for (int l = 0; l < m; ++l) {
    s.clear();
    for (int j = 0; j < n_z; ++j)
      if (!std::isnan(r.values(j, l))) s.push_back(r.values(j, l));
    if (s.empty()) {
      r.p5(l) = r.p50(l) = r.p95(l) = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    std::sort(s.begin(), s.end());
    r.p5(l) = percentile_sorted(s, 5.0);
    r.p50(l) = percentile_sorted(s, 50.0);
    r.p95(l) = percentile_sorted(s, 95.0);
  }
  return r;
}

void write_q2_report(const Q2Report& report, const std::filesystem::path& path, const std::vector<double>& grid) {
  const auto m = report.p50.size();
  const bool with_grid = grid.size() == static_cast<std::size_t>(m);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << (with_grid ? "dimension,grid,p5,p50,p95\n" : "dimension,p5,p50,p95\n");
  for (Eigen::Index l = 0; l < m; ++l) {
    out << l << ',';
    if (with_grid) out << format_number(grid[l]) << ',';
    out << format_number(report.p5(l)) << ',' << format_number(report.p50(l)) << ',' << format_number(report.p95(l))
        << '\n';
  }
}

}  // namespace fgsa
