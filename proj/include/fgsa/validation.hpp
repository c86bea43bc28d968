#pragma once

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "fgsa/basis.hpp"
#include "fgsa/gp.hpp"

namespace fgsa {

/// Nash-Sutcliffe efficiency 1 - SSE/SST. Throws DegenerateVariance when
/// `observed` is constant.
double q2(const Eigen::Ref<const Eigen::VectorXd>& predicted, const Eigen::Ref<const Eigen::VectorXd>& observed);

struct Q2Report {
  Eigen::MatrixXd values;  // n_z × m, NaN where the observed dimension is constant
  Eigen::VectorXd p5;
  Eigen::VectorXd p50;
  Eigen::VectorXd p95;
};

/// Q2 of reconstructed trajectory predictions against observed outputs, per
/// trajectory and output dimension.
Q2Report q2_trajectory_report(const VectorGp& vgp, const BasisExpansion& basis, const DesignMatrix& validation,
                              const FunctionalOutputs& observed, int n_z, Seed seed,
                              const SamplingOptions& options = {});

/// Columns: dimension, [grid], p5, p50, p95.
void write_q2_report(const Q2Report& report, const std::filesystem::path& path, const std::vector<double>& grid = {});

}  // namespace fgsa
