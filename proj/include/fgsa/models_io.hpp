#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fgsa/random.hpp"

namespace fgsa {

struct VariableBounds {
  double lower = 0.0;
  double upper = 1.0;
  double width() const { return upper - lower; }
};

/// Independent uniform input variables on a box.
class InputSpace {
 public:
  explicit InputSpace(std::vector<VariableBounds> bounds, std::vector<std::string> names = {});

  static InputSpace unit_cube(int dims);

  int dims() const { return static_cast<int>(bounds_.size()); }
  const VariableBounds& bounds(int i) const { return bounds_.at(i); }
  const std::vector<VariableBounds>& all_bounds() const { return bounds_; }
  const std::string& name(int i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  /// Index of a variable by name, or -1.
  int find(const std::string& name) const;

  /// True when every entry of `points` (rows = points) lies in the box.
  bool contains(const Eigen::MatrixXd& points) const;

  /// Maps unit-cube coordinates to the box, column by column.
  Eigen::MatrixXd from_unit(const Eigen::MatrixXd& unit) const;

 private:
  std::vector<VariableBounds> bounds_;
  std::vector<std::string> names_;
};

/// n×d matrix of input points, one row per point.
class DesignMatrix {
 public:
  DesignMatrix(Eigen::MatrixXd points, InputSpace space);

  const Eigen::MatrixXd& points() const { return points_; }
  const InputSpace& space() const { return space_; }
  int rows() const { return static_cast<int>(points_.rows()); }
  int dims() const { return static_cast<int>(points_.cols()); }

  /// First `n` rows, used for nested DoE subsets.
  DesignMatrix head(int n) const;
  DesignMatrix select(const std::vector<int>& rows) const;

 private:
  Eigen::MatrixXd points_;
  InputSpace space_;
};

/// n×m output matrix; row i is the output vector at design point i.
struct FunctionalOutputs {
  Eigen::MatrixXd values;
  std::vector<double> grid;  // optional output coordinates, size m when present

  int rows() const { return static_cast<int>(values.rows()); }
  int dims() const { return static_cast<int>(values.cols()); }
  FunctionalOutputs head(int n) const;
  FunctionalOutputs select(const std::vector<int>& rows) const;
};

/// Plain Latin hypercube: each column visits every one of the n equiprobable
/// strata once, in random order, with a uniform position inside the stratum.
DesignMatrix lhs_sample(const InputSpace& space, int n, Seed seed);

/// i.i.d. uniform points.
DesignMatrix mc_sample(const InputSpace& space, int n, Seed seed);

/// Row-wise concatenation; both designs must share the same dimension.
DesignMatrix concatenate(const DesignMatrix& a, const DesignMatrix& b);

/// Built-in analytical functional models and a table hook for external data.
class TestModel {
 public:
  enum class Kind { AdditiveSine, Interaction, ExternalTable };

  /// y_l(x) = cos(t_l) x1 + sin(t_l) x2 with t_l uniform on [0, 2pi], inputs U(0,1)^2.
  static TestModel additive_sine(int output_dims);
  /// additive_sine plus coefficient * x1 * x2.
  static TestModel interaction(int output_dims, double coefficient);
  /// Stored outputs, returned row by row for a design with the same row count.
  static TestModel external_table(const std::filesystem::path& outputs_csv, int dims);

  Kind kind() const { return kind_; }
  int dims() const { return dims_; }
  int output_dims() const { return static_cast<int>(grid_.size()); }
  const std::vector<double>& grid() const { return grid_; }
  double coefficient() const { return coefficient_; }

  /// Input space the model is defined on (unit square for the analytic models).
  InputSpace default_space() const;

  FunctionalOutputs evaluate(const Eigen::MatrixXd& points) const;
  FunctionalOutputs evaluate(const DesignMatrix& design) const { return evaluate(design.points()); }

 private:
  TestModel(Kind kind, int dims, std::vector<double> grid, double coefficient);

  Kind kind_;
  int dims_;
  std::vector<double> grid_;
  double coefficient_ = 0.0;
  Eigen::MatrixXd table_;
};

/// Uniform grid of `m` points on [0, 2pi], endpoints included.
std::vector<double> angle_grid(int m);

// CSV exchange. Numbers are written in shortest round-trip form so a
// write/read cycle is bit-exact.

/// Optional first line "# g1,g2,..." carries grid coordinates.
void write_outputs(const FunctionalOutputs& outputs, const std::filesystem::path& path);
FunctionalOutputs read_outputs(const std::filesystem::path& path,
                               std::optional<int> expected_rows = std::nullopt);

/// Header line holds the variable names.
void write_design(const DesignMatrix& design, const std::filesystem::path& path);
DesignMatrix read_design(const std::filesystem::path& path, const InputSpace& space);

/// Shortest round-trip text form of a double ("nan" for missing values).
std::string format_number(double v);

/// Generic numeric matrix CSV without header (used for persisted bases).
void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);

}  // namespace fgsa
