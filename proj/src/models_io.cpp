#include "fgsa/models_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "fgsa/error.hpp"

namespace fgsa {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return res.ec == std::errc() && res.ptr == cell.data() + cell.size();
}

std::vector<double> parse_row(std::string_view line, const std::filesystem::path& path, int line_no) {
  std::vector<double> row;
  for (auto cell : split_cells(line)) {
    double v;
    if (!parse_double(cell, v))
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
    if (!std::isfinite(v))
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": non-finite value");
    row.push_back(v);
  }
  return row;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_row(std::ostream& out, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) out << ',';
    out << format_number(row(j));
  }
  out << '\n';
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

InputSpace::InputSpace(std::vector<VariableBounds> bounds, std::vector<std::string> names)
    : bounds_(std::move(bounds)), names_(std::move(names)) {
  if (bounds_.empty()) throw InvalidArgument("input space needs at least one variable");
  for (std::size_t i = 0; i < bounds_.size(); ++i) {
    const auto& b = bounds_[i];
    if (!(std::isfinite(b.lower) && std::isfinite(b.upper) && b.lower < b.upper))
      throw InvalidArgument("variable " + std::to_string(i + 1) + ": lower bound must be below upper bound");
  }
  if (names_.empty()) {
    for (std::size_t i = 0; i < bounds_.size(); ++i) names_.push_back("x" + std::to_string(i + 1));
  } else if (names_.size() != bounds_.size()) {
    throw InvalidArgument("variable names and bounds differ in count");
  }
}

InputSpace InputSpace::unit_cube(int dims) {
  if (dims < 1) throw InvalidArgument("input space needs at least one variable");
  return InputSpace(std::vector<VariableBounds>(dims, VariableBounds{0.0, 1.0}));
}

int InputSpace::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

bool InputSpace::contains(const Eigen::MatrixXd& points) const {
  if (points.cols() != dims()) return false;
  for (int j = 0; j < dims(); ++j) {
    if (points.rows() == 0) continue;
    if (points.col(j).minCoeff() < bounds_[j].lower || points.col(j).maxCoeff() > bounds_[j].upper) return false;
  }
  return true;
}

Eigen::MatrixXd InputSpace::from_unit(const Eigen::MatrixXd& unit) const {
  Eigen::MatrixXd out(unit.rows(), unit.cols());
  for (int j = 0; j < dims(); ++j) {
    const auto& b = bounds_[j];
    out.col(j) = (b.lower + b.width() * unit.col(j).array()).cwiseMin(b.upper).cwiseMax(b.lower);
  }
  return out;
}

DesignMatrix::DesignMatrix(Eigen::MatrixXd points, InputSpace space)
    : points_(std::move(points)), space_(std::move(space)) {
  if (points_.cols() != space_.dims())
    throw DimensionMismatch("design has " + std::to_string(points_.cols()) + " columns, input space has " +
                            std::to_string(space_.dims()) + " variables");
  if (!space_.contains(points_)) throw InvalidDesign("design points outside the input space");
}

DesignMatrix DesignMatrix::head(int n) const {
  if (n < 1 || n > rows()) throw InvalidDesign("subset size " + std::to_string(n) + " out of range");
  return DesignMatrix(points_.topRows(n), space_);
}

DesignMatrix DesignMatrix::select(const std::vector<int>& rows) const {
  Eigen::MatrixXd sub(rows.size(), dims());
  for (std::size_t i = 0; i < rows.size(); ++i) sub.row(i) = points_.row(rows[i]);
  return DesignMatrix(std::move(sub), space_);
}

FunctionalOutputs FunctionalOutputs::head(int n) const {
  return FunctionalOutputs{values.topRows(n), grid};
}

FunctionalOutputs FunctionalOutputs::select(const std::vector<int>& rows) const {
  Eigen::MatrixXd sub(rows.size(), values.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) sub.row(i) = values.row(rows[i]);
  return FunctionalOutputs{std::move(sub), grid};
}

DesignMatrix lhs_sample(const InputSpace& space, int n, Seed seed) {
  if (n < 2) throw InvalidDesign("LHS needs at least 2 points, got " + std::to_string(n));
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd unit(n, space.dims());
  std::vector<int> perm(n);
  for (int j = 0; j < space.dims(); ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      double u = (perm[i] + unif(rng)) / n;
      // keep the value inside its stratum even after rounding
      unit(i, j) = std::min(u, std::nextafter((perm[i] + 1.0) / n, 0.0));
    }
  }
  return DesignMatrix(space.from_unit(unit), space);
}

DesignMatrix mc_sample(const InputSpace& space, int n, Seed seed) {
  if (n < 1) throw InvalidDesign("Monte Carlo sample needs at least 1 point");
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd unit(n, space.dims());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < space.dims(); ++j) unit(i, j) = unif(rng);
  return DesignMatrix(space.from_unit(unit), space);
}

DesignMatrix concatenate(const DesignMatrix& a, const DesignMatrix& b) {
  if (a.dims() != b.dims()) throw DimensionMismatch("cannot concatenate designs of different dimension");
  Eigen::MatrixXd pts(a.rows() + b.rows(), a.dims());
  pts << a.points(), b.points();
  return DesignMatrix(std::move(pts), a.space());
}

std::vector<double> angle_grid(int m) {
  if (m < 1) throw InvalidArgument("output dimension must be positive");
  std::vector<double> grid(m, 0.0);
  for (int l = 0; l < m && m > 1; ++l) grid[l] = 2.0 * std::numbers::pi * l / (m - 1);
  return grid;
}

TestModel::TestModel(Kind kind, int dims, std::vector<double> grid, double coefficient)
    : kind_(kind), dims_(dims), grid_(std::move(grid)), coefficient_(coefficient) {}

TestModel TestModel::additive_sine(int output_dims) {
  return TestModel(Kind::AdditiveSine, 2, angle_grid(output_dims), 0.0);
}

TestModel TestModel::interaction(int output_dims, double coefficient) {
  return TestModel(Kind::Interaction, 2, angle_grid(output_dims), coefficient);
}

TestModel TestModel::external_table(const std::filesystem::path& outputs_csv, int dims) {
  if (!std::filesystem::exists(outputs_csv)) throw IoError("missing table file " + outputs_csv.string());
  FunctionalOutputs table = read_outputs(outputs_csv);
  std::vector<double> grid = table.grid;
  if (grid.empty()) {
    grid.resize(table.dims());
    std::iota(grid.begin(), grid.end(), 0.0);
  }
  TestModel model(Kind::ExternalTable, dims, std::move(grid), 0.0);
  model.table_ = std::move(table.values);
  return model;
}

InputSpace TestModel::default_space() const { return InputSpace::unit_cube(dims_); }

FunctionalOutputs TestModel::evaluate(const Eigen::MatrixXd& points) const {
  if (points.cols() != dims_)
    throw DimensionMismatch("model expects " + std::to_string(dims_) + " inputs, design has " +
                            std::to_string(points.cols()));
  const int m = output_dims();
  FunctionalOutputs out;
  out.grid = grid_;
  if (kind_ == Kind::ExternalTable) {
    if (points.rows() != table_.rows())
      throw DimensionMismatch("table has " + std::to_string(table_.rows()) + " rows, design has " +
                              std::to_string(points.rows()));
    out.values = table_;
    return out;
  }
  Eigen::Map<const Eigen::RowVectorXd> t(grid_.data(), m);
  Eigen::RowVectorXd c = t.array().cos();
  Eigen::RowVectorXd s = t.array().sin();
  out.values = points.col(0) * c + points.col(1) * s;
  if (kind_ == Kind::Interaction)
    out.values.colwise() += coefficient_ * points.col(0).cwiseProduct(points.col(1));
  return out;
}

void write_outputs(const FunctionalOutputs& outputs, const std::filesystem::path& path) {
  auto out = open_out(path);
  if (!outputs.grid.empty()) {
    if (static_cast<int>(outputs.grid.size()) != outputs.dims())
      throw DimensionMismatch("grid size does not match output width");
    out << "# ";
    for (std::size_t j = 0; j < outputs.grid.size(); ++j) out << (j ? "," : "") << format_number(outputs.grid[j]);
    out << '\n';
  }
  for (Eigen::Index i = 0; i < outputs.values.rows(); ++i) write_row(out, outputs.values.row(i));
}

FunctionalOutputs read_outputs(const std::filesystem::path& path, std::optional<int> expected_rows) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  FunctionalOutputs result;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      if (!rows.empty() || !result.grid.empty())
        throw IoError(path.string() + ":" + std::to_string(line_no) + ": grid header must be the first line");
      view.remove_prefix(1);
      result.grid = parse_row(trim(view), path, line_no);
      continue;
    }
    rows.push_back(parse_row(view, path, line_no));
    if (rows.size() > 1 && rows.back().size() != rows.front().size())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": ragged row (" +
                    std::to_string(rows.back().size()) + " cells, expected " + std::to_string(rows.front().size()) +
                    ")");
  }
  if (rows.empty()) throw IoError(path.string() + ": no data rows");
  if (!result.grid.empty() && result.grid.size() != rows.front().size())
    throw IoError(path.string() + ": grid header width does not match the data");
  if (expected_rows && static_cast<int>(rows.size()) != *expected_rows)
    throw DimensionMismatch(path.string() + ": " + std::to_string(rows.size()) + " rows, design has " +
                  std::to_string(*expected_rows));
  result.values = rows_to_matrix(rows);
  return result;
}

void write_design(const DesignMatrix& design, const std::filesystem::path& path) {
  auto out = open_out(path);
  const auto& names = design.space().names();
  for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
  out << '\n';
  for (Eigen::Index i = 0; i < design.points().rows(); ++i) write_row(out, design.points().row(i));
}

DesignMatrix read_design(const std::filesystem::path& path, const InputSpace& space) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  int line_no = 0;
  std::vector<std::vector<double>> rows;
  std::vector<int> column_of;  // file column -> space variable
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    if (column_of.empty()) {
      auto cells = split_cells(view);
      double probe;
      if (parse_double(cells.front(), probe))
        throw IoError(path.string() + ": missing header with variable names");
      if (static_cast<int>(cells.size()) != space.dims())
        throw DimensionMismatch(path.string() + ": header has " + std::to_string(cells.size()) +
                                " columns, input space has " + std::to_string(space.dims()));
      for (auto c : cells) {
        int idx = space.find(std::string(c));
        if (idx < 0) throw IoError(path.string() + ": unknown variable '" + std::string(c) + "'");
        column_of.push_back(idx);
      }
      continue;
    }
    rows.push_back(parse_row(view, path, line_no));
    if (static_cast<int>(rows.back().size()) != space.dims())
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
  }
  if (rows.empty()) throw IoError(path.string() + ": no data rows");
  Eigen::MatrixXd pts(rows.size(), space.dims());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) pts(i, column_of[j]) = rows[i][j];
  return DesignMatrix(std::move(pts), space);
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) write_row(out, m.row(i));
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) {
  return read_outputs(path).values;
}

}  // namespace fgsa
