#pragma once

// Independent reference computations used by the tests. They deliberately
// avoid the library's vectorized paths: plain loops over samples and pixels.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include <Eigen/Dense>

namespace oracle {

inline Eigen::MatrixXd gaussian(int rows, int cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n;
  Eigen::MatrixXd x(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) x(i, j) = n(rng);
  return x;
}

struct Scalar {
  double closed, variance, mean;
};

// Janon-Monod by explicit loops.
inline Scalar janon_monod(const Eigen::VectorXd& y, const Eigen::VectorXd& ys) {
  const long n = y.size();
  double f0 = 0, cross = 0, sq = 0;
  for (long k = 0; k < n; ++k) {
    f0 += 0.5 * (y(k) + ys(k));
    cross += y(k) * ys(k);
    sq += 0.5 * (y(k) * y(k) + ys(k) * ys(k));
  }
  f0 /= n;
  return {cross / n - f0 * f0, sq / n - f0 * f0, f0};
}

inline double jansen(const Eigen::VectorXd& y, const Eigen::VectorXd& yt) {
  double s = 0;
  for (long k = 0; k < y.size(); ++k) s += (y(k) - yt(k)) * (y(k) - yt(k));
  return s / (2.0 * y.size());
}

// Vector estimator matrices by a double loop over samples.
inline void vector_pf(const Eigen::MatrixXd& y, const Eigen::MatrixXd& ys, Eigen::MatrixXd& closed,
                      Eigen::MatrixXd& cov) {
  const long n = y.rows(), p = y.cols();
  Eigen::VectorXd f0 = Eigen::VectorXd::Zero(p);
  for (long k = 0; k < n; ++k)
    for (long a = 0; a < p; ++a) f0(a) += 0.5 * (y(k, a) + ys(k, a)) / n;
  closed.setZero(p, p);
  cov.setZero(p, p);
  for (long a = 0; a < p; ++a)
    for (long b = 0; b < p; ++b) {
      double c = 0, v = 0;
      for (long k = 0; k < n; ++k) {
        c += y(k, a) * ys(k, b);
        v += 0.5 * (y(k, a) * y(k, b) + ys(k, a) * ys(k, b));
      }
      closed(a, b) = c / n - f0(a) * f0(b);
      cov(a, b) = v / n - f0(a) * f0(b);
    }
}

inline bool close(double a, double b, double rel = 1e-10) {
  return std::abs(a - b) <= rel * std::max(1.0, std::abs(b));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fgsa_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace oracle
