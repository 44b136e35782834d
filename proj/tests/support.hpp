#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "sppc/linalg.hpp"
#include "sppc/plant.hpp"

namespace sppc::testing {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double normal() { return normal_(gen_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }
  Eigen::VectorXd gaussian(Eigen::Index n) { return gaussian(n, 1).col(0); }

  /// M Mᵀ + shift I with a well-conditioned spectrum.
  Eigen::MatrixXd spd(Eigen::Index n, double shift = 0.5) {
    const Eigen::MatrixXd m = gaussian(n, n);
    return m * m.transpose() / static_cast<double>(n) + shift * Eigen::MatrixXd::Identity(n, n);
  }

  /// Direction ~ N(0, I), magnitude log-uniform over [1e-2, 10].
  Eigen::VectorXd state(Eigen::Index n) {
    Eigen::VectorXd z = gaussian(n);
    while (z.norm() == 0.0) z = gaussian(n);
    return z / z.norm() * std::pow(10.0, uniform(-2.0, 1.0));
  }

  /// Reachable plant with spectral radius in [0.3, 1.6].
  PlantModel plant(Eigen::Index n) {
    for (;;) {
      Eigen::MatrixXd A = gaussian(n, n);
      const double sr = linalg::spectral_radius(A);
      if (sr > 0.0) A *= uniform(0.3, 1.6) / sr;
      PlantModel p(A, gaussian(n));
      if (check_reachability(p)) return p;
    }
  }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline double rel_fro(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / (1.0 + b.norm());
}

}  // namespace sppc::testing
