#include "sppc/plant.hpp"

#include <string>

#include "sppc/errors.hpp"

namespace sppc {

PlantModel::PlantModel(Eigen::MatrixXd A, Eigen::VectorXd B)
    : A_(std::move(A)), B_(std::move(B)) {
  if (A_.rows() < 1 || A_.rows() != A_.cols()) {
    throw ParameterError("A must be a non-empty square matrix");
  }
  if (B_.size() != A_.rows()) {
    throw ParameterError("B must have " + std::to_string(A_.rows()) + " rows");
  }
  if (!A_.allFinite() || !B_.allFinite()) {
    throw ParameterError("plant matrices must be finite");
  }
}

Eigen::VectorXd propagate(const PlantModel& plant, const Eigen::VectorXd& x, double u) {
  if (x.size() != plant.n()) {
    throw ParameterError("state has " + std::to_string(x.size()) + " entries, plant has n=" +
                         std::to_string(plant.n()));
  }
  return plant.A() * x + plant.B() * u;
}

Eigen::MatrixXd controllability_matrix(const PlantModel& plant) {
  const Eigen::Index n = plant.n();
  Eigen::MatrixXd C(n, n);
  C.col(0) = plant.B();
  for (Eigen::Index i = 1; i < n; ++i) C.col(i) = plant.A() * C.col(i - 1);
  return C;
}

bool check_reachability(const PlantModel& plant) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(controllability_matrix(plant));
  const Eigen::VectorXd& s = svd.singularValues();
  if (s(0) == 0.0) return false;
  return (s.array() > 1e-10 * s(0)).count() == plant.n();
}

PlantModel benchmark_plant() {
  Eigen::MatrixXd A(4, 4);
  // clang-format off
  A <<  0.0685,  1.1221, -0.6615,  0.3087,
        0.9512,  0.3237, -0.2253, -0.5701,
       -0.3448, -0.4112, -0.8299,  0.5388,
        0.0359, -0.6418, -0.1262,  0.4669;
  // clang-format on
  Eigen::VectorXd B(4);
  B << 2.3459, 0.0893, 2.2103, 0.7440;
  return PlantModel(std::move(A), std::move(B));
}

}  // namespace sppc
