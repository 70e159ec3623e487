#include "mf/homogenize.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace mf {

namespace {

Eigen::Vector3d volume_average(const QuadMesh& mesh, const QuadraturePointField& qp,
                               const std::vector<std::array<Eigen::Vector3d, 4>>& values) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    for (int g = 0; g < 4; ++g) sum += values[e][g] * qp.det_jacobian[e];
  const double area = mesh.grid->physical_size * mesh.grid->physical_size;
  return sum / area;
}

}  // namespace

Eigen::Vector3d average_stress(const SolvedCase& solved) {
  return volume_average(solved.mesh, solved.qp, solved.qp.stress);
}

Eigen::Vector3d average_strain(const SolvedCase& solved) {
  return volume_average(solved.mesh, solved.qp, solved.qp.strain);
}

ElasticityTensor2D homogenized_tensor(const QuadMesh& mesh, const MaterialTable& material,
                                      MacroLoad::Kind coupling, const SolverOptions& options) {
  const AssembledSystem assembled = assemble(mesh, material);
  Eigen::Matrix3d columns;
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector3d unit = Eigen::Vector3d::Zero();
    unit[k] = 1.0;
    MacroLoad load;
    switch (coupling) {
      case MacroLoad::Kind::dirichlet_kubc: load = MacroLoad::kubc(unit); break;
      case MacroLoad::Kind::periodic: load = MacroLoad::periodic(unit); break;
      case MacroLoad::Kind::neumann: load = MacroLoad::neumann(unit); break;
    }
    const auto system = apply_coupling(assembled, mesh, load);
    const auto displacement = solve(system, mesh, options);
    const auto qp = stresses_at_quadrature(displacement, material);
    if (coupling == MacroLoad::Kind::neumann)
      columns.col(k) = volume_average(mesh, qp, qp.strain);
    else
      columns.col(k) = volume_average(mesh, qp, qp.stress);
  }

  Eigen::Matrix3d A =
      coupling == MacroLoad::Kind::neumann ? Eigen::Matrix3d(columns.inverse()) : columns;

  ElasticityTensor2D out;
  out.coupling = coupling;
  const double scale = A.cwiseAbs().maxCoeff();
  out.max_relative_asymmetry = (A - A.transpose()).cwiseAbs().maxCoeff() / scale;
  out.voigt = 0.5 * (A + A.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(out.voigt);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::runtime_error("homogenized_tensor: result not positive definite "
                             "(coupling misconfigured?)");
  return out;
}

namespace {

std::vector<std::pair<int, double>> volume_fractions(const PhaseGrid& grid) {
  std::map<int, std::int64_t> counts;
  for (int v : grid.labels) counts[v]++;
  std::vector<std::pair<int, double>> out;
  const double total = (double)grid.labels.size();
  for (const auto& [phase, count] : counts) out.emplace_back(phase, count / total);
  return out;
}

}  // namespace

Eigen::Matrix3d voigt_bound(const PhaseGrid& grid, const MaterialTable& material) {
  Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
  for (const auto& [phase, fraction] : volume_fractions(grid))
    sum += fraction * material.stiffness(phase);
  return sum;
}

Eigen::Matrix3d reuss_bound(const PhaseGrid& grid, const MaterialTable& material) {
  Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
  for (const auto& [phase, fraction] : volume_fractions(grid))
    sum += fraction * material.compliance(phase);
  return sum.inverse();
}

SensitivityTable coarsening_sensitivity(const std::vector<ElasticityTensor2D>& sequence) {
  if (sequence.size() < 2)
    throw std::runtime_error("coarsening_sensitivity: need at least two meshes");
  const Eigen::Matrix3d& base = sequence.front().voigt;
  const double tol = 1e-9 * base.cwiseAbs().maxCoeff();

  SensitivityTable table;
  for (const auto& tensor : sequence) {
    Eigen::Matrix3d ratio;
    Eigen::Matrix<bool, 3, 3> flag = Eigen::Matrix<bool, 3, 3>::Constant(false);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (std::abs(base(i, j)) > tol) {
          ratio(i, j) = tensor.voigt(i, j) / base(i, j);
        } else if (std::abs(tensor.voigt(i, j)) <= tol) {
          ratio(i, j) = 1.0;  // stays numerically zero
        } else {
          ratio(i, j) = std::numeric_limits<double>::infinity();
          flag(i, j) = true;
        }
      }
    table.ratios.push_back(ratio);
    table.flagged.push_back(flag);
  }
  return table;
}

}  // namespace mf
