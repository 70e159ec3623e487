#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mf/fe.hpp"

namespace mf {

/// Homogenized plane-strain elasticity tensor of the RAE in Voigt form
/// [s11,s22,s12] vs [e11,e22,g12]; the shear load case applies unit
/// engineering shear g12 = 1.
struct ElasticityTensor2D {
  Eigen::Matrix3d voigt = Eigen::Matrix3d::Zero();  // symmetrized
  MacroLoad::Kind coupling = MacroLoad::Kind::periodic;
  int step = 0;                        // coarsening-step provenance
  double max_relative_asymmetry = 0.0;  // before symmetrization
};

/// Three unit load cases per coupling: averaged stresses column the tensor
/// (kubc/periodic); averaged strains column the compliance, inverted
/// (neumann).
ElasticityTensor2D homogenized_tensor(const QuadMesh& mesh, const MaterialTable& material,
                                      MacroLoad::Kind coupling, const SolverOptions& options = {});

/// Volume-fraction bounds of the constituent phases.
Eigen::Matrix3d voigt_bound(const PhaseGrid& grid, const MaterialTable& material);
Eigen::Matrix3d reuss_bound(const PhaseGrid& grid, const MaterialTable& material);

/// Per-coefficient ratios to the step-0 tensor. Coefficients that vanish at
/// step 0 (below 1e-9 of the largest entry) report ratio 1 when they stay
/// vanishing and are flagged otherwise.
struct SensitivityTable {
  std::vector<Eigen::Matrix3d> ratios;            // one per step, step 0 == ones
  std::vector<Eigen::Matrix<bool, 3, 3>> flagged;  // zero-to-nonzero transitions
};

SensitivityTable coarsening_sensitivity(const std::vector<ElasticityTensor2D>& sequence);

/// Volume average of the quadrature stress field over the domain.
Eigen::Vector3d average_stress(const SolvedCase& solved);
Eigen::Vector3d average_strain(const SolvedCase& solved);

}  // namespace mf
