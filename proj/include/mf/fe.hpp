#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <array>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "mf/material.hpp"
#include "mf/quad_mesh.hpp"

namespace mf {

/// Macro load applied through the RVE coupling condition. Strains are Voigt
/// [e11, e22, g12] with engineering shear, stresses [s11, s22, s12].
struct MacroLoad {
  enum class Kind { dirichlet_kubc, periodic, neumann };
  Kind kind = Kind::dirichlet_kubc;
  Eigen::Vector3d macro_strain = Eigen::Vector3d::Zero();
  Eigen::Vector3d macro_stress = Eigen::Vector3d::Zero();

  // Optional replacement for the affine KUBC boundary field; used for
  // manufactured-solution studies. Ignored by periodic/neumann.
  std::function<Eigen::Vector2d(double, double)> boundary_displacement;

  static MacroLoad kubc(const Eigen::Vector3d& strain) {
    return MacroLoad{Kind::dirichlet_kubc, strain, Eigen::Vector3d::Zero(), nullptr};
  }
  static MacroLoad periodic(const Eigen::Vector3d& strain) {
    return MacroLoad{Kind::periodic, strain, Eigen::Vector3d::Zero(), nullptr};
  }
  static MacroLoad neumann(const Eigen::Vector3d& stress) {
    return MacroLoad{Kind::neumann, Eigen::Vector3d::Zero(), stress, nullptr};
  }
};

const char* to_string(MacroLoad::Kind kind);

/// Affine map from reduced (unconstrained) dofs to the full nodal dof
/// vector: u_full = T u_red + g. Every full dof is either free (one unit
/// entry) or an affine combination of free dofs.
class ConstraintMap {
 public:
  explicit ConstraintMap(int full_dofs);

  struct Term {
    int dof;
    double weight;
  };

  void constrain(int dof, std::vector<Term> terms, double offset);
  void fix(int dof, double value) { constrain(dof, {}, value); }
  bool is_constrained(int dof) const { return constrained_[dof]; }

  /// Assign reduced indices to free dofs and flatten chained constraints so
  /// every combination references free dofs only. Must be called once after
  /// all constraints are added.
  void finalize();

  int full_size() const { return (int)constrained_.size(); }
  int reduced_size() const { return reduced_size_; }
  int reduced_index(int dof) const { return reduced_index_[dof]; }

  const std::vector<Term>& terms_of(int dof) const { return terms_[dof]; }
  double offset_of(int dof) const { return offsets_[dof]; }

  Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;
  Eigen::VectorXd reduce_transpose(const Eigen::VectorXd& full) const;  // T^T * full

 private:
  std::vector<char> constrained_;
  std::vector<std::vector<Term>> terms_;   // for constrained dofs: free-dof combos after finalize
  std::vector<double> offsets_;
  std::vector<int> reduced_index_;         // -1 for constrained dofs
  int reduced_size_ = -1;
  bool finalized_ = false;
};

struct LinearSystem {
  Eigen::SparseMatrix<double> K;  // reduced, symmetric
  Eigen::VectorXd f;              // reduced right-hand side
  ConstraintMap map;              // reconstruction of the full vector
};

/// Element stiffness and load machinery for one mesh/material pairing.
/// Element stiffness of a square plane-strain Q4 element is independent of
/// its side length, so one 8x8 block per phase serves all elements.
class AssembledSystem {
 public:
  AssembledSystem(const QuadMesh& mesh, const MaterialTable& material);

  const QuadMesh& mesh() const { return *mesh_; }
  const MaterialTable& material() const { return *material_; }

  /// Constraint map holding only the hanging-node relations.
  ConstraintMap hanging_map() const;

  /// Condensed stiffness and rhs for an arbitrary finalized constraint map;
  /// external forces (full dof vector) are folded into the reduced rhs.
  LinearSystem condense(const ConstraintMap& map,
                        const Eigen::VectorXd* external_forces = nullptr) const;

  /// Hanging-condensed stiffness; dimension equals mesh.ndof.
  Eigen::SparseMatrix<double> hanging_condensed_matrix() const;

  const Eigen::Matrix<double, 8, 8>& element_stiffness_of(int element) const;

 private:
  const QuadMesh* mesh_;
  const MaterialTable* material_;
  std::vector<Eigen::Matrix<double, 8, 8>> phase_stiffness_;
  std::vector<int> phase_slot_;  // phase id -> index into phase_stiffness_
};

/// 8x8 plane-strain Q4 stiffness (2x2 Gauss; exact for squares).
Eigen::Matrix<double, 8, 8> element_stiffness(const QuadElement& element,
                                              const QuadMesh& mesh,
                                              const MaterialTable& material);

AssembledSystem assemble(const QuadMesh& mesh, const MaterialTable& material);

/// Builds the fully constrained system for a coupling condition on top of
/// the hanging-node constraints.
LinearSystem apply_coupling(const AssembledSystem& system, const QuadMesh& mesh,
                            const MacroLoad& load);

struct SolverOptions {
  // direct factorization at or below, diagonal-preconditioned CG above;
  // the sparse LDLT handles 2D systems of a few million dofs in minutes
  // where plain CG needs far longer
  int direct_ndof_limit = 3000000;
  double rel_tol = 1e-10;
  int max_iterations = 40000;
};

struct DisplacementField {
  const QuadMesh* mesh = nullptr;
  Eigen::VectorXd u;  // full nodal vector, 2 per node, hanging reconstructed
  double ux(int node) const { return u[2 * node]; }
  double uy(int node) const { return u[2 * node + 1]; }
};

DisplacementField solve(const LinearSystem& system, const QuadMesh& mesh,
                        const SolverOptions& options = {});

/// Stress/strain state at the 2x2 Gauss points of every element.
struct QuadraturePointField {
  static constexpr int ngp = 4;
  const QuadMesh* mesh = nullptr;
  // per element: 4 Gauss points, Voigt stress and strain (engineering shear)
  std::vector<std::array<Eigen::Vector3d, ngp>> stress;
  std::vector<std::array<Eigen::Vector3d, ngp>> strain;
  std::vector<double> det_jacobian;  // per element, constant over the element

  /// Gauss point position in the element's physical coordinates.
  static Eigen::Vector2d gauss_point(const QuadMesh& mesh, const QuadElement& element, int gp);
};

QuadraturePointField stresses_at_quadrature(const DisplacementField& displacement,
                                            const MaterialTable& material);

/// One fully solved load case; unit of exchange for error analysis.
/// Field structs point at this->mesh, so moves re-anchor them.
struct SolvedCase {
  QuadMesh mesh;
  MaterialTable material;
  MacroLoad load;
  DisplacementField displacement;
  QuadraturePointField qp;
  double solve_seconds = 0.0;

  SolvedCase() = default;
  SolvedCase(const SolvedCase&) = delete;
  SolvedCase& operator=(const SolvedCase&) = delete;
  SolvedCase(SolvedCase&& other) noexcept { *this = std::move(other); }
  SolvedCase& operator=(SolvedCase&& other) noexcept {
    mesh = std::move(other.mesh);
    material = std::move(other.material);
    load = std::move(other.load);
    displacement = std::move(other.displacement);
    qp = std::move(other.qp);
    solve_seconds = other.solve_seconds;
    displacement.mesh = &mesh;
    qp.mesh = &mesh;
    return *this;
  }
};

SolvedCase solve_case(QuadMesh mesh, const MaterialTable& material, const MacroLoad& load,
                      const SolverOptions& options = {});

// Q4 reference-element helpers shared by recovery and error integration.
namespace q4 {
constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)
extern const std::array<std::array<double, 2>, 4> gauss_points;   // (xi, eta)
extern const std::array<std::array<double, 2>, 4> corner_coords;  // (xi, eta) of SW,SE,NE,NW

inline std::array<double, 4> shape(double xi, double eta) {
  return {0.25 * (1 - xi) * (1 - eta), 0.25 * (1 + xi) * (1 - eta), 0.25 * (1 + xi) * (1 + eta),
          0.25 * (1 - xi) * (1 + eta)};
}

/// Strain-displacement matrix for a square element of side length L,
/// evaluated at reference coords (xi, eta).
Eigen::Matrix<double, 3, 8> strain_matrix(double xi, double eta, double side_length);
}  // namespace q4

}  // namespace mf
