#include "mf/fe.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mf/parallel.hpp"

namespace mf {

const char* to_string(MacroLoad::Kind kind) {
  switch (kind) {
    case MacroLoad::Kind::dirichlet_kubc: return "dirichlet";
    case MacroLoad::Kind::periodic: return "periodic";
    case MacroLoad::Kind::neumann: return "neumann";
  }
  return "?";
}

namespace q4 {

const std::array<std::array<double, 2>, 4> gauss_points = {
    {{-kGauss, -kGauss}, {kGauss, -kGauss}, {kGauss, kGauss}, {-kGauss, kGauss}}};
const std::array<std::array<double, 2>, 4> corner_coords = {
    {{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}}};

Eigen::Matrix<double, 3, 8> strain_matrix(double xi, double eta, double side_length) {
  const double scale = 2.0 / side_length;  // d(xi)/dx for the square element
  Eigen::Matrix<double, 3, 8> B = Eigen::Matrix<double, 3, 8>::Zero();
  for (int i = 0; i < 4; ++i) {
    const double xi_i = corner_coords[i][0], eta_i = corner_coords[i][1];
    const double dNdx = 0.25 * xi_i * (1.0 + eta_i * eta) * scale;
    const double dNdy = 0.25 * eta_i * (1.0 + xi_i * xi) * scale;
    B(0, 2 * i) = dNdx;
    B(1, 2 * i + 1) = dNdy;
    B(2, 2 * i) = dNdy;
    B(2, 2 * i + 1) = dNdx;
  }
  return B;
}

}  // namespace q4

namespace {

Eigen::Matrix<double, 8, 8> stiffness_for(const Eigen::Matrix3d& D, double side_length) {
  Eigen::Matrix<double, 8, 8> K = Eigen::Matrix<double, 8, 8>::Zero();
  const double det_j = side_length * side_length / 4.0;
  for (const auto& gp : q4::gauss_points) {
    const auto B = q4::strain_matrix(gp[0], gp[1], side_length);
    K += B.transpose() * D * B * det_j;
  }
  return K;
}

Eigen::Matrix2d strain_tensor(const Eigen::Vector3d& voigt) {
  Eigen::Matrix2d e;
  e << voigt[0], 0.5 * voigt[2], 0.5 * voigt[2], voigt[1];
  return e;
}

}  // namespace

Eigen::Matrix<double, 8, 8> element_stiffness(const QuadElement& element, const QuadMesh& mesh,
                                              const MaterialTable& material) {
  const double L = mesh.side_length(element);
  if (!(L > 0.0)) throw std::runtime_error("element_stiffness: degenerate element geometry");
  return stiffness_for(material.stiffness(element.phase), L);
}

// ---------------------------------------------------------------------------
// ConstraintMap

ConstraintMap::ConstraintMap(int full_dofs)
    : constrained_(full_dofs, 0),
      terms_(full_dofs),
      offsets_(full_dofs, 0.0),
      reduced_index_(full_dofs, -1) {}

void ConstraintMap::constrain(int dof, std::vector<Term> terms, double offset) {
  if (finalized_) throw std::runtime_error("constraint map already finalized");
  if (constrained_[dof])
    throw std::runtime_error("dof " + std::to_string(dof) + " constrained twice");
  constrained_[dof] = 1;
  terms_[dof] = std::move(terms);
  offsets_[dof] = offset;
}

void ConstraintMap::finalize() {
  if (finalized_) return;
  reduced_size_ = 0;
  for (int d = 0; d < full_size(); ++d)
    if (!constrained_[d]) reduced_index_[d] = reduced_size_++;

  // Flatten chains (hanging node referencing periodic slave, slave
  // referencing a fixed corner, ...) until every term lands on a free dof.
  for (int d = 0; d < full_size(); ++d) {
    if (!constrained_[d]) continue;
    for (int depth = 0;; ++depth) {
      bool clean = true;
      for (const Term& t : terms_[d])
        if (constrained_[t.dof]) {
          clean = false;
          break;
        }
      if (clean) break;
      if (depth > 16) throw std::runtime_error("constraint chain too deep or cyclic");
      std::vector<Term> flat;
      flat.reserve(terms_[d].size() * 2);
      double offset = offsets_[d];
      for (const Term& t : terms_[d]) {
        if (!constrained_[t.dof]) {
          flat.push_back(t);
          continue;
        }
        offset += t.weight * offsets_[t.dof];
        for (const Term& sub : terms_[t.dof])
          flat.push_back(Term{sub.dof, t.weight * sub.weight});
      }
      // combine duplicate targets for compactness
      std::sort(flat.begin(), flat.end(), [](const Term& a, const Term& b) { return a.dof < b.dof; });
      std::vector<Term> combined;
      for (const Term& t : flat) {
        if (!combined.empty() && combined.back().dof == t.dof)
          combined.back().weight += t.weight;
        else
          combined.push_back(t);
      }
      terms_[d] = std::move(combined);
      offsets_[d] = offset;
    }
  }
  finalized_ = true;
}

Eigen::VectorXd ConstraintMap::expand(const Eigen::VectorXd& reduced) const {
  Eigen::VectorXd full(full_size());
  for (int d = 0; d < full_size(); ++d) {
    if (!constrained_[d]) {
      full[d] = reduced[reduced_index_[d]];
    } else {
      double v = offsets_[d];
      for (const Term& t : terms_[d]) v += t.weight * reduced[reduced_index_[t.dof]];
      full[d] = v;
    }
  }
  return full;
}

Eigen::VectorXd ConstraintMap::reduce_transpose(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(reduced_size_);
  for (int d = 0; d < full_size(); ++d) {
    if (!constrained_[d])
      out[reduced_index_[d]] += full[d];
    else
      for (const Term& t : terms_[d]) out[reduced_index_[t.dof]] += t.weight * full[d];
  }
  return out;
}

// ---------------------------------------------------------------------------
// AssembledSystem

AssembledSystem::AssembledSystem(const QuadMesh& mesh, const MaterialTable& material)
    : mesh_(&mesh), material_(&material) {
  int max_phase = 0;
  for (const auto& el : mesh.elements) max_phase = std::max(max_phase, el.phase);
  phase_slot_.assign(max_phase + 1, -1);
  for (const auto& el : mesh.elements) {
    if (phase_slot_[el.phase] >= 0) continue;
    phase_slot_[el.phase] = (int)phase_stiffness_.size();
    if (!material.has(el.phase))
      throw std::runtime_error("assemble: phase " + std::to_string(el.phase) +
                               " missing from material table");
    // side length cancels out of the 2D stiffness; any positive value works
    phase_stiffness_.push_back(stiffness_for(material.stiffness(el.phase), 1.0));
  }
}

const Eigen::Matrix<double, 8, 8>& AssembledSystem::element_stiffness_of(int element) const {
  return phase_stiffness_[phase_slot_[mesh_->elements[element].phase]];
}

ConstraintMap AssembledSystem::hanging_map() const {
  ConstraintMap map(2 * mesh_->node_count());
  for (const auto& con : mesh_->constraints) {
    for (int c = 0; c < 2; ++c)
      map.constrain(2 * con.hanging + c,
                    {{2 * con.masters[0] + c, 0.5}, {2 * con.masters[1] + c, 0.5}}, 0.0);
  }
  map.finalize();
  return map;
}

LinearSystem AssembledSystem::condense(const ConstraintMap& map,
                                       const Eigen::VectorXd* external_forces) const {
  const int n = map.reduced_size();
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);

  // Expansion of one full dof into (reduced dof, weight) terms plus offset.
  // Free dofs expand to themselves via the caller-provided scratch term.
  auto expansion = [&map](int dof, ConstraintMap::Term& scratch)
      -> std::pair<std::span<const ConstraintMap::Term>, double> {
    if (!map.is_constrained(dof)) {
      scratch.dof = dof;
      return {std::span<const ConstraintMap::Term>(&scratch, 1), 0.0};
    }
    return {std::span<const ConstraintMap::Term>(map.terms_of(dof)), map.offset_of(dof)};
  };

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh_->elements.size() * 70);
  std::array<int, 8> dofs;
  ConstraintMap::Term scratch_i{0, 1.0}, scratch_j{0, 1.0};
  for (std::size_t e = 0; e < mesh_->elements.size(); ++e) {
    const auto& el = mesh_->elements[e];
    const auto& ke = element_stiffness_of((int)e);
    for (int c = 0; c < 4; ++c) {
      dofs[2 * c] = 2 * el.corners[c];
      dofs[2 * c + 1] = 2 * el.corners[c] + 1;
    }
    for (int i = 0; i < 8; ++i) {
      const auto [ti, oi] = expansion(dofs[i], scratch_i);
      (void)oi;
      for (int j = 0; j < 8; ++j) {
        const double k = ke(i, j);
        if (k == 0.0) continue;
        const auto [tj, oj] = expansion(dofs[j], scratch_j);
        for (const auto& a : ti) {
          const int ri = map.reduced_index(a.dof);
          for (const auto& b : tj)
            triplets.emplace_back(ri, map.reduced_index(b.dof), a.weight * k * b.weight);
          if (oj != 0.0) f[ri] -= a.weight * k * oj;
        }
      }
    }
  }

  LinearSystem system{Eigen::SparseMatrix<double>(n, n), Eigen::VectorXd(), map};
  system.K.setFromTriplets(triplets.begin(), triplets.end());
  if (external_forces) f += map.reduce_transpose(*external_forces);
  system.f = std::move(f);
  return system;
}

Eigen::SparseMatrix<double> AssembledSystem::hanging_condensed_matrix() const {
  return condense(hanging_map()).K;
}

AssembledSystem assemble(const QuadMesh& mesh, const MaterialTable& material) {
  return AssembledSystem(mesh, material);
}

// ---------------------------------------------------------------------------
// Coupling conditions

namespace {

Eigen::Matrix2d strain_from_voigt(const Eigen::Vector3d& v) { return strain_tensor(v); }

struct BoundaryNodes {
  std::vector<std::int32_t> left, right, bottom, top;  // sorted along the edge
};

BoundaryNodes boundary_nodes(const QuadMesh& mesh) {
  const std::int32_t W = mesh.grid->width;
  BoundaryNodes b;
  for (std::int32_t v = 0; v < mesh.node_count(); ++v) {
    const auto& n = mesh.nodes[v];
    if (n.gx == 0) b.left.push_back(v);
    if (n.gx == W) b.right.push_back(v);
    if (n.gy == 0) b.bottom.push_back(v);
    if (n.gy == W) b.top.push_back(v);
  }
  auto by_gy = [&](std::int32_t a, std::int32_t c) { return mesh.nodes[a].gy < mesh.nodes[c].gy; };
  auto by_gx = [&](std::int32_t a, std::int32_t c) { return mesh.nodes[a].gx < mesh.nodes[c].gx; };
  std::sort(b.left.begin(), b.left.end(), by_gy);
  std::sort(b.right.begin(), b.right.end(), by_gy);
  std::sort(b.bottom.begin(), b.bottom.end(), by_gx);
  std::sort(b.top.begin(), b.top.end(), by_gx);
  return b;
}

int find_node(const QuadMesh& mesh, std::int32_t gx, std::int32_t gy) {
  for (std::int32_t v = 0; v < mesh.node_count(); ++v)
    if (mesh.nodes[v].gx == gx && mesh.nodes[v].gy == gy) return v;
  throw std::runtime_error("coupling: expected lattice node not present");
}

// Ties one slave edge node to the matching position on the master edge:
// exact partner when the lattice coordinate coincides with a master node,
// linear interpolation inside the spanning master-edge segment otherwise.
void tie_periodic_node(ConstraintMap& map, const QuadMesh& mesh, std::int32_t slave,
                       const std::vector<std::int32_t>& masters, bool along_y,
                       const Eigen::Vector2d& offset) {
  const std::int32_t key = along_y ? mesh.nodes[slave].gy : mesh.nodes[slave].gx;
  auto coord = [&](std::int32_t v) { return along_y ? mesh.nodes[v].gy : mesh.nodes[v].gx; };
  auto it = std::lower_bound(masters.begin(), masters.end(), key,
                             [&](std::int32_t v, std::int32_t k) { return coord(v) < k; });
  if (it != masters.end() && coord(*it) == key) {
    for (int c = 0; c < 2; ++c)
      map.constrain(2 * slave + c, {{2 * (*it) + c, 1.0}}, offset[c]);
    return;
  }
  if (it == masters.begin() || it == masters.end())
    throw std::runtime_error("coupling: slave node outside master edge span");
  const std::int32_t hi = *it, lo = *(it - 1);
  const double t = double(key - coord(lo)) / double(coord(hi) - coord(lo));
  for (int c = 0; c < 2; ++c)
    map.constrain(2 * slave + c, {{2 * lo + c, 1.0 - t}, {2 * hi + c, t}}, offset[c]);
}

}  // namespace

LinearSystem apply_coupling(const AssembledSystem& system, const QuadMesh& mesh,
                            const MacroLoad& load) {
  const std::int32_t W = mesh.grid->width;
  const double eps = mesh.grid->physical_size;
  ConstraintMap map(2 * mesh.node_count());
  for (const auto& con : mesh.constraints)
    for (int c = 0; c < 2; ++c)
      map.constrain(2 * con.hanging + c,
                    {{2 * con.masters[0] + c, 0.5}, {2 * con.masters[1] + c, 0.5}}, 0.0);

  Eigen::VectorXd external;  // consistent Neumann tractions, when present

  switch (load.kind) {
    case MacroLoad::Kind::dirichlet_kubc: {
      const Eigen::Matrix2d E = strain_from_voigt(load.macro_strain);
      for (std::int32_t v = 0; v < mesh.node_count(); ++v) {
        const auto& n = mesh.nodes[v];
        if (n.gx != 0 && n.gx != W && n.gy != 0 && n.gy != W) continue;
        if (n.hanging) continue;  // never occurs on the domain boundary
        const double x = mesh.node_x(v), y = mesh.node_y(v);
        const Eigen::Vector2d u_bc = load.boundary_displacement
                                         ? load.boundary_displacement(x, y)
                                         : Eigen::Vector2d(E * Eigen::Vector2d(x, y));
        map.fix(2 * v, u_bc[0]);
        map.fix(2 * v + 1, u_bc[1]);
      }
      break;
    }
    case MacroLoad::Kind::periodic: {
      if (mesh.grid->width != mesh.grid->height)
        throw std::runtime_error("coupling: periodic requires a square domain");
      const Eigen::Matrix2d E = strain_from_voigt(load.macro_strain);
      const auto b = boundary_nodes(mesh);
      const int origin = find_node(mesh, 0, 0);
      map.fix(2 * origin, 0.0);  // rigid translation
      map.fix(2 * origin + 1, 0.0);
      const Eigen::Vector2d dx = E * Eigen::Vector2d(eps, 0.0);
      const Eigen::Vector2d dy = E * Eigen::Vector2d(0.0, eps);
      for (std::int32_t v : b.right) {
        if (mesh.nodes[v].gy == W) continue;  // top-right corner handled with the top edge
        tie_periodic_node(map, mesh, v, b.left, true, dx);
      }
      for (std::int32_t v : b.top) {
        if (mesh.nodes[v].gx == W) {
          // u(W,W) = u(0,0) + E*(eps,eps)
          for (int c = 0; c < 2; ++c)
            map.constrain(2 * v + c, {{2 * origin + c, 1.0}}, dx[c] + dy[c]);
          continue;
        }
        tie_periodic_node(map, mesh, v, b.bottom, false, dy);
      }
      break;
    }
    case MacroLoad::Kind::neumann: {
      const double s11 = load.macro_stress[0], s22 = load.macro_stress[1],
                   s12 = load.macro_stress[2];
      external = Eigen::VectorXd::Zero(2 * mesh.node_count());
      auto add_edge = [&](std::int32_t a, std::int32_t c, double nx, double ny, double len) {
        const Eigen::Vector2d t(s11 * nx + s12 * ny, s12 * nx + s22 * ny);
        for (std::int32_t v : {a, c}) {
          external[2 * v] += 0.5 * len * t[0];
          external[2 * v + 1] += 0.5 * len * t[1];
        }
      };
      for (const auto& el : mesh.elements) {
        const std::int32_t s = el.pixel_span();
        const double len = mesh.side_length(el);
        if (el.oy == 0) add_edge(el.corners[0], el.corners[1], 0.0, -1.0, len);
        if (el.ox + s == W) add_edge(el.corners[1], el.corners[2], 1.0, 0.0, len);
        if (el.oy + s == W) add_edge(el.corners[2], el.corners[3], 0.0, 1.0, len);
        if (el.ox == 0) add_edge(el.corners[3], el.corners[0], -1.0, 0.0, len);
      }
      // gauge fixing: corner node pinned, x-dof of the corner above it
      const int origin = find_node(mesh, 0, 0);
      const int upper = find_node(mesh, 0, W);
      map.fix(2 * origin, 0.0);
      map.fix(2 * origin + 1, 0.0);
      map.fix(2 * upper, 0.0);
      break;
    }
  }

  map.finalize();
  return system.condense(map, external.size() ? &external : nullptr);
}

// ---------------------------------------------------------------------------
// Solve

DisplacementField solve(const LinearSystem& system, const QuadMesh& mesh,
                        const SolverOptions& options) {
  const int n = system.map.reduced_size();
  Eigen::VectorXd u_red(n);
  const double fnorm = system.f.norm();
  if (n == 0 || fnorm == 0.0) {
    u_red.setZero();
  } else if (n <= options.direct_ndof_limit) {
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(system.K);
    if (ldlt.info() != Eigen::Success)
      throw std::runtime_error("solve: sparse factorization failed (singular system?)");
    u_red = ldlt.solve(system.f);
  } else {
    Eigen::SparseMatrix<double, Eigen::RowMajor> K = system.K;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double, Eigen::RowMajor>,
                             Eigen::Lower | Eigen::Upper>
        cg(K);
    cg.setTolerance(options.rel_tol * 0.1);
    cg.setMaxIterations(options.max_iterations);
    u_red = cg.solve(system.f);
    if (cg.info() != Eigen::Success)
      throw std::runtime_error("solve: conjugate gradient did not converge (" +
                               std::to_string(cg.iterations()) + " iterations)");
  }
  if (fnorm > 0.0) {
    const double rel_residual = (system.K * u_red - system.f).norm() / fnorm;
    if (!(rel_residual <= options.rel_tol))
      throw std::runtime_error("solve: relative residual " + std::to_string(rel_residual) +
                               " above tolerance");
  }
  DisplacementField field;
  field.mesh = &mesh;
  field.u = system.map.expand(u_red);
  return field;
}

Eigen::Vector2d QuadraturePointField::gauss_point(const QuadMesh& mesh, const QuadElement& element,
                                                  int gp) {
  const double L = mesh.side_length(element);
  const double x0 = mesh.element_x0(element), y0 = mesh.element_y0(element);
  return {x0 + 0.5 * L * (1.0 + q4::gauss_points[gp][0]),
          y0 + 0.5 * L * (1.0 + q4::gauss_points[gp][1])};
}

QuadraturePointField stresses_at_quadrature(const DisplacementField& displacement,
                                            const MaterialTable& material) {
  const QuadMesh& mesh = *displacement.mesh;
  QuadraturePointField field;
  field.mesh = &mesh;
  field.stress.resize(mesh.elements.size());
  field.strain.resize(mesh.elements.size());
  field.det_jacobian.resize(mesh.elements.size());

  // B depends only on the side length; one set per level present
  std::array<Eigen::Matrix<double, 3, 8>, QuadraturePointField::ngp> B_unit;
  for (int g = 0; g < QuadraturePointField::ngp; ++g)
    B_unit[g] = q4::strain_matrix(q4::gauss_points[g][0], q4::gauss_points[g][1], 1.0);

  parallel_for(mesh.elements.size(), [&](std::size_t e) {
    const auto& el = mesh.elements[e];
    const double L = mesh.side_length(el);
    field.det_jacobian[e] = L * L / 4.0;
    Eigen::Matrix<double, 8, 1> u_e;
    for (int c = 0; c < 4; ++c) {
      u_e[2 * c] = displacement.u[2 * el.corners[c]];
      u_e[2 * c + 1] = displacement.u[2 * el.corners[c] + 1];
    }
    const Eigen::Matrix3d& D = material.stiffness(el.phase);
    for (int g = 0; g < QuadraturePointField::ngp; ++g) {
      const Eigen::Vector3d eps = (B_unit[g] / L) * u_e;
      field.strain[e][g] = eps;
      field.stress[e][g] = D * eps;
    }
  });
  return field;
}

SolvedCase solve_case(QuadMesh mesh, const MaterialTable& material, const MacroLoad& load,
                      const SolverOptions& options) {
  SolvedCase out;
  out.mesh = std::move(mesh);
  out.material = material;
  out.load = load;
  const auto assembled = assemble(out.mesh, out.material);
  const auto t0 = std::chrono::steady_clock::now();
  const auto system = apply_coupling(assembled, out.mesh, load);
  out.displacement = solve(system, out.mesh, options);
  out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.qp = stresses_at_quadrature(out.displacement, out.material);
  return out;
}

}  // namespace mf
