#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately re-derive results through a different route than the library
// (dense interpolation instead of normal equations, geometric search instead
// of pixel ancestry, plain summation instead of pairwise).

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

#include "mf/error_analysis.hpp"
#include "mf/fe.hpp"
#include "mf/homogenize.hpp"
#include "mf/phase_grid.hpp"
#include "mf/quad_mesh.hpp"
#include "mf/recovery.hpp"

namespace mftest {

inline std::shared_ptr<const mf::PhaseGrid> uniform_grid(int n, int phase = 0,
                                                         double size = 1.0) {
  return std::make_shared<mf::PhaseGrid>(n, n, std::vector<int>(n * n, phase), size);
}

/// Left half phase 0, right half phase 1.
inline std::shared_ptr<const mf::PhaseGrid> two_block_grid(int n, double size = 1.0) {
  std::vector<int> labels(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) labels[i * n + j] = j < n / 2 ? 0 : 1;
  return std::make_shared<mf::PhaseGrid>(n, n, std::move(labels), size);
}

/// Vertical laminate with strips of `strip` pixels, phases alternating 0/1.
inline std::shared_ptr<const mf::PhaseGrid> laminate_grid(int n, int strip, double size = 1.0) {
  std::vector<int> labels(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) labels[i * n + j] = (j / strip) % 2;
  return std::make_shared<mf::PhaseGrid>(n, n, std::move(labels), size);
}

/// Centered square inclusion of phase 1, half-width `hw` pixels.
inline std::shared_ptr<const mf::PhaseGrid> inclusion_grid(int n, int hw, double size = 1.0) {
  std::vector<int> labels(n * n, 0);
  const int lo = n / 2 - hw, hi = n / 2 + hw;
  for (int i = lo; i < hi; ++i)
    for (int j = lo; j < hi; ++j) labels[i * n + j] = 1;
  return std::make_shared<mf::PhaseGrid>(n, n, std::move(labels), size);
}

/// Plus-shaped stiff inclusion (phase 1) in a matrix (phase 0): arms of
/// thickness n/4 centered, spanning [n/8, 7n/8).
inline bool in_cross(int n, int i, int j) {
  const int t_lo = n / 2 - n / 8, t_hi = n / 2 + n / 8;
  const int span_lo = n / 8, span_hi = n - n / 8;
  const bool horizontal = i >= t_lo && i < t_hi && j >= span_lo && j < span_hi;
  const bool vertical = j >= t_lo && j < t_hi && i >= span_lo && i < span_hi;
  return horizontal || vertical;
}

inline std::shared_ptr<const mf::PhaseGrid> cross_grid(int n, double size = 1.0) {
  std::vector<int> labels(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) labels[i * n + j] = in_cross(n, i, j) ? 1 : 0;
  return std::make_shared<mf::PhaseGrid>(n, n, std::move(labels), size);
}

/// Random blobby two-phase grid (seeded, deterministic).
inline std::shared_ptr<const mf::PhaseGrid> random_grid(int n, unsigned seed,
                                                        double fill = 0.35) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> coord(0, n - 1);
  std::uniform_int_distribution<int> radius(1, std::max(2, n / 6));
  std::vector<int> labels(n * n, 0);
  int painted = 0;
  while (painted < (int)(fill * n * n)) {
    const int ci = coord(rng), cj = coord(rng), r = radius(rng);
    for (int i = std::max(0, ci - r); i < std::min(n, ci + r); ++i)
      for (int j = std::max(0, cj - r); j < std::min(n, cj + r); ++j)
        if (labels[i * n + j] == 0) {
          labels[i * n + j] = 1;
          ++painted;
        }
  }
  return std::make_shared<mf::PhaseGrid>(n, n, std::move(labels), 1.0);
}

/// Material pairing used throughout: phase 0 = SiC-like, phase 1 = diamond-like.
inline mf::MaterialTable two_phase_materials() {
  mf::MaterialTable m;
  m.add(0, 250000.0, 0.17);
  m.add(1, 775000.0, 0.2);
  return m;
}

inline mf::MaterialTable single_phase_materials() {
  mf::MaterialTable m;
  m.add(0, 250000.0, 0.17);
  return m;
}

// ---------------------------------------------------------------------------
// Analytic laminate tensor (interface normal along x): sigma11/sigma12 and
// eps22 are uniform across strips; eliminating the per-phase fields yields a
// closed form.
inline Eigen::Matrix3d laminate_tensor(const std::vector<std::pair<double, Eigen::Matrix3d>>&
                                           fraction_and_stiffness) {
  double a1 = 0, b1 = 0, b2 = 0, c = 0;
  for (const auto& [v, D] : fraction_and_stiffness) {
    a1 += v / D(0, 0);
    b1 += v * D(0, 1) / D(0, 0);
    b2 += v * (D(1, 1) - D(0, 1) * D(0, 1) / D(0, 0));
    c += v / D(2, 2);
  }
  const double a2 = -b1;
  Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
  A(0, 0) = 1.0 / a1;
  A(0, 1) = -a2 / a1;
  A(1, 0) = b1 / a1;
  A(1, 1) = b2 - b1 * a2 / a1;
  A(2, 2) = 1.0 / c;
  return A;
}

// ---------------------------------------------------------------------------
// Independent quadrature oracles. Shape functions and derivatives are
// written out directly; sums run left to right.

inline double oracle_shape(int i, double xi, double eta) {
  switch (i) {
    case 0: return (1 - xi) * (1 - eta) / 4;
    case 1: return (1 + xi) * (1 - eta) / 4;
    case 2: return (1 + xi) * (1 + eta) / 4;
    default: return (1 - xi) * (1 + eta) / 4;
  }
}

inline const double kOracleGauss[4][2] = {{-1 / std::sqrt(3.0), -1 / std::sqrt(3.0)},
                                          {1 / std::sqrt(3.0), -1 / std::sqrt(3.0)},
                                          {1 / std::sqrt(3.0), 1 / std::sqrt(3.0)},
                                          {-1 / std::sqrt(3.0), 1 / std::sqrt(3.0)}};

/// Recovery-estimator integral, naive route. Element contributions are
/// clamped at zero like the library path (additivity of squares).
inline double naive_estimated_error(const mf::QuadMesh& mesh, const mf::QuadraturePointField& qp,
                                    const mf::RecoveredNodalField& recovered) {
  double total = 0.0;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    const double L = mesh.side_length(el);
    const double det_j = L * L / 4.0;
    double element_sum = 0.0;
    for (int g = 0; g < 4; ++g) {
      const double xi = kOracleGauss[g][0], eta = kOracleGauss[g][1];
      Eigen::Vector3d s_star = Eigen::Vector3d::Zero(), e_star = Eigen::Vector3d::Zero();
      for (int c = 0; c < 4; ++c) {
        const auto& entry = recovered.value_at(el.corners[c], el.phase);
        s_star += oracle_shape(c, xi, eta) * entry.stress;
        e_star += oracle_shape(c, xi, eta) * entry.strain;
      }
      const Eigen::Vector3d ds = s_star - qp.stress[e][g];
      const Eigen::Vector3d de = e_star - qp.strain[e][g];
      element_sum += (ds[0] * de[0] + ds[1] * de[1] + ds[2] * de[2]) * det_j;
    }
    total += std::max(0.0, element_sum);
  }
  return std::sqrt(total);
}

/// Coarse strain at an arbitrary point by geometric element search and a
/// hand-written bilinear gradient.
inline Eigen::Vector3d naive_coarse_strain(const mf::SolvedCase& coarse, double x, double y,
                                           int* phase_out) {
  const mf::QuadMesh& mesh = coarse.mesh;
  for (const auto& el : mesh.elements) {
    const double x0 = mesh.element_x0(el), y0 = mesh.element_y0(el);
    const double L = mesh.side_length(el);
    if (x < x0 || x > x0 + L || y < y0 || y > y0 + L) continue;
    const double xi = 2 * (x - x0) / L - 1, eta = 2 * (y - y0) / L - 1;
    double ux[4], uy[4];
    for (int c = 0; c < 4; ++c) {
      ux[c] = coarse.displacement.u[2 * el.corners[c]];
      uy[c] = coarse.displacement.u[2 * el.corners[c] + 1];
    }
    const double sx[4] = {-1, 1, 1, -1}, sy[4] = {-1, -1, 1, 1};
    double duxdx = 0, duxdy = 0, duydx = 0, duydy = 0;
    for (int c = 0; c < 4; ++c) {
      const double dndx = sx[c] * (1 + sy[c] * eta) / 4 * (2 / L);
      const double dndy = sy[c] * (1 + sx[c] * xi) / 4 * (2 / L);
      duxdx += dndx * ux[c];
      duxdy += dndy * ux[c];
      duydx += dndx * uy[c];
      duydy += dndy * uy[c];
    }
    if (phase_out) *phase_out = el.phase;
    return {duxdx, duydy, duxdy + duydx};
  }
  throw std::runtime_error("oracle: point outside mesh");
}

/// True-error integral, naive route (geometric search, no ancestry map).
inline double naive_true_error(const mf::SolvedCase& coarse, const mf::SolvedCase& reference) {
  const mf::QuadMesh& rm = reference.mesh;
  double total = 0.0;
  for (std::size_t e = 0; e < rm.elements.size(); ++e) {
    const auto& rel = rm.elements[e];
    const double L = rm.side_length(rel);
    const double det_j = L * L / 4.0;
    for (int g = 0; g < 4; ++g) {
      const double xi = kOracleGauss[g][0], eta = kOracleGauss[g][1];
      const double x = rm.element_x0(rel) + (xi + 1) / 2 * L;
      const double y = rm.element_y0(rel) + (eta + 1) / 2 * L;
      int phase = 0;
      const Eigen::Vector3d eps_c = naive_coarse_strain(coarse, x, y, &phase);
      const Eigen::Vector3d sig_c = coarse.material.stiffness(phase) * eps_c;
      const Eigen::Vector3d ds = reference.qp.stress[e][g] - sig_c;
      const Eigen::Vector3d de = reference.qp.strain[e][g] - eps_c;
      total += (ds[0] * de[0] + ds[1] * de[1] + ds[2] * de[2]) * det_j;
    }
  }
  return std::sqrt(std::max(0.0, total));
}

/// Builds a quadrature field holding an analytic stress state with the
/// matching strain (per element phase), bypassing any FE solve.
template <typename StressFn>
mf::QuadraturePointField synthetic_qp_field(const mf::QuadMesh& mesh,
                                            const mf::MaterialTable& material, StressFn stress) {
  mf::QuadraturePointField qp;
  qp.mesh = &mesh;
  qp.stress.resize(mesh.elements.size());
  qp.strain.resize(mesh.elements.size());
  qp.det_jacobian.resize(mesh.elements.size());
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    const double L = mesh.side_length(el);
    qp.det_jacobian[e] = L * L / 4;
    for (int g = 0; g < 4; ++g) {
      const Eigen::Vector2d x = mf::QuadraturePointField::gauss_point(mesh, el, g);
      const Eigen::Vector3d s = stress(x.x(), x.y(), el.phase);
      qp.stress[e][g] = s;
      qp.strain[e][g] = material.compliance(el.phase) * s;
    }
  }
  return qp;
}

}  // namespace mftest
