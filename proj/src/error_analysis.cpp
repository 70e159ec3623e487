#include "mf/error_analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mf/parallel.hpp"

namespace mf {

namespace {

// shape values at the 2x2 Gauss points, rows = Gauss point, cols = corner
Eigen::Matrix4d gauss_shape_matrix() {
  Eigen::Matrix4d N;
  for (int g = 0; g < 4; ++g) {
    const auto ng = q4::shape(q4::gauss_points[g][0], q4::gauss_points[g][1]);
    for (int i = 0; i < 4; ++i) N(g, i) = ng[i];
  }
  return N;
}

}  // namespace

ErrorReport estimate_error(const QuadMesh& mesh, const QuadraturePointField& field,
                           const RecoveredNodalField& recovered) {
  const Eigen::Matrix4d N = gauss_shape_matrix();

  ErrorReport report;
  report.scheme = recovered.scheme;
  report.ndof = mesh.ndof;
  const int w = mesh.grid->width;
  report.reduction_factor = double(mesh.ndof) / double(2 * (w + 1) * (w + 1));
  report.per_element_abs.resize(mesh.elements.size());

  // Phase-blind recovery may drive single-element products negative at
  // interfaces (stress and strain fits are not D-consistent there); those
  // are clamped elementwise. The inconsistency guard applies to the total
  // integral, which must stay nonnegative up to roundoff.
  std::vector<double> element_sums(mesh.elements.size());
  std::vector<double> raw_sums(mesh.elements.size());
  std::vector<double> magnitudes(mesh.elements.size());
  parallel_for(mesh.elements.size(), [&](std::size_t e) {
    const auto& el = mesh.elements[e];
    Eigen::Matrix<double, 4, 3> node_stress, node_strain;
    for (int c = 0; c < 4; ++c) {
      const auto& entry = recovered.value_at(el.corners[c], el.phase);
      node_stress.row(c) = entry.stress;
      node_strain.row(c) = entry.strain;
    }
    const double det_j = field.det_jacobian[e];
    double sum = 0.0;
    double magnitude = 0.0;
    for (int g = 0; g < 4; ++g) {
      const Eigen::Vector3d ds = (N.row(g) * node_stress).transpose() - field.stress[e][g];
      const Eigen::Vector3d de = (N.row(g) * node_strain).transpose() - field.strain[e][g];
      sum += ds.dot(de) * det_j;  // Voigt dot = tensor double contraction
      magnitude += (ds.cwiseAbs().dot(de.cwiseAbs())) * det_j;
    }
    raw_sums[e] = sum;
    magnitudes[e] = magnitude;
    element_sums[e] = std::max(0.0, sum);
    report.per_element_abs[e] = std::sqrt(element_sums[e]);
  });
  const double raw_total = pairwise_sum(raw_sums);
  const double total_magnitude = pairwise_sum(magnitudes);
  if (raw_total < -1e-14 * std::max(1.0, total_magnitude))
    throw std::runtime_error("estimate_error: negative error integral " +
                             std::to_string(raw_total) + " (inconsistent recovered field)");

  report.total_estimated = std::sqrt(pairwise_sum(element_sums));
  relative_element_errors(report, field);
  return report;
}

const std::vector<double>& relative_element_errors(ErrorReport& report,
                                                   const QuadraturePointField& field) {
  const QuadMesh& mesh = *field.mesh;
  if (report.per_element_abs.size() != mesh.elements.size())
    throw std::runtime_error("relative_element_errors: report does not match field");
  report.per_element_rel.assign(mesh.elements.size(), 0.0);
  report.zero_energy.assign(mesh.elements.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    double energy_sq = 0.0;
    for (int g = 0; g < 4; ++g)
      energy_sq += field.stress[e][g].dot(field.strain[e][g]) * field.det_jacobian[e];
    if (energy_sq > 0.0) {
      report.per_element_rel[e] = report.per_element_abs[e] / std::sqrt(energy_sq);
    } else {
      report.per_element_rel[e] = 0.0;
      report.zero_energy[e] = 1;
    }
  }
  return report.per_element_rel;
}

double compute_true_error(const SolvedCase& coarse, const SolvedCase& reference) {
  const QuadMesh& cm = coarse.mesh;
  const QuadMesh& rm = reference.mesh;
  if (std::abs(cm.grid->physical_size - rm.grid->physical_size) >
      1e-12 * cm.grid->physical_size)
    throw std::runtime_error("compute_true_error: domain size mismatch");
  if (rm.grid->width % cm.grid->width != 0)
    throw std::runtime_error("compute_true_error: reference grid does not refine the pixel grid");
  if (rm.elements.size() != (std::size_t)rm.grid->width * rm.grid->width)
    throw std::runtime_error("compute_true_error: reference mesh must be uniform");

  const int w = cm.grid->width;
  const double h = cm.grid->pixel_size();
  const auto pixel_map = cm.element_of_pixel();

  std::vector<double> sums(rm.elements.size());
  std::atomic<bool> outside{false};
  parallel_for(rm.elements.size(), [&](std::size_t e) {
    const auto& rel = rm.elements[e];
    const double det_j = reference.qp.det_jacobian[e];
    double sum = 0.0;
    for (int g = 0; g < 4; ++g) {
      const Eigen::Vector2d x = QuadraturePointField::gauss_point(rm, rel, g);
      // owning pixel, then owning coarse element via the quadtree ancestry
      const int ix = std::min(w - 1, (int)(x.x() / h));
      const int iy = std::min(w - 1, (int)(x.y() / h));
      const std::int32_t ce = pixel_map[(std::size_t)iy * w + ix];
      if (ce < 0) {
        outside = true;
        return;
      }
      const auto& cel = cm.elements[ce];
      const double L = cm.side_length(cel);
      const double xi = 2.0 * (x.x() - cm.element_x0(cel)) / L - 1.0;
      const double eta = 2.0 * (x.y() - cm.element_y0(cel)) / L - 1.0;
      Eigen::Matrix<double, 8, 1> u_e;
      for (int c = 0; c < 4; ++c) {
        u_e[2 * c] = coarse.displacement.u[2 * cel.corners[c]];
        u_e[2 * c + 1] = coarse.displacement.u[2 * cel.corners[c] + 1];
      }
      const Eigen::Vector3d eps_c = q4::strain_matrix(xi, eta, L) * u_e;
      const Eigen::Vector3d sig_c = coarse.material.stiffness(cel.phase) * eps_c;
      const Eigen::Vector3d ds = reference.qp.stress[e][g] - sig_c;
      const Eigen::Vector3d de = reference.qp.strain[e][g] - eps_c;
      sum += ds.dot(de) * det_j;
    }
    sums[e] = std::max(0.0, sum);
  });
  if (outside)
    throw std::runtime_error("compute_true_error: reference point outside coarse mesh");
  return std::sqrt(pairwise_sum(sums));
}

double effectivity_index(double estimated, double true_error) {
  if (!(true_error > 0.0))
    throw std::runtime_error("effectivity_index: true error must be positive");
  return estimated / true_error;
}

}  // namespace mf
