#pragma once

#include <optional>
#include <vector>

#include "mf/fe.hpp"
#include "mf/recovery.hpp"

namespace mf {

/// Energy-norm error accounting for one mesh/load/scheme combination.
struct ErrorReport {
  RecoveryScheme scheme = RecoveryScheme::spr_modified;
  double total_estimated = 0.0;
  std::optional<double> total_true;
  std::optional<double> effectivity;
  std::vector<double> per_element_abs;
  std::vector<double> per_element_rel;
  std::vector<char> zero_energy;  // element had vanishing energy norm
  int ndof = 0;
  double reduction_factor = 1.0;
};

/// Recovery-based estimate: elementwise Gauss sum of
/// (sigma* - sigma_h):(eps* - eps_h) with the recovered fields interpolated
/// bilinearly from the nodal values of the element's own phase.
ErrorReport estimate_error(const QuadMesh& mesh, const QuadraturePointField& field,
                           const RecoveredNodalField& recovered);

/// True error against a reference run whose mesh uniformly refines the pixel
/// grid; coarse stresses/strains are evaluated at every reference Gauss
/// point through the pixel-to-element ancestry.
double compute_true_error(const SolvedCase& coarse, const SolvedCase& reference);

double effectivity_index(double estimated, double true_error);

/// Elementwise error / elementwise energy norm; zero-energy elements report
/// ratio 0 and are flagged.
const std::vector<double>& relative_element_errors(ErrorReport& report,
                                                   const QuadraturePointField& field);

}  // namespace mf
