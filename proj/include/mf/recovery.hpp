#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

#include "mf/fe.hpp"
#include "mf/quad_mesh.hpp"

namespace mf {

enum class RecoveryScheme { spr_standard, spr_modified, averaging };

const char* to_string(RecoveryScheme scheme);

enum class Monomial { one, x, y, xy };

struct SingularPatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One recovery sample: a superconvergent point with the six stress/strain
/// components stacked [s11,s22,s12,e11,e22,g12].
struct PatchSample {
  Eigen::Vector2d position;
  Eigen::Matrix<double, 6, 1> value;
};

/// Least-squares polynomial fit over a patch; coefficients are per component.
struct PatchBasis {
  std::vector<Monomial> terms;
  Eigen::MatrixXd coefficients;  // terms.size() x 6

  Eigen::Matrix<double, 6, 1> evaluate(const Eigen::Vector2d& p) const;
};

/// Solves the patch normal equations; throws SingularPatchError when the
/// sample layout cannot determine the requested terms (collinear samples,
/// fewer samples than terms).
PatchBasis fit_patch(std::span<const PatchSample> samples, std::span<const Monomial> terms);

/// Stress/strain at the superconvergent point (element centroid for p=1),
/// obtained from the bilinear fit of the 2x2 Gauss values.
struct CenterSamples {
  std::vector<Eigen::Vector3d> stress;  // per element
  std::vector<Eigen::Vector3d> strain;
};

CenterSamples superconvergent_samples(const QuadMesh& mesh, const QuadraturePointField& field);

/// Recovered nodal stresses/strains. Interface nodes of the phase-aware
/// schemes hold one value per incident phase (duplex values); the standard
/// scheme stores a single phase-blind value (phase == -1).
struct RecoveredNodalField {
  RecoveryScheme scheme = RecoveryScheme::spr_standard;
  struct Entry {
    int phase;
    Eigen::Vector3d stress;
    Eigen::Vector3d strain;
  };
  std::vector<std::vector<Entry>> per_node;

  const Entry& value_at(int node, int element_phase) const;
  int entry_count(int node) const { return (int)per_node[node].size(); }
};

RecoveredNodalField spr_standard(const QuadMesh& mesh, const QuadraturePointField& field);
RecoveredNodalField spr_modified(const QuadMesh& mesh, const QuadraturePointField& field);
RecoveredNodalField averaging_recovery(const QuadMesh& mesh, const QuadraturePointField& field);

RecoveredNodalField recover(RecoveryScheme scheme, const QuadMesh& mesh,
                            const QuadraturePointField& field);

}  // namespace mf
