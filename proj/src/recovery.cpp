#include "mf/recovery.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "mf/parallel.hpp"

namespace mf {

const char* to_string(RecoveryScheme scheme) {
  switch (scheme) {
    case RecoveryScheme::spr_standard: return "standard_spr";
    case RecoveryScheme::spr_modified: return "modified_spr";
    case RecoveryScheme::averaging: return "averaging";
  }
  return "?";
}

namespace {

inline double monomial_value(Monomial m, const Eigen::Vector2d& p) {
  switch (m) {
    case Monomial::one: return 1.0;
    case Monomial::x: return p.x();
    case Monomial::y: return p.y();
    case Monomial::xy: return p.x() * p.y();
  }
  return 0.0;
}

constexpr double kSingularityRatio = 1e-10;

}  // namespace

Eigen::Matrix<double, 6, 1> PatchBasis::evaluate(const Eigen::Vector2d& p) const {
  Eigen::Matrix<double, 6, 1> out = Eigen::Matrix<double, 6, 1>::Zero();
  for (std::size_t t = 0; t < terms.size(); ++t)
    out += monomial_value(terms[t], p) * coefficients.row(t).transpose();
  return out;
}

PatchBasis fit_patch(std::span<const PatchSample> samples, std::span<const Monomial> terms) {
  const int m = (int)terms.size();
  if ((int)samples.size() < m)
    throw SingularPatchError("fit_patch: fewer samples than basis terms");

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, 6);
  Eigen::VectorXd P(m);
  for (const auto& s : samples) {
    for (int t = 0; t < m; ++t) P[t] = monomial_value(terms[t], s.position);
    A += P * P.transpose();
    b += P * s.value.transpose();
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[0] <= 0.0 || sv[m - 1] < kSingularityRatio * sv[0])
    throw SingularPatchError("fit_patch: singular normal-equation matrix");

  PatchBasis basis;
  basis.terms.assign(terms.begin(), terms.end());
  basis.coefficients = svd.solve(b);
  return basis;
}

CenterSamples superconvergent_samples(const QuadMesh& mesh, const QuadraturePointField& field) {
  CenterSamples out;
  out.stress.resize(mesh.elements.size());
  out.strain.resize(mesh.elements.size());
  // the bilinear fit of the 2x2 Gauss values evaluated at the centroid is
  // their componentwise mean
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    Eigen::Vector3d s = Eigen::Vector3d::Zero(), t = Eigen::Vector3d::Zero();
    for (int g = 0; g < QuadraturePointField::ngp; ++g) {
      s += field.stress[e][g];
      t += field.strain[e][g];
    }
    out.stress[e] = 0.25 * s;
    out.strain[e] = 0.25 * t;
  }
  return out;
}

const RecoveredNodalField::Entry& RecoveredNodalField::value_at(int node,
                                                                int element_phase) const {
  const auto& entries = per_node[node];
  for (const auto& entry : entries)
    if (entry.phase == element_phase) return entry;
  for (const auto& entry : entries)
    if (entry.phase == -1) return entry;
  throw std::runtime_error("recovered field: no value for node " + std::to_string(node) +
                           " phase " + std::to_string(element_phase));
}

namespace {

// Element patch around one node, optionally restricted to a phase and
// expanded ring-wise over node-sharing neighbors until it can support the
// full bilinear basis.
class PatchBuilder {
 public:
  PatchBuilder(const QuadMesh& mesh, const std::vector<std::vector<std::int32_t>>& incidence,
               const CenterSamples& samples)
      : mesh_(mesh), incidence_(incidence), samples_(samples) {}

  // elements geometrically surrounding a node: corner-incident ones plus,
  // for a hanging node, the coarse element whose edge carries it
  std::vector<std::int32_t> surrounding(int node) const {
    std::vector<std::int32_t> out = incidence_[node];
    const auto& n = mesh_.nodes[node];
    if (n.hanging) {
      for (std::int32_t e : incidence_[n.masters[0]]) {
        const auto& el = mesh_.elements[e];
        if (std::find(el.corners.begin(), el.corners.end(), n.masters[1]) != el.corners.end()) {
          out.push_back(e);
          break;
        }
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // breadth-first ring expansion; a ring is appended as a whole so the
  // result does not depend on traversal order within the ring
  void expand(std::vector<std::int32_t>& patch, int phase, std::size_t target) const {
    while (patch.size() < target) {
      std::vector<std::int32_t> ring;
      auto seen = [&](std::int32_t e) {
        return std::find(patch.begin(), patch.end(), e) != patch.end() ||
               std::find(ring.begin(), ring.end(), e) != ring.end();
      };
      for (std::int32_t e : patch)
        for (int c = 0; c < 4; ++c)
          for (std::int32_t nb : incidence_[mesh_.elements[e].corners[c]]) {
            if (phase >= 0 && mesh_.elements[nb].phase != phase) continue;
            if (seen(nb)) continue;
            ring.push_back(nb);
          }
      if (ring.empty()) return;  // phase (or mesh) exhausted
      std::sort(ring.begin(), ring.end());
      patch.insert(patch.end(), ring.begin(), ring.end());
    }
  }

  // least-squares fit over the patch evaluated at the node, with the basis
  // reduction order xy -> y -> x on singular layouts
  RecoveredNodalField::Entry fit_at_node(int node, const std::vector<std::int32_t>& patch,
                                         int stored_phase) const {
    const Eigen::Vector2d node_pos(mesh_.node_x(node), mesh_.node_y(node));
    std::vector<PatchSample> local;
    local.reserve(patch.size());
    double scale = 0.0;
    for (std::int32_t e : patch) {
      const auto& el = mesh_.elements[e];
      const double L = mesh_.side_length(el);
      const Eigen::Vector2d center(mesh_.element_x0(el) + 0.5 * L,
                                   mesh_.element_y0(el) + 0.5 * L);
      scale = std::max(scale, (center - node_pos).norm());
      PatchSample s;
      s.position = center - node_pos;
      s.value << samples_.stress[e], samples_.strain[e];
      local.push_back(std::move(s));
    }
    if (scale <= 0.0) scale = 1.0;
    for (auto& s : local) s.position /= scale;

    static const std::vector<Monomial> bases[4] = {
        {Monomial::one, Monomial::x, Monomial::y, Monomial::xy},
        {Monomial::one, Monomial::x, Monomial::y},
        {Monomial::one, Monomial::x},
        {Monomial::one}};
    for (const auto& basis : bases) {
      if (local.size() < basis.size()) continue;
      try {
        const PatchBasis fit = fit_patch(local, basis);
        const Eigen::Matrix<double, 6, 1> v = fit.evaluate(Eigen::Vector2d::Zero());
        return RecoveredNodalField::Entry{stored_phase, v.head<3>(), v.tail<3>()};
      } catch (const SingularPatchError&) {
        continue;
      }
    }
    throw std::runtime_error("recovery: unresolvable patch at node " + std::to_string(node));
  }

 private:
  const QuadMesh& mesh_;
  const std::vector<std::vector<std::int32_t>>& incidence_;
  const CenterSamples& samples_;
};

std::vector<std::int32_t> filter_phase(const std::vector<std::int32_t>& elements,
                                       const QuadMesh& mesh, int phase) {
  std::vector<std::int32_t> out;
  for (std::int32_t e : elements)
    if (mesh.elements[e].phase == phase) out.push_back(e);
  return out;
}

}  // namespace

RecoveredNodalField spr_standard(const QuadMesh& mesh, const QuadraturePointField& field) {
  const auto incidence = mesh.corner_incidence();
  const auto samples = superconvergent_samples(mesh, field);
  const PatchBuilder builder(mesh, incidence, samples);

  RecoveredNodalField out;
  out.scheme = RecoveryScheme::spr_standard;
  out.per_node.resize(mesh.nodes.size());
  parallel_for(mesh.nodes.size(), [&](std::size_t v) {
    auto patch = builder.surrounding((int)v);
    // hanging nodes keep their three surrounding elements (reduced basis);
    // everything else expands toward the interior until four samples exist
    if (!mesh.nodes[v].hanging && patch.size() < 4) builder.expand(patch, -1, 4);
    out.per_node[v] = {builder.fit_at_node((int)v, patch, -1)};
  });
  return out;
}

RecoveredNodalField spr_modified(const QuadMesh& mesh, const QuadraturePointField& field) {
  const auto incidence = mesh.corner_incidence();
  const auto samples = superconvergent_samples(mesh, field);
  const PatchBuilder builder(mesh, incidence, samples);

  RecoveredNodalField out;
  out.scheme = RecoveryScheme::spr_modified;
  out.per_node.resize(mesh.nodes.size());
  parallel_for(mesh.nodes.size(), [&](std::size_t v) {
    const auto surrounding = builder.surrounding((int)v);
    std::vector<int> phases;
    for (std::int32_t e : surrounding) phases.push_back(mesh.elements[e].phase);
    std::sort(phases.begin(), phases.end());
    phases.erase(std::unique(phases.begin(), phases.end()), phases.end());

    std::vector<RecoveredNodalField::Entry> entries;
    for (int phase : phases) {
      auto patch = filter_phase(surrounding, mesh, phase);
      if (!mesh.nodes[v].hanging && patch.size() < 4) builder.expand(patch, phase, 4);
      entries.push_back(builder.fit_at_node((int)v, patch, phase));
    }
    out.per_node[v] = std::move(entries);
  });
  return out;
}

RecoveredNodalField averaging_recovery(const QuadMesh& mesh, const QuadraturePointField& field) {
  // shape functions evaluated at the 2x2 Gauss points; inverting this matrix
  // extrapolates Gauss values to the element corners
  Eigen::Matrix4d N;
  for (int g = 0; g < 4; ++g) {
    const auto ng = q4::shape(q4::gauss_points[g][0], q4::gauss_points[g][1]);
    for (int i = 0; i < 4; ++i) N(g, i) = ng[i];
  }
  const Eigen::Matrix4d Ninv = N.inverse();

  struct Accumulator {
    Eigen::Vector3d stress = Eigen::Vector3d::Zero();
    Eigen::Vector3d strain = Eigen::Vector3d::Zero();
    int count = 0;
  };

  const auto incidence = mesh.corner_incidence();
  RecoveredNodalField out;
  out.scheme = RecoveryScheme::averaging;
  out.per_node.resize(mesh.nodes.size());

  parallel_for(mesh.nodes.size(), [&](std::size_t v) {
    // phase -> running mean of elementwise corner extrapolations
    std::vector<std::pair<int, Accumulator>> acc;
    for (std::int32_t e : incidence[v]) {
      const auto& el = mesh.elements[e];
      int corner = 0;
      while (el.corners[corner] != (std::int32_t)v) ++corner;
      Eigen::Matrix<double, 4, 3> gp_stress, gp_strain;
      for (int g = 0; g < 4; ++g) {
        gp_stress.row(g) = field.stress[e][g];
        gp_strain.row(g) = field.strain[e][g];
      }
      const Eigen::Vector3d node_stress = (Ninv.row(corner) * gp_stress).transpose();
      const Eigen::Vector3d node_strain = (Ninv.row(corner) * gp_strain).transpose();
      auto it = std::find_if(acc.begin(), acc.end(),
                             [&](const auto& p) { return p.first == el.phase; });
      if (it == acc.end()) {
        acc.emplace_back(el.phase, Accumulator{});
        it = std::prev(acc.end());
      }
      it->second.stress += node_stress;
      it->second.strain += node_strain;
      it->second.count += 1;
    }
    std::sort(acc.begin(), acc.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<RecoveredNodalField::Entry> entries;
    entries.reserve(acc.size());
    for (const auto& [phase, a] : acc)
      entries.push_back({phase, a.stress / a.count, a.strain / a.count});
    out.per_node[v] = std::move(entries);
  });
  return out;
}

RecoveredNodalField recover(RecoveryScheme scheme, const QuadMesh& mesh,
                            const QuadraturePointField& field) {
  switch (scheme) {
    case RecoveryScheme::spr_standard: return spr_standard(mesh, field);
    case RecoveryScheme::spr_modified: return spr_modified(mesh, field);
    case RecoveryScheme::averaging: return averaging_recovery(mesh, field);
  }
  throw std::runtime_error("unknown recovery scheme");
}

}  // namespace mf
