#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "json.hpp"
#include "mf/phase_grid.hpp"

namespace mf {

/// Mesh node on the pixel lattice. Positions are integer multiples of the
/// pixel size h; (gx, gy) are the lattice coordinates, y measured from the
/// bottom of the domain. A hanging node is constrained to the midpoint of
/// its two master nodes and carries no degrees of freedom.
struct MeshNode {
  std::int32_t gx = 0, gy = 0;
  bool hanging = false;
  std::array<std::int32_t, 2> masters{-1, -1};
};

/// Axis-aligned square element covering the pixel block
/// [ox, ox+2^level) x [oy, oy+2^level) in mesh-oriented pixel coordinates.
/// Corner nodes are stored counterclockwise: SW, SE, NE, NW.
struct QuadElement {
  std::array<std::int32_t, 4> corners{};
  std::int32_t level = 0;
  std::int32_t phase = 0;
  std::int32_t ox = 0, oy = 0;

  std::int32_t pixel_span() const { return 1 << level; }
};

struct HangingConstraint {
  std::int32_t hanging;
  std::array<std::int32_t, 2> masters;
};

struct QuadMesh {
  std::shared_ptr<const PhaseGrid> grid;
  std::vector<MeshNode> nodes;
  std::vector<QuadElement> elements;
  std::vector<HangingConstraint> constraints;
  int ndof = 0;  // 2 x (free nodes), before boundary conditions

  double h() const { return grid->pixel_size(); }
  double node_x(int id) const { return nodes[id].gx * h(); }
  double node_y(int id) const { return nodes[id].gy * h(); }
  double side_length(const QuadElement& e) const { return e.pixel_span() * h(); }
  double element_x0(const QuadElement& e) const { return e.ox * h(); }
  double element_y0(const QuadElement& e) const { return e.oy * h(); }

  int node_count() const { return (int)nodes.size(); }
  int element_count() const { return (int)elements.size(); }
  int free_node_count() const;
  int hanging_node_count() const { return (int)constraints.size(); }

  /// Elements incident to each node through its corner list.
  std::vector<std::vector<std::int32_t>> corner_incidence() const;

  /// Element id owning each pixel, indexed iy*width + ix (mesh orientation).
  std::vector<std::int32_t> element_of_pixel() const;

  void validate() const;  // cover, purity, conformity; throws on violation
};

QuadMesh build_uniform_mesh(std::shared_ptr<const PhaseGrid> grid);

/// Nodes whose incident elements carry two or more distinct phases.
std::vector<char> phase_boundary_nodes(const QuadMesh& mesh);

using MarkSet = std::vector<char>;  // one flag per element

MarkSet mark_basic(const QuadMesh& mesh, const std::vector<char>& boundary_nodes);
MarkSet mark_hard(const QuadMesh& mesh);
MarkSet mark_soft(const QuadMesh& mesh);

/// Merge every quadtree-aligned 2x2 block of same-level, same-phase,
/// all-marked siblings into one element of doubled side length. Marked
/// elements not forming such a block are left unchanged.
QuadMesh coarsen(const QuadMesh& mesh, const MarkSet& marks);

enum class CoarsenAlgorithm { hard, soft };

std::vector<QuadMesh> coarsen_pipeline(std::shared_ptr<const PhaseGrid> grid,
                                       CoarsenAlgorithm algorithm, int steps);

nlohmann::json mesh_to_json(const QuadMesh& mesh);
QuadMesh mesh_from_json(const nlohmann::json& j,
                        std::shared_ptr<const PhaseGrid> grid = nullptr);

}  // namespace mf
