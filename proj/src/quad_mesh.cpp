#include "mf/quad_mesh.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>

namespace mf {

namespace {

inline std::int64_t lattice_key(std::int32_t gx, std::int32_t gy) {
  return (std::int64_t)gy << 32 | (std::uint32_t)gx;
}

}  // namespace

int QuadMesh::free_node_count() const {
  int n = 0;
  for (const auto& node : nodes)
    if (!node.hanging) ++n;
  return n;
}

std::vector<std::vector<std::int32_t>> QuadMesh::corner_incidence() const {
  std::vector<std::vector<std::int32_t>> inc(nodes.size());
  for (std::int32_t e = 0; e < (std::int32_t)elements.size(); ++e)
    for (int c = 0; c < 4; ++c) inc[elements[e].corners[c]].push_back(e);
  return inc;
}

std::vector<std::int32_t> QuadMesh::element_of_pixel() const {
  const int w = grid->width, hh = grid->height;
  std::vector<std::int32_t> map((std::size_t)w * hh, -1);
  for (std::int32_t e = 0; e < (std::int32_t)elements.size(); ++e) {
    const auto& el = elements[e];
    const int s = el.pixel_span();
    for (int iy = el.oy; iy < el.oy + s; ++iy)
      for (int ix = el.ox; ix < el.ox + s; ++ix) map[(std::size_t)iy * w + ix] = e;
  }
  return map;
}

void QuadMesh::validate() const {
  const int w = grid->width;
  std::vector<char> covered((std::size_t)w * grid->height, 0);
  for (const auto& el : elements) {
    const int s = el.pixel_span();
    if (el.ox < 0 || el.oy < 0 || el.ox + s > w || el.oy + s > grid->height)
      throw std::runtime_error("mesh: element outside domain");
    for (int iy = el.oy; iy < el.oy + s; ++iy)
      for (int ix = el.ox; ix < el.ox + s; ++ix) {
        auto& c = covered[(std::size_t)iy * w + ix];
        if (c) throw std::runtime_error("mesh: overlapping elements");
        c = 1;
        if (grid->phase_cell(ix, iy) != el.phase)
          throw std::runtime_error("mesh: element phase differs from covered pixel");
      }
  }
  for (char c : covered)
    if (!c) throw std::runtime_error("mesh: uncovered pixel");
  for (const auto& con : constraints) {
    const auto& hn = nodes[con.hanging];
    const auto& m0 = nodes[con.masters[0]];
    const auto& m1 = nodes[con.masters[1]];
    if (!hn.hanging) throw std::runtime_error("mesh: constraint on non-hanging node");
    if (m0.hanging || m1.hanging) throw std::runtime_error("mesh: hanging master node");
    if (2 * hn.gx != m0.gx + m1.gx || 2 * hn.gy != m0.gy + m1.gy)
      throw std::runtime_error("mesh: hanging node not at master midpoint");
  }
  if (ndof != 2 * free_node_count()) throw std::runtime_error("mesh: stale ndof");
}

QuadMesh build_uniform_mesh(std::shared_ptr<const PhaseGrid> grid) {
  if (!grid) throw std::runtime_error("build_uniform_mesh: null grid");
  const int w = grid->width;
  QuadMesh mesh;
  mesh.grid = std::move(grid);

  mesh.nodes.resize((std::size_t)(w + 1) * (w + 1));
  for (std::int32_t gy = 0; gy <= w; ++gy)
    for (std::int32_t gx = 0; gx <= w; ++gx)
      mesh.nodes[(std::size_t)gy * (w + 1) + gx] = MeshNode{gx, gy, false, {-1, -1}};

  mesh.elements.resize((std::size_t)w * w);
  for (std::int32_t iy = 0; iy < w; ++iy)
    for (std::int32_t ix = 0; ix < w; ++ix) {
      QuadElement el;
      el.ox = ix;
      el.oy = iy;
      el.level = 0;
      el.phase = mesh.grid->phase_cell(ix, iy);
      const std::int32_t sw = iy * (w + 1) + ix;
      el.corners = {sw, sw + 1, sw + w + 2, sw + w + 1};
      mesh.elements[(std::size_t)iy * w + ix] = el;
    }
  mesh.ndof = 2 * (w + 1) * (w + 1);
  return mesh;
}

std::vector<char> phase_boundary_nodes(const QuadMesh& mesh) {
  std::vector<std::int32_t> first_phase(mesh.nodes.size(), -1);
  std::vector<char> boundary(mesh.nodes.size(), 0);
  for (const auto& el : mesh.elements)
    for (int c = 0; c < 4; ++c) {
      auto n = el.corners[c];
      if (first_phase[n] < 0)
        first_phase[n] = el.phase;
      else if (first_phase[n] != el.phase)
        boundary[n] = 1;
    }
  return boundary;
}

MarkSet mark_basic(const QuadMesh& mesh, const std::vector<char>& boundary_nodes) {
  if (boundary_nodes.size() != mesh.nodes.size())
    throw std::runtime_error("mark_basic: boundary node set does not match mesh");
  MarkSet marks(mesh.elements.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    marks[e] = !(boundary_nodes[el.corners[0]] || boundary_nodes[el.corners[1]] ||
                 boundary_nodes[el.corners[2]] || boundary_nodes[el.corners[3]]);
  }
  return marks;
}

namespace {

std::vector<char> constrained_nodes(const QuadMesh& mesh) {
  std::vector<char> constrained(mesh.nodes.size(), 0);
  for (const auto& con : mesh.constraints) {
    constrained[con.hanging] = 1;
    constrained[con.masters[0]] = 1;
    constrained[con.masters[1]] = 1;
  }
  return constrained;
}

}  // namespace

MarkSet mark_hard(const QuadMesh& mesh) {
  const auto boundary = phase_boundary_nodes(mesh);
  const auto constrained = constrained_nodes(mesh);
  MarkSet marks(mesh.elements.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    bool excluded = false;
    for (int c = 0; c < 4 && !excluded; ++c) {
      auto n = el.corners[c];
      excluded = boundary[n] || constrained[n];
    }
    marks[e] = !excluded;
  }
  return marks;
}

MarkSet mark_soft(const QuadMesh& mesh) {
  const auto boundary = phase_boundary_nodes(mesh);
  const auto constrained = constrained_nodes(mesh);

  // Per-element exclusion flags of the hard criterion, then one element of
  // buffer: an element is unmarked as soon as any node-neighbor is excluded.
  std::vector<char> excluded(mesh.elements.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    for (int c = 0; c < 4; ++c) {
      auto n = el.corners[c];
      if (boundary[n] || constrained[n]) {
        excluded[e] = 1;
        break;
      }
    }
  }

  std::vector<char> node_touches_excluded(mesh.nodes.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e)
    if (excluded[e])
      for (int c = 0; c < 4; ++c) node_touches_excluded[mesh.elements[e].corners[c]] = 1;

  MarkSet marks(mesh.elements.size(), 0);
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    marks[e] = !(node_touches_excluded[el.corners[0]] || node_touches_excluded[el.corners[1]] ||
                 node_touches_excluded[el.corners[2]] || node_touches_excluded[el.corners[3]]);
  }
  return marks;
}

QuadMesh coarsen(const QuadMesh& mesh, const MarkSet& marks) {
  if (marks.size() != mesh.elements.size())
    throw std::runtime_error("coarsen: mark set does not match mesh");

  // Group same-level elements into quadtree-aligned 2x2 blocks anchored at
  // the domain corner. Quadrant order: SW, SE, NW, NE.
  struct Block {
    std::array<std::int32_t, 4> member{-1, -1, -1, -1};
  };
  std::unordered_map<std::int64_t, Block> blocks;
  blocks.reserve(mesh.elements.size() / 2);
  auto block_key = [](std::int32_t level, std::int32_t bx, std::int32_t by) {
    return ((std::int64_t)level << 48) | ((std::int64_t)by << 24) | bx;
  };
  for (std::int32_t e = 0; e < (std::int32_t)mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    const std::int32_t s = el.pixel_span();
    const std::int32_t bs = s * 2;
    const std::int32_t bx = (el.ox / bs) * bs;
    const std::int32_t by = (el.oy / bs) * bs;
    const int q = (el.ox - bx) / s + 2 * ((el.oy - by) / s);
    blocks[block_key(el.level, bx, by)].member[q] = e;
  }

  std::vector<char> merged(mesh.elements.size(), 0);
  struct MergeJob {
    std::int32_t anchor;  // SW member; defines origin, level, phase
  };
  std::vector<MergeJob> jobs;
  for (const auto& [key, blk] : blocks) {
    bool complete = true;
    for (int q = 0; q < 4; ++q)
      complete = complete && blk.member[q] >= 0 && marks[blk.member[q]];
    if (!complete) continue;
    const int phase = mesh.elements[blk.member[0]].phase;
    bool same_phase = true;
    for (int q = 1; q < 4; ++q) same_phase = same_phase && mesh.elements[blk.member[q]].phase == phase;
    if (!same_phase) continue;
    for (int q = 0; q < 4; ++q) merged[blk.member[q]] = 1;
    jobs.push_back(MergeJob{blk.member[0]});
  }

  QuadMesh out;
  out.grid = mesh.grid;

  // New element list: survivors in original order, then merged elements in
  // row-major block-origin order so the result is enumeration independent.
  struct ProtoElement {
    std::int32_t ox, oy, level, phase;
  };
  std::vector<ProtoElement> proto;
  proto.reserve(mesh.elements.size());
  for (std::int32_t e = 0; e < (std::int32_t)mesh.elements.size(); ++e) {
    if (merged[e]) continue;
    const auto& el = mesh.elements[e];
    proto.push_back({el.ox, el.oy, el.level, el.phase});
  }
  for (const auto& job : jobs) {
    const auto& el = mesh.elements[job.anchor];
    proto.push_back({el.ox, el.oy, el.level + 1, el.phase});
  }
  std::sort(proto.begin(), proto.end(), [](const ProtoElement& a, const ProtoElement& b) {
    return std::tie(a.oy, a.ox) < std::tie(b.oy, b.ox);
  });

  // Collect referenced corner lattice points; node ids ordered by (gy, gx).
  std::vector<std::int64_t> corner_keys;
  corner_keys.reserve(proto.size() * 4);
  for (const auto& p : proto) {
    const std::int32_t s = 1 << p.level;
    corner_keys.push_back(lattice_key(p.ox, p.oy));
    corner_keys.push_back(lattice_key(p.ox + s, p.oy));
    corner_keys.push_back(lattice_key(p.ox + s, p.oy + s));
    corner_keys.push_back(lattice_key(p.ox, p.oy + s));
  }
  std::sort(corner_keys.begin(), corner_keys.end());
  corner_keys.erase(std::unique(corner_keys.begin(), corner_keys.end()), corner_keys.end());

  std::unordered_map<std::int64_t, std::int32_t> node_id;
  node_id.reserve(corner_keys.size() * 2);
  out.nodes.reserve(corner_keys.size());
  for (std::int32_t id = 0; id < (std::int32_t)corner_keys.size(); ++id) {
    const std::int64_t key = corner_keys[id];
    node_id.emplace(key, id);
    out.nodes.push_back(MeshNode{(std::int32_t)(key & 0xffffffff), (std::int32_t)(key >> 32),
                                 false, {-1, -1}});
  }

  out.elements.reserve(proto.size());
  for (const auto& p : proto) {
    const std::int32_t s = 1 << p.level;
    QuadElement el;
    el.ox = p.ox;
    el.oy = p.oy;
    el.level = p.level;
    el.phase = p.phase;
    el.corners = {node_id.at(lattice_key(p.ox, p.oy)), node_id.at(lattice_key(p.ox + s, p.oy)),
                  node_id.at(lattice_key(p.ox + s, p.oy + s)),
                  node_id.at(lattice_key(p.ox, p.oy + s))};
    out.elements.push_back(el);
  }

  // Kept nodes strictly inside an element edge are hanging. The mark
  // criteria keep level jumps at one, so such a node must sit at the edge
  // midpoint (Eq.-(1)-style constraint); anything else is a mark pattern
  // this mesh format cannot represent.
  auto scan_edge = [&](std::int32_t ax, std::int32_t ay, std::int32_t bx, std::int32_t by,
                       std::int32_t a_id, std::int32_t b_id) {
    const std::int32_t dx = (bx > ax) - (bx < ax);
    const std::int32_t dy = (by > ay) - (by < ay);
    for (std::int32_t gx = ax + dx, gy = ay + dy; gx != bx || gy != by; gx += dx, gy += dy) {
      auto it = node_id.find(lattice_key(gx, gy));
      if (it == node_id.end()) continue;
      const std::int32_t v = it->second;
      if (2 * gx != ax + bx || 2 * gy != ay + by)
        throw std::runtime_error("coarsen: node at non-midpoint edge position; mark set "
                                 "produces more than one hanging node per edge");
      auto& node = out.nodes[v];
      if (node.hanging && !((node.masters[0] == a_id && node.masters[1] == b_id) ||
                            (node.masters[0] == b_id && node.masters[1] == a_id)))
        throw std::runtime_error("coarsen: conflicting hanging-node masters");
      node.hanging = true;
      node.masters = {a_id, b_id};
    }
  };
  for (const auto& el : out.elements) {
    const std::int32_t s = el.pixel_span();
    if (s == 1) continue;
    const std::int32_t x0 = el.ox, y0 = el.oy, x1 = el.ox + s, y1 = el.oy + s;
    scan_edge(x0, y0, x1, y0, el.corners[0], el.corners[1]);
    scan_edge(x1, y0, x1, y1, el.corners[1], el.corners[2]);
    scan_edge(x1, y1, x0, y1, el.corners[2], el.corners[3]);
    scan_edge(x0, y1, x0, y0, el.corners[3], el.corners[0]);
  }

  for (std::int32_t v = 0; v < (std::int32_t)out.nodes.size(); ++v) {
    const auto& node = out.nodes[v];
    if (!node.hanging) continue;
    if (out.nodes[node.masters[0]].hanging || out.nodes[node.masters[1]].hanging)
      throw std::runtime_error("coarsen: hanging node with hanging master");
    out.constraints.push_back(HangingConstraint{v, node.masters});
  }
  out.ndof = 2 * out.free_node_count();
  return out;
}

std::vector<QuadMesh> coarsen_pipeline(std::shared_ptr<const PhaseGrid> grid,
                                       CoarsenAlgorithm algorithm, int steps) {
  if (steps < 0) throw std::runtime_error("coarsen_pipeline: negative step count");
  std::vector<QuadMesh> meshes;
  meshes.push_back(build_uniform_mesh(std::move(grid)));
  for (int k = 0; k < steps; ++k) {
    const auto marks =
        algorithm == CoarsenAlgorithm::hard ? mark_hard(meshes.back()) : mark_soft(meshes.back());
    meshes.push_back(coarsen(meshes.back(), marks));
  }
  return meshes;
}

nlohmann::json mesh_to_json(const QuadMesh& mesh) {
  nlohmann::json j;
  j["grid"] = {{"width", mesh.grid->width},
               {"height", mesh.grid->height},
               {"physical_size", mesh.grid->physical_size}};
  j["ndof"] = mesh.ndof;
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (std::size_t v = 0; v < mesh.nodes.size(); ++v) {
    const auto& node = mesh.nodes[v];
    nlohmann::json nj = {{"id", v},
                         {"x", mesh.node_x((int)v)},
                         {"y", mesh.node_y((int)v)},
                         {"gx", node.gx},
                         {"gy", node.gy}};
    if (node.hanging) nj["masters"] = {node.masters[0], node.masters[1]};
    nodes.push_back(std::move(nj));
  }
  auto& elements = j["elements"] = nlohmann::json::array();
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    const auto& el = mesh.elements[e];
    elements.push_back({{"id", e},
                        {"corners", {el.corners[0], el.corners[1], el.corners[2], el.corners[3]}},
                        {"level", el.level},
                        {"phase", el.phase},
                        {"origin", {el.ox, el.oy}}});
  }
  return j;
}

QuadMesh mesh_from_json(const nlohmann::json& j, std::shared_ptr<const PhaseGrid> grid) {
  QuadMesh mesh;
  const int width = j.at("grid").at("width").get<int>();
  const int height = j.at("grid").at("height").get<int>();
  const double physical_size = j.at("grid").at("physical_size").get<double>();

  mesh.nodes.reserve(j.at("nodes").size());
  for (const auto& nj : j.at("nodes")) {
    MeshNode node;
    node.gx = nj.at("gx").get<std::int32_t>();
    node.gy = nj.at("gy").get<std::int32_t>();
    if (nj.contains("masters")) {
      node.hanging = true;
      node.masters = {nj["masters"][0].get<std::int32_t>(), nj["masters"][1].get<std::int32_t>()};
    }
    mesh.nodes.push_back(node);
  }
  mesh.elements.reserve(j.at("elements").size());
  for (const auto& ej : j.at("elements")) {
    QuadElement el;
    const auto& c = ej.at("corners");
    el.corners = {c[0].get<std::int32_t>(), c[1].get<std::int32_t>(), c[2].get<std::int32_t>(),
                  c[3].get<std::int32_t>()};
    el.level = ej.at("level").get<std::int32_t>();
    el.phase = ej.at("phase").get<std::int32_t>();
    el.ox = ej.at("origin")[0].get<std::int32_t>();
    el.oy = ej.at("origin")[1].get<std::int32_t>();
    mesh.elements.push_back(el);
  }
  for (std::int32_t v = 0; v < (std::int32_t)mesh.nodes.size(); ++v)
    if (mesh.nodes[v].hanging)
      mesh.constraints.push_back(HangingConstraint{v, mesh.nodes[v].masters});

  if (grid) {
    if (grid->width != width || grid->height != height)
      throw std::runtime_error("mesh_from_json: grid dimensions do not match");
    mesh.grid = std::move(grid);
  } else {
    // Reconstruct the phase raster from the element cover.
    std::vector<int> labels((std::size_t)width * height, 0);
    for (const auto& el : mesh.elements) {
      const int s = el.pixel_span();
      for (int iy = el.oy; iy < el.oy + s; ++iy)
        for (int ix = el.ox; ix < el.ox + s; ++ix)
          labels[(std::size_t)(height - 1 - iy) * width + ix] = el.phase;
    }
    mesh.grid = std::make_shared<PhaseGrid>(width, height, std::move(labels), physical_size);
  }
  mesh.ndof = 2 * mesh.free_node_count();
  return mesh;
}

}  // namespace mf
