#include "mf/field_export.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace mf {

namespace {

void check_lengths(const FieldSnapshot& snapshot) {
  if (!snapshot.mesh) return;
  const std::size_t n_el = snapshot.mesh->elements.size();
  const std::size_t n_pt = snapshot.mesh->nodes.size();
  for (const auto& f : snapshot.cell_fields)
    if (f.values.size() != n_el)
      throw std::runtime_error("export: cell field '" + f.name + "' length mismatch");
  for (const auto& f : snapshot.point_vectors)
    if (f.values.size() != 2 * n_pt)
      throw std::runtime_error("export: point field '" + f.name + "' length mismatch");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void export_vtk(const FieldSnapshot& snapshot, const std::string& path) {
  check_lengths(snapshot);
  if (!snapshot.mesh) throw std::runtime_error("export_vtk: snapshot has no mesh");
  const QuadMesh& mesh = *snapshot.mesh;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_vtk: cannot open " + path);

  out << "# vtk DataFile Version 3.0\n";
  std::string title = "microfe";
  for (const auto& [k, v] : snapshot.metadata) title += " " + k + "=" + v;
  out << title << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";

  out << "POINTS " << mesh.nodes.size() << " double\n";
  for (std::size_t v = 0; v < mesh.nodes.size(); ++v)
    out << format_double(mesh.node_x((int)v)) << ' ' << format_double(mesh.node_y((int)v))
        << " 0\n";

  const std::size_t n_el = mesh.elements.size();
  out << "CELLS " << n_el << ' ' << 5 * n_el << '\n';
  for (const auto& el : mesh.elements)
    out << "4 " << el.corners[0] << ' ' << el.corners[1] << ' ' << el.corners[2] << ' '
        << el.corners[3] << '\n';
  out << "CELL_TYPES " << n_el << '\n';
  for (std::size_t e = 0; e < n_el; ++e) out << "9\n";  // VTK_QUAD

  if (!snapshot.cell_fields.empty()) {
    out << "CELL_DATA " << n_el << '\n';
    for (const auto& f : snapshot.cell_fields) {
      out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : f.values) out << format_double(v) << '\n';
    }
  }
  if (!snapshot.point_vectors.empty()) {
    out << "POINT_DATA " << mesh.nodes.size() << '\n';
    for (const auto& f : snapshot.point_vectors) {
      out << "VECTORS " << f.name << " double\n";
      for (std::size_t v = 0; v < mesh.nodes.size(); ++v)
        out << format_double(f.values[2 * v]) << ' ' << format_double(f.values[2 * v + 1])
            << " 0\n";
    }
  }
  if (!out) throw std::runtime_error("export_vtk: write failed for " + path);
}

void export_csv(const FieldSnapshot& snapshot, const std::string& path) {
  check_lengths(snapshot);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_csv: cannot open " + path);

  out << "element,level,phase";
  for (const auto& f : snapshot.cell_fields) out << ',' << f.name;
  out << '\n';
  if (!snapshot.mesh) return;  // header-only table

  const QuadMesh& mesh = *snapshot.mesh;
  for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
    out << e << ',' << mesh.elements[e].level << ',' << mesh.elements[e].phase;
    for (const auto& f : snapshot.cell_fields) out << ',' << format_double(f.values[e]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

}  // namespace mf
