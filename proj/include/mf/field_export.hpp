#pragma once

#include <map>
#include <string>
#include <vector>

#include "mf/quad_mesh.hpp"

namespace mf {

/// Named fields attached to a mesh for serialization; scalar fields key by
/// element, vector fields key by node.
struct FieldSnapshot {
  const QuadMesh* mesh = nullptr;
  struct CellField {
    std::string name;
    std::vector<double> values;  // one per element
  };
  struct PointVectorField {
    std::string name;
    std::vector<double> values;  // 2 per node (x, y)
  };
  std::vector<CellField> cell_fields;
  std::vector<PointVectorField> point_vectors;
  std::map<std::string, std::string> metadata;  // coupling, step, scheme, ...
};

/// Legacy ASCII VTK unstructured grid with quad cells.
void export_vtk(const FieldSnapshot& snapshot, const std::string& path);

/// Flat per-element table mirroring all cell data.
void export_csv(const FieldSnapshot& snapshot, const std::string& path);

}  // namespace mf
