#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mf/field_export.hpp"
#include "test_support.hpp"

using namespace mf;

namespace {

// minimal legacy-VTK reader: counts points/cells and collects named arrays
struct ParsedVtk {
  int points = 0, cells = 0;
  std::map<std::string, std::vector<double>> cell_scalars;
  std::map<std::string, std::vector<double>> point_vectors;
};

ParsedVtk parse_vtk(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  ParsedVtk out;
  std::string line;
  std::getline(in, line);
  REQUIRE(line.rfind("# vtk DataFile", 0) == 0);
  std::getline(in, line);  // title
  std::getline(in, line);
  REQUIRE(line == "ASCII");
  std::getline(in, line);
  REQUIRE(line == "DATASET UNSTRUCTURED_GRID");

  std::string token;
  while (in >> token) {
    if (token == "POINTS") {
      std::string type;
      in >> out.points >> type;
      for (int i = 0; i < 3 * out.points; ++i) {
        double v;
        REQUIRE((in >> v));
      }
    } else if (token == "CELLS") {
      int total;
      in >> out.cells >> total;
      REQUIRE(total == 5 * out.cells);
      for (int c = 0; c < out.cells; ++c) {
        int n, id;
        in >> n;
        REQUIRE(n == 4);
        for (int k = 0; k < 4; ++k) {
          in >> id;
          REQUIRE(id >= 0);
          REQUIRE(id < out.points);
        }
      }
    } else if (token == "CELL_TYPES") {
      int n;
      in >> n;
      for (int c = 0; c < n; ++c) {
        int t;
        in >> t;
        REQUIRE(t == 9);
      }
    } else if (token == "SCALARS") {
      std::string name, type;
      int comps;
      in >> name >> type >> comps;
      std::string lookup, table;
      in >> lookup >> table;
      auto& values = out.cell_scalars[name];
      values.resize(out.cells);
      for (auto& v : values) REQUIRE((in >> v));
    } else if (token == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      auto& values = out.point_vectors[name];
      values.resize(3 * out.points);
      for (auto& v : values) REQUIRE((in >> v));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("single-element snapshot with zero fields") {
  const auto mesh = build_uniform_mesh(mftest::uniform_grid(1));
  FieldSnapshot snapshot;
  snapshot.mesh = &mesh;
  snapshot.cell_fields.push_back({"zero", {0.0}});
  snapshot.point_vectors.push_back({"displacement", std::vector<double>(8, 0.0)});
  export_vtk(snapshot, "snap1.vtk");
  const auto vtk = parse_vtk("snap1.vtk");
  CHECK(vtk.points == 4);
  CHECK(vtk.cells == 1);
  CHECK(vtk.cell_scalars.at("zero") == std::vector<double>{0.0});
  for (double v : vtk.point_vectors.at("displacement")) CHECK(v == 0.0);
  std::remove("snap1.vtk");
}

TEST_CASE("merged 3x3 mesh exports 13 points and 6 cells") {
  const auto uniform = build_uniform_mesh(mftest::uniform_grid(3));
  MarkSet marks(9, 0);
  marks[0] = marks[1] = marks[3] = marks[4] = 1;
  const QuadMesh mesh = coarsen(uniform, marks);
  FieldSnapshot snapshot;
  snapshot.mesh = &mesh;
  export_vtk(snapshot, "snap2.vtk");
  const auto vtk = parse_vtk("snap2.vtk");
  CHECK(vtk.points == 13);
  CHECK(vtk.cells == 6);
  std::remove("snap2.vtk");
}

TEST_CASE("cell count equals element count across pipeline meshes") {
  for (unsigned seed : {3u, 41u}) {
    const auto meshes =
        coarsen_pipeline(mftest::random_grid(16, seed), CoarsenAlgorithm::soft, 2);
    for (const auto& mesh : meshes) {
      FieldSnapshot snapshot;
      snapshot.mesh = &mesh;
      export_vtk(snapshot, "snap3.vtk");
      const auto vtk = parse_vtk("snap3.vtk");
      CHECK(vtk.cells == mesh.element_count());
      CHECK(vtk.points == mesh.node_count());
    }
  }
  std::remove("snap3.vtk");
}

TEST_CASE("csv export") {
  SUBCASE("meshless snapshot writes the header only") {
    FieldSnapshot snapshot;
    export_csv(snapshot, "snap4.csv");
    std::ifstream in("snap4.csv");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "element,level,phase");
    CHECK(!std::getline(in, line));
    std::remove("snap4.csv");
  }
  SUBCASE("row count equals element count and values round trip") {
    const auto mesh = build_uniform_mesh(mftest::uniform_grid(3));
    FieldSnapshot snapshot;
    snapshot.mesh = &mesh;
    std::vector<double> values;
    for (int e = 0; e < 9; ++e) values.push_back(1.0 / 3.0 + e * 0.1234567890123456789);
    snapshot.cell_fields.push_back({"value", values});
    export_csv(snapshot, "snap5.csv");

    std::ifstream in("snap5.csv");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "element,level,phase,value");
    int rows = 0;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string cell;
      std::getline(ls, cell, ',');
      CHECK(std::stoi(cell) == rows);
      std::getline(ls, cell, ',');  // level
      std::getline(ls, cell, ',');  // phase
      std::getline(ls, cell, ',');
      CHECK(std::abs(std::stod(cell) - values[rows]) <= 1e-12 * std::abs(values[rows]));
      ++rows;
    }
    CHECK(rows == 9);
    std::remove("snap5.csv");
  }
}

TEST_CASE("length mismatches are rejected") {
  const auto mesh = build_uniform_mesh(mftest::uniform_grid(2));
  FieldSnapshot snapshot;
  snapshot.mesh = &mesh;
  snapshot.cell_fields.push_back({"broken", {1.0}});  // 4 elements expected
  CHECK_THROWS_AS(export_vtk(snapshot, "snap6.vtk"), std::runtime_error);
  CHECK_THROWS_AS(export_csv(snapshot, "snap6.csv"), std::runtime_error);
}
