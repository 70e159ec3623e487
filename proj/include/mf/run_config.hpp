#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mf/fe.hpp"
#include "mf/quad_mesh.hpp"
#include "mf/recovery.hpp"

namespace mf {

/// Parsed run configuration; one plain-text key-value file drives the whole
/// pipeline (see README for the key reference).
struct RunConfig {
  std::string input_path;
  std::string palette_path;  // empty for CSV input
  double physical_size = 1.0;
  std::map<int, std::pair<double, double>> materials;  // phase -> (E, nu)
  CoarsenAlgorithm algorithm = CoarsenAlgorithm::soft;
  int steps = 0;
  std::vector<MacroLoad::Kind> couplings;
  Eigen::Vector3d macro_strain = Eigen::Vector3d::Zero();
  Eigen::Vector3d macro_stress = Eigen::Vector3d::Zero();
  bool has_macro_strain = false;
  bool has_macro_stress = false;
  std::vector<RecoveryScheme> schemes;
  int reference_r = 0;  // 0 = skip true-error computation
  std::string output_dir = ".";
  SolverOptions solver;

  MacroLoad load_for(MacroLoad::Kind kind) const;
};

RunConfig parse_run_config(std::istream& in);
RunConfig parse_run_config_file(const std::string& path);

}  // namespace mf
