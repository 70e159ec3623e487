#include "mf/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mf {

MacroLoad RunConfig::load_for(MacroLoad::Kind kind) const {
  switch (kind) {
    case MacroLoad::Kind::dirichlet_kubc: return MacroLoad::kubc(macro_strain);
    case MacroLoad::Kind::periodic: return MacroLoad::periodic(macro_strain);
    case MacroLoad::Kind::neumann: return MacroLoad::neumann(macro_stress);
  }
  throw std::runtime_error("config: unknown coupling kind");
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Eigen::Vector3d parse_vec3(const std::string& value, const std::string& key) {
  std::istringstream in(value);
  Eigen::Vector3d v;
  if (!(in >> v[0] >> v[1] >> v[2]))
    throw std::runtime_error("config: '" + key + "' needs three numbers, got '" + value + "'");
  return v;
}

MacroLoad::Kind parse_coupling(const std::string& name) {
  if (name == "dirichlet" || name == "kubc") return MacroLoad::Kind::dirichlet_kubc;
  if (name == "periodic" || name == "pbc") return MacroLoad::Kind::periodic;
  if (name == "neumann") return MacroLoad::Kind::neumann;
  throw std::runtime_error("config: unknown coupling '" + name + "'");
}

RecoveryScheme parse_scheme(const std::string& name) {
  if (name == "standard_spr") return RecoveryScheme::spr_standard;
  if (name == "modified_spr") return RecoveryScheme::spr_modified;
  if (name == "averaging") return RecoveryScheme::averaging;
  throw std::runtime_error("config: unknown recovery scheme '" + name + "'");
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) + " is not 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "input") {
      config.input_path = value;
    } else if (key == "palette") {
      config.palette_path = value;
    } else if (key == "physical_size") {
      config.physical_size = std::stod(value);
    } else if (key.rfind("material", 0) == 0) {
      const std::string phase_str = trim(key.substr(8));
      if (phase_str.empty())
        throw std::runtime_error("config: material key needs a phase id, e.g. 'material 0'");
      const int phase = std::stoi(phase_str);
      std::istringstream vs(value);
      double E, nu;
      if (!(vs >> E >> nu))
        throw std::runtime_error("config: 'material " + phase_str + "' needs 'E nu'");
      config.materials[phase] = {E, nu};
    } else if (key == "algorithm") {
      if (value == "hard")
        config.algorithm = CoarsenAlgorithm::hard;
      else if (value == "soft")
        config.algorithm = CoarsenAlgorithm::soft;
      else
        throw std::runtime_error("config: algorithm must be hard|soft, got '" + value + "'");
    } else if (key == "steps") {
      config.steps = std::stoi(value);
    } else if (key == "coupling") {
      for (const auto& name : split_list(value))
        config.couplings.push_back(parse_coupling(name));
    } else if (key == "macro_strain") {
      config.macro_strain = parse_vec3(value, key);
      config.has_macro_strain = true;
    } else if (key == "macro_stress") {
      config.macro_stress = parse_vec3(value, key);
      config.has_macro_stress = true;
    } else if (key == "recovery") {
      for (const auto& name : split_list(value)) config.schemes.push_back(parse_scheme(name));
    } else if (key == "reference_r") {
      config.reference_r = std::stoi(value);
    } else if (key == "output") {
      config.output_dir = value;
    } else if (key == "direct_ndof_limit") {
      config.solver.direct_ndof_limit = std::stoi(value);
    } else {
      throw std::runtime_error("config: unknown key '" + key + "'");
    }
  }

  if (config.input_path.empty()) throw std::runtime_error("config: missing 'input'");
  if (config.materials.empty()) throw std::runtime_error("config: no materials given");
  if (config.steps < 0) throw std::runtime_error("config: steps must be >= 0");
  const int r = config.reference_r;
  if (r != 0 && r != 2 && r != 4 && r != 8 && r != 16)
    throw std::runtime_error("config: reference_r must be one of 0,2,4,8,16");
  if (config.schemes.empty()) throw std::runtime_error("config: no recovery scheme given");
  if (config.couplings.empty()) throw std::runtime_error("config: no coupling given");
  for (auto kind : config.couplings) {
    if (kind == MacroLoad::Kind::neumann && !config.has_macro_stress)
      throw std::runtime_error("config: neumann coupling needs 'macro_stress'");
    if (kind != MacroLoad::Kind::neumann && !config.has_macro_strain)
      throw std::runtime_error("config: " + std::string(to_string(kind)) +
                               " coupling needs 'macro_strain'");
  }
  return config;
}

RunConfig parse_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  return parse_run_config(in);
}

}  // namespace mf
