#include "mf/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "mf/error_analysis.hpp"
#include "mf/field_export.hpp"
#include "mf/homogenize.hpp"

namespace mf {

namespace {

using nlohmann::json;

std::shared_ptr<const PhaseGrid> load_input(const RunConfig& config) {
  std::shared_ptr<const PhaseGrid> grid;
  if (config.palette_path.empty()) {
    grid = std::make_shared<PhaseGrid>(
        load_phase_grid(config.input_path, nullptr, config.physical_size));
  } else {
    const Palette palette = load_palette_file(config.palette_path);
    grid = std::make_shared<PhaseGrid>(
        load_phase_grid(config.input_path, &palette, config.physical_size));
  }
  return grid;
}

MaterialTable material_table(const RunConfig& config, const PhaseGrid& grid) {
  MaterialTable material;
  for (const auto& [phase, En] : config.materials) material.add(phase, En.first, En.second);
  for (int label : grid.label_set())
    if (!material.has(label))
      throw std::runtime_error("input phase " + std::to_string(label) +
                               " has no material entry");
  return material;
}

std::shared_ptr<const PhaseGrid> refine_grid(const PhaseGrid& grid, int r) {
  const int w = grid.width * r;
  std::vector<int> labels((std::size_t)w * w);
  for (int i = 0; i < w; ++i)
    for (int j = 0; j < w; ++j)
      labels[(std::size_t)i * w + j] = grid.labels[(std::size_t)(i / r) * grid.width + j / r];
  return std::make_shared<PhaseGrid>(w, w, std::move(labels), grid.physical_size);
}

json tensor_to_json(const Eigen::Matrix3d& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string fixed(double v, int precision = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

std::string scientific(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(4) << v;
  return os.str();
}

}  // namespace

std::string render_summary(const json& report) {
  std::ostringstream out;
  const auto& steps = report.at("steps");
  const bool has_true = report.at("reference_r").get<int>() > 0;

  std::vector<std::string> couplings;
  for (const auto& [name, value] : steps.front().at("couplings").items())
    couplings.push_back(name);

  for (const auto& coupling : couplings) {
    out << "coupling " << coupling << "\n";
    out << std::left << std::setw(6) << "step" << std::setw(12) << "ndof" << std::setw(10)
        << "factor";
    const auto& schemes0 = steps.front().at("couplings").at(coupling).at("estimated");
    std::vector<std::string> schemes;
    for (const auto& [name, value] : schemes0.items()) schemes.push_back(name);
    for (const auto& s : schemes)
      out << std::setw(16) << ("err(" + s + ")") << std::setw(10) << "factor";
    if (has_true) {
      out << std::setw(14) << "true";
      for (const auto& s : schemes) out << std::setw(14) << ("theta(" + s + ")");
    }
    out << "\n";
    for (const auto& step : steps) {
      const auto& c = step.at("couplings").at(coupling);
      out << std::left << std::setw(6) << step.at("step").get<int>() << std::setw(12)
          << step.at("ndof").get<long long>() << std::setw(10)
          << fixed(step.at("reduction_factor").get<double>());
      for (const auto& s : schemes) {
        const auto& est = c.at("estimated").at(s);
        out << std::setw(16) << scientific(est.at("error").get<double>()) << std::setw(10)
            << fixed(est.at("error_factor").get<double>());
      }
      if (has_true) {
        out << std::setw(14) << scientific(c.at("true_error").get<double>());
        for (const auto& s : schemes)
          out << std::setw(14) << fixed(c.at("effectivity").at(s).get<double>());
      }
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

PipelineResult run_pipeline(const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);

  auto grid = load_input(config);
  const MaterialTable material = material_table(config, *grid);
  const auto meshes = coarsen_pipeline(grid, config.algorithm, config.steps);
  const double ndof_uniform = meshes.front().ndof;

  json report;
  report["schema"] = "microfe-report-v1";
  report["input"] = {{"path", config.input_path},
                     {"width", grid->width},
                     {"physical_size", grid->physical_size}};
  report["algorithm"] = config.algorithm == CoarsenAlgorithm::hard ? "hard" : "soft";
  report["step_count"] = config.steps;
  report["reference_r"] = config.reference_r;
  report["voigt_convention"] =
      "stress [s11,s22,s12]; strain [e11,e22,g12] engineering shear; "
      "unit shear load case applies g12 = 1";
  if (config.has_macro_strain)
    report["macro_strain"] = {config.macro_strain[0], config.macro_strain[1],
                              config.macro_strain[2]};
  if (config.has_macro_stress)
    report["macro_stress"] = {config.macro_stress[0], config.macro_stress[1],
                              config.macro_stress[2]};
  json materials_json;
  for (const auto& [phase, En] : config.materials)
    materials_json[std::to_string(phase)] = {{"E", En.first}, {"nu", En.second}};
  report["materials"] = materials_json;
  report["steps"] = json::array();

  json timings;
  timings["steps"] = json::array();

  // Reference solutions for true-error computation, one per coupling.
  std::map<MacroLoad::Kind, SolvedCase> references;
  if (config.reference_r > 0) {
    auto ref_grid = refine_grid(*grid, config.reference_r);
    json ref_timing;
    for (auto kind : config.couplings) {
      references.emplace(kind, solve_case(build_uniform_mesh(ref_grid), material,
                                          config.load_for(kind), config.solver));
      ref_timing[to_string(kind)] = references.at(kind).solve_seconds;
    }
    timings["reference"] = ref_timing;
  }

  // Baseline estimated errors (step 0) per coupling x scheme for the factors.
  std::map<std::string, double> baseline;

  for (int k = 0; k <= config.steps; ++k) {
    const QuadMesh& mesh = meshes[k];
    json step_json;
    step_json["step"] = k;
    step_json["ndof"] = mesh.ndof;
    step_json["reduction_factor"] = mesh.ndof / ndof_uniform;
    json couplings_json;
    json step_timing;

    FieldSnapshot snapshot;
    snapshot.mesh = &mesh;
    snapshot.metadata["step"] = std::to_string(k);
    {
      FieldSnapshot::CellField phase{"phase", {}}, level{"level", {}};
      for (const auto& el : mesh.elements) {
        phase.values.push_back(el.phase);
        level.values.push_back(el.level);
      }
      snapshot.cell_fields.push_back(std::move(phase));
      snapshot.cell_fields.push_back(std::move(level));
    }

    for (auto kind : config.couplings) {
      const std::string cname = to_string(kind);
      json coupling_json;

      SolvedCase solved = solve_case(mesh, material, config.load_for(kind), config.solver);
      step_timing[cname] = solved.solve_seconds;

      json estimated_json;
      for (auto scheme : config.schemes) {
        const auto recovered = recover(scheme, solved.mesh, solved.qp);
        ErrorReport er = estimate_error(solved.mesh, solved.qp, recovered);
        const std::string sname = to_string(scheme);
        const std::string key = cname + "/" + sname;
        if (k == 0) baseline[key] = er.total_estimated;
        estimated_json[sname] = {{"error", er.total_estimated},
                                 {"error_factor", er.total_estimated / baseline.at(key)}};

        FieldSnapshot::CellField rel{"rel_error_" + cname + "_" + sname, er.per_element_rel};
        snapshot.cell_fields.push_back(std::move(rel));
      }
      coupling_json["estimated"] = estimated_json;

      if (config.reference_r > 0) {
        const double true_error = compute_true_error(solved, references.at(kind));
        coupling_json["true_error"] = true_error;
        json theta;
        for (auto scheme : config.schemes) {
          const std::string sname = to_string(scheme);
          theta[sname] =
              effectivity_index(estimated_json.at(sname).at("error").get<double>(), true_error);
        }
        coupling_json["effectivity"] = theta;
      }

      const auto tensor = homogenized_tensor(mesh, material, kind, config.solver);
      coupling_json["homogenized_tensor"] = tensor_to_json(tensor.voigt);
      coupling_json["tensor_asymmetry"] = tensor.max_relative_asymmetry;

      // strain map and displacements of this coupling's load case
      FieldSnapshot::CellField exx{"eps_xx_" + cname, {}};
      for (std::size_t e = 0; e < mesh.elements.size(); ++e) {
        double mean = 0.0;
        for (int g = 0; g < 4; ++g) mean += solved.qp.strain[e][g][0];
        exx.values.push_back(0.25 * mean);
      }
      snapshot.cell_fields.push_back(std::move(exx));
      FieldSnapshot::PointVectorField disp{"displacement_" + cname,
                                           std::vector<double>(solved.displacement.u.data(),
                                                               solved.displacement.u.data() +
                                                                   solved.displacement.u.size())};
      snapshot.point_vectors.push_back(std::move(disp));

      couplings_json[cname] = coupling_json;
    }

    step_json["couplings"] = couplings_json;
    report["steps"].push_back(step_json);
    timings["steps"].push_back({{"step", k}, {"solve_seconds", step_timing}});

    const std::string suffix = "step" + std::to_string(k);
    export_vtk(snapshot, (out_dir / ("mesh_" + suffix + ".vtk")).string());
    export_csv(snapshot, (out_dir / ("elements_" + suffix + ".csv")).string());
    // artifacts so far are complete: refresh report before the next step
    write_json(out_dir / "report.json", report);
    write_json(out_dir / "timings.json", timings);
  }

  // Homogenized-tensor sensitivity to coarsening, per coupling.
  json ratios_json;
  for (auto kind : config.couplings) {
    std::vector<ElasticityTensor2D> sequence;
    for (const auto& step : report["steps"]) {
      ElasticityTensor2D t;
      t.coupling = kind;
      const auto& rows = step.at("couplings").at(to_string(kind)).at("homogenized_tensor");
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t.voigt(i, j) = rows[i][j].get<double>();
      sequence.push_back(t);
    }
    if (sequence.size() >= 2) {
      const auto table = coarsening_sensitivity(sequence);
      json per_step = json::array();
      for (const auto& m : table.ratios) per_step.push_back(tensor_to_json(m));
      ratios_json[to_string(kind)] = per_step;
    }
  }
  if (!ratios_json.is_null()) report["tensor_ratios_to_step0"] = ratios_json;
  write_json(out_dir / "report.json", report);

  PipelineResult result;
  result.report = report;
  result.summary = render_summary(report);
  write_text(out_dir / "summary.txt", result.summary);
  return result;
}

PipelineResult coarsen_pipeline_only(const RunConfig& config) {
  namespace fs = std::filesystem;
  const fs::path out_dir(config.output_dir);
  fs::create_directories(out_dir);

  auto grid = load_input(config);
  const auto meshes = coarsen_pipeline(grid, config.algorithm, config.steps);

  json report;
  report["schema"] = "microfe-meshes-v1";
  report["algorithm"] = config.algorithm == CoarsenAlgorithm::hard ? "hard" : "soft";
  report["steps"] = json::array();

  std::ostringstream summary;
  summary << std::left << std::setw(6) << "step" << std::setw(12) << "ndof" << std::setw(10)
          << "factor" << std::setw(12) << "elements" << std::setw(12) << "hanging" << "\n";
  for (int k = 0; k < (int)meshes.size(); ++k) {
    const auto& mesh = meshes[k];
    report["steps"].push_back({{"step", k},
                               {"ndof", mesh.ndof},
                               {"reduction_factor", mesh.ndof / (double)meshes.front().ndof},
                               {"elements", mesh.element_count()},
                               {"hanging_nodes", mesh.hanging_node_count()}});
    const std::string suffix = "step" + std::to_string(k);
    write_json(out_dir / ("mesh_" + suffix + ".json"), mesh_to_json(mesh));
    FieldSnapshot snapshot;
    snapshot.mesh = &mesh;
    FieldSnapshot::CellField phase{"phase", {}}, level{"level", {}};
    for (const auto& el : mesh.elements) {
      phase.values.push_back(el.phase);
      level.values.push_back(el.level);
    }
    snapshot.cell_fields.push_back(std::move(phase));
    snapshot.cell_fields.push_back(std::move(level));
    export_vtk(snapshot, (out_dir / ("mesh_" + suffix + ".vtk")).string());
    summary << std::left << std::setw(6) << k << std::setw(12) << mesh.ndof << std::setw(10)
            << fixed(mesh.ndof / (double)meshes.front().ndof) << std::setw(12)
            << mesh.element_count() << std::setw(12) << mesh.hanging_node_count() << "\n";
  }
  write_json(out_dir / "meshes.json", report);

  PipelineResult result;
  result.report = report;
  result.summary = summary.str();
  return result;
}

}  // namespace mf
