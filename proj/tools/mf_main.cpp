#include <exception>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mf/pipeline.hpp"
#include "mf/run_config.hpp"

int main(int argc, char** argv) {
  CLI::App app{"microfe - quadtree mesh coarsening and error analysis for "
               "pixelized microstructures"};
  app.require_subcommand(1);

  std::string config_path;
  std::string report_dir;

  auto* run = app.add_subcommand("run", "full pipeline: coarsen, solve, estimate, homogenize");
  run->add_option("config", config_path, "run configuration file")->required();

  auto* coarsen = app.add_subcommand("coarsen", "mesh coarsening only");
  coarsen->add_option("config", config_path, "run configuration file")->required();

  auto* report = app.add_subcommand("report", "re-render the summary of an existing run");
  report->add_option("dir", report_dir, "output directory of a previous run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = mf::parse_run_config_file(config_path);
      const auto result = mf::run_pipeline(config);
      std::cout << result.summary;
    } else if (coarsen->parsed()) {
      const auto config = mf::parse_run_config_file(config_path);
      const auto result = mf::coarsen_pipeline_only(config);
      std::cout << result.summary;
    } else if (report->parsed()) {
      std::ifstream in(report_dir + "/report.json");
      if (!in) throw std::runtime_error("cannot open " + report_dir + "/report.json");
      nlohmann::json j;
      in >> j;
      std::cout << mf::render_summary(j);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
