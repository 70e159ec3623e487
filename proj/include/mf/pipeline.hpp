#pragma once

#include <string>

#include "json.hpp"
#include "mf/run_config.hpp"

namespace mf {

struct PipelineResult {
  nlohmann::json report;
  std::string summary;
};

/// Full pipeline: ingest, coarsen, solve, recover, estimate, homogenize,
/// export. Artifacts land in config.output_dir; per-step files are written
/// before the next step begins.
PipelineResult run_pipeline(const RunConfig& config);

/// Mesh generation only: coarsened meshes as JSON and VTK plus a dof summary.
PipelineResult coarsen_pipeline_only(const RunConfig& config);

/// Re-render the summary table of an existing report.json.
std::string render_summary(const nlohmann::json& report);

}  // namespace mf
