#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dff/align.hpp"
#include "dff/image.hpp"
#include "dff/optimize.hpp"

namespace dff::pipeline {

struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output = "out";
  double lambda = 0.7;
  int max_iters = 300;
  int downsample = 3;
  int radius = 2;
  bool align = true;
  std::string method = "padmm";
  int layers = 12;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 keeps the runtime default
  bool dump_focus = false;

  /// Throws InputError naming the first out-of-range field.
  void validate() const;
};

/// Overwrites the fields present in a JSON object whose keys mirror the struct
/// (input, output, lambda, max_iters, downsample, radius, align, method, layers,
/// seed, threads, dump_focus). Unknown keys are rejected.
void apply_json(PipelineConfig& cfg, const nlohmann::json& j);
nlohmann::json load_json_file(const std::filesystem::path& path);

struct StageTiming {
  std::string stage;
  double ms = 0.0;
};

struct DepthRun {
  FocalStack aligned;
  std::vector<align::FrameAlignment> alignment;
  DepthMap initial;
  DepthMap refined;
  Image all_in_focus;
  opt::SolverTrace trace;
  std::vector<StageTiming> timings;
  bool bundle_written = false;
};

/// align -> focus volume -> initial depth -> downsample -> solver -> joint
/// bilateral upsampling -> all-in-focus, writing every stage artifact into
/// cfg.output. Module errors are rethrown with the stage name prefixed.
DepthRun run_depth(const PipelineConfig& cfg, std::ostream& log);

struct BenchSummaryRow {
  std::string method;
  int runs = 0;
  double residual_mean = 0.0;
  double residual_std = 0.0;
  double residual_median = 0.0;
  double convergence_median = 0.0;  // first k >= 2 with energy decay <= 0.01
};

/// One CSV per method and seed on the 128x128 noisy-depth suite plus summary.csv.
std::vector<BenchSummaryRow> run_bench(const PipelineConfig& cfg,
                                       const std::vector<opt::Method>& methods,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::ostream& log);

/// Renders one defocused frame from a bundle directory.
void run_refocus(const std::filesystem::path& bundle_dir, int focus_layer, double aperture_scale,
                 const std::filesystem::path& out_path);

/// Builds a bundle from the artifacts of a previous depth run.
void run_export_bundle(const std::filesystem::path& depth_dir, int layers,
                       const std::filesystem::path& out_dir);

/// Command-line entry point. Returns the process exit status:
/// 0 success, 2 configuration or input error, 3 numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dff::pipeline
