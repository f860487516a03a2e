#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "dff/defocus.hpp"
#include "dff/error.hpp"
#include "dff/focus.hpp"
#include "dff/parallel.hpp"
#include "dff/pipeline.hpp"
#include "dff/stack_io.hpp"
#include "dff/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dff::pipeline {
namespace {

// Runs one pipeline stage, timing it and prefixing module errors with its name.
template <typename F>
auto stage(const char* name, std::vector<StageTiming>& timings, std::ostream& log, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  const auto finish = [&] {
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    timings.push_back({name, ms});
    char line[96];
    std::snprintf(line, sizeof(line), "stage %-10s %10.1f ms\n", name, ms);
    log << line;
  };
  try {
    if constexpr (std::is_void_v<decltype(body())>) {
      body();
      finish();
    } else {
      auto result = body();
      finish();
      return result;
    }
  } catch (const InputError& e) {
    throw InputError(std::string("[") + name + "] " + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("[") + name + "] " + e.what());
  }
}

void clamp_depth(DepthMap& d, int frames) {
  for (double& v : d.values) v = std::clamp(v, 0.0, frames - 1.0);
  for (double& c : d.confidence) c = std::clamp(c, 0.0, 1.0);
}

json optics_json(const CaptureOptics& o) {
  json j = json::object();
  if (o.focal_length_mm) j["focal_length_mm"] = *o.focal_length_mm;
  if (o.f_number) j["f_number"] = *o.f_number;
  if (o.pixel_pitch_um) j["sensor_pixel_pitch_um"] = *o.pixel_pitch_um;
  return j;
}

bool complete(const CaptureOptics& o) {
  return o.focal_length_mm && o.f_number && o.pixel_pitch_um;
}

defocus::OpticsParams bundle_optics(const CaptureOptics& o,
                                    const std::vector<double>& focal_distances) {
  if (!complete(o)) {
    throw InputError(
        "bundle export needs focal_length_mm, f_number and sensor_pixel_pitch_um in the manifest");
  }
  // The nominal focus is the middle of the stack; refocusing replaces it.
  const double focus = focal_distances[focal_distances.size() / 2];
  return defocus::OpticsParams::from_f_number(*o.focal_length_mm, *o.f_number, focus,
                                              *o.pixel_pitch_um);
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

DepthRun run_depth(const PipelineConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.input.empty()) {
    throw InputError("config: an input manifest is required");
  }
  if (cfg.threads > 0) set_thread_count(cfg.threads);
  const opt::Method method = opt::parse_method(cfg.method);
  DepthRun run;
  auto& t = run.timings;

  const FocalStack stack = stage("load", t, log, [&] { return load_stack(cfg.input); });
  if (stack.size() < 3) {
    throw InputError("[load] depth estimation needs at least 3 frames");
  }
  std::error_code ec;
  fs::create_directories(cfg.output, ec);

  stage("align", t, log, [&] {
    if (cfg.align) {
      align::AlignedStack aligned = align::align_stack(stack);
      run.aligned = std::move(aligned.stack);
      run.alignment = std::move(aligned.report);
    } else {
      run.aligned = stack;
      run.aligned.homographies.assign(stack.size(), Homography::identity());
      for (int f = 0; f < stack.size(); ++f) {
        align::FrameAlignment fa;
        fa.frame = f;
        fa.round_errors = {0.0};
        run.alignment.push_back(fa);
      }
    }
    align::write_alignment_report(run.alignment, cfg.output / "alignment.json");
  });

  const focus::FocusVolume volume = stage("focus", t, log, [&] {
    focus::FocusVolume v = focus::build_focus_volume(run.aligned, cfg.radius);
    if (cfg.dump_focus) focus::dump_focus_volume(v, cfg.output / "focus_volume");
    return v;
  });

  Image guide;
  stage("initial", t, log, [&] {
    run.initial = focus::initial_depth(volume);
    guide = focus::all_in_focus(run.aligned, run.initial);
    save_depth(run.initial, cfg.output / "depth_initial.png");
  });

  const DepthMap low = stage("downsample", t, log, [&] { return downsample(run.initial, cfg.downsample); });

  const opt::SolveResult solved = stage("optimize", t, log, [&] {
    opt::DenoiseProblem problem;
    problem.observed = low;
    problem.lambda = cfg.lambda;
    // Fixed iteration budget: the energy-decay test would stop long before convergence.
    return opt::solve(problem, method, cfg.max_iters, 0.0);
  });
  run.trace = solved.trace;

  stage("upsample", t, log, [&] {
    run.refined = joint_bilateral_upsample(solved.solution, guide, cfg.downsample);
    clamp_depth(run.refined, run.aligned.size());
  });

  stage("allfocus", t, log, [&] { run.all_in_focus = focus::all_in_focus(run.aligned, run.refined); });

  stage("write", t, log, [&] {
    save_depth(run.refined, cfg.output / "depth.png");
    write_image(run.all_in_focus, cfg.output / "allfocus.png", 8);
    opt::write_trace_csv(run.trace, cfg.output / ("trace_" + cfg.method + ".csv"));
    json meta;
    meta["focal_distances_mm"] = run.aligned.focal_distances_mm;
    meta["optics"] = optics_json(stack.optics);
    meta["frames"] = stack.size();
    meta["width"] = stack.width();
    meta["height"] = stack.height();
    std::ofstream(cfg.output / "stack.json") << meta.dump(2) << "\n";
  });

  if (complete(stack.optics)) {
    stage("export", t, log, [&] {
      defocus::export_refocus_bundle(run.all_in_focus, run.refined, run.aligned,
                                     bundle_optics(stack.optics, stack.focal_distances_mm),
                                     cfg.layers, cfg.output / "bundle");
    });
    run.bundle_written = true;
  } else {
    log << "no capture optics in the manifest; skipping bundle export\n";
  }

  json timings = json::object();
  for (const StageTiming& s : run.timings) timings[s.stage] = s.ms;
  std::ofstream(cfg.output / "timings.json") << timings.dump(2) << "\n";
  return run;
}

std::vector<BenchSummaryRow> run_bench(const PipelineConfig& cfg,
                                       const std::vector<opt::Method>& methods,
                                       const std::vector<std::uint64_t>& seeds,
                                       std::ostream& log) {
  cfg.validate();
  if (methods.empty()) throw InputError("bench: at least one method is required");
  if (seeds.empty()) throw InputError("bench: at least one seed is required");
  if (cfg.threads > 0) set_thread_count(cfg.threads);
  std::error_code ec;
  fs::create_directories(cfg.output, ec);

  std::vector<BenchSummaryRow> rows;
  for (opt::Method m : methods) {
    BenchSummaryRow row;
    row.method = opt::method_name(m);
    std::vector<double> finals, converged;
    for (std::uint64_t seed : seeds) {
      const synth::NoisyDepth inst = synth::noisy_depth_instance(seed);
      opt::DenoiseProblem problem;
      problem.observed = inst.noisy;
      problem.lambda = cfg.lambda;
      const opt::SolveResult r = opt::solve(problem, m, cfg.max_iters, 0.0);
      char name[96];
      std::snprintf(name, sizeof(name), "%s_seed%03llu.csv", row.method.c_str(),
                    static_cast<unsigned long long>(seed));
      opt::write_trace_csv(r.trace, cfg.output / name);
      finals.push_back(r.trace.records.back().residual_norm);
      const auto k = opt::convergence_iteration(r.trace, 0.01);
      converged.push_back(k ? *k : std::nan(""));
    }
    row.runs = static_cast<int>(finals.size());
    double sum = 0.0;
    for (double v : finals) sum += v;
    row.residual_mean = sum / row.runs;
    double var = 0.0;
    for (double v : finals) var += (v - row.residual_mean) * (v - row.residual_mean);
    row.residual_std = std::sqrt(var / row.runs);
    row.residual_median = median(finals);
    std::vector<double> valid;
    for (double v : converged) {
      if (!std::isnan(v)) valid.push_back(v);
    }
    row.convergence_median = valid.empty() ? std::nan("") : median(valid);
    rows.push_back(row);
  }

  std::ofstream csv(cfg.output / "summary.csv");
  csv.precision(10);
  csv << "method,runs,final_residual_mean,final_residual_std,final_residual_median,"
         "decay_0.01_iteration_median\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %5s %14s %14s %14s %8s\n", "method", "runs", "mean",
                "std", "median", "k(0.01)");
  log << line;
  for (const BenchSummaryRow& r : rows) {
    csv << r.method << ',' << r.runs << ',' << r.residual_mean << ',' << r.residual_std << ','
        << r.residual_median << ',' << r.convergence_median << '\n';
    std::snprintf(line, sizeof(line), "%-24s %5d %14.6g %14.6g %14.6g %8.1f\n", r.method.c_str(),
                  r.runs, r.residual_mean, r.residual_std, r.residual_median,
                  r.convergence_median);
    log << line;
  }
  return rows;
}

void run_refocus(const fs::path& bundle_dir, int focus_layer, double aperture_scale,
                 const fs::path& out_path) {
  const defocus::RefocusBundle bundle = defocus::load_bundle(bundle_dir);
  const Image rendered = defocus::synthetic_defocus(bundle, focus_layer, aperture_scale);
  write_image(rendered, out_path, 8);
}

void run_export_bundle(const fs::path& depth_dir, int layers, const fs::path& out_dir) {
  const json meta = load_json_file(depth_dir / "stack.json");
  FocalStack stack;
  CaptureOptics optics;
  try {
    stack.focal_distances_mm = meta.at("focal_distances_mm").get<std::vector<double>>();
    const json& o = meta.at("optics");
    if (o.contains("focal_length_mm")) optics.focal_length_mm = o.at("focal_length_mm").get<double>();
    if (o.contains("f_number")) optics.f_number = o.at("f_number").get<double>();
    if (o.contains("sensor_pixel_pitch_um")) {
      optics.pixel_pitch_um = o.at("sensor_pixel_pitch_um").get<double>();
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed stack.json: ") + e.what());
  }
  const Image aif = read_image(depth_dir / "allfocus.png");
  const DepthMap depth = load_depth(depth_dir / "depth.png");
  // Only the focal distances are needed for quantization.
  stack.frames.assign(stack.focal_distances_mm.size(), Image());
  defocus::export_refocus_bundle(aif, depth, stack,
                                 bundle_optics(optics, stack.focal_distances_mm), layers, out_dir);
}

}  // namespace dff::pipeline
