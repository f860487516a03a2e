#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "dff/error.hpp"
#include "dff/pipeline.hpp"
#include "dff/synth.hpp"

namespace fs = std::filesystem;

namespace dff::pipeline {
namespace {

/// Flags shared by depth and bench. Unset flags leave the config untouched.
struct CommonFlags {
  std::optional<std::string> config;
  std::optional<std::string> input;
  std::optional<std::string> output;
  std::optional<double> lambda;
  std::optional<int> max_iters;
  std::optional<int> downsample;
  std::optional<int> radius;
  std::optional<std::string> method;
  std::optional<int> layers;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool no_align = false;
  bool dump_focus = false;

  void add_to(CLI::App& app) {
    app.add_option("--config", config, "JSON file mirroring the pipeline config");
    app.add_option("--input", input, "stack manifest");
    app.add_option("--output", output, "output directory");
    app.add_option("--lambda", lambda, "fidelity weight");
    app.add_option("--max-iters", max_iters, "solver iterations");
    app.add_option("--downsample", downsample, "downsampling factor before the solver");
    app.add_option("--radius", radius, "focus-measure mean filter radius");
    app.add_option("--method", method, "solver");
    app.add_option("--layers", layers, "refocus bundle layer count");
    app.add_option("--seed", seed, "seed");
    app.add_option("--threads", threads, "worker cap");
    app.add_flag("--no-align", no_align, "skip alignment");
    app.add_flag("--dump-focus", dump_focus, "write the focus volume");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (config) apply_json(cfg, load_json_file(*config));
    if (input) cfg.input = *input;
    if (output) cfg.output = *output;
    if (lambda) cfg.lambda = *lambda;
    if (max_iters) cfg.max_iters = *max_iters;
    if (downsample) cfg.downsample = *downsample;
    if (radius) cfg.radius = *radius;
    if (method) cfg.method = *method;
    if (layers) cfg.layers = *layers;
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    if (no_align) cfg.align = false;
    if (dump_focus) cfg.dump_focus = true;
    cfg.validate();
    return cfg;
  }
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Depth from focal stacks"};
  app.require_subcommand(1);

  CommonFlags depth_flags;
  CLI::App* depth = app.add_subcommand("depth", "estimate depth from a focal stack");
  depth_flags.add_to(*depth);

  CommonFlags bench_flags;
  std::string methods = "all";
  int seed_count = 10;
  CLI::App* bench = app.add_subcommand("bench", "solver comparison on the noisy-depth suite");
  bench_flags.add_to(*bench);
  bench->add_option("--methods", methods, "comma-separated solvers or 'all'");
  bench->add_option("--seeds", seed_count, "number of seeds, starting at --seed")
      ->check(CLI::PositiveNumber);

  std::string bundle_dir, refocus_out = "refocus.png";
  int focus_layer = 0;
  double aperture = 1.0;
  CLI::App* refocus = app.add_subcommand("refocus", "render one frame from a refocus bundle");
  refocus->add_option("--input", bundle_dir, "bundle directory")->required();
  refocus->add_option("--output", refocus_out, "output PNG");
  refocus->add_option("--focus-layer", focus_layer, "layer brought into focus")->required();
  refocus->add_option("--aperture", aperture, "aperture scale");

  std::string scene = "two-plane", synth_out = "synth";
  std::optional<int> size, frames;
  std::optional<std::uint64_t> synth_seed;
  CLI::App* synth_cmd = app.add_subcommand("synth", "render a synthetic focal stack");
  synth_cmd->add_option("--scene", scene, "plane, two-plane, ramp or a JSON scene spec");
  synth_cmd->add_option("--output", synth_out, "output directory");
  synth_cmd->add_option("--size", size, "image side in pixels");
  synth_cmd->add_option("--frames", frames, "frame count");
  synth_cmd->add_option("--seed", synth_seed, "texture seed");

  std::string depth_dir, bundle_out;
  int export_layers = 12;
  CLI::App* exporter = app.add_subcommand("export-bundle", "bundle the output of a depth run");
  exporter->add_option("--input", depth_dir, "depth output directory")->required();
  exporter->add_option("--output", bundle_out, "bundle directory (default <input>/bundle)");
  exporter->add_option("--layers", export_layers, "layer count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*depth) {
      run_depth(depth_flags.resolve(), out);
    } else if (*bench) {
      const PipelineConfig cfg = bench_flags.resolve();
      std::vector<opt::Method> list;
      if (methods == "all") {
        list = opt::all_methods();
      } else {
        for (const std::string& name : split_list(methods)) list.push_back(opt::parse_method(name));
      }
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < seed_count; ++i) seeds.push_back(cfg.seed + i);
      run_bench(cfg, list, seeds, out);
    } else if (*refocus) {
      run_refocus(bundle_dir, focus_layer, aperture, refocus_out);
      out << "wrote " << refocus_out << "\n";
    } else if (*synth_cmd) {
      synth::SceneSpec spec;
      if (scene.size() > 5 && scene.substr(scene.size() - 5) == ".json") {
        spec = synth::load_scene_spec(scene);
      } else {
        spec.kind = scene;
      }
      if (size) spec.size = *size;
      if (frames) {
        // Keep the plane roles at the same relative position in the sweep.
        const auto rescale = [&](int f) {
          return static_cast<int>(std::lround(f * (*frames - 1.0) / std::max(spec.frames - 1, 1)));
        };
        spec.plane_frame = rescale(spec.plane_frame);
        spec.front_frame = rescale(spec.front_frame);
        spec.back_frame = rescale(spec.back_frame);
        spec.frames = *frames;
      }
      if (synth_seed) spec.seed = *synth_seed;
      spec.validate();
      synth::write_scene(synth::render_scene(spec), synth_out);
      out << "wrote " << (fs::path(synth_out) / "manifest.json").string() << "\n";
    } else if (*exporter) {
      const fs::path target = bundle_out.empty() ? fs::path(depth_dir) / "bundle" : fs::path(bundle_out);
      run_export_bundle(depth_dir, export_layers, target);
      out << "wrote " << target.string() << "\n";
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    err << "unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.push_back("dff");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dff::pipeline
