#include <fstream>
#include <set>

#include "dff/error.hpp"
#include "dff/pipeline.hpp"

using nlohmann::json;

namespace dff::pipeline {

void PipelineConfig::validate() const {
  if (!(lambda > 0.0)) throw InputError("config: lambda must be > 0");
  if (max_iters < 1) throw InputError("config: max_iters must be >= 1");
  if (downsample < 1) throw InputError("config: downsample must be >= 1");
  if (radius < 0) throw InputError("config: radius must be >= 0");
  if (layers < 2) throw InputError("config: layers must be >= 2");
  if (threads < 0) throw InputError("config: threads must be >= 0");
  opt::parse_method(method);
}

void apply_json(PipelineConfig& cfg, const json& j) {
  if (!j.is_object()) {
    throw InputError("config: expected a JSON object");
  }
  static const std::set<std::string> known = {"input",  "output", "lambda",  "max_iters",
                                              "downsample", "radius", "align", "method",
                                              "layers", "seed",   "threads", "dump_focus"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw InputError("config: unknown key '" + key + "'");
  }
  try {
    if (j.contains("input")) cfg.input = j.at("input").get<std::string>();
    if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
    if (j.contains("lambda")) cfg.lambda = j.at("lambda").get<double>();
    if (j.contains("max_iters")) cfg.max_iters = j.at("max_iters").get<int>();
    if (j.contains("downsample")) cfg.downsample = j.at("downsample").get<int>();
    if (j.contains("radius")) cfg.radius = j.at("radius").get<int>();
    if (j.contains("align")) cfg.align = j.at("align").get<bool>();
    if (j.contains("method")) cfg.method = j.at("method").get<std::string>();
    if (j.contains("layers")) cfg.layers = j.at("layers").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("dump_focus")) cfg.dump_focus = j.at("dump_focus").get<bool>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("missing file: " + path.string());
  try {
    json j;
    is >> j;
    return j;
  } catch (const json::exception& e) {
    throw InputError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace dff::pipeline
