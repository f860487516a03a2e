#include <algorithm>
#include <cmath>
#include <fstream>

#include "dff/error.hpp"
#include "dff/optimize.hpp"

namespace dff::opt {

double energy_decay(double p0, double previous, double current) {
  return std::abs(current - previous) / std::max(p0, 1e-12);
}

TraceMetrics trace_metrics(const SolverTrace& trace) {
  if (trace.records.empty()) {
    throw InputError("empty trace");
  }
  TraceMetrics m;
  const double p0 = trace.records.front().energy;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    m.residual.push_back(trace.records[k].residual_norm);
    if (k > 0) {
      m.energy_decay.push_back(
          energy_decay(p0, trace.records[k - 1].energy, trace.records[k].energy));
    }
  }
  double sum = 0.0;
  for (double r : m.residual) sum += r;
  m.residual_mean = sum / static_cast<double>(m.residual.size());
  double var = 0.0;
  for (double r : m.residual) var += (r - m.residual_mean) * (r - m.residual_mean);
  m.residual_std = std::sqrt(var / static_cast<double>(m.residual.size()));
  return m;
}

std::optional<int> convergence_iteration(const SolverTrace& trace, double tol) {
  for (const TraceRecord& r : trace.records) {
    if (r.iter >= 2 && r.energy_decay <= tol) return r.iter;
  }
  return std::nullopt;
}

void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path);
  if (!os) {
    throw InputError("cannot write trace: " + path.string());
  }
  os.precision(17);
  os << "iter,energy,residual_norm,energy_decay,wall_ms\n";
  for (const TraceRecord& r : trace.records) {
    os << r.iter << ',' << r.energy << ',' << r.residual_norm << ',' << r.energy_decay << ','
       << r.wall_ms << '\n';
  }
}

}  // namespace dff::opt
