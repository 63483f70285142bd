#include "teleop/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace teleop {
namespace {

double nearest_rank(const std::vector<double>& sorted, double p) {
  const auto n = sorted.size();
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  return sorted[rank - 1];
}

}  // namespace

TimingStats summarize(const std::string& module, std::vector<double> seconds) {
  TimingStats s;
  s.module = module;
  s.samples = seconds.size();
  if (seconds.empty()) return s;
  std::sort(seconds.begin(), seconds.end());
  s.mean_ms = 1e3 * std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
  s.p50_ms = 1e3 * nearest_rank(seconds, 0.50);
  s.p99_ms = 1e3 * nearest_rank(seconds, 0.99);
  s.max_ms = 1e3 * seconds.back();
  return s;
}

const TimingStats* ProfileReport::find(const std::string& module) const {
  for (const auto& r : rows) {
    if (r.module == module) return &r;
  }
  return nullptr;
}

std::string ProfileReport::to_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %8s %10s %10s %10s %10s\n", "module", "samples", "mean_ms", "p50_ms",
                "p99_ms", "max_ms");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-28s %8zu %10.4f %10.4f %10.4f %10.4f\n", r.module.c_str(), r.samples,
                  r.mean_ms, r.p50_ms, r.p99_ms, r.max_ms);
    out << line;
  }
  for (const auto& [k, v] : values) {
    std::snprintf(line, sizeof line, "%s = %.4g\n", k.c_str(), v);
    out << line;
  }
  return out.str();
}

std::string ProfileReport::to_json() const {
  nlohmann::json doc;
  doc["modules"] = nlohmann::json::array();
  for (const auto& r : rows) {
    doc["modules"].push_back({{"module", r.module},
                              {"samples", r.samples},
                              {"mean_ms", r.mean_ms},
                              {"p50_ms", r.p50_ms},
                              {"p99_ms", r.p99_ms},
                              {"max_ms", r.max_ms}});
  }
  doc["values"] = nlohmann::json::object();
  for (const auto& [k, v] : values) doc["values"][k] = v;
  return doc.dump(2);
}

void Profiler::record(const std::string& module, double seconds) {
  auto [it, inserted] = samples_.try_emplace(module);
  if (inserted) order_.push_back(module);
  it->second.push_back(seconds);
}

const std::vector<double>& Profiler::samples(const std::string& module) const {
  auto it = samples_.find(module);
  if (it == samples_.end()) throw std::out_of_range("no samples for '" + module + "'");
  return it->second;
}

ProfileReport Profiler::report() const {
  ProfileReport r;
  for (const auto& m : order_) r.rows.push_back(summarize(m, samples_.at(m)));
  return r;
}

}  // namespace teleop
