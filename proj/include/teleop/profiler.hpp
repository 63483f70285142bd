#pragma once

// Per-module wall-clock statistics, reported in milliseconds.

#include <chrono>
#include <map>
#include <string>
#include <vector>

namespace teleop {

struct TimingStats {
  std::string module;
  std::size_t samples = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

/// Nearest-rank percentiles of durations given in seconds.
TimingStats summarize(const std::string& module, std::vector<double> seconds);

struct ProfileReport {
  std::vector<TimingStats> rows;
  std::map<std::string, double> values;  // derived figures, e.g. speedup ratios

  const TimingStats* find(const std::string& module) const;
  std::string to_table() const;
  std::string to_json() const;
};

class Profiler {
 public:
  void record(const std::string& module, double seconds);
  const std::vector<double>& samples(const std::string& module) const;
  ProfileReport report() const;

 private:
  std::vector<std::string> order_;
  std::map<std::string, std::vector<double>> samples_;
};

/// Seconds elapsed since `start` on the steady clock.
inline double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace teleop
