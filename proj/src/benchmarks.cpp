#include "teleop/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace teleop {

ProfileReport profile_retargeting(const RetargetProblem& problem,
                                  const std::vector<std::vector<Eigen::Vector3d>>& human,
                                  const Eigen::VectorXd& initial_q, bool reduced, bool constrained) {
  problem.validate();
  Profiler profiler;
  Eigen::VectorXd prev = initial_q;
  double gap = 0.0;
  for (const auto& frame : human) {
    RetargetResult a, b;
    if (reduced || constrained) a = retarget_vectors(problem, frame, prev);
    if (reduced) profiler.record("retargeting (reduced)", a.solve_time);
    if (constrained) {
      b = retarget_constrained(problem, frame, prev);
      profiler.record("retargeting (constrained)", b.solve_time);
      gap = std::max(gap, std::abs(a.objective_value - b.objective_value));
    }
    prev = a.active_q;
  }
  ProfileReport report = profiler.report();
  if (reduced && constrained && !human.empty()) {
    report.values["speedup"] =
        report.find("retargeting (constrained)")->mean_ms / report.find("retargeting (reduced)")->mean_ms;
    report.values["max_objective_gap"] = gap;
  }
  return report;
}

const char* motion_variant_name(MotionVariant v) {
  switch (v) {
    case MotionVariant::kIk: return "IK";
    case MotionVariant::kColl: return "+Coll";
    case MotionVariant::kSing: return "+Sing";
    case MotionVariant::kCollSing: return "+Coll+Sing";
  }
  return "?";
}

std::vector<MotionVariant> parse_motion_variants(const std::string& text) {
  if (text == "all") return {MotionVariant::kIk, MotionVariant::kColl, MotionVariant::kSing, MotionVariant::kCollSing};
  std::vector<MotionVariant> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item == "ik") out.push_back(MotionVariant::kIk);
    else if (item == "coll") out.push_back(MotionVariant::kColl);
    else if (item == "sing") out.push_back(MotionVariant::kSing);
    else if (item == "coll+sing") out.push_back(MotionVariant::kCollSing);
    else throw std::invalid_argument("unknown motion-control variant '" + item + "'");
  }
  if (out.empty()) throw std::invalid_argument("no motion-control variants given");
  return out;
}

ProfileReport profile_motion_control(const ArmControlProblem& base, const std::vector<TimedPose>& targets,
                                     const Eigen::VectorXd& initial_q, const std::vector<MotionVariant>& variants) {
  ProfileReport report;
  for (MotionVariant v : variants) {
    ArmControlProblem p = base;
    p.enable_collision = v == MotionVariant::kColl || v == MotionVariant::kCollSing;
    p.enable_singularity = v == MotionVariant::kSing || v == MotionVariant::kCollSing;
    if (p.enable_collision && !p.spheres) p.spheres = std::make_shared<const SphereModel>(build_sphere_model(*p.model));
    std::vector<double> times;
    times.reserve(targets.size());
    std::size_t failed = 0;
    for (const ArmCommand& c : track_trajectory(p, targets, initial_q)) {
      times.push_back(c.solve_time);
      if (c.failed) ++failed;
    }
    const std::string name = std::string("motion_control (") + motion_variant_name(v) + ")";
    report.rows.push_back(summarize(name, std::move(times)));
    if (failed) report.values[name + " failed"] = static_cast<double>(failed);
  }
  return report;
}

ProfileReport profile_haptics(const CalibrationTable& table, const HapticsConfig& config,
                              const std::vector<TactileFrame>& frames) {
  HapticsPipeline pipeline(table, config);
  std::vector<double> times;
  times.reserve(frames.size());
  for (const auto& f : frames) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto bytes = pipeline.process_bytes(f);
    times.push_back(seconds_since(t0));
    if (bytes.size() != static_cast<std::size_t>(table.sensor_count())) throw HapticsError("pipeline emitted a short frame");
  }
  ProfileReport report;
  report.rows.push_back(summarize("haptics (PWM)", std::move(times)));
  return report;
}

}  // namespace teleop
