#include "teleop/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace teleop {
namespace {

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Vector3d v(n(rng), n(rng), n(rng));
  return v.normalized();
}

std::vector<Eigen::Vector3d> hand_keypoints(const SynthHand& hand, const Eigen::VectorXd& q) {
  const KinematicState state = compute_state(*hand.model, full_config(*hand.model, q));
  const Eigen::Isometry3d origin_inv = state.links[hand.model->link_index(hand.origin_frame)].inverse();
  std::vector<Eigen::Vector3d> out;
  for (const auto& tip : hand.tip_frames) {
    const Eigen::Vector3d p = origin_inv * state.links[hand.model->link_index(tip)].translation();
    out.push_back(p / hand.scaling);
  }
  return out;
}

}  // namespace

SynthKind parse_synth_kind(const std::string& text) {
  if (text == "reach") return SynthKind::kReach;
  if (text == "static") return SynthKind::kStatic;
  if (text == "pulse") return SynthKind::kPulse;
  throw std::invalid_argument("unknown synth kind '" + text + "'");
}

Eigen::VectorXd random_configuration(const KinematicModel& model, std::uint64_t seed, double margin) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::VectorXd& lo = model.active_lower();
  const Eigen::VectorXd& hi = model.active_upper();
  Eigen::VectorXd q(model.active_count());
  for (int i = 0; i < q.size(); ++i) {
    const double m = margin * (hi[i] - lo[i]);
    q[i] = lo[i] + m + u(rng) * (hi[i] - lo[i] - 2.0 * m);
  }
  return q;
}

SynthRecording synth_recording(const RecordingSpec& spec, const SynthHand* hand) {
  if (spec.kind == SynthKind::kPulse) throw std::invalid_argument("pulse is a tactile fixture, not a recording");
  if (spec.frames < 0 || !(spec.rate_hz > 0.0)) throw std::invalid_argument("frames >= 0 and rate > 0 required");
  if (hand && (hand->tip_frames.empty() || !(hand->scaling > 0.0))) {
    throw std::invalid_argument("synthetic hand needs tip frames and a positive scaling");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02);

  SynthRecording out;
  const std::vector<std::string> default_labels = {"thumb_tip", "index_tip", "middle_tip", "ring_tip", "pinky_tip"};
  out.recording.labels = hand ? hand->tip_frames : default_labels;

  struct Motion {
    Eigen::Vector3d start, direction, axis;
    Eigen::VectorXd q_from, q_to;
  } motion[2];
  for (int s = 0; s < 2; ++s) {
    Motion& m = motion[s];
    m.start = Eigen::Vector3d(s == 0 ? -0.2 : 0.2, 0.0, 0.0) + Eigen::Vector3d(jitter(rng), jitter(rng), jitter(rng));
    m.direction = random_unit(rng);
    m.axis = random_unit(rng);
    if (hand) {
      m.q_from = random_configuration(*hand->model, rng(), 0.1);
      m.q_to = random_configuration(*hand->model, rng(), 0.1);
    }
  }

  const std::vector<Eigen::Vector3d> fixed_keypoints = {
      {0.03, -0.04, 0.05}, {0.02, -0.01, 0.09}, {0.0, 0.0, 0.1}, {-0.02, 0.01, 0.095}, {-0.04, 0.02, 0.08}};

  for (int f = 0; f < spec.frames; ++f) {
    const double t = f / spec.rate_hz;
    const double phase = spec.kind == SynthKind::kReach && spec.frames > 1 ? smoothstep(double(f) / (spec.frames - 1)) : 0.0;
    BimanualFrame frame;
    frame.timestamp = t;
    for (int s = 0; s < 2; ++s) {
      const Motion& m = motion[s];
      HandFrame& h = s == 0 ? frame.left : frame.right;
      h.side = s == 0 ? Side::kLeft : Side::kRight;
      h.timestamp = t;
      h.labels = out.recording.labels;
      const Eigen::Vector3d p = m.start + spec.reach_distance * phase * m.direction;
      const Eigen::Quaterniond q(Eigen::AngleAxisd(spec.reach_rotation * phase, m.axis));
      h.wrist = Pose(p, q);
      if (hand) {
        const Eigen::VectorXd qa = m.q_from + phase * (m.q_to - m.q_from);
        h.keypoints = hand_keypoints(*hand, qa);
        (s == 0 ? out.left_q : out.right_q).push_back(qa);
      } else {
        h.keypoints = fixed_keypoints;
      }
    }
    out.recording.frames.push_back(std::move(frame));
  }
  return out;
}

ArmPath synth_arm_path(const KinematicModel& arm, const std::string& ee_frame, const Eigen::VectorXd& start, int frames,
                       double rate_hz, std::uint64_t seed, double amplitude) {
  if (start.size() != arm.active_count()) throw std::invalid_argument("start configuration has wrong size");
  if (frames < 0 || !(rate_hz > 0.0)) throw std::invalid_argument("frames >= 0 and rate > 0 required");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(0.5, 1.0), freq(0.1, 0.3), sign(-1.0, 1.0);
  const int k = arm.active_count();
  Eigen::VectorXd a(k), f(k);
  for (int j = 0; j < k; ++j) {
    a[j] = amplitude * amp(rng) * (sign(rng) < 0.0 ? -1.0 : 1.0);
    f[j] = freq(rng);
  }
  ArmPath out;
  for (int i = 0; i < frames; ++i) {
    const double t = i / rate_hz;
    Eigen::VectorXd q(k);
    for (int j = 0; j < k; ++j) q[j] = start[j] + a[j] * std::sin(2.0 * std::numbers::pi * f[j] * t);
    q = q.cwiseMax(arm.active_lower()).cwiseMin(arm.active_upper());
    out.targets.push_back({t, forward_kinematics(arm, q, ee_frame)});
    out.q.push_back(std::move(q));
  }
  return out;
}

PulseFixture synth_pulse(const PulseSpec& spec) {
  if (spec.sensors <= 0 || spec.fingers <= 0 || spec.frames < 0 || !(spec.rate_hz > 0.0)) {
    throw std::invalid_argument("pulse spec needs positive sensors, fingers and rate");
  }
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> offset(80.0, 120.0);
  std::uniform_real_distribution<double> slope(5.0, 25.0);
  std::normal_distribution<double> noise(0.0, 1.0);

  // Drift for sensor s at joint position x: base_s + slope_s * x^2. The grid
  // stores it exactly; between samples linear interpolation overestimates.
  std::vector<double> base(spec.sensors), gain(spec.sensors);
  for (int s = 0; s < spec.sensors; ++s) {
    base[s] = offset(rng);
    gain[s] = slope(rng);
  }
  auto finger_of = [&](int s) { return s * spec.fingers / spec.sensors; };
  auto drift = [&](int s, double x) { return base[s] + gain[s] * x * x; };

  const std::vector<double> grid = {0.0, 0.3, 0.6, 0.9, 1.2, 1.5, 1.8};
  std::vector<CalibrationAxis> axes(spec.fingers);
  for (int fgr = 0; fgr < spec.fingers; ++fgr) {
    axes[fgr].joint = fgr;
    axes[fgr].positions = grid;
  }
  for (int s = 0; s < spec.sensors; ++s) axes[finger_of(s)].sensors.push_back(s);
  for (auto& axis : axes) {
    for (double x : grid) {
      Eigen::VectorXd b(axis.sensors.size());
      for (std::size_t i = 0; i < axis.sensors.size(); ++i) b[i] = drift(axis.sensors[i], x);
      axis.baselines.push_back(b);
    }
  }
  std::erase_if(axes, [](const CalibrationAxis& a) { return a.sensors.empty(); });

  PulseFixture out;
  out.table = CalibrationTable(spec.sensors, std::move(axes));
  std::vector<bool> pulsed(spec.sensors, false);
  for (int s : spec.pulse_sensors) {
    if (s < 0 || s >= spec.sensors) throw std::invalid_argument("pulse sensor index out of range");
    pulsed[s] = true;
  }
  for (int f = 0; f < spec.frames; ++f) {
    TactileFrame frame;
    frame.timestamp = f / spec.rate_hz;
    frame.joint_context.resize(spec.fingers);
    for (int g = 0; g < spec.fingers; ++g) {
      // Slow flexion, kept on grid samples so the fixture calibrates to pure noise.
      const double x = 0.9 + 0.9 * std::sin(2.0 * std::numbers::pi * 0.2 * frame.timestamp + g);
      frame.joint_context[g] = grid[static_cast<std::size_t>(std::lround(x / 0.3))];
    }
    const bool in_pulse = frame.timestamp >= spec.pulse_start && frame.timestamp < spec.pulse_end;
    frame.values.resize(spec.sensors);
    for (int s = 0; s < spec.sensors; ++s) {
      double v = drift(s, frame.joint_context[finger_of(s)]) + spec.noise * noise(rng);
      if (in_pulse && pulsed[s]) v += spec.amplitude;
      frame.values[s] = v;
    }
    out.frames.push_back(std::move(frame));
  }
  return out;
}

}  // namespace teleop
