// teleop: command-line front end over the solver library.
//
// Exit codes: 0 ok, 1 usage / configuration, 2 data error, 3 solver failure
// or non-convergence.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "teleop/arm_control.hpp"
#include "teleop/benchmarks.hpp"
#include "teleop/collision.hpp"
#include "teleop/haptics.hpp"
#include "teleop/model_io.hpp"
#include "teleop/recording.hpp"
#include "teleop/retargeting.hpp"
#include "teleop/session.hpp"
#include "teleop/synth.hpp"
#include "teleop/wire.hpp"

namespace {

using namespace teleop;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kSolver = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Eigen::VectorXd parse_vector(const std::string& text, const char* what) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (item.empty() || *end != '\0') throw UsageError(std::string("bad number '") + item + "' in " + what);
    values.push_back(v);
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::shared_ptr<const KinematicModel> load_shared(const std::string& path) {
  return std::make_shared<const KinematicModel>(load_model_file(path));
}

std::vector<std::string> active_joint_names(const KinematicModel& model) {
  std::vector<std::string> names;
  for (int i = 0; i < model.active_count(); ++i) names.push_back(model.coordinate_joint(i).name);
  return names;
}

// Links with no child joint, in declaration order.
std::vector<std::string> leaf_links(const KinematicModel& model) {
  std::vector<bool> has_child(model.links().size(), false);
  for (const auto& j : model.joints()) has_child[j.parent_link] = true;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < model.links().size(); ++i) {
    if (!has_child[i]) out.push_back(model.links()[i].name);
  }
  return out;
}

Side parse_side(const std::string& text) {
  if (text == "left") return Side::kLeft;
  if (text == "right") return Side::kRight;
  throw UsageError("side must be left or right, got '" + text + "'");
}

// Tip frames map to recording labels in order.
RetargetProblem hand_problem(std::shared_ptr<const KinematicModel> model, const std::string& origin,
                             const std::vector<std::string>& tips, const std::vector<std::string>& labels) {
  if (tips.size() != labels.size()) {
    throw UsageError("got " + std::to_string(tips.size()) + " tip frames for " + std::to_string(labels.size()) +
                     " keypoint labels");
  }
  RetargetProblem p;
  p.model = std::move(model);
  for (std::size_t i = 0; i < tips.size(); ++i) p.vectors.push_back({origin, tips[i], labels[i], ""});
  return p;
}

void print_report(const ProfileReport& report, const std::string& json_path) {
  std::cout << report.to_table();
  if (!json_path.empty()) {
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write report '" + json_path + "'");
    out << report.to_json() << '\n';
  }
}

// ---- fk ----

struct FkArgs {
  std::string robot, q, frame;
};

int cmd_fk(const FkArgs& a) {
  const KinematicModel model = load_model_file(a.robot);
  const Eigen::VectorXd q = parse_vector(a.q, "--q");
  if (q.size() != model.active_count()) {
    throw std::invalid_argument("--q has " + std::to_string(q.size()) + " values, model has " +
                                std::to_string(model.active_count()) + " active joints");
  }
  if (!within_limits(model, q, 1e-12)) throw std::invalid_argument("--q is outside the joint limits");
  const std::string frame = a.frame.empty() ? model.links().back().name : a.frame;
  const Pose pose = forward_kinematics(model, q, frame);
  const auto& p = pose.position();
  const auto& r = pose.orientation();
  std::cout << std::setprecision(12) << "frame: " << frame << '\n'
            << "position: " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n'
            << "orientation_wxyz: " << r.w() << ' ' << r.x() << ' ' << r.y() << ' ' << r.z() << '\n';
  return kOk;
}

// ---- retarget ----

struct RetargetArgs {
  std::string robot, frames, out, side = "right", origin, tips, initial;
  double alpha = 1.0, beta = 0.03;
  int max_iterations = 50;
  bool constrained = false;
};

int cmd_retarget(const RetargetArgs& a) {
  auto model = load_shared(a.robot);
  const Recording rec = replay_load(a.frames);
  const Side side = parse_side(a.side);
  if (rec.frames.empty()) {
    std::ofstream(a.out).flush();
    std::cerr << "retarget: empty recording\n";
    return kOk;
  }
  const std::string origin = a.origin.empty() ? model->links()[model->root_link()].name : a.origin;
  const std::vector<std::string> tips = a.tips.empty() ? leaf_links(*model) : parse_list(a.tips);
  RetargetProblem problem = hand_problem(model, origin, tips, rec.labels);
  problem.scaling = a.alpha;
  problem.smoothness_weight = a.beta;
  problem.max_iterations = a.max_iterations;

  Eigen::VectorXd q = a.initial.empty() ? Eigen::VectorXd(0.5 * (model->active_lower() + model->active_upper()))
                                        : parse_vector(a.initial, "--initial");
  if (q.size() != model->active_count()) throw std::invalid_argument("--initial size does not match the model");

  JointTrajectory out;
  out.joints = active_joint_names(*model);
  std::size_t skipped = 0, unconverged = 0;
  HandRetargeter reduced(problem, q);
  bool primed = false;  // first solved frame has no smoothness baseline
  for (const auto& f : rec.frames) {
    const HandFrame& hand = f.hand(side);
    RetargetResult r;
    if (!a.constrained) {
      r = reduced.step(hand);
    } else if (!hand.finite()) {
      r.active_q = q;
      r.skipped = true;
    } else {
      RetargetProblem p = problem;
      if (!primed) p.smoothness_weight = 0.0;
      r = retarget_constrained(p, human_vectors(p, hand), q);
      primed = true;
    }
    if (r.skipped) {
      ++skipped;
    } else if (!r.converged) {
      ++unconverged;
    }
    q = r.active_q;
    out.timestamps.push_back(f.timestamp);
    out.q.push_back(q);
    out.skipped.push_back(r.skipped);
  }
  write_joint_trajectory(a.out, out);
  if (skipped > 0) std::cerr << "retarget: warning: skipped " << skipped << " frame(s) with non-finite keypoints\n";
  if (unconverged > 0) {
    std::cerr << "retarget: " << unconverged << " frame(s) did not converge\n";
    return kSolver;
  }
  return kOk;
}

// ---- profile ----

struct ProfileArgs {
  std::string robot, module, variants = "all", report, ee, start, loop_joints = "reduced,constrained", origin, tips;
  int frames = 1000;
  double rate = 60.0;
  std::uint64_t seed = 1;
  int sensors = kDefaultSensorCount;
};

int cmd_profile(const ProfileArgs& a) {
  if (a.frames < 1) throw UsageError("--frames must be positive");
  ProfileReport report;
  if (a.module == "retargeting") {
    auto model = load_shared(a.robot);
    SynthHand hand;
    hand.model = model;
    hand.origin_frame = a.origin.empty() ? model->links()[model->root_link()].name : a.origin;
    hand.tip_frames = a.tips.empty() ? leaf_links(*model) : parse_list(a.tips);
    RecordingSpec spec;
    spec.kind = SynthKind::kReach;
    spec.frames = a.frames;
    spec.rate_hz = a.rate;
    spec.seed = a.seed;
    const SynthRecording synth = synth_recording(spec, &hand);
    const RetargetProblem problem = hand_problem(model, hand.origin_frame, hand.tip_frames, synth.recording.labels);
    std::vector<std::vector<Eigen::Vector3d>> human;
    for (const auto& f : synth.recording.frames) human.push_back(human_vectors(problem, f.right));
    bool reduced = false, constrained = false;
    for (const auto& v : parse_list(a.loop_joints)) {
      if (v == "reduced") {
        reduced = true;
      } else if (v == "constrained") {
        constrained = true;
      } else {
        throw UsageError("--loop-joints takes reduced and/or constrained, got '" + v + "'");
      }
    }
    const Eigen::VectorXd start = 0.5 * (model->active_lower() + model->active_upper());
    report = profile_retargeting(problem, human, start, reduced, constrained);
  } else if (a.module == "motion_control") {
    std::vector<MotionVariant> variants;
    try {
      variants = parse_motion_variants(a.variants);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    auto model = load_shared(a.robot);
    ArmControlProblem base;
    base.model = model;
    base.ee_frame = a.ee.empty() ? model->links().back().name : a.ee;
    base.spheres = std::make_shared<const SphereModel>(build_sphere_model(*model));
    Eigen::VectorXd start = a.start.empty() ? Eigen::VectorXd::Zero(model->active_count()).eval()
                                            : parse_vector(a.start, "--start");
    if (start.size() != model->active_count()) throw std::invalid_argument("--start size does not match the model");
    start = start.cwiseMax(model->active_lower()).cwiseMin(model->active_upper());
    const ArmPath path = synth_arm_path(*model, base.ee_frame, start, a.frames, a.rate, a.seed);
    report = profile_motion_control(base, path.targets, start, variants);
  } else if (a.module == "haptics") {
    PulseSpec spec;
    spec.sensors = a.sensors;
    spec.frames = a.frames;
    spec.seed = a.seed;
    const PulseFixture fx = synth_pulse(spec);
    const std::size_t warm = std::min<std::size_t>(fx.frames.size(), 50);
    const HapticsConfig config = derive_haptics_config(
        fx.table, std::vector<TactileFrame>(fx.frames.begin(), fx.frames.begin() + warm), fx.frames);
    report = profile_haptics(fx.table, config, fx.frames);
  } else {
    throw UsageError("--module must be retargeting, motion_control or haptics");
  }
  print_report(report, a.report);
  return kOk;
}

// ---- session ----

struct SessionArgs {
  std::string config, out, report;
};

int cmd_session(const SessionArgs& a) {
  SessionConfig config = load_session_config(a.config);
  if (!a.out.empty()) config.output = a.out;
  if (!a.report.empty()) config.report = a.report;

  std::ofstream out;
  if (!config.output.empty()) {
    out.open(config.output);
    if (!out) throw std::runtime_error("cannot write command stream '" + config.output.string() + "'");
    write_command_header(out, config);
  }
  CommandSink sink;
  if (out.is_open()) sink = [&out](const SessionCommand& c) { write_command(out, c); };
  const SessionResult result = run_session(config, nullptr, sink);
  out.close();

  print_report(result.report, config.report.string());
  const auto& s = result.stats;
  std::cout << "frames: " << s.frames << '\n'
            << "malformed_frames: " << s.malformed_frames << '\n'
            << "skipped_hand_frames: " << s.skipped_hand_frames << '\n'
            << "failed_arm_solves: " << s.failed_arm_solves << '\n'
            << "unconverged_solves: " << s.unconverged_solves << '\n'
            << "deadline_misses: " << s.deadline_misses << '\n'
            << "dropped_frames: " << s.dropped_frames << '\n'
            << "haptics_frames: " << s.haptics_frames << '\n'
            << "haptics_dropped: " << s.haptics_dropped << '\n'
            << std::setprecision(12) << "joint_change: " << s.joint_change << '\n';
  if (!result.diagnostic.empty()) std::cerr << "session: " << result.diagnostic << '\n';
  if (s.failed_arm_solves > 0) return kSolver;
  return kOk;
}

// ---- haptics ----

struct HapticsArgs {
  std::string calib, frames, out, log, squeeze;
  double cutoff = 5.0;
  std::optional<double> threshold, full_scale;
  int warmup = 50;
};

int cmd_haptics(const HapticsArgs& a) {
  const CalibrationTable table = CalibrationTable::load(a.calib);
  const std::vector<TactileFrame> frames = read_tactile_frames(a.frames);
  const auto s = table.sensor_count();

  HapticsConfig config;
  if (a.threshold || a.full_scale) {
    if (!a.threshold || !a.full_scale) throw UsageError("--threshold and --full-scale go together");
    if (!(*a.full_scale > *a.threshold)) throw UsageError("--full-scale must exceed --threshold");
    config.cutoff_hz = a.cutoff;
    config.threshold = Eigen::VectorXd::Constant(s, *a.threshold);
    config.full_scale = Eigen::VectorXd::Constant(s, *a.full_scale);
  } else {
    const std::size_t warm = std::min<std::size_t>(frames.size(), static_cast<std::size_t>(std::max(a.warmup, 0)));
    if (warm == 0) throw UsageError("deriving thresholds needs warmup frames");
    const std::vector<TactileFrame> squeeze = a.squeeze.empty() ? frames : read_tactile_frames(a.squeeze);
    config = derive_haptics_config(table, std::vector<TactileFrame>(frames.begin(), frames.begin() + warm), squeeze,
                                   a.cutoff);
  }

  const std::vector<std::uint8_t> bytes = haptics_pipeline(frames, table, config);
  {
    std::ofstream out(a.out, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + a.out + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  const auto writes = board_decode(bytes, s);
  const std::string log_path = a.log.empty() ? a.out + ".log" : a.log;
  std::ofstream log(log_path);
  if (!log) throw std::runtime_error("cannot write '" + log_path + "'");
  log << "# frame motor duty\n";
  std::size_t active = 0;
  for (std::size_t f = 0; f < writes.size(); ++f) {
    bool any = false;
    for (const auto& w : writes[f]) {
      log << f << ' ' << w.motor << ' ' << static_cast<int>(w.duty) << '\n';
      any = any || w.duty != 0;
    }
    active += any ? 1 : 0;
  }
  std::cout << "frames: " << writes.size() << '\n' << "active_frames: " << active << '\n';
  return kOk;
}

// ---- synth ----

struct SynthArgs {
  std::string kind, out, hand, origin, tips, truth, side = "right", calib_out;
  std::uint64_t seed = 1;
  std::optional<int> frames;
  std::optional<double> rate;
  double alpha = 1.0;
  int sensors = kDefaultSensorCount;
};

int cmd_synth(const SynthArgs& a) {
  SynthKind kind;
  try {
    kind = parse_synth_kind(a.kind);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (kind == SynthKind::kPulse) {
    PulseSpec spec;
    spec.sensors = a.sensors;
    spec.seed = a.seed;
    if (a.frames) spec.frames = *a.frames;
    if (a.rate) spec.rate_hz = *a.rate;
    const PulseFixture fx = synth_pulse(spec);
    write_tactile_frames(a.out, fx.frames);
    const std::string calib = a.calib_out.empty() ? a.out + ".calib.json" : a.calib_out;
    std::ofstream out(calib);
    if (!out) throw std::runtime_error("cannot write '" + calib + "'");
    out << fx.table.to_json() << '\n';
    return kOk;
  }

  RecordingSpec spec;
  spec.kind = kind;
  spec.seed = a.seed;
  if (a.frames) spec.frames = *a.frames;
  if (a.rate) spec.rate_hz = *a.rate;
  SynthHand hand;
  if (!a.hand.empty()) {
    hand.model = load_shared(a.hand);
    hand.origin_frame = a.origin.empty() ? hand.model->links()[hand.model->root_link()].name : a.origin;
    hand.tip_frames = a.tips.empty() ? leaf_links(*hand.model) : parse_list(a.tips);
    hand.scaling = a.alpha;
  } else if (!a.truth.empty()) {
    throw UsageError("--truth needs --hand");
  }
  const SynthRecording synth = synth_recording(spec, a.hand.empty() ? nullptr : &hand);
  write_recording(std::filesystem::path(a.out), synth.recording);
  if (!a.truth.empty()) {
    JointTrajectory truth;
    truth.joints = active_joint_names(*hand.model);
    truth.q = parse_side(a.side) == Side::kLeft ? synth.left_q : synth.right_q;
    for (const auto& f : synth.recording.frames) truth.timestamps.push_back(f.timestamp);
    truth.skipped.assign(truth.q.size(), false);
    write_joint_trajectory(a.truth, truth);
  }
  return kOk;
}

// ---- serve ----

struct ServeArgs {
  std::string frames, host = "127.0.0.1";
  int port = 0;
  double rate = 1.0;
};

int cmd_serve(const ServeArgs& a) {
  const Recording rec = replay_load(a.frames);
  StreamServer server(a.host, a.port);
  std::cout << "listening: " << a.host << ':' << server.port() << std::endl;
  server.accept_client();
  WireMessage engage;
  engage.type = MessageType::kEngage;
  engage.timestamp = rec.frames.empty() ? 0.0 : rec.frames.front().timestamp;
  server.send(engage);
  ReplayPlayer player(rec, a.rate);
  while (auto f = player.next()) {
    WireMessage m;
    m.type = MessageType::kHandFrame;
    m.timestamp = f->timestamp;
    m.frame = *f;
    server.send(m);
  }
  WireMessage end;
  end.type = MessageType::kEnd;
  server.send(end);
  server.close();
  std::cout << "sent: " << rec.frames.size() << '\n';
  return kOk;
}

template <typename F>
int guarded(F&& f) {
  try {
    return f();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kSolver;
  } catch (const std::exception& e) {
    // ModelError, RecordingError, HapticsError, WireError, bad values, I/O.
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"teleop: hand retargeting, arm motion control and haptics tools"};
  app.require_subcommand(1);
  int code = kOk;

  FkArgs fk;
  auto* fk_cmd = app.add_subcommand("fk", "Forward kinematics of one frame");
  fk_cmd->add_option("--robot", fk.robot, "Robot description file")->required();
  fk_cmd->add_option("--q", fk.q, "Active joint values, comma separated")->required()->allow_extra_args(false);
  fk_cmd->add_option("--frame", fk.frame, "Link name (default: last link)");
  fk_cmd->callback([&] { code = guarded([&] { return cmd_fk(fk); }); });

  RetargetArgs rt;
  auto* rt_cmd = app.add_subcommand("retarget", "Retarget one hand of a recording to joint angles");
  rt_cmd->add_option("--robot", rt.robot, "Hand description file")->required();
  rt_cmd->add_option("--frames", rt.frames, "Recording file")->required();
  rt_cmd->add_option("--out", rt.out, "Joint trajectory output")->required();
  rt_cmd->add_option("--alpha", rt.alpha, "Human-to-robot scaling")->capture_default_str();
  rt_cmd->add_option("--beta", rt.beta, "Smoothness weight")->capture_default_str();
  rt_cmd->add_option("--side", rt.side, "left or right")->capture_default_str();
  rt_cmd->add_option("--origin", rt.origin, "Origin frame of every vector (default: root link)");
  rt_cmd->add_option("--tips", rt.tips, "Tip frames in keypoint order (default: leaf links)");
  rt_cmd->add_option("--initial", rt.initial, "Warm start (default: limit midpoints)");
  rt_cmd->add_option("--max-iterations", rt.max_iterations)->capture_default_str();
  rt_cmd->add_flag("--constrained", rt.constrained, "Solve with loop closures as constraints");
  rt_cmd->callback([&] { code = guarded([&] { return cmd_retarget(rt); }); });

  ProfileArgs pf;
  auto* pf_cmd = app.add_subcommand("profile", "Time one module on synthetic input");
  pf_cmd->add_option("--robot", pf.robot, "Robot description file (retargeting, motion_control)");
  pf_cmd->add_option("--module", pf.module, "retargeting | motion_control | haptics")->required();
  pf_cmd->add_option("--variants", pf.variants, "Motion variants: all or ik,coll,sing,coll+sing")->capture_default_str();
  pf_cmd->add_option("--loop-joints", pf.loop_joints, "reduced and/or constrained")->capture_default_str();
  pf_cmd->add_option("--frames", pf.frames)->capture_default_str();
  pf_cmd->add_option("--rate", pf.rate, "Synthetic stream rate in Hz")->capture_default_str();
  pf_cmd->add_option("--seed", pf.seed)->capture_default_str();
  pf_cmd->add_option("--ee", pf.ee, "End-effector frame (default: last link)");
  pf_cmd->add_option("--start", pf.start, "Arm start configuration (default: zeros)");
  pf_cmd->add_option("--origin", pf.origin, "Hand vector origin frame");
  pf_cmd->add_option("--tips", pf.tips, "Hand vector tip frames");
  pf_cmd->add_option("--sensors", pf.sensors, "Tactile sensor count")->capture_default_str();
  pf_cmd->add_option("--report", pf.report, "Write the report as JSON");
  pf_cmd->callback([&] {
    code = guarded([&] {
      if (pf.module != "haptics" && pf.robot.empty()) throw UsageError("--robot is required for this module");
      return cmd_profile(pf);
    });
  });

  SessionArgs ss;
  auto* ss_cmd = app.add_subcommand("session", "Run a replay or network session");
  ss_cmd->add_option("--config", ss.config, "Session JSON")->required();
  ss_cmd->add_option("--out", ss.out, "Command stream output (overrides the config)");
  ss_cmd->add_option("--report", ss.report, "Report JSON output (overrides the config)");
  ss_cmd->callback([&] { code = guarded([&] { return cmd_session(ss); }); });

  HapticsArgs hp;
  double threshold = 0.0, full_scale = 0.0;
  auto* hp_cmd = app.add_subcommand("haptics", "Tactile stream to PWM bytes");
  hp_cmd->add_option("--calib", hp.calib, "Calibration table")->required();
  hp_cmd->add_option("--frames", hp.frames, "Tactile frames file")->required();
  hp_cmd->add_option("--out", hp.out, "PWM byte output")->required();
  hp_cmd->add_option("--log", hp.log, "Decoded motor writes (default: <out>.log)");
  hp_cmd->add_option("--cutoff", hp.cutoff, "Low-pass cutoff in Hz")->capture_default_str();
  auto* t_opt = hp_cmd->add_option("--threshold", threshold, "Activation threshold for every sensor");
  auto* v_opt = hp_cmd->add_option("--full-scale", full_scale, "Full-scale value for every sensor");
  hp_cmd->add_option("--warmup", hp.warmup, "Frames used to derive thresholds")->capture_default_str();
  hp_cmd->add_option("--squeeze", hp.squeeze, "Squeeze frames used to derive full scale (default: the input)");
  hp_cmd->callback([&] {
    if (t_opt->count() > 0) hp.threshold = threshold;
    if (v_opt->count() > 0) hp.full_scale = full_scale;
    code = guarded([&] { return cmd_haptics(hp); });
  });

  SynthArgs sy;
  int synth_frames = 0;
  double synth_rate = 0.0;
  auto* sy_cmd = app.add_subcommand("synth", "Generate a synthetic recording or tactile fixture");
  sy_cmd->add_option("--kind", sy.kind, "reach | static | pulse")->required();
  sy_cmd->add_option("--out", sy.out, "Output file")->required();
  sy_cmd->add_option("--seed", sy.seed)->capture_default_str();
  auto* f_opt = sy_cmd->add_option("--frames", synth_frames);
  auto* r_opt = sy_cmd->add_option("--rate", synth_rate, "Hz");
  sy_cmd->add_option("--hand", sy.hand, "Hand description; keypoints come from its forward kinematics");
  sy_cmd->add_option("--origin", sy.origin, "Keypoint origin frame");
  sy_cmd->add_option("--tips", sy.tips, "Keypoint tip frames");
  sy_cmd->add_option("--alpha", sy.alpha, "Human-to-robot scaling")->capture_default_str();
  sy_cmd->add_option("--truth", sy.truth, "Write ground-truth joints of one side");
  sy_cmd->add_option("--side", sy.side, "Side for --truth")->capture_default_str();
  sy_cmd->add_option("--sensors", sy.sensors, "Tactile sensor count (pulse)")->capture_default_str();
  sy_cmd->add_option("--calib-out", sy.calib_out, "Calibration table output (pulse; default: <out>.calib.json)");
  sy_cmd->callback([&] {
    if (f_opt->count() > 0) sy.frames = synth_frames;
    if (r_opt->count() > 0) sy.rate = synth_rate;
    code = guarded([&] { return cmd_synth(sy); });
  });

  ServeArgs sv;
  auto* sv_cmd = app.add_subcommand("serve", "Stream a recording to one TCP client");
  sv_cmd->add_option("--frames", sv.frames, "Recording file")->required();
  sv_cmd->add_option("--host", sv.host)->capture_default_str();
  sv_cmd->add_option("--port", sv.port, "0 picks a free port")->capture_default_str();
  sv_cmd->add_option("--rate", sv.rate, "Playback speed; 0 sends back to back")->capture_default_str();
  sv_cmd->callback([&] { code = guarded([&] { return cmd_serve(sv); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  return code;
}
