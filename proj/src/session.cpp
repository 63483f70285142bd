#include "teleop/session.hpp"

#include <condition_variable>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "teleop/mailbox.hpp"
#include "teleop/model_io.hpp"
#include "teleop/wire.hpp"

namespace teleop {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

int index_of(Side s) { return s == Side::kLeft ? 0 : 1; }
constexpr Side kSides[2] = {Side::kLeft, Side::kRight};

// ---- config parsing ---------------------------------------------------------

void allow_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string()) throw ConfigError(where + ": '" + key + "' (string) required");
  return obj[key].get<std::string>();
}

Eigen::VectorXd vector_or(const json& obj, const char* key, Eigen::VectorXd fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto values = get<std::vector<double>>(obj, key, {}, where);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::shared_ptr<const KinematicModel> load_robot(const json& obj, const std::string& where,
                                                 const std::filesystem::path& base) {
  return std::make_shared<const KinematicModel>(load_model_file(resolve_path(base, require_string(obj, "robot", where))));
}

ArmSetup parse_arm(const json& a, const std::string& where, const std::filesystem::path& base) {
  allow_keys(a, {"robot", "ee_frame", "initial_q", "position_weight", "rotation_weight", "singularity_trigger",
                 "singularity_temperature", "collision_epsilon", "enable_collision", "enable_singularity",
                 "max_iterations", "convergence_tol"},
             where);
  ArmSetup s;
  ArmControlProblem& p = s.problem;
  p.model = load_robot(a, where, base);
  p.ee_frame = require_string(a, "ee_frame", where);
  p.position_weight = get(a, "position_weight", p.position_weight, where);
  p.rotation_weight = get(a, "rotation_weight", p.rotation_weight, where);
  p.singularity_trigger = get(a, "singularity_trigger", p.singularity_trigger, where);
  p.singularity_temperature = get(a, "singularity_temperature", p.singularity_temperature, where);
  p.collision_epsilon = get(a, "collision_epsilon", p.collision_epsilon, where);
  p.enable_collision = get(a, "enable_collision", p.enable_collision, where);
  p.enable_singularity = get(a, "enable_singularity", p.enable_singularity, where);
  p.max_iterations = get(a, "max_iterations", p.max_iterations, where);
  p.convergence_tol = get(a, "convergence_tol", p.convergence_tol, where);
  if (p.enable_collision) p.spheres = std::make_shared<const SphereModel>(build_sphere_model(*p.model));
  s.initial_q = vector_or(a, "initial_q", Eigen::VectorXd::Zero(p.model->active_count()), where);
  return s;
}

HandSetup parse_hand(const json& h, const std::string& where, const std::filesystem::path& base) {
  allow_keys(h, {"robot", "origin_frame", "tips", "vectors", "scaling", "smoothness_weight", "initial_q",
                 "max_iterations", "convergence_tol"},
             where);
  HandSetup s;
  RetargetProblem& p = s.problem;
  p.model = load_robot(h, where, base);
  p.scaling = get(h, "scaling", p.scaling, where);
  p.smoothness_weight = get(h, "smoothness_weight", p.smoothness_weight, where);
  p.max_iterations = get(h, "max_iterations", p.max_iterations, where);
  p.convergence_tol = get(h, "convergence_tol", p.convergence_tol, where);
  if (h.contains("tips")) {
    const std::string origin = require_string(h, "origin_frame", where);
    for (const auto& tip : get<std::vector<std::string>>(h, "tips", {}, where)) p.vectors.push_back({origin, tip, tip, ""});
  }
  if (h.contains("vectors")) {
    if (!h["vectors"].is_array()) throw ConfigError(where + ".vectors: expected an array");
    for (const json& v : h["vectors"]) {
      const std::string vw = where + ".vectors[]";
      allow_keys(v, {"origin_frame", "tip_frame", "tip_label", "origin_label"}, vw);
      p.vectors.push_back({require_string(v, "origin_frame", vw), require_string(v, "tip_frame", vw),
                           require_string(v, "tip_label", vw), get<std::string>(v, "origin_label", "", vw)});
    }
  }
  const Eigen::VectorXd mid = 0.5 * (p.model->active_lower() + p.model->active_upper());
  s.initial_q = vector_or(h, "initial_q", mid, where);
  return s;
}

HapticsSetup parse_haptics(const json& h, const std::filesystem::path& base) {
  const std::string where = "haptics";
  allow_keys(h, {"calibration", "frames", "cutoff_hz", "threshold", "full_scale", "warmup_frames", "delay_ms"}, where);
  HapticsSetup s;
  s.table = CalibrationTable::load(resolve_path(base, require_string(h, "calibration", where)));
  s.frames = read_tactile_frames(resolve_path(base, require_string(h, "frames", where)));
  const double cutoff = get(h, "cutoff_hz", 5.0, where);
  const int warmup = get(h, "warmup_frames", 50, where);
  if (h.contains("threshold") != h.contains("full_scale")) {
    throw ConfigError(where + ": give both threshold and full_scale, or neither");
  }
  if (h.contains("threshold")) {
    const double t = get(h, "threshold", 0.0, where);
    const double v = get(h, "full_scale", 0.0, where);
    if (!(v > t)) throw ConfigError(where + ": full_scale must exceed threshold");
    s.config.cutoff_hz = cutoff;
    s.config.threshold = Eigen::VectorXd::Constant(s.table.sensor_count(), t);
    s.config.full_scale = Eigen::VectorXd::Constant(s.table.sensor_count(), v);
  } else {
    if (warmup < 2 || static_cast<std::size_t>(warmup) > s.frames.size()) {
      throw ConfigError(where + ": warmup_frames must be between 2 and the number of tactile frames");
    }
    const std::vector<TactileFrame> head(s.frames.begin(), s.frames.begin() + warmup);
    s.config = derive_haptics_config(s.table, head, s.frames, cutoff);
  }
  s.delay_s = get(h, "delay_ms", 0.0, where) * 1e-3;
  return s;
}

// ---- workers ----------------------------------------------------------------

// Persistent thread running one posted job at a time.
class Worker {
 public:
  Worker() : thread_([this] { loop(); }) {}
  ~Worker() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }

  void post(std::function<void()> job) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      job_ = std::move(job);
      pending_ = true;
    }
    cv_.notify_all();
  }

  void wait() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return !pending_; });
    if (error_) std::rethrow_exception(std::exchange(error_, nullptr));
  }

 private:
  void loop() {
    std::unique_lock<std::mutex> lock(mutex_);
    while (true) {
      cv_.wait(lock, [&] { return pending_ || stop_; });
      if (stop_) return;
      auto job = std::move(job_);
      lock.unlock();
      std::exception_ptr error;
      try {
        job();
      } catch (...) {
        error = std::current_exception();
      }
      lock.lock();
      error_ = error;
      pending_ = false;
      cv_.notify_all();
    }
  }

  std::mutex mutex_;
  std::condition_variable cv_;
  std::function<void()> job_;
  bool pending_ = false;
  bool stop_ = false;
  std::exception_ptr error_;
  std::thread thread_;
};

// Frame source over either a replay or a network stream.
class FrameSource {
 public:
  FrameSource(const SessionConfig& config, const Recording* recording) {
    if (recording) {
      recording_ = recording;
    } else if (!config.source.replay.empty()) {
      owned_ = replay_load(config.source.replay);
      recording_ = &owned_;
    }
    if (recording_) {
      player_.emplace(*recording_, config.source.rate);
    } else {
      client_ = std::make_unique<StreamClient>(config.source.connect, config.source.labels);
    }
  }

  // Next frame to act on. Stream frames before the engage message are ignored.
  std::optional<BimanualFrame> next() {
    if (player_) return player_->next();
    while (true) {
      StreamClient::Event e = client_->next();
      if (e.type == MessageType::kEnd) return std::nullopt;
      if (e.type == MessageType::kEngage) {
        engaged_ = true;
        continue;
      }
      if (!engaged_) {
        ++ignored_;
        continue;
      }
      return std::move(e.frame);
    }
  }

  std::size_t dropped() const { return client_ ? client_->dropped() + ignored_ : 0; }
  std::string diagnostic() const { return client_ ? client_->diagnostic() : std::string(); }

 private:
  Recording owned_;
  const Recording* recording_ = nullptr;
  std::optional<ReplayPlayer> player_;
  std::unique_ptr<StreamClient> client_;
  bool engaged_ = false;
  std::size_t ignored_ = 0;
};

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? "," : "") << v[i];
}

}  // namespace

void SessionConfig::validate() const {
  if (!(target_rate_hz > 0.0)) throw ConfigError("target_rate_hz must be positive");
  if (source.replay.empty() == source.connect.empty()) {
    throw ConfigError("exactly one source (replay file or connect endpoint) is required");
  }
  if (!(source.rate >= 0.0)) throw ConfigError("replay rate must be nonnegative");
  if (!source.connect.empty()) {
    try {
      parse_endpoint(source.connect);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (source.labels.empty()) throw ConfigError("a connect source needs the stream's keypoint labels");
  }
  bool any = false;
  for (Side s : kSides) {
    const SideSetup& side = this->side(s);
    const std::string name = side_name(s);
    try {
      if (side.arm) {
        side.arm->problem.validate();
        if (side.arm->initial_q.size() != side.arm->problem.model->active_count()) {
          throw ConfigError(name + " arm initial_q has the wrong size");
        }
        if (!within_limits(*side.arm->problem.model, side.arm->initial_q)) {
          throw ConfigError(name + " arm initial_q is outside the joint limits");
        }
        any = true;
      }
      if (side.hand) {
        side.hand->problem.validate();
        if (side.hand->initial_q.size() != side.hand->problem.model->active_count()) {
          throw ConfigError(name + " hand initial_q has the wrong size");
        }
        any = true;
      }
    } catch (const std::invalid_argument& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }
  if (!any) throw ConfigError("session configures no arm and no hand");
  const bool left_arm = sides[0].arm.has_value();
  const bool right_arm = sides[1].arm.has_value();
  switch (alignment_mode) {
    case AlignmentMode::kCenter:
      if (!left_arm || !right_arm) throw ConfigError("ALIGN_CENTER needs both arms");
      break;
    case AlignmentMode::kLeft:
      if (!left_arm) throw ConfigError("ALIGN_LEFT needs the left arm");
      break;
    case AlignmentMode::kRight:
      if (!right_arm) throw ConfigError("ALIGN_RIGHT needs the right arm");
      break;
    case AlignmentMode::kSeparately:
      break;
  }
  if (haptics) {
    if (haptics->config.threshold.size() != haptics->table.sensor_count() ||
        haptics->config.full_scale.size() != haptics->table.sensor_count()) {
      throw ConfigError("haptics threshold/full_scale must have one entry per sensor");
    }
    if (!(haptics->delay_s >= 0.0)) throw ConfigError("haptics delay must be nonnegative");
  }
}

SessionConfig parse_session_config(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed session config: ") + e.what());
  }
  allow_keys(doc, {"alignment_mode", "target_rate_hz", "profiling", "source", "left", "right", "haptics", "output",
                   "report"},
             "session");
  SessionConfig c;
  try {
    c.alignment_mode = parse_alignment_mode(get<std::string>(doc, "alignment_mode", "ALIGN_SEPARATELY", "session"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  c.target_rate_hz = get(doc, "target_rate_hz", c.target_rate_hz, "session");
  c.profiling = get(doc, "profiling", c.profiling, "session");
  if (!doc.contains("source")) throw ConfigError("session: 'source' required");
  const json& src = doc["source"];
  allow_keys(src, {"replay", "connect", "rate", "labels"}, "source");
  if (src.contains("replay")) c.source.replay = resolve_path(base_dir, require_string(src, "replay", "source"));
  if (src.contains("connect")) c.source.connect = require_string(src, "connect", "source");
  c.source.rate = get(src, "rate", 0.0, "source");
  c.source.labels = get<std::vector<std::string>>(src, "labels", {}, "source");
  for (Side s : kSides) {
    const char* name = side_name(s);
    if (!doc.contains(name)) continue;
    const json& side = doc[name];
    allow_keys(side, {"arm", "hand"}, name);
    if (side.contains("arm")) c.side(s).arm = parse_arm(side["arm"], std::string(name) + ".arm", base_dir);
    if (side.contains("hand")) c.side(s).hand = parse_hand(side["hand"], std::string(name) + ".hand", base_dir);
  }
  if (doc.contains("haptics")) c.haptics = parse_haptics(doc["haptics"], base_dir);
  if (doc.contains("output")) c.output = resolve_path(base_dir, require_string(doc, "output", "session"));
  if (doc.contains("report")) c.report = resolve_path(base_dir, require_string(doc, "report", "session"));
  c.validate();
  return c;
}

SessionConfig load_session_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open session config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_session_config(buf.str(), path.parent_path());
}

EngagePoses engage_poses(const SessionConfig& config, const BimanualFrame& first,
                         const std::array<Eigen::VectorXd, 2>& robot_q) {
  EngagePoses poses;
  for (Side s : kSides) {
    const auto& arm = config.side(s).arm;
    if (!arm) continue;
    const Pose robot = forward_kinematics(*arm->problem.model, robot_q[index_of(s)], arm->problem.ee_frame);
    if (s == Side::kLeft) {
      poses.human_left = first.left.wrist;
      poses.robot_left = robot;
    } else {
      poses.human_right = first.right.wrist;
      poses.robot_right = robot;
    }
  }
  return poses;
}

SessionResult run_session(const SessionConfig& config, const Recording* recording, const CommandSink& sink) {
  config.validate();
  SessionResult result;
  Profiler profiler;
  const double period = 1.0 / config.target_rate_hz;

  std::array<std::optional<ArmController>, 2> arms;
  std::array<std::optional<HandRetargeter>, 2> hands;
  std::array<Eigen::VectorXd, 2> robot_q;
  for (Side s : kSides) {
    const int i = index_of(s);
    if (config.side(s).arm) {
      arms[i].emplace(config.side(s).arm->problem, config.side(s).arm->initial_q);
      robot_q[i] = config.side(s).arm->initial_q;
    }
    if (config.side(s).hand) hands[i].emplace(config.side(s).hand->problem, config.side(s).hand->initial_q);
  }

  // Haptics stage: decoupled worker behind an overwrite slot.
  LatestSlot<TactileFrame> tactile_slot;
  std::mutex haptics_mutex;
  std::vector<double> haptics_times;
  std::thread haptics_thread;
  if (config.haptics) {
    haptics_thread = std::thread([&] {
      HapticsPipeline pipeline(config.haptics->table, config.haptics->config);
      while (auto frame = tactile_slot.take()) {
        if (config.haptics->delay_s > 0.0) {
          std::this_thread::sleep_for(std::chrono::duration<double>(config.haptics->delay_s));
        }
        const auto t0 = Clock::now();
        const auto bytes = pipeline.process_bytes(*frame);
        const double dt = seconds_since(t0);
        std::lock_guard<std::mutex> lock(haptics_mutex);
        haptics_times.push_back(dt);
        result.haptics_bytes.insert(result.haptics_bytes.end(), bytes.begin(), bytes.end());
      }
    });
  }
  struct HapticsJoin {
    LatestSlot<TactileFrame>& slot;
    std::thread& thread;
    ~HapticsJoin() {
      slot.close();
      if (thread.joinable()) thread.join();
    }
  } haptics_join{tactile_slot, haptics_thread};

  // One worker per configured solver: [left hand, right hand, left arm, right arm].
  std::array<std::unique_ptr<Worker>, 4> workers;
  for (Side s : kSides) {
    if (config.side(s).hand) workers[index_of(s)] = std::make_unique<Worker>();
    if (config.side(s).arm) workers[2 + index_of(s)] = std::make_unique<Worker>();
  }

  FrameSource source(config, recording);
  std::optional<FrameAlignment> alignment;
  const bool any_arm = arms[0].has_value() || arms[1].has_value();
  std::optional<SessionCommand> previous;

  while (true) {
    std::optional<BimanualFrame> frame = source.next();
    if (!frame) break;
    const auto arrival = Clock::now();
    ++result.stats.frames;

    // Validate and gather inputs on this thread so a bad frame never reaches a solver.
    std::array<std::optional<std::vector<Eigen::Vector3d>>, 2> human;
    bool malformed = false;
    for (Side s : kSides) {
      const auto& hand = config.side(s).hand;
      if (!hand) continue;
      const HandFrame& hf = frame->hand(s);
      if (!hf.finite()) continue;  // solved as a skipped frame
      try {
        human[index_of(s)] = human_vectors(hand->problem, hf);
      } catch (const std::invalid_argument&) {
        malformed = true;
      }
    }
    if (malformed) {
      ++result.stats.malformed_frames;
      continue;
    }
    if (any_arm && !alignment) {
      result.alignment = alignment = FrameAlignment::engage(config.alignment_mode, engage_poses(config, *frame, robot_q));
    }

    SessionCommand cmd;
    cmd.timestamp = frame->timestamp;
    std::array<double, 4> solve_time{};
    for (Side s : kSides) {
      const int i = index_of(s);
      if (config.side(s).hand) {
        workers[i]->post([&, s, i] {
          const auto t0 = Clock::now();
          cmd.hand[i] = human[i] ? hands[i]->step(*human[i]) : hands[i]->hold();
          solve_time[i] = seconds_since(t0);
        });
      }
      if (arms[i]) {
        const Pose target = alignment->map(s, frame->hand(s).wrist);
        workers[2 + i]->post([&, i, target] {
          const auto t0 = Clock::now();
          cmd.arm[i] = arms[i]->step({frame->timestamp, target});
          solve_time[2 + i] = seconds_since(t0);
        });
      }
    }
    if (config.haptics && result.stats.frames <= config.haptics->frames.size()) {
      tactile_slot.put(config.haptics->frames[result.stats.frames - 1]);
    }
    std::exception_ptr failure;
    for (auto& w : workers) {
      if (!w) continue;
      try {
        w->wait();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    cmd.latency = seconds_since(arrival);

    static const char* kRows[4] = {"retarget_left", "retarget_right", "arm_left", "arm_right"};
    for (int i = 0; i < 2; ++i) {
      if (cmd.hand[i]) {
        if (cmd.hand[i]->skipped) ++result.stats.skipped_hand_frames;
        else if (!cmd.hand[i]->converged) ++result.stats.unconverged_solves;
        profiler.record(kRows[i], solve_time[i]);
      }
      if (cmd.arm[i]) {
        if (cmd.arm[i]->failed) ++result.stats.failed_arm_solves;
        else if (!cmd.arm[i]->converged) ++result.stats.unconverged_solves;
        robot_q[i] = arms[i]->current();
        profiler.record(kRows[2 + i], solve_time[2 + i]);
      }
    }
    profiler.record("frame_latency", cmd.latency);
    if (cmd.latency > period) ++result.stats.deadline_misses;
    if (previous) {
      for (int i = 0; i < 2; ++i) {
        if (cmd.hand[i]) result.stats.joint_change += (cmd.hand[i]->active_q - previous->hand[i]->active_q).norm();
        if (cmd.arm[i]) result.stats.joint_change += (cmd.arm[i]->active_q - previous->arm[i]->active_q).norm();
      }
    }
    if (sink) sink(cmd);
    previous = cmd;
    result.commands.push_back(std::move(cmd));
  }

  tactile_slot.close();
  if (haptics_thread.joinable()) haptics_thread.join();
  result.stats.dropped_frames = source.dropped();
  result.diagnostic = source.diagnostic();
  if (config.haptics) {
    result.stats.haptics_frames = haptics_times.size();
    result.stats.haptics_dropped = tactile_slot.dropped();
    for (double t : haptics_times) profiler.record("haptics_pwm", t);
  }
  if (config.profiling) {
    result.report = profiler.report();
    result.report.values["frames"] = static_cast<double>(result.stats.frames);
    result.report.values["deadline_misses"] = static_cast<double>(result.stats.deadline_misses);
    result.report.values["dropped_frames"] = static_cast<double>(result.stats.dropped_frames);
    result.report.values["malformed_frames"] = static_cast<double>(result.stats.malformed_frames);
    result.report.values["skipped_hand_frames"] = static_cast<double>(result.stats.skipped_hand_frames);
    result.report.values["joint_change"] = result.stats.joint_change;
    result.report.values["frame_period_ms"] = 1e3 * period;
  }
  return result;
}

void write_command_header(std::ostream& out, const SessionConfig& config) {
  out << "# teleop-commands v1 alignment=" << alignment_mode_name(config.alignment_mode) << " solvers=";
  bool first = true;
  for (Side s : kSides) {
    if (config.side(s).arm) {
      out << (first ? "" : ",") << side_name(s) << "_arm";
      first = false;
    }
    if (config.side(s).hand) {
      out << (first ? "" : ",") << side_name(s) << "_hand";
      first = false;
    }
  }
  out << '\n';
}

void write_command(std::ostream& out, const SessionCommand& command) {
  std::ostringstream line;
  line << std::setprecision(17) << command.timestamp;
  for (Side s : kSides) {
    const int i = index_of(s);
    if (command.arm[i]) {
      line << ' ' << side_name(s) << "_arm=";
      write_vector(line, command.arm[i]->active_q);
    }
    if (command.hand[i]) {
      line << ' ' << side_name(s) << "_hand=";
      write_vector(line, command.hand[i]->active_q);
      if (command.hand[i]->skipped) line << " " << side_name(s) << "_hand_skipped=1";
    }
  }
  out << line.str() << '\n';
}

}  // namespace teleop
