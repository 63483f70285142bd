#include "teleop/haptics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace teleop {

CalibrationTable::CalibrationTable(int sensor_count, std::vector<CalibrationAxis> axes)
    : sensor_count_(sensor_count), axes_(std::move(axes)) {
  if (sensor_count_ <= 0) throw HapticsError("calibration table needs a positive sensor count");
  std::vector<int> owner(sensor_count_, -1);
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    const CalibrationAxis& axis = axes_[a];
    if (axis.joint < 0) throw HapticsError("calibration axis has a negative joint index");
    if (axis.positions.size() < 2) throw HapticsError("calibration axis needs at least two grid samples");
    if (!std::is_sorted(axis.positions.begin(), axis.positions.end()) ||
        std::adjacent_find(axis.positions.begin(), axis.positions.end()) != axis.positions.end()) {
      throw HapticsError("calibration grid positions must be strictly increasing");
    }
    if (axis.baselines.size() != axis.positions.size()) {
      throw HapticsError("calibration axis needs one baseline vector per grid position");
    }
    for (const auto& b : axis.baselines) {
      if (b.size() != static_cast<Eigen::Index>(axis.sensors.size()) || !b.allFinite()) {
        throw HapticsError("calibration baseline has the wrong size or non-finite values");
      }
    }
    for (int s : axis.sensors) {
      if (s < 0 || s >= sensor_count_) throw HapticsError("calibration axis references an unknown sensor");
      if (owner[s] >= 0) throw HapticsError("sensor " + std::to_string(s) + " appears in two calibration axes");
      owner[s] = static_cast<int>(a);
    }
  }
}

Eigen::VectorXd CalibrationTable::baseline(const Eigen::VectorXd& joint_context) const {
  if (empty()) throw HapticsError("calibration table is empty");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(sensor_count_);
  for (const CalibrationAxis& axis : axes_) {
    if (axis.joint >= joint_context.size()) throw HapticsError("joint context is shorter than the calibration axes");
    const auto& xs = axis.positions;
    const double x = std::clamp(joint_context[axis.joint], xs.front(), xs.back());
    const auto hi = std::min<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin(), xs.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    const Eigen::VectorXd b = (1.0 - t) * axis.baselines[lo] + t * axis.baselines[hi];
    for (std::size_t i = 0; i < axis.sensors.size(); ++i) out[axis.sensors[i]] = b[static_cast<Eigen::Index>(i)];
  }
  return out;
}

CalibrationTable CalibrationTable::from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
    for (const auto& [key, _] : doc.items()) {
      if (key != "sensor_count" && key != "axes") throw HapticsError("calibration table: unknown key '" + key + "'");
    }
    std::vector<CalibrationAxis> axes;
    for (const json& a : doc.at("axes")) {
      for (const auto& [key, _] : a.items()) {
        if (key != "joint" && key != "sensors" && key != "positions" && key != "baselines") {
          throw HapticsError("calibration axis: unknown key '" + key + "'");
        }
      }
      CalibrationAxis axis;
      axis.joint = a.at("joint").get<int>();
      axis.sensors = a.at("sensors").get<std::vector<int>>();
      axis.positions = a.at("positions").get<std::vector<double>>();
      for (const json& b : a.at("baselines")) {
        const auto v = b.get<std::vector<double>>();
        axis.baselines.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
      }
      axes.push_back(std::move(axis));
    }
    return CalibrationTable(doc.at("sensor_count").get<int>(), std::move(axes));
  } catch (const json::exception& e) {
    throw HapticsError(std::string("malformed calibration table: ") + e.what());
  }
}

CalibrationTable CalibrationTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw HapticsError("cannot open calibration table '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string CalibrationTable::to_json() const {
  using nlohmann::json;
  json doc;
  doc["sensor_count"] = sensor_count_;
  doc["axes"] = json::array();
  for (const auto& axis : axes_) {
    json a;
    a["joint"] = axis.joint;
    a["sensors"] = axis.sensors;
    a["positions"] = axis.positions;
    a["baselines"] = json::array();
    for (const auto& b : axis.baselines) a["baselines"].push_back(std::vector<double>(b.data(), b.data() + b.size()));
    doc["axes"].push_back(std::move(a));
  }
  return doc.dump(2);
}

Eigen::VectorXd calibrate(const CalibrationTable& table, const TactileFrame& frame) {
  if (table.empty()) throw HapticsError("calibration table is empty");
  if (frame.values.size() != table.sensor_count()) {
    throw HapticsError("tactile frame has " + std::to_string(frame.values.size()) + " sensors, table expects " +
                       std::to_string(table.sensor_count()));
  }
  return frame.values - table.baseline(frame.joint_context);
}

LowpassFilter::LowpassFilter(int size, double cutoff_hz)
    : cutoff_(cutoff_hz), state_(Eigen::VectorXd::Zero(size)) {
  if (!(cutoff_hz > 0.0)) throw HapticsError("filter cutoff must be positive");
}

double LowpassFilter::coefficient(double dt, double cutoff_hz) {
  if (!(dt > 0.0) || !(cutoff_hz > 0.0)) throw HapticsError("filter needs dt > 0 and cutoff > 0");
  return dt / (dt + 1.0 / (2.0 * std::numbers::pi * cutoff_hz));
}

const Eigen::VectorXd& LowpassFilter::filter(const Eigen::VectorXd& x, double dt) {
  if (x.size() != state_.size()) throw HapticsError("filter input has the wrong size");
  state_ += coefficient(dt, cutoff_) * (x - state_);
  return state_;
}

Eigen::VectorXd lowpass(Eigen::VectorXd& state, const Eigen::VectorXd& x, double dt, double cutoff_hz) {
  if (x.size() != state.size()) throw HapticsError("filter input has the wrong size");
  state += LowpassFilter::coefficient(dt, cutoff_hz) * (x - state);
  return state;
}

std::uint8_t pwm_encode_value(double v_hat, double threshold, double v_max) {
  if (!(v_max > threshold)) throw HapticsError("full-scale value must exceed the threshold");
  const double scaled = std::floor((v_hat - threshold) * (255.0 - 0.0) / (v_max - threshold));
  return static_cast<std::uint8_t>(std::clamp(scaled, 0.0, 255.0));
}

PwmFrame pwm_encode(const Eigen::VectorXd& v_hat, double threshold, double v_max) {
  PwmFrame out;
  out.values.reserve(static_cast<std::size_t>(v_hat.size()));
  for (Eigen::Index i = 0; i < v_hat.size(); ++i) out.values.push_back(pwm_encode_value(v_hat[i], threshold, v_max));
  return out;
}

PwmFrame pwm_encode(const Eigen::VectorXd& v_hat, const Eigen::VectorXd& threshold, const Eigen::VectorXd& v_max) {
  if (threshold.size() != v_hat.size() || v_max.size() != v_hat.size()) {
    throw HapticsError("threshold and full-scale vectors must match the sensor count");
  }
  PwmFrame out;
  out.values.reserve(static_cast<std::size_t>(v_hat.size()));
  for (Eigen::Index i = 0; i < v_hat.size(); ++i) {
    out.values.push_back(pwm_encode_value(v_hat[i], threshold[i], v_max[i]));
  }
  return out;
}

Eigen::VectorXd threshold_from_warmup(const std::vector<Eigen::VectorXd>& residuals, double factor) {
  if (residuals.size() < 2) throw HapticsError("warmup needs at least two frames");
  const Eigen::Index s = residuals.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s);
  for (const auto& r : residuals) mean += r;
  mean /= static_cast<double>(residuals.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(s);
  for (const auto& r : residuals) var += (r - mean).cwiseAbs2();
  var /= static_cast<double>(residuals.size() - 1);
  return factor * var.cwiseSqrt();
}

Eigen::VectorXd full_scale_from_squeeze(const std::vector<Eigen::VectorXd>& residuals, double percentile) {
  if (residuals.empty()) throw HapticsError("squeeze routine recorded no frames");
  const Eigen::Index s = residuals.front().size();
  Eigen::VectorXd out(s);
  std::vector<double> column(residuals.size());
  for (Eigen::Index i = 0; i < s; ++i) {
    for (std::size_t f = 0; f < residuals.size(); ++f) column[f] = residuals[f][i];
    std::sort(column.begin(), column.end());
    // Nearest-rank percentile.
    const auto rank = static_cast<std::size_t>(std::ceil(percentile * static_cast<double>(column.size())));
    out[i] = column[std::clamp<std::size_t>(rank, 1, column.size()) - 1];
  }
  return out;
}

HapticsConfig derive_haptics_config(const CalibrationTable& table, const std::vector<TactileFrame>& warmup,
                                    const std::vector<TactileFrame>& squeeze, double cutoff_hz) {
  auto residuals = [&](const std::vector<TactileFrame>& frames) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(calibrate(table, f));
    return out;
  };
  HapticsConfig config;
  config.cutoff_hz = cutoff_hz;
  config.threshold = threshold_from_warmup(residuals(warmup));
  config.full_scale = full_scale_from_squeeze(residuals(squeeze)).array().max(config.threshold.array() + 1.0).matrix();
  return config;
}

BoardDecoder::BoardDecoder(int num_motors) : num_motors_(num_motors) {
  if (num_motors <= 0) throw HapticsError("board needs at least one motor");
}

std::vector<std::vector<MotorWrite>> BoardDecoder::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  std::vector<std::vector<MotorWrite>> frames;
  const auto frame_bytes = static_cast<std::size_t>(num_motors_) * sizeof(std::uint8_t);
  std::size_t at = 0;
  while (buffer_.size() - at >= frame_bytes) {
    std::vector<MotorWrite> writes;
    writes.reserve(static_cast<std::size_t>(num_motors_));
    for (int m = 0; m < num_motors_; ++m) writes.push_back({m, buffer_[at + static_cast<std::size_t>(m)]});
    frames.push_back(std::move(writes));
    at += frame_bytes;
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(at));
  return frames;
}

std::vector<std::vector<MotorWrite>> board_decode(std::span<const std::uint8_t> bytes, int num_motors) {
  BoardDecoder decoder(num_motors);
  return decoder.feed(bytes);
}

HapticsPipeline::HapticsPipeline(CalibrationTable table, HapticsConfig config)
    : table_(std::move(table)), config_(std::move(config)), filter_(table_.sensor_count(), config_.cutoff_hz) {
  if (table_.empty()) throw HapticsError("calibration table is empty");
  const Eigen::Index s = table_.sensor_count();
  if (config_.threshold.size() != s || config_.full_scale.size() != s) {
    throw HapticsError("threshold and full-scale vectors must match the sensor count");
  }
  if (((config_.full_scale - config_.threshold).array() <= 0.0).any()) {
    throw HapticsError("full-scale value must exceed the threshold for every sensor");
  }
  if (!(config_.nominal_dt > 0.0)) throw HapticsError("nominal dt must be positive");
}

PwmFrame HapticsPipeline::process(const TactileFrame& frame) {
  double dt = config_.nominal_dt;
  if (started_) {
    dt = frame.timestamp - last_timestamp_;
    if (!(dt > 0.0)) throw HapticsError("tactile timestamps must increase");
  }
  started_ = true;
  last_timestamp_ = frame.timestamp;
  const Eigen::VectorXd& smoothed = filter_.filter(calibrate(table_, frame), dt);
  return pwm_encode(smoothed, config_.threshold, config_.full_scale);
}

std::vector<std::uint8_t> HapticsPipeline::process_bytes(const TactileFrame& frame) {
  return process(frame).values;
}

std::vector<std::uint8_t> haptics_pipeline(const std::vector<TactileFrame>& frames, const CalibrationTable& table,
                                           const HapticsConfig& config) {
  HapticsPipeline pipeline(table, config);
  std::vector<std::uint8_t> out;
  out.reserve(frames.size() * static_cast<std::size_t>(table.sensor_count()));
  for (const auto& f : frames) {
    const auto bytes = pipeline.process_bytes(f);
    out.insert(out.end(), bytes.begin(), bytes.end());
  }
  return out;
}

std::vector<TactileFrame> read_tactile_frames(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw HapticsError("cannot open tactile file '" + path.string() + "'");
  std::string line;
  int sensors = -1;
  int joints = -1;
  std::vector<TactileFrame> frames;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string word;
      hs >> word;
      if (word != "tactile") continue;
      while (hs >> word) {
        if (word.rfind("sensors=", 0) == 0) sensors = std::stoi(word.substr(8));
        if (word.rfind("joints=", 0) == 0) joints = std::stoi(word.substr(7));
      }
      continue;
    }
    if (sensors < 0 || joints < 0) throw HapticsError("tactile file lacks its '# tactile' header");
    std::istringstream ls(line);
    TactileFrame f;
    f.values.resize(sensors);
    f.joint_context.resize(joints);
    bool ok = static_cast<bool>(ls >> f.timestamp);
    for (int i = 0; ok && i < sensors; ++i) ok = static_cast<bool>(ls >> f.values[i]);
    for (int i = 0; ok && i < joints; ++i) ok = static_cast<bool>(ls >> f.joint_context[i]);
    std::string extra;
    if (!ok || (ls >> extra)) throw HapticsError("malformed tactile line " + std::to_string(line_no));
    if (!f.values.allFinite()) throw HapticsError("non-finite reading on tactile line " + std::to_string(line_no));
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_tactile_frames(const std::filesystem::path& path, const std::vector<TactileFrame>& frames) {
  std::ofstream out(path);
  if (!out) throw HapticsError("cannot write tactile file '" + path.string() + "'");
  const Eigen::Index s = frames.empty() ? 0 : frames.front().values.size();
  const Eigen::Index d = frames.empty() ? 0 : frames.front().joint_context.size();
  out << "# tactile sensors=" << s << " joints=" << d << "\n";
  out << std::setprecision(17);
  for (const auto& f : frames) {
    out << f.timestamp;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) out << ' ' << f.values[i];
    for (Eigen::Index i = 0; i < f.joint_context.size(); ++i) out << ' ' << f.joint_context[i];
    out << '\n';
  }
}

}  // namespace teleop
