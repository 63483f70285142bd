#pragma once

// Tactile signal conditioning and actuator encoding:
//   raw readings -> drift calibration -> low-pass -> PWM bytes -> board decode.

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace teleop {

class HapticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultSensorCount = 30;

struct TactileFrame {
  double timestamp = 0.0;
  Eigen::VectorXd values;         // raw ADC counts, one per sensor
  Eigen::VectorXd joint_context;  // finger joint positions at read time
};

/// Baseline readings sampled along one joint of the context vector, for the
/// sensors whose drift follows that joint.
struct CalibrationAxis {
  int joint = 0;                            // index into TactileFrame::joint_context
  std::vector<int> sensors;                 // sensor indices covered by this axis
  std::vector<double> positions;            // sorted, at least two
  std::vector<Eigen::VectorXd> baselines;   // one per position, size sensors.size()
};

class CalibrationTable {
 public:
  CalibrationTable() = default;
  CalibrationTable(int sensor_count, std::vector<CalibrationAxis> axes);

  int sensor_count() const { return sensor_count_; }
  const std::vector<CalibrationAxis>& axes() const { return axes_; }
  bool empty() const { return axes_.empty(); }

  /// Interpolated baseline for every sensor at the given joint context.
  /// Positions outside a grid clamp to the nearest sample.
  Eigen::VectorXd baseline(const Eigen::VectorXd& joint_context) const;

  static CalibrationTable from_json(const std::string& text);
  static CalibrationTable load(const std::filesystem::path& path);
  std::string to_json() const;

 private:
  int sensor_count_ = 0;
  std::vector<CalibrationAxis> axes_;
};

/// V - baseline(joint_context), elementwise.
Eigen::VectorXd calibrate(const CalibrationTable& table, const TactileFrame& frame);

/// First-order IIR: y += a (x - y), a = dt / (dt + 1 / (2 pi cutoff)).
class LowpassFilter {
 public:
  LowpassFilter(int size, double cutoff_hz);

  static double coefficient(double dt, double cutoff_hz);
  const Eigen::VectorXd& filter(const Eigen::VectorXd& x, double dt);
  const Eigen::VectorXd& state() const { return state_; }
  void reset(const Eigen::VectorXd& state) { state_ = state; }
  double cutoff_hz() const { return cutoff_; }

 private:
  double cutoff_;
  Eigen::VectorXd state_;
};

/// Stateless form of one filter step; updates `state` in place and returns it.
Eigen::VectorXd lowpass(Eigen::VectorXd& state, const Eigen::VectorXd& x, double dt, double cutoff_hz);

struct PwmFrame {
  std::vector<std::uint8_t> values;
};

/// clip(floor((v - T) * 255 / (v_max - T)), 0, 255). Requires v_max > T.
std::uint8_t pwm_encode_value(double v_hat, double threshold, double v_max);
PwmFrame pwm_encode(const Eigen::VectorXd& v_hat, double threshold, double v_max);
PwmFrame pwm_encode(const Eigen::VectorXd& v_hat, const Eigen::VectorXd& threshold, const Eigen::VectorXd& v_max);

/// T default: factor x the per-sensor standard deviation of residuals recorded
/// without contact.
Eigen::VectorXd threshold_from_warmup(const std::vector<Eigen::VectorXd>& residuals, double factor = 5.0);
/// v_max default: per-sensor percentile of residuals recorded during a squeeze.
Eigen::VectorXd full_scale_from_squeeze(const std::vector<Eigen::VectorXd>& residuals, double percentile = 0.99);

struct MotorWrite {
  int motor = 0;
  std::uint8_t duty = 0;
};

/// Virtual actuator board: buffers serial bytes and, once a whole frame of
/// num_motors bytes is available, emits one write per motor in order.
class BoardDecoder {
 public:
  explicit BoardDecoder(int num_motors);

  /// Appends bytes; returns the frames completed by them.
  std::vector<std::vector<MotorWrite>> feed(std::span<const std::uint8_t> bytes);
  std::size_t buffered() const { return buffer_.size(); }
  int num_motors() const { return num_motors_; }

 private:
  int num_motors_;
  std::vector<std::uint8_t> buffer_;
};

/// Decodes a complete byte stream; a partial trailing frame is left out.
std::vector<std::vector<MotorWrite>> board_decode(std::span<const std::uint8_t> bytes, int num_motors);

struct HapticsConfig {
  double cutoff_hz = 5.0;
  double nominal_dt = 0.01;   // used for the first frame
  Eigen::VectorXd threshold;  // per sensor
  Eigen::VectorXd full_scale; // per sensor, > threshold
};

class HapticsPipeline {
 public:
  HapticsPipeline(CalibrationTable table, HapticsConfig config);

  /// One frame through calibrate -> lowpass -> pwm_encode.
  PwmFrame process(const TactileFrame& frame);
  /// Serialized bytes for one frame: one unsigned byte per sensor, declaration order.
  std::vector<std::uint8_t> process_bytes(const TactileFrame& frame);

  int sensor_count() const { return table_.sensor_count(); }

 private:
  CalibrationTable table_;
  HapticsConfig config_;
  LowpassFilter filter_;
  double last_timestamp_ = 0.0;
  bool started_ = false;
};

/// Per-sensor T and v_max from raw no-contact warmup frames and raw squeeze
/// frames. v_max is raised to at least T + 1 count so the encoder is defined
/// on sensors the squeeze never reached.
HapticsConfig derive_haptics_config(const CalibrationTable& table, const std::vector<TactileFrame>& warmup,
                                    const std::vector<TactileFrame>& squeeze, double cutoff_hz = 5.0);

/// Whole-stream form: concatenated frame bytes.
std::vector<std::uint8_t> haptics_pipeline(const std::vector<TactileFrame>& frames, const CalibrationTable& table,
                                           const HapticsConfig& config);

/// Tactile fixture text format: header "# tactile sensors=S joints=D", then one
/// line per frame "t v_1 .. v_S j_1 .. j_D".
std::vector<TactileFrame> read_tactile_frames(const std::filesystem::path& path);
void write_tactile_frames(const std::filesystem::path& path, const std::vector<TactileFrame>& frames);

}  // namespace teleop
