#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "teleop/haptics.hpp"
#include "teleop/synth.hpp"

using namespace teleop;

namespace {

CalibrationTable one_sensor_table(double b0, double b1) {
  CalibrationAxis axis;
  axis.joint = 0;
  axis.sensors = {0};
  axis.positions = {0.0, 1.0};
  axis.baselines = {Eigen::VectorXd::Constant(1, b0), Eigen::VectorXd::Constant(1, b1)};
  return CalibrationTable(1, {axis});
}

TactileFrame reading(double t, double v, double joint) {
  return {t, Eigen::VectorXd::Constant(1, v), Eigen::VectorXd::Constant(1, joint)};
}

}  // namespace

TEST_CASE("calibration subtracts the baseline") {
  CHECK(calibrate(one_sensor_table(100, 100), reading(0, 130, 0.3))[0] == doctest::Approx(30));
  CHECK(calibrate(one_sensor_table(100, 200), reading(0, 180, 0.5))[0] == doctest::Approx(30));
  CHECK(calibrate(one_sensor_table(100, 200), reading(0, 150, 0.5))[0] == doctest::Approx(0));
  // outside the grid the nearest sample is used
  CHECK(calibrate(one_sensor_table(100, 200), reading(0, 200, 2.0))[0] == doctest::Approx(0));
}

TEST_CASE("calibration table round-trips through text") {
  const auto table = synth_pulse({}).table;
  const auto back = CalibrationTable::from_json(table.to_json());
  CHECK(back.sensor_count() == table.sensor_count());
  const Eigen::VectorXd ctx = Eigen::VectorXd::Constant(5, 0.7);
  CHECK((back.baseline(ctx) - table.baseline(ctx)).norm() < 1e-12);
  CHECK_THROWS_AS(CalibrationTable::from_json("{}"), HapticsError);
}

TEST_CASE("low-pass coefficient and step response") {
  CHECK(LowpassFilter::coefficient(0.01, 10.0) == doctest::Approx(0.3859).epsilon(1e-4));
  LowpassFilter f(1, 10.0);
  CHECK(f.filter(Eigen::VectorXd::Ones(1), 0.01)[0] == doctest::Approx(0.3859).epsilon(1e-4));
}

TEST_CASE("low-pass converges monotonically to a constant") {
  LowpassFilter f(1, 5.0);
  f.reset(Eigen::VectorXd::Constant(1, -3.0));
  double last = -3.0;
  for (int i = 0; i < 500; ++i) {
    const double y = f.filter(Eigen::VectorXd::Constant(1, 2.0), 0.01)[0];
    CHECK(y >= last);
    CHECK(y <= 2.0);
    last = y;
  }
  CHECK(last == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("low-pass attenuation at ten times the cutoff") {
  const double fc = 1.0, dt = 0.001, f_in = 10.0;
  LowpassFilter f(1, fc);
  double peak = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double y = f.filter(Eigen::VectorXd::Constant(1, std::sin(2 * M_PI * f_in * i * dt)), dt)[0];
    if (i > 10000) peak = std::max(peak, std::abs(y));
  }
  // magnitude of y[n] = (1 - a) y[n-1] + a x[n] at the input frequency
  const double a = dt / (dt + 1 / (2 * M_PI * fc));
  const std::complex<double> z = std::polar(1.0, -2 * M_PI * f_in * dt);
  const double gain = std::abs(a / (1.0 - (1.0 - a) * z));
  CHECK(peak < 0.2);
  CHECK(peak == doctest::Approx(gain).epsilon(0.01));
}

TEST_CASE("pwm encoding points") {
  CHECK(pwm_encode_value(100, 100, 500) == 0);
  CHECK(pwm_encode_value(500, 100, 500) == 255);
  CHECK(pwm_encode_value(300, 100, 500) == 127);
  CHECK(pwm_encode_value(50, 100, 500) == 0);
  CHECK(pwm_encode_value(900, 100, 500) == 255);
  CHECK_THROWS_AS(pwm_encode_value(1, 5, 5), HapticsError);
}

TEST_CASE("pwm encoding matches the integer oracle") {
  for (int t = 0; t <= 10; ++t) {
    for (int vmax = t + 1; vmax <= t + 30; ++vmax) {
      for (int v = t - 5; v <= vmax + 5; ++v) {
        REQUIRE(pwm_encode_value(v, t, vmax) == oracle::pwm(v, t, vmax));
      }
    }
  }
}

TEST_CASE("board decode") {
  const std::vector<std::uint8_t> one = {0, 64, 128, 192, 255};
  auto frames = board_decode(one, 5);
  REQUIRE(frames.size() == 1);
  for (int i = 0; i < 5; ++i) {
    CHECK(frames[0][i].motor == i);
    CHECK(frames[0][i].duty == one[i]);
  }
  BoardDecoder d(5);
  const std::vector<std::uint8_t> seven = {1, 2, 3, 4, 5, 6, 7};
  CHECK(d.feed(seven).size() == 1);
  CHECK(d.buffered() == 2);
  const std::vector<std::uint8_t> rest = {8, 9, 10};
  frames = d.feed(rest);
  REQUIRE(frames.size() == 1);
  CHECK(frames[0][0].duty == 6);
  CHECK(d.buffered() == 0);
  std::vector<std::uint8_t> two(one);
  two.insert(two.end(), one.rbegin(), one.rend());
  frames = board_decode(two, 5);
  REQUIRE(frames.size() == 2);
  CHECK(frames[1][0].duty == 255);
}

TEST_CASE("baseline-only stream gives zero bytes") {
  const auto fx = synth_pulse({});
  std::vector<TactileFrame> flat;
  for (const auto& f : fx.frames) flat.push_back({f.timestamp, fx.table.baseline(f.joint_context), f.joint_context});
  HapticsConfig c;
  c.threshold = Eigen::VectorXd::Constant(fx.table.sensor_count(), 5.0);
  c.full_scale = Eigen::VectorXd::Constant(fx.table.sensor_count(), 100.0);
  const auto bytes = haptics_pipeline(flat, fx.table, c);
  CHECK(bytes.size() == flat.size() * static_cast<std::size_t>(fx.table.sensor_count()));
  CHECK(std::all_of(bytes.begin(), bytes.end(), [](std::uint8_t b) { return b == 0; }));
}

TEST_CASE("contact pulse is localized") {
  PulseSpec spec;
  const auto fx = synth_pulse(spec);
  const std::vector<TactileFrame> warm(fx.frames.begin(), fx.frames.begin() + 50);
  const HapticsConfig c = derive_haptics_config(fx.table, warm, fx.frames);
  const auto bytes = haptics_pipeline(fx.frames, fx.table, c);
  const int s = fx.table.sensor_count();
  for (std::size_t f = 0; f < fx.frames.size(); ++f) {
    const double t = fx.frames[f].timestamp;
    for (int i = 0; i < s; ++i) {
      const bool pulsed = std::find(spec.pulse_sensors.begin(), spec.pulse_sensors.end(), i) != spec.pulse_sensors.end();
      const std::uint8_t b = bytes[f * s + i];
      if (!pulsed || t < spec.pulse_start) CHECK(b == 0);
      if (pulsed && t > spec.pulse_start + 0.1 && t < spec.pulse_end) CHECK(b > 0);
      // filter lag: gone a few time constants after the pulse
      if (t > spec.pulse_end + 0.25) CHECK(b == 0);
    }
  }
}

TEST_CASE("pipeline bytes round-trip through the board") {
  const auto fx = synth_pulse({});
  const std::vector<TactileFrame> warm(fx.frames.begin(), fx.frames.begin() + 50);
  const auto bytes = haptics_pipeline(fx.frames, fx.table, derive_haptics_config(fx.table, warm, fx.frames));
  const auto frames = board_decode(bytes, fx.table.sensor_count());
  std::vector<std::uint8_t> back;
  for (const auto& f : frames) {
    for (const auto& w : f) back.push_back(w.duty);
  }
  CHECK(back == bytes);
}

TEST_CASE("sensor count mismatch is a data error") {
  const auto fx = synth_pulse({});
  HapticsConfig c;
  c.threshold = Eigen::VectorXd::Constant(fx.table.sensor_count(), 5.0);
  c.full_scale = Eigen::VectorXd::Constant(fx.table.sensor_count(), 100.0);
  HapticsPipeline p(fx.table, c);
  CHECK_THROWS_AS(p.process({0.0, Eigen::VectorXd::Zero(3), fx.frames[0].joint_context}), HapticsError);
}
