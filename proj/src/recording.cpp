#include "teleop/recording.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace teleop {
namespace {

constexpr const char* kHeader = "# teleop-recording v1";

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// strtod accepts "nan"/"inf", which recordings may legitimately contain.
bool read_number(std::istringstream& in, double& out) {
  std::string token;
  if (!(in >> token)) return false;
  char* end = nullptr;
  out = std::strtod(token.c_str(), &end);
  return end != token.c_str() && *end == '\0';
}

bool read_hand(std::istringstream& in, char expected_side, const std::vector<std::string>& labels, double t,
               HandFrame& hand) {
  std::string side;
  if (!(in >> side) || side.size() != 1 || side[0] != expected_side) return false;
  hand.side = expected_side == 'L' ? Side::kLeft : Side::kRight;
  hand.timestamp = t;
  double v[7];
  for (double& x : v) {
    if (!read_number(in, x) || !std::isfinite(x)) return false;
  }
  try {
    hand.wrist = Pose::from_wxyz({v[0], v[1], v[2]}, v[3], v[4], v[5], v[6]);
  } catch (const std::invalid_argument&) {
    return false;
  }
  hand.labels = labels;
  hand.keypoints.resize(labels.size());
  for (auto& k : hand.keypoints) {
    for (int a = 0; a < 3; ++a) {
      if (!read_number(in, k[a])) return false;
    }
  }
  return true;
}

void write_hand(std::ostream& out, char side, const HandFrame& hand) {
  const Pose& w = hand.wrist;
  out << ' ' << side << ' ' << w.position().x() << ' ' << w.position().y() << ' ' << w.position().z() << ' '
      << w.orientation().w() << ' ' << w.orientation().x() << ' ' << w.orientation().y() << ' '
      << w.orientation().z();
  for (const auto& k : hand.keypoints) out << ' ' << k.x() << ' ' << k.y() << ' ' << k.z();
}

}  // namespace

Recording parse_recording(std::istream& in) {
  Recording rec;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  double last_t = -INFINITY;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line[0] == '#') {
      if (line.rfind(kHeader, 0) == 0) {
        const auto pos = line.find("keypoints=");
        if (pos == std::string::npos) throw RecordingError("line " + std::to_string(line_no) + ": header lacks keypoints=");
        std::string labels = line.substr(pos + 10);
        labels = labels.substr(0, labels.find_first_of(" \t\r"));
        rec.labels = split(labels, ',');
        have_header = true;
      }
      continue;
    }
    if (!have_header) throw RecordingError("line " + std::to_string(line_no) + ": data before the recording header");
    std::istringstream ls(line);
    BimanualFrame f;
    if (!read_number(ls, f.timestamp) || !std::isfinite(f.timestamp) ||
        !read_hand(ls, 'L', rec.labels, f.timestamp, f.left) ||
        !read_hand(ls, 'R', rec.labels, f.timestamp, f.right)) {
      throw RecordingError("line " + std::to_string(line_no) + ": malformed frame");
    }
    std::string extra;
    if (ls >> extra) throw RecordingError("line " + std::to_string(line_no) + ": trailing fields");
    if (!(f.timestamp > last_t)) {
      throw RecordingError("line " + std::to_string(line_no) + ": timestamp " + std::to_string(f.timestamp) +
                           " does not increase");
    }
    last_t = f.timestamp;
    rec.frames.push_back(std::move(f));
  }
  return rec;
}

Recording replay_load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RecordingError("cannot open recording '" + path.string() + "'");
  return parse_recording(in);
}

void write_recording(std::ostream& out, const Recording& recording) {
  out << kHeader << " keypoints=";
  for (std::size_t i = 0; i < recording.labels.size(); ++i) out << (i ? "," : "") << recording.labels[i];
  out << '\n' << std::setprecision(17);
  for (const auto& f : recording.frames) {
    out << f.timestamp;
    write_hand(out, 'L', f.left);
    write_hand(out, 'R', f.right);
    out << '\n';
  }
}

void write_recording(const std::filesystem::path& path, const Recording& recording) {
  std::ofstream out(path);
  if (!out) throw RecordingError("cannot write recording '" + path.string() + "'");
  write_recording(out, recording);
}

JointTrajectory read_joint_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RecordingError("cannot open joint trajectory '" + path.string() + "'");
  JointTrajectory out;
  std::string line;
  int line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (line.rfind("# teleop-joints v1", 0) == 0) {
      const auto pos = line.find("joints=");
      if (pos != std::string::npos) {
        std::string names = line.substr(pos + 7);
        out.joints = split(names.substr(0, names.find_first_of(" \t\r")), ',');
      }
      have_header = true;
      continue;
    }
    if (line[0] == '#') continue;
    if (!have_header) throw RecordingError("line " + std::to_string(line_no) + ": data before the joints header");
    std::istringstream ls(line);
    double t = 0.0;
    if (!read_number(ls, t)) throw RecordingError("line " + std::to_string(line_no) + ": bad timestamp");
    Eigen::VectorXd q(static_cast<Eigen::Index>(out.joints.size()));
    for (Eigen::Index i = 0; i < q.size(); ++i) {
      if (!read_number(ls, q[i])) throw RecordingError("line " + std::to_string(line_no) + ": too few joint values");
    }
    std::string flag;
    bool skipped = false;
    if (ls >> flag) {
      if (flag != "skipped") throw RecordingError("line " + std::to_string(line_no) + ": unexpected field '" + flag + "'");
      skipped = true;
    }
    out.timestamps.push_back(t);
    out.q.push_back(std::move(q));
    out.skipped.push_back(skipped);
  }
  return out;
}

void write_joint_trajectory(const std::filesystem::path& path, const JointTrajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw RecordingError("cannot write joint trajectory '" + path.string() + "'");
  out << "# teleop-joints v1 joints=";
  for (std::size_t i = 0; i < trajectory.joints.size(); ++i) out << (i ? "," : "") << trajectory.joints[i];
  out << '\n' << std::setprecision(17);
  for (std::size_t f = 0; f < trajectory.q.size(); ++f) {
    out << trajectory.timestamps[f];
    for (Eigen::Index i = 0; i < trajectory.q[f].size(); ++i) out << ' ' << trajectory.q[f][i];
    if (f < trajectory.skipped.size() && trajectory.skipped[f]) out << " skipped";
    out << '\n';
  }
}

ReplayPlayer::ReplayPlayer(const Recording& recording, double rate)
    : recording_(&recording), rate_(rate), start_(std::chrono::steady_clock::now()) {
  if (rate < 0.0) throw std::invalid_argument("replay rate must be nonnegative");
}

std::optional<BimanualFrame> ReplayPlayer::next() {
  if (next_ >= recording_->frames.size()) return std::nullopt;
  const BimanualFrame& f = recording_->frames[next_];
  if (rate_ > 0.0) {
    const double offset = (f.timestamp - recording_->frames.front().timestamp) / rate_;
    std::this_thread::sleep_until(start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                               std::chrono::duration<double>(offset)));
  }
  ++next_;
  return f;
}

}  // namespace teleop
