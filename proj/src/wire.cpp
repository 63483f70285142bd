#include "teleop/wire.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

namespace teleop {
namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

void put_f64(std::vector<std::uint8_t>& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

double get_f64(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(p[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

void put_hand(std::vector<std::uint8_t>& out, const HandFrame& hand) {
  put_f64(out, hand.side == Side::kLeft ? 0.0 : 1.0);
  const auto& p = hand.wrist.position();
  const auto& q = hand.wrist.orientation();
  for (double v : {p.x(), p.y(), p.z(), q.w(), q.x(), q.y(), q.z()}) put_f64(out, v);
  for (const auto& k : hand.keypoints) {
    put_f64(out, k.x());
    put_f64(out, k.y());
    put_f64(out, k.z());
  }
}

// Per hand: side, 3 position, 4 quaternion, then 3 per keypoint.
constexpr std::size_t kHandFixed = 8;

}  // namespace

std::vector<std::uint8_t> encode_message(const WireMessage& message) {
  std::vector<std::uint8_t> body;
  body.push_back(kWireVersion);
  body.push_back(static_cast<std::uint8_t>(message.type));
  switch (message.type) {
    case MessageType::kHandFrame:
      if (message.frame.left.keypoints.size() != message.frame.right.keypoints.size()) {
        throw WireError("both hands must carry the same number of keypoints");
      }
      put_f64(body, message.frame.timestamp);
      put_hand(body, message.frame.left);
      put_hand(body, message.frame.right);
      break;
    case MessageType::kEngage:
      put_f64(body, message.timestamp);
      break;
    case MessageType::kEnd:
      break;
  }
  if (body.size() > kMaxMessageLength) throw WireError("message too large");
  std::vector<std::uint8_t> out;
  out.reserve(body.size() + 4);
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  out.insert(out.end(), body.begin(), body.end());
  return out;
}

WireDecoder::WireDecoder(std::vector<std::string> labels) : labels_(std::move(labels)) {}

std::vector<WireMessage> WireDecoder::feed(std::span<const std::uint8_t> bytes) {
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  std::vector<WireMessage> out;
  std::size_t pos = 0;
  while (buffer_.size() - pos >= 4) {
    const std::uint32_t length = get_u32(buffer_.data() + pos);
    if (length < 2 || length > kMaxMessageLength) {
      throw WireError("framing error: bad length prefix " + std::to_string(length));
    }
    if (buffer_.size() - pos - 4 < length) break;
    out.push_back(decode_body({buffer_.data() + pos + 4, length}));
    pos += 4 + length;
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos));
  return out;
}

WireMessage WireDecoder::decode_body(std::span<const std::uint8_t> body) const {
  if (body[0] != kWireVersion) {
    throw WireError("protocol version mismatch: got " + std::to_string(body[0]) + ", expected " +
                    std::to_string(kWireVersion));
  }
  WireMessage m;
  const std::size_t payload = body.size() - 2;
  const std::uint8_t* p = body.data() + 2;
  switch (body[1]) {
    case static_cast<std::uint8_t>(MessageType::kHandFrame): {
      m.type = MessageType::kHandFrame;
      const std::size_t per_hand = kHandFixed + 3 * labels_.size();
      if (payload != 8 * (1 + 2 * per_hand)) throw WireError("hand_frame payload size does not match the keypoint count");
      m.frame.timestamp = get_f64(p);
      std::size_t at = 1;
      for (HandFrame* hand : {&m.frame.left, &m.frame.right}) {
        double v[kHandFixed];
        for (double& x : v) x = get_f64(p + 8 * at++);
        if (v[0] != 0.0 && v[0] != 1.0) throw WireError("hand_frame: bad side code");
        hand->side = v[0] == 0.0 ? Side::kLeft : Side::kRight;
        hand->timestamp = m.frame.timestamp;
        try {
          hand->wrist = Pose::from_wxyz({v[1], v[2], v[3]}, v[4], v[5], v[6], v[7]);
        } catch (const std::invalid_argument& e) {
          throw WireError(std::string("hand_frame: ") + e.what());
        }
        hand->labels = labels_;
        hand->keypoints.resize(labels_.size());
        for (auto& k : hand->keypoints) {
          for (int a = 0; a < 3; ++a) k[a] = get_f64(p + 8 * at++);
        }
      }
      if (m.frame.left.side != Side::kLeft || m.frame.right.side != Side::kRight) {
        throw WireError("hand_frame: hands out of order");
      }
      break;
    }
    case static_cast<std::uint8_t>(MessageType::kEngage):
      if (payload != 8) throw WireError("engage payload must be one timestamp");
      m.type = MessageType::kEngage;
      m.timestamp = get_f64(p);
      break;
    case static_cast<std::uint8_t>(MessageType::kEnd):
      if (payload != 0) throw WireError("end message carries no payload");
      m.type = MessageType::kEnd;
      break;
    default:
      throw WireError("unknown message type " + std::to_string(body[1]));
  }
  return m;
}

std::pair<std::string, int> parse_endpoint(const std::string& endpoint) {
  const auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0) throw std::invalid_argument("endpoint must be host:port");
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(endpoint.substr(colon + 1), &used);
    if (used != endpoint.size() - colon - 1) port = -1;
  } catch (const std::exception&) {
    port = -1;
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("bad port in endpoint '" + endpoint + "'");
  return {endpoint.substr(0, colon), port};
}

namespace {

sockaddr_in resolve_ipv4(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw WireError("cannot resolve host '" + host + "'");
  }
  sockaddr_in addr = *reinterpret_cast<sockaddr_in*>(res->ai_addr);
  freeaddrinfo(res);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  return addr;
}

void write_all(int fd, const std::uint8_t* data, std::size_t size) {
  while (size > 0) {
    const ssize_t n = ::send(fd, data, size, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw WireError(std::string("send failed: ") + std::strerror(errno));
    }
    data += n;
    size -= static_cast<std::size_t>(n);
  }
}

}  // namespace

StreamServer::StreamServer(const std::string& host, int port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw WireError("socket failed");
  int one = 1;
  setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = resolve_ipv4(host, port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 1) < 0) {
    const std::string why = std::strerror(errno);
    ::close(listen_fd_);
    throw WireError("cannot listen on " + host + ":" + std::to_string(port) + ": " + why);
  }
  socklen_t len = sizeof addr;
  getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

StreamServer::~StreamServer() {
  close();
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

void StreamServer::accept_client() {
  client_fd_ = ::accept(listen_fd_, nullptr, nullptr);
  if (client_fd_ < 0) throw WireError(std::string("accept failed: ") + std::strerror(errno));
  int one = 1;
  setsockopt(client_fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

void StreamServer::send(const WireMessage& message) {
  const auto bytes = encode_message(message);
  send_raw(bytes);
}

void StreamServer::send_raw(std::span<const std::uint8_t> bytes) {
  if (client_fd_ < 0) throw WireError("no client connected");
  write_all(client_fd_, bytes.data(), bytes.size());
}

void StreamServer::close() {
  if (client_fd_ >= 0) {
    ::shutdown(client_fd_, SHUT_RDWR);
    ::close(client_fd_);
    client_fd_ = -1;
  }
}

StreamClient::StreamClient(const std::string& endpoint, std::vector<std::string> labels)
    : decoder_(std::move(labels)) {
  const auto [host, port] = parse_endpoint(endpoint);
  sockaddr_in addr = resolve_ipv4(host, port);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw WireError("socket failed");
  if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    const std::string why = std::strerror(errno);
    ::close(fd_);
    throw WireError("cannot connect to " + endpoint + ": " + why);
  }
  reader_ = std::thread([this] { reader_loop(); });
}

StreamClient::~StreamClient() {
  ::shutdown(fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  ::close(fd_);
}

void StreamClient::reader_loop() {
  std::uint8_t chunk[4096];
  std::string why;
  bool clean = false;
  while (true) {
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      why = "connection closed before end message";
      break;
    }
    std::vector<WireMessage> messages;
    try {
      messages = decoder_.feed({chunk, static_cast<std::size_t>(n)});
    } catch (const WireError& e) {
      why = e.what();
      break;
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto& m : messages) {
      if (m.type == MessageType::kHandFrame) {
        ++received_;
        if (latest_) ++dropped_;
        latest_ = std::move(m.frame);
      } else if (m.type == MessageType::kEngage) {
        // Frames captured before the engage instant are stale.
        if (latest_) ++dropped_;
        latest_.reset();
        control_.push_back({MessageType::kEngage, m.timestamp, std::nullopt});
      } else {
        control_.push_back({MessageType::kEnd, 0.0, std::nullopt});
        clean = true;
      }
    }
    cv_.notify_all();
    if (clean) break;
  }
  std::lock_guard<std::mutex> lock(mutex_);
  finished_ = true;
  if (!clean) diagnostic_ = why;
  cv_.notify_all();
}

StreamClient::Event StreamClient::next() {
  std::unique_lock<std::mutex> lock(mutex_);
  cv_.wait(lock, [&] { return latest_.has_value() || !control_.empty() || finished_; });
  if (!control_.empty() && control_.front().type == MessageType::kEngage) {
    Event e = control_.front();
    control_.pop_front();
    return e;
  }
  if (latest_) {
    Event e{MessageType::kHandFrame, latest_->timestamp, std::move(latest_)};
    latest_.reset();
    return e;
  }
  return {MessageType::kEnd, 0.0, std::nullopt};
}

std::size_t StreamClient::received() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return received_;
}

std::size_t StreamClient::dropped() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return dropped_;
}

std::string StreamClient::diagnostic() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return diagnostic_;
}

}  // namespace teleop
