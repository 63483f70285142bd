#pragma once

// Binary hand-frame stream, protocol v1 (layout in docs/wire_protocol.md).
//
//   u32 LE length | u8 version | u8 type | payload (LE float64 values)
//
// `length` counts every byte after the prefix (version + type + payload).

#include <atomic>
#include <cstdint>
#include <deque>
#include <mutex>
#include <condition_variable>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "teleop/recording.hpp"

namespace teleop {

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint8_t kWireVersion = 1;
inline constexpr std::uint32_t kMaxMessageLength = 1u << 20;

enum class MessageType : std::uint8_t { kHandFrame = 1, kEngage = 2, kEnd = 3 };

struct WireMessage {
  MessageType type = MessageType::kHandFrame;
  double timestamp = 0.0;
  BimanualFrame frame;  // kHandFrame only
};

std::vector<std::uint8_t> encode_message(const WireMessage& message);

/// Incremental decoder. Keypoint labels are not on the wire; decoded frames
/// carry `labels` and must hold exactly labels.size() keypoints per hand.
class WireDecoder {
 public:
  explicit WireDecoder(std::vector<std::string> labels);

  /// Appends bytes and returns every completed message. Throws WireError on a
  /// bad length, version or payload; the decoder is unusable afterwards.
  std::vector<WireMessage> feed(std::span<const std::uint8_t> bytes);
  std::size_t buffered() const { return buffer_.size(); }

 private:
  WireMessage decode_body(std::span<const std::uint8_t> body) const;

  std::vector<std::string> labels_;
  std::vector<std::uint8_t> buffer_;
};

/// "host:port" split; throws std::invalid_argument.
std::pair<std::string, int> parse_endpoint(const std::string& endpoint);

/// Single-client TCP sender.
class StreamServer {
 public:
  /// Binds and listens; port 0 picks an ephemeral port.
  StreamServer(const std::string& host, int port);
  ~StreamServer();
  StreamServer(const StreamServer&) = delete;
  StreamServer& operator=(const StreamServer&) = delete;

  int port() const { return port_; }
  void accept_client();
  void send(const WireMessage& message);
  void send_raw(std::span<const std::uint8_t> bytes);
  void close();

 private:
  int listen_fd_ = -1;
  int client_fd_ = -1;
  int port_ = 0;
};

/// TCP receiver with a freshest-frame policy: a background reader keeps only
/// the newest undelivered hand frame; older ones are dropped and counted.
/// Engage and end messages are never dropped.
class StreamClient {
 public:
  StreamClient(const std::string& endpoint, std::vector<std::string> labels);
  ~StreamClient();
  StreamClient(const StreamClient&) = delete;
  StreamClient& operator=(const StreamClient&) = delete;

  struct Event {
    MessageType type = MessageType::kEnd;
    double timestamp = 0.0;
    std::optional<BimanualFrame> frame;
  };

  /// Blocks for the next event. After the stream ends (end message,
  /// connection loss or protocol error) it keeps returning kEnd.
  Event next();

  std::size_t received() const;
  std::size_t dropped() const;
  /// Empty for a clean end; otherwise why the stream stopped.
  std::string diagnostic() const;

 private:
  void reader_loop();

  int fd_ = -1;
  WireDecoder decoder_;
  std::thread reader_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<BimanualFrame> latest_;
  std::deque<Event> control_;
  bool finished_ = false;
  std::size_t received_ = 0;
  std::size_t dropped_ = 0;
  std::string diagnostic_;
};

}  // namespace teleop
