#include <doctest.h>

#include <chrono>
#include <thread>

#include "teleop/mailbox.hpp"
#include "teleop/synth.hpp"
#include "teleop/wire.hpp"

using namespace teleop;

namespace {

Recording sample(int frames) {
  RecordingSpec spec;
  spec.frames = frames;
  return synth_recording(spec, nullptr).recording;
}

WireMessage frame_message(const BimanualFrame& f) {
  WireMessage m;
  m.type = MessageType::kHandFrame;
  m.timestamp = f.timestamp;
  m.frame = f;
  return m;
}

WireMessage control(MessageType type, double t = 0.0) {
  WireMessage m;
  m.type = type;
  m.timestamp = t;
  return m;
}

void check_same(const BimanualFrame& a, const BimanualFrame& b) {
  CHECK(a.timestamp == b.timestamp);
  for (Side s : {Side::kLeft, Side::kRight}) {
    CHECK(a.hand(s).wrist.position() == b.hand(s).wrist.position());
    CHECK(a.hand(s).wrist.orientation().coeffs() == b.hand(s).wrist.orientation().coeffs());
    CHECK(a.hand(s).keypoints == b.hand(s).keypoints);
  }
}

template <typename Pred>
bool wait_for(Pred pred) {
  for (int i = 0; i < 500 && !pred(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  return pred();
}

}  // namespace

TEST_CASE("codec round-trip byte by byte") {
  const auto rec = sample(20);
  WireDecoder d(rec.labels);
  std::vector<BimanualFrame> got;
  for (const auto& f : rec.frames) {
    for (std::uint8_t b : encode_message(frame_message(f))) {
      for (auto& m : d.feed(std::span<const std::uint8_t>(&b, 1))) got.push_back(m.frame);
    }
  }
  REQUIRE(got.size() == rec.frames.size());
  for (std::size_t i = 0; i < got.size(); ++i) check_same(got[i], rec.frames[i]);
  CHECK(d.buffered() == 0);
}

TEST_CASE("framing errors") {
  WireDecoder d({"a"});
  const std::vector<std::uint8_t> huge = {0xff, 0xff, 0xff, 0x7f, 1, 1};
  CHECK_THROWS_AS(d.feed(huge), WireError);
  WireDecoder v({"a"});
  std::vector<std::uint8_t> msg = encode_message(control(MessageType::kEnd));
  msg[4] = 9;  // version byte
  CHECK_THROWS_AS(v.feed(msg), WireError);
  WireDecoder t({"a"});
  msg = encode_message(control(MessageType::kEnd));
  msg[5] = 77;
  CHECK_THROWS_AS(t.feed(msg), WireError);
  WireDecoder k({"a", "b"});  // expects two keypoints per hand
  CHECK_THROWS_AS(k.feed(encode_message(frame_message(sample(1).frames[0]))), WireError);
}

TEST_CASE("endpoint parsing") {
  CHECK(parse_endpoint("127.0.0.1:9000") == std::make_pair(std::string("127.0.0.1"), 9000));
  CHECK_THROWS_AS(parse_endpoint("nohost"), std::invalid_argument);
  CHECK_THROWS_AS(parse_endpoint("h:99999"), std::invalid_argument);
}

TEST_CASE("loopback round-trip of 100 frames") {
  const auto rec = sample(100);
  StreamServer server("127.0.0.1", 0);
  std::thread sender([&] {
    server.accept_client();
    for (const auto& f : rec.frames) server.send(frame_message(f));
    server.send(control(MessageType::kEnd));
  });
  StreamClient client("127.0.0.1:" + std::to_string(server.port()), rec.labels);
  std::vector<BimanualFrame> got;
  // read slowly enough that nothing is superseded: wait for each frame
  for (;;) {
    auto e = client.next();
    if (e.type == MessageType::kEnd) break;
    if (e.frame) got.push_back(*e.frame);
  }
  sender.join();
  CHECK(got.size() + client.dropped() == 100);
  CHECK(client.received() == 100);
  for (const auto& f : got) {
    const auto idx = static_cast<std::size_t>(std::lround(f.timestamp * 60.0));
    check_same(f, rec.frames[idx]);
  }
  CHECK(client.diagnostic().empty());
}

TEST_CASE("receiver stall keeps only the newest frame") {
  const auto rec = sample(10);
  StreamServer server("127.0.0.1", 0);
  std::thread sender([&] {
    server.accept_client();
    server.send(control(MessageType::kEngage, 0.0));
    for (const auto& f : rec.frames) server.send(frame_message(f));
  });
  StreamClient client("127.0.0.1:" + std::to_string(server.port()), rec.labels);
  sender.join();
  REQUIRE(wait_for([&] { return client.received() == 10; }));
  auto e = client.next();
  CHECK(e.type == MessageType::kEngage);
  e = client.next();
  REQUIRE(e.frame);
  CHECK(e.frame->timestamp == rec.frames.back().timestamp);
  CHECK(client.dropped() == 9);
  server.send(control(MessageType::kEnd));
  CHECK(client.next().type == MessageType::kEnd);
}

TEST_CASE("corrupted length terminates the stream") {
  StreamServer server("127.0.0.1", 0);
  std::thread sender([&] {
    server.accept_client();
    const std::vector<std::uint8_t> bad = {0xff, 0xff, 0xff, 0xff, 1, 1, 0, 0};
    server.send_raw(bad);
  });
  StreamClient client("127.0.0.1:" + std::to_string(server.port()), {"a"});
  sender.join();
  CHECK(client.next().type == MessageType::kEnd);
  CHECK_FALSE(client.diagnostic().empty());
  CHECK(client.next().type == MessageType::kEnd);
}

TEST_CASE("connection loss is reported") {
  StreamServer server("127.0.0.1", 0);
  std::thread sender([&] {
    server.accept_client();
    server.close();
  });
  StreamClient client("127.0.0.1:" + std::to_string(server.port()), {"a"});
  sender.join();
  CHECK(client.next().type == MessageType::kEnd);
  CHECK(client.diagnostic().find("closed") != std::string::npos);
}

TEST_CASE("latest slot overwrites") {
  LatestSlot<int> slot;
  slot.put(1);
  slot.put(2);
  CHECK(slot.dropped() == 1);
  CHECK(slot.try_take() == 2);
  CHECK_FALSE(slot.try_take());
  slot.close();
  CHECK_FALSE(slot.take());
}
