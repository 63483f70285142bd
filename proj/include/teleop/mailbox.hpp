#pragma once

// Capacity-1 overwrite-oldest handoff between one producer and one consumer.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <optional>

namespace teleop {

template <class T>
class LatestSlot {
 public:
  /// Stores v, replacing (and counting as dropped) an unconsumed value.
  void put(T v) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      if (value_) ++dropped_;
      value_ = std::move(v);
      ++written_;
    }
    cv_.notify_all();
  }

  std::optional<T> try_take() {
    std::lock_guard<std::mutex> lock(mutex_);
    return take_locked();
  }

  /// Blocks until a value arrives or the slot is closed; nullopt once closed and empty.
  std::optional<T> take() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return value_.has_value() || closed_; });
    return take_locked();
  }

  template <class Rep, class Period>
  std::optional<T> take_for(std::chrono::duration<Rep, Period> timeout) {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait_for(lock, timeout, [&] { return value_.has_value() || closed_; });
    return take_locked();
  }

  void close() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mutex_);
    value_.reset();
  }

  bool closed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return closed_;
  }
  std::size_t dropped() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return dropped_;
  }
  std::size_t written() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return written_;
  }

 private:
  std::optional<T> take_locked() {
    std::optional<T> out = std::move(value_);
    value_.reset();
    return out;
  }

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::optional<T> value_;
  bool closed_ = false;
  std::size_t dropped_ = 0;
  std::size_t written_ = 0;
};

}  // namespace teleop
