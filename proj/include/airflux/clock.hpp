#pragma once

#include <atomic>
#include <chrono>
#include <thread>

#include "airflux/common.hpp"

namespace airflux {

/// Time source for a run. Threaded runs use the monotonic system clock;
/// deterministic runs use a virtual clock advanced by the scheduler, so
/// every timestamp-derived output is reproducible.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimeNs now() const = 0;
  virtual void sleep_until(TimeNs t) = 0;
};

class SystemClock final : public Clock {
 public:
  SystemClock() : t0_(std::chrono::steady_clock::now()) {}

  TimeNs now() const override {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() -
                                                                t0_)
        .count();
  }

  void sleep_until(TimeNs t) override {
    std::this_thread::sleep_until(t0_ + std::chrono::nanoseconds(t));
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

class VirtualClock final : public Clock {
 public:
  TimeNs now() const override { return now_.load(std::memory_order_relaxed); }
  void sleep_until(TimeNs t) override {
    TimeNs cur = now_.load(std::memory_order_relaxed);
    while (cur < t && !now_.compare_exchange_weak(cur, t, std::memory_order_relaxed)) {
    }
  }
  void advance(TimeNs delta) { now_.fetch_add(delta, std::memory_order_relaxed); }

 private:
  std::atomic<TimeNs> now_{0};
};

}  // namespace airflux
