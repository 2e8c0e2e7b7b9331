#pragma once

#include <atomic>
#include <chrono>

namespace edgeids {

// Monotonic seconds. Replays and tests drive a ManualClock so latency figures
// are scripted rather than measured.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_s() const = 0;
};

class SteadyClock final : public Clock {
 public:
  double now_s() const override {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  }
};

class ManualClock final : public Clock {
 public:
  double now_s() const override { return now_.load(); }
  void advance(double seconds) {
    double cur = now_.load();
    while (!now_.compare_exchange_weak(cur, cur + seconds)) {
    }
  }
  void set(double seconds) { now_.store(seconds); }

 private:
  std::atomic<double> now_{0.0};
};

}  // namespace edgeids
