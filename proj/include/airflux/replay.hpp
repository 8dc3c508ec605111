#pragma once

#include "airflux/clock.hpp"
#include "airflux/events.hpp"

namespace airflux {

/// Simulates an unbounded stream over a finite dataset by cycling through it,
/// stamping fresh monotone timestamps. With a positive rate the stream is
/// paced: event i is due at t0 + i/rate and carries that schedule tick as its
/// ingestion timestamp, so queueing delay shows up as latency when the
/// pipeline cannot keep up.
template <typename T>
class DatasetReplayer {
 public:
  /// passes == 0 replays forever; rate <= 0 emits as fast as possible.
  DatasetReplayer(std::vector<T> records, uint64_t passes, double rate, Clock& clock)
      : records_(std::move(records)), passes_(passes), rate_(rate), clock_(clock) {
    if (records_.empty()) fail(ErrorCode::EmptyDataset, "replay over an empty dataset");
  }

  std::optional<Stamped<T>> next() {
    if (passes_ != 0 && emitted_ >= passes_ * records_.size()) return std::nullopt;
    TimeNs ts;
    if (rate_ > 0) {
      if (emitted_ == 0) t0_ = clock_.now();
      ts = t0_ + static_cast<TimeNs>(static_cast<double>(emitted_) * 1e9 / rate_);
      if (clock_.now() < ts) clock_.sleep_until(ts);
    } else {
      ts = clock_.now();
      if (ts <= last_ts_) ts = last_ts_ + 1;  // strictly monotone when unpaced
    }
    last_ts_ = ts;
    Stamped<T> out{records_[emitted_ % records_.size()], ts};
    ++emitted_;
    return out;
  }

  uint64_t emitted() const { return emitted_; }

 private:
  std::vector<T> records_;
  uint64_t passes_;
  double rate_;
  Clock& clock_;
  uint64_t emitted_ = 0;
  TimeNs t0_ = 0;
  TimeNs last_ts_ = -1;
};

}  // namespace airflux
