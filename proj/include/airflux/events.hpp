#pragma once

#include <optional>
#include <span>
#include <vector>

#include "airflux/common.hpp"

namespace airflux {

/// A stream element: an opaque record plus its ingestion timestamp.
/// Timestamps are non-decreasing in ingestion order.
template <typename T>
struct Stamped {
  T value;
  TimeNs ts = 0;
};

/// Tumbling-window assembler: consecutive, non-overlapping windows of exactly
/// `size` events. The final partial window is dropped, never padded.
template <typename T>
class TumblingWindow {
 public:
  explicit TumblingWindow(size_t size) : size_(size) {
    if (size_ == 0) fail(ErrorCode::ConfigError, "window size must be positive");
    pending_.reserve(size_);
  }

  std::optional<std::vector<Stamped<T>>> push(Stamped<T> event) {
    pending_.push_back(std::move(event));
    if (pending_.size() < size_) return std::nullopt;
    std::vector<Stamped<T>> full;
    full.swap(pending_);
    pending_.reserve(size_);
    return full;
  }

  size_t pending() const { return pending_.size(); }

 private:
  size_t size_;
  std::vector<Stamped<T>> pending_;
};

/// Pure batching function: window j holds events (j-1)*b+1 .. j*b in
/// ingestion order; the trailing partial window is dropped.
template <typename T>
std::vector<std::vector<Stamped<T>>> tumble(std::span<const Stamped<T>> events, size_t b) {
  TumblingWindow<T> window(b);
  std::vector<std::vector<Stamped<T>>> out;
  for (const auto& e : events)
    if (auto full = window.push(e)) out.push_back(std::move(*full));
  return out;
}

}  // namespace airflux
