#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>

#include "airflux/message.hpp"

namespace airflux {

/// All incoming channels of one operator instance. Each slot is one directed
/// channel (one sender instance) with its own FIFO queue, sequence counters,
/// and EOS flag. Senders block when a slot is full (threaded mode); that is
/// the engine's backpressure mechanism.
///
/// Pop priority: Control and Gradient heads are served before other kinds,
/// so gradient application is never starved by queued mini-batches.
class Inbox {
 public:
  Inbox(size_t capacity, bool blocking) : capacity_(capacity), blocking_(blocking) {}

  size_t add_slot(Address from, bool peer) {
    slots_.emplace_back();
    slots_.back().from = from;
    slots_.back().peer = peer;
    return slots_.size() - 1;
  }

  size_t slot_count() const { return slots_.size(); }
  Address slot_sender(size_t slot) const { return slots_[slot].from; }
  bool slot_is_peer(size_t slot) const { return slots_[slot].peer; }

  /// Enqueues on a slot; assigns the channel sequence number. Blocks while
  /// the slot is full in blocking mode; throws ChannelClosed after close().
  void push(size_t slot, Message&& m) {
    std::unique_lock lock(mutex_);
    Slot& s = slots_[slot];
    if (blocking_) {
      space_cv_.wait(lock, [&] { return closed_ || s.queue.size() < capacity_; });
    }
    if (closed_) fail(ErrorCode::ChannelClosed, "destination shut down");
    m.seq = ++s.sent;
    s.queue.push_back(std::move(m));
    data_cv_.notify_all();
  }

  /// Non-blocking enqueue; returns false when the slot is full.
  bool try_push(size_t slot, Message&& m) {
    std::unique_lock lock(mutex_);
    if (closed_) fail(ErrorCode::ChannelClosed, "destination shut down");
    Slot& s = slots_[slot];
    if (s.queue.size() >= capacity_) return false;
    m.seq = ++s.sent;
    s.queue.push_back(std::move(m));
    data_cv_.notify_all();
    return true;
  }

  enum class PopStatus : uint8_t { Got, Empty, AllDrained, TimedOut, Closed };

  struct Popped {
    PopStatus status = PopStatus::Empty;
    Message msg;
    size_t slot = 0;
  };

  /// Dequeues the highest-priority head. With gradient_only set, only
  /// Control/Gradient heads are eligible (SSP barrier wait). In blocking
  /// mode waits until a message is eligible, every slot is drained, or the
  /// optional deadline passes.
  Popped pop(bool gradient_only, std::optional<TimeNs> timeout_ns = std::nullopt) {
    std::unique_lock lock(mutex_);
    const auto deadline = timeout_ns
                              ? std::optional(std::chrono::steady_clock::now() +
                                              std::chrono::nanoseconds(*timeout_ns))
                              : std::nullopt;
    for (;;) {
      if (closed_) return {PopStatus::Closed, {}, 0};
      if (auto got = pick_locked(gradient_only)) {
        space_cv_.notify_all();
        return std::move(*got);
      }
      if (all_drained_locked()) return {PopStatus::AllDrained, {}, 0};
      if (!blocking_) return {PopStatus::Empty, {}, 0};
      if (deadline) {
        if (data_cv_.wait_until(lock, *deadline) == std::cv_status::timeout &&
            !pick_available_locked(gradient_only) && !all_drained_locked() && !closed_)
          return {PopStatus::TimedOut, {}, 0};
      } else {
        data_cv_.wait(lock);
      }
    }
  }

  /// Head message kind of a slot, if any (deterministic-scheduler probing).
  std::optional<MsgKind> head_kind(size_t slot) const {
    std::unique_lock lock(mutex_);
    const Slot& s = slots_[slot];
    if (s.queue.empty()) return std::nullopt;
    return s.queue.front().kind;
  }

  size_t slot_space(size_t slot) const {
    std::unique_lock lock(mutex_);
    const Slot& s = slots_[slot];
    return s.queue.size() >= capacity_ ? 0 : capacity_ - s.queue.size();
  }

  bool has_eligible(bool gradient_only) const {
    std::unique_lock lock(mutex_);
    return pick_available_locked(gradient_only);
  }

  /// Best (lowest) priority class among eligible heads: 0 control, 1 gradient,
  /// 2 data; nullopt when nothing is eligible.
  std::optional<int> best_class(bool gradient_only) const {
    std::unique_lock lock(mutex_);
    std::optional<int> best;
    for (const auto& s : slots_) {
      if (s.queue.empty()) continue;
      const int cls = priority_class(s.queue.front().kind);
      if (gradient_only && cls > 1) continue;
      if (!best || cls < *best) best = cls;
    }
    return best;
  }

  bool all_drained() const {
    std::unique_lock lock(mutex_);
    return all_drained_locked();
  }

  size_t pending_total() const {
    std::unique_lock lock(mutex_);
    size_t n = 0;
    for (const auto& s : slots_) n += s.queue.size();
    return n;
  }

  void close() {
    std::unique_lock lock(mutex_);
    closed_ = true;
    data_cv_.notify_all();
    space_cv_.notify_all();
  }

  /// Messages still queued (counted as dropped when a run aborts).
  uint64_t drain_remaining() {
    std::unique_lock lock(mutex_);
    uint64_t n = 0;
    for (auto& s : slots_) {
      n += s.queue.size();
      s.queue.clear();
    }
    return n;
  }

  uint64_t received_total() const {
    std::unique_lock lock(mutex_);
    uint64_t n = 0;
    for (const auto& s : slots_) n += s.received;
    return n;
  }

 private:
  struct Slot {
    Address from;
    bool peer = false;
    std::deque<Message> queue;
    uint64_t sent = 0;      // sequence assigned at enqueue
    uint64_t received = 0;  // last sequence verified at dequeue
    bool eos = false;       // Eos dequeued (set by the engine via mark_eos)
  };

  // Priority classes: 0 control, 1 gradient, 2 everything else.
  static int priority_class(MsgKind k) {
    if (k == MsgKind::ControlMsg) return 0;
    if (k == MsgKind::GradientMsg) return 1;
    return 2;
  }

  bool pick_available_locked(bool gradient_only) const {
    for (const auto& s : slots_) {
      if (s.queue.empty()) continue;
      if (!gradient_only || priority_class(s.queue.front().kind) <= 1) return true;
    }
    return false;
  }

  std::optional<Popped> pick_locked(bool gradient_only) {
    int best_class = 3;
    size_t best_slot = 0;
    bool found = false;
    for (size_t off = 0; off < slots_.size(); ++off) {
      const size_t i = (rotation_ + off) % slots_.size();
      const Slot& s = slots_[i];
      if (s.queue.empty()) continue;
      const int cls = priority_class(s.queue.front().kind);
      if (gradient_only && cls > 1) continue;
      if (cls < best_class) {
        best_class = cls;
        best_slot = i;
        found = true;
        if (cls == 0) break;
      }
    }
    if (!found) return std::nullopt;
    Slot& s = slots_[best_slot];
    Popped out;
    out.status = PopStatus::Got;
    out.msg = std::move(s.queue.front());
    out.slot = best_slot;
    s.queue.pop_front();
    if (out.msg.seq != s.received + 1)
      fail(ErrorCode::SequenceGap, "expected seq " + std::to_string(s.received + 1) + " got " +
                                       std::to_string(out.msg.seq));
    s.received = out.msg.seq;
    rotation_ = (best_slot + 1) % slots_.size();
    return out;
  }

  bool all_drained_locked() const {
    for (const auto& s : slots_)
      if (!s.eos || !s.queue.empty()) return false;
    return true;
  }

 public:
  void mark_eos(size_t slot) {
    std::unique_lock lock(mutex_);
    slots_[slot].eos = true;
    data_cv_.notify_all();
  }

  bool slot_eos(size_t slot) const {
    std::unique_lock lock(mutex_);
    return slots_[slot].eos;
  }

  /// True once every non-peer slot has reached EOS.
  bool upstream_drained() const {
    std::unique_lock lock(mutex_);
    for (const auto& s : slots_)
      if (!s.peer && !s.eos) return false;
    return true;
  }

 private:
  const size_t capacity_;
  const bool blocking_;
  bool closed_ = false;
  std::vector<Slot> slots_;
  mutable std::mutex mutex_;
  std::condition_variable data_cv_;
  std::condition_variable space_cv_;
  size_t rotation_ = 0;
};

}  // namespace airflux
