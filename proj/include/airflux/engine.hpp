#pragma once

#include <atomic>
#include <memory>
#include <string_view>

#include "airflux/clock.hpp"
#include "airflux/graph.hpp"
#include "airflux/message.hpp"
#include "airflux/rng.hpp"

namespace airflux {

enum class RunMode : uint8_t { Sync, Asgd, Ssp };
enum class SchedulerKind : uint8_t { Threads, Deterministic };

struct EngineOptions {
  RunMode mode = RunMode::Asgd;
  uint32_t ssp_k = 0;  // local gradients per SSP round; 0 disables the barrier
  SchedulerKind scheduler = SchedulerKind::Threads;
  uint64_t seed = 1;
  size_t channel_capacity = 1024;
  TimeNs barrier_timeout_ns = 30'000'000'000;
  /// Virtual-clock advance per deterministic scheduler step.
  TimeNs virtual_step_ns = 1000;
  bool collect_step_trace = false;
};

/// One scheduler decision in a deterministic run; two runs with the same seed
/// must produce identical traces.
struct StepTraceEntry {
  uint32_t ctx = 0;        // flattened context index
  uint8_t action = 0;      // 0 source tick, 1 deliver, 2 spill flush
  MsgKind kind = MsgKind::ControlMsg;
  Address sender;
  uint64_t seq = 0;
  bool operator==(const StepTraceEntry&) const = default;
};

struct RunSummary {
  TimeNs wall_ns = 0;
  uint64_t steps = 0;  // deterministic scheduler only
  uint64_t total_sent = 0;
  uint64_t total_received = 0;
  uint64_t total_dropped = 0;
  bool clean = false;
};

class EngineImpl;

/// Per-instance services handed to operator logic. All sends route along
/// declared edges; messages are immutable after emit.
class OpContext {
 public:
  OpContext(EngineImpl& engine, uint32_t ctx_index);

  Address self() const;
  RankId rank() const { return self().rank; }
  uint32_t n_ranks() const;

  Clock& clock();
  Rng& rng();
  RunMode mode() const;
  uint32_t ssp_k() const;
  bool stop_requested() const;

  /// Sends on every outgoing edge, applying each edge's routing. HashShard
  /// edges require a shard_key extractor unless emit_keyed is used.
  void emit(Message m);
  /// Sends on the edge to `to_op`, sharding by an explicit key.
  void emit_keyed(std::string_view to_op, std::string_view key, Message m);
  /// Sends on the edge to `to_op` to a shard the sender already computed.
  void emit_ranked(std::string_view to_op, RankId rank, Message m);
  void emit_to(std::string_view to_op, Message m);
  /// Delivers a GradientMsg to every peer rank of this Model operator.
  void broadcast_peers(Message m);

 private:
  EngineImpl& engine_;
  uint32_t ctx_;
};

/// Behavior of one operator instance. Each instance is an isolated execution
/// context: it owns its state exclusively and communicates only via messages.
class OperatorLogic {
 public:
  virtual ~OperatorLogic() = default;

  virtual void on_start(OpContext&) {}
  /// Sources only: emit the next event(s); return false when exhausted.
  virtual bool on_source_step(OpContext&) { return false; }
  virtual void on_message(OpContext&, Message&&) {}
  /// All non-peer in-channels have reached EOS (flush hooks run here,
  /// before the engine propagates EOS downstream).
  virtual void on_upstream_drained(OpContext&) {}
  /// A peer (same-operator) channel reached EOS.
  virtual void on_peer_eos(OpContext&) {}
  virtual void on_finish(OpContext&) {}

  /// Upper bound of messages one step may emit (deterministic admission).
  virtual uint32_t max_emit_per_step() const { return 1; }
  /// While true, only Gradient/Control messages are consumed (SSP wait).
  virtual bool gradient_only() const { return false; }
};

/// Handle to a running dataflow. join() blocks until all contexts finish and
/// rethrows the first execution error, if any.
class RunHandle {
 public:
  explicit RunHandle(std::shared_ptr<EngineImpl> impl) : impl_(std::move(impl)) {}

  void stop();
  void join();
  bool joined() const;

  const RunSummary& summary() const;
  OperatorLogic& logic(std::string_view op, RankId rank) const;
  const std::vector<StepTraceEntry>& step_trace() const;
  Clock& clock() const;

 private:
  std::shared_ptr<EngineImpl> impl_;
};

RunHandle run_graph(const DataflowGraph& graph, EngineOptions options);

/// Convenience wrappers for plain function operators.
OperatorSpec make_map_op(std::string name, uint32_t instances,
                         std::function<void(OpContext&, Message&&)> fn);
OperatorSpec make_sink_op(std::string name, std::function<void(OpContext&, Message&&)> fn);
OperatorSpec make_source_op(std::string name, std::function<bool(OpContext&)> step,
                            uint32_t max_emit = 1);

}  // namespace airflux
