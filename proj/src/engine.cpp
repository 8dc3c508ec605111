#include "airflux/engine.hpp"

#include <cstring>
#include <thread>

#include "airflux/channel.hpp"
#include "airflux/hash.hpp"
#include "airflux/model.hpp"

namespace airflux {

namespace {

struct OutRoute {
  Inbox* inbox = nullptr;
  size_t slot = 0;
  std::deque<Message> spill;  // overflow buffer: Model sends and EOS never block
};

struct OutEdge {
  size_t edge_index = 0;
  OpIndex to_op = 0;
  std::string to_name;
  Routing routing = Routing::Forward;
  const std::function<std::string(const Message&)>* key_fn = nullptr;
  bool peer = false;  // self-loop on a Model operator
  std::vector<OutRoute> routes;
};

struct Ctx {
  uint32_t index = 0;
  OpIndex op = 0;
  RankId rank = 0;
  OpKind kind = OpKind::Udf;
  std::unique_ptr<OperatorLogic> logic;
  std::unique_ptr<Inbox> inbox;
  std::vector<OutEdge> out;
  std::unique_ptr<Rng> rng;
  std::unique_ptr<OpContext> op_ctx;

  bool exhausted = false;          // sources: no more events
  bool upstream_done = false;      // on_upstream_drained ran, EOS propagated
  bool finished = false;
  std::atomic<uint64_t> sent{0};
  std::atomic<uint64_t> received{0};

  bool spills_empty() const {
    for (const auto& oe : out)
      for (const auto& r : oe.routes)
        if (!r.spill.empty()) return false;
    return true;
  }
};

}  // namespace

class EngineImpl {
 public:
  EngineImpl(const DataflowGraph& graph, EngineOptions opt) : graph_(graph), opt_(opt) {
    if (opt_.scheduler == SchedulerKind::Deterministic)
      clock_ = std::make_unique<VirtualClock>();
    else
      clock_ = std::make_unique<SystemClock>();
    build_contexts();
  }

  void start() {
    if (opt_.scheduler == SchedulerKind::Threads) start_threads();
    // Deterministic runs execute inside join().
  }

  void stop() { stop_.store(true); }

  void join() {
    if (joined_) return;
    if (opt_.scheduler == SchedulerKind::Deterministic) {
      try {
        run_deterministic();
      } catch (...) {
        record_error(std::current_exception());
      }
    } else {
      for (auto& t : threads_)
        if (t.joinable()) t.join();
    }
    finalize();
    joined_ = true;
    if (error_) std::rethrow_exception(error_);
  }

  bool joined() const { return joined_; }

  // ---- OpContext services ----

  Address ctx_address(uint32_t ctx) const { return {ctxs_[ctx]->op, ctxs_[ctx]->rank}; }
  uint32_t ctx_n_ranks(uint32_t ctx) const { return graph_.instance_count(ctxs_[ctx]->op); }
  Clock& clock() { return *clock_; }
  Rng& ctx_rng(uint32_t ctx) { return *ctxs_[ctx]->rng; }
  RunMode mode() const { return opt_.mode; }
  uint32_t ssp_k() const { return opt_.ssp_k; }
  bool stop_requested() const { return stop_.load(); }

  void emit(uint32_t ctx, Message&& m) {
    for (auto& oe : ctxs_[ctx]->out) route_edge(*ctxs_[ctx], oe, std::move(Message(m)));
  }

  void emit_keyed(uint32_t ctx, std::string_view to_op, std::string_view key, Message&& m) {
    OutEdge& oe = find_edge(*ctxs_[ctx], to_op);
    const uint32_t n = graph_.instance_count(oe.to_op);
    deliver(*ctxs_[ctx], oe, hash_shard(key, n), std::move(m));
  }

  void emit_ranked(uint32_t ctx, std::string_view to_op, RankId rank, Message&& m) {
    OutEdge& oe = find_edge(*ctxs_[ctx], to_op);
    if (rank >= oe.routes.size()) fail(ErrorCode::DanglingEdge, "rank out of range");
    deliver(*ctxs_[ctx], oe, rank, std::move(m));
  }

  void emit_to(uint32_t ctx, std::string_view to_op, Message&& m) {
    route_edge(*ctxs_[ctx], find_edge(*ctxs_[ctx], to_op), std::move(m));
  }

  void broadcast_peers(uint32_t ctx, Message&& m) {
    Ctx& c = *ctxs_[ctx];
    for (auto& oe : c.out) {
      if (!oe.peer) continue;
      for (RankId r = 0; r < oe.routes.size(); ++r) {
        if (r == c.rank) continue;
        deliver(c, oe, r, Message(m));
      }
      return;
    }
    fail(ErrorCode::DanglingEdge, "no peer edge declared for broadcast");
  }

  // ---- post-join access ----

  const RunSummary& summary() const { return summary_; }
  const std::vector<StepTraceEntry>& step_trace() const { return step_trace_; }

  OperatorLogic& logic(std::string_view op, RankId rank) {
    for (auto& c : ctxs_)
      if (graph_.op(c->op).name == op && c->rank == rank) return *c->logic;
    fail(ErrorCode::DanglingEdge, "no such operator instance");
  }

 private:
  // ---- construction ----

  void build_contexts() {
    if (opt_.mode == RunMode::Sync) {
      for (const auto& op : graph_.operators())
        if (op.kind == OpKind::Model && op.instance_count != 1)
          fail(ErrorCode::ConfigError, "SYNC mode requires single-instance Model operators");
    }
    const bool blocking = opt_.scheduler == SchedulerKind::Threads;

    for (OpIndex op = 0; op < graph_.operators().size(); ++op) {
      const auto& spec = graph_.op(op);
      for (RankId r = 0; r < spec.instance_count; ++r) {
        auto c = std::make_unique<Ctx>();
        c->index = static_cast<uint32_t>(ctxs_.size());
        c->op = op;
        c->rank = r;
        c->kind = spec.kind;
        c->inbox = std::make_unique<Inbox>(opt_.channel_capacity, blocking);
        c->rng = std::make_unique<Rng>(derive_seed(opt_.seed, "ctx", c->index));
        if (spec.kind == OpKind::Model) {
          c->logic = std::make_unique<ModelReplica>(*spec.model, r, spec.instance_count,
                                                    opt_.mode, opt_.ssp_k);
        } else {
          if (!spec.make_logic)
            fail(ErrorCode::ConfigError, "operator '" + spec.name + "' has no logic factory");
          c->logic = spec.make_logic(r);
        }
        ctxs_.push_back(std::move(c));
      }
    }
    for (auto& c : ctxs_) c->op_ctx = std::make_unique<OpContext>(*this, c->index);

    // Wire channels: one slot per (edge, sender rank) on each receiver.
    for (size_t e = 0; e < graph_.edges().size(); ++e) {
      const OpIndex from = graph_.edge_from(e);
      const OpIndex to = graph_.edge_to(e);
      const bool peer = graph_.is_peer_edge(e);
      for (RankId sr = 0; sr < graph_.instance_count(from); ++sr) {
        Ctx& sender = ctx_at(from, sr);
        OutEdge oe;
        oe.edge_index = e;
        oe.to_op = to;
        oe.to_name = graph_.edges()[e].to;
        oe.routing = graph_.edges()[e].routing;
        if (graph_.edges()[e].shard_key) oe.key_fn = &graph_.edges()[e].shard_key;
        oe.peer = peer;
        for (RankId tr = 0; tr < graph_.instance_count(to); ++tr) {
          Ctx& receiver = ctx_at(to, tr);
          OutRoute route;
          route.inbox = receiver.inbox.get();
          route.slot = receiver.inbox->add_slot({from, sr}, peer);
          oe.routes.push_back(std::move(route));
        }
        sender.out.push_back(std::move(oe));
      }
    }
  }

  Ctx& ctx_at(OpIndex op, RankId rank) {
    for (auto& c : ctxs_)
      if (c->op == op && c->rank == rank) return *c;
    fail(ErrorCode::DanglingEdge, "context not found");
  }

  OutEdge& find_edge(Ctx& c, std::string_view to_op) {
    for (auto& oe : c.out)
      if (oe.to_name == to_op) return oe;
    fail(ErrorCode::DanglingEdge,
         "no edge from '" + graph_.op(c.op).name + "' to '" + std::string(to_op) + "'");
  }

  // ---- send paths ----

  void route_edge(Ctx& c, OutEdge& oe, Message&& m) {
    const uint32_t n = static_cast<uint32_t>(oe.routes.size());
    switch (oe.routing) {
      case Routing::Forward:
        deliver(c, oe, c.rank % n, std::move(m));
        return;
      case Routing::HashShard: {
        if (!oe.key_fn)
          fail(ErrorCode::ConfigError, "HashShard edge to '" + oe.to_name + "' has no key fn");
        deliver(c, oe, hash_shard((*oe.key_fn)(m), n), std::move(m));
        return;
      }
      case Routing::Broadcast: {
        for (RankId r = 0; r < n; ++r) {
          if (oe.peer && r == c.rank) continue;
          deliver(c, oe, r, Message(m));
        }
        return;
      }
    }
  }

  /// Model sends and EOS go through the spill buffer (never block the
  /// processing loop); everything else blocks on admission, which is the
  /// backpressure path a Source measures.
  void deliver(Ctx& c, OutEdge& oe, RankId target_rank, Message&& m) {
    m.sender = {c.op, c.rank};
    OutRoute& r = oe.routes[target_rank];
    const bool spill_ok = c.kind == OpKind::Model || m.kind == MsgKind::ControlMsg;
    if (spill_ok) {
      if (!r.spill.empty() || !r.inbox->try_push(r.slot, std::move(Message(m)))) {
        r.spill.push_back(std::move(m));
      } else {
        c.sent.fetch_add(1, std::memory_order_relaxed);
      }
      return;
    }
    if (opt_.scheduler == SchedulerKind::Threads) {
      r.inbox->push(r.slot, std::move(m));
      c.sent.fetch_add(1, std::memory_order_relaxed);
    } else {
      if (!r.inbox->try_push(r.slot, std::move(m)))
        fail(ErrorCode::ConfigError, "deterministic admission violated (max_emit_per_step too low)");
      c.sent.fetch_add(1, std::memory_order_relaxed);
    }
  }

  bool flush_spills(Ctx& c) {
    bool all_empty = true;
    for (auto& oe : c.out) {
      for (auto& r : oe.routes) {
        while (!r.spill.empty() && r.inbox->try_push(r.slot, std::move(Message(r.spill.front())))) {
          r.spill.pop_front();
          c.sent.fetch_add(1, std::memory_order_relaxed);
        }
        if (!r.spill.empty()) all_empty = false;
      }
    }
    return all_empty;
  }

  void send_eos_downstream(Ctx& c) {
    for (auto& oe : c.out)
      for (RankId r = 0; r < oe.routes.size(); ++r) {
        if (oe.peer && r == c.rank) continue;
        deliver(c, oe, r, Message::control(ControlOp::Eos));
      }
  }

  // ---- shared receive transitions ----

  void check_upstream_drained(Ctx& c) {
    if (c.upstream_done || c.kind == OpKind::Source) return;
    if (!c.inbox->upstream_drained()) return;
    c.upstream_done = true;
    c.logic->on_upstream_drained(*c.op_ctx);  // flush hooks run before EOS leaves
    send_eos_downstream(c);
  }

  void handle_popped(Ctx& c, Inbox::Popped&& p) {
    c.received.fetch_add(1, std::memory_order_relaxed);
    if (p.msg.kind == MsgKind::ControlMsg && p.msg.control == ControlOp::Eos) {
      const bool was_peer = c.inbox->slot_is_peer(p.slot);
      c.inbox->mark_eos(p.slot);
      if (was_peer) c.logic->on_peer_eos(*c.op_ctx);
      check_upstream_drained(c);
      return;
    }
    c.logic->on_message(*c.op_ctx, std::move(p.msg));
  }

  void finish_ctx(Ctx& c) {
    if (c.finished) return;
    c.finished = true;
    c.logic->on_finish(*c.op_ctx);
  }

  // ---- threaded scheduler ----

  void start_threads() {
    threads_.reserve(ctxs_.size());
    try {
      for (auto& c : ctxs_) threads_.emplace_back([this, ctx = c.get()] { thread_main(*ctx); });
    } catch (const std::system_error& e) {
      record_error(std::make_exception_ptr(AirfluxError(ErrorCode::SpawnFailure, e.what())));
      abort_run();
    }
  }

  void thread_main(Ctx& c) {
    try {
      c.logic->on_start(*c.op_ctx);
      if (c.kind == OpKind::Source) {
        while (!stop_requested() && !aborted_.load()) {
          if (!c.logic->on_source_step(*c.op_ctx)) break;
        }
        c.exhausted = true;
        send_eos_downstream(c);
      } else {
        check_upstream_drained(c);  // vacuous when the op has no non-peer inputs
        for (;;) {
          flush_spills(c);
          const bool grad_only = c.logic->gradient_only();
          auto p = c.inbox->pop(grad_only,
                                grad_only ? std::optional(opt_.barrier_timeout_ns) : std::nullopt);
          if (p.status == Inbox::PopStatus::Got) {
            handle_popped(c, std::move(p));
          } else if (p.status == Inbox::PopStatus::AllDrained) {
            check_upstream_drained(c);
            break;
          } else if (p.status == Inbox::PopStatus::TimedOut) {
            fail(ErrorCode::BarrierTimeout, "SSP barrier starved past timeout");
          } else {  // Closed: run aborted elsewhere
            return;
          }
        }
      }
      // Drain remaining spilled messages; receivers are still consuming.
      while (!flush_spills(c)) {
        if (aborted_.load()) return;
        std::this_thread::sleep_for(std::chrono::microseconds(100));
      }
      finish_ctx(c);
    } catch (...) {
      record_error(std::current_exception());
      abort_run();
    }
  }

  // ---- deterministic scheduler ----

  struct Candidate {
    uint32_t ctx;
    uint8_t action;  // 0 source tick, 1 deliver, 2 spill flush
  };

  bool source_admissible(Ctx& c) const {
    const uint32_t need = c.logic->max_emit_per_step();
    for (const auto& oe : c.out)
      for (const auto& r : oe.routes)
        if (r.inbox->slot_space(r.slot) < need) return false;
    return true;
  }

  bool head_admissible(Ctx& c) const {
    // Control/Gradient heads apply state only; other heads may emit.
    const auto cls = c.inbox->best_class(c.logic->gradient_only());
    if (!cls) return false;
    if (*cls <= 1) return true;
    const uint32_t need = c.logic->max_emit_per_step();
    for (const auto& oe : c.out) {
      if (oe.peer) continue;  // peer sends ride the spill buffer
      for (const auto& r : oe.routes)
        if (r.inbox->slot_space(r.slot) < need) return false;
    }
    return true;
  }

  bool spill_flushable(Ctx& c) const {
    for (const auto& oe : c.out)
      for (const auto& r : oe.routes)
        if (!r.spill.empty() && r.inbox->slot_space(r.slot) > 0) return true;
    return false;
  }

  void run_deterministic() {
    Rng sched_rng(derive_seed(opt_.seed, "scheduler"));
    auto* vclock = static_cast<VirtualClock*>(clock_.get());
    for (auto& c : ctxs_) c->logic->on_start(*c->op_ctx);
    for (auto& c : ctxs_)
      if (c->kind != OpKind::Source) check_upstream_drained(*c);

    std::vector<Candidate> candidates;
    for (;;) {
      candidates.clear();
      bool all_finished = true;
      bool any_waiting = false;
      for (auto& cp : ctxs_) {
        Ctx& c = *cp;
        if (c.finished) continue;
        all_finished = false;
        if (c.logic->gradient_only()) any_waiting = true;
        if (spill_flushable(c)) candidates.push_back({c.index, 2});
        if (c.kind == OpKind::Source && !c.exhausted &&
            (stop_requested() || source_admissible(c)))
          candidates.push_back({c.index, 0});
        if (c.kind != OpKind::Source && head_admissible(c)) candidates.push_back({c.index, 1});
      }
      if (all_finished) break;
      if (candidates.empty()) {
        if (any_waiting)
          fail(ErrorCode::BarrierTimeout, "SSP barrier cannot make progress");
        fail(ErrorCode::ChannelClosed, "deterministic scheduler stalled (protocol bug)");
      }

      const Candidate pick = candidates[sched_rng.next_below(candidates.size())];
      Ctx& c = *ctxs_[pick.ctx];
      StepTraceEntry entry;
      entry.ctx = pick.ctx;
      entry.action = pick.action;

      if (pick.action == 0) {
        if (stop_requested() || !c.logic->on_source_step(*c.op_ctx)) {
          c.exhausted = true;
          send_eos_downstream(c);
        }
      } else if (pick.action == 1) {
        auto p = c.inbox->pop(c.logic->gradient_only());
        if (p.status == Inbox::PopStatus::Got) {
          entry.kind = p.msg.kind;
          entry.sender = p.msg.sender;
          entry.seq = p.msg.seq;
          handle_popped(c, std::move(p));
        }
      } else {
        flush_spills(c);
      }

      // Finish transitions once streams and spills are drained.
      if (c.kind == OpKind::Source) {
        if (c.exhausted && c.spills_empty()) finish_ctx(c);
      } else if (c.inbox->all_drained() && c.spills_empty()) {
        check_upstream_drained(c);
        if (c.spills_empty()) finish_ctx(c);
      }

      vclock->advance(opt_.virtual_step_ns);
      ++steps_;
      if (opt_.collect_step_trace) step_trace_.push_back(entry);
    }
  }

  // ---- teardown ----

  void record_error(std::exception_ptr e) {
    std::lock_guard lock(error_mutex_);
    if (!error_) error_ = e;
  }

  void abort_run() {
    aborted_.store(true);
    stop_.store(true);
    for (auto& c : ctxs_) c->inbox->close();
  }

  void finalize() {
    summary_.wall_ns = clock_->now();
    summary_.steps = steps_;
    for (auto& c : ctxs_) {
      summary_.total_sent += c->sent.load();
      summary_.total_received += c->received.load();
      summary_.total_dropped += c->inbox->drain_remaining();
    }
    summary_.clean = !error_ && summary_.total_dropped == 0;
  }

  const DataflowGraph& graph_;
  EngineOptions opt_;
  std::unique_ptr<Clock> clock_;
  std::vector<std::unique_ptr<Ctx>> ctxs_;
  std::vector<std::thread> threads_;
  std::atomic<bool> stop_{false};
  std::atomic<bool> aborted_{false};
  std::mutex error_mutex_;
  std::exception_ptr error_;
  RunSummary summary_;
  uint64_t steps_ = 0;
  std::vector<StepTraceEntry> step_trace_;
  bool joined_ = false;
};

// ---- OpContext forwarding ----

OpContext::OpContext(EngineImpl& engine, uint32_t ctx_index) : engine_(engine), ctx_(ctx_index) {}

Address OpContext::self() const { return engine_.ctx_address(ctx_); }
uint32_t OpContext::n_ranks() const { return engine_.ctx_n_ranks(ctx_); }
Clock& OpContext::clock() { return engine_.clock(); }
Rng& OpContext::rng() { return engine_.ctx_rng(ctx_); }
RunMode OpContext::mode() const { return engine_.mode(); }
uint32_t OpContext::ssp_k() const { return engine_.ssp_k(); }
bool OpContext::stop_requested() const { return engine_.stop_requested(); }
void OpContext::emit(Message m) { engine_.emit(ctx_, std::move(m)); }
void OpContext::emit_keyed(std::string_view to_op, std::string_view key, Message m) {
  engine_.emit_keyed(ctx_, to_op, key, std::move(m));
}
void OpContext::emit_ranked(std::string_view to_op, RankId rank, Message m) {
  engine_.emit_ranked(ctx_, to_op, rank, std::move(m));
}
void OpContext::emit_to(std::string_view to_op, Message m) {
  engine_.emit_to(ctx_, to_op, std::move(m));
}
void OpContext::broadcast_peers(Message m) { engine_.broadcast_peers(ctx_, std::move(m)); }

// ---- RunHandle ----

void RunHandle::stop() { impl_->stop(); }
void RunHandle::join() { impl_->join(); }
bool RunHandle::joined() const { return impl_->joined(); }
const RunSummary& RunHandle::summary() const { return impl_->summary(); }
OperatorLogic& RunHandle::logic(std::string_view op, RankId rank) const {
  return impl_->logic(op, rank);
}
const std::vector<StepTraceEntry>& RunHandle::step_trace() const { return impl_->step_trace(); }
Clock& RunHandle::clock() const { return impl_->clock(); }

RunHandle run_graph(const DataflowGraph& graph, EngineOptions options) {
  auto impl = std::make_shared<EngineImpl>(graph, options);
  impl->start();
  return RunHandle(std::move(impl));
}

// ---- plain-function operator wrappers ----

namespace {

class FnLogic final : public OperatorLogic {
 public:
  explicit FnLogic(std::function<void(OpContext&, Message&&)> fn) : fn_(std::move(fn)) {}
  void on_message(OpContext& ctx, Message&& m) override { fn_(ctx, std::move(m)); }

 private:
  std::function<void(OpContext&, Message&&)> fn_;
};

class FnSource final : public OperatorLogic {
 public:
  FnSource(std::function<bool(OpContext&)> step, uint32_t max_emit)
      : step_(std::move(step)), max_emit_(max_emit) {}
  bool on_source_step(OpContext& ctx) override { return step_(ctx); }
  uint32_t max_emit_per_step() const override { return max_emit_; }

 private:
  std::function<bool(OpContext&)> step_;
  uint32_t max_emit_;
};

}  // namespace

OperatorSpec make_map_op(std::string name, uint32_t instances,
                         std::function<void(OpContext&, Message&&)> fn) {
  OperatorSpec spec;
  spec.name = std::move(name);
  spec.kind = OpKind::Map;
  spec.instance_count = instances;
  spec.make_logic = [fn](RankId) { return std::make_unique<FnLogic>(fn); };
  return spec;
}

OperatorSpec make_sink_op(std::string name, std::function<void(OpContext&, Message&&)> fn) {
  OperatorSpec spec;
  spec.name = std::move(name);
  spec.kind = OpKind::Sink;
  spec.instance_count = 1;
  spec.make_logic = [fn](RankId) { return std::make_unique<FnLogic>(fn); };
  return spec;
}

OperatorSpec make_source_op(std::string name, std::function<bool(OpContext&)> step,
                            uint32_t max_emit) {
  OperatorSpec spec;
  spec.name = std::move(name);
  spec.kind = OpKind::Source;
  spec.instance_count = 1;
  spec.make_logic = [step, max_emit](RankId) { return std::make_unique<FnSource>(step, max_emit); };
  return spec;
}

}  // namespace airflux
