#pragma once

#include <deque>

#include "airflux/engine.hpp"
#include "airflux/learner.hpp"
#include "airflux/message.hpp"

namespace airflux {

/// One staleness measurement, taken when a gradient is applied.
struct StalenessRecord {
  RankId applier = 0;
  RankId origin = 0;
  uint64_t origin_seq = 0;
  uint64_t staleness = 0;
  TimeNs wall_ts = 0;
};

/// staleness = sum_r |applier_clock[r] - origin_clock[r]|. With FIFO channels
/// and prefix application this equals the symmetric-difference size of the
/// two replicas' applied-gradient sets.
inline uint64_t compute_staleness(const VectorClock& applier_clock,
                                  const VectorClock& origin_clock) {
  return clock_l1_distance(applier_clock, origin_clock);
}

/// Ordered per-replica event log; input for the replay oracle that recomputes
/// staleness by literal set symmetric difference.
struct ReplicaEvent {
  enum class Type : uint8_t { Compute, Apply } type = Type::Compute;
  RankId origin = 0;
  uint64_t origin_seq = 0;
  uint64_t staleness = 0;  // Apply events: the vector-clock value recorded
};

struct ModelStats {
  std::vector<std::pair<uint64_t, float>> losses;  // (batch_id, loss at compute time)
  std::vector<StalenessRecord> staleness;
  std::vector<ReplicaEvent> trace;
  std::vector<uint64_t> theta_digests;                // after each local step, if enabled
  std::vector<std::pair<TimeNs, TimeNs>> latencies;   // (batch created_ts, applied_ts)
  uint64_t batches_trained = 0;
  uint64_t pairs_trained = 0;
  uint64_t remote_applied = 0;
  uint64_t rejected_after_stop = 0;
  uint64_t predictions_served = 0;
};

/// The Model operator: one full model replica per rank. Handles train and
/// predict messages, applies local gradients immediately, buffers up to
/// maxGradBuffer locally computed gradients before broadcasting them to all
/// peer replicas, and tracks exact per-origin staleness.
class ModelReplica final : public OperatorLogic {
 public:
  ModelReplica(const ModelConfig& config, RankId self, uint32_t n_ranks, RunMode mode,
               uint32_t ssp_k);

  void on_message(OpContext& ctx, Message&& m) override;
  void on_upstream_drained(OpContext& ctx) override;
  void on_peer_eos(OpContext& ctx) override;

  uint32_t max_emit_per_step() const override { return config_.max_grad_buffer; }
  bool gradient_only() const override { return ssp_waiting_; }

  const ParamStoreF& params() const { return theta_; }
  const VectorClock& applied_clock() const { return applied_; }
  uint64_t local_seq() const { return local_seq_; }
  const ModelStats& stats() const { return stats_; }
  float effective_alpha() const { return alpha_; }
  bool alive() const { return alive_; }

  /// Engine-independent core transitions (scripted scenarios drive these
  /// directly). ingest_batch computes a gradient on the current parameters
  /// and applies it locally; ingest_gradient applies a peer's gradient and
  /// records its staleness.
  std::shared_ptr<const GradientUpdate> ingest_batch(const MiniBatch& batch, TimeNs now);
  void ingest_gradient(const GradientUpdate& g, TimeNs now);

 private:
  void train_batch(OpContext& ctx, const MiniBatch& batch);
  void train_gradient(OpContext& ctx, const GradientUpdate& g);
  void serve_predict(OpContext& ctx, const PredictQuery& q);
  void flush_buffer(OpContext& ctx);
  void maybe_enter_barrier(OpContext& ctx);
  void check_barrier_release();

  ModelConfig config_;
  std::shared_ptr<const Learner> learner_;
  RankId self_ = 0;
  uint32_t n_ranks_ = 1;
  float alpha_ = 0.0f;
  uint32_t ssp_k_ = 0;

  ParamStoreF theta_;
  VectorClock applied_;
  uint64_t local_seq_ = 0;
  std::deque<std::shared_ptr<const GradientUpdate>> buffer_;
  bool alive_ = true;
  bool draining_ = false;

  // SSP round bookkeeping (local-gradient counts).
  uint32_t round_local_ = 0;
  uint64_t round_ = 1;
  bool ssp_waiting_ = false;

  ModelStats stats_;
};

}  // namespace airflux
