#include "airflux/model.hpp"

#include <cassert>

namespace airflux {

ModelReplica::ModelReplica(const ModelConfig& config, RankId self, uint32_t n_ranks, RunMode mode,
                           uint32_t ssp_k)
    : config_(config),
      learner_(make_learner(config.learner)),
      self_(self),
      n_ranks_(n_ranks),
      ssp_k_(mode == RunMode::Ssp ? ssp_k : 0) {
  alpha_ = config_.scale_alpha_by_ranks ? scale_learning_rate(config_.learner.alpha, n_ranks)
                                        : config_.learner.alpha;
  theta_ = config_.initial_params ? *config_.initial_params : learner_->init_params();
  applied_.assign(n_ranks_, 0);
}

void ModelReplica::on_message(OpContext& ctx, Message&& m) {
  switch (m.kind) {
    case MsgKind::MiniBatchMsg:
      if (!alive_) {
        ++stats_.rejected_after_stop;
        return;
      }
      train_batch(ctx, *m.batch);
      return;
    case MsgKind::GradientMsg:
      if (!alive_) {
        ++stats_.rejected_after_stop;
        return;
      }
      train_gradient(ctx, *m.gradient);
      return;
    case MsgKind::PredictRequestMsg:
      serve_predict(ctx, *m.predict_request);
      return;
    case MsgKind::ControlMsg:
      if (m.control == ControlOp::Stop) alive_ = false;
      return;
    default:
      fail(ErrorCode::UnknownMessageKind, "model cannot handle kind " +
                                              std::to_string(static_cast<int>(m.kind)));
  }
}

std::shared_ptr<const GradientUpdate> ModelReplica::ingest_batch(const MiniBatch& batch,
                                                                 TimeNs now) {
  GradientResult result = learner_->gradient(theta_, batch);
  if (!result.delta.all_finite())
    fail(ErrorCode::NonFiniteGradient, "batch " + std::to_string(batch.id));

  auto g = std::make_shared<GradientUpdate>();
  g->origin = self_;
  g->origin_seq = local_seq_ + 1;
  g->origin_clock = applied_;  // snapshot at computation time, before local apply
  g->delta = std::move(result.delta);
  g->batch_id = batch.id;

  if (config_.collect_trace)
    stats_.trace.push_back({ReplicaEvent::Type::Compute, self_, g->origin_seq, 0});

  // Local gradients are applied immediately; staleness is 0 by construction.
  const uint64_t staleness = compute_staleness(applied_, g->origin_clock);
  assert(staleness == 0);
  apply_delta(theta_, g->delta, alpha_);
  ++applied_[self_];
  ++local_seq_;

  stats_.losses.emplace_back(batch.id, result.loss);
  stats_.staleness.push_back({self_, self_, g->origin_seq, staleness, now});
  if (config_.collect_trace)
    stats_.trace.push_back({ReplicaEvent::Type::Apply, self_, g->origin_seq, staleness});
  stats_.latencies.emplace_back(batch.created_ts, now);
  if (config_.collect_theta_digests) stats_.theta_digests.push_back(theta_.digest());
  ++stats_.batches_trained;
  stats_.pairs_trained += batch.pairs.size();
  return g;
}

void ModelReplica::ingest_gradient(const GradientUpdate& g, TimeNs now) {
  // FIFO channels make per-origin application prefix-closed; a gap here means
  // a lost, reordered, or duplicated gradient.
  if (g.origin >= n_ranks_) fail(ErrorCode::MismatchedRankSets, "gradient from unknown rank");
  if (g.origin_seq != applied_[g.origin] + 1)
    fail(ErrorCode::SequenceGap, "origin " + std::to_string(g.origin) + " seq " +
                                     std::to_string(g.origin_seq) + " applied " +
                                     std::to_string(applied_[g.origin]));

  const uint64_t staleness = compute_staleness(applied_, g.origin_clock);
  apply_delta(theta_, g.delta, alpha_);
  ++applied_[g.origin];

  stats_.staleness.push_back({self_, g.origin, g.origin_seq, staleness, now});
  if (config_.collect_trace)
    stats_.trace.push_back({ReplicaEvent::Type::Apply, g.origin, g.origin_seq, staleness});
  ++stats_.remote_applied;
}

void ModelReplica::train_batch(OpContext& ctx, const MiniBatch& batch) {
  buffer_.push_back(ingest_batch(batch, ctx.clock().now()));
  if (buffer_.size() >= config_.max_grad_buffer) flush_buffer(ctx);
  if (ssp_k_ > 0) {
    ++round_local_;
    maybe_enter_barrier(ctx);
  }
}

void ModelReplica::train_gradient(OpContext& ctx, const GradientUpdate& g) {
  ingest_gradient(g, ctx.clock().now());
  if (ssp_waiting_) check_barrier_release();
}

void ModelReplica::serve_predict(OpContext& ctx, const PredictQuery& q) {
  auto reply = std::make_shared<PredictionPayload>();
  reply->request_id = q.request_id;
  reply->values = learner_->predict(theta_, q);
  ++stats_.predictions_served;
  if (!config_.predict_sink.empty())
    ctx.emit_keyed(config_.predict_sink, std::to_string(q.request_id),
                   Message::prediction(std::move(reply)));
}

void ModelReplica::flush_buffer(OpContext& ctx) {
  // Buffered gradients leave as individual messages in computation order.
  while (!buffer_.empty()) {
    ctx.broadcast_peers(Message::gradient_msg(std::move(buffer_.front())));
    buffer_.pop_front();
  }
}

void ModelReplica::maybe_enter_barrier(OpContext& ctx) {
  if (draining_ || round_local_ < ssp_k_) return;
  flush_buffer(ctx);
  ssp_waiting_ = true;
  check_barrier_release();
}

void ModelReplica::check_barrier_release() {
  // Round r ends when this replica has applied the first r*k gradients of
  // every origin, i.e. its clock is uniform at r*k.
  const uint64_t target = round_ * ssp_k_;
  for (uint64_t c : applied_)
    if (c != target) return;
  ssp_waiting_ = false;
  round_local_ = 0;
  ++round_;
}

void ModelReplica::on_upstream_drained(OpContext& ctx) {
  draining_ = true;
  ssp_waiting_ = false;  // no further local gradients; finish by draining peers
  flush_buffer(ctx);
}

void ModelReplica::on_peer_eos(OpContext&) {
  // A peer is done producing; an unsatisfiable barrier must not stall drain.
  ssp_waiting_ = false;
}

}  // namespace airflux
