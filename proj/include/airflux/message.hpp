#pragma once

#include <memory>

#include "airflux/common.hpp"
#include "airflux/learner.hpp"

namespace airflux {

enum class MsgKind : uint8_t {
  MiniBatchMsg = 0,
  GradientMsg = 1,
  PredictRequestMsg = 2,
  PredictionMsg = 3,
  ControlMsg = 4,
};

const char* to_string(MsgKind kind);

enum class ControlOp : uint8_t { Stop = 0, Eos = 1 };

/// A gradient plus the origin's bookkeeping at computation time.
struct GradientUpdate {
  RankId origin = 0;
  uint64_t origin_seq = 0;    // 1-based per-origin gradient index
  VectorClock origin_clock;   // origin's applied-counts snapshot at computation time
  GradientPayload delta;
  uint64_t batch_id = 0;      // provenance
};

struct PredictionPayload {
  uint64_t request_id = 0;
  Eigen::VectorXf values;
};

struct Address {
  OpIndex op = 0;
  RankId rank = 0;
  bool operator==(const Address&) const = default;
};

/// The single envelope routed between operator instances. Payload bodies are
/// shared so a broadcast reuses one allocation; messages are immutable once
/// sent. seq is per directed channel, assigned at enqueue, gapless from 1.
struct Message {
  MsgKind kind = MsgKind::ControlMsg;
  Address sender;
  uint64_t seq = 0;

  std::shared_ptr<const MiniBatch> batch;
  std::shared_ptr<const GradientUpdate> gradient;
  std::shared_ptr<const PredictQuery> predict_request;
  std::shared_ptr<const PredictionPayload> prediction;
  ControlOp control = ControlOp::Stop;

  static Message mini_batch(std::shared_ptr<const MiniBatch> b) {
    Message m;
    m.kind = MsgKind::MiniBatchMsg;
    m.batch = std::move(b);
    return m;
  }
  static Message gradient_msg(std::shared_ptr<const GradientUpdate> g) {
    Message m;
    m.kind = MsgKind::GradientMsg;
    m.gradient = std::move(g);
    return m;
  }
  static Message predict_request(std::shared_ptr<const PredictQuery> q) {
    Message m;
    m.kind = MsgKind::PredictRequestMsg;
    m.predict_request = std::move(q);
    return m;
  }
  static Message prediction(std::shared_ptr<const PredictionPayload> p) {
    Message m;
    m.kind = MsgKind::PredictionMsg;
    m.prediction = std::move(p);
    return m;
  }
  static Message control(ControlOp op) {
    Message m;
    m.kind = MsgKind::ControlMsg;
    m.control = op;
    return m;
  }
};

}  // namespace airflux
