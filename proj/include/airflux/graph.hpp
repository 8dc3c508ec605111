#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "airflux/learner.hpp"
#include "airflux/message.hpp"

namespace airflux {

class OperatorLogic;
class OpContext;

enum class OpKind : uint8_t { Source, Map, Split, Udf, Model, Sink };

const char* to_string(OpKind kind);

enum class Routing : uint8_t { Forward, HashShard, Broadcast };

/// Configuration of a Model operator instance set.
struct ModelConfig {
  LearnerSpec learner;
  uint32_t max_grad_buffer = 1;
  bool scale_alpha_by_ranks = false;  // alpha_new = alpha * n when enabled
  std::string predict_sink;           // operator receiving PredictionMsg replies, if any
  bool collect_theta_digests = false; // per-batch parameter digests (debug/verification)
  bool collect_trace = true;          // compute/apply event log for the staleness oracle
  /// Resume from an existing parameter store instead of learner init.
  std::shared_ptr<const ParamStore<float>> initial_params;
};

struct OperatorSpec {
  std::string name;
  OpKind kind = OpKind::Udf;
  uint32_t instance_count = 1;

  /// Factory for Source/Map/Split/Udf/Sink behavior; Model operators are
  /// instantiated by the engine from `model`.
  std::function<std::unique_ptr<OperatorLogic>(RankId)> make_logic;

  std::optional<ModelConfig> model;
};

struct EdgeSpec {
  std::string from;
  std::string to;
  Routing routing = Routing::Forward;
  /// Key extractor for HashShard edges when the sender does not pass an
  /// explicit key at emit time.
  std::function<std::string(const Message&)> shard_key;
};

/// Validated operator topology. Cycles are permitted only among Model
/// operators (the gradient-exchange loop); any cycle touching a non-Model
/// operator is rejected.
class DataflowGraph {
 public:
  static DataflowGraph build(std::vector<OperatorSpec> operators, std::vector<EdgeSpec> edges);

  const std::vector<OperatorSpec>& operators() const { return operators_; }
  const std::vector<EdgeSpec>& edges() const { return edges_; }

  OpIndex op_index(const std::string& name) const;
  const OperatorSpec& op(OpIndex i) const { return operators_.at(i); }
  uint32_t instance_count(OpIndex i) const { return operators_.at(i).instance_count; }

  /// Edge indices leaving / entering an operator.
  const std::vector<size_t>& out_edges(OpIndex i) const { return out_edges_.at(i); }
  const std::vector<size_t>& in_edges(OpIndex i) const { return in_edges_.at(i); }

  OpIndex edge_from(size_t e) const;
  OpIndex edge_to(size_t e) const;

  /// True for self-loop edges on a Model operator (the peer gradient cycle).
  bool is_peer_edge(size_t e) const;

 private:
  DataflowGraph() = default;
  void validate() const;

  std::vector<OperatorSpec> operators_;
  std::vector<EdgeSpec> edges_;
  std::vector<std::vector<size_t>> out_edges_;
  std::vector<std::vector<size_t>> in_edges_;
};

}  // namespace airflux
