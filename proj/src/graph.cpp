#include "airflux/graph.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace airflux {

const char* to_string(OpKind kind) {
  switch (kind) {
    case OpKind::Source: return "Source";
    case OpKind::Map: return "Map";
    case OpKind::Split: return "Split";
    case OpKind::Udf: return "Udf";
    case OpKind::Model: return "Model";
    case OpKind::Sink: return "Sink";
  }
  return "?";
}

const char* to_string(MsgKind kind) {
  switch (kind) {
    case MsgKind::MiniBatchMsg: return "MiniBatch";
    case MsgKind::GradientMsg: return "Gradient";
    case MsgKind::PredictRequestMsg: return "PredictRequest";
    case MsgKind::PredictionMsg: return "Prediction";
    case MsgKind::ControlMsg: return "Control";
  }
  return "?";
}

DataflowGraph DataflowGraph::build(std::vector<OperatorSpec> operators,
                                   std::vector<EdgeSpec> edges) {
  DataflowGraph g;
  g.operators_ = std::move(operators);
  g.edges_ = std::move(edges);
  g.out_edges_.resize(g.operators_.size());
  g.in_edges_.resize(g.operators_.size());
  g.validate();
  for (size_t e = 0; e < g.edges_.size(); ++e) {
    g.out_edges_[g.edge_from(e)].push_back(e);
    g.in_edges_[g.edge_to(e)].push_back(e);
  }
  return g;
}

OpIndex DataflowGraph::op_index(const std::string& name) const {
  for (size_t i = 0; i < operators_.size(); ++i)
    if (operators_[i].name == name) return static_cast<OpIndex>(i);
  fail(ErrorCode::DanglingEdge, "operator '" + name + "' is not declared");
}

OpIndex DataflowGraph::edge_from(size_t e) const { return op_index(edges_.at(e).from); }
OpIndex DataflowGraph::edge_to(size_t e) const { return op_index(edges_.at(e).to); }

bool DataflowGraph::is_peer_edge(size_t e) const {
  return edges_.at(e).from == edges_.at(e).to &&
         operators_.at(edge_from(e)).kind == OpKind::Model;
}

void DataflowGraph::validate() const {
  std::unordered_set<std::string> names;
  for (const auto& op : operators_) {
    if (!names.insert(op.name).second)
      fail(ErrorCode::DuplicateOperatorName, "operator '" + op.name + "' declared twice");
    if (op.instance_count == 0)
      fail(ErrorCode::ConfigError, "operator '" + op.name + "' has zero instances");
    if (op.kind == OpKind::Model && !op.model.has_value())
      fail(ErrorCode::ConfigError, "Model operator '" + op.name + "' has no model config");
  }

  for (const auto& e : edges_) {
    if (!names.count(e.from)) fail(ErrorCode::DanglingEdge, "edge from undeclared '" + e.from + "'");
    if (!names.count(e.to)) fail(ErrorCode::DanglingEdge, "edge to undeclared '" + e.to + "'");
  }

  // Cycle rule: with Model->Model edges removed, the remainder must be acyclic.
  std::unordered_map<std::string, OpKind> kind_of;
  for (const auto& op : operators_) kind_of.emplace(op.name, op.kind);

  std::unordered_map<std::string, size_t> indeg;
  std::unordered_map<std::string, std::vector<std::string>> adj;
  for (const auto& op : operators_) indeg[op.name] = 0;
  for (const auto& e : edges_) {
    if (kind_of[e.from] == OpKind::Model && kind_of[e.to] == OpKind::Model) continue;
    adj[e.from].push_back(e.to);
    ++indeg[e.to];
  }

  std::vector<std::string> ready;
  for (auto& [name, deg] : indeg)
    if (deg == 0) ready.push_back(name);
  size_t visited = 0;
  while (!ready.empty()) {
    auto name = ready.back();
    ready.pop_back();
    ++visited;
    for (auto& next : adj[name])
      if (--indeg[next] == 0) ready.push_back(next);
  }
  if (visited != operators_.size())
    fail(ErrorCode::IllegalCycle, "cycle involving a non-Model operator");
}

}  // namespace airflux
