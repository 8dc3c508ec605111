#include "airflux/common.hpp"

namespace airflux {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DuplicateOperatorName: return "DuplicateOperatorName";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::IllegalCycle: return "IllegalCycle";
    case ErrorCode::ChannelClosed: return "ChannelClosed";
    case ErrorCode::SpawnFailure: return "SpawnFailure";
    case ErrorCode::UnknownMessageKind: return "UnknownMessageKind";
    case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::MismatchedRankSets: return "MismatchedRankSets";
    case ErrorCode::BarrierTimeout: return "BarrierTimeout";
    case ErrorCode::SequenceGap: return "SequenceGap";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::ZeroNorm: return "ZeroNorm";
    case ErrorCode::OracleMismatch: return "OracleMismatch";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

uint64_t clock_l1_distance(const VectorClock& a, const VectorClock& b) {
  if (a.size() != b.size()) {
    fail(ErrorCode::MismatchedRankSets,
         "clocks cover " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " ranks");
  }
  uint64_t sum = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    sum += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  }
  return sum;
}

}  // namespace airflux
