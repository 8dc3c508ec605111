#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace airflux {

/// One instance of a logical dataflow operator. Dense 0..n-1 within its operator.
using RankId = uint32_t;

/// Index of a logical operator inside a DataflowGraph (declaration order).
using OpIndex = uint16_t;

/// Nanosecond timestamps. Real runs use a monotonic clock; deterministic runs
/// use a virtual step clock, so values are comparable only within one run.
using TimeNs = int64_t;

/// Per-origin counters of applied gradients, indexed by model RankId.
using VectorClock = std::vector<uint64_t>;

enum class ErrorCode {
  DuplicateOperatorName,
  DanglingEdge,
  IllegalCycle,
  ChannelClosed,
  SpawnFailure,
  UnknownMessageKind,
  NonFiniteGradient,
  DimensionMismatch,
  MismatchedRankSets,
  BarrierTimeout,
  SequenceGap,
  EmptyDataset,
  EmptyVocabulary,
  ZeroNorm,
  OracleMismatch,
  ConfigError,
  IoError,
};

const char* to_string(ErrorCode code);

class AirfluxError : public std::runtime_error {
 public:
  AirfluxError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw AirfluxError(code, what);
}

/// Sum of per-rank absolute clock differences. Both clocks must cover the
/// same rank set; under FIFO prefix application this L1 distance equals the
/// size of the symmetric difference of the applied-gradient sets.
uint64_t clock_l1_distance(const VectorClock& a, const VectorClock& b);

}  // namespace airflux
