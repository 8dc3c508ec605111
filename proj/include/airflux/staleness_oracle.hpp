#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "airflux/model.hpp"

namespace airflux {

/// Replays per-replica event logs and recomputes every staleness value by
/// literal set symmetric difference of applied-gradient-ID sets. This is the
/// independent route against the vector-clock arithmetic the replicas use.
struct OracleMismatch {
  RankId applier = 0;
  RankId origin = 0;
  uint64_t origin_seq = 0;
  uint64_t recorded = 0;
  uint64_t replayed = 0;
};

struct OracleResult {
  uint64_t checked = 0;
  std::vector<OracleMismatch> mismatches;
  bool ok() const { return mismatches.empty(); }
};

inline OracleResult verify_staleness_by_replay(
    const std::vector<std::vector<ReplicaEvent>>& traces) {
  using GradId = std::pair<RankId, uint64_t>;
  const size_t n = traces.size();
  std::vector<std::set<GradId>> applied(n);
  std::map<GradId, std::vector<GradId>> at_compute;  // sorted snapshot of origin's set
  std::vector<size_t> cursor(n, 0);

  OracleResult result;
  // Causality makes this fixed-point walk terminate: a Compute is always
  // processable, and an Apply only waits for its origin's Compute.
  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (size_t r = 0; r < n; ++r) {
      while (cursor[r] < traces[r].size()) {
        const ReplicaEvent& ev = traces[r][cursor[r]];
        const GradId id{ev.origin, ev.origin_seq};
        if (ev.type == ReplicaEvent::Type::Compute) {
          at_compute.emplace(id, std::vector<GradId>(applied[r].begin(), applied[r].end()));
        } else {
          const auto it = at_compute.find(id);
          if (it == at_compute.end()) break;  // origin's compute not replayed yet
          const auto& origin_set = it->second;
          // |A ∪ B| - |A ∩ B| via merge over the two sorted sets.
          uint64_t sym = 0;
          auto a = applied[r].begin();
          auto b = origin_set.begin();
          while (a != applied[r].end() || b != origin_set.end()) {
            if (b == origin_set.end() || (a != applied[r].end() && *a < *b)) {
              ++sym;
              ++a;
            } else if (a == applied[r].end() || *b < *a) {
              ++sym;
              ++b;
            } else {
              ++a;
              ++b;
            }
          }
          ++result.checked;
          if (sym != ev.staleness)
            result.mismatches.push_back(
                {static_cast<RankId>(r), ev.origin, ev.origin_seq, ev.staleness, sym});
          applied[r].insert(id);
        }
        ++cursor[r];
        progressed = true;
      }
    }
  }
  for (size_t r = 0; r < n; ++r)
    if (cursor[r] != traces[r].size())
      fail(ErrorCode::OracleMismatch, "trace replay stuck: apply before compute in log");
  return result;
}

}  // namespace airflux
