#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "airflux/common.hpp"

namespace airflux {

struct ThroughputReport {
  double offered_rate = 0;   // events/s
  double achieved_rate = 0;  // events/s fully processed (gradient applied)
  TimeNs latency_p50 = 0;
  TimeNs latency_p95 = 0;
  TimeNs latency_p99 = 0;
  bool p99_growth = false;  // p99 rose monotonically over the final 3 quarters
  bool sustainable = false;
};

/// Thresholds operationalizing "latency surge": a trial is unsustainable when
/// p99 grows monotonically across the window's final three quarters, or when
/// fewer than min_achieved_ratio of the offered events were processed.
struct SustainabilityThresholds {
  double min_achieved_ratio = 0.95;
  bool growth_check = true;
};

/// One per-batch latency observation: batch anchored at its last contained
/// event; applied_ts is when its gradient was applied locally.
struct LatencySample {
  TimeNs created_ts = 0;
  TimeNs applied_ts = 0;
};

inline TimeNs percentile(std::vector<TimeNs>& sorted, double q) {
  if (sorted.empty()) return 0;
  const size_t idx = std::min(sorted.size() - 1,
                              static_cast<size_t>(q * static_cast<double>(sorted.size())));
  return sorted[idx];
}

inline ThroughputReport analyze_trial(double offered_rate, double achieved_rate,
                                      std::span<const LatencySample> samples, TimeNs window_start,
                                      TimeNs window_end,
                                      SustainabilityThresholds thresholds = {}) {
  ThroughputReport report;
  report.offered_rate = offered_rate;
  report.achieved_rate = std::min(achieved_rate, offered_rate);

  std::vector<TimeNs> all;
  all.reserve(samples.size());
  std::vector<std::vector<TimeNs>> quarters(4);
  const TimeNs span = std::max<TimeNs>(1, window_end - window_start);
  for (const auto& s : samples) {
    const TimeNs lat = s.applied_ts - s.created_ts;
    all.push_back(lat);
    auto q = static_cast<size_t>((s.applied_ts - window_start) * 4 / span);
    quarters[std::min<size_t>(q, 3)].push_back(lat);
  }
  std::sort(all.begin(), all.end());
  report.latency_p50 = percentile(all, 0.50);
  report.latency_p95 = percentile(all, 0.95);
  report.latency_p99 = percentile(all, 0.99);

  TimeNs prev = -1;
  bool growing = true;
  for (size_t q = 1; q < 4; ++q) {
    std::sort(quarters[q].begin(), quarters[q].end());
    const TimeNs p99 = percentile(quarters[q], 0.99);
    if (quarters[q].empty() || (prev >= 0 && p99 <= prev)) growing = false;
    prev = p99;
  }
  report.p99_growth = growing && !samples.empty();

  const bool rate_ok = achieved_rate >= thresholds.min_achieved_ratio * offered_rate;
  report.sustainable = rate_ok && !(thresholds.growth_check && report.p99_growth);
  return report;
}

}  // namespace airflux
