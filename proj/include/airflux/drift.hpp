#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airflux/learner.hpp"
#include "airflux/learners/vocab.hpp"

namespace airflux {

/// 1 - (a.b)/(|a||b|); 0 for identical directions, 2 for antipodal ones.
double cosine_difference(const Eigen::VectorXf& a, const Eigen::VectorXf& b);

/// Synthetic concept-drift scenario. The base corpus is sentences of tokens
/// co-occurring within fixed clusters; after event index drift_time the
/// shifted tokens move to a replacement cluster, changing their context
/// distribution while everything else stays put.
struct DriftScenario {
  uint32_t vocab_size = 200;
  uint32_t clusters = 10;
  uint32_t sentence_len = 8;
  uint64_t pre_events = 2000;    // sentences before the drift point T
  uint64_t post_events = 2000;   // sentences after T
  std::vector<uint32_t> shifted_tokens;  // symbol indices whose context shifts
  bool identity_shift = false;   // control scenario: no actual change at T
  uint64_t seed = 1;
};

struct DriftEngineParams {
  uint32_t n_ranks = 2;
  uint32_t batch_size = 32;
  float alpha = 0.05f;
  uint32_t max_grad_buffer = 1;
  int embedding_dim = 16;
  int window = 2;
  int negatives = 3;
  uint64_t seed = 1;
};

struct DriftReport {
  std::vector<std::string> tokens;       // by vocab id
  std::vector<double> cosine_diff;       // per token
  double mean = 0.0;
  std::vector<std::pair<std::string, double>> top_k;  // sorted descending
  std::vector<bool> shifted;             // per token: was its context shifted
};

/// Generates the scenario corpus, trains embeddings online up to the drift
/// point, snapshots, fine-tunes through the post-drift stream, and reports
/// per-token cosine displacement between the two snapshots.
DriftReport run_drift_experiment(const DriftScenario& scenario, const DriftEngineParams& params,
                                 size_t top_k = 10);

void write_drift_csv(const DriftReport& report, const std::string& path);
void write_drift_summary_json(const DriftReport& report, const std::string& path);

}  // namespace airflux
