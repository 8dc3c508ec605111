#pragma once

#include <string>
#include <vector>

#include "airflux/drift.hpp"
#include "airflux/engine.hpp"
#include "airflux/model.hpp"
#include "airflux/throughput.hpp"

namespace airflux {

/// One experiment configuration: engine, learner, and stream settings plus
/// output location. Round-trippable through the manifest echo.
struct RunConfig {
  // engine
  RunMode mode = RunMode::Asgd;
  uint32_t ssp_k = 0;
  SchedulerKind scheduler = SchedulerKind::Deterministic;
  uint32_t n_ranks = 1;
  uint32_t max_grad_buffer = 1;
  size_t channel_capacity = 1024;
  uint64_t seed = 1;

  // stream
  uint32_t batch_size = 32;
  uint64_t max_batches = 2000;
  uint64_t passes = 0;  // 0 = replay until max_batches
  double rate = 0.0;    // events/s pacing; <= 0 unpaced
  double duration_s = 0.0;  // paced-trial window; 0 = until max_batches/passes

  // learner
  LearnerKind learner = LearnerKind::QuadraticToy;
  float alpha = 0.1f;
  bool alpha_scaling = false;
  int dim = 8;             // toy/linear dim, w2v embedding dim
  std::vector<int> layer_sizes{16, 32, 4};  // dense classifier
  int window = 2;          // w2v context window
  int negatives = 3;       // w2v negative samples per positive

  // synthetic data
  uint64_t corpus_tokens = 5000;  // w2v stream size (tokens)
  uint32_t vocab_target = 500;    // w2v distinct symbols
  uint32_t sentence_len = 10;
  uint32_t classes = 4;           // dense blobs
  uint64_t dataset_records = 4096;

  // io
  std::string dataset_path;  // optional input file (token lines / label,f CSV)
  std::string out_dir = "out";

  // debug collection
  bool collect_digests = false;
  bool collect_trace = true;
};

/// Everything a command needs from one finished run, merged across replicas.
struct RunArtifacts {
  RunSummary summary;
  std::vector<std::pair<uint64_t, float>> losses;  // sorted by batch id
  std::vector<StalenessRecord> staleness;          // per rank, concatenated in rank order
  std::vector<std::vector<ReplicaEvent>> traces;   // per rank
  std::vector<VectorClock> final_clocks;           // per rank
  std::vector<uint64_t> theta_digests;             // per rank, final
  std::vector<std::vector<uint64_t>> digest_series;  // per rank, per local batch
  std::vector<LatencySample> latencies;            // local applications, all ranks
  uint64_t pairs_trained = 0;
  uint64_t batches_trained = 0;
  ParamStoreF theta0;  // replica 0 parameters after drain
};

RunArtifacts execute_run(const RunConfig& config);

/// Mean loss of the last `window` batches in a merged loss curve.
double final_window_mean(const std::vector<std::pair<uint64_t, float>>& losses, size_t window);

// ---- dataset synthesis (seeded, deterministic) ----

std::vector<TrainingPair> make_blob_records(uint32_t classes, int input_dim, uint64_t count,
                                            uint64_t seed);
std::vector<std::string> make_cluster_corpus(uint32_t vocab, uint64_t total_tokens,
                                             uint32_t sentence_len, uint64_t seed);

std::vector<TrainingPair> load_dense_csv(const std::string& path);
std::vector<std::string> load_token_lines(const std::string& path);

// ---- commands (return process exit code: 0 ok, 2 config, 3 oracle, 4 nan) ----

int cmd_run(const RunConfig& config);
int cmd_converge(const RunConfig& config, const std::vector<uint32_t>& rank_counts);
int cmd_speedup(const RunConfig& config, const std::vector<uint32_t>& rank_counts,
                const std::vector<uint32_t>& batch_sizes);
int cmd_staleness(const RunConfig& config, bool scripted_scenario);
int cmd_throughput(const RunConfig& config, const std::vector<double>& rates);
int cmd_drift(const RunConfig& config, const DriftScenario& scenario);

/// Paced trial at one offered rate; used by cmd_throughput and the capacity
/// probe. Runs on the threaded scheduler with the real clock.
ThroughputReport run_rate_trial(const RunConfig& config, double offered_rate);

/// Largest offered rate (from a geometric ramp) that stays sustainable.
double probe_capacity(const RunConfig& config, double start_rate = 1000.0, int max_steps = 12);

/// Fig.-style scripted staleness scenario: three replicas, maxGradBuffer = 1,
/// a fixed delivery schedule. Returns the records in application order.
std::vector<StalenessRecord> scripted_staleness_scenario();

// ---- output writers (deterministic byte-for-byte given identical inputs) ----

void write_loss_csv(const std::vector<std::pair<uint64_t, float>>& losses,
                    const std::string& path);
void write_staleness_jsonl(const std::vector<StalenessRecord>& records, const std::string& path);
void write_staleness_histogram_csv(const std::vector<StalenessRecord>& records,
                                   const std::string& path);
void write_throughput_csv(const std::vector<ThroughputReport>& reports, const std::string& path);

/// Config echo plus FNV-1a digests of every artifact written by the command.
void write_manifest(const RunConfig& config, const std::vector<std::string>& artifact_paths,
                    const std::string& path);

std::string format_float(double v);

}  // namespace airflux
