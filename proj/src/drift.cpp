#include "airflux/drift.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <nlohmann/json.hpp>

#include "airflux/engine.hpp"
#include "airflux/generator.hpp"
#include "airflux/model.hpp"
#include "airflux/rng.hpp"
#include "airflux/snapshot.hpp"

namespace airflux {

double cosine_difference(const Eigen::VectorXf& a, const Eigen::VectorXf& b) {
  if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "embedding dims differ");
  const double na = a.cast<double>().norm();
  const double nb = b.cast<double>().norm();
  if (na == 0.0 || nb == 0.0) fail(ErrorCode::ZeroNorm, "zero-norm embedding row");
  return 1.0 - a.cast<double>().dot(b.cast<double>()) / (na * nb);
}

namespace {

std::string symbol_name(uint32_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%04u", i);
  return buf;
}

/// Cluster-membership corpus: a sentence picks a cluster and draws its tokens
/// from that cluster's current member set. Shifting a token to another
/// cluster replaces its context distribution from one sentence to the next.
struct CorpusModel {
  std::vector<std::vector<uint32_t>> members;  // cluster -> symbol indices
  std::vector<uint32_t> cluster_of;            // symbol -> cluster

  static CorpusModel base(const DriftScenario& s) {
    CorpusModel m;
    m.members.resize(s.clusters);
    m.cluster_of.resize(s.vocab_size);
    for (uint32_t t = 0; t < s.vocab_size; ++t) {
      const uint32_t c = t % s.clusters;
      m.cluster_of[t] = c;
      m.members[c].push_back(t);
    }
    return m;
  }

  void shift(const std::vector<uint32_t>& tokens, uint32_t clusters) {
    for (uint32_t t : tokens) {
      const uint32_t from = cluster_of[t];
      const uint32_t to = (from + clusters / 2 + 1) % clusters;
      auto& old_members = members[from];
      old_members.erase(std::find(old_members.begin(), old_members.end(), t));
      members[to].push_back(t);
      cluster_of[t] = to;
    }
  }

  std::vector<std::string> sentences(uint64_t count, uint32_t sentence_len, Rng& rng) const {
    std::vector<std::string> lines;
    lines.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
      const auto& pool = members[rng.next_below(members.size())];
      std::string line;
      for (uint32_t w = 0; w < sentence_len; ++w) {
        if (w) line += ' ';
        line += symbol_name(pool[rng.next_below(pool.size())]);
      }
      lines.push_back(std::move(line));
    }
    return lines;
  }
};

/// One online-training pass over token lines; starts from `start` when given.
/// Returns replica 0's input-embedding matrix after drain.
RowMatrix<float> train_embeddings(const std::vector<std::string>& lines, const Vocabulary& vocab,
                                  const DriftEngineParams& p, uint64_t seed,
                                  const ParamStoreF* start) {
  std::vector<std::vector<uint32_t>> encoded;
  encoded.reserve(lines.size());
  for (const auto& line : lines) encoded.push_back(vocab.encode(line));

  Word2VecBatchGenerator::Options gen;
  gen.batch_size = p.batch_size;
  gen.window = p.window;
  gen.negatives = p.negatives;
  gen.pair_seed = derive_seed(seed, "pairs");
  gen.model_ranks = p.n_ranks;
  gen.model_op = "model";

  LearnerSpec learner;
  learner.kind = LearnerKind::Word2Vec;
  learner.alpha = p.alpha;
  learner.seed = derive_seed(seed, "init");
  learner.vocab_size = static_cast<int>(vocab.size());
  learner.embedding_dim = p.embedding_dim;

  ModelConfig model;
  model.learner = learner;
  model.max_grad_buffer = p.max_grad_buffer;
  model.collect_trace = false;
  if (start) model.initial_params = std::make_shared<ParamStoreF>(*start);

  OperatorSpec source;
  source.name = "generator";
  source.kind = OpKind::Source;
  source.make_logic = [&](RankId) {
    return std::make_unique<Word2VecBatchGenerator>(encoded, vocab, gen);
  };

  OperatorSpec model_op;
  model_op.name = "model";
  model_op.kind = OpKind::Model;
  model_op.instance_count = p.n_ranks;
  model_op.model = model;

  std::vector<EdgeSpec> edges;
  edges.push_back({"generator", "model", Routing::HashShard,
                   [](const Message& m) { return std::to_string(m.batch->id); }});
  if (p.n_ranks > 1) edges.push_back({"model", "model", Routing::Broadcast, nullptr});

  auto graph = DataflowGraph::build({std::move(source), std::move(model_op)}, std::move(edges));

  EngineOptions opt;
  opt.mode = RunMode::Asgd;
  opt.scheduler = SchedulerKind::Deterministic;
  opt.seed = derive_seed(seed, "run");
  auto handle = run_graph(graph, opt);
  handle.join();

  const auto& replica = dynamic_cast<const ModelReplica&>(handle.logic("model", 0));
  return replica.params().tensors[0];
}

}  // namespace

DriftReport run_drift_experiment(const DriftScenario& scenario, const DriftEngineParams& params,
                                 size_t top_k) {
  Rng corpus_rng(derive_seed(scenario.seed, "corpus"));
  CorpusModel base = CorpusModel::base(scenario);

  const auto pre_lines = base.sentences(scenario.pre_events, scenario.sentence_len, corpus_rng);

  CorpusModel post = base;
  if (!scenario.identity_shift) post.shift(scenario.shifted_tokens, scenario.clusters);
  const auto post_lines = post.sentences(scenario.post_events, scenario.sentence_len, corpus_rng);

  // Vocabulary from the one-pass pre-scan of the full stream.
  std::vector<std::string> all_lines = pre_lines;
  all_lines.insert(all_lines.end(), post_lines.begin(), post_lines.end());
  const Vocabulary vocab = Vocabulary::build(all_lines);

  // Train to the drift point, snapshot, then fine-tune through the drift.
  const RowMatrix<float> before =
      train_embeddings(pre_lines, vocab, params, derive_seed(scenario.seed, "pre"), nullptr);

  ParamStoreF resume;
  resume.tensors.push_back(before);
  resume.tensors.push_back(RowMatrix<float>::Zero(before.rows(), before.cols()));
  const RowMatrix<float> after =
      train_embeddings(post_lines, vocab, params, derive_seed(scenario.seed, "post"), &resume);

  DriftReport report;
  report.tokens.reserve(vocab.size());
  report.cosine_diff.reserve(vocab.size());
  report.shifted.assign(vocab.size(), false);
  for (uint32_t t : scenario.shifted_tokens) {
    const uint32_t id = vocab.lookup(symbol_name(t));
    if (id < vocab.size()) report.shifted[id] = true;
  }

  double total = 0.0;
  for (uint32_t id = 0; id < vocab.size(); ++id) {
    report.tokens.push_back(vocab.token(id));
    const double d = cosine_difference(before.row(id).transpose(), after.row(id).transpose());
    report.cosine_diff.push_back(d);
    total += d;
  }
  report.mean = total / vocab.size();

  std::vector<size_t> order(vocab.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (report.cosine_diff[a] != report.cosine_diff[b])
      return report.cosine_diff[a] > report.cosine_diff[b];
    return report.tokens[a] < report.tokens[b];
  });
  for (size_t i = 0; i < std::min(top_k, order.size()); ++i)
    report.top_k.emplace_back(report.tokens[order[i]], report.cosine_diff[order[i]]);
  return report;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_drift_csv(const DriftReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << "token,cosine_diff\n";
  for (size_t i = 0; i < report.tokens.size(); ++i)
    out << report.tokens[i] << ',' << format_double(report.cosine_diff[i]) << '\n';
}

void write_drift_summary_json(const DriftReport& report, const std::string& path) {
  nlohmann::json top = nlohmann::json::array();
  for (const auto& [token, diff] : report.top_k) top.push_back({{"token", token}, {"diff", diff}});
  nlohmann::json summary{{"mean", report.mean}, {"top_k", top}};
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  out << summary.dump(2) << '\n';
}

}  // namespace airflux
