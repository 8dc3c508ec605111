#pragma once

#include <deque>

#include "airflux/engine.hpp"
#include "airflux/events.hpp"
#include "airflux/hash.hpp"
#include "airflux/learners/pairs.hpp"
#include "airflux/learners/vocab.hpp"
#include "airflux/replay.hpp"

namespace airflux {

/// Entry-point source for dense-record streams: replays (x, y) records,
/// groups them into fixed-size mini-batches with tumbling-window semantics,
/// and shards each batch by its id. One source step ingests one event and
/// emits at most one batch.
class DenseBatchGenerator final : public OperatorLogic {
 public:
  struct Options {
    uint32_t batch_size = 32;
    uint64_t max_batches = 0;  // 0 = until the replayer is exhausted
    uint64_t passes = 1;       // 0 = unbounded
    double rate = 0.0;         // events/s; <= 0 emits at full speed
    TimeNs max_duration_ns = 0;  // 0 = no time bound (paced trials set this)
    std::string model_op = "model";
  };

  DenseBatchGenerator(std::vector<TrainingPair> records, Options opt)
      : records_(std::move(records)), opt_(opt), window_(opt.batch_size) {}

  void on_start(OpContext& ctx) override {
    replayer_.emplace(std::move(records_), opt_.passes, opt_.rate, ctx.clock());
    if (opt_.max_duration_ns > 0) deadline_ = ctx.clock().now() + opt_.max_duration_ns;
  }

  bool on_source_step(OpContext& ctx) override {
    if (opt_.max_batches != 0 && emitted_ >= opt_.max_batches) return false;
    if (deadline_ != 0 && ctx.clock().now() >= deadline_) return false;
    auto event = replayer_->next();
    if (!event) return false;
    events_ingested_++;
    if (auto full = window_.push(std::move(*event))) {
      auto batch = std::make_shared<MiniBatch>();
      batch->id = ++next_id_;
      batch->created_ts = full->back().ts;
      batch->pairs.reserve(full->size());
      for (auto& e : *full) batch->pairs.push_back(std::move(e.value));
      ctx.emit_keyed(opt_.model_op, std::to_string(batch->id), Message::mini_batch(batch));
      ++emitted_;
    }
    return true;
  }

  uint64_t batches_emitted() const { return emitted_; }
  uint64_t events_ingested() const { return events_ingested_; }

 private:
  std::vector<TrainingPair> records_;
  Options opt_;
  TumblingWindow<TrainingPair> window_;
  std::optional<DatasetReplayer<TrainingPair>> replayer_;
  TimeNs deadline_ = 0;
  uint64_t next_id_ = 0;
  uint64_t emitted_ = 0;
  uint64_t events_ingested_ = 0;
};

/// Entry-point source for token streams: replays token lines, expands them
/// into skip-gram training pairs, and shards pair groups by their center
/// word. Batches of exactly N pairs are assembled per destination rank, so a
/// replica only ever sees pairs whose center word hashes to it.
class Word2VecBatchGenerator final : public OperatorLogic {
 public:
  struct Options {
    uint32_t batch_size = 32;
    uint64_t max_batches = 0;
    uint64_t passes = 1;
    double rate = 0.0;
    TimeNs max_duration_ns = 0;
    int window = 2;
    int negatives = 3;
    uint64_t pair_seed = 1;
    uint32_t model_ranks = 1;
    std::string model_op = "model";
  };

  Word2VecBatchGenerator(std::vector<std::vector<uint32_t>> lines, const Vocabulary& vocab,
                         Options opt)
      : lines_(std::move(lines)),
        vocab_(vocab),
        opt_(opt),
        sampler_(vocab.counts()),
        pair_rng_(opt.pair_seed),
        accumulators_(opt.model_ranks) {}

  void on_start(OpContext& ctx) override {
    replayer_.emplace(std::move(lines_), opt_.passes, opt_.rate, ctx.clock());
    if (opt_.max_duration_ns > 0) deadline_ = ctx.clock().now() + opt_.max_duration_ns;
  }

  bool on_source_step(OpContext& ctx) override {
    if (opt_.max_batches != 0 && emitted_ >= opt_.max_batches) return false;
    if (!pending_.empty()) {
      auto [rank, batch] = std::move(pending_.front());
      pending_.pop_front();
      batch->id = ++next_id_;
      ctx.emit_ranked(opt_.model_op, rank, Message::mini_batch(std::move(batch)));
      ++emitted_;
      return true;
    }
    if (deadline_ != 0 && ctx.clock().now() >= deadline_) return false;
    auto event = replayer_->next();
    if (!event) return false;
    events_ingested_++;

    // Pairs from one line form per-center groups; each group lands on the
    // rank its center word hashes to.
    auto pairs = make_pairs(event->value, opt_.window, opt_.negatives, sampler_, pair_rng_);
    for (auto& pair : pairs) {
      const auto& tp = std::get<TokenPair>(pair.x);
      const RankId rank = hash_shard(vocab_.token(tp.center), opt_.model_ranks);
      auto& acc = accumulators_[rank];
      acc.push_back(std::move(pair));
      if (acc.size() >= opt_.batch_size) {
        auto batch = std::make_shared<MiniBatch>();
        batch->created_ts = event->ts;
        batch->pairs = std::move(acc);
        acc.clear();
        pending_.emplace_back(rank, std::move(batch));
      }
    }
    return true;
  }

  uint64_t batches_emitted() const { return emitted_; }
  uint64_t events_ingested() const { return events_ingested_; }

 private:
  std::vector<std::vector<uint32_t>> lines_;
  const Vocabulary& vocab_;
  Options opt_;
  NegativeSampler sampler_;
  Rng pair_rng_;
  std::vector<std::vector<TrainingPair>> accumulators_;
  std::deque<std::pair<RankId, std::shared_ptr<MiniBatch>>> pending_;
  std::optional<DatasetReplayer<std::vector<uint32_t>>> replayer_;
  uint64_t next_id_ = 0;
  uint64_t emitted_ = 0;
  uint64_t events_ingested_ = 0;
};

}  // namespace airflux
