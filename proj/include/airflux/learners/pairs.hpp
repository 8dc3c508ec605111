#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "airflux/learner.hpp"
#include "airflux/rng.hpp"

namespace airflux {

/// Draws negative-sample tokens from the unigram^0.75 distribution via
/// inverse-CDF lookup on a cumulative table.
class NegativeSampler {
 public:
  explicit NegativeSampler(const std::vector<uint64_t>& counts, double power = 0.75) {
    if (counts.empty()) fail(ErrorCode::EmptyVocabulary, "no tokens to sample from");
    cumulative_.reserve(counts.size());
    double total = 0.0;
    for (uint64_t c : counts) {
      total += std::pow(static_cast<double>(c), power);
      cumulative_.push_back(total);
    }
  }

  uint32_t sample(Rng& rng) const {
    const double u = rng.next_unit() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<uint32_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

/// Skip-gram pairs for one token sequence: every (center, context) within
/// +-window becomes a positive pair, each followed by `negatives` sampled
/// negative pairs sharing the center token.
inline std::vector<TrainingPair> make_pairs(std::span<const uint32_t> tokens, int window,
                                            int negatives, const NegativeSampler& sampler,
                                            Rng& rng) {
  std::vector<TrainingPair> out;
  const auto n = static_cast<ptrdiff_t>(tokens.size());
  for (ptrdiff_t center = 0; center < n; ++center) {
    const ptrdiff_t lo = std::max<ptrdiff_t>(0, center - window);
    const ptrdiff_t hi = std::min<ptrdiff_t>(n - 1, center + window);
    for (ptrdiff_t ctx = lo; ctx <= hi; ++ctx) {
      if (ctx == center) continue;
      out.push_back({TokenPair{tokens[center], tokens[ctx]}, 1});
      for (int neg = 0; neg < negatives; ++neg)
        out.push_back({TokenPair{tokens[center], sampler.sample(rng)}, 0});
    }
  }
  return out;
}

}  // namespace airflux
