#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "airflux/common.hpp"
#include "airflux/hash.hpp"

namespace airflux {

template <typename S>
using RowMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using Vector = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Named-tensor parameter store. Tensors are row-major so that sparse row
/// updates and the little-endian wire layout address contiguous memory.
/// Rows are addressed globally: tensor 0's rows first, then tensor 1's, ...
template <typename S>
struct ParamStore {
  std::vector<RowMatrix<S>> tensors;

  Eigen::Index total_rows() const {
    Eigen::Index n = 0;
    for (const auto& t : tensors) n += t.rows();
    return n;
  }

  Eigen::Index size() const {
    Eigen::Index n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
  }

  /// Maps a global row index to (tensor, local row).
  std::pair<size_t, Eigen::Index> locate_row(Eigen::Index global_row) const {
    for (size_t i = 0; i < tensors.size(); ++i) {
      if (global_row < tensors[i].rows()) return {i, global_row};
      global_row -= tensors[i].rows();
    }
    fail(ErrorCode::DimensionMismatch, "row index out of range");
  }

  auto row(Eigen::Index global_row) {
    auto [t, r] = locate_row(global_row);
    return tensors[t].row(r);
  }
  auto row(Eigen::Index global_row) const {
    auto [t, r] = locate_row(global_row);
    return tensors[t].row(r);
  }

  Vector<S> flatten() const {
    Vector<S> out(size());
    Eigen::Index at = 0;
    for (const auto& t : tensors) {
      out.segment(at, t.size()) = Eigen::Map<const Vector<S>>(t.data(), t.size());
      at += t.size();
    }
    return out;
  }

  void unflatten(const Vector<S>& flat) {
    if (flat.size() != size()) fail(ErrorCode::DimensionMismatch, "flat size mismatch");
    Eigen::Index at = 0;
    for (auto& t : tensors) {
      Eigen::Map<Vector<S>>(t.data(), t.size()) = flat.segment(at, t.size());
      at += t.size();
    }
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out;
    out.tensors.reserve(tensors.size());
    for (const auto& t : tensors) out.tensors.push_back(t.template cast<T>());
    return out;
  }

  bool all_finite() const {
    for (const auto& t : tensors)
      if (!t.allFinite()) return false;
    return true;
  }

  /// FNV-1a over the raw little-endian bytes of every tensor, in order.
  uint64_t digest() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& t : tensors)
      h = fnv1a64(std::string_view(reinterpret_cast<const char*>(t.data()), t.size() * sizeof(S)), h);
    return h;
  }
};

using ParamStoreF = ParamStore<float>;

/// A (center, context) token-id pair for the skip-gram learner.
struct TokenPair {
  uint32_t center = 0;
  uint32_t context = 0;
};

/// One training example. x is a token pair (sparse learners) or a feature
/// vector (dense learners); label is a 1/0 positive-negative flag or class id.
struct TrainingPair {
  std::variant<TokenPair, Eigen::VectorXf> x;
  int32_t label = 0;
};

struct MiniBatch {
  uint64_t id = 0;                  // global, gapless 1,2,3,...
  std::vector<TrainingPair> pairs;  // fixed size N (final partial batch is dropped)
  TimeNs created_ts = 0;            // timestamp of the last contained event
};

/// Gradient payload: dense flat vector over the whole store, or sparse rows
/// addressed by global row index.
struct SparseRow {
  uint32_t row = 0;
  Eigen::VectorXf delta;
};

struct GradientPayload {
  std::variant<Eigen::VectorXf, std::vector<SparseRow>> value;

  bool sparse() const { return value.index() == 1; }
  const Eigen::VectorXf& dense() const { return std::get<0>(value); }
  const std::vector<SparseRow>& rows() const { return std::get<1>(value); }

  bool all_finite() const {
    if (!sparse()) return dense().allFinite();
    for (const auto& r : rows())
      if (!r.delta.allFinite()) return false;
    return true;
  }

  /// Expands sparse rows into a flat dense vector over `shape`.
  Eigen::VectorXf densify(const ParamStoreF& shape) const;
};

/// theta <- theta - alpha * delta. Dense and sparse payloads go through the
/// same per-row expression so the two paths are bit-identical.
void apply_delta(ParamStoreF& theta, const GradientPayload& delta, float alpha);

enum class LearnerKind { QuadraticToy, DenseClassifier, Word2Vec, ConstantGradient };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::QuadraticToy;
  float alpha = 0.1f;  // base learning rate, before any rank scaling
  uint64_t seed = 1;

  // QuadraticToy
  Eigen::VectorXf target;  // c

  // DenseClassifier: [input_dim, hidden..., classes]
  std::vector<int> layer_sizes;

  // Word2Vec
  int vocab_size = 0;       // V
  int embedding_dim = 0;    // d
  int window = 2;           // w
  int negative_samples = 0; // k

  // ConstantGradient (test fixture): L = g . theta
  Eigen::VectorXf constant_gradient;
};

/// alpha_new = alpha * n_ranks.
inline float scale_learning_rate(float alpha, uint32_t n_ranks) {
  return alpha * static_cast<float>(n_ranks);
}

struct PredictQuery {
  uint64_t request_id = 0;
  std::variant<uint32_t, Eigen::VectorXf> input;  // token id or feature vector
};

struct GradientResult {
  GradientPayload delta;
  float loss = 0.0f;  // mean per-pair loss on the batch, pre-update
};

/// Runtime trainable-model contract. Gradient and loss are pure with respect
/// to the store; one ParamStore is owned by exactly one model replica.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual ParamStoreF init_params() const = 0;
  virtual float loss(const ParamStoreF& params, const MiniBatch& batch) const = 0;
  virtual GradientResult gradient(const ParamStoreF& params, const MiniBatch& batch) const = 0;
  virtual Eigen::VectorXf predict(const ParamStoreF& params, const PredictQuery& query) const = 0;
};

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec);

}  // namespace airflux
