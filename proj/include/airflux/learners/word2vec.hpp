#pragma once

#include <cmath>
#include <map>

#include "airflux/learner.hpp"
#include "airflux/rng.hpp"

namespace airflux::w2v {

/// Skip-gram with negative sampling. tensors[0] = input embeddings (V x d),
/// tensors[1] = output embeddings (V x d). Global row addressing: input row
/// for token t is t, output row is V + t.

template <typename S>
ParamStore<S> init(int vocab, int dim, uint64_t seed) {
  if (vocab <= 0 || dim <= 0) fail(ErrorCode::ConfigError, "vocab and dim must be positive");
  Rng rng(seed);
  ParamStore<S> p;
  RowMatrix<S> w_in(vocab, dim);
  const double limit = 0.5 / dim;
  for (Eigen::Index r = 0; r < w_in.rows(); ++r)
    for (Eigen::Index c = 0; c < w_in.cols(); ++c)
      w_in(r, c) = static_cast<S>(rng.next_uniform(-limit, limit));
  p.tensors.push_back(std::move(w_in));
  p.tensors.push_back(RowMatrix<S>::Zero(vocab, dim));
  return p;
}

template <typename S>
S softplus(S t) {
  // log(1 + e^t), overflow-safe
  return std::max(t, S(0)) + std::log1p(std::exp(-std::abs(t)));
}

template <typename S>
S sigmoid(S t) {
  return S(1) / (S(1) + std::exp(-t));
}

/// Negative-sampling logistic loss for one (center, context, y) pair:
/// -log sigma(z) for y=1, -log sigma(-z) for y=0, with z = v_center . u_context.
template <typename S>
S pair_loss(const ParamStore<S>& p, const TokenPair& t, int label) {
  const S z = p.tensors[0].row(t.center).dot(p.tensors[1].row(t.context));
  return softplus<S>(label ? -z : z);
}

template <typename S>
S loss(const ParamStore<S>& p, const MiniBatch& batch) {
  S total = 0;
  for (const auto& pair : batch.pairs)
    total += pair_loss<S>(p, std::get<TokenPair>(pair.x), pair.label);
  return total / static_cast<S>(batch.pairs.size());
}

template <typename S>
struct SparseRowT {
  uint32_t row;
  Vector<S> delta;
};

/// Mean gradient as sparse rows; only rows for tokens touched by the batch
/// appear. Rows are emitted in ascending global-row order.
template <typename S>
std::vector<SparseRowT<S>> gradient(const ParamStore<S>& p, const MiniBatch& batch) {
  const uint32_t vocab = static_cast<uint32_t>(p.tensors[0].rows());
  std::map<uint32_t, Vector<S>> rows;
  auto row_acc = [&](uint32_t global_row) -> Vector<S>& {
    auto it = rows.find(global_row);
    if (it == rows.end())
      it = rows.emplace(global_row, Vector<S>::Zero(p.tensors[0].cols())).first;
    return it->second;
  };

  for (const auto& pair : batch.pairs) {
    const auto& t = std::get<TokenPair>(pair.x);
    if (t.center >= vocab || t.context >= vocab)
      fail(ErrorCode::DimensionMismatch, "token id out of vocabulary");
    const S z = p.tensors[0].row(t.center).dot(p.tensors[1].row(t.context));
    const S g = sigmoid<S>(z) - static_cast<S>(pair.label);
    row_acc(t.center) += g * p.tensors[1].row(t.context).transpose();
    row_acc(vocab + t.context) += g * p.tensors[0].row(t.center).transpose();
  }

  const S inv_n = S(1) / static_cast<S>(batch.pairs.size());
  std::vector<SparseRowT<S>> out;
  out.reserve(rows.size());
  for (auto& [row, delta] : rows) out.push_back({row, (delta * inv_n).eval()});
  return out;
}

}  // namespace airflux::w2v
