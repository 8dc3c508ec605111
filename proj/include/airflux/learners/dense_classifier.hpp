#pragma once

#include <cmath>
#include <vector>

#include "airflux/learner.hpp"
#include "airflux/rng.hpp"

namespace airflux::dense {

/// Softmax classifier / one-hidden-layer MLP with tanh activations.
/// layer_sizes = [input_dim, hidden..., classes]; tensors are stored as
/// W0, b0, W1, b1, ... with W_i of shape sizes[i] x sizes[i+1].

template <typename S>
ParamStore<S> init(const std::vector<int>& sizes, uint64_t seed) {
  if (sizes.size() < 2) fail(ErrorCode::ConfigError, "classifier needs at least [in, classes]");
  Rng rng(seed);
  ParamStore<S> p;
  for (size_t i = 0; i + 1 < sizes.size(); ++i) {
    const int fan_in = sizes[i], fan_out = sizes[i + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    RowMatrix<S> w(fan_in, fan_out);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = static_cast<S>(rng.next_uniform(-limit, limit));
    p.tensors.push_back(std::move(w));
    p.tensors.push_back(RowMatrix<S>::Zero(1, fan_out));
  }
  return p;
}

template <typename S>
Vector<S> softmax(const Vector<S>& logits) {
  Vector<S> out = (logits.array() - logits.maxCoeff()).exp();
  out /= out.sum();
  return out;
}

namespace detail {

template <typename S>
struct Forward {
  std::vector<Vector<S>> activations;  // a0 = x, a1..aL post-activation
  Vector<S> probs;
};

template <typename S>
Forward<S> forward(const ParamStore<S>& p, const Vector<S>& x) {
  Forward<S> f;
  f.activations.push_back(x);
  const size_t n_layers = p.tensors.size() / 2;
  Vector<S> h = x;
  for (size_t l = 0; l < n_layers; ++l) {
    const auto& w = p.tensors[2 * l];
    const auto& b = p.tensors[2 * l + 1];
    if (h.size() != w.rows()) fail(ErrorCode::DimensionMismatch, "classifier input dim");
    Vector<S> z = w.transpose() * h + b.row(0).transpose();
    if (l + 1 < n_layers) {
      h = z.array().tanh();
      f.activations.push_back(h);
    } else {
      f.probs = softmax<S>(z);
    }
  }
  return f;
}

}  // namespace detail

template <typename S>
S pair_loss(const ParamStore<S>& p, const Eigen::VectorXf& x, int label) {
  const auto f = detail::forward<S>(p, x.cast<S>().eval());
  return -std::log(std::max(f.probs[label], S(1e-30)));
}

template <typename S>
S loss(const ParamStore<S>& p, const MiniBatch& batch) {
  S total = 0;
  for (const auto& pair : batch.pairs)
    total += pair_loss<S>(p, std::get<Eigen::VectorXf>(pair.x), pair.label);
  return total / static_cast<S>(batch.pairs.size());
}

/// Mean cross-entropy gradient over the batch, flattened in tensor order.
template <typename S>
Vector<S> gradient(const ParamStore<S>& p, const MiniBatch& batch) {
  std::vector<RowMatrix<S>> grads;
  grads.reserve(p.tensors.size());
  for (const auto& t : p.tensors) grads.push_back(RowMatrix<S>::Zero(t.rows(), t.cols()));

  const size_t n_layers = p.tensors.size() / 2;
  for (const auto& pair : batch.pairs) {
    const Vector<S> x = std::get<Eigen::VectorXf>(pair.x).cast<S>();
    const auto f = detail::forward<S>(p, x);
    Vector<S> delta = f.probs;  // dL/dz at the output layer
    delta[pair.label] -= S(1);
    for (size_t l = n_layers; l-- > 0;) {
      const Vector<S>& a_in = f.activations[l];
      grads[2 * l] += a_in * delta.transpose();
      grads[2 * l + 1].row(0) += delta.transpose();
      if (l > 0) {
        Vector<S> back = p.tensors[2 * l] * delta;
        delta = back.array() * (S(1) - f.activations[l].array().square());
      }
    }
  }

  const S inv_n = S(1) / static_cast<S>(batch.pairs.size());
  Vector<S> flat(p.size());
  Eigen::Index at = 0;
  for (auto& g : grads) {
    g *= inv_n;
    flat.segment(at, g.size()) = Eigen::Map<const Vector<S>>(g.data(), g.size());
    at += g.size();
  }
  return flat;
}

template <typename S>
Vector<S> predict(const ParamStore<S>& p, const Vector<S>& x) {
  return detail::forward<S>(p, x).probs;
}

}  // namespace airflux::dense
