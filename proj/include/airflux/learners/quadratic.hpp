#pragma once

#include "airflux/learner.hpp"

namespace airflux::quadratic {

/// L(theta) = 0.5 * ||theta - c||^2, per pair; the analytic oracle learner.

template <typename S>
ParamStore<S> init(Eigen::Index dim) {
  ParamStore<S> p;
  p.tensors.push_back(RowMatrix<S>::Zero(1, dim));
  return p;
}

template <typename S>
S loss(const ParamStore<S>& params, const Vector<S>& target) {
  const auto theta = params.tensors[0].row(0).transpose();
  return S(0.5) * (theta - target).squaredNorm();
}

template <typename S>
Vector<S> gradient(const ParamStore<S>& params, const Vector<S>& target) {
  return params.tensors[0].row(0).transpose() - target;
}

}  // namespace airflux::quadratic

namespace airflux::linear {

/// L(theta) = g . theta with constant g: the gradient is independent of theta,
/// so gradient application commutes and any interleaving yields the same sum.

template <typename S>
S loss(const ParamStore<S>& params, const Vector<S>& g) {
  return params.tensors[0].row(0).transpose().dot(g);
}

}  // namespace airflux::linear
