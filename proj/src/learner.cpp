#include "airflux/learner.hpp"

#include "airflux/learners/dense_classifier.hpp"
#include "airflux/learners/quadratic.hpp"
#include "airflux/learners/word2vec.hpp"

namespace airflux {

Eigen::VectorXf GradientPayload::densify(const ParamStoreF& shape) const {
  if (!sparse()) {
    if (dense().size() != shape.size()) fail(ErrorCode::DimensionMismatch, "dense delta size");
    return dense();
  }
  ParamStoreF zero;
  zero.tensors.reserve(shape.tensors.size());
  for (const auto& t : shape.tensors)
    zero.tensors.push_back(RowMatrix<float>::Zero(t.rows(), t.cols()));
  for (const auto& r : rows()) zero.row(r.row) += r.delta.transpose();
  return zero.flatten();
}

void apply_delta(ParamStoreF& theta, const GradientPayload& delta, float alpha) {
  if (delta.sparse()) {
    for (const auto& r : delta.rows()) {
      auto row = theta.row(r.row);
      if (row.size() != r.delta.size()) fail(ErrorCode::DimensionMismatch, "sparse row width");
      row -= alpha * r.delta.transpose();
    }
    return;
  }
  const Eigen::VectorXf& flat = delta.dense();
  if (flat.size() != theta.size()) fail(ErrorCode::DimensionMismatch, "dense delta size");
  // Row-by-row through the same expression as the sparse path, so densified
  // sparse deltas produce bit-identical parameters.
  Eigen::Index at = 0;
  for (auto& t : theta.tensors) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      t.row(r) -= alpha * flat.segment(at, t.cols()).transpose();
      at += t.cols();
    }
  }
}

namespace {

class QuadraticLearner final : public Learner {
 public:
  explicit QuadraticLearner(LearnerSpec spec) : spec_(std::move(spec)) {
    if (spec_.target.size() == 0) fail(ErrorCode::ConfigError, "quadratic learner needs a target");
  }

  ParamStoreF init_params() const override { return quadratic::init<float>(spec_.target.size()); }

  float loss(const ParamStoreF& p, const MiniBatch&) const override {
    return quadratic::loss<float>(p, spec_.target);
  }

  GradientResult gradient(const ParamStoreF& p, const MiniBatch&) const override {
    GradientResult out;
    out.delta.value = Eigen::VectorXf(quadratic::gradient<float>(p, spec_.target));
    out.loss = quadratic::loss<float>(p, spec_.target);
    return out;
  }

  Eigen::VectorXf predict(const ParamStoreF& p, const PredictQuery&) const override {
    return p.tensors[0].row(0).transpose();
  }

 private:
  LearnerSpec spec_;
};

class ConstantGradientLearner final : public Learner {
 public:
  explicit ConstantGradientLearner(LearnerSpec spec) : spec_(std::move(spec)) {
    if (spec_.constant_gradient.size() == 0)
      fail(ErrorCode::ConfigError, "constant-gradient learner needs a gradient vector");
  }

  ParamStoreF init_params() const override {
    return quadratic::init<float>(spec_.constant_gradient.size());
  }

  float loss(const ParamStoreF& p, const MiniBatch&) const override {
    return linear::loss<float>(p, spec_.constant_gradient);
  }

  GradientResult gradient(const ParamStoreF& p, const MiniBatch&) const override {
    GradientResult out;
    out.delta.value = spec_.constant_gradient;
    out.loss = linear::loss<float>(p, spec_.constant_gradient);
    return out;
  }

  Eigen::VectorXf predict(const ParamStoreF& p, const PredictQuery&) const override {
    return p.tensors[0].row(0).transpose();
  }

 private:
  LearnerSpec spec_;
};

class DenseClassifierLearner final : public Learner {
 public:
  explicit DenseClassifierLearner(LearnerSpec spec) : spec_(std::move(spec)) {}

  ParamStoreF init_params() const override {
    return dense::init<float>(spec_.layer_sizes, spec_.seed);
  }

  float loss(const ParamStoreF& p, const MiniBatch& batch) const override {
    return dense::loss<float>(p, batch);
  }

  GradientResult gradient(const ParamStoreF& p, const MiniBatch& batch) const override {
    GradientResult out;
    out.delta.value = Eigen::VectorXf(dense::gradient<float>(p, batch));
    out.loss = dense::loss<float>(p, batch);
    return out;
  }

  Eigen::VectorXf predict(const ParamStoreF& p, const PredictQuery& q) const override {
    return dense::predict<float>(p, std::get<Eigen::VectorXf>(q.input));
  }

 private:
  LearnerSpec spec_;
};

class Word2VecLearner final : public Learner {
 public:
  explicit Word2VecLearner(LearnerSpec spec) : spec_(std::move(spec)) {}

  ParamStoreF init_params() const override {
    return w2v::init<float>(spec_.vocab_size, spec_.embedding_dim, spec_.seed);
  }

  float loss(const ParamStoreF& p, const MiniBatch& batch) const override {
    return w2v::loss<float>(p, batch);
  }

  GradientResult gradient(const ParamStoreF& p, const MiniBatch& batch) const override {
    GradientResult out;
    auto rows = w2v::gradient<float>(p, batch);
    std::vector<SparseRow> converted;
    converted.reserve(rows.size());
    for (auto& r : rows) converted.push_back({r.row, std::move(r.delta)});
    out.delta.value = std::move(converted);
    out.loss = w2v::loss<float>(p, batch);
    return out;
  }

  /// Embedding lookup: the input-embedding row of the requested token.
  Eigen::VectorXf predict(const ParamStoreF& p, const PredictQuery& q) const override {
    const uint32_t token = std::get<uint32_t>(q.input);
    if (token >= p.tensors[0].rows()) fail(ErrorCode::DimensionMismatch, "token id out of range");
    return p.tensors[0].row(token).transpose();
  }

 private:
  LearnerSpec spec_;
};

}  // namespace

std::unique_ptr<Learner> make_learner(const LearnerSpec& spec) {
  switch (spec.kind) {
    case LearnerKind::QuadraticToy: return std::make_unique<QuadraticLearner>(spec);
    case LearnerKind::DenseClassifier: return std::make_unique<DenseClassifierLearner>(spec);
    case LearnerKind::Word2Vec: return std::make_unique<Word2VecLearner>(spec);
    case LearnerKind::ConstantGradient: return std::make_unique<ConstantGradientLearner>(spec);
  }
  fail(ErrorCode::ConfigError, "unknown learner kind");
}

}  // namespace airflux
