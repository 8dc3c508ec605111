#pragma once

#include <string>

#include "airflux/learner.hpp"
#include "airflux/learners/vocab.hpp"

namespace airflux {

/// Embedding snapshot: binary header (V u64, d u64 little-endian) followed by
/// V*d f32 row-major values, with a `.vocab` sidecar next to it.
void save_embedding_snapshot(const std::string& path, const RowMatrix<float>& embeddings,
                             const Vocabulary& vocab);

RowMatrix<float> load_embedding_snapshot(const std::string& path);

}  // namespace airflux
