#include "airflux/snapshot.hpp"

#include <cstring>
#include <fstream>

namespace airflux {

namespace {

void put_u64(std::ofstream& out, uint64_t v) {
  uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<uint8_t>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t get_u64(std::ifstream& in) {
  uint8_t buf[8];
  in.read(reinterpret_cast<char*>(buf), 8);
  if (!in) fail(ErrorCode::IoError, "truncated snapshot header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_embedding_snapshot(const std::string& path, const RowMatrix<float>& embeddings,
                             const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  put_u64(out, static_cast<uint64_t>(embeddings.rows()));
  put_u64(out, static_cast<uint64_t>(embeddings.cols()));
  static_assert(std::endian::native == std::endian::little, "snapshot format is little-endian");
  out.write(reinterpret_cast<const char*>(embeddings.data()),
            static_cast<std::streamsize>(embeddings.size() * sizeof(float)));
  vocab.save(path + ".vocab");
}

RowMatrix<float> load_embedding_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path);
  const auto rows = static_cast<Eigen::Index>(get_u64(in));
  const auto cols = static_cast<Eigen::Index>(get_u64(in));
  RowMatrix<float> m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
  if (!in) fail(ErrorCode::IoError, "truncated snapshot body");
  return m;
}

}  // namespace airflux
