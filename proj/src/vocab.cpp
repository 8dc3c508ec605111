#include "airflux/learners/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace airflux {

std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& lines) {
  std::map<std::string, uint64_t> counts;
  for (const auto& line : lines)
    for (auto& tok : split_tokens(line)) ++counts[tok];
  if (counts.empty()) fail(ErrorCode::EmptyVocabulary, "no tokens in dataset");

  std::vector<std::pair<std::string, uint64_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocabulary v;
  v.tokens_.reserve(ranked.size());
  v.counts_.reserve(ranked.size());
  for (auto& [tok, count] : ranked) {
    v.index_.emplace(tok, static_cast<uint32_t>(v.tokens_.size()));
    v.tokens_.push_back(tok);
    v.counts_.push_back(count);
  }
  return v;
}

std::vector<uint32_t> Vocabulary::encode(const std::string& line) const {
  std::vector<uint32_t> out;
  for (auto& tok : split_tokens(line)) {
    const uint32_t id = lookup(tok);
    if (id < size()) out.push_back(id);
  }
  return out;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  for (uint32_t id = 0; id < size(); ++id) out << tokens_[id] << '\t' << counts_[id] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot read " + path);
  Vocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail(ErrorCode::IoError, "malformed vocab line: " + line);
    std::string tok = line.substr(0, tab);
    v.counts_.push_back(std::stoull(line.substr(tab + 1)));
    v.index_.emplace(tok, static_cast<uint32_t>(v.tokens_.size()));
    v.tokens_.push_back(std::move(tok));
  }
  if (v.tokens_.empty()) fail(ErrorCode::EmptyVocabulary, path + " is empty");
  return v;
}

}  // namespace airflux
