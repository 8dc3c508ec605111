#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <unordered_map>
#include <vector>

#include "airflux/common.hpp"

namespace airflux {

/// Token vocabulary built in one pre-scan pass (min count 1). Token ids are
/// frequency rank order: highest count first, ties broken by token text.
class Vocabulary {
 public:
  static Vocabulary build(const std::vector<std::string>& lines);

  uint32_t size() const { return static_cast<uint32_t>(tokens_.size()); }
  const std::string& token(uint32_t id) const { return tokens_.at(id); }
  uint64_t count(uint32_t id) const { return counts_.at(id); }
  const std::vector<uint64_t>& counts() const { return counts_; }

  /// Returns the token id, or size() when out of vocabulary.
  uint32_t lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? size() : it->second;
  }

  std::vector<uint32_t> encode(const std::string& line) const;

  /// Text format: token<TAB>count per line, line number = token id.
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::vector<uint64_t> counts_;
  std::unordered_map<std::string, uint32_t> index_;
};

std::vector<std::string> split_tokens(const std::string& line);

}  // namespace airflux
