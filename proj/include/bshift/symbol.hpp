#pragma once

#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bshift {

/// Interned alphabet symbol. Ids are stable for the lifetime of the process.
using Symbol = std::uint32_t;

/// Reserved symbol standing for cosets whose pattern lies outside the shared set.
inline constexpr Symbol kStar = 0xFFFFFFFFu;

using Pattern = std::vector<Symbol>;

class SymbolTable {
 public:
  static SymbolTable& global() {
    static SymbolTable table;
    return table;
  }

  Symbol intern(std::string_view label) {
    std::lock_guard lock(mutex_);
    auto it = ids_.find(std::string(label));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<Symbol>(labels_.size());
    labels_.emplace_back(label);
    ids_.emplace(labels_.back(), id);
    return id;
  }

  std::string label(Symbol s) const {
    if (s == kStar) return "*";
    std::lock_guard lock(mutex_);
    if (s >= labels_.size()) throw std::out_of_range("unknown symbol id");
    return labels_[s];
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Symbol> ids_;
};

inline Symbol intern(std::string_view label) { return SymbolTable::global().intern(label); }
inline std::string label_of(Symbol s) { return SymbolTable::global().label(s); }

inline std::string pattern_label(const Pattern& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += '|';
    out += label_of(p[i]);
  }
  return out;
}

struct PatternHash {
  std::size_t operator()(const Pattern& p) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (Symbol s : p) {
      h ^= s + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace bshift
