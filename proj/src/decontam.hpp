#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "common.hpp"

namespace ssp {

struct NormalizedText {
  std::vector<std::string> tokens;  // lowercase words, no punctuation
};

// Case-folds, replaces punctuation/symbol characters with separators, and
// collapses whitespace. Idempotent. Input must be valid UTF-8; a malformed
// byte raises an input error carrying its offset.
NormalizedText normalize_text(std::string_view raw);

struct Hash128 {
  uint64_t hi = 0;
  uint64_t lo = 0;
  bool operator==(const Hash128&) const = default;
};

struct Hash128Hasher {
  size_t operator()(const Hash128& h) const { return h.hi ^ (h.lo * kFnvPrime); }
};

// murmur3 x64 128-bit finalizer-style hash over a token window
Hash128 hash_window(std::span<const std::string> tokens);

struct GramSource {
  uint32_t source_id = 0;  // evaluation set index
  uint32_t record_id = 0;  // record within that set
};

// Build-once, read-many set of hashed n-token windows from evaluation text.
// Hash collisions count as matches; the filter prefers over-removal.
class NGramIndex {
 public:
  explicit NGramIndex(int n = 10);

  int n() const { return n_; }
  size_t size() const { return grams_.size(); }
  uint64_t source_records() const { return source_records_; }

  void add_record(std::string_view text, uint32_t source_id, uint32_t record_id);

  struct Match {
    size_t window_begin = 0;  // token offset in the queried record
    GramSource source;
  };
  std::optional<Match> find_match(const NormalizedText& text) const;
  bool contaminated(std::string_view raw) const;

 private:
  int n_;
  std::unordered_map<Hash128, GramSource, Hash128Hasher> grams_;
  uint64_t source_records_ = 0;
};

struct RemovedRecord {
  size_t record_index = 0;                 // position in the input stream
  std::vector<std::string> window;         // first matching window
  GramSource source;
};

struct FilterResult {
  std::vector<size_t> kept;                // input indices, original order
  std::vector<RemovedRecord> removed;      // original order
  uint64_t tokens_seen = 0;
};

// Partitions records into kept/removed; a record is removed iff one of its
// normalized n-token windows appears in the index.
FilterResult filter_records(std::span<const std::string> records, const NGramIndex& index,
                            int threads = 1);

}  // namespace ssp
