#include "decontam.hpp"

#include <atomic>
#include <cstring>
#include <future>

namespace ssp {

namespace {

struct Codepoint {
  uint32_t value = 0;
  int length = 0;
};

Codepoint decode_utf8(std::string_view s, size_t i) {
  const auto bad = [&](const char* why) {
    throw InvalidArgumentError(std::string("invalid UTF-8 (") + why + ") at byte offset " +
                               std::to_string(i));
  };
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) return {b0, 1};
  int len;
  uint32_t cp;
  if ((b0 & 0xe0) == 0xc0) {
    len = 2;
    cp = b0 & 0x1f;
  } else if ((b0 & 0xf0) == 0xe0) {
    len = 3;
    cp = b0 & 0x0f;
  } else if ((b0 & 0xf8) == 0xf0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    bad("stray continuation or bad lead byte");
    return {};
  }
  if (i + len > s.size()) bad("truncated sequence");
  for (int j = 1; j < len; ++j) {
    const auto b = static_cast<unsigned char>(s[i + j]);
    if ((b & 0xc0) != 0x80) bad("missing continuation byte");
    cp = (cp << 6) | (b & 0x3f);
  }
  if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) {
    bad("overlong encoding");
  }
  if (cp >= 0xd800 && cp <= 0xdfff) bad("surrogate codepoint");
  if (cp > 0x10ffff) bad("codepoint beyond U+10FFFF");
  return {cp, len};
}

// Punctuation and symbol ranges treated as token separators. ASCII is exact;
// beyond ASCII this covers the common punctuation/symbol blocks rather than
// the full Unicode category tables.
bool is_separator_cp(uint32_t cp) {
  if (cp < 0x80) {
    const bool alnum = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
                       (cp >= 'A' && cp <= 'Z');
    return !alnum;
  }
  if (cp >= 0xa0 && cp <= 0xbf) return true;    // latin-1 punctuation/symbols
  if (cp == 0xd7 || cp == 0xf7) return true;    // multiplication/division signs
  if (cp >= 0x2000 && cp <= 0x206f) return true;  // general punctuation
  if (cp >= 0x20a0 && cp <= 0x20cf) return true;  // currency symbols
  if (cp >= 0x2100 && cp <= 0x2bff) return true;  // letterlike, arrows, math, misc symbols
  if (cp >= 0x2e00 && cp <= 0x2e7f) return true;  // supplemental punctuation
  if (cp >= 0x3000 && cp <= 0x303f) return true;  // cjk symbols and punctuation
  if (cp >= 0xfe30 && cp <= 0xfe4f) return true;  // cjk compatibility forms
  if (cp >= 0xff01 && cp <= 0xff0f) return true;  // fullwidth punctuation
  if (cp >= 0xff1a && cp <= 0xff20) return true;
  if (cp >= 0xff3b && cp <= 0xff40) return true;
  if (cp >= 0xff5b && cp <= 0xff65) return true;
  return false;
}

// simple case mapping for ASCII and Latin-1; other scripts pass through
uint32_t simple_lower(uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xc0 && cp <= 0xde && cp != 0xd7) return cp + 0x20;
  return cp;
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

// murmur3 x64 128-bit
inline uint64_t rotl64(uint64_t x, int8_t r) { return (x << r) | (x >> (64 - r)); }

inline uint64_t fmix64(uint64_t k) {
  k ^= k >> 33;
  k *= 0xff51afd7ed558ccdull;
  k ^= k >> 33;
  k *= 0xc4ceb9fe1a85ec53ull;
  k ^= k >> 33;
  return k;
}

Hash128 murmur3_x64_128(const void* key, size_t len, uint64_t seed) {
  const auto* data = static_cast<const uint8_t*>(key);
  const size_t nblocks = len / 16;
  uint64_t h1 = seed, h2 = seed;
  const uint64_t c1 = 0x87c37b91114253d5ull;
  const uint64_t c2 = 0x4cf5ad432745937full;
  for (size_t i = 0; i < nblocks; ++i) {
    uint64_t k1, k2;
    std::memcpy(&k1, data + i * 16, 8);
    std::memcpy(&k2, data + i * 16 + 8, 8);
    k1 *= c1;
    k1 = rotl64(k1, 31);
    k1 *= c2;
    h1 ^= k1;
    h1 = rotl64(h1, 27);
    h1 += h2;
    h1 = h1 * 5 + 0x52dce729;
    k2 *= c2;
    k2 = rotl64(k2, 33);
    k2 *= c1;
    h2 ^= k2;
    h2 = rotl64(h2, 31);
    h2 += h1;
    h2 = h2 * 5 + 0x38495ab5;
  }
  const uint8_t* tail = data + nblocks * 16;
  uint64_t k1 = 0, k2 = 0;
  switch (len & 15) {
    case 15: k2 ^= static_cast<uint64_t>(tail[14]) << 48; [[fallthrough]];
    case 14: k2 ^= static_cast<uint64_t>(tail[13]) << 40; [[fallthrough]];
    case 13: k2 ^= static_cast<uint64_t>(tail[12]) << 32; [[fallthrough]];
    case 12: k2 ^= static_cast<uint64_t>(tail[11]) << 24; [[fallthrough]];
    case 11: k2 ^= static_cast<uint64_t>(tail[10]) << 16; [[fallthrough]];
    case 10: k2 ^= static_cast<uint64_t>(tail[9]) << 8; [[fallthrough]];
    case 9:
      k2 ^= static_cast<uint64_t>(tail[8]);
      k2 *= c2;
      k2 = rotl64(k2, 33);
      k2 *= c1;
      h2 ^= k2;
      [[fallthrough]];
    case 8: k1 ^= static_cast<uint64_t>(tail[7]) << 56; [[fallthrough]];
    case 7: k1 ^= static_cast<uint64_t>(tail[6]) << 48; [[fallthrough]];
    case 6: k1 ^= static_cast<uint64_t>(tail[5]) << 40; [[fallthrough]];
    case 5: k1 ^= static_cast<uint64_t>(tail[4]) << 32; [[fallthrough]];
    case 4: k1 ^= static_cast<uint64_t>(tail[3]) << 24; [[fallthrough]];
    case 3: k1 ^= static_cast<uint64_t>(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= static_cast<uint64_t>(tail[1]) << 8; [[fallthrough]];
    case 1:
      k1 ^= static_cast<uint64_t>(tail[0]);
      k1 *= c1;
      k1 = rotl64(k1, 31);
      k1 *= c2;
      h1 ^= k1;
      break;
    default: break;
  }
  h1 ^= static_cast<uint64_t>(len);
  h2 ^= static_cast<uint64_t>(len);
  h1 += h2;
  h2 += h1;
  h1 = fmix64(h1);
  h2 = fmix64(h2);
  h1 += h2;
  h2 += h1;
  return {h1, h2};
}

constexpr char kTokenSep = '\x1f';

Hash128 hash_window_buf(std::span<const std::string> tokens, std::string& scratch) {
  scratch.clear();
  for (const auto& t : tokens) {
    scratch += t;
    scratch.push_back(kTokenSep);
  }
  return murmur3_x64_128(scratch.data(), scratch.size(), 0x5353504cu);
}

}  // namespace

NormalizedText normalize_text(std::string_view raw) {
  NormalizedText out;
  std::string token;
  size_t i = 0;
  while (i < raw.size()) {
    const Codepoint cp = decode_utf8(raw, i);
    if (is_separator_cp(cp.value)) {
      if (!token.empty()) {
        out.tokens.push_back(std::move(token));
        token.clear();
      }
    } else {
      append_utf8(token, simple_lower(cp.value));
    }
    i += cp.length;
  }
  if (!token.empty()) out.tokens.push_back(std::move(token));
  return out;
}

Hash128 hash_window(std::span<const std::string> tokens) {
  std::string scratch;
  return hash_window_buf(tokens, scratch);
}

NGramIndex::NGramIndex(int n) : n_(n) {
  if (n < 1) throw ConfigError("n-gram length must be >= 1");
}

void NGramIndex::add_record(std::string_view text, uint32_t source_id, uint32_t record_id) {
  const NormalizedText norm = normalize_text(text);
  ++source_records_;
  if (norm.tokens.size() < static_cast<size_t>(n_)) return;
  std::string scratch;
  for (size_t w = 0; w + n_ <= norm.tokens.size(); ++w) {
    const Hash128 h = hash_window_buf({norm.tokens.data() + w, static_cast<size_t>(n_)}, scratch);
    grams_.emplace(h, GramSource{source_id, record_id});  // first source wins
  }
}

std::optional<NGramIndex::Match> NGramIndex::find_match(const NormalizedText& text) const {
  if (text.tokens.size() < static_cast<size_t>(n_) || grams_.empty()) return std::nullopt;
  std::string scratch;
  for (size_t w = 0; w + n_ <= text.tokens.size(); ++w) {
    const Hash128 h = hash_window_buf({text.tokens.data() + w, static_cast<size_t>(n_)}, scratch);
    auto it = grams_.find(h);
    if (it != grams_.end()) return Match{w, it->second};
  }
  return std::nullopt;
}

bool NGramIndex::contaminated(std::string_view raw) const {
  return find_match(normalize_text(raw)).has_value();
}

FilterResult filter_records(std::span<const std::string> records, const NGramIndex& index,
                            int threads) {
  struct Outcome {
    bool removed = false;
    size_t window_begin = 0;
    GramSource source;
    std::vector<std::string> window;
    uint64_t tokens = 0;
  };
  std::vector<Outcome> outcomes(records.size());

  auto classify = [&](size_t i) {
    const NormalizedText norm = normalize_text(records[i]);
    Outcome& o = outcomes[i];
    o.tokens = norm.tokens.size();
    if (auto m = index.find_match(norm)) {
      o.removed = true;
      o.window_begin = m->window_begin;
      o.source = m->source;
      o.window.assign(norm.tokens.begin() + m->window_begin,
                      norm.tokens.begin() + m->window_begin + index.n());
    }
  };

  if (threads <= 1 || records.size() < 2) {
    for (size_t i = 0; i < records.size(); ++i) classify(i);
  } else {
    const size_t workers = std::min<size_t>(threads, records.size());
    std::atomic<size_t> next{0};
    std::vector<std::future<void>> futs;
    for (size_t w = 0; w < workers; ++w) {
      futs.push_back(std::async(std::launch::async, [&] {
        for (size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
          classify(i);
        }
      }));
    }
    for (auto& f : futs) f.get();
  }

  FilterResult res;
  for (size_t i = 0; i < records.size(); ++i) {
    res.tokens_seen += outcomes[i].tokens;
    if (outcomes[i].removed) {
      res.removed.push_back(RemovedRecord{i, std::move(outcomes[i].window), outcomes[i].source});
    } else {
      res.kept.push_back(i);
    }
  }
  return res;
}

}  // namespace ssp
