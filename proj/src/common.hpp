#pragma once

#include <atomic>
#include <cstdint>
#include <future>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ssp {

// Error hierarchy. Each class maps onto one C-API status code (and, for the
// codes the CLI documents, onto a process exit code).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration. Exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A pipeline stage was invoked before its prerequisite artifacts exist. Exit code 3.
class MissingDependencyError : public Error {
 public:
  using Error::Error;
};

// Non-finite values or other numeric breakdown at runtime. Exit code 4.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Input-domain violations on individual operations.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// --- hashing -----------------------------------------------------------

inline constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr uint64_t kFnvPrime = 0x100000001b3ull;

inline uint64_t fnv1a64(std::string_view s, uint64_t h = kFnvOffset) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t fnv1a64_bytes(const void* data, size_t len, uint64_t h = kFnvOffset) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seed fan-out. Every randomized component derives its own seed as
// derive_seed(master, scope, a, b, c); adding a new scope never perturbs
// the streams of existing ones.
inline uint64_t derive_seed(uint64_t master, std::string_view scope, uint64_t a = 0,
                            uint64_t b = 0, uint64_t c = 0) {
  uint64_t h = splitmix64(master ^ fnv1a64(scope));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return h;
}

// --- numeric helpers ---------------------------------------------------

// Deterministic uniform int in [0, n); avoids the implementation-defined
// std::uniform_int_distribution so runs are bit-reproducible everywhere.
template <typename Rng>
uint64_t bounded_rand(Rng& rng, uint64_t n) {
  return n <= 1 ? 0 : rng() % n;
}

template <typename Rng>
void fisher_yates(std::vector<int32_t>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[bounded_rand(rng, i)]);
  }
}


// log softmax in place; returns nothing. Input is logits, output log-probs.
void log_softmax_inplace(std::span<double> logits);

// softmax into `out` (same size as logits).
void softmax(std::span<const double> logits, std::span<double> out);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

bool all_finite(std::span<const double> v);

// Exact binomial coefficient for n <= 64 (result fits in uint64_t).
uint64_t binomial_u64(int n, int k);

std::string format_double17(double v);  // shortest-roundtrip-safe decimal

// Chunked parallel map. Results must be written into index-addressed slots so
// the outcome is independent of scheduling; exceptions propagate to the caller.
template <typename Fn>
void parallel_for(size_t n, int threads, Fn&& fn) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const size_t workers = std::min<size_t>(static_cast<size_t>(threads), n);
  std::atomic<size_t> next{0};
  std::vector<std::future<void>> futs;
  futs.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&] {
      for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    }));
  }
  for (auto& f : futs) f.get();
}

}  // namespace ssp
