#pragma once

#include "checkpoint.hpp"
#include "tasks.hpp"

namespace ssp {

enum class PassKKind { Unbiased, NaiveMax };

// Unbiased pass@k from n samples with c correct:
//   1 - C(n-c, k) / C(n, k)
// Exact (single rounding) for n <= 64 via integer binomials; stable ratio
// products beyond that.
double pass_at_k_unbiased(int n, int c, int k);

// 1 if any of the first k ordered sample rewards is 1; the cross-check
// estimator whose subset average recovers the unbiased value.
double pass_at_k_naive(std::span<const int> rewards, int k);

struct PassKEstimate {
  int n = 0;
  int c = 0;
  int k = 0;
  PassKKind kind = PassKKind::Unbiased;
  double value = 0.0;
};

struct ProbeConfig {
  int samples_n = 16;
  int pass_k = 8;
  double temperature = 1.0;
  int32_t max_len = 8;
  void validate() const;
};

struct ProbeScore {
  double pass_k = 0.0;  // mean unbiased pass@k over the probing set
  double pass_1 = 0.0;  // mean c/n
};

// Draws n responses per problem and averages the unbiased pass@k estimate.
// Deterministic in (snapshot, set, cfg, seed).
ProbeScore probe_checkpoint(const PolicySnapshot& snap, const ProbingSet& set,
                            const ProbeConfig& cfg, uint64_t seed, int threads = 1);

struct ProbePoint {
  int64_t step = 0;
  double pass_k = 0.0;
  double pass_1 = 0.0;
  int n = 0;
  int k = 0;
};

struct ProbeCurve {
  int32_t subdomain = 0;
  std::vector<ProbePoint> points;  // steps strictly increasing
};

// argmax_t of pass@k, ties broken toward the smallest step
int64_t select_specialist_step(const ProbeCurve& curve);

struct FusionSpec {
  std::vector<PolicySnapshot> specialists;
  std::vector<double> weights;  // nonneg, sums to 1 within 1e-12
  void validate() const;
  static std::vector<double> uniform_weights(size_t n);
};

// Elementwise convex combination of specialist parameters; the result keeps
// the shared architecture and the max specialist step.
PolicySnapshot fuse(const FusionSpec& spec);

}  // namespace ssp
