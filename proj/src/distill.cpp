#include "distill.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>

namespace ssp {

double pass_at_k_unbiased(int n, int c, int k) {
  if (n < 1 || c < 0 || c > n) throw InvalidArgumentError("pass@k: need 0 <= c <= n, n >= 1");
  if (k < 1 || k > n) throw InvalidArgumentError("pass@k: need 1 <= k <= n");
  if (n <= 64) {
    const uint64_t total = binomial_u64(n, k);
    const uint64_t misses = binomial_u64(n - c, k);  // 0 when n-c < k
    return static_cast<double>(total - misses) / static_cast<double>(total);
  }
  if (n - c < k) return 1.0;
  double q = 1.0;
  for (int i = 0; i < k; ++i) {
    q *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  }
  return 1.0 - q;
}

double pass_at_k_naive(std::span<const int> rewards, int k) {
  if (k < 1 || static_cast<size_t>(k) > rewards.size()) {
    throw InvalidArgumentError("pass@k naive: need 1 <= k <= n");
  }
  for (int i = 0; i < k; ++i) {
    if (rewards[i] == 1) return 1.0;
  }
  return 0.0;
}

void ProbeConfig::validate() const {
  if (samples_n < 1 || pass_k < 1 || pass_k > samples_n) {
    throw ConfigError("probe config needs 1 <= pass_k <= samples_n");
  }
  if (!(temperature > 0)) throw ConfigError("probe temperature must be > 0");
  if (max_len < 1) throw ConfigError("probe max_len must be >= 1");
}

ProbeScore probe_checkpoint(const PolicySnapshot& snap, const ProbingSet& set,
                            const ProbeConfig& cfg, uint64_t seed, int threads) {
  cfg.validate();
  snap.validate();
  if (set.problems.empty()) throw InvalidArgumentError("probing set is empty");
  std::vector<int> correct(set.problems.size(), 0);
  parallel_for(set.problems.size(), threads, [&](size_t p) {
    const Problem& prob = set.problems[p];
    const uint64_t pseed = derive_seed(seed, "probe-problem", static_cast<uint64_t>(p));
    int c = 0;
    for (int s = 0; s < cfg.samples_n; ++s) {
      SampleResult r = sample(snap.arch, snap.params, prob.prompt, cfg.temperature,
                              cfg.max_len, derive_seed(pseed, "probe-sample",
                                                       static_cast<uint64_t>(s)));
      c += verify(prob, r.response);
    }
    correct[p] = c;
  });
  ProbeScore score;
  for (int c : correct) {
    score.pass_k += pass_at_k_unbiased(cfg.samples_n, c, cfg.pass_k);
    score.pass_1 += static_cast<double>(c) / cfg.samples_n;
  }
  score.pass_k /= static_cast<double>(set.problems.size());
  score.pass_1 /= static_cast<double>(set.problems.size());
  return score;
}

int64_t select_specialist_step(const ProbeCurve& curve) {
  if (curve.points.empty()) throw InvalidArgumentError("empty probe curve");
  int64_t best_step = curve.points.front().step;
  double best = curve.points.front().pass_k;
  for (const auto& pt : curve.points) {
    if (pt.pass_k > best) {
      best = pt.pass_k;
      best_step = pt.step;
    }
  }
  return best_step;
}

std::vector<double> FusionSpec::uniform_weights(size_t n) {
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

void FusionSpec::validate() const {
  if (specialists.empty()) throw InvalidArgumentError("fusion needs at least one specialist");
  if (weights.size() != specialists.size()) {
    throw InvalidArgumentError("fusion weight count does not match specialist count");
  }
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgumentError("fusion weights must be >= 0");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw InvalidArgumentError("fusion weights must sum to 1 within 1e-12");
  }
  for (const auto& s : specialists) {
    if (!(s.arch == specialists.front().arch)) {
      throw InvalidArgumentError("fusion specialists must share one architecture");
    }
  }
}

PolicySnapshot fuse(const FusionSpec& spec) {
  spec.validate();
  PolicySnapshot out;
  out.arch = spec.specialists.front().arch;
  out.step = 0;
  const size_t dim = spec.specialists.front().params.size();
  out.params.assign(dim, 0.0);
  for (size_t d = 0; d < dim; ++d) {
    // Neumaier-compensated sum keeps the convex combination inside the
    // coordinatewise hull up to one final rounding
    double s = 0.0, comp = 0.0;
    for (size_t i = 0; i < spec.specialists.size(); ++i) {
      const double term = spec.weights[i] * spec.specialists[i].params[d];
      const double t = s + term;
      comp += std::abs(s) >= std::abs(term) ? (s - t) + term : (term - t) + s;
      s = t;
    }
    out.params[d] = s + comp;
  }
  for (const auto& s : spec.specialists) out.step = std::max(out.step, s.step);
  return out;
}

}  // namespace ssp
