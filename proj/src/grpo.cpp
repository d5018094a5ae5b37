#include "grpo.hpp"

#include <algorithm>
#include <cmath>

namespace ssp {

void ClipConfig::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("clip epsilon must be in (0,1)");
  if (kl_coef < 0.0) throw ConfigError("kl coefficient must be >= 0");
  if ((kl_coef > 0.0) != reference.has_value()) {
    throw ConfigError("kl coefficient > 0 requires a reference snapshot (and vice versa)");
  }
}

void compute_group_stats(RolloutGroup& g) {
  const size_t n = g.rewards.size();
  if (n < 2) throw InvalidArgumentError("rollout group needs G >= 2 rewards");
  double mean = 0.0;
  for (int r : g.rewards) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (int r : g.rewards) {
    const double d = r - mean;
    var += d * d;
  }
  var /= static_cast<double>(n);
  g.reward_mean = mean;
  g.reward_std = std::sqrt(var);
  g.advantages.assign(n, 0.0);
  if (g.reward_std > 0.0) {
    for (size_t i = 0; i < n; ++i) g.advantages[i] = (g.rewards[i] - mean) / g.reward_std;
  }
}

RolloutGroup rollout_group(const PolicyArchitecture& arch, const ParamVector& params,
                           const Problem& question, int group_size, double temperature,
                           int32_t max_len, uint64_t seed) {
  if (group_size < 2) throw InvalidArgumentError("group size must be >= 2");
  RolloutGroup g;
  g.question = question;
  g.responses.reserve(group_size);
  for (int i = 0; i < group_size; ++i) {
    SampleResult s = sample(arch, params, question.prompt, temperature, max_len,
                            derive_seed(seed, "rollout-sample", static_cast<uint64_t>(i)));
    g.rewards.push_back(verify(question, s.response));
    g.responses.push_back(std::move(s.response));
    g.old_traces.push_back(std::move(s.trace));
  }
  compute_group_stats(g);
  return g;
}

ObjectiveResult grpo_objective_and_grad(const PolicyArchitecture& arch,
                                        const ParamVector& params,
                                        const PolicySnapshot& old_snapshot,
                                        std::span<const RolloutGroup> groups,
                                        const ClipConfig& clip) {
  clip.validate();
  if (!(old_snapshot.arch == arch) ||
      static_cast<int64_t>(params.size()) != arch.param_count()) {
    throw InvalidArgumentError("params/old snapshot architecture mismatch");
  }
  if (clip.reference && !(clip.reference->arch == arch)) {
    throw InvalidArgumentError("reference snapshot architecture mismatch");
  }
  PolicyEval eval(arch, params);
  std::optional<PolicyEval> ref_eval;
  if (clip.reference) ref_eval.emplace(arch, clip.reference->params);

  ObjectiveResult res;
  res.grad.assign(params.size(), 0.0);
  if (groups.empty()) return res;

  const int32_t V = arch.vocab.size;
  std::vector<double> lp(V), dlogits(V), ref_lp(V);
  StateRef s;
  const double lo = 1.0 - clip.epsilon;
  const double hi = 1.0 + clip.epsilon;
  int64_t tokens = 0, clipped_tokens = 0;
  double abs_adv = 0.0;
  int64_t responses = 0;

  for (const auto& g : groups) {
    const double inv_g = 1.0 / static_cast<double>(g.responses.size());
    for (size_t i = 0; i < g.responses.size(); ++i) {
      const double adv = g.advantages[i];
      abs_adv += std::abs(adv);
      ++responses;
      const TokenSeq& y = g.responses[i];
      const double coef = inv_g / (static_cast<double>(groups.size()) *
                                   static_cast<double>(y.size()));
      const bool need_policy_terms = adv != 0.0;
      if (!need_policy_terms && clip.kl_coef == 0.0) {
        tokens += static_cast<int64_t>(y.size());
        continue;
      }
      for (size_t t = 0; t < y.size(); ++t) {
        ++tokens;
        eval.state(g.question.prompt, std::span<const int32_t>(y.data(), t),
                   static_cast<int32_t>(t), s);
        eval.log_probs(s, lp);
        if (need_policy_terms) {
          const double ratio = std::exp(lp[y[t]] - g.old_traces[i].per_token[t]);
          const double clipped = std::clamp(ratio, lo, hi);
          const double u = ratio * adv;
          const double v = clipped * adv;
          res.objective += coef * std::min(u, v);
          if (u <= v) {
            // d(ratio*A)/d logits = A * ratio * (onehot - p)
            const double scale = coef * adv * ratio;
            for (int32_t k = 0; k < V; ++k) dlogits[k] = -scale * std::exp(lp[k]);
            dlogits[y[t]] += scale;
            eval.accumulate_logit_grad(s, dlogits, 1.0, res.grad);
          } else {
            ++clipped_tokens;
          }
        }
        if (clip.kl_coef > 0.0) {
          ref_eval->log_probs(s, ref_lp);
          double kl = 0.0;
          for (int32_t k = 0; k < V; ++k) kl += std::exp(lp[k]) * (lp[k] - ref_lp[k]);
          res.objective -= clip.kl_coef * coef * kl;
          // d KL / d logits = p .* (lp - ref_lp) - p * KL
          const double scale = -clip.kl_coef * coef;
          for (int32_t k = 0; k < V; ++k) {
            dlogits[k] = scale * std::exp(lp[k]) * ((lp[k] - ref_lp[k]) - kl);
          }
          eval.accumulate_logit_grad(s, dlogits, 1.0, res.grad);
        }
      }
    }
  }
  res.clip_fraction = tokens > 0 ? static_cast<double>(clipped_tokens) / tokens : 0.0;
  res.mean_abs_advantage = responses > 0 ? abs_adv / responses : 0.0;
  if (!std::isfinite(res.objective) || !all_finite(res.grad)) {
    throw NumericError("grpo objective produced non-finite values");
  }
  return res;
}

}  // namespace ssp
