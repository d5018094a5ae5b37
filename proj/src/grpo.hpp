#pragma once

#include <optional>

#include "checkpoint.hpp"
#include "tasks.hpp"

namespace ssp {

// G responses for one question sampled under a frozen old policy, with binary
// rewards and group-relative advantages.
struct RolloutGroup {
  Problem question;
  std::vector<TokenSeq> responses;
  std::vector<LogProbTrace> old_traces;  // recorded at rollout time
  std::vector<int> rewards;              // {0,1}
  double reward_mean = 0.0;
  double reward_std = 0.0;  // population std
  std::vector<double> advantages;
  double me_weight = 1.0;  // entropy-deviation weight applied to advantages
};

struct ClipConfig {
  double epsilon = 0.2;
  double kl_coef = 0.0;
  std::optional<PolicySnapshot> reference;  // required iff kl_coef > 0
  void validate() const;
};

// mean/std/advantages from rewards; a zero-variance group gets all-zero
// advantages and therefore contributes no gradient
void compute_group_stats(RolloutGroup& g);

RolloutGroup rollout_group(const PolicyArchitecture& arch, const ParamVector& params,
                           const Problem& question, int group_size, double temperature,
                           int32_t max_len, uint64_t seed);

struct ObjectiveResult {
  double objective = 0.0;
  ParamVector grad;          // ascent direction
  double clip_fraction = 0;  // tokens where the clipped branch was active
  double mean_abs_advantage = 0;
};

// Clipped surrogate averaged over tokens, responses, and groups. Per-token
// ratio uses the stored old-policy trace; tokens on the clipped (constant)
// branch contribute nothing to the gradient. If kl_coef > 0, the per-token
// exact categorical KL to the reference policy is subtracted.
ObjectiveResult grpo_objective_and_grad(const PolicyArchitecture& arch,
                                        const ParamVector& params,
                                        const PolicySnapshot& old_snapshot,
                                        std::span<const RolloutGroup> groups,
                                        const ClipConfig& clip);

}  // namespace ssp
