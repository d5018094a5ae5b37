#pragma once

#include "grpo.hpp"

namespace ssp {

struct MgpoConfig {
  double lambda = 1.0;  // sharpness of the entropy-deviation weighting
  double p0 = 0.5;      // target maximum-entropy accuracy
  void validate() const;
};

// fraction of correct rollouts in the group, p_c(q)
double empirical_accuracy(const RolloutGroup& g);

// -p ln p - (1-p) ln(1-p), with 0 ln 0 = 0; diagnostic only
double binary_entropy(double p);

// Binary KL divergence from the observed accuracy to the target p0:
// p ln(p/p0) + (1-p) ln((1-p)/(1-p0)), with 0 ln 0 = 0.
double max_entropy_deviation(double p, double p0);

// w = exp(-lambda * D_ME(p || p0)); equals 1 when lambda = 0 or p = p0
double entropy_weight(double p, const MgpoConfig& cfg);

// Scales every advantage in the group by the entropy-deviation weight of the
// group's own empirical accuracy. Apply exactly once per optimization step.
RolloutGroup modulate_advantages(RolloutGroup g, const MgpoConfig& cfg);

// GRPO objective/gradient on entropy-modulated advantages.
ObjectiveResult mgpo_objective_and_grad(const PolicyArchitecture& arch,
                                        const ParamVector& params,
                                        const PolicySnapshot& old_snapshot,
                                        std::span<const RolloutGroup> groups,
                                        const ClipConfig& clip, const MgpoConfig& cfg);

}  // namespace ssp
