#include "mgpo.hpp"

#include <cmath>

namespace ssp {

void MgpoConfig::validate() const {
  if (lambda < 0.0) throw ConfigError("mgpo lambda must be >= 0");
  if (!(p0 > 0.0 && p0 < 1.0)) throw ConfigError("mgpo p0 must be in (0,1)");
}

double empirical_accuracy(const RolloutGroup& g) {
  if (g.rewards.empty()) throw InvalidArgumentError("empty rollout group");
  double c = 0.0;
  for (int r : g.rewards) c += (r == 1) ? 1.0 : 0.0;
  return c / static_cast<double>(g.rewards.size());
}

double binary_entropy(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgumentError("binary_entropy: p outside [0,1]");
  double h = 0.0;
  if (p > 0.0) h -= p * std::log(p);
  if (p < 1.0) h -= (1.0 - p) * std::log(1.0 - p);
  return h;
}

double max_entropy_deviation(double p, double p0) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgumentError("max_entropy_deviation: p outside [0,1]");
  if (!(p0 > 0.0 && p0 < 1.0)) throw InvalidArgumentError("max_entropy_deviation: p0 outside (0,1)");
  double d = 0.0;
  if (p > 0.0) d += p * std::log(p / p0);
  if (p < 1.0) d += (1.0 - p) * std::log((1.0 - p) / (1.0 - p0));
  return d;
}

double entropy_weight(double p, const MgpoConfig& cfg) {
  cfg.validate();
  return std::exp(-cfg.lambda * max_entropy_deviation(p, cfg.p0));
}

RolloutGroup modulate_advantages(RolloutGroup g, const MgpoConfig& cfg) {
  if (g.advantages.size() != g.rewards.size()) {
    throw InvalidArgumentError("group advantages not computed");
  }
  const double w = entropy_weight(empirical_accuracy(g), cfg);
  for (double& a : g.advantages) a *= w;
  g.me_weight = w;
  return g;
}

ObjectiveResult mgpo_objective_and_grad(const PolicyArchitecture& arch,
                                        const ParamVector& params,
                                        const PolicySnapshot& old_snapshot,
                                        std::span<const RolloutGroup> groups,
                                        const ClipConfig& clip, const MgpoConfig& cfg) {
  std::vector<RolloutGroup> modulated;
  modulated.reserve(groups.size());
  for (const auto& g : groups) modulated.push_back(modulate_advantages(g, cfg));
  return grpo_objective_and_grad(arch, params, old_snapshot, modulated, clip);
}

}  // namespace ssp
