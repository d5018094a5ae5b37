#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "distill.hpp"
#include "grpo.hpp"
#include "mgpo.hpp"
#include "tasks.hpp"

namespace ssp {

enum class RlAlgorithm { Grpo, Mgpo };

std::string to_string(RlAlgorithm a);
RlAlgorithm rl_algorithm_from_string(const std::string& s);

struct SftConfig {
  double learning_rate = 0.5;
  int64_t steps = 1000;
  int32_t batch_size = 32;
  int64_t checkpoint_every = 200;  // the probing cadence k
  double max_grad_norm = 0.0;     // 0 disables clipping
  void validate() const;
};

struct RlStageConfig {
  RlAlgorithm algorithm = RlAlgorithm::Mgpo;
  double lambda = 1.0;
  double epsilon = 0.2;
  double kl_coef = 0.0;
  int32_t group_size = 8;
  double temperature = 1.0;
  int32_t max_response_len = 4;
  int64_t steps = 300;
  double learning_rate = 0.25;
  int32_t questions_per_step = 32;
  int32_t epochs_per_batch = 1;
  double max_grad_norm = 0.0;
  void validate() const;
};

struct PolicyConfig {
  ArchKind kind = ArchKind::LinearSoftmax;
  int32_t context_length = 4;
  int32_t table_size = 4096;  // tabular only
  double init_scale = 0.01;
  void validate() const;
  PolicyArchitecture architecture(const Vocabulary& vocab) const;
};

struct ExperimentConfig {
  int32_t version = 1;
  uint64_t seed = 42;
  UniverseConfig universe = UniverseConfig::default_config();
  PolicyConfig policy;
  SftConfig sft;
  ProbeConfig probe;
  std::vector<double> fusion_weights;  // empty = uniform over subdomains
  std::vector<RlStageConfig> rl_stages;
  int32_t threads = 0;  // 0 = hardware concurrency

  void validate() const;
  int effective_threads() const;

  static ExperimentConfig defaults();
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig load(const std::filesystem::path& path);
  std::string to_json_text() const;  // canonical (sorted keys, resolved defaults)

  // hash of the canonical form: stable under key reordering and formatting,
  // changes iff a semantically meaningful field changes
  std::string config_hash() const;
};

}  // namespace ssp
