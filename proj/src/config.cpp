#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace ssp {

using nlohmann::json;

std::string to_string(RlAlgorithm a) { return a == RlAlgorithm::Grpo ? "grpo" : "mgpo"; }

RlAlgorithm rl_algorithm_from_string(const std::string& s) {
  if (s == "grpo") return RlAlgorithm::Grpo;
  if (s == "mgpo") return RlAlgorithm::Mgpo;
  throw ConfigError("unknown rl algorithm: " + s);
}

void SftConfig::validate() const {
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw ConfigError("sft learning_rate must be positive and finite");
  }
  if (steps < 1) throw ConfigError("sft steps must be >= 1");
  if (batch_size < 1) throw ConfigError("sft batch_size must be >= 1");
  if (checkpoint_every < 1) throw ConfigError("sft checkpoint_every must be >= 1");
  if (max_grad_norm < 0) throw ConfigError("sft max_grad_norm must be >= 0");
}

void RlStageConfig::validate() const {
  if (lambda < 0) throw ConfigError("rl stage lambda must be >= 0");
  if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("rl stage epsilon must be in (0,1)");
  if (kl_coef < 0) throw ConfigError("rl stage kl_coef must be >= 0");
  if (group_size < 2) throw ConfigError("rl stage group_size must be >= 2");
  if (!(temperature > 0)) throw ConfigError("rl stage temperature must be > 0");
  if (max_response_len < 1) throw ConfigError("rl stage max_response_len must be >= 1");
  if (steps < 1) throw ConfigError("rl stage steps must be >= 1");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    throw ConfigError("rl stage learning_rate must be positive and finite");
  }
  if (questions_per_step < 1) throw ConfigError("rl stage questions_per_step must be >= 1");
  if (epochs_per_batch < 1) throw ConfigError("rl stage epochs_per_batch must be >= 1");
  if (max_grad_norm < 0) throw ConfigError("rl stage max_grad_norm must be >= 0");
}

void PolicyConfig::validate() const {
  if (context_length < 1) throw ConfigError("policy context_length must be >= 1");
  if (kind == ArchKind::TabularSoftmax && table_size < 1) {
    throw ConfigError("policy table_size must be >= 1");
  }
  if (!(init_scale >= 0)) throw ConfigError("policy init_scale must be >= 0");
}

PolicyArchitecture PolicyConfig::architecture(const Vocabulary& vocab) const {
  return kind == ArchKind::TabularSoftmax
             ? PolicyArchitecture::tabular(vocab, context_length, table_size)
             : PolicyArchitecture::linear(vocab, context_length);
}

void ExperimentConfig::validate() const {
  if (version != 1) throw ConfigError("unsupported config version");
  universe.validate();
  policy.validate();
  sft.validate();
  probe.validate();
  if (!fusion_weights.empty()) {
    if (fusion_weights.size() != universe.subdomains.size()) {
      throw ConfigError("fusion_weights size must match the subdomain count");
    }
    double sum = 0;
    for (double w : fusion_weights) {
      if (!(w >= 0)) throw ConfigError("fusion_weights must be >= 0");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("fusion_weights must sum to 1");
  }
  for (const auto& s : rl_stages) s.validate();
  if (threads < 0) throw ConfigError("threads must be >= 0");
}

int ExperimentConfig::effective_threads() const {
  if (threads > 0) return threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

ExperimentConfig ExperimentConfig::defaults() {
  ExperimentConfig c;
  c.probe.max_len = 4;
  RlStageConfig s1;
  s1.max_response_len = 4;
  RlStageConfig s2 = s1;
  s2.max_response_len = 8;
  c.rl_stages = {s1, s2};
  return c;
}

namespace {

void expect_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) {
      if (key == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConfigError(std::string("unknown config key '") + key + "' in " + where);
  }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

SubdomainSpec parse_subdomain(const json& j) {
  expect_keys(j, {"id", "name", "op", "operand_min", "operand_max", "modulus"}, "subdomain");
  SubdomainSpec s;
  maybe(j, "id", s.id);
  maybe(j, "name", s.name);
  if (j.contains("op")) s.op = op_kind_from_string(j.at("op").get<std::string>());
  maybe(j, "operand_min", s.operand_min);
  maybe(j, "operand_max", s.operand_max);
  maybe(j, "modulus", s.modulus);
  return s;
}

RlStageConfig parse_stage(const json& j) {
  expect_keys(j,
              {"algorithm", "lambda", "epsilon", "kl_coef", "group_size", "temperature",
               "max_response_len", "steps", "learning_rate", "questions_per_step",
               "epochs_per_batch", "max_grad_norm"},
              "rl stage");
  RlStageConfig s;
  if (j.contains("algorithm")) {
    s.algorithm = rl_algorithm_from_string(j.at("algorithm").get<std::string>());
  }
  maybe(j, "lambda", s.lambda);
  maybe(j, "epsilon", s.epsilon);
  maybe(j, "kl_coef", s.kl_coef);
  maybe(j, "group_size", s.group_size);
  maybe(j, "temperature", s.temperature);
  maybe(j, "max_response_len", s.max_response_len);
  maybe(j, "steps", s.steps);
  maybe(j, "learning_rate", s.learning_rate);
  maybe(j, "questions_per_step", s.questions_per_step);
  maybe(j, "epochs_per_batch", s.epochs_per_batch);
  maybe(j, "max_grad_norm", s.max_grad_norm);
  return s;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    expect_keys(j,
                {"version", "seed", "threads", "universe", "policy", "sft", "probe",
                 "fusion_weights", "rl_stages"},
                "config");
    ExperimentConfig c = defaults();
    maybe(j, "version", c.version);
    maybe(j, "seed", c.seed);
    maybe(j, "threads", c.threads);
    if (j.contains("universe")) {
      const json& u = j.at("universe");
      expect_keys(u,
                  {"vocab_size", "eos", "train_size", "probe_size", "holdout_size",
                   "subdomains"},
                  "universe");
      maybe(u, "vocab_size", c.universe.vocab.size);
      maybe(u, "eos", c.universe.vocab.eos);
      maybe(u, "train_size", c.universe.train_size);
      maybe(u, "probe_size", c.universe.probe_size);
      maybe(u, "holdout_size", c.universe.holdout_size);
      if (u.contains("subdomains")) {
        c.universe.subdomains.clear();
        for (const auto& s : u.at("subdomains")) c.universe.subdomains.push_back(parse_subdomain(s));
      }
    }
    if (j.contains("policy")) {
      const json& p = j.at("policy");
      expect_keys(p, {"kind", "context_length", "table_size", "init_scale"}, "policy");
      if (p.contains("kind")) c.policy.kind = arch_kind_from_string(p.at("kind").get<std::string>());
      maybe(p, "context_length", c.policy.context_length);
      maybe(p, "table_size", c.policy.table_size);
      maybe(p, "init_scale", c.policy.init_scale);
    }
    if (j.contains("sft")) {
      const json& s = j.at("sft");
      expect_keys(s, {"learning_rate", "steps", "batch_size", "checkpoint_every", "max_grad_norm"},
                  "sft");
      maybe(s, "learning_rate", c.sft.learning_rate);
      maybe(s, "steps", c.sft.steps);
      maybe(s, "batch_size", c.sft.batch_size);
      maybe(s, "checkpoint_every", c.sft.checkpoint_every);
      maybe(s, "max_grad_norm", c.sft.max_grad_norm);
    }
    if (j.contains("probe")) {
      const json& p = j.at("probe");
      expect_keys(p, {"samples_n", "pass_k", "temperature", "max_len"}, "probe");
      maybe(p, "samples_n", c.probe.samples_n);
      maybe(p, "pass_k", c.probe.pass_k);
      maybe(p, "temperature", c.probe.temperature);
      maybe(p, "max_len", c.probe.max_len);
    }
    if (j.contains("fusion_weights")) c.fusion_weights = j.at("fusion_weights").get<std::vector<double>>();
    if (j.contains("rl_stages")) {
      c.rl_stages.clear();
      for (const auto& s : j.at("rl_stages")) c.rl_stages.push_back(parse_stage(s));
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

std::string ExperimentConfig::to_json_text() const {
  json j;
  j["version"] = version;
  j["seed"] = seed;
  j["threads"] = threads;
  json subs = json::array();
  for (const auto& s : universe.subdomains) {
    subs.push_back({{"id", s.id},
                    {"name", s.name},
                    {"op", to_string(s.op)},
                    {"operand_min", s.operand_min},
                    {"operand_max", s.operand_max},
                    {"modulus", s.modulus}});
  }
  j["universe"] = {{"vocab_size", universe.vocab.size},
                   {"eos", universe.vocab.eos},
                   {"train_size", universe.train_size},
                   {"probe_size", universe.probe_size},
                   {"holdout_size", universe.holdout_size},
                   {"subdomains", subs}};
  j["policy"] = {{"kind", to_string(policy.kind)},
                 {"context_length", policy.context_length},
                 {"table_size", policy.table_size},
                 {"init_scale", policy.init_scale}};
  j["sft"] = {{"learning_rate", sft.learning_rate},
              {"steps", sft.steps},
              {"batch_size", sft.batch_size},
              {"checkpoint_every", sft.checkpoint_every},
              {"max_grad_norm", sft.max_grad_norm}};
  j["probe"] = {{"samples_n", probe.samples_n},
                {"pass_k", probe.pass_k},
                {"temperature", probe.temperature},
                {"max_len", probe.max_len}};
  j["fusion_weights"] = fusion_weights;
  json stages = json::array();
  for (const auto& s : rl_stages) {
    stages.push_back({{"algorithm", to_string(s.algorithm)},
                      {"lambda", s.lambda},
                      {"epsilon", s.epsilon},
                      {"kl_coef", s.kl_coef},
                      {"group_size", s.group_size},
                      {"temperature", s.temperature},
                      {"max_response_len", s.max_response_len},
                      {"steps", s.steps},
                      {"learning_rate", s.learning_rate},
                      {"questions_per_step", s.questions_per_step},
                      {"epochs_per_batch", s.epochs_per_batch},
                      {"max_grad_norm", s.max_grad_norm}});
  }
  j["rl_stages"] = stages;
  return j.dump(2);
}

std::string ExperimentConfig::config_hash() const {
  // nlohmann orders object keys, so the dump is canonical
  const std::string canon = to_json_text();
  const uint64_t h1 = fnv1a64(canon);
  const uint64_t h2 = fnv1a64(canon, splitmix64(h1));
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(h1),
                static_cast<unsigned long long>(h2));
  return buf;
}

}  // namespace ssp
