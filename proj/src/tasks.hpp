#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "policy.hpp"

namespace ssp {

enum class OpKind { ModAdd, ModSub, ModMul, Parity };

std::string to_string(OpKind op);
OpKind op_kind_from_string(const std::string& s);

struct SubdomainSpec {
  int32_t id = 0;
  std::string name;
  OpKind op = OpKind::ModAdd;
  int32_t operand_min = 0;
  int32_t operand_max = 99;
  int32_t modulus = 10;  // answers are f(a,b) mod modulus, fixed-width digits
  void validate() const;
  int32_t answer_width() const;  // digits of modulus-1
};

struct Problem {
  TokenSeq prompt;
  TokenSeq answer;  // ground truth, ends with end-of-sequence
  int32_t subdomain = 0;
};

enum class Split { Train, Probe, Holdout };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct ProbingSet {
  int32_t subdomain = 0;
  Split split = Split::Train;
  std::vector<Problem> problems;
};

struct UniverseConfig {
  Vocabulary vocab{11, 10};  // digits 0-9 plus end-of-sequence
  std::vector<SubdomainSpec> subdomains;
  int32_t train_size = 0;
  int32_t probe_size = 0;
  int32_t holdout_size = 0;
  void validate() const;
  static UniverseConfig default_config();  // 4 subdomains: add/sub/mul/parity mod 10
};

struct Universe {
  UniverseConfig config;
  std::vector<ProbingSet> sets;  // one per (subdomain, split), subdomain-major

  const ProbingSet& set(int32_t subdomain, Split split) const;
  size_t subdomain_count() const { return config.subdomains.size(); }
};

// Deterministic in (config, seed). Prompts are globally distinct: no prompt
// appears in two splits or two subdomains of the same universe.
Universe generate_universe(const UniverseConfig& config, uint64_t seed);

// exact-match binary reward
int verify(const Problem& problem, const TokenSeq& response);

// line-delimited records {prompt, answer, subdomain, split}, stable order
void save_universe(const Universe& u, const std::filesystem::path& path);
Universe load_universe(const std::filesystem::path& path);

}  // namespace ssp
