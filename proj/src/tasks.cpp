#include "tasks.hpp"

#include <fstream>
#include <random>
#include <unordered_set>

#include <json.hpp>

namespace ssp {

using nlohmann::json;

std::string to_string(OpKind op) {
  switch (op) {
    case OpKind::ModAdd: return "add";
    case OpKind::ModSub: return "sub";
    case OpKind::ModMul: return "mul";
    case OpKind::Parity: return "parity";
  }
  return "add";
}

OpKind op_kind_from_string(const std::string& s) {
  if (s == "add") return OpKind::ModAdd;
  if (s == "sub") return OpKind::ModSub;
  if (s == "mul") return OpKind::ModMul;
  if (s == "parity") return OpKind::Parity;
  throw ConfigError("unknown op kind: " + s);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Probe: return "probe";
    case Split::Holdout: return "holdout";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "probe") return Split::Probe;
  if (s == "holdout") return Split::Holdout;
  throw ConfigError("unknown split: " + s);
}

void SubdomainSpec::validate() const {
  if (id < 0) throw ConfigError("subdomain id must be >= 0");
  if (operand_min < 0 || operand_max > 99 || operand_min > operand_max) {
    throw ConfigError("operand range must satisfy 0 <= min <= max <= 99");
  }
  if (modulus < 2 || modulus > 1000) throw ConfigError("modulus must be in [2, 1000]");
}

int32_t SubdomainSpec::answer_width() const {
  if (modulus <= 10) return 1;
  if (modulus <= 100) return 2;
  return 3;
}

void UniverseConfig::validate() const {
  vocab.validate();
  if (vocab.size < 11 || vocab.eos < 10) {
    throw ConfigError("universe vocabulary needs digit tokens 0-9 plus a separate eos");
  }
  if (subdomains.empty()) throw ConfigError("universe needs at least one subdomain");
  if (train_size < 1 || probe_size < 1 || holdout_size < 1) {
    throw ConfigError("per-split sizes must be >= 1");
  }
  std::unordered_set<int32_t> ids;
  for (const auto& s : subdomains) {
    s.validate();
    if (!ids.insert(s.id).second) throw ConfigError("duplicate subdomain id");
  }
}

UniverseConfig UniverseConfig::default_config() {
  UniverseConfig c;
  c.vocab = Vocabulary{11, 10};
  c.subdomains = {
      {0, "modadd", OpKind::ModAdd, 0, 99, 10},
      {1, "modsub", OpKind::ModSub, 0, 99, 10},
      {2, "modmul", OpKind::ModMul, 0, 99, 10},
      {3, "parity", OpKind::Parity, 0, 99, 2},
  };
  c.train_size = 400;
  c.probe_size = 200;
  c.holdout_size = 200;
  return c;
}

const ProbingSet& Universe::set(int32_t subdomain, Split split) const {
  for (const auto& s : sets) {
    if (s.subdomain == subdomain && s.split == split) return s;
  }
  throw MissingDependencyError("no probing set for subdomain " + std::to_string(subdomain));
}

namespace {

int64_t apply_op(OpKind op, int64_t a, int64_t b, int32_t modulus) {
  switch (op) {
    case OpKind::ModAdd: return (a + b) % modulus;
    case OpKind::ModSub: return ((a - b) % modulus + modulus) % modulus;
    case OpKind::ModMul: return (a * b) % modulus;
    case OpKind::Parity: return (a + b) % 2;
  }
  return 0;
}

Problem make_problem(const SubdomainSpec& spec, const Vocabulary& vocab, int32_t a, int32_t b) {
  Problem p;
  p.subdomain = spec.id;
  // the op id doubles as the first prompt token
  p.prompt = {static_cast<int32_t>(spec.op), a / 10, a % 10, b / 10, b % 10};
  int64_t ans = apply_op(spec.op, a, b, spec.modulus);
  const int32_t w = spec.answer_width();
  p.answer.resize(w + 1);
  for (int32_t i = w - 1; i >= 0; --i) {
    p.answer[i] = static_cast<int32_t>(ans % 10);
    ans /= 10;
  }
  p.answer[w] = vocab.eos;
  return p;
}

}  // namespace

Universe generate_universe(const UniverseConfig& config, uint64_t seed) {
  config.validate();
  Universe u;
  u.config = config;
  const int32_t need = config.train_size + config.probe_size + config.holdout_size;
  std::unordered_set<uint64_t> used_prompts;
  for (const auto& spec : config.subdomains) {
    const int32_t span = spec.operand_max - spec.operand_min + 1;
    const int64_t space = static_cast<int64_t>(span) * span;
    std::vector<int32_t> order(space);
    for (int64_t i = 0; i < space; ++i) order[i] = static_cast<int32_t>(i);
    std::mt19937_64 rng(derive_seed(seed, "universe", static_cast<uint64_t>(spec.id)));
    fisher_yates(order, rng);

    ProbingSet train{spec.id, Split::Train, {}};
    ProbingSet probe{spec.id, Split::Probe, {}};
    ProbingSet holdout{spec.id, Split::Holdout, {}};
    for (int32_t idx : order) {
      const int32_t a = spec.operand_min + idx / span;
      const int32_t b = spec.operand_min + idx % span;
      Problem p = make_problem(spec, config.vocab, a, b);
      uint64_t key = kFnvOffset;
      for (int32_t t : p.prompt) key = fnv1a64_bytes(&t, sizeof(t), key);
      if (!used_prompts.insert(key).second) continue;
      if (static_cast<int32_t>(train.problems.size()) < config.train_size) {
        train.problems.push_back(std::move(p));
      } else if (static_cast<int32_t>(probe.problems.size()) < config.probe_size) {
        probe.problems.push_back(std::move(p));
      } else if (static_cast<int32_t>(holdout.problems.size()) < config.holdout_size) {
        holdout.problems.push_back(std::move(p));
      } else {
        break;
      }
    }
    if (static_cast<int32_t>(holdout.problems.size()) < config.holdout_size) {
      throw ConfigError("subdomain '" + spec.name +
                        "' cannot supply " + std::to_string(need) + " distinct problems");
    }
    u.sets.push_back(std::move(train));
    u.sets.push_back(std::move(probe));
    u.sets.push_back(std::move(holdout));
  }
  return u;
}

int verify(const Problem& problem, const TokenSeq& response) {
  return response == problem.answer ? 1 : 0;
}

void save_universe(const Universe& u, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  json header;
  header["vocab"] = {{"size", u.config.vocab.size}, {"eos", u.config.vocab.eos}};
  header["train_size"] = u.config.train_size;
  header["probe_size"] = u.config.probe_size;
  header["holdout_size"] = u.config.holdout_size;
  json subs = json::array();
  for (const auto& s : u.config.subdomains) {
    subs.push_back({{"id", s.id},
                    {"name", s.name},
                    {"op", to_string(s.op)},
                    {"operand_min", s.operand_min},
                    {"operand_max", s.operand_max},
                    {"modulus", s.modulus}});
  }
  header["subdomains"] = subs;
  out << header.dump() << "\n";
  for (const auto& set : u.sets) {
    for (const auto& p : set.problems) {
      json rec;
      rec["prompt"] = p.prompt;
      rec["answer"] = p.answer;
      rec["subdomain"] = p.subdomain;
      rec["split"] = to_string(set.split);
      out << rec.dump() << "\n";
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

Universe load_universe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty universe file: " + path.string());
  json header = json::parse(line);
  Universe u;
  u.config.vocab.size = header.at("vocab").at("size").get<int32_t>();
  u.config.vocab.eos = header.at("vocab").at("eos").get<int32_t>();
  u.config.train_size = header.at("train_size").get<int32_t>();
  u.config.probe_size = header.at("probe_size").get<int32_t>();
  u.config.holdout_size = header.at("holdout_size").get<int32_t>();
  for (const auto& s : header.at("subdomains")) {
    SubdomainSpec spec;
    spec.id = s.at("id").get<int32_t>();
    spec.name = s.at("name").get<std::string>();
    spec.op = op_kind_from_string(s.at("op").get<std::string>());
    spec.operand_min = s.at("operand_min").get<int32_t>();
    spec.operand_max = s.at("operand_max").get<int32_t>();
    spec.modulus = s.at("modulus").get<int32_t>();
    u.config.subdomains.push_back(spec);
  }
  for (const auto& spec : u.config.subdomains) {
    for (Split split : {Split::Train, Split::Probe, Split::Holdout}) {
      u.sets.push_back(ProbingSet{spec.id, split, {}});
    }
  }
  auto set_of = [&](int32_t sub, Split split) -> ProbingSet& {
    for (auto& s : u.sets) {
      if (s.subdomain == sub && s.split == split) return s;
    }
    throw IoError("universe record references unknown subdomain");
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    Problem p;
    p.prompt = rec.at("prompt").get<TokenSeq>();
    p.answer = rec.at("answer").get<TokenSeq>();
    p.subdomain = rec.at("subdomain").get<int32_t>();
    set_of(p.subdomain, split_from_string(rec.at("split").get<std::string>()))
        .problems.push_back(std::move(p));
  }
  return u;
}

}  // namespace ssp
