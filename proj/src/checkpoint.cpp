#include "checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace ssp {

using nlohmann::json;

namespace {
constexpr int kFormatVersion = 1;
}

void PolicySnapshot::validate() const {
  arch.validate();
  if (static_cast<int64_t>(params.size()) != arch.param_count()) {
    throw InvalidArgumentError("snapshot parameter count does not match architecture");
  }
  if (!all_finite(params)) throw NumericError("snapshot contains non-finite parameters");
}

void save_checkpoint(const PolicySnapshot& snap, const std::filesystem::path& path) {
  snap.validate();
  json j;
  j["format_version"] = kFormatVersion;
  j["architecture"] = {
      {"kind", to_string(snap.arch.kind)},
      {"vocab_size", snap.arch.vocab.size},
      {"eos", snap.arch.vocab.eos},
      {"context_length", snap.arch.context_length},
      {"table_size", snap.arch.table_size},
      {"feature_dim", snap.arch.feature_dim},
  };
  j["step"] = snap.step;
  j["params"] = snap.params;  // serialized with shortest round-trip digits
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << j.dump() << "\n";
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

PolicySnapshot load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed checkpoint " + path.string() + ": " + e.what());
  }
  const int version = j.at("format_version").get<int>();
  if (version != kFormatVersion) {
    throw IoError("unsupported checkpoint format version " + std::to_string(version));
  }
  PolicySnapshot snap;
  const auto& a = j.at("architecture");
  snap.arch.kind = arch_kind_from_string(a.at("kind").get<std::string>());
  snap.arch.vocab.size = a.at("vocab_size").get<int32_t>();
  snap.arch.vocab.eos = a.at("eos").get<int32_t>();
  snap.arch.context_length = a.at("context_length").get<int32_t>();
  snap.arch.table_size = a.at("table_size").get<int32_t>();
  snap.arch.feature_dim = a.at("feature_dim").get<int32_t>();
  snap.step = j.at("step").get<int64_t>();
  snap.params = j.at("params").get<ParamVector>();
  snap.validate();
  return snap;
}

}  // namespace ssp
