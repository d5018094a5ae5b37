#pragma once

#include <filesystem>

#include "policy.hpp"

namespace ssp {

struct PolicySnapshot {
  PolicyArchitecture arch;
  ParamVector params;
  int64_t step = 0;

  void validate() const;
};

// Versioned structured-text checkpoint. Parameters are written as decimal
// floats with enough digits that finite values round-trip bit-exactly.
void save_checkpoint(const PolicySnapshot& snap, const std::filesystem::path& path);
PolicySnapshot load_checkpoint(const std::filesystem::path& path);

}  // namespace ssp
