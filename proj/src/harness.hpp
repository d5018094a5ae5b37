#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "decontam.hpp"

namespace ssp {

inline constexpr const char* kCodeVersion = "0.1.0";

// Layout of one experiment run directory. A run is owned by one process at a
// time (lock file) and is fully reproducible from (config, master seed).
struct RunPaths {
  std::filesystem::path root;

  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path resolved_config() const { return root / "config.resolved.json"; }
  std::filesystem::path lock() const { return root / ".lock"; }
  std::filesystem::path universe() const { return root / "universe.jsonl"; }
  std::filesystem::path sft_dir(int32_t sub) const;
  std::filesystem::path sft_checkpoint(int32_t sub, int64_t step) const;
  std::filesystem::path sft_metrics(int32_t sub) const;
  std::filesystem::path probe_metrics() const { return root / "metrics" / "probe.jsonl"; }
  std::filesystem::path fusion_manifest() const { return root / "fusion_manifest.json"; }
  std::filesystem::path merged_checkpoint() const;
  std::filesystem::path rl_metrics(size_t stage) const;
  std::filesystem::path rl_checkpoint(size_t stage) const;
  std::filesystem::path final_checkpoint() const;
  std::filesystem::path eval_table(const std::string& split) const;
  std::filesystem::path report_csv() const { return root / "report.csv"; }
};

// Exclusive ownership of a run directory via a lock file; released on scope exit.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& run_dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

// Loads the config for a command: an explicit --config path wins, otherwise a
// previously resolved config in the run directory, otherwise built-in defaults.
ExperimentConfig resolve_config(const std::optional<std::filesystem::path>& config_path,
                                const std::filesystem::path& out_dir,
                                std::optional<uint64_t> seed_override);

void cmd_sft_train(const ExperimentConfig& cfg, const std::filesystem::path& out, bool resume);
void cmd_probe(const ExperimentConfig& cfg, const std::filesystem::path& out, bool resume);
void cmd_merge(const ExperimentConfig& cfg, const std::filesystem::path& out, bool resume);
void cmd_rl_train(const ExperimentConfig& cfg, const std::filesystem::path& out, bool resume);

struct EvalRow {
  std::string subdomain;  // name or "aggregate"
  double pass_1 = 0.0;
  double pass_k = 0.0;
  int n = 0;
  int k = 0;
};

// Pass@1/Pass@K table over one split; empty checkpoint path means the run's
// final checkpoint. Also written to eval_<split>.json in the run directory.
std::vector<EvalRow> cmd_eval(const ExperimentConfig& cfg, const std::filesystem::path& out,
                              const std::filesystem::path& checkpoint, const std::string& split,
                              int n, int k);

// Flattens probe curves and RL metrics into plot-ready CSV
// {stage, step, pass1, passk, mean_w_me}; returns the CSV path.
std::filesystem::path cmd_report(const std::filesystem::path& out);

struct DecontamOptions {
  std::vector<std::filesystem::path> eval_paths;
  std::filesystem::path input;
  std::filesystem::path kept_out;
  std::filesystem::path removed_out;
  std::filesystem::path report_out;  // optional; empty = no report
  int ngram = 10;
  int threads = 1;
};

struct DecontamStats {
  uint64_t input_records = 0;
  uint64_t kept = 0;
  uint64_t removed = 0;
  uint64_t index_grams = 0;
  uint64_t tokens_seen = 0;
};

DecontamStats cmd_decontam(const DecontamOptions& opts);

// probe curves reloaded from the emitted metrics file
std::vector<ProbeCurve> load_probe_curves(const std::filesystem::path& metrics_path);

}  // namespace ssp
