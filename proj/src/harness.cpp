#include "harness.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include <json.hpp>

namespace ssp {

namespace fs = std::filesystem;
using nlohmann::json;

std::filesystem::path RunPaths::sft_dir(int32_t sub) const {
  return root / "checkpoints" / "sft" / ("sub" + std::to_string(sub));
}

std::filesystem::path RunPaths::sft_checkpoint(int32_t sub, int64_t step) const {
  return sft_dir(sub) / ("step" + std::to_string(step) + ".ckpt");
}

std::filesystem::path RunPaths::sft_metrics(int32_t sub) const {
  return root / "metrics" / ("sft_sub" + std::to_string(sub) + ".jsonl");
}

std::filesystem::path RunPaths::merged_checkpoint() const {
  return root / "checkpoints" / "merged.ckpt";
}

std::filesystem::path RunPaths::rl_metrics(size_t stage) const {
  return root / "metrics" / ("rl_stage" + std::to_string(stage) + ".jsonl");
}

std::filesystem::path RunPaths::rl_checkpoint(size_t stage) const {
  return root / "checkpoints" / "rl" / ("stage" + std::to_string(stage) + ".ckpt");
}

std::filesystem::path RunPaths::final_checkpoint() const {
  return root / "checkpoints" / "final.ckpt";
}

std::filesystem::path RunPaths::eval_table(const std::string& split) const {
  return root / ("eval_" + split + ".json");
}

RunLock::RunLock(const fs::path& run_dir) {
  fs::create_directories(run_dir);
  path_ = run_dir / ".lock";
  std::FILE* f = std::fopen(path_.c_str(), "wx");  // exclusive create
  if (!f) {
    throw IoError("run directory is locked by another process: " + run_dir.string() +
                  " (remove .lock if that process is gone)");
  }
  std::fprintf(f, "%ld\n", static_cast<long>(::getpid()));
  std::fclose(f);
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

class Manifest {
 public:
  static Manifest open(const RunPaths& paths, const ExperimentConfig& cfg) {
    Manifest m;
    m.path_ = paths.manifest();
    const std::string hash = cfg.config_hash();
    if (fs::exists(m.path_)) {
      std::ifstream in(m.path_);
      try {
        in >> m.j_;
      } catch (const json::exception& e) {
        throw IoError("malformed manifest: " + std::string(e.what()));
      }
      if (m.j_.value("config_hash", "") != hash) {
        throw ConfigError("run directory " + paths.root.string() +
                          " was created with a different config (hash mismatch)");
      }
    } else {
      m.j_["config_hash"] = hash;
      m.j_["code_version"] = kCodeVersion;
      m.j_["stages"] = json::object();
      m.j_["timings_sec"] = json::object();
      std::ofstream cfg_out(paths.resolved_config());
      if (!cfg_out) throw IoError("cannot write " + paths.resolved_config().string());
      cfg_out << cfg.to_json_text() << "\n";
      m.save();
    }
    return m;
  }

  bool stage_complete(const RunPaths& paths, const std::string& name) const {
    if (!j_.at("stages").contains(name)) return false;
    for (const auto& f : j_.at("stages").at(name).at("files")) {
      if (!fs::exists(paths.root / f.get<std::string>())) return false;
    }
    return true;
  }

  void require_stage(const RunPaths& paths, const std::string& name,
                     const std::string& needed_by) const {
    if (!stage_complete(paths, name)) {
      throw MissingDependencyError("stage '" + needed_by + "' needs artifacts from '" + name +
                                   "'; run `" + name + "` first");
    }
  }

  void record_stage(const std::string& name, json stage, double seconds) {
    j_["stages"][name] = std::move(stage);
    j_["timings_sec"][name] = seconds;
    save();
  }

  const json& stage(const std::string& name) const { return j_.at("stages").at(name); }

  void save() const {
    std::ofstream out(path_);
    if (!out) throw IoError("cannot write manifest " + path_.string());
    out << j_.dump(2) << "\n";
  }

 private:
  fs::path path_;
  json j_;
};

std::string rel(const RunPaths& paths, const fs::path& p) {
  return fs::relative(p, paths.root).string();
}

Universe ensure_universe(const ExperimentConfig& cfg, const RunPaths& paths, Manifest& m) {
  if (fs::exists(paths.universe())) return load_universe(paths.universe());
  Timer t;
  Universe u = generate_universe(cfg.universe, derive_seed(cfg.seed, "universe"));
  fs::create_directories(paths.root);
  save_universe(u, paths.universe());
  m.record_stage("universe", {{"files", {rel(paths, paths.universe())}}}, t.seconds());
  return u;
}

Universe require_universe(const RunPaths& paths, const Manifest& m, const std::string& who) {
  m.require_stage(paths, "universe", who);
  return load_universe(paths.universe());
}

std::vector<int32_t> pick_without_replacement(std::mt19937_64& rng, size_t pool, size_t count) {
  std::vector<int32_t> idx(pool);
  for (size_t i = 0; i < pool; ++i) idx[i] = static_cast<int32_t>(i);
  fisher_yates(idx, rng);
  idx.resize(std::min(pool, count));
  return idx;
}

json mgpo_histogram(std::span<const RolloutGroup> groups) {
  // counts of groups by number of correct rollouts (0..G)
  size_t max_g = 0;
  for (const auto& g : groups) max_g = std::max(max_g, g.rewards.size());
  std::vector<int64_t> hist(max_g + 1, 0);
  for (const auto& g : groups) {
    int c = 0;
    for (int r : g.rewards) c += r;
    ++hist[c];
  }
  return json(hist);
}

}  // namespace

ExperimentConfig resolve_config(const std::optional<fs::path>& config_path,
                                const fs::path& out_dir,
                                std::optional<uint64_t> seed_override) {
  ExperimentConfig cfg;
  if (config_path) {
    cfg = ExperimentConfig::load(*config_path);
  } else if (fs::exists(out_dir / "config.resolved.json")) {
    cfg = ExperimentConfig::load(out_dir / "config.resolved.json");
  } else {
    cfg = ExperimentConfig::defaults();
  }
  if (seed_override) cfg.seed = *seed_override;
  cfg.validate();
  return cfg;
}

void cmd_sft_train(const ExperimentConfig& cfg, const fs::path& out, bool resume) {
  cfg.validate();
  RunPaths paths{out};
  RunLock lock(out);
  Manifest m = Manifest::open(paths, cfg);
  if (resume && m.stage_complete(paths, "sft-train")) return;
  Timer timer;
  const Universe universe = ensure_universe(cfg, paths, m);
  const PolicyArchitecture arch = cfg.policy.architecture(cfg.universe.vocab);
  const ParamVector warm_start =
      init_params(arch, derive_seed(cfg.seed, "init"), cfg.policy.init_scale);

  const size_t n_sub = universe.subdomain_count();
  std::vector<std::string> files = {rel(paths, paths.universe())};
  for (size_t i = 0; i < n_sub; ++i) {
    fs::create_directories(paths.sft_dir(static_cast<int32_t>(i)));
  }
  fs::create_directories(paths.root / "metrics");

  json ckpt_index = json::object();
  std::vector<json> per_sub(n_sub);
  parallel_for(n_sub, std::min<int>(cfg.effective_threads(), static_cast<int>(n_sub)),
               [&](size_t si) {
    const auto& spec = universe.config.subdomains[si];
    const auto& train = universe.set(spec.id, Split::Train).problems;
    ParamVector params = warm_start;
    std::ofstream metrics(paths.sft_metrics(spec.id));
    if (!metrics) throw IoError("cannot write sft metrics for subdomain " + spec.name);
    json steps = json::object();
    for (int64_t step = 1; step <= cfg.sft.steps; ++step) {
      std::mt19937_64 rng(
          derive_seed(cfg.seed, "sft-batch", static_cast<uint64_t>(spec.id),
                      static_cast<uint64_t>(step)));
      std::vector<SftBatchItem> batch(cfg.sft.batch_size);
      for (auto& item : batch) {
        const auto& p = train[bounded_rand(rng, train.size())];
        item.prompt = p.prompt;
        item.response = p.answer;
      }
      SftResult r = sft_loss_and_grad(arch, params, batch);
      const double gnorm = clip_grad_norm(r.grad, cfg.sft.max_grad_norm);
      if (!std::isfinite(r.loss) || !std::isfinite(gnorm)) {
        throw NumericError("sft produced non-finite loss/gradient at step " +
                           std::to_string(step));
      }
      params = sgd_step(params, r.grad, cfg.sft.learning_rate);
      metrics << json{{"step", step}, {"loss", r.loss}, {"grad_norm", gnorm}}.dump() << "\n";
      if (step % cfg.sft.checkpoint_every == 0) {
        const fs::path cp = paths.sft_checkpoint(spec.id, step);
        save_checkpoint(PolicySnapshot{arch, params, step}, cp);
        steps[std::to_string(step)] = rel(paths, cp);
      }
    }
    if (!metrics) throw IoError("sft metrics write failed for subdomain " + spec.name);
    per_sub[si] = std::move(steps);
  });
  for (size_t si = 0; si < n_sub; ++si) {
    const auto& spec = universe.config.subdomains[si];
    ckpt_index[std::to_string(spec.id)] = per_sub[si];
    files.push_back(rel(paths, paths.sft_metrics(spec.id)));
    for (const auto& [_, p] : per_sub[si].items()) files.push_back(p.get<std::string>());
  }
  m.record_stage("sft-train", {{"files", files}, {"checkpoints", ckpt_index}}, timer.seconds());
}

void cmd_probe(const ExperimentConfig& cfg, const fs::path& out, bool resume) {
  cfg.validate();
  RunPaths paths{out};
  RunLock lock(out);
  Manifest m = Manifest::open(paths, cfg);
  if (resume && m.stage_complete(paths, "probe")) return;
  m.require_stage(paths, "sft-train", "probe");
  Timer timer;
  const Universe universe = require_universe(paths, m, "probe");

  struct Job {
    int32_t sub = 0;
    int64_t step = 0;
    fs::path ckpt;
    ProbeScore score;
  };
  std::vector<Job> jobs;
  const json& ckpts = m.stage("sft-train").at("checkpoints");
  for (const auto& spec : universe.config.subdomains) {
    const auto key = std::to_string(spec.id);
    if (!ckpts.contains(key)) {
      throw MissingDependencyError("no checkpoints recorded for subdomain " + spec.name);
    }
    std::vector<int64_t> steps;
    for (const auto& [s, _] : ckpts.at(key).items()) steps.push_back(std::stoll(s));
    std::sort(steps.begin(), steps.end());
    for (int64_t s : steps) {
      jobs.push_back(Job{spec.id, s,
                         paths.root / ckpts.at(key).at(std::to_string(s)).get<std::string>(),
                         {}});
    }
  }
  parallel_for(jobs.size(), cfg.effective_threads(), [&](size_t i) {
    Job& job = jobs[i];
    const PolicySnapshot snap = load_checkpoint(job.ckpt);
    job.score = probe_checkpoint(snap, universe.set(job.sub, Split::Probe), cfg.probe,
                                 derive_seed(cfg.seed, "probe", static_cast<uint64_t>(job.sub),
                                             static_cast<uint64_t>(job.step)));
  });
  fs::create_directories(paths.root / "metrics");
  std::ofstream metrics(paths.probe_metrics());
  if (!metrics) throw IoError("cannot write " + paths.probe_metrics().string());
  for (const auto& job : jobs) {
    metrics << json{{"subdomain", job.sub}, {"step", job.step},
                    {"passk", job.score.pass_k}, {"pass1", job.score.pass_1},
                    {"n", cfg.probe.samples_n}, {"k", cfg.probe.pass_k}}
                   .dump()
            << "\n";
  }
  if (!metrics) throw IoError("probe metrics write failed");
  metrics.close();
  m.record_stage("probe", {{"files", {rel(paths, paths.probe_metrics())}}}, timer.seconds());
}

std::vector<ProbeCurve> load_probe_curves(const fs::path& metrics_path) {
  std::ifstream in(metrics_path);
  if (!in) throw IoError("cannot read probe metrics " + metrics_path.string());
  std::map<int32_t, ProbeCurve> by_sub;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const auto sub = j.at("subdomain").get<int32_t>();
    auto& curve = by_sub[sub];
    curve.subdomain = sub;
    curve.points.push_back(ProbePoint{j.at("step").get<int64_t>(), j.at("passk").get<double>(),
                                      j.at("pass1").get<double>(), j.at("n").get<int>(),
                                      j.at("k").get<int>()});
  }
  std::vector<ProbeCurve> curves;
  for (auto& [_, c] : by_sub) {
    std::sort(c.points.begin(), c.points.end(),
              [](const ProbePoint& a, const ProbePoint& b) { return a.step < b.step; });
    curves.push_back(std::move(c));
  }
  return curves;
}

void cmd_merge(const ExperimentConfig& cfg, const fs::path& out, bool resume) {
  cfg.validate();
  RunPaths paths{out};
  RunLock lock(out);
  Manifest m = Manifest::open(paths, cfg);
  if (resume && m.stage_complete(paths, "merge")) return;
  m.require_stage(paths, "probe", "merge");
  Timer timer;
  const std::vector<ProbeCurve> curves = load_probe_curves(paths.probe_metrics());
  if (curves.empty()) throw MissingDependencyError("probe metrics contain no curves");

  FusionSpec spec;
  json specialists = json::array();
  const json& ckpts = m.stage("sft-train").at("checkpoints");
  for (const auto& curve : curves) {
    const int64_t best = select_specialist_step(curve);
    const auto key = std::to_string(curve.subdomain);
    const auto step_key = std::to_string(best);
    if (!ckpts.contains(key) || !ckpts.at(key).contains(step_key)) {
      throw MissingDependencyError("no checkpoint stored for subdomain " + key + " at step " +
                                   step_key);
    }
    const fs::path cp = paths.root / ckpts.at(key).at(step_key).get<std::string>();
    spec.specialists.push_back(load_checkpoint(cp));
    specialists.push_back(
        {{"subdomain", curve.subdomain}, {"step", best}, {"path", rel(paths, cp)}});
  }
  spec.weights = cfg.fusion_weights.empty() ? FusionSpec::uniform_weights(spec.specialists.size())
                                            : cfg.fusion_weights;
  const PolicySnapshot merged = fuse(spec);
  fs::create_directories(paths.merged_checkpoint().parent_path());
  save_checkpoint(merged, paths.merged_checkpoint());
  std::ofstream fm(paths.fusion_manifest());
  if (!fm) throw IoError("cannot write " + paths.fusion_manifest().string());
  fm << json{{"specialists", specialists},
             {"weights", spec.weights},
             {"merged", rel(paths, paths.merged_checkpoint())}}
            .dump(2)
     << "\n";
  fm.close();
  m.record_stage("merge",
                 {{"files", {rel(paths, paths.merged_checkpoint()),
                             rel(paths, paths.fusion_manifest())}}},
                 timer.seconds());
}

void cmd_rl_train(const ExperimentConfig& cfg, const fs::path& out, bool resume) {
  cfg.validate();
  if (cfg.rl_stages.empty()) throw ConfigError("rl-train requires a non-empty stage list");
  RunPaths paths{out};
  RunLock lock(out);
  Manifest m = Manifest::open(paths, cfg);
  if (resume && m.stage_complete(paths, "rl-train")) return;
  m.require_stage(paths, "merge", "rl-train");
  Timer timer;
  const Universe universe = require_universe(paths, m, "rl-train");
  PolicySnapshot current = load_checkpoint(paths.merged_checkpoint());
  const PolicyArchitecture arch = current.arch;

  std::vector<const Problem*> pool;
  for (const auto& spec : universe.config.subdomains) {
    for (const auto& p : universe.set(spec.id, Split::Train).problems) pool.push_back(&p);
  }
  if (pool.empty()) throw MissingDependencyError("universe has no training problems");

  fs::create_directories(paths.root / "metrics");
  fs::create_directories(paths.rl_checkpoint(0).parent_path());
  std::vector<std::string> files;
  int64_t global_step = 0;
  for (size_t stage_idx = 0; stage_idx < cfg.rl_stages.size(); ++stage_idx) {
    const RlStageConfig& stage = cfg.rl_stages[stage_idx];
    const MgpoConfig mgpo_cfg{stage.lambda, 0.5};
    ClipConfig clip;
    clip.epsilon = stage.epsilon;
    clip.kl_coef = stage.kl_coef;
    if (stage.kl_coef > 0) clip.reference = current;  // stage entry policy
    std::ofstream metrics(paths.rl_metrics(stage_idx));
    if (!metrics) throw IoError("cannot write rl metrics for stage " + std::to_string(stage_idx));
    for (int64_t step = 1; step <= stage.steps; ++step) {
      ++global_step;
      std::mt19937_64 qrng(derive_seed(cfg.seed, "rl-questions", stage_idx,
                                       static_cast<uint64_t>(step)));
      const std::vector<int32_t> picked =
          pick_without_replacement(qrng, pool.size(), stage.questions_per_step);
      const PolicySnapshot old_snapshot{arch, current.params, global_step - 1};
      std::vector<RolloutGroup> groups(picked.size());
      parallel_for(picked.size(), cfg.effective_threads(), [&](size_t qi) {
        groups[qi] = rollout_group(arch, old_snapshot.params, *pool[picked[qi]],
                                   stage.group_size, stage.temperature, stage.max_response_len,
                                   derive_seed(cfg.seed, "rollout", stage_idx,
                                               static_cast<uint64_t>(step),
                                               static_cast<uint64_t>(qi)));
      });
      double mean_reward = 0.0;
      for (const auto& g : groups) mean_reward += g.reward_mean;
      mean_reward /= static_cast<double>(groups.size());

      for (int32_t epoch = 0; epoch < stage.epochs_per_batch; ++epoch) {
        ObjectiveResult res;
        double mean_w = 1.0, esw = 1.0;
        if (stage.algorithm == RlAlgorithm::Mgpo) {
          std::vector<RolloutGroup> modulated;
          modulated.reserve(groups.size());
          double sum_w = 0.0, sum_w2 = 0.0;
          for (const auto& g : groups) {
            modulated.push_back(modulate_advantages(g, mgpo_cfg));
            sum_w += modulated.back().me_weight;
            sum_w2 += modulated.back().me_weight * modulated.back().me_weight;
          }
          mean_w = sum_w / static_cast<double>(groups.size());
          esw = sum_w2 > 0 ? (sum_w * sum_w) / (sum_w2 * static_cast<double>(groups.size()))
                           : 0.0;
          res = grpo_objective_and_grad(arch, current.params, old_snapshot, modulated, clip);
        } else {
          res = grpo_objective_and_grad(arch, current.params, old_snapshot, groups, clip);
        }
        const double gnorm = clip_grad_norm(res.grad, stage.max_grad_norm);
        for (double& g : res.grad) g = -g;  // ascend the surrogate
        current.params = sgd_step(current.params, res.grad, stage.learning_rate);
        current.step = global_step;
        if (epoch == 0) {
          json row{{"stage", stage_idx},
                   {"step", step},
                   {"algorithm", to_string(stage.algorithm)},
                   {"mean_reward", mean_reward},
                   {"mean_abs_advantage", res.mean_abs_advantage},
                   {"clip_fraction", res.clip_fraction},
                   {"objective", res.objective},
                   {"grad_norm", gnorm}};
          if (stage.algorithm == RlAlgorithm::Mgpo) {
            row["p_c_hist"] = mgpo_histogram(groups);
            row["mean_w_me"] = mean_w;
            row["esw_fraction"] = esw;
          }
          metrics << row.dump() << "\n";
        }
      }
    }
    if (!metrics) throw IoError("rl metrics write failed");
    metrics.close();
    save_checkpoint(current, paths.rl_checkpoint(stage_idx));
    files.push_back(rel(paths, paths.rl_metrics(stage_idx)));
    files.push_back(rel(paths, paths.rl_checkpoint(stage_idx)));
  }
  save_checkpoint(current, paths.final_checkpoint());
  files.push_back(rel(paths, paths.final_checkpoint()));
  m.record_stage("rl-train", {{"files", files}}, timer.seconds());
}

std::vector<EvalRow> cmd_eval(const ExperimentConfig& cfg, const fs::path& out,
                              const fs::path& checkpoint, const std::string& split_name,
                              int n, int k) {
  cfg.validate();
  if (n < 1 || k < 1 || k > n) throw ConfigError("eval needs 1 <= k <= n");
  RunPaths paths{out};
  RunLock lock(out);
  Manifest m = Manifest::open(paths, cfg);
  Timer timer;
  const Universe universe = require_universe(paths, m, "eval");
  fs::path ckpt = checkpoint;
  if (ckpt.empty()) {
    m.require_stage(paths, "rl-train", "eval");
    ckpt = paths.final_checkpoint();
  }
  if (!fs::exists(ckpt)) {
    throw MissingDependencyError("checkpoint not found: " + ckpt.string());
  }
  const PolicySnapshot snap = load_checkpoint(ckpt);
  const Split split = split_from_string(split_name);
  ProbeConfig pc = cfg.probe;
  pc.samples_n = n;
  pc.pass_k = k;

  std::vector<EvalRow> rows(universe.config.subdomains.size());
  parallel_for(rows.size(), cfg.effective_threads(), [&](size_t i) {
    const auto& spec = universe.config.subdomains[i];
    const ProbeScore s =
        probe_checkpoint(snap, universe.set(spec.id, split), pc,
                         derive_seed(cfg.seed, "eval", static_cast<uint64_t>(spec.id),
                                     fnv1a64(split_name)));
    rows[i] = EvalRow{spec.name, s.pass_1, s.pass_k, n, k};
  });
  EvalRow agg{"aggregate", 0.0, 0.0, n, k};
  for (const auto& r : rows) {
    agg.pass_1 += r.pass_1;
    agg.pass_k += r.pass_k;
  }
  agg.pass_1 /= static_cast<double>(rows.size());
  agg.pass_k /= static_cast<double>(rows.size());
  rows.push_back(agg);

  json jrows = json::array();
  for (const auto& r : rows) {
    jrows.push_back({{"subdomain", r.subdomain}, {"pass1", r.pass_1}, {"passk", r.pass_k}});
  }
  std::ofstream outf(paths.eval_table(split_name));
  if (!outf) throw IoError("cannot write " + paths.eval_table(split_name).string());
  outf << json{{"split", split_name}, {"checkpoint", ckpt.string()}, {"n", n}, {"k", k},
               {"rows", jrows}}
              .dump(2)
       << "\n";
  outf.close();
  m.record_stage("eval-" + split_name,
                 {{"files", {rel(paths, paths.eval_table(split_name))}}}, timer.seconds());
  return rows;
}

std::filesystem::path cmd_report(const fs::path& out) {
  RunPaths paths{out};
  if (!fs::exists(paths.manifest())) {
    throw MissingDependencyError("no manifest in " + out.string() + "; nothing to report");
  }
  std::ofstream csv(paths.report_csv());
  if (!csv) throw IoError("cannot write " + paths.report_csv().string());
  csv << "stage,step,pass1,passk,mean_w_me\n";
  if (fs::exists(paths.probe_metrics())) {
    for (const auto& curve : load_probe_curves(paths.probe_metrics())) {
      for (const auto& pt : curve.points) {
        csv << "sft/sub" << curve.subdomain << "," << pt.step << ","
            << format_double17(pt.pass_1) << "," << format_double17(pt.pass_k) << ",\n";
      }
    }
  }
  for (size_t stage = 0;; ++stage) {
    const fs::path mp = paths.rl_metrics(stage);
    if (!fs::exists(mp)) break;
    std::ifstream in(mp);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      csv << "rl/stage" << stage << "," << j.at("step").get<int64_t>() << ","
          << format_double17(j.at("mean_reward").get<double>()) << ",,";
      if (j.contains("mean_w_me")) csv << format_double17(j.at("mean_w_me").get<double>());
      csv << "\n";
    }
  }
  if (!csv) throw IoError("report write failed");
  return paths.report_csv();
}

DecontamStats cmd_decontam(const DecontamOptions& opts) {
  if (opts.ngram < 1) throw ConfigError("n-gram length must be >= 1");
  if (opts.eval_paths.empty()) throw ConfigError("decontam needs at least one --eval file");
  NGramIndex index(opts.ngram);
  for (size_t src = 0; src < opts.eval_paths.size(); ++src) {
    std::ifstream in(opts.eval_paths[src]);
    if (!in) throw IoError("cannot read eval set " + opts.eval_paths[src].string());
    std::string line;
    uint32_t rec = 0;
    while (std::getline(in, line)) {
      index.add_record(line, static_cast<uint32_t>(src), rec++);
    }
  }
  std::ifstream in(opts.input);
  if (!in) throw IoError("cannot read training corpus " + opts.input.string());
  std::vector<std::string> records;
  std::string line;
  while (std::getline(in, line)) records.push_back(line);

  const FilterResult result = filter_records(records, index, opts.threads);

  std::ofstream kept(opts.kept_out);
  if (!kept) throw IoError("cannot write " + opts.kept_out.string());
  for (size_t i : result.kept) kept << records[i] << "\n";
  std::ofstream removed(opts.removed_out);
  if (!removed) throw IoError("cannot write " + opts.removed_out.string());
  for (const auto& r : result.removed) removed << records[r.record_index] << "\n";
  if (!opts.report_out.empty()) {
    std::ofstream report(opts.report_out);
    if (!report) throw IoError("cannot write " + opts.report_out.string());
    for (const auto& r : result.removed) {
      report << json{{"record", r.record_index},
                     {"window", r.window},
                     {"eval_source", opts.eval_paths[r.source.source_id].string()},
                     {"eval_record", r.source.record_id}}
                    .dump()
             << "\n";
    }
  }
  DecontamStats stats;
  stats.input_records = records.size();
  stats.kept = result.kept.size();
  stats.removed = result.removed.size();
  stats.index_grams = index.size();
  stats.tokens_seen = result.tokens_seen;
  return stats;
}

}  // namespace ssp
