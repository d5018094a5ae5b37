#include "policy.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ssp {

void Vocabulary::validate() const {
  if (size < 2) throw ConfigError("vocabulary size must be >= 2");
  if (eos < 0 || eos >= size) throw ConfigError("end-of-sequence id out of range");
}

std::string to_string(ArchKind kind) {
  return kind == ArchKind::TabularSoftmax ? "tabular-softmax" : "linear-softmax";
}

ArchKind arch_kind_from_string(const std::string& s) {
  if (s == "tabular-softmax") return ArchKind::TabularSoftmax;
  if (s == "linear-softmax") return ArchKind::LinearSoftmax;
  throw ConfigError("unknown architecture kind: " + s);
}

namespace {

// linear feature layout, in order:
//   [0]                  bias
//   [1, 1+C)             response position, clamped to C-1
//   [1+C, 1+C+V+1)       previous token (slot V = start of response)
//   [..., +kPromptWindow*V)  prompt token at position j < kPromptWindow
//   [..., +kOpKinds*10)  task block: expected answer digit, gated on the
//                        op id in prompt[0] and on position 0
constexpr int32_t kPromptWindow = 6;
constexpr int32_t kOpKinds = 4;
constexpr int32_t kDerivedBlock = 10;

int32_t token_at(const TokenSeq& prompt, size_t i) {
  return i < prompt.size() ? prompt[i] : 0;
}

// expected answer digit of the synthetic problem encoding, or -1 when the
// op id is outside the known range
int32_t derived_digit(const TokenSeq& prompt) {
  const int64_t op = token_at(prompt, 0);
  if (op < 0 || op >= kOpKinds) return -1;
  const int64_t a = 10 * token_at(prompt, 1) + token_at(prompt, 2);
  const int64_t b = 10 * token_at(prompt, 3) + token_at(prompt, 4);
  switch (op) {
    case 0: return static_cast<int32_t>((a + b) % 10);
    case 1: return static_cast<int32_t>(((a - b) % 10 + 10) % 10);
    case 2: return static_cast<int32_t>((a * b) % 10);
    default: return static_cast<int32_t>((a + b) % 2);
  }
}

uint64_t hash_context(const TokenSeq& prompt, std::span<const int32_t> prefix_tail) {
  uint64_t h = kFnvOffset;
  for (int32_t t : prompt) h = fnv1a64_bytes(&t, sizeof(t), h);
  const uint8_t sep = 0xff;
  h = fnv1a64_bytes(&sep, 1, h);
  for (int32_t t : prefix_tail) h = fnv1a64_bytes(&t, sizeof(t), h);
  return h;
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

PolicyArchitecture PolicyArchitecture::tabular(Vocabulary v, int32_t context_length,
                                               int32_t table_size) {
  PolicyArchitecture a;
  a.kind = ArchKind::TabularSoftmax;
  a.vocab = v;
  a.context_length = context_length;
  a.table_size = table_size;
  a.validate();
  return a;
}

PolicyArchitecture PolicyArchitecture::linear(Vocabulary v, int32_t context_length) {
  PolicyArchitecture a;
  a.kind = ArchKind::LinearSoftmax;
  a.vocab = v;
  a.context_length = context_length;
  a.feature_dim = linear_feature_dim(v.size, context_length);
  a.validate();
  return a;
}

int32_t PolicyArchitecture::linear_feature_dim(int32_t vocab_size, int32_t context_length) {
  return 1 + context_length + (vocab_size + 1) + kPromptWindow * vocab_size +
         kOpKinds * kDerivedBlock;
}

int64_t PolicyArchitecture::param_count() const {
  const int64_t width = kind == ArchKind::TabularSoftmax ? table_size : feature_dim;
  return width * static_cast<int64_t>(vocab.size);
}

void PolicyArchitecture::validate() const {
  vocab.validate();
  if (context_length < 1) throw ConfigError("context_length must be >= 1");
  if (kind == ArchKind::TabularSoftmax) {
    if (table_size < 1) throw ConfigError("tabular-softmax requires table_size >= 1");
  } else {
    if (feature_dim != linear_feature_dim(vocab.size, context_length)) {
      throw ConfigError("linear-softmax feature_dim does not match the fixed layout");
    }
  }
}

PolicyEval::PolicyEval(const PolicyArchitecture& arch, const ParamVector& params)
    : arch_(&arch), params_(params.data()) {
  if (static_cast<int64_t>(params.size()) != arch.param_count()) {
    throw InvalidArgumentError("parameter vector does not match architecture");
  }
}

void PolicyEval::state(const TokenSeq& prompt, std::span<const int32_t> prefix, int32_t pos,
                       StateRef& out) const {
  const auto& a = *arch_;
  const int32_t V = a.vocab.size;
  if (a.kind == ArchKind::TabularSoftmax) {
    const size_t window = static_cast<size_t>(a.context_length - 1);
    const size_t keep = std::min(prefix.size(), window);
    out.row = static_cast<int32_t>(hash_context(prompt, prefix.subspan(prefix.size() - keep)) %
                                   static_cast<uint64_t>(a.table_size));
    return;
  }
  out.row = -1;
  out.feats.clear();
  out.feats.push_back(0);
  out.feats.push_back(1 + std::min(pos, a.context_length - 1));
  const int32_t prev = prefix.empty() ? V : prefix.back();
  int32_t off = 1 + a.context_length;
  out.feats.push_back(off + prev);
  off += V + 1;
  const int32_t pw = std::min<int32_t>(kPromptWindow, static_cast<int32_t>(prompt.size()));
  for (int32_t j = 0; j < pw; ++j) out.feats.push_back(off + j * V + prompt[j]);
  off += kPromptWindow * V;
  if (pos == 0 && !prompt.empty()) {
    const int32_t d = derived_digit(prompt);
    if (d >= 0) out.feats.push_back(off + prompt[0] * kDerivedBlock + d);
  }
}

void PolicyEval::logits(const StateRef& s, std::span<double> out) const {
  const int32_t V = arch_->vocab.size;
  if (arch_->kind == ArchKind::TabularSoftmax) {
    const double* row = params_ + static_cast<int64_t>(s.row) * V;
    std::copy(row, row + V, out.begin());
    return;
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (int32_t f : s.feats) {
    const double* row = params_ + static_cast<int64_t>(f) * V;
    for (int32_t v = 0; v < V; ++v) out[v] += row[v];
  }
}

void PolicyEval::log_probs(const StateRef& s, std::span<double> out) const {
  logits(s, out);
  log_softmax_inplace(out);
}

void PolicyEval::accumulate_logit_grad(const StateRef& s, std::span<const double> dlogits,
                                       double coef, ParamVector& grad) const {
  const int32_t V = arch_->vocab.size;
  if (arch_->kind == ArchKind::TabularSoftmax) {
    double* row = grad.data() + static_cast<int64_t>(s.row) * V;
    for (int32_t v = 0; v < V; ++v) row[v] += coef * dlogits[v];
    return;
  }
  for (int32_t f : s.feats) {
    double* row = grad.data() + static_cast<int64_t>(f) * V;
    for (int32_t v = 0; v < V; ++v) row[v] += coef * dlogits[v];
  }
}

ParamVector init_params(const PolicyArchitecture& arch, uint64_t seed, double scale) {
  arch.validate();
  if (scale < 0) throw InvalidArgumentError("init scale must be >= 0");
  ParamVector p(arch.param_count(), 0.0);
  if (scale == 0.0) return p;
  std::mt19937_64 rng(seed);
  for (double& v : p) v = scale * (2.0 * uniform01(rng) - 1.0);
  return p;
}

void check_tokens(const Vocabulary& vocab, const TokenSeq& seq, const char* what) {
  for (int32_t t : seq) {
    if (t < 0 || t >= vocab.size) {
      throw InvalidArgumentError(std::string(what) + ": token id out of range");
    }
  }
}

LogProbTrace logprob(const PolicyArchitecture& arch, const ParamVector& params,
                     const TokenSeq& prompt, const TokenSeq& response) {
  check_tokens(arch.vocab, prompt, "prompt");
  check_tokens(arch.vocab, response, "response");
  if (response.empty()) throw InvalidArgumentError("response must be non-empty");
  PolicyEval eval(arch, params);
  LogProbTrace trace;
  trace.per_token.reserve(response.size());
  std::vector<double> lp(arch.vocab.size);
  StateRef s;
  for (size_t t = 0; t < response.size(); ++t) {
    eval.state(prompt, std::span<const int32_t>(response.data(), t), static_cast<int32_t>(t), s);
    eval.log_probs(s, lp);
    trace.per_token.push_back(lp[response[t]]);
    trace.total += trace.per_token.back();
  }
  return trace;
}

SampleResult sample(const PolicyArchitecture& arch, const ParamVector& params,
                    const TokenSeq& prompt, double temperature, int32_t max_len,
                    uint64_t seed) {
  check_tokens(arch.vocab, prompt, "prompt");
  if (!(temperature > 0)) throw InvalidArgumentError("temperature must be > 0");
  if (max_len < 1) throw InvalidArgumentError("max_len must be >= 1");
  PolicyEval eval(arch, params);
  std::mt19937_64 rng(seed);
  const int32_t V = arch.vocab.size;
  std::vector<double> logits(V), tempered(V), probs(V), lp(V);
  SampleResult out;
  StateRef s;
  for (int32_t pos = 0; pos < max_len; ++pos) {
    eval.state(prompt, out.response, pos, s);
    eval.logits(s, logits);
    int32_t tok;
    if (pos == max_len - 1) {
      tok = arch.vocab.eos;  // truncation: force termination
    } else {
      for (int32_t v = 0; v < V; ++v) tempered[v] = logits[v] / temperature;
      softmax(tempered, probs);
      const double u = uniform01(rng);
      double acc = 0.0;
      tok = V - 1;
      for (int32_t v = 0; v < V; ++v) {
        acc += probs[v];
        if (u < acc) {
          tok = v;
          break;
        }
      }
    }
    std::copy(logits.begin(), logits.end(), lp.begin());
    log_softmax_inplace(lp);
    out.response.push_back(tok);
    out.trace.per_token.push_back(lp[tok]);
    out.trace.total += lp[tok];
    if (tok == arch.vocab.eos) break;
  }
  return out;
}

SftResult sft_loss_and_grad(const PolicyArchitecture& arch, const ParamVector& params,
                            std::span<const SftBatchItem> batch) {
  if (batch.empty()) throw InvalidArgumentError("sft batch must be non-empty");
  PolicyEval eval(arch, params);
  const int32_t V = arch.vocab.size;
  SftResult res;
  res.grad.assign(params.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  std::vector<double> lp(V), dlogits(V);
  StateRef s;
  for (const auto& item : batch) {
    check_tokens(arch.vocab, item.prompt, "prompt");
    check_tokens(arch.vocab, item.response, "response");
    for (size_t t = 0; t < item.response.size(); ++t) {
      eval.state(item.prompt, std::span<const int32_t>(item.response.data(), t),
                 static_cast<int32_t>(t), s);
      eval.log_probs(s, lp);
      const int32_t y = item.response[t];
      res.loss -= inv_n * lp[y];
      // d(-log pi)/d logits = softmax - onehot
      for (int32_t v = 0; v < V; ++v) dlogits[v] = std::exp(lp[v]);
      dlogits[y] -= 1.0;
      eval.accumulate_logit_grad(s, dlogits, inv_n, res.grad);
    }
  }
  return res;
}

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr) {
  if (params.size() != grad.size()) throw InvalidArgumentError("sgd_step: dimension mismatch");
  if (!std::isfinite(lr)) throw InvalidArgumentError("sgd_step: lr must be finite");
  ParamVector out(params.size());
  for (size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
  return out;
}

double clip_grad_norm(ParamVector& grad, double max_norm) {
  const double n = norm2(grad);
  if (max_norm > 0 && n > max_norm) {
    const double scale = max_norm / n;
    for (double& g : grad) g *= scale;
  }
  return n;
}

}  // namespace ssp
