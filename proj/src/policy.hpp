#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace ssp {

struct Vocabulary {
  int32_t size = 0;    // token ids are 0..size-1
  int32_t eos = 0;     // end-of-sequence id
  void validate() const;
  bool operator==(const Vocabulary&) const = default;
};

enum class ArchKind { TabularSoftmax, LinearSoftmax };

std::string to_string(ArchKind kind);
ArchKind arch_kind_from_string(const std::string& s);

// Two hand-rolled softmax policy families with analytic gradients.
//
// tabular-softmax: one independent logit row per context; the context is the
// full prompt plus the trailing window (context_length - 1 tokens) of the
// generated prefix, hashed into `table_size` rows.
//
// linear-softmax: logits are a linear map of sparse indicator features of
// (prompt, previous token, position). The feature layout is fixed and its
// dimension is a function of (vocab size, context length); see
// linear_feature_dim(). It includes task-aware blocks keyed on the synthetic
// problem encoding so the family can represent the bundled task universe.
struct PolicyArchitecture {
  ArchKind kind = ArchKind::TabularSoftmax;
  Vocabulary vocab;
  int32_t context_length = 1;
  int32_t table_size = 0;   // tabular only
  int32_t feature_dim = 0;  // linear only; always linear_feature_dim(vocab, context)

  static PolicyArchitecture tabular(Vocabulary v, int32_t context_length, int32_t table_size);
  static PolicyArchitecture linear(Vocabulary v, int32_t context_length);
  static int32_t linear_feature_dim(int32_t vocab_size, int32_t context_length);

  int64_t param_count() const;
  void validate() const;
  bool operator==(const PolicyArchitecture&) const = default;
};

using ParamVector = std::vector<double>;
using TokenSeq = std::vector<int32_t>;

struct LogProbTrace {
  std::vector<double> per_token;  // log pi(y_t | prompt, y_<t>), all <= 0
  double total = 0.0;             // sum of per_token
};

// One evaluation state: the parameter slice that feeds the logits of the
// next-token distribution at some (prompt, prefix, position).
struct StateRef {
  int32_t row = -1;             // tabular
  std::vector<int32_t> feats;   // linear: active indicator features
};

// Binds an architecture to a parameter vector for repeated evaluation.
class PolicyEval {
 public:
  PolicyEval(const PolicyArchitecture& arch, const ParamVector& params);

  const PolicyArchitecture& arch() const { return *arch_; }

  // state of the next-token distribution after `pos` generated tokens
  void state(const TokenSeq& prompt, std::span<const int32_t> prefix, int32_t pos,
             StateRef& out) const;

  void logits(const StateRef& s, std::span<double> out) const;  // size vocab
  void log_probs(const StateRef& s, std::span<double> out) const;

  // grad += coef * J^T dlogits, where J is d logits / d params at state s
  void accumulate_logit_grad(const StateRef& s, std::span<const double> dlogits,
                             double coef, ParamVector& grad) const;

 private:
  const PolicyArchitecture* arch_;
  const double* params_;
};

ParamVector init_params(const PolicyArchitecture& arch, uint64_t seed, double scale);

LogProbTrace logprob(const PolicyArchitecture& arch, const ParamVector& params,
                     const TokenSeq& prompt, const TokenSeq& response);

struct SampleResult {
  TokenSeq response;
  LogProbTrace trace;  // untempered model log-probs of the sampled tokens
};

// Autoregressive sampling from the temperature-scaled softmax. Stops at the
// end-of-sequence token; if max_len is reached first, the final token is a
// forced end-of-sequence whose (untempered) log-prob is still recorded.
SampleResult sample(const PolicyArchitecture& arch, const ParamVector& params,
                    const TokenSeq& prompt, double temperature, int32_t max_len,
                    uint64_t seed);

struct SftBatchItem {
  TokenSeq prompt;
  TokenSeq response;
};

struct SftResult {
  double loss = 0.0;  // mean over the batch of -log pi(y|x)
  ParamVector grad;
};

SftResult sft_loss_and_grad(const PolicyArchitecture& arch, const ParamVector& params,
                            std::span<const SftBatchItem> batch);

ParamVector sgd_step(const ParamVector& params, const ParamVector& grad, double lr);

// Scales grad in place so its 2-norm is at most max_norm (no-op if max_norm <= 0).
// Returns the pre-clip norm.
double clip_grad_norm(ParamVector& grad, double max_norm);

void check_tokens(const Vocabulary& vocab, const TokenSeq& seq, const char* what);

}  // namespace ssp
