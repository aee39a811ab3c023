#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "culab/rng.hpp"
#include "culab/world.hpp"

namespace culab {

/// Shape of the sequence model. The architecture is a decoder-only
/// transformer with pre-RMSNorm blocks, multi-head causal attention, a
/// ReLU feed-forward of width 4*hidden_dim, and an untied output layer.
/// It carries no positional parameters: with the short, class-disjoint
/// sequences of these worlds, the attended token multiset determines the
/// continuation, and content-only addressing keeps predictions stable
/// when prompts are shifted by inserted prefix tokens.
struct model_config {
    int vocab_size = 0;
    int context_window = 32;
    int hidden_dim = 64;
    int n_layers = 1;
    std::uint64_t seed = 1;
};

struct model {
    model_config config;
    std::vector<double> params; // flat, layout described in model.cpp
};

/// Closed-form parameter count for a config:
///   vocab*hidden (embedding) + layers*12*hidden^2 + hidden*vocab (output).
std::size_t param_count(const model_config& config);

/// Number of attention heads: the largest of 4, 2, 1 dividing hidden_dim.
int n_heads(const model_config& config);

/// Fresh parameters, normal(0, 0.08^2), deterministic in config.seed.
model init_model(const model_config& config);

/// Probability distribution over the next token after a non-empty prefix.
std::vector<double> next_token_dist(const model& m, const token_seq& prefix);

/// Sum of log-probabilities of continuation tokens given the prefix.
/// An empty continuation scores 0 (log of the empty product).
double cond_logprob(const model& m, const token_seq& prefix, const token_seq& continuation);

/// Log-probability of tokens seq[1..] given seq[0].
double seq_logprob(const model& m, const token_seq& seq);

/// Gradient of cond_logprob with respect to every parameter.
std::vector<double> grad_cond_logprob(const model& m, const token_seq& prefix,
                                      const token_seq& continuation);

/// Add scale * d(cond_logprob)/d(theta) into grad; returns cond_logprob.
/// grad must already have param_count entries.
double accumulate_grad_cond_logprob(const model& m, const token_seq& prefix,
                                    const token_seq& continuation, double scale,
                                    std::vector<double>& grad);

/// Append up to max_new argmax tokens (ties break toward the lowest id),
/// stopping after eos_id is emitted or the context window fills.
token_seq greedy_decode(const model& m, const token_seq& prefix, int max_new,
                        token_id eos_id = 1);

/// Append up to max_new tokens drawn from the temperature-scaled next-token
/// distribution, advancing the caller's generator state.
token_seq sample_decode(const model& m, const token_seq& prefix, double temperature,
                        rng& gen, int max_new, token_id eos_id = 1);

/// Plain full-batch gradient descent on the mean per-token negative
/// log-likelihood of the corpus. Returns the loss measured at the start of
/// each epoch. Throws numeric_error naming the epoch if the loss turns
/// non-finite.
std::vector<double> finetune(model& m, const std::vector<token_seq>& corpus,
                             int epochs, double learning_rate);

/// Mean per-token negative log-likelihood over a corpus.
double corpus_nll(const model& m, const std::vector<token_seq>& corpus);

/// Binary checkpoint: fixed header (magic, config) + little-endian raw
/// doubles. load(save(m)) reproduces the parameter vector bit for bit.
void save_model(const std::string& path, const model& m);
model load_model(const std::string& path);

/// FNV-1a over the raw parameter bytes; used to assert immutability.
std::uint64_t params_checksum(const model& m);

} // namespace culab
