#include "culab/losses.hpp"

#include <cmath>

#include "culab/errors.hpp"

namespace culab {

namespace {

double softplus(double x) {
    // log(1 + e^x) without overflow on either tail.
    return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0);
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_beta(double beta) {
    if (!(beta > 0.0)) throw config_error("beta must be > 0");
}

std::vector<scored_pair> as_pairs(const std::vector<token_seq>& sentences) {
    std::vector<scored_pair> pairs;
    pairs.reserve(sentences.size());
    for (const auto& seq : sentences) {
        if (seq.size() < 2)
            throw config_error("sentences need >= 2 tokens to be scored");
        pairs.push_back({{seq[0]}, token_seq(seq.begin() + 1, seq.end())});
    }
    return pairs;
}

double pair_loss(const model& m, const model& ref, loss_kind kind,
                 const std::vector<scored_pair>& pairs, double beta,
                 std::vector<double>* grad) {
    if (pairs.empty()) throw config_error("loss over an empty item set is undefined");
    if (kind == loss_kind::npo) check_beta(beta);
    if (grad && grad->size() != param_count(m.config))
        throw config_error("gradient buffer has wrong size");

    const double inv_n = 1.0 / double(pairs.size());
    double total = 0.0;
    for (const auto& p : pairs) {
        if (p.continuation.empty())
            throw config_error("scored pairs need a non-empty continuation");
        const double logp = cond_logprob(m, p.prefix, p.continuation);
        double item, weight;
        if (kind == loss_kind::ga) {
            item = logp;
            weight = inv_n;
        } else {
            const double delta = logp - cond_logprob(ref, p.prefix, p.continuation);
            item = npo_from_delta(delta, beta);
            weight = npo_slope(delta, beta) * inv_n;
        }
        total += item * inv_n;
        if (grad) accumulate_grad_cond_logprob(m, p.prefix, p.continuation, weight, *grad);
    }
    return total;
}

} // namespace

double npo_from_delta(double delta, double beta) {
    check_beta(beta);
    return (2.0 / beta) * softplus(beta * delta);
}

double npo_slope(double delta, double beta) {
    check_beta(beta);
    return 2.0 * sigmoid(beta * delta);
}

double attr_loss(const model& m, const model& ref, loss_kind kind,
                 const std::vector<scored_pair>& pairs, double beta) {
    return pair_loss(m, ref, kind, pairs, beta, nullptr);
}

double attr_loss_grad(const model& m, const model& ref, loss_kind kind,
                      const std::vector<scored_pair>& pairs, double beta,
                      std::vector<double>& grad) {
    return pair_loss(m, ref, kind, pairs, beta, &grad);
}

double sent_loss(const model& m, const model& ref, loss_kind kind,
                 const std::vector<token_seq>& sentences, double beta) {
    return pair_loss(m, ref, kind, as_pairs(sentences), beta, nullptr);
}

double sent_loss_grad(const model& m, const model& ref, loss_kind kind,
                      const std::vector<token_seq>& sentences, double beta,
                      std::vector<double>& grad) {
    return pair_loss(m, ref, kind, as_pairs(sentences), beta, &grad);
}

} // namespace culab
