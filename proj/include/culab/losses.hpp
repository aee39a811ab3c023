#pragma once

#include <vector>

#include "culab/model.hpp"

namespace culab {

enum class loss_kind { ga, npo };

/// One scored item: the log-probability of continuation given prefix.
struct scored_pair {
    token_seq prefix;
    token_seq continuation;
};

/// Preference-style penalty as a function of delta = logp - logp_ref:
///   (2/beta) * softplus(beta * delta)
/// evaluated in the overflow-safe form, so |delta| up to hundreds stays
/// finite. Increasing in delta; slope 2*sigmoid(beta*delta), hence exactly
/// 1 at delta = 0.
double npo_from_delta(double delta, double beta);

/// d(npo_from_delta)/d(delta) = 2 * sigmoid(beta * delta).
double npo_slope(double delta, double beta);

/// Mean per-item loss over attribution pairs. For ga the loss is the mean
/// conditional log-probability itself (descending it pushes probability
/// down); for npo each item is npo_from_delta against the frozen
/// reference. Throws config_error on an empty set.
double attr_loss(const model& m, const model& ref, loss_kind kind,
                 const std::vector<scored_pair>& pairs, double beta);

/// Same loss, also accumulating d(loss)/d(params) into grad (which must
/// hold param_count(m.config) zeros or a running total).
double attr_loss_grad(const model& m, const model& ref, loss_kind kind,
                      const std::vector<scored_pair>& pairs, double beta,
                      std::vector<double>& grad);

/// Sentence variants: each sequence is scored as its tokens after the
/// first, conditioned on the first.
double sent_loss(const model& m, const model& ref, loss_kind kind,
                 const std::vector<token_seq>& sentences, double beta);
double sent_loss_grad(const model& m, const model& ref, loss_kind kind,
                      const std::vector<token_seq>& sentences, double beta,
                      std::vector<double>& grad);

} // namespace culab
