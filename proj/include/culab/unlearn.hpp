#pragma once

#include <functional>
#include <string>
#include <vector>

#include "culab/eval.hpp"
#include "culab/extract.hpp"
#include "culab/losses.hpp"
#include "culab/model.hpp"
#include "culab/world.hpp"

namespace culab {

/// Which of the two alternating objectives run each epoch.
enum class unlearn_method { full, l1_only, l2_only };

struct unlearn_config {
    loss_kind loss = loss_kind::npo;
    unlearn_method method = unlearn_method::full;
    int max_epochs = 50;
    /// Evaluate and test the stopping rule every this many epochs.
    int grid_step = 5;
    /// Period of the reverse-cosine schedule; the learning rate reaches
    /// lr_max only at this epoch, so runs shorter than the period stay on
    /// the rising flank.
    int schedule_period = 200;
    double lr_min = 4e-7;
    double lr_max = 4e-5;
    /// Multiplier applied to both bounds; tuned per world scale. The
    /// default suits the default world's memorized model: both loss
    /// variants empty nearly every standard target within the epoch
    /// budget, and the stopped models pass the generation-level check.
    double lr_scale = 2.5e5;
    double beta = 0.1;
    extract_config extraction;
    /// Master seed for the per-epoch extraction streams.
    std::uint64_t seed = 0;
};

/// Learning rate at a 1-based epoch: rises from lr_min toward lr_max
/// along 1 - cos(epoch * pi / period), hitting both bounds exactly at the
/// ends. Epochs outside [0, period] are a configuration error; epoch 0 is
/// the curve's floor, before any step has been taken.
double lr_at(const unlearn_config& cfg, int epoch);

/// Progress callback events, mainly for tests that pin the phase order.
struct epoch_event {
    enum class phase { extracted, after_attr_step, after_sent_step, evaluated };
    int epoch = 0;
    phase what = phase::extracted;
    std::uint64_t params_checksum = 0;
    int n_pairs = 0; // extraction pair count, for phase::extracted
};
using observer_fn = std::function<void(const epoch_event&)>;

/// One evaluated snapshot: epoch 0 is the untouched starting model, then
/// one per stopping-grid visit.
struct checkpoint_record {
    int epoch = 0;
    double lr = 0.0;
    double attr_loss_value = 0.0; // NaN when that step did not run
    double sent_loss_value = 0.0; // NaN when that step did not run
    int extraction_proposals = 0;
    int extraction_accepted = 0;
    int extraction_invalid = 0;
    int extraction_unvalidated = 0;
    eval_report report;
};

struct run_result {
    model final_model;
    std::vector<checkpoint_record> checkpoints;
    /// Epoch after which the run stopped (0 means no update epoch ran).
    int stopped_epoch = 0;
    /// "metrics_zero", "empty_extraction", or "epoch_limit".
    std::string stop_reason;
    std::vector<double> lr_trace;        // per epoch, 1-based epoch t at [t-1]
    std::vector<double> attr_loss_trace; // NaN where the step was skipped
    std::vector<double> sent_loss_trace; // NaN where the step was skipped
};

/// The self-supervised unlearning loop. Sentences are extracted once from
/// the starting model; attributions are re-extracted from the drifting
/// model every epoch; each epoch applies the attribution step and then
/// the sentence step at that epoch's learning rate. Stops at the first
/// grid checkpoint where both target metrics have emptied out, when an
/// attribution-only run has nothing left to extract, or at the epoch
/// limit. The starting model itself is never modified. A nonempty others
/// list restricts the checkpoints' others columns to those entities.
run_result run_unlearning(const model& pre, const synthetic_world& world,
                          token_id target, const unlearn_config& cfg,
                          const probe_suite& suite, const observer_fn& observer = {},
                          const std::vector<token_id>& others = {});

/// Oracle-corpus baseline: the same schedule, stopping rule, and
/// bookkeeping, but each epoch descends the sentence loss over the
/// target's true explanatory sequences instead of anything extracted.
run_result run_corpus_baseline(const model& pre, const synthetic_world& world,
                               token_id target, const unlearn_config& cfg,
                               const probe_suite& suite,
                               const observer_fn& observer = {},
                               const std::vector<token_id>& others = {});

/// Prompt transform of the in-context baseline: [BOS, UNLEARN, target]
/// spliced in front of the prompt body. The prompt must start with BOS
/// and must not already carry the instruction (no double application).
token_seq icu_wrap(const vocab& voc, token_id target, const token_seq& prompt);

/// Evaluate the unmodified model behind the in-context instruction: every
/// probe prefix and generation prompt is wrapped, parameters stay
/// untouched.
eval_report evaluate_icu(const model& pre, const synthetic_world& world,
                         token_id target, const probe_suite& suite,
                         const std::vector<token_id>& others = {});

} // namespace culab
