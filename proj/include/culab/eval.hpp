#pragma once

#include <vector>

#include "culab/extract.hpp"
#include "culab/model.hpp"
#include "culab/world.hpp"

namespace culab {

/// One restricted probe: the model under test answers with its argmax
/// continuation of prefix; the probe passes when that equals target.
struct probe {
    token_seq prefix;
    token_id target = -1;
};

struct entity_probes {
    std::vector<probe> node; // does the model still name the entity?
    std::vector<probe> edge; // does it still attribute the entity's facts?
};

/// Probe sets for every entity, restricted once against the reference
/// model: only probes the reference answers correctly are kept, so the
/// reference scores exactly 1 on every kept set. Build once per run and
/// reuse at every checkpoint.
struct probe_suite {
    std::vector<entity_probes> per_entity; // indexed like voc.entities
    int node_built = 0;
    int node_kept = 0;
    int edge_built = 0;
    int edge_kept = 0;

    const entity_probes& of(const vocab& voc, token_id entity) const;
};

/// Node probes are the subject-final template renderings (predict the
/// subject from the rest) plus the explanation opener [BOS, TELL] with
/// the entity as target. Edge probes are the object-final renderings
/// (predict the object after subject and relation appeared).
probe_suite build_probes(const synthetic_world& world, const model& ref);

/// Accuracy over a probe set. An empty set leaves the value at its
/// vacuous unit default with defined = false; callers treating these as
/// satisfied thresholds must check the flag.
struct accuracy_result {
    double value = 1.0;
    bool defined = false;
};

accuracy_result probe_accuracy(const model& m, const std::vector<probe>& probes);

/// Concatenate one probe kind over a set of entities.
enum class probe_kind { node, edge };
std::vector<probe> collect_probes(const probe_suite& suite, const vocab& voc,
                                  const std::vector<token_id>& entities,
                                  probe_kind kind);

/// Which of the candidate facts are realized inside the text: a fact
/// counts as present when one of its template interiors (the rendering
/// stripped of BOS/EOS) occurs as a contiguous run.
std::vector<triplet_fact> realized_facts(const synthetic_world& world,
                                         const std::vector<triplet_fact>& candidates,
                                         const token_seq& text);

struct cu_violation {
    token_seq prompt;
    triplet_fact fact;
};

/// Generation-level check of the unlearning definition: over a standard
/// prompt suite (bare opener, entity mention, explanation seeds, and every
/// object-final probe prefix), greedy continuations must not realize any
/// target fact that the prompt itself did not already realize.
struct cu_check_result {
    int prompts = 0;
    int violations = 0;
    std::vector<cu_violation> details;
};

/// The standard generation prompts for one entity: bare opener, entity
/// mention, one explanation seed per group, and every object-final
/// template prefix of the entity's facts.
std::vector<token_seq> cu_prompts(const synthetic_world& world, token_id entity);

/// The generation check over an explicit prompt list.
cu_check_result cu_check_over(const model& m, const synthetic_world& world,
                              token_id entity, const std::vector<token_seq>& prompts);

cu_check_result cu_check(const model& m, const synthetic_world& world, token_id entity);

/// The target facts the reference model actually holds: the slice
/// filtered by reference confirmation. Extraction quality is measured
/// against this set, not the raw world slice.
std::vector<triplet_fact> memorized_facts(const model& ref, const synthetic_world& world,
                                          token_id entity);

/// Knowledge-recovery quality of one extraction against the memorized
/// set. Coverage dedupes the accepted triplets; precision counts the
/// accepted multiset, so re-proposals of wrong triplets keep hurting.
struct kg_metrics {
    accuracy_result coverage;
    accuracy_result precision;
    int n_memorized = 0;
    int n_accepted_unique = 0;
    int n_accepted_total = 0;
};

kg_metrics kg_eval(const extraction_stats& stats,
                   const std::vector<triplet_fact>& memorized);

/// Welch's t statistic for unequal variances (sample variances with n-1).
/// Requires two observations per side; throws numeric_error when both
/// variances vanish.
double welch_t(const std::vector<double>& a, const std::vector<double>& b);

/// The metric bundle reported at every checkpoint. "Others" are the
/// non-target, non-utility entities; utility entities are scored on edge
/// probes only.
struct eval_report {
    accuracy_result target_node;
    accuracy_result target_edge;
    accuracy_result others_node;
    accuracy_result others_edge;
    accuracy_result utility_edge;
    int cu_prompts = 0;
    int cu_violations = 0;
};

/// An empty others list means every non-target, non-utility entity; a
/// nonempty list restricts the others columns to exactly those entities
/// (each must be a non-target, non-utility entity).
eval_report evaluate(const model& m, const synthetic_world& world, token_id target,
                     const probe_suite& suite,
                     const std::vector<token_id>& others = {});

} // namespace culab
