#pragma once

#include <vector>

#include "culab/losses.hpp"
#include "culab/model.hpp"
#include "culab/rng.hpp"
#include "culab/world.hpp"

namespace culab {

/// How candidate relations are proposed when the model is asked what it
/// knows about an entity.
enum class proposal_mode {
    /// Sample a relation token from the model's own next-token
    /// distribution after [BOS, entity], then greedily complete an object.
    sampled,
    /// Walk the full relation list once, greedily completing each object.
    relation_aware,
};

struct extract_config {
    proposal_mode mode = proposal_mode::sampled;
    /// Sampling iterations for proposal_mode::sampled; 0 means the
    /// default of 4 per relation in the vocabulary.
    int n_proposals = 0;
    /// Sampling temperature for the relation draw.
    double temperature = 1.0;
};

struct extraction_stats {
    int proposals_made = 0;
    /// Proposals whose relation or object token had the wrong class.
    int dropped_invalid = 0;
    /// Class-valid proposals the reference model did not confirm.
    int dropped_unvalidated = 0;
    /// Confirmed proposals in acceptance order, duplicates kept. The
    /// multiset view is what precision metrics count over.
    std::vector<triplet_fact> accepted_multiset;
};

/// Confirm a candidate against the frozen reference model: its greedy
/// completion of [BOS, subject, relation] must equal the object. The
/// model being unlearned is never consulted here.
bool validate_triplet(const model& ref, const vocab& voc, const triplet_fact& t);

/// Render each triplet through every template of its relation that puts
/// the subject before the object, then split at the subject. The prefix
/// (through the entity) conditions the remainder, which carries the
/// object.
std::vector<scored_pair> convert_triplets(const synthetic_world& world,
                                          const std::vector<triplet_fact>& triplets);

struct attr_extraction {
    /// Accepted triplets, deduplicated and in canonical order.
    std::vector<triplet_fact> triplets;
    /// The converted conditional pairs for those triplets.
    std::vector<scored_pair> pairs;
    extraction_stats stats;
};

/// Ask the current model what it attributes to the entity and keep what
/// the reference confirms. Proposals come from `current` (which drifts
/// across unlearning epochs); confirmation only ever uses `ref`.
attr_extraction get_attr(const model& current, const model& ref,
                         const synthetic_world& world, token_id entity,
                         const extract_config& cfg, rng& gen);

/// Greedily decode one sequence per explanation seed
/// [BOS, TELL, entity, marker_i] from the reference model. A model that
/// memorized its corpus reproduces the entity's explanatory sequences
/// verbatim.
std::vector<token_seq> get_sent(const model& ref, const vocab& voc, token_id entity,
                                int n_groups);

} // namespace culab
