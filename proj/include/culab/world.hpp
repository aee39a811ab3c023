#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace culab {

using token_id = std::int32_t;
using token_seq = std::vector<token_id>;

enum class token_class : std::uint8_t { special, entity, relation, attribute };

/// Closed vocabulary over one generated world. Ids are dense: the named
/// specials first, then explanation group markers, then entities,
/// relations, and attributes.
struct vocab {
    std::vector<std::string> names;
    std::vector<token_class> classes;

    token_id bos = 0;
    token_id eos = 1;
    token_id sep = 2;
    token_id mask = 3;
    token_id tell = 4;
    token_id unlearn = 5;

    std::vector<token_id> group_markers;
    std::vector<token_id> entities;
    std::vector<token_id> relations;
    std::vector<token_id> attributes;

    int size() const { return int(names.size()); }

    token_class class_of(token_id id) const;
    const std::string& name_of(token_id id) const;

    /// Resolve a token by name; throws lookup_error for unknown names.
    token_id find(const std::string& name) const;

    bool is_entity(token_id id) const { return class_of(id) == token_class::entity; }
    bool is_relation(token_id id) const { return class_of(id) == token_class::relation; }
    bool is_attribute(token_id id) const { return class_of(id) == token_class::attribute; }

    /// Rebuild the name lookup index after names were assigned.
    void rebuild_index();

private:
    std::unordered_map<std::string, token_id> by_name_;
};

/// Assemble a vocabulary with the standard id layout.
vocab build_vocab(int n_entities, int n_relations, int n_attributes, int n_group_markers);

/// One (subject, relation, object) statement. Relations are functional:
/// a world never holds two facts with the same subject and relation.
struct triplet_fact {
    token_id subject = -1;
    token_id relation = -1;
    token_id object = -1;

    auto operator<=>(const triplet_fact&) const = default;
};

/// Word-order pattern for rendering one fact as a sentence. Slots name
/// which token goes where; BOS/EOS/SEP slots render as those specials.
struct sentence_template {
    enum class slot : std::uint8_t { bos, eos, sep, subj, rel, obj };

    token_id relation = -1;
    int index = -1; // position within the relation's template list
    std::vector<slot> layout;

    bool subject_last() const;
    bool object_last() const;
    bool subject_before_object() const;
};

struct world_spec {
    int n_entities = 30;
    int n_relations = 12;
    int n_attributes = 16;
    // Every relation assigned to every entity: with no unassigned pairs, a
    // memorized model's answer at [BOS, s, r] is decisive for any candidate
    // triplet, which keeps extraction validation an exact oracle.
    int facts_per_entity = 12;
    int templates_per_relation = 3;
    int n_utility_entities = 10;
    /// Facts per explanatory sentence group (how many statements one
    /// "tell me about X" answer packs together).
    int explanatory_group_size = 4;
    std::uint64_t seed = 7;
};

/// A fully materialized knowledge world: vocabulary, fact set, rendering
/// templates, and the reserved utility entities.
struct synthetic_world {
    world_spec spec;
    vocab voc;
    std::vector<triplet_fact> facts; // sorted by (subject, relation)
    std::vector<sentence_template> templates; // [relation * per_rel + i]
    std::vector<token_id> utility_entities;

    const sentence_template& template_of(token_id relation, int index) const;
    int templates_per_relation() const { return spec.templates_per_relation; }

    /// Number of explanation groups per entity under the spec's group size.
    int n_explanatory_groups() const;
};

/// Deterministically generate a world from its spec. Same spec (including
/// seed) reproduces the identical world bit for bit.
synthetic_world generate_world(const world_spec& spec);

/// All facts whose subject is the given entity, in canonical order.
/// This is the unlearning set for that entity.
std::vector<triplet_fact> target_slice(const synthetic_world& world, token_id entity);

/// Render one fact through one of its relation's templates.
token_seq render_triplet(const synthetic_world& world, const triplet_fact& fact,
                         int template_index);

/// Render an entity's facts as explanatory sequences: the facts are split
/// into groups of group_size (last group may be short) and each group
/// becomes one [BOS, TELL, entity, marker_i, r, o, SEP, r, o, ..., EOS]
/// sequence. The marker token identifies the group so that decoding from
/// a marked prefix reproduces exactly one group.
std::vector<token_seq> render_explanatory(const synthetic_world& world,
                                          token_id entity, int group_size);

/// Split a sequence at the first occurrence of the entity: prefix keeps
/// everything up to and including the entity, suffix is the rest.
std::pair<token_seq, token_seq> split_at_entity(const token_seq& seq, token_id entity);

/// On-disk record for one entity: masked sentences plus its attributions.
struct dataset_record {
    std::string subject;
    std::vector<std::string> sentences;
    std::string subj_id;
    std::vector<std::array<std::string, 3>> attributions;
};

/// One imported record, resolved back against a vocabulary. Sentences keep
/// the mask token at masked positions; mask_positions lists them per
/// sentence.
struct imported_record {
    token_id subject = -1;
    std::vector<token_seq> sentences;
    std::vector<std::vector<int>> mask_positions;
    std::vector<triplet_fact> attributions;
};

/// Build the export records for every entity: each entity's explanatory
/// sentences with the subject replaced by the literal "[MASK]" marker,
/// plus its attribution triples as token-name strings.
std::vector<dataset_record> export_dataset(const synthetic_world& world);

/// Resolve records against a vocabulary into evaluation probe inputs.
/// Throws schema_error naming the field path for malformed records.
std::vector<imported_record> import_dataset(const std::vector<dataset_record>& records,
                                            const vocab& voc);

/// Serialize records to / parse records from the JSON dataset format.
std::string dataset_to_json(const std::vector<dataset_record>& records);
std::vector<dataset_record> dataset_from_json(const std::string& text);

void write_dataset_file(const std::string& path, const std::vector<dataset_record>& records);
std::vector<dataset_record> read_dataset_file(const std::string& path);

/// The full pretraining corpus: every fact rendered through every one of
/// its relation's templates, then every entity's explanatory sequences.
std::vector<token_seq> build_training_corpus(const synthetic_world& world);

/// Render a token sequence as a space-joined string of token names.
std::string render_text(const vocab& voc, const token_seq& seq);

/// World (de)serialization: a self-contained JSON document carrying the
/// spec, vocabulary, facts, and utility set.
std::string world_to_json(const synthetic_world& world);
synthetic_world world_from_json(const std::string& text);
void write_world_file(const std::string& path, const synthetic_world& world);
synthetic_world read_world_file(const std::string& path);

} // namespace culab
