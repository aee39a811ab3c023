#include "culab/world.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "culab/errors.hpp"
#include "culab/rng.hpp"

namespace culab {

using nlohmann::json;

token_class vocab::class_of(token_id id) const {
    if (id < 0 || id >= size())
        throw lookup_error("token id out of range: " + std::to_string(id));
    return classes[std::size_t(id)];
}

const std::string& vocab::name_of(token_id id) const {
    if (id < 0 || id >= size())
        throw lookup_error("token id out of range: " + std::to_string(id));
    return names[std::size_t(id)];
}

token_id vocab::find(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw lookup_error("unknown token name: '" + name + "'");
    return it->second;
}

void vocab::rebuild_index() {
    by_name_.clear();
    for (token_id id = 0; id < size(); ++id) by_name_[names[std::size_t(id)]] = id;
}

bool sentence_template::subject_last() const {
    for (auto it = layout.rbegin(); it != layout.rend(); ++it) {
        if (*it == slot::eos) continue;
        return *it == slot::subj;
    }
    return false;
}

bool sentence_template::object_last() const {
    for (auto it = layout.rbegin(); it != layout.rend(); ++it) {
        if (*it == slot::eos) continue;
        return *it == slot::obj;
    }
    return false;
}

bool sentence_template::subject_before_object() const {
    for (const auto s : layout) {
        if (s == slot::subj) return true;
        if (s == slot::obj) return false;
    }
    return false;
}

namespace {

using slot = sentence_template::slot;

// Fixed word-order repertoire. The first two entries guarantee that every
// relation gets at least one object-final and one subject-final rendering.
const std::vector<std::vector<slot>>& layout_table() {
    static const std::vector<std::vector<slot>> table = {
        {slot::bos, slot::subj, slot::rel, slot::obj, slot::eos},
        {slot::bos, slot::rel, slot::obj, slot::sep, slot::subj, slot::eos},
        {slot::bos, slot::rel, slot::subj, slot::obj, slot::eos},
        {slot::bos, slot::obj, slot::rel, slot::sep, slot::subj, slot::eos},
        {slot::bos, slot::subj, slot::sep, slot::rel, slot::obj, slot::eos},
        {slot::bos, slot::obj, slot::sep, slot::rel, slot::subj, slot::eos},
    };
    return table;
}

void check_spec(const world_spec& s) {
    auto positive = [](int value, const char* name) {
        if (value < 1)
            throw config_error(std::string(name) + " must be >= 1, got " + std::to_string(value));
    };
    positive(s.n_entities, "n_entities");
    positive(s.n_relations, "n_relations");
    positive(s.n_attributes, "n_attributes");
    positive(s.facts_per_entity, "facts_per_entity");
    positive(s.explanatory_group_size, "explanatory_group_size");
    if (s.n_utility_entities < 0 || s.n_utility_entities >= s.n_entities)
        throw config_error("n_utility_entities must be in [0, n_entities), got " +
                           std::to_string(s.n_utility_entities));
    if (s.facts_per_entity > s.n_relations)
        throw config_error("facts_per_entity (" + std::to_string(s.facts_per_entity) +
                           ") exceeds n_relations (" + std::to_string(s.n_relations) +
                           "); relations hold one object per subject");
    if (s.templates_per_relation < 2 || s.templates_per_relation > int(layout_table().size()))
        throw config_error("templates_per_relation must be in [2, " +
                           std::to_string(layout_table().size()) +
                           "] so every relation keeps subject-final and object-final forms");
}

} // namespace

vocab build_vocab(int n_entities, int n_relations, int n_attributes, int n_group_markers) {
    vocab v;
    v.names = {"<bos>", "<eos>", "<sep>", "[MASK]", "<tell>", "<unlearn>"};
    v.classes.assign(v.names.size(), token_class::special);

    auto add = [&v](const std::string& name, token_class cls) {
        v.names.push_back(name);
        v.classes.push_back(cls);
        return token_id(v.names.size() - 1);
    };
    for (int i = 0; i < n_group_markers; ++i)
        v.group_markers.push_back(add("<g" + std::to_string(i) + ">", token_class::special));
    for (int i = 0; i < n_entities; ++i)
        v.entities.push_back(add("E" + std::to_string(i), token_class::entity));
    for (int i = 0; i < n_relations; ++i)
        v.relations.push_back(add("R" + std::to_string(i), token_class::relation));
    for (int i = 0; i < n_attributes; ++i)
        v.attributes.push_back(add("A" + std::to_string(i), token_class::attribute));

    v.rebuild_index();
    return v;
}

int synthetic_world::n_explanatory_groups() const {
    return (spec.facts_per_entity + spec.explanatory_group_size - 1) /
           spec.explanatory_group_size;
}

const sentence_template& synthetic_world::template_of(token_id relation, int index) const {
    if (index < 0 || index >= spec.templates_per_relation)
        throw config_error("template index out of range: " + std::to_string(index));
    const auto rel_it = std::find(voc.relations.begin(), voc.relations.end(), relation);
    if (rel_it == voc.relations.end())
        throw lookup_error("not a relation token: " + std::to_string(relation));
    const std::size_t rel_pos = std::size_t(rel_it - voc.relations.begin());
    return templates[rel_pos * std::size_t(spec.templates_per_relation) + std::size_t(index)];
}

synthetic_world generate_world(const world_spec& spec) {
    check_spec(spec);

    synthetic_world world;
    world.spec = spec;
    // Markers must cover the finest possible grouping (one fact per group).
    world.voc = build_vocab(spec.n_entities, spec.n_relations, spec.n_attributes,
                            spec.facts_per_entity);

    for (const token_id rel : world.voc.relations) {
        for (int i = 0; i < spec.templates_per_relation; ++i) {
            sentence_template t;
            t.relation = rel;
            t.index = i;
            t.layout = layout_table()[std::size_t(i)];
            world.templates.push_back(std::move(t));
        }
    }

    rng gen(spec.seed);
    std::vector<token_id> relation_pool = world.voc.relations;
    for (const token_id entity : world.voc.entities) {
        // Draw a distinct relation subset per entity, then assign objects in
        // canonical relation order so the draw sequence is reproducible.
        std::vector<token_id> chosen = relation_pool;
        for (std::size_t i = chosen.size() - 1; i > 0; --i) {
            const std::size_t j = std::size_t(gen.uniform_int(i + 1));
            std::swap(chosen[i], chosen[j]);
        }
        chosen.resize(std::size_t(spec.facts_per_entity));
        std::sort(chosen.begin(), chosen.end());
        for (const token_id rel : chosen) {
            triplet_fact f;
            f.subject = entity;
            f.relation = rel;
            f.object = world.voc.attributes[std::size_t(
                gen.uniform_int(std::uint64_t(spec.n_attributes)))];
            world.facts.push_back(f);
        }
    }
    std::sort(world.facts.begin(), world.facts.end());

    world.utility_entities.assign(
        world.voc.entities.end() - spec.n_utility_entities, world.voc.entities.end());
    return world;
}

std::vector<triplet_fact> target_slice(const synthetic_world& world, token_id entity) {
    if (!world.voc.is_entity(entity))
        throw lookup_error("not an entity token: " + std::to_string(entity) + " ('" +
                           (entity >= 0 && entity < world.voc.size()
                                ? world.voc.name_of(entity)
                                : std::string("?")) +
                           "')");
    std::vector<triplet_fact> out;
    for (const auto& f : world.facts)
        if (f.subject == entity) out.push_back(f);
    return out;
}

token_seq render_triplet(const synthetic_world& world, const triplet_fact& fact,
                         int template_index) {
    const sentence_template& tpl = world.template_of(fact.relation, template_index);
    if (tpl.relation != fact.relation)
        throw config_error("template belongs to a different relation");
    token_seq out;
    out.reserve(tpl.layout.size());
    for (const auto s : tpl.layout) {
        switch (s) {
            case slot::bos: out.push_back(world.voc.bos); break;
            case slot::eos: out.push_back(world.voc.eos); break;
            case slot::sep: out.push_back(world.voc.sep); break;
            case slot::subj: out.push_back(fact.subject); break;
            case slot::rel: out.push_back(fact.relation); break;
            case slot::obj: out.push_back(fact.object); break;
        }
    }
    return out;
}

std::vector<token_seq> render_explanatory(const synthetic_world& world,
                                          token_id entity, int group_size) {
    if (group_size < 1)
        throw config_error("group_size must be >= 1, got " + std::to_string(group_size));
    const auto facts = target_slice(world, entity);
    if (facts.empty())
        throw config_error("entity '" + world.voc.name_of(entity) + "' has no facts");
    const std::size_t n_groups = (facts.size() + std::size_t(group_size) - 1) /
                                 std::size_t(group_size);
    if (n_groups > world.voc.group_markers.size())
        throw config_error("grouping needs " + std::to_string(n_groups) +
                           " markers but the vocabulary holds " +
                           std::to_string(world.voc.group_markers.size()));

    std::vector<token_seq> out;
    for (std::size_t g = 0; g < n_groups; ++g) {
        token_seq seq = {world.voc.bos, world.voc.tell, entity,
                         world.voc.group_markers[g]};
        const std::size_t lo = g * std::size_t(group_size);
        const std::size_t hi = std::min(lo + std::size_t(group_size), facts.size());
        for (std::size_t i = lo; i < hi; ++i) {
            if (i > lo) seq.push_back(world.voc.sep);
            seq.push_back(facts[i].relation);
            seq.push_back(facts[i].object);
        }
        seq.push_back(world.voc.eos);
        out.push_back(std::move(seq));
    }
    return out;
}

std::pair<token_seq, token_seq> split_at_entity(const token_seq& seq, token_id entity) {
    const auto it = std::find(seq.begin(), seq.end(), entity);
    if (it == seq.end())
        throw lookup_error("entity token " + std::to_string(entity) +
                           " does not occur in the sequence");
    token_seq prefix(seq.begin(), it + 1);
    token_seq suffix(it + 1, seq.end());
    return {std::move(prefix), std::move(suffix)};
}

std::vector<token_seq> build_training_corpus(const synthetic_world& world) {
    std::vector<token_seq> corpus;
    for (const auto& fact : world.facts)
        for (int i = 0; i < world.templates_per_relation(); ++i)
            corpus.push_back(render_triplet(world, fact, i));
    for (const token_id e : world.voc.entities)
        for (auto& seq : render_explanatory(world, e, world.spec.explanatory_group_size))
            corpus.push_back(std::move(seq));
    return corpus;
}

std::string render_text(const vocab& voc, const token_seq& seq) {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ' ';
        out += voc.name_of(seq[i]);
    }
    return out;
}

std::vector<dataset_record> export_dataset(const synthetic_world& world) {
    std::vector<dataset_record> records;
    for (const token_id entity : world.voc.entities) {
        dataset_record rec;
        rec.subject = world.voc.name_of(entity);
        rec.subj_id = std::to_string(entity);
        for (auto seq : render_explanatory(world, entity, world.spec.explanatory_group_size)) {
            for (auto& tok : seq)
                if (tok == entity) tok = world.voc.mask;
            rec.sentences.push_back(render_text(world.voc, seq));
        }
        for (const auto& f : target_slice(world, entity))
            rec.attributions.push_back({world.voc.name_of(f.subject),
                                        world.voc.name_of(f.relation),
                                        world.voc.name_of(f.object)});
        records.push_back(std::move(rec));
    }
    return records;
}

namespace {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream in(text);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

} // namespace

std::vector<imported_record> import_dataset(const std::vector<dataset_record>& records,
                                            const vocab& voc) {
    std::vector<imported_record> out;
    for (std::size_t ri = 0; ri < records.size(); ++ri) {
        const auto& rec = records[ri];
        const std::string base = "records[" + std::to_string(ri) + "]";
        imported_record imp;

        try {
            imp.subject = voc.find(rec.subject);
        } catch (const lookup_error& e) {
            throw schema_error(base + ".subject", e.what());
        }
        if (!voc.is_entity(imp.subject))
            throw schema_error(base + ".subject", "'" + rec.subject + "' is not an entity");

        for (std::size_t si = 0; si < rec.sentences.size(); ++si) {
            const std::string spath = base + ".sentences[" + std::to_string(si) + "]";
            token_seq seq;
            std::vector<int> masks;
            for (const auto& word : split_words(rec.sentences[si])) {
                token_id tok;
                try {
                    tok = voc.find(word);
                } catch (const lookup_error& e) {
                    throw schema_error(spath, e.what());
                }
                if (tok == voc.mask) masks.push_back(int(seq.size()));
                seq.push_back(tok);
            }
            if (masks.empty())
                throw schema_error(spath, "sentence contains no [MASK] marker");
            imp.sentences.push_back(std::move(seq));
            imp.mask_positions.push_back(std::move(masks));
        }

        for (std::size_t ai = 0; ai < rec.attributions.size(); ++ai) {
            const std::string apath = base + ".attributions[" + std::to_string(ai) + "]";
            const auto& triple = rec.attributions[ai];
            if (triple[0] != rec.subject)
                throw schema_error(apath + "[0]", "subject '" + triple[0] +
                                   "' differs from record subject '" + rec.subject + "'");
            triplet_fact f;
            f.subject = imp.subject;
            try {
                f.relation = voc.find(triple[1]);
                f.object = voc.find(triple[2]);
            } catch (const lookup_error& e) {
                throw schema_error(apath, e.what());
            }
            if (!voc.is_relation(f.relation))
                throw schema_error(apath + "[1]", "'" + triple[1] + "' is not a relation");
            if (!voc.is_attribute(f.object))
                throw schema_error(apath + "[2]", "'" + triple[2] + "' is not an attribute");
            imp.attributions.push_back(f);
        }
        out.push_back(std::move(imp));
    }
    return out;
}

std::string dataset_to_json(const std::vector<dataset_record>& records) {
    json arr = json::array();
    for (const auto& rec : records) {
        json obj;
        obj["subject"] = rec.subject;
        obj["sentences"] = rec.sentences;
        obj["subj_id"] = rec.subj_id;
        json attrs = json::array();
        for (const auto& t : rec.attributions) attrs.push_back({t[0], t[1], t[2]});
        obj["attributions"] = std::move(attrs);
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

std::vector<dataset_record> dataset_from_json(const std::string& text) {
    json arr;
    try {
        arr = json::parse(text);
    } catch (const json::exception& e) {
        throw schema_error("$", std::string("not valid JSON: ") + e.what());
    }
    if (!arr.is_array()) throw schema_error("$", "top level must be an array of records");

    std::vector<dataset_record> records;
    for (std::size_t ri = 0; ri < arr.size(); ++ri) {
        const std::string base = "records[" + std::to_string(ri) + "]";
        const auto& obj = arr[ri];
        if (!obj.is_object()) throw schema_error(base, "record must be an object");

        auto require = [&](const char* key) -> const json& {
            const auto it = obj.find(key);
            if (it == obj.end())
                throw schema_error(base + "." + key, "missing required field");
            return *it;
        };

        dataset_record rec;
        const auto& subject = require("subject");
        if (!subject.is_string()) throw schema_error(base + ".subject", "must be a string");
        rec.subject = subject.get<std::string>();

        const auto& subj_id = require("subj_id");
        if (!subj_id.is_string()) throw schema_error(base + ".subj_id", "must be a string");
        rec.subj_id = subj_id.get<std::string>();

        const auto& sentences = require("sentences");
        if (!sentences.is_array())
            throw schema_error(base + ".sentences", "must be an array of strings");
        for (std::size_t si = 0; si < sentences.size(); ++si) {
            if (!sentences[si].is_string())
                throw schema_error(base + ".sentences[" + std::to_string(si) + "]",
                                   "must be a string");
            rec.sentences.push_back(sentences[si].get<std::string>());
        }

        const auto& attrs = require("attributions");
        if (!attrs.is_array())
            throw schema_error(base + ".attributions", "must be an array of triples");
        for (std::size_t ai = 0; ai < attrs.size(); ++ai) {
            const std::string apath = base + ".attributions[" + std::to_string(ai) + "]";
            const auto& triple = attrs[ai];
            if (!triple.is_array() || triple.size() != 3)
                throw schema_error(apath, "must be an array of exactly 3 strings");
            std::array<std::string, 3> t;
            for (std::size_t k = 0; k < 3; ++k) {
                if (!triple[k].is_string())
                    throw schema_error(apath + "[" + std::to_string(k) + "]",
                                       "must be a string");
                t[k] = triple[k].get<std::string>();
            }
            rec.attributions.push_back(std::move(t));
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_dataset_file(const std::string& path, const std::vector<dataset_record>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << dataset_to_json(records);
    if (!out) throw io_error("failed writing '" + path + "'");
}

std::vector<dataset_record> read_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return dataset_from_json(buf.str());
}

std::string world_to_json(const synthetic_world& world) {
    json obj;
    obj["spec"] = {{"n_entities", world.spec.n_entities},
                   {"n_relations", world.spec.n_relations},
                   {"n_attributes", world.spec.n_attributes},
                   {"facts_per_entity", world.spec.facts_per_entity},
                   {"templates_per_relation", world.spec.templates_per_relation},
                   {"n_utility_entities", world.spec.n_utility_entities},
                   {"explanatory_group_size", world.spec.explanatory_group_size},
                   {"seed", world.spec.seed}};
    json facts = json::array();
    for (const auto& f : world.facts) facts.push_back({f.subject, f.relation, f.object});
    obj["facts"] = std::move(facts);
    obj["utility_entities"] = world.utility_entities;
    return obj.dump(2) + "\n";
}

synthetic_world world_from_json(const std::string& text) {
    json obj;
    try {
        obj = json::parse(text);
    } catch (const json::exception& e) {
        throw schema_error("$", std::string("not valid JSON: ") + e.what());
    }
    try {
        world_spec spec;
        const auto& s = obj.at("spec");
        spec.n_entities = s.at("n_entities").get<int>();
        spec.n_relations = s.at("n_relations").get<int>();
        spec.n_attributes = s.at("n_attributes").get<int>();
        spec.facts_per_entity = s.at("facts_per_entity").get<int>();
        spec.templates_per_relation = s.at("templates_per_relation").get<int>();
        spec.n_utility_entities = s.at("n_utility_entities").get<int>();
        spec.explanatory_group_size = s.at("explanatory_group_size").get<int>();
        spec.seed = s.at("seed").get<std::uint64_t>();

        // Vocabulary and templates are pure functions of the spec; facts are
        // taken from the file so a stored world stands on its own.
        synthetic_world world = generate_world(spec);
        world.facts.clear();
        for (const auto& f : obj.at("facts")) {
            if (!f.is_array() || f.size() != 3)
                throw schema_error("facts", "each fact must be [subject, relation, object]");
            triplet_fact fact;
            fact.subject = f[0].get<token_id>();
            fact.relation = f[1].get<token_id>();
            fact.object = f[2].get<token_id>();
            if (!world.voc.is_entity(fact.subject) || !world.voc.is_relation(fact.relation) ||
                !world.voc.is_attribute(fact.object))
                throw schema_error("facts", "fact tokens have wrong classes");
            world.facts.push_back(fact);
        }
        std::sort(world.facts.begin(), world.facts.end());
        for (std::size_t i = 1; i < world.facts.size(); ++i)
            if (world.facts[i].subject == world.facts[i - 1].subject &&
                world.facts[i].relation == world.facts[i - 1].relation)
                throw schema_error("facts", "duplicate (subject, relation) pair");
        world.utility_entities = obj.at("utility_entities").get<std::vector<token_id>>();
        return world;
    } catch (const json::exception& e) {
        throw schema_error("$", std::string("world file malformed: ") + e.what());
    }
}

void write_world_file(const std::string& path, const synthetic_world& world) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open '" + path + "' for writing");
    out << world_to_json(world);
    if (!out) throw io_error("failed writing '" + path + "'");
}

synthetic_world read_world_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return world_from_json(buf.str());
}

} // namespace culab
