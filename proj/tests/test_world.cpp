#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include <json.hpp>

#include "culab/errors.hpp"
#include "culab/world.hpp"

using namespace culab;

namespace {

world_spec small_spec() {
    world_spec s;
    s.n_entities = 6;
    s.n_relations = 4;
    s.n_attributes = 5;
    s.facts_per_entity = 3;
    s.templates_per_relation = 3;
    s.n_utility_entities = 2;
    s.explanatory_group_size = 2;
    s.seed = 11;
    return s;
}

} // namespace

TEST_CASE("vocab id layout is dense and classed") {
    const vocab v = build_vocab(6, 4, 5, 3);
    CHECK(v.size() == 6 + 3 + 6 + 4 + 5);
    CHECK(v.bos == 0);
    CHECK(v.eos == 1);
    CHECK(v.sep == 2);
    CHECK(v.mask == 3);
    CHECK(v.tell == 4);
    CHECK(v.unlearn == 5);
    CHECK(v.name_of(v.mask) == "[MASK]");

    CHECK(v.group_markers.size() == 3);
    CHECK(v.group_markers[0] == 6);
    CHECK(v.entities.front() == 9);
    CHECK(v.relations.front() == 15);
    CHECK(v.attributes.front() == 19);

    for (const token_id e : v.entities) CHECK(v.is_entity(e));
    for (const token_id r : v.relations) CHECK(v.is_relation(r));
    for (const token_id a : v.attributes) CHECK(v.is_attribute(a));
    CHECK(v.class_of(v.bos) == token_class::special);
    CHECK(v.class_of(v.group_markers[1]) == token_class::special);

    CHECK(v.find("E0") == v.entities[0]);
    CHECK(v.find("R3") == v.relations[3]);
    CHECK(v.find("A4") == v.attributes[4]);
    CHECK(v.find("<g2>") == v.group_markers[2]);
    CHECK(v.name_of(v.find("E5")) == "E5");
    CHECK_THROWS_AS((void)v.find("E6"), lookup_error);
    CHECK_THROWS_AS((void)v.name_of(v.size()), lookup_error);
    CHECK_THROWS_AS((void)v.class_of(-1), lookup_error);
}

TEST_CASE("world generation is deterministic in the spec") {
    const auto a = generate_world(small_spec());
    const auto b = generate_world(small_spec());
    CHECK(a.facts == b.facts);
    CHECK(a.utility_entities == b.utility_entities);

    world_spec other = small_spec();
    other.seed = 12;
    const auto c = generate_world(other);
    CHECK(a.facts != c.facts);
}

TEST_CASE("facts are functional, per-entity sized, and sorted") {
    const auto w = generate_world(small_spec());
    CHECK(int(w.facts.size()) == w.spec.n_entities * w.spec.facts_per_entity);
    CHECK(std::is_sorted(w.facts.begin(), w.facts.end()));

    for (const token_id e : w.voc.entities) {
        const auto slice = target_slice(w, e);
        CHECK(int(slice.size()) == w.spec.facts_per_entity);
        std::set<token_id> rels;
        for (const auto& f : slice) {
            CHECK(f.subject == e);
            CHECK(w.voc.is_relation(f.relation));
            CHECK(w.voc.is_attribute(f.object));
            rels.insert(f.relation);
        }
        CHECK(rels.size() == slice.size()); // one object per (subject, relation)
    }
    CHECK_THROWS_AS((void)target_slice(w, w.voc.relations[0]), lookup_error);
}

TEST_CASE("utility entities are the trailing ids") {
    const auto w = generate_world(small_spec());
    REQUIRE(w.utility_entities.size() == 2);
    CHECK(w.utility_entities[0] == w.voc.entities[4]);
    CHECK(w.utility_entities[1] == w.voc.entities[5]);
}

TEST_CASE("every relation keeps subject-final and object-final templates") {
    const auto w = generate_world(small_spec());
    CHECK(int(w.templates.size()) == w.spec.n_relations * w.spec.templates_per_relation);
    for (const token_id rel : w.voc.relations) {
        bool subj_final = false, obj_final = false;
        for (int i = 0; i < w.templates_per_relation(); ++i) {
            const auto& t = w.template_of(rel, i);
            CHECK(t.relation == rel);
            CHECK(t.index == i);
            CHECK(t.layout.front() == sentence_template::slot::bos);
            CHECK(t.layout.back() == sentence_template::slot::eos);
            int subj = 0, rel_count = 0, obj = 0;
            for (const auto s : t.layout) {
                subj += s == sentence_template::slot::subj;
                rel_count += s == sentence_template::slot::rel;
                obj += s == sentence_template::slot::obj;
            }
            CHECK(subj == 1);
            CHECK(rel_count == 1);
            CHECK(obj == 1);
            subj_final |= t.subject_last();
            obj_final |= t.object_last();
            CHECK(t.subject_last() != t.object_last());
        }
        CHECK(subj_final);
        CHECK(obj_final);
    }
    CHECK_THROWS_AS((void)w.template_of(w.voc.relations[0], 3), config_error);
    CHECK_THROWS_AS((void)w.template_of(w.voc.entities[0], 0), lookup_error);
}

TEST_CASE("render_triplet substitutes slots in template order") {
    const auto w = generate_world(small_spec());
    const auto fact = w.facts[0];
    const auto seq = render_triplet(w, fact, 0);
    // Layout 0 is [BOS, SUBJ, REL, OBJ, EOS].
    REQUIRE(seq.size() == 5);
    CHECK(seq[0] == w.voc.bos);
    CHECK(seq[1] == fact.subject);
    CHECK(seq[2] == fact.relation);
    CHECK(seq[3] == fact.object);
    CHECK(seq[4] == w.voc.eos);

    const auto& tpl1 = w.template_of(fact.relation, 1);
    CHECK(tpl1.subject_last());
    const auto seq1 = render_triplet(w, fact, 1);
    CHECK(seq1[seq1.size() - 2] == fact.subject);
}

TEST_CASE("explanatory rendering partitions the facts under group markers") {
    const auto w = generate_world(small_spec());
    const token_id e = w.voc.entities[1];
    const auto groups = render_explanatory(w, e, 2);
    REQUIRE(int(groups.size()) == w.n_explanatory_groups());
    REQUIRE(groups.size() == 2); // 3 facts in groups of 2

    std::vector<triplet_fact> seen;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& seq = groups[g];
        REQUIRE(seq.size() >= 7);
        CHECK(seq[0] == w.voc.bos);
        CHECK(seq[1] == w.voc.tell);
        CHECK(seq[2] == e);
        CHECK(seq[3] == w.voc.group_markers[g]);
        CHECK(seq.back() == w.voc.eos);
        for (std::size_t i = 4; i + 1 < seq.size();) {
            if (seq[i] == w.voc.sep) {
                ++i;
                continue;
            }
            seen.push_back({e, seq[i], seq[i + 1]});
            i += 2;
        }
    }
    CHECK(seen == target_slice(w, e));
    CHECK(groups[0].size() == 4 + 5 + 1); // two (r, o) pairs with one separator
    CHECK(groups[1].size() == 4 + 2 + 1); // short last group

    CHECK_THROWS_AS((void)render_explanatory(w, e, 0), config_error);
}

TEST_CASE("split_at_entity keeps the entity on the prefix side") {
    const auto w = generate_world(small_spec());
    const auto fact = w.facts[0];
    const auto seq = render_triplet(w, fact, 0);
    const auto [prefix, suffix] = split_at_entity(seq, fact.subject);
    CHECK(prefix.back() == fact.subject);
    token_seq joined = prefix;
    joined.insert(joined.end(), suffix.begin(), suffix.end());
    CHECK(joined == seq);
    CHECK_THROWS_AS((void)split_at_entity(seq, w.voc.entities[5]), lookup_error);
}

TEST_CASE("render_text joins token names") {
    const auto w = generate_world(small_spec());
    const token_seq seq = {w.voc.bos, w.voc.entities[0], w.voc.relations[1],
                           w.voc.attributes[2], w.voc.eos};
    CHECK(render_text(w.voc, seq) == "<bos> E0 R1 A2 <eos>");
}

TEST_CASE("dataset export masks the subject and lists attributions") {
    const auto w = generate_world(small_spec());
    const auto records = export_dataset(w);
    REQUIRE(int(records.size()) == w.spec.n_entities);

    const auto& rec = records[0];
    CHECK(rec.subject == "E0");
    CHECK(rec.subj_id == std::to_string(w.voc.entities[0]));
    REQUIRE(int(rec.sentences.size()) == w.n_explanatory_groups());
    for (const auto& s : rec.sentences) {
        CHECK(s.find("[MASK]") != std::string::npos);
        CHECK(s.find("E0") == std::string::npos);
    }
    REQUIRE(int(rec.attributions.size()) == w.spec.facts_per_entity);
    const auto slice = target_slice(w, w.voc.entities[0]);
    for (std::size_t i = 0; i < slice.size(); ++i) {
        CHECK(rec.attributions[i][0] == "E0");
        CHECK(rec.attributions[i][1] == w.voc.name_of(slice[i].relation));
        CHECK(rec.attributions[i][2] == w.voc.name_of(slice[i].object));
    }
}

TEST_CASE("dataset import resolves masks and validates structure") {
    const auto w = generate_world(small_spec());
    auto records = export_dataset(w);
    const auto imported = import_dataset(records, w.voc);
    REQUIRE(imported.size() == records.size());
    for (std::size_t i = 0; i < imported.size(); ++i) {
        CHECK(imported[i].subject == w.voc.entities[i]);
        REQUIRE(imported[i].sentences.size() == records[i].sentences.size());
        for (std::size_t s = 0; s < imported[i].sentences.size(); ++s) {
            REQUIRE(!imported[i].mask_positions[s].empty());
            for (const int pos : imported[i].mask_positions[s])
                CHECK(imported[i].sentences[s][std::size_t(pos)] == w.voc.mask);
        }
        CHECK(imported[i].attributions == target_slice(w, w.voc.entities[i]));
    }

    SUBCASE("unknown subject") {
        records[0].subject = "E99";
        CHECK_THROWS_WITH_AS((void)import_dataset(records, w.voc),
                             doctest::Contains("records[0].subject"), schema_error);
    }
    SUBCASE("subject of the wrong class") {
        records[2].subject = "R0";
        CHECK_THROWS_WITH_AS((void)import_dataset(records, w.voc),
                             doctest::Contains("records[2].subject"), schema_error);
    }
    SUBCASE("sentence with unknown word") {
        records[1].sentences[0] += " Z9";
        CHECK_THROWS_WITH_AS((void)import_dataset(records, w.voc),
                             doctest::Contains("records[1].sentences[0]"), schema_error);
    }
    SUBCASE("sentence without mask") {
        records[0].sentences[1] = "<bos> E1 R0 A0 <eos>";
        CHECK_THROWS_WITH_AS((void)import_dataset(records, w.voc),
                             doctest::Contains("records[0].sentences[1]"), schema_error);
    }
    SUBCASE("attribution subject mismatch") {
        records[3].attributions[0][0] = "E0";
        CHECK_THROWS_WITH_AS((void)import_dataset(records, w.voc),
                             doctest::Contains("records[3].attributions[0][0]"),
                             schema_error);
    }
    SUBCASE("attribution relation of the wrong class") {
        records[0].attributions[1][1] = "A0";
        CHECK_THROWS_WITH_AS((void)import_dataset(records, w.voc),
                             doctest::Contains("records[0].attributions[1][1]"),
                             schema_error);
    }
}

TEST_CASE("dataset json round trip") {
    const auto w = generate_world(small_spec());
    const auto records = export_dataset(w);
    const auto parsed = dataset_from_json(dataset_to_json(records));
    REQUIRE(parsed.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(parsed[i].subject == records[i].subject);
        CHECK(parsed[i].subj_id == records[i].subj_id);
        CHECK(parsed[i].sentences == records[i].sentences);
        CHECK(parsed[i].attributions == records[i].attributions);
    }
}

TEST_CASE("dataset json rejects malformed documents") {
    CHECK_THROWS_AS((void)dataset_from_json("not json"), schema_error);
    CHECK_THROWS_AS((void)dataset_from_json("{}"), schema_error);
    CHECK_THROWS_WITH_AS((void)dataset_from_json(R"([{"subj_id": "9"}])"),
                         doctest::Contains("records[0].subject"), schema_error);
    CHECK_THROWS_WITH_AS(
        (void)dataset_from_json(
            R"([{"subject": "E0", "subj_id": "9", "sentences": [],
                 "attributions": [["E0", "R0"]]}])"),
        doctest::Contains("records[0].attributions[0]"), schema_error);
    CHECK_THROWS_WITH_AS(
        (void)dataset_from_json(
            R"([{"subject": "E0", "subj_id": "9", "sentences": [3],
                 "attributions": []}])"),
        doctest::Contains("records[0].sentences[0]"), schema_error);
}

TEST_CASE("world json round trip preserves the world") {
    const auto w = generate_world(small_spec());
    const auto back = world_from_json(world_to_json(w));
    CHECK(back.facts == w.facts);
    CHECK(back.utility_entities == w.utility_entities);
    CHECK(back.voc.names == w.voc.names);
    CHECK(back.spec.seed == w.spec.seed);
    CHECK(int(back.templates.size()) == int(w.templates.size()));
}

TEST_CASE("world json rejects structural corruption") {
    const auto w = generate_world(small_spec());
    auto doc = nlohmann::json::parse(world_to_json(w));

    SUBCASE("duplicate subject-relation pair") {
        doc["facts"][1] = doc["facts"][0];
        CHECK_THROWS_AS((void)world_from_json(doc.dump()), schema_error);
    }
    SUBCASE("fact token of the wrong class") {
        doc["facts"][0][0] = w.voc.attributes[0];
        CHECK_THROWS_AS((void)world_from_json(doc.dump()), schema_error);
    }
    SUBCASE("missing spec field") {
        doc["spec"].erase("n_entities");
        CHECK_THROWS_AS((void)world_from_json(doc.dump()), schema_error);
    }
    SUBCASE("not json at all") {
        CHECK_THROWS_AS((void)world_from_json("]"), schema_error);
    }
}

TEST_CASE("world files survive a disk round trip") {
    const auto w = generate_world(small_spec());
    const std::string path = "culab_test_world.json";
    write_world_file(path, w);
    const auto back = read_world_file(path);
    CHECK(back.facts == w.facts);
    std::remove(path.c_str());
    CHECK_THROWS_AS((void)read_world_file("no_such_dir/w.json"), io_error);
}

TEST_CASE("spec validation rejects unusable shapes") {
    auto bad = small_spec();
    bad.facts_per_entity = 5; // exceeds n_relations = 4
    CHECK_THROWS_AS((void)generate_world(bad), config_error);

    bad = small_spec();
    bad.templates_per_relation = 1;
    CHECK_THROWS_AS((void)generate_world(bad), config_error);

    bad = small_spec();
    bad.templates_per_relation = 7;
    CHECK_THROWS_AS((void)generate_world(bad), config_error);

    bad = small_spec();
    bad.n_utility_entities = 6;
    CHECK_THROWS_AS((void)generate_world(bad), config_error);

    bad = small_spec();
    bad.n_entities = 0;
    CHECK_THROWS_AS((void)generate_world(bad), config_error);
}
