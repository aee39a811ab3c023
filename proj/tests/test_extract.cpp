#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "culab/errors.hpp"
#include "culab/extract.hpp"
#include "lab_fixture.hpp"

using namespace culab;
using labfx::small_lab;

TEST_CASE("a trained model confirms exactly its own facts") {
    const auto& fx = small_lab();
    for (const auto& f : fx.world.facts) {
        CHECK(validate_triplet(fx.trained, fx.world.voc, f));
        // Any other object fails: the reference's answer is unique.
        for (const token_id a : fx.world.voc.attributes) {
            if (a == f.object) continue;
            CHECK_FALSE(validate_triplet(fx.trained, fx.world.voc,
                                         {f.subject, f.relation, a}));
        }
    }
}

TEST_CASE("relation-aware extraction recovers the full slice") {
    const auto& fx = small_lab();
    extract_config cfg;
    cfg.mode = proposal_mode::relation_aware;
    rng gen(1);

    for (const token_id e : fx.world.voc.entities) {
        const auto got = get_attr(fx.trained, fx.trained, fx.world, e, cfg, gen);
        CHECK(got.stats.proposals_made == fx.world.spec.n_relations);

        const auto slice = target_slice(fx.world, e);
        std::set<triplet_fact> found(got.triplets.begin(), got.triplets.end());
        for (const auto& f : slice) CHECK(found.count(f) == 1);

        // Everything accepted carries the right token classes and the
        // reference's confirmation.
        for (const auto& t : got.triplets) {
            CHECK(t.subject == e);
            CHECK(fx.world.voc.is_relation(t.relation));
            CHECK(fx.world.voc.is_attribute(t.object));
            CHECK(validate_triplet(fx.trained, fx.world.voc, t));
        }
        CHECK(std::is_sorted(got.triplets.begin(), got.triplets.end()));
        CHECK(int(got.stats.accepted_multiset.size()) + got.stats.dropped_invalid +
                  got.stats.dropped_unvalidated ==
              got.stats.proposals_made);
    }
}

TEST_CASE("sampled extraction is deterministic in its stream and consistent") {
    const auto& fx = small_lab();
    const token_id e = fx.world.voc.entities[2];
    extract_config cfg;
    cfg.mode = proposal_mode::sampled;
    cfg.n_proposals = 40;
    cfg.temperature = 1.0;

    rng g1(77), g2(77), g3(78);
    const auto a = get_attr(fx.trained, fx.trained, fx.world, e, cfg, g1);
    const auto b = get_attr(fx.trained, fx.trained, fx.world, e, cfg, g2);
    CHECK(a.triplets == b.triplets);
    CHECK(a.stats.accepted_multiset == b.stats.accepted_multiset);
    CHECK(a.stats.dropped_invalid == b.stats.dropped_invalid);

    const auto c = get_attr(fx.trained, fx.trained, fx.world, e, cfg, g3);
    // A different stream may propose in a different order; totals still add up.
    CHECK(c.stats.proposals_made == 40);
    CHECK(int(c.stats.accepted_multiset.size()) + c.stats.dropped_invalid +
              c.stats.dropped_unvalidated ==
          40);

    // Accepted triplets are always confirmed facts about this entity.
    const auto slice = target_slice(fx.world, e);
    for (const auto& t : a.triplets) {
        CHECK(t.subject == e);
        CHECK(validate_triplet(fx.trained, fx.world.voc, t));
    }
    // With 40 draws over 3 memorized relations, the slice is in reach.
    std::set<triplet_fact> found(a.triplets.begin(), a.triplets.end());
    int covered = 0;
    for (const auto& f : slice) covered += int(found.count(f));
    CHECK(covered >= 2);
}

TEST_CASE("proposal default scales with the relation count") {
    const auto& fx = small_lab();
    extract_config cfg;
    cfg.mode = proposal_mode::sampled;
    cfg.n_proposals = 0;
    rng gen(5);
    const auto got =
        get_attr(fx.trained, fx.trained, fx.world, fx.world.voc.entities[0], cfg, gen);
    CHECK(got.stats.proposals_made == 4 * fx.world.spec.n_relations);
}

TEST_CASE("conversion renders subject-before-object forms and splits there") {
    const auto& fx = small_lab();
    const auto slice = target_slice(fx.world, fx.world.voc.entities[1]);
    const auto pairs = convert_triplets(fx.world, slice);

    int sbo_templates = 0;
    for (int i = 0; i < fx.world.templates_per_relation(); ++i)
        sbo_templates +=
            fx.world.template_of(fx.world.voc.relations[0], i).subject_before_object();
    CHECK(int(pairs.size()) == int(slice.size()) * sbo_templates);

    std::size_t idx = 0;
    for (const auto& t : slice) {
        for (int i = 0; i < fx.world.templates_per_relation(); ++i) {
            if (!fx.world.template_of(t.relation, i).subject_before_object()) continue;
            const auto& p = pairs[idx++];
            CHECK(p.prefix.back() == t.subject);
            CHECK(std::count(p.continuation.begin(), p.continuation.end(), t.object) >= 1);
            CHECK(std::count(p.prefix.begin(), p.prefix.end(), t.object) == 0);
            token_seq joined = p.prefix;
            joined.insert(joined.end(), p.continuation.begin(), p.continuation.end());
            CHECK(joined == render_triplet(fx.world, t, i));
        }
    }
}

TEST_CASE("sentence extraction reproduces what the model memorized") {
    const auto& fx = small_lab();
    for (const token_id e : fx.world.voc.entities) {
        const auto expect =
            render_explanatory(fx.world, e, fx.world.spec.explanatory_group_size);
        const auto got = get_sent(fx.trained, fx.world.voc, e, int(expect.size()));
        REQUIRE(got.size() == expect.size());
        for (std::size_t g = 0; g < got.size(); ++g) {
            CHECK(got[g] == expect[g]);
            REQUIRE(got[g].size() >= 4);
            CHECK(got[g][0] == fx.world.voc.bos);
            CHECK(got[g][1] == fx.world.voc.tell);
            CHECK(got[g][2] == e);
            CHECK(got[g][3] == fx.world.voc.group_markers[g]);
        }
    }
}

TEST_CASE("extraction inputs are validated") {
    const auto& fx = small_lab();
    rng gen(1);
    extract_config cfg;

    CHECK_THROWS_AS(
        (void)get_attr(fx.trained, fx.trained, fx.world, fx.world.voc.bos, cfg, gen),
        lookup_error);
    cfg.temperature = 0.0;
    CHECK_THROWS_AS((void)get_attr(fx.trained, fx.trained, fx.world,
                                   fx.world.voc.entities[0], cfg, gen),
                    config_error);
    cfg.temperature = 1.0;
    cfg.n_proposals = -3;
    CHECK_THROWS_AS((void)get_attr(fx.trained, fx.trained, fx.world,
                                   fx.world.voc.entities[0], cfg, gen),
                    config_error);

    CHECK_THROWS_AS((void)get_sent(fx.trained, fx.world.voc, fx.world.voc.bos, 1),
                    lookup_error);
    CHECK_THROWS_AS(
        (void)get_sent(fx.trained, fx.world.voc, fx.world.voc.entities[0], 0),
        config_error);
    CHECK_THROWS_AS(
        (void)get_sent(fx.trained, fx.world.voc, fx.world.voc.entities[0], 99),
        config_error);
}
