#include "culab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "culab/errors.hpp"

namespace culab {

namespace {

token_id argmax_token(const std::vector<double>& dist) {
    token_id best = 0;
    for (token_id t = 1; t < token_id(dist.size()); ++t)
        if (dist[std::size_t(t)] > dist[std::size_t(best)]) best = t;
    return best;
}

token_id model_answer(const model& m, const token_seq& prefix) {
    return argmax_token(next_token_dist(m, prefix));
}

std::size_t entity_pos(const vocab& voc, token_id entity) {
    if (!voc.is_entity(entity))
        throw lookup_error("not an entity token: " + std::to_string(entity));
    return std::size_t(entity - voc.entities.front());
}

bool contains_run(const token_seq& text, const token_seq& run) {
    return std::search(text.begin(), text.end(), run.begin(), run.end()) != text.end();
}

} // namespace

const entity_probes& probe_suite::of(const vocab& voc, token_id entity) const {
    return per_entity.at(entity_pos(voc, entity));
}

probe_suite build_probes(const synthetic_world& world, const model& ref) {
    probe_suite suite;
    suite.per_entity.resize(world.voc.entities.size());

    auto offer = [&](std::vector<probe>& dest, int& built, int& kept, token_seq prefix,
                     token_id target) {
        ++built;
        if (model_answer(ref, prefix) != target) return;
        ++kept;
        dest.push_back({std::move(prefix), target});
    };

    for (std::size_t p = 0; p < world.voc.entities.size(); ++p) {
        const token_id e = world.voc.entities[p];
        entity_probes& probes = suite.per_entity[p];
        for (const auto& fact : target_slice(world, e)) {
            for (int i = 0; i < world.templates_per_relation(); ++i) {
                const auto& tpl = world.template_of(fact.relation, i);
                const auto seq = render_triplet(world, fact, i);
                if (tpl.subject_last()) {
                    // Predict the subject from everything before it.
                    token_seq prefix(seq.begin(), seq.end() - 2);
                    offer(probes.node, suite.node_built, suite.node_kept,
                          std::move(prefix), e);
                } else if (tpl.object_last()) {
                    token_seq prefix(seq.begin(), seq.end() - 2);
                    offer(probes.edge, suite.edge_built, suite.edge_kept,
                          std::move(prefix), fact.object);
                }
            }
        }
        offer(probes.node, suite.node_built, suite.node_kept,
              {world.voc.bos, world.voc.tell}, e);
    }
    return suite;
}

accuracy_result probe_accuracy(const model& m, const std::vector<probe>& probes) {
    accuracy_result r;
    if (probes.empty()) return r;
    int hits = 0;
    for (const auto& p : probes) hits += model_answer(m, p.prefix) == p.target;
    r.value = double(hits) / double(probes.size());
    r.defined = true;
    return r;
}

std::vector<probe> collect_probes(const probe_suite& suite, const vocab& voc,
                                  const std::vector<token_id>& entities,
                                  probe_kind kind) {
    std::vector<probe> out;
    for (const token_id e : entities) {
        const auto& probes = suite.of(voc, e);
        const auto& src = kind == probe_kind::node ? probes.node : probes.edge;
        out.insert(out.end(), src.begin(), src.end());
    }
    return out;
}

std::vector<triplet_fact> realized_facts(const synthetic_world& world,
                                         const std::vector<triplet_fact>& candidates,
                                         const token_seq& text) {
    std::vector<triplet_fact> found;
    for (const auto& fact : candidates) {
        bool present = false;
        for (int i = 0; i < world.templates_per_relation() && !present; ++i) {
            auto interior = render_triplet(world, fact, i);
            interior.erase(interior.begin()); // BOS
            interior.pop_back();              // EOS
            present = contains_run(text, interior);
        }
        if (present) found.push_back(fact);
    }
    return found;
}

std::vector<token_seq> cu_prompts(const synthetic_world& world, token_id entity) {
    const auto slice = target_slice(world, entity);
    const vocab& voc = world.voc;

    std::vector<token_seq> prompts;
    prompts.push_back({voc.bos});
    prompts.push_back({voc.bos, entity});
    const int groups = (int(slice.size()) + world.spec.explanatory_group_size - 1) /
                       world.spec.explanatory_group_size;
    for (int g = 0; g < groups; ++g)
        prompts.push_back({voc.bos, voc.tell, entity, voc.group_markers[std::size_t(g)]});
    for (const auto& fact : slice) {
        for (int i = 0; i < world.templates_per_relation(); ++i) {
            const auto& tpl = world.template_of(fact.relation, i);
            if (!tpl.object_last()) continue;
            const auto seq = render_triplet(world, fact, i);
            prompts.push_back(token_seq(seq.begin(), seq.end() - 2));
        }
    }
    return prompts;
}

cu_check_result cu_check_over(const model& m, const synthetic_world& world,
                              token_id entity, const std::vector<token_seq>& prompts) {
    const auto slice = target_slice(world, entity);
    const vocab& voc = world.voc;

    cu_check_result result;
    for (const auto& prompt : prompts) {
        ++result.prompts;
        const auto before = realized_facts(world, slice, prompt);
        const int budget = m.config.context_window - int(prompt.size());
        const auto full = greedy_decode(m, prompt, budget, voc.eos);
        const auto after = realized_facts(world, slice, full);
        std::set<triplet_fact> known(before.begin(), before.end());
        for (const auto& fact : after) {
            if (known.count(fact)) continue;
            ++result.violations;
            result.details.push_back({prompt, fact});
        }
    }
    return result;
}

cu_check_result cu_check(const model& m, const synthetic_world& world, token_id entity) {
    return cu_check_over(m, world, entity, cu_prompts(world, entity));
}

std::vector<triplet_fact> memorized_facts(const model& ref, const synthetic_world& world,
                                          token_id entity) {
    std::vector<triplet_fact> out;
    for (const auto& fact : target_slice(world, entity))
        if (validate_triplet(ref, world.voc, fact)) out.push_back(fact);
    return out;
}

kg_metrics kg_eval(const extraction_stats& stats,
                   const std::vector<triplet_fact>& memorized) {
    kg_metrics km;
    const std::set<triplet_fact> memo(memorized.begin(), memorized.end());
    std::set<triplet_fact> unique(stats.accepted_multiset.begin(),
                                  stats.accepted_multiset.end());
    km.n_memorized = int(memo.size());
    km.n_accepted_unique = int(unique.size());
    km.n_accepted_total = int(stats.accepted_multiset.size());

    if (km.n_memorized > 0) {
        int covered = 0;
        for (const auto& f : memo) covered += int(unique.count(f));
        km.coverage.value = double(covered) / double(km.n_memorized);
        km.coverage.defined = true;
    }
    if (km.n_accepted_total > 0) {
        int good = 0;
        for (const auto& f : stats.accepted_multiset) good += int(memo.count(f));
        km.precision.value = double(good) / double(km.n_accepted_total);
        km.precision.defined = true;
    }
    return km;
}

double welch_t(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw config_error("welch_t needs at least two observations per side");
    auto mean_var = [](const std::vector<double>& x) {
        double mean = 0.0;
        for (const double v : x) mean += v;
        mean /= double(x.size());
        double var = 0.0;
        for (const double v : x) var += (v - mean) * (v - mean);
        var /= double(x.size() - 1);
        return std::make_pair(mean, var);
    };
    const auto [ma, va] = mean_var(a);
    const auto [mb, vb] = mean_var(b);
    const double denom = std::sqrt(va / double(a.size()) + vb / double(b.size()));
    if (denom == 0.0)
        throw numeric_error("welch_t undefined: both samples have zero variance");
    return (ma - mb) / denom;
}

eval_report evaluate(const model& m, const synthetic_world& world, token_id target,
                     const probe_suite& suite,
                     const std::vector<token_id>& others_in) {
    const vocab& voc = world.voc;
    const std::set<token_id> utility(world.utility_entities.begin(),
                                     world.utility_entities.end());
    if (!voc.is_entity(target))
        throw lookup_error("not an entity token: " + std::to_string(target));

    std::vector<token_id> others;
    if (others_in.empty()) {
        for (const token_id e : voc.entities)
            if (e != target && !utility.count(e)) others.push_back(e);
    } else {
        for (const token_id e : others_in) {
            if (!voc.is_entity(e))
                throw lookup_error("not an entity token: " + std::to_string(e));
            if (e == target || utility.count(e))
                throw config_error("'" + voc.name_of(e) +
                                   "' cannot score the others columns: it is the "
                                   "target or a utility entity");
            others.push_back(e);
        }
    }

    eval_report report;
    report.target_node = probe_accuracy(m, suite.of(voc, target).node);
    report.target_edge = probe_accuracy(m, suite.of(voc, target).edge);
    report.others_node =
        probe_accuracy(m, collect_probes(suite, voc, others, probe_kind::node));
    report.others_edge =
        probe_accuracy(m, collect_probes(suite, voc, others, probe_kind::edge));
    report.utility_edge = probe_accuracy(
        m, collect_probes(suite, voc, world.utility_entities, probe_kind::edge));
    const auto cu = cu_check(m, world, target);
    report.cu_prompts = cu.prompts;
    report.cu_violations = cu.violations;
    return report;
}

} // namespace culab
