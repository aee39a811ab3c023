#include "culab/extract.hpp"

#include <algorithm>
#include <map>

#include "culab/errors.hpp"

namespace culab {

namespace {

token_id argmax_token(const std::vector<double>& dist) {
    token_id best = 0;
    for (token_id t = 1; t < token_id(dist.size()); ++t)
        if (dist[std::size_t(t)] > dist[std::size_t(best)]) best = t;
    return best;
}

void check_entity(const vocab& voc, token_id entity) {
    if (entity < 0 || entity >= voc.size() || !voc.is_entity(entity))
        throw lookup_error("not an entity token: " + std::to_string(entity));
}

} // namespace

bool validate_triplet(const model& ref, const vocab& voc, const triplet_fact& t) {
    const token_seq probe = {voc.bos, t.subject, t.relation};
    return argmax_token(next_token_dist(ref, probe)) == t.object;
}

std::vector<scored_pair> convert_triplets(const synthetic_world& world,
                                          const std::vector<triplet_fact>& triplets) {
    std::vector<scored_pair> pairs;
    for (const auto& t : triplets) {
        for (int i = 0; i < world.templates_per_relation(); ++i) {
            if (!world.template_of(t.relation, i).subject_before_object()) continue;
            const auto seq = render_triplet(world, t, i);
            auto [prefix, suffix] = split_at_entity(seq, t.subject);
            pairs.push_back({std::move(prefix), std::move(suffix)});
        }
    }
    return pairs;
}

attr_extraction get_attr(const model& current, const model& ref,
                         const synthetic_world& world, token_id entity,
                         const extract_config& cfg, rng& gen) {
    check_entity(world.voc, entity);
    if (cfg.mode == proposal_mode::sampled && !(cfg.temperature > 0.0))
        throw config_error("temperature must be > 0");
    if (cfg.n_proposals < 0) throw config_error("n_proposals must be >= 0");

    const vocab& voc = world.voc;
    attr_extraction out;

    // Confirmation verdicts are pure in (relation, object); cache them so
    // repeated proposals do not re-run the reference model.
    std::map<std::pair<token_id, token_id>, bool> verdicts;
    auto confirmed = [&](token_id rel, token_id obj) {
        const auto key = std::make_pair(rel, obj);
        const auto it = verdicts.find(key);
        if (it != verdicts.end()) return it->second;
        const bool ok = validate_triplet(ref, voc, {entity, rel, obj});
        verdicts.emplace(key, ok);
        return ok;
    };

    auto consider = [&](token_id rel, token_id obj) {
        ++out.stats.proposals_made;
        if (!voc.is_relation(rel) || !voc.is_attribute(obj)) {
            ++out.stats.dropped_invalid;
            return;
        }
        if (!confirmed(rel, obj)) {
            ++out.stats.dropped_unvalidated;
            return;
        }
        out.stats.accepted_multiset.push_back({entity, rel, obj});
    };

    if (cfg.mode == proposal_mode::relation_aware) {
        for (const token_id rel : voc.relations) {
            const token_id obj =
                argmax_token(next_token_dist(current, {voc.bos, entity, rel}));
            consider(rel, obj);
        }
    } else {
        const int n = cfg.n_proposals > 0 ? cfg.n_proposals
                                          : 4 * int(voc.relations.size());
        for (int i = 0; i < n; ++i) {
            const auto drawn =
                sample_decode(current, {voc.bos, entity}, cfg.temperature, gen, 1,
                              /*eos_id=*/-1);
            const token_id rel = drawn.back();
            token_id obj = -1;
            if (voc.is_relation(rel))
                obj = argmax_token(next_token_dist(current, {voc.bos, entity, rel}));
            consider(rel, obj);
        }
    }

    out.triplets = out.stats.accepted_multiset;
    std::sort(out.triplets.begin(), out.triplets.end());
    out.triplets.erase(std::unique(out.triplets.begin(), out.triplets.end()),
                       out.triplets.end());
    out.pairs = convert_triplets(world, out.triplets);
    return out;
}

std::vector<token_seq> get_sent(const model& ref, const vocab& voc, token_id entity,
                                int n_groups) {
    check_entity(voc, entity);
    if (n_groups < 1)
        throw config_error("n_groups must be >= 1, got " + std::to_string(n_groups));
    if (n_groups > int(voc.group_markers.size()))
        throw config_error("n_groups (" + std::to_string(n_groups) +
                           ") exceeds the marker count (" +
                           std::to_string(voc.group_markers.size()) + ")");

    std::vector<token_seq> sentences;
    for (int g = 0; g < n_groups; ++g) {
        const token_seq seed = {voc.bos, voc.tell, entity,
                                voc.group_markers[std::size_t(g)]};
        const int budget = ref.config.context_window - int(seed.size());
        sentences.push_back(greedy_decode(ref, seed, budget, voc.eos));
    }
    return sentences;
}

} // namespace culab
