#include "culab/unlearn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "culab/errors.hpp"
#include "culab/rng.hpp"

namespace culab {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_config(const unlearn_config& cfg) {
    if (cfg.max_epochs < 1) throw config_error("max_epochs must be >= 1");
    if (cfg.grid_step < 1) throw config_error("grid_step must be >= 1");
    if (cfg.schedule_period < cfg.max_epochs)
        throw config_error("schedule_period must cover max_epochs");
    if (!(cfg.lr_min > 0.0) || !(cfg.lr_max >= cfg.lr_min))
        throw config_error("learning-rate bounds need 0 < lr_min <= lr_max");
    if (!(cfg.lr_scale > 0.0)) throw config_error("lr_scale must be > 0");
    if (cfg.loss == loss_kind::npo && !(cfg.beta > 0.0))
        throw config_error("beta must be > 0");
}

void check_target(const synthetic_world& world, token_id target) {
    if (!world.voc.is_entity(target))
        throw lookup_error("not an entity token: " + std::to_string(target));
    if (std::find(world.utility_entities.begin(), world.utility_entities.end(),
                  target) != world.utility_entities.end())
        throw config_error("'" + world.voc.name_of(target) +
                           "' is a utility entity and cannot be the unlearning target");
}

bool zeroed(const accuracy_result& r) { return !r.defined || r.value == 0.0; }

struct drive_plan {
    bool extract = false;
    bool attr_step = false;
    bool sent_step = false;
    bool corpus_sentences = false;
    bool stop_on_empty = false;
};

void emit(const observer_fn& observer, int epoch, epoch_event::phase what,
          const model& m, int n_pairs = 0) {
    if (!observer) return;
    epoch_event ev;
    ev.epoch = epoch;
    ev.what = what;
    ev.params_checksum = params_checksum(m);
    ev.n_pairs = n_pairs;
    observer(ev);
}

run_result drive(const model& pre, const synthetic_world& world, token_id target,
                 const unlearn_config& cfg, const probe_suite& suite,
                 const observer_fn& observer, const std::vector<token_id>& others,
                 const drive_plan& plan) {
    check_config(cfg);
    check_target(world, target);
    const std::uint64_t pre_checksum = params_checksum(pre);

    run_result res;
    res.final_model = pre;

    std::vector<token_seq> sentences;
    if (plan.sent_step) {
        sentences = plan.corpus_sentences
                        ? render_explanatory(world, target,
                                             world.spec.explanatory_group_size)
                        : get_sent(pre, world.voc, target,
                                   world.n_explanatory_groups());
    }

    auto take_checkpoint = [&](int epoch, double lr, double attr_v, double sent_v,
                               const extraction_stats& stats) {
        checkpoint_record c;
        c.epoch = epoch;
        c.lr = lr;
        c.attr_loss_value = attr_v;
        c.sent_loss_value = sent_v;
        c.extraction_proposals = stats.proposals_made;
        c.extraction_accepted = int(stats.accepted_multiset.size());
        c.extraction_invalid = stats.dropped_invalid;
        c.extraction_unvalidated = stats.dropped_unvalidated;
        c.report = evaluate(res.final_model, world, target, suite, others);
        res.checkpoints.push_back(std::move(c));
        emit(observer, epoch, epoch_event::phase::evaluated, res.final_model);
        const auto& r = res.checkpoints.back().report;
        return zeroed(r.target_node) && zeroed(r.target_edge);
    };

    std::vector<double> grad(param_count(pre.config));
    bool stopped = false;

    if (take_checkpoint(0, 0.0, kNan, kNan, {})) {
        res.stopped_epoch = 0;
        res.stop_reason = "metrics_zero";
        stopped = true;
    }

    for (int t = 1; !stopped && t <= cfg.max_epochs; ++t) {
        const double lr = lr_at(cfg, t);
        res.lr_trace.push_back(lr);
        double attr_v = kNan;
        double sent_v = kNan;
        extraction_stats stats;

        std::vector<scored_pair> pairs;
        if (plan.extract) {
            rng gen(derive_seed(cfg.seed, "get_attr_epoch_" + std::to_string(t)));
            auto ex = get_attr(res.final_model, pre, world, target, cfg.extraction, gen);
            stats = std::move(ex.stats);
            pairs = std::move(ex.pairs);
            emit(observer, t, epoch_event::phase::extracted, res.final_model,
                 int(pairs.size()));
            if (pairs.empty() && plan.stop_on_empty) {
                res.attr_loss_trace.push_back(attr_v);
                res.sent_loss_trace.push_back(sent_v);
                take_checkpoint(t, lr, attr_v, sent_v, stats);
                res.stopped_epoch = t;
                res.stop_reason = "empty_extraction";
                stopped = true;
                break;
            }
        }

        if (plan.attr_step && !pairs.empty()) {
            std::fill(grad.begin(), grad.end(), 0.0);
            attr_v = attr_loss_grad(res.final_model, pre, cfg.loss, pairs, cfg.beta,
                                    grad);
            if (!std::isfinite(attr_v))
                throw numeric_error("attribution loss turned non-finite at epoch " +
                                    std::to_string(t));
            for (std::size_t i = 0; i < grad.size(); ++i)
                res.final_model.params[i] -= lr * grad[i];
            emit(observer, t, epoch_event::phase::after_attr_step, res.final_model);
        }

        if (plan.sent_step) {
            std::fill(grad.begin(), grad.end(), 0.0);
            sent_v = sent_loss_grad(res.final_model, pre, cfg.loss, sentences,
                                    cfg.beta, grad);
            if (!std::isfinite(sent_v))
                throw numeric_error("sentence loss turned non-finite at epoch " +
                                    std::to_string(t));
            for (std::size_t i = 0; i < grad.size(); ++i)
                res.final_model.params[i] -= lr * grad[i];
            emit(observer, t, epoch_event::phase::after_sent_step, res.final_model);
        }

        res.attr_loss_trace.push_back(attr_v);
        res.sent_loss_trace.push_back(sent_v);

        if (t % cfg.grid_step == 0 || t == cfg.max_epochs) {
            if (take_checkpoint(t, lr, attr_v, sent_v, stats)) {
                res.stopped_epoch = t;
                res.stop_reason = "metrics_zero";
                stopped = true;
            }
        }
    }

    if (!stopped) {
        res.stopped_epoch = cfg.max_epochs;
        res.stop_reason = "epoch_limit";
    }
    if (params_checksum(pre) != pre_checksum)
        throw numeric_error("the reference model changed during the run");
    return res;
}

} // namespace

double lr_at(const unlearn_config& cfg, int epoch) {
    check_config(cfg);
    if (epoch < 0 || epoch > cfg.schedule_period)
        throw config_error("epoch " + std::to_string(epoch) +
                           " is outside the schedule period [0, " +
                           std::to_string(cfg.schedule_period) + "]");
    const double lo = cfg.lr_min * cfg.lr_scale;
    const double hi = cfg.lr_max * cfg.lr_scale;
    const double phase = double(epoch) * 3.14159265358979323846 /
                         double(cfg.schedule_period);
    return lo + 0.5 * (hi - lo) * (1.0 - std::cos(phase));
}

run_result run_unlearning(const model& pre, const synthetic_world& world,
                          token_id target, const unlearn_config& cfg,
                          const probe_suite& suite, const observer_fn& observer,
                          const std::vector<token_id>& others) {
    drive_plan plan;
    switch (cfg.method) {
        case unlearn_method::full:
            plan.extract = plan.attr_step = plan.sent_step = true;
            break;
        case unlearn_method::l1_only:
            plan.extract = plan.attr_step = true;
            plan.stop_on_empty = true;
            break;
        case unlearn_method::l2_only:
            plan.sent_step = true;
            break;
    }
    return drive(pre, world, target, cfg, suite, observer, others, plan);
}

run_result run_corpus_baseline(const model& pre, const synthetic_world& world,
                               token_id target, const unlearn_config& cfg,
                               const probe_suite& suite, const observer_fn& observer,
                               const std::vector<token_id>& others) {
    drive_plan plan;
    plan.sent_step = true;
    plan.corpus_sentences = true;
    return drive(pre, world, target, cfg, suite, observer, others, plan);
}

token_seq icu_wrap(const vocab& voc, token_id target, const token_seq& prompt) {
    if (!voc.is_entity(target))
        throw lookup_error("not an entity token: " + std::to_string(target));
    if (prompt.empty() || prompt.front() != voc.bos)
        throw config_error("prompts must start with BOS to carry the instruction");
    if (prompt.size() >= 2 && prompt[1] == voc.unlearn)
        throw config_error("prompt already carries the unlearning instruction");
    token_seq out = {voc.bos, voc.unlearn, target};
    out.insert(out.end(), prompt.begin() + 1, prompt.end());
    return out;
}

eval_report evaluate_icu(const model& pre, const synthetic_world& world,
                         token_id target, const probe_suite& suite,
                         const std::vector<token_id>& others_in) {
    check_target(world, target);
    const vocab& voc = world.voc;

    auto wrapped = [&](const std::vector<probe>& probes) {
        std::vector<probe> out;
        out.reserve(probes.size());
        for (const auto& p : probes) out.push_back({icu_wrap(voc, target, p.prefix), p.target});
        return out;
    };

    std::vector<token_id> others = others_in;
    if (others.empty()) {
        for (const token_id e : voc.entities) {
            if (e == target) continue;
            if (std::find(world.utility_entities.begin(),
                          world.utility_entities.end(),
                          e) != world.utility_entities.end())
                continue;
            others.push_back(e);
        }
    }

    eval_report report;
    report.target_node = probe_accuracy(pre, wrapped(suite.of(voc, target).node));
    report.target_edge = probe_accuracy(pre, wrapped(suite.of(voc, target).edge));
    report.others_node = probe_accuracy(
        pre, wrapped(collect_probes(suite, voc, others, probe_kind::node)));
    report.others_edge = probe_accuracy(
        pre, wrapped(collect_probes(suite, voc, others, probe_kind::edge)));
    report.utility_edge = probe_accuracy(
        pre,
        wrapped(collect_probes(suite, voc, world.utility_entities, probe_kind::edge)));

    std::vector<token_seq> prompts;
    for (const auto& p : cu_prompts(world, target))
        prompts.push_back(icu_wrap(voc, target, p));
    const auto cu = cu_check_over(pre, world, target, prompts);
    report.cu_prompts = cu.prompts;
    report.cu_violations = cu.violations;
    return report;
}

} // namespace culab
