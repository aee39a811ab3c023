#include "culab/experiment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "culab/errors.hpp"
#include "culab/extract.hpp"
#include "culab/rng.hpp"

namespace fs = std::filesystem;

namespace culab {
namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void refuse_existing(const std::string& path, bool force) {
    if (!force && fs::exists(path))
        throw config_error("output already exists: " + path +
                           " (pass --force to overwrite)");
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << text;
    if (!out) throw io_error("write failed on " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw io_error("read failed on " + path);
    return buf.str();
}

std::string num(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string metric_cell(const accuracy_result& r) {
    return r.defined ? num("%.6f", r.value) : "-";
}

std::string loss_cell(double v) { return std::isnan(v) ? "-" : num("%.9g", v); }

/// Left-aligned columns sized to their widest cell, two spaces between
/// columns, no trailing whitespace.
std::string table_to_text(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t i = 0; i < row.size(); ++i)
            width[i] = std::max(width[i], row[i].size());
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) {
            line += row[i];
            if (i + 1 < row.size())
                line.append(width[i] + 2 - row[i].size(), ' ');
        }
        out += line;
        out += '\n';
    }
    return out;
}

token_id resolve_entity(const synthetic_world& world, const std::string& name) {
    const token_id id = world.voc.find(name);
    if (!world.voc.is_entity(id))
        throw lookup_error("'" + name + "' names a " +
                           std::string(world.voc.is_relation(id) ? "relation"
                                       : world.voc.is_attribute(id)
                                           ? "attribute"
                                           : "special token") +
                           ", not an entity");
    return id;
}

bool is_utility(const synthetic_world& world, token_id id) {
    const auto& u = world.utility_entities;
    return std::find(u.begin(), u.end(), id) != u.end();
}

token_id resolve_target(const synthetic_world& world, const std::string& name) {
    const token_id id = resolve_entity(world, name);
    if (is_utility(world, id))
        throw config_error("'" + name +
                           "' is a utility entity and cannot be a target");
    return id;
}

std::vector<token_id> resolve_others(const synthetic_world& world,
                                     const std::vector<std::string>& names,
                                     token_id target) {
    std::vector<token_id> ids;
    ids.reserve(names.size());
    for (const auto& name : names) {
        const token_id id = resolve_entity(world, name);
        if (id == target)
            throw config_error("others entry '" + name +
                               "' is the unlearning target itself");
        if (is_utility(world, id))
            throw config_error("others entry '" + name +
                               "' is a utility entity");
        ids.push_back(id);
    }
    return ids;
}

std::pair<synthetic_world, model> load_experiment_state(const experiment_config& cfg) {
    synthetic_world world = read_world_file(world_path(cfg));
    model pre = load_model(model_path(cfg));
    if (pre.config.vocab_size != world.voc.size())
        throw config_error("model " + model_path(cfg) + " was trained on " +
                           std::to_string(pre.config.vocab_size) +
                           " tokens but the world has " +
                           std::to_string(world.voc.size()));
    return {std::move(world), std::move(pre)};
}

std::vector<std::string> trace_header() {
    return {"epoch",    "lambda",      "l1",          "l2",      "accepted",
            "node_acc", "edge_acc",    "node_others", "edge_others", "utility"};
}

std::vector<std::string> trace_row(const checkpoint_record& c) {
    return {std::to_string(c.epoch),
            num("%.9g", c.lr),
            loss_cell(c.attr_loss_value),
            loss_cell(c.sent_loss_value),
            std::to_string(c.extraction_accepted),
            metric_cell(c.report.target_node),
            metric_cell(c.report.target_edge),
            metric_cell(c.report.others_node),
            metric_cell(c.report.others_edge),
            metric_cell(c.report.utility_edge)};
}

nlohmann::json metric_json(const accuracy_result& r) {
    if (!r.defined) return nullptr;
    return r.value;
}

nlohmann::json summary_json(const std::string& method_name,
                            const std::string& target_name,
                            const unlearn_cmd_result& r) {
    const checkpoint_record* last =
        r.is_icu ? nullptr : &r.run.checkpoints.back();

    nlohmann::json j;
    j["method"] = method_name;
    j["target"] = target_name;
    j["stop_epoch"] = r.is_icu ? 0 : r.run.stopped_epoch;
    j["stop_reason"] = r.is_icu ? "icu" : r.run.stop_reason;
    j["metrics"]["node"] = metric_json(r.final_report.target_node);
    j["metrics"]["edge"] = metric_json(r.final_report.target_edge);
    j["metrics"]["node_others"] = metric_json(r.final_report.others_node);
    j["metrics"]["edge_others"] = metric_json(r.final_report.others_edge);
    j["metrics"]["utility"] = metric_json(r.final_report.utility_edge);
    j["cu"]["prompts"] = r.final_report.cu_prompts;
    j["cu"]["violations"] = r.final_report.cu_violations;
    j["kg"]["coverage"] = metric_json(r.kg.coverage);
    j["kg"]["precision"] = metric_json(r.kg.precision);
    j["kg"]["n_memorized"] = r.kg.n_memorized;
    j["kg"]["n_accepted_unique"] = r.kg.n_accepted_unique;
    j["kg"]["n_accepted_total"] = r.kg.n_accepted_total;
    j["extraction"]["proposals"] = last ? last->extraction_proposals : 0;
    j["extraction"]["accepted"] = last ? last->extraction_accepted : 0;
    j["extraction"]["invalid"] = last ? last->extraction_invalid : 0;
    j["extraction"]["unvalidated"] = last ? last->extraction_unvalidated : 0;
    return j;
}

/// One parsed run summary, reduced to the report's value columns.
struct summary_row {
    std::string method;
    std::string target;
    std::array<std::optional<double>, 7> values; // node..utility, kg pair
};

std::optional<double> json_metric(const nlohmann::json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

summary_row read_run_summary(const std::string& dir) {
    const std::string path = join(dir, "run.json");
    if (!fs::exists(path))
        throw io_error("no run summary at " + path +
                       "; run the unlearn command for this directory first");
    try {
        const nlohmann::json j = nlohmann::json::parse(read_text(path));
        summary_row row;
        row.method = j.at("method").get<std::string>();
        row.target = j.at("target").get<std::string>();
        const auto& m = j.at("metrics");
        row.values[0] = json_metric(m.at("node"));
        row.values[1] = json_metric(m.at("edge"));
        row.values[2] = json_metric(m.at("node_others"));
        row.values[3] = json_metric(m.at("edge_others"));
        row.values[4] = json_metric(m.at("utility"));
        row.values[5] = json_metric(j.at("kg").at("coverage"));
        row.values[6] = json_metric(j.at("kg").at("precision"));
        return row;
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(path, e.what());
    }
}

std::vector<std::string> report_cells(const std::string& method,
                                      const std::string& target,
                                      const std::array<std::optional<double>, 7>& v) {
    std::vector<std::string> cells = {method, target};
    for (const auto& value : v)
        cells.push_back(value ? num("%.6f", *value) : "-");
    return cells;
}

} // namespace

std::string world_path(const experiment_config& cfg) {
    return join(cfg.out_dir, "world.json");
}

std::string dataset_path(const experiment_config& cfg) {
    return join(cfg.out_dir, "dataset.json");
}

std::string model_path(const experiment_config& cfg) {
    return join(cfg.out_dir, "model.bin");
}

std::string run_dir(const experiment_config& cfg, run_method method,
                    const std::string& target_name) {
    return join(join(cfg.out_dir, "runs"),
                run_method_name(method) + "_" + target_name);
}

std::string checkpoint_path(const experiment_config& cfg, run_method method,
                            const std::string& target_name) {
    return join(run_dir(cfg, method, target_name), "final.bin");
}

gen_world_result cmd_gen_world(const experiment_config& cfg, bool force) {
    gen_world_result result;
    result.world_file = world_path(cfg);
    result.dataset_file = dataset_path(cfg);
    refuse_existing(result.world_file, force);
    refuse_existing(result.dataset_file, force);

    result.world = generate_world(cfg.world);
    fs::create_directories(cfg.out_dir);
    write_world_file(result.world_file, result.world);
    write_dataset_file(result.dataset_file, export_dataset(result.world));
    return result;
}

train_result cmd_train(const experiment_config& cfg, bool force) {
    train_result result;
    result.model_file = model_path(cfg);
    result.report_file = join(cfg.out_dir, "train_report.txt");
    refuse_existing(result.model_file, force);
    refuse_existing(result.report_file, force);

    const synthetic_world world = read_world_file(world_path(cfg));
    model_config mcfg = cfg.model;
    mcfg.vocab_size = world.voc.size();

    result.trained = init_model(mcfg);
    const std::vector<token_seq> corpus = build_training_corpus(world);
    const std::vector<double> nll_trace =
        finetune(result.trained, corpus, cfg.train.epochs, cfg.train.lr);
    result.final_nll = corpus_nll(result.trained, corpus);
    result.converged = result.final_nll <= cfg.train.nll_threshold;

    const probe_suite suite = build_probes(world, result.trained);
    result.node_probes_kept = suite.node_kept;
    result.edge_probes_kept = suite.edge_kept;

    std::ostringstream report;
    report << "memorization training\n\n";
    std::vector<std::vector<std::string>> facts = {
        {"corpus sequences", std::to_string(corpus.size())},
        {"train epochs", std::to_string(cfg.train.epochs)},
        {"learning rate", num("%.9g", cfg.train.lr)},
        {"initial nll", num("%.6f", nll_trace.empty() ? result.final_nll
                                                      : nll_trace.front())},
        {"final nll", num("%.6f", result.final_nll)},
        {"nll threshold", num("%.6f", cfg.train.nll_threshold)},
        {"converged", result.converged ? "yes" : "no"},
        {"node probes kept", std::to_string(suite.node_kept) + " / " +
                                 std::to_string(suite.node_built)},
        {"edge probes kept", std::to_string(suite.edge_kept) + " / " +
                                 std::to_string(suite.edge_built)},
    };
    report << table_to_text(facts) << '\n';

    std::vector<std::vector<std::string>> per_entity = {{"entity", "node", "edge"}};
    for (const token_id e : world.voc.entities) {
        const entity_probes& probes = suite.of(world.voc, e);
        per_entity.push_back({world.voc.name_of(e),
                              std::to_string(probes.node.size()),
                              std::to_string(probes.edge.size())});
    }
    report << table_to_text(per_entity);

    fs::create_directories(cfg.out_dir);
    save_model(result.model_file, result.trained);
    write_text(result.report_file, report.str());
    return result;
}

unlearn_cmd_result cmd_unlearn(const experiment_config& cfg, run_method method,
                               const std::string& target_name, bool force) {
    auto [world, pre] = load_experiment_state(cfg);
    const token_id target = resolve_target(world, target_name);
    const std::vector<token_id> others =
        resolve_others(world, cfg.others, target);

    const method_plan plan = plan_for(method, cfg.unlearn.loss);
    unlearn_config ucfg = cfg.unlearn;
    ucfg.loss = plan.loss;
    ucfg.method = plan.mode;
    ucfg.seed = run_seed(cfg, method, target_name);

    unlearn_cmd_result result;
    result.is_icu = plan.icu;
    result.directory = run_dir(cfg, method, target_name);
    result.trace_file = join(result.directory, "trace.txt");
    result.summary_file = join(result.directory, "run.json");
    if (!plan.icu)
        result.checkpoint_file = checkpoint_path(cfg, method, target_name);

    refuse_existing(result.trace_file, force);
    refuse_existing(result.summary_file, force);
    if (!plan.icu) refuse_existing(result.checkpoint_file, force);

    // Self-supervision quality: what this method's extraction settings
    // recover from the starting model, before anything is unlearned.
    rng kg_gen(derive_seed(ucfg.seed, "kg"));
    const attr_extraction kg_extraction =
        get_attr(pre, pre, world, target, ucfg.extraction, kg_gen);
    result.kg =
        kg_eval(kg_extraction.stats, memorized_facts(pre, world, target));

    const probe_suite suite = build_probes(world, pre);
    std::vector<std::vector<std::string>> trace = {trace_header()};

    if (plan.icu) {
        result.final_report = evaluate_icu(pre, world, target, suite, others);
        checkpoint_record row;
        row.epoch = 0;
        row.lr = 0.0;
        row.attr_loss_value = std::nan("");
        row.sent_loss_value = std::nan("");
        row.report = result.final_report;
        trace.push_back(trace_row(row));
    } else {
        result.run = plan.corpus
                         ? run_corpus_baseline(pre, world, target, ucfg, suite,
                                               {}, others)
                         : run_unlearning(pre, world, target, ucfg, suite, {},
                                          others);
        result.final_report = result.run.checkpoints.back().report;
        for (const checkpoint_record& c : result.run.checkpoints)
            trace.push_back(trace_row(c));
    }

    fs::create_directories(result.directory);
    if (!plan.icu) save_model(result.checkpoint_file, result.run.final_model);
    write_text(result.trace_file, table_to_text(trace));
    write_text(result.summary_file,
               summary_json(run_method_name(method), target_name, result)
                       .dump(2) +
                   "\n");
    return result;
}

std::vector<eval_row> cmd_eval(const experiment_config& cfg,
                               const std::string& checkpoint_file) {
    if (cfg.targets.empty())
        throw config_error("no targets configured; nothing to evaluate");

    auto [world, pre] = load_experiment_state(cfg);
    model subject = checkpoint_file.empty() ? pre : load_model(checkpoint_file);
    if (subject.config.vocab_size != world.voc.size())
        throw config_error("checkpoint " + checkpoint_file +
                           " does not match the world's vocabulary");
    const probe_suite suite = build_probes(world, pre);

    std::vector<eval_row> rows;
    rows.reserve(cfg.targets.size());
    for (const std::string& name : cfg.targets) {
        const token_id target = resolve_target(world, name);
        eval_row row;
        row.target = name;
        row.report = evaluate(subject, world, target, suite,
                              resolve_others(world, cfg.others, target));
        rng gen(derive_seed(cfg.master_seed, "eval_kg:" + name));
        const attr_extraction extraction =
            get_attr(subject, pre, world, target, cfg.unlearn.extraction, gen);
        row.kg = kg_eval(extraction.stats, memorized_facts(pre, world, target));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_eval_rows(const std::vector<eval_row>& rows) {
    std::vector<std::vector<std::string>> table = {
        {"target", "node", "edge", "node_others", "edge_others", "utility",
         "cu_violations", "kg_coverage", "kg_precision"}};
    for (const eval_row& row : rows)
        table.push_back({row.target,
                         metric_cell(row.report.target_node),
                         metric_cell(row.report.target_edge),
                         metric_cell(row.report.others_node),
                         metric_cell(row.report.others_edge),
                         metric_cell(row.report.utility_edge),
                         std::to_string(row.report.cu_violations) + "/" +
                             std::to_string(row.report.cu_prompts),
                         metric_cell(row.kg.coverage),
                         metric_cell(row.kg.precision)});
    return table_to_text(table);
}

report_result cmd_report(const std::vector<std::string>& run_dirs,
                         const std::string& out_file) {
    std::vector<summary_row> rows;
    rows.reserve(run_dirs.size());
    for (const std::string& dir : run_dirs) rows.push_back(read_run_summary(dir));

    std::vector<std::vector<std::string>> table = {
        {"method", "target", "node", "edge", "node_others", "edge_others",
         "utility", "kg_coverage", "kg_precision"}};
    for (const summary_row& row : rows)
        table.push_back(report_cells(row.method, row.target, row.values));

    std::vector<std::string> method_order;
    for (const summary_row& row : rows)
        if (std::find(method_order.begin(), method_order.end(), row.method) ==
            method_order.end())
            method_order.push_back(row.method);

    for (const std::string& method : method_order) {
        std::array<std::optional<double>, 7> mean;
        for (std::size_t i = 0; i < mean.size(); ++i) {
            double sum = 0.0;
            int n = 0;
            for (const summary_row& row : rows) {
                if (row.method != method || !row.values[i]) continue;
                sum += *row.values[i];
                ++n;
            }
            if (n > 0) mean[i] = sum / n;
        }
        table.push_back(report_cells(method, "mean", mean));
    }

    report_result result;
    result.text = table_to_text(table);
    result.report_file = out_file;
    if (!out_file.empty()) {
        const fs::path parent = fs::path(out_file).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        write_text(out_file, result.text);
    }
    return result;
}

} // namespace culab
