// Command-line front end for the concept-unlearning laboratory.
//
// Subcommands walk the experiment pipeline in order:
//   gen-world   generate the synthetic world and its dataset export
//   train       memorize the world into a fresh model
//   unlearn     run one unlearning method against one target entity
//   eval        score the starting model or a run's checkpoint
//   report      aggregate finished runs into one table
//
// Exit codes: 0 success, 1 bad usage or configuration, 2 runtime failure
// (missing files, numerical trouble, a model that failed to memorize).

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "culab/errors.hpp"
#include "culab/experiment.hpp"
#include "culab/rng.hpp"

namespace fs = std::filesystem;
using namespace culab;

namespace {

struct cli_options {
    std::string config_path;
    std::string out_dir;
    std::string method;
    std::string target;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool force = false;
    std::vector<std::string> report_dirs;
};

experiment_config load_config(const cli_options& opt) {
    experiment_config cfg = opt.config_path.empty()
                                ? parse_experiment(config_file::parse(""))
                                : read_experiment_file(opt.config_path);
    if (opt.seed_set) {
        cfg.master_seed = opt.seed;
        cfg.world.seed = derive_seed(opt.seed, "world");
        cfg.model.seed = derive_seed(opt.seed, "model");
    }
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    return cfg;
}

std::string show(const accuracy_result& r) {
    if (!r.defined) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", r.value);
    return buf;
}

int run_gen_world(const cli_options& opt) {
    const experiment_config cfg = load_config(opt);
    const gen_world_result made = cmd_gen_world(cfg, opt.force);
    std::cout << "world:   " << made.world_file << '\n'
              << "dataset: " << made.dataset_file << '\n'
              << made.world.voc.size() << " tokens, "
              << made.world.voc.entities.size() << " entities, "
              << made.world.facts.size() << " facts\n";
    return 0;
}

int run_train(const cli_options& opt) {
    const experiment_config cfg = load_config(opt);
    const train_result trained = cmd_train(cfg, opt.force);
    std::cout << "model:  " << trained.model_file << '\n'
              << "report: " << trained.report_file << '\n';
    char nll[64];
    std::snprintf(nll, sizeof nll, "final nll %.6f (threshold %.6f)",
                  trained.final_nll, cfg.train.nll_threshold);
    std::cout << nll << ", probes kept: node " << trained.node_probes_kept
              << ", edge " << trained.edge_probes_kept << '\n';
    if (!trained.converged) {
        std::cerr << "error: the model did not memorize its world: " << nll
                  << '\n';
        return 2;
    }
    return 0;
}

int run_unlearn(const cli_options& opt) {
    const experiment_config cfg = load_config(opt);
    const run_method method = parse_run_method(opt.method);
    const unlearn_cmd_result r = cmd_unlearn(cfg, method, opt.target, opt.force);

    std::cout << "run: " << r.directory << '\n';
    if (r.is_icu)
        std::cout << "evaluated in place behind the in-context instruction\n";
    else
        std::cout << "stopped after epoch " << r.run.stopped_epoch << " ("
                  << r.run.stop_reason << ")\n";
    const eval_report& rep = r.final_report;
    std::cout << "target node " << show(rep.target_node) << ", edge "
              << show(rep.target_edge) << "; others node "
              << show(rep.others_node) << ", edge " << show(rep.others_edge)
              << "; utility " << show(rep.utility_edge) << "; cu "
              << rep.cu_violations << "/" << rep.cu_prompts << '\n';
    return 0;
}

int run_eval(const cli_options& opt) {
    experiment_config cfg = load_config(opt);
    std::string checkpoint;
    if (!opt.method.empty()) {
        if (opt.target.empty())
            throw config_error(
                "--method needs --target to name which run's checkpoint to "
                "evaluate");
        const run_method method = parse_run_method(opt.method);
        if (method == run_method::icu)
            throw config_error(
                "the in-context method modifies no parameters and leaves no "
                "checkpoint; evaluate the starting model instead");
        checkpoint = checkpoint_path(cfg, method, opt.target);
    } else if (!opt.target.empty()) {
        cfg.targets = {opt.target};
    }
    std::cout << format_eval_rows(cmd_eval(cfg, checkpoint));
    return 0;
}

int run_report(const cli_options& opt) {
    const experiment_config cfg = load_config(opt);
    std::vector<std::string> dirs = opt.report_dirs;
    if (dirs.empty()) {
        const fs::path root = fs::path(cfg.out_dir) / "runs";
        if (!fs::is_directory(root))
            throw config_error("no finished runs under " + root.string() +
                               "; run the unlearn command first");
        for (const auto& entry : fs::directory_iterator(root))
            if (entry.is_directory()) dirs.push_back(entry.path().string());
        std::sort(dirs.begin(), dirs.end());
        if (dirs.empty())
            throw config_error("no finished runs under " + root.string() +
                               "; run the unlearn command first");
    }

    const std::string out_file = (fs::path(cfg.out_dir) / "report.txt").string();
    if (!opt.force && fs::exists(out_file))
        throw config_error("output already exists: " + out_file +
                           " (pass --force to overwrite)");
    const report_result rep = cmd_report(dirs, out_file);
    std::cout << rep.text << "wrote " << rep.report_file << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concept-unlearning laboratory"};
    app.require_subcommand(1);
    cli_options opt;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path,
                        "Experiment configuration file (defaults apply "
                        "without one)");
        sub->add_option("--out", opt.out_dir,
                        "Experiment directory (overrides the config)");
        sub->add_option("--seed", opt.seed,
                        "Master seed (overrides the config)")
            ->trigger_on_parse()
            ->each([&](const std::string&) { opt.seed_set = true; });
    };

    CLI::App* gen = app.add_subcommand(
        "gen-world", "Generate the synthetic world and dataset export");
    add_common(gen);
    gen->add_flag("--force", opt.force, "Overwrite existing outputs");

    CLI::App* train =
        app.add_subcommand("train", "Memorize the world into a fresh model");
    add_common(train);
    train->add_flag("--force", opt.force, "Overwrite existing outputs");

    CLI::App* unlearn = app.add_subcommand(
        "unlearn", "Run one unlearning method against one target");
    add_common(unlearn);
    unlearn->add_option("--method", opt.method, "Method name")->required();
    unlearn->add_option("--target", opt.target, "Target entity name")
        ->required();
    unlearn->add_flag("--force", opt.force, "Overwrite an existing run");

    CLI::App* eval = app.add_subcommand(
        "eval", "Score the starting model, or a run's checkpoint via "
                "--method and --target");
    add_common(eval);
    eval->add_option("--method", opt.method,
                     "Evaluate this method's checkpoint (needs --target)");
    eval->add_option("--target", opt.target,
                     "With --method names the run; alone restricts the table "
                     "to this target");

    CLI::App* report =
        app.add_subcommand("report", "Aggregate finished runs into one table");
    add_common(report);
    report->add_option("dirs", opt.report_dirs,
                       "Run directories (default: every directory under "
                       "<out>/runs)");
    report->add_flag("--force", opt.force, "Overwrite an existing report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) return run_gen_world(opt);
        if (train->parsed()) return run_train(opt);
        if (unlearn->parsed()) return run_unlearn(opt);
        if (eval->parsed()) return run_eval(opt);
        return run_report(opt);
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
