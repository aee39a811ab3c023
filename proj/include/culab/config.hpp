#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "culab/extract.hpp"
#include "culab/losses.hpp"
#include "culab/model.hpp"
#include "culab/unlearn.hpp"
#include "culab/world.hpp"

namespace culab {

/// A parsed key=value configuration file: one assignment per line, '#'
/// comments, keys of the form "section.field". Typed getters record which
/// keys were read so that finish() can reject typos.
class config_file {
public:
    static config_file parse(const std::string& text);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback);
    int get_int(const std::string& key, int fallback);
    std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);
    /// Comma-separated list; a missing key yields the fallback, an empty
    /// value yields an empty list.
    std::vector<std::string> get_list(const std::string& key,
                                      const std::vector<std::string>& fallback);

    /// Throws schema_error naming every key that was never read.
    void finish() const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;

    const std::string* lookup(const std::string& key);
};

config_file read_config_file(const std::string& path);

/// The experiment protocols a run directory can hold, one per method name.
enum class run_method {
    ours_ga,
    ours_npo,
    l1_only,
    l2_only,
    corpus_ga,
    corpus_npo,
    icu,
};

run_method parse_run_method(const std::string& name);
std::string run_method_name(run_method m);

/// How a method maps onto the drivers: icu evaluates in place, corpus runs
/// the oracle-sentence baseline, everything else runs the main loop with
/// the given mode and loss.
struct method_plan {
    bool icu = false;
    bool corpus = false;
    unlearn_method mode = unlearn_method::full;
    loss_kind loss = loss_kind::npo;
};

method_plan plan_for(run_method m, loss_kind ablation_loss);

/// Memorization-training settings for the pre-unlearning model. The
/// defaults memorize the default world: every fact validates and every
/// explanatory sequence decodes verbatim well before the epoch budget.
struct train_config {
    int epochs = 1000;
    double lr = 0.4;
    /// cmd_train flags the run as non-converged above this final NLL.
    /// Sits above the corpus's irreducible branch entropy (several valid
    /// relations can follow an entity opener, costing about 1.4 nats even
    /// at perfect greedy recall) but well under any diverged run.
    double nll_threshold = 1.7;
};

/// Everything one experiment needs: the world, the model, training, the
/// unlearning schedule, and the protocol lists. Entity lists hold names
/// ("E3"); they resolve to token ids only once a world exists.
struct experiment_config {
    world_spec world;
    model_config model; // vocab_size stays 0 until a world fixes it
    train_config train;
    unlearn_config unlearn;
    std::vector<std::string> targets;
    std::vector<std::string> others;
    std::vector<run_method> methods;
    std::string out_dir = "out";
    std::uint64_t master_seed = 7;
};

/// Parses and validates an experiment; rejects unknown keys. The master
/// seed fans out into the world and model seeds here; per-run seeds come
/// from run_seed at launch time, so every method and target sees the same
/// world and starting model but its own extraction stream.
experiment_config parse_experiment(config_file file);
experiment_config read_experiment_file(const std::string& path);

std::uint64_t run_seed(const experiment_config& cfg, run_method method,
                       const std::string& target_name);

} // namespace culab
