#pragma once

#include <string>
#include <vector>

#include "culab/config.hpp"
#include "culab/eval.hpp"
#include "culab/model.hpp"
#include "culab/unlearn.hpp"
#include "culab/world.hpp"

namespace culab {

// One experiment lives in its output directory:
//   world.json            generated world checkpoint
//   dataset.json          masked-sentence dataset export
//   model.bin             memorized starting model
//   train_report.txt      memorization report
//   runs/<method>_<target>/{trace.txt, run.json, final.bin}
// Commands refuse to overwrite their own outputs unless forced, and never
// touch another command's.

std::string world_path(const experiment_config& cfg);
std::string dataset_path(const experiment_config& cfg);
std::string model_path(const experiment_config& cfg);
std::string run_dir(const experiment_config& cfg, run_method method,
                    const std::string& target_name);
/// The final model a finished run leaves behind (icu leaves none).
std::string checkpoint_path(const experiment_config& cfg, run_method method,
                            const std::string& target_name);

struct gen_world_result {
    synthetic_world world;
    std::string world_file;
    std::string dataset_file;
};

gen_world_result cmd_gen_world(const experiment_config& cfg, bool force);

struct train_result {
    model trained;
    double final_nll = 0.0;
    /// Final NLL at or under the configured threshold.
    bool converged = false;
    int node_probes_kept = 0;
    int edge_probes_kept = 0;
    std::string model_file;
    std::string report_file;
};

train_result cmd_train(const experiment_config& cfg, bool force);

struct unlearn_cmd_result {
    bool is_icu = false;
    /// Populated for every method except icu.
    run_result run;
    /// The final evaluation: the run's last checkpoint report, or the
    /// wrapped-prompt evaluation for icu.
    eval_report final_report;
    /// Self-supervision quality: coverage and precision of this method's
    /// extraction settings against the starting model's memorized slice.
    kg_metrics kg;
    std::string directory;
    std::string trace_file;
    std::string summary_file;
    std::string checkpoint_file; // empty for icu
};

unlearn_cmd_result cmd_unlearn(const experiment_config& cfg, run_method method,
                               const std::string& target_name, bool force);

struct eval_row {
    std::string target;
    eval_report report;
    /// Extraction of the evaluated model, validated against the starting
    /// model: what is still recoverable.
    kg_metrics kg;
};

/// Scores a checkpoint (the starting model when checkpoint_file is empty)
/// on every configured target.
std::vector<eval_row> cmd_eval(const experiment_config& cfg,
                               const std::string& checkpoint_file);

std::string format_eval_rows(const std::vector<eval_row>& rows);

struct report_result {
    std::string text;
    std::string report_file;
};

/// Aggregates finished runs into one columnar table: a row per run plus a
/// mean row per method. Writes to out_file unless it is empty.
report_result cmd_report(const std::vector<std::string>& run_dirs,
                         const std::string& out_file);

} // namespace culab
