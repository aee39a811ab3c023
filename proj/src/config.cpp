#include "culab/config.hpp"

#include <cerrno>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "culab/errors.hpp"
#include "culab/rng.hpp"

namespace culab {

namespace {

std::string trim(const std::string& s) {
    std::size_t lo = s.find_first_not_of(" \t\r");
    if (lo == std::string::npos) return "";
    std::size_t hi = s.find_last_not_of(" \t\r");
    return s.substr(lo, hi - lo + 1);
}

bool valid_key(const std::string& key) {
    if (key.empty()) return false;
    for (const char c : key) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '_' || c == '.';
        if (!ok) return false;
    }
    return true;
}

} // namespace

config_file config_file::parse(const std::string& text) {
    config_file file;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw schema_error("line " + std::to_string(lineno),
                               "expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (!valid_key(key))
            throw schema_error("line " + std::to_string(lineno),
                               "bad key '" + key + "'");
        if (file.values_.count(key))
            throw schema_error(key, "assigned more than once");
        file.values_[key] = trim(line.substr(eq + 1));
    }
    return file;
}

bool config_file::has(const std::string& key) const { return values_.count(key) > 0; }

const std::string* config_file::lookup(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
}

std::string config_file::get_string(const std::string& key,
                                    const std::string& fallback) {
    const std::string* v = lookup(key);
    return v ? *v : fallback;
}

int config_file::get_int(const std::string& key, int fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const long n = std::strtol(v->c_str(), &end, 10);
    if (errno != 0 || end != v->c_str() + v->size() || v->empty() ||
        n < INT_MIN || n > INT_MAX)
        throw schema_error(key, "not an integer: '" + *v + "'");
    return int(n);
}

std::uint64_t config_file::get_uint64(const std::string& key, std::uint64_t fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const unsigned long long n = std::strtoull(v->c_str(), &end, 10);
    if (errno != 0 || end != v->c_str() + v->size() || v->empty() ||
        v->front() == '-')
        throw schema_error(key, "not an unsigned integer: '" + *v + "'");
    return std::uint64_t(n);
}

double config_file::get_double(const std::string& key, double fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    errno = 0;
    char* end = nullptr;
    const double x = std::strtod(v->c_str(), &end);
    if (errno != 0 || end != v->c_str() + v->size() || v->empty())
        throw schema_error(key, "not a number: '" + *v + "'");
    return x;
}

bool config_file::get_bool(const std::string& key, bool fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    throw schema_error(key, "not a boolean: '" + *v + "'");
}

std::vector<std::string> config_file::get_list(
    const std::string& key, const std::vector<std::string>& fallback) {
    const std::string* v = lookup(key);
    if (!v) return fallback;
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= v->size()) {
        const std::size_t comma = v->find(',', pos);
        const std::string item =
            trim(v->substr(pos, comma == std::string::npos ? std::string::npos
                                                           : comma - pos));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void config_file::finish() const {
    for (const auto& [key, value] : values_)
        if (!consumed_.count(key)) throw schema_error(key, "unknown key");
}

config_file read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_file::parse(buf.str());
}

run_method parse_run_method(const std::string& name) {
    if (name == "ours_ga") return run_method::ours_ga;
    if (name == "ours_npo") return run_method::ours_npo;
    if (name == "l1_only") return run_method::l1_only;
    if (name == "l2_only") return run_method::l2_only;
    if (name == "corpus_ga") return run_method::corpus_ga;
    if (name == "corpus_npo") return run_method::corpus_npo;
    if (name == "icu") return run_method::icu;
    throw schema_error("methods", "unknown method '" + name + "'");
}

std::string run_method_name(run_method m) {
    switch (m) {
        case run_method::ours_ga: return "ours_ga";
        case run_method::ours_npo: return "ours_npo";
        case run_method::l1_only: return "l1_only";
        case run_method::l2_only: return "l2_only";
        case run_method::corpus_ga: return "corpus_ga";
        case run_method::corpus_npo: return "corpus_npo";
        case run_method::icu: return "icu";
    }
    throw config_error("unhandled method id");
}

method_plan plan_for(run_method m, loss_kind ablation_loss) {
    method_plan plan;
    switch (m) {
        case run_method::ours_ga:
            plan.loss = loss_kind::ga;
            break;
        case run_method::ours_npo:
            plan.loss = loss_kind::npo;
            break;
        case run_method::l1_only:
            plan.mode = unlearn_method::l1_only;
            plan.loss = ablation_loss;
            break;
        case run_method::l2_only:
            plan.mode = unlearn_method::l2_only;
            plan.loss = ablation_loss;
            break;
        case run_method::corpus_ga:
            plan.corpus = true;
            plan.loss = loss_kind::ga;
            break;
        case run_method::corpus_npo:
            plan.corpus = true;
            plan.loss = loss_kind::npo;
            break;
        case run_method::icu:
            plan.icu = true;
            break;
    }
    return plan;
}

experiment_config parse_experiment(config_file file) {
    experiment_config cfg;

    cfg.master_seed = file.get_uint64("seed", cfg.master_seed);
    cfg.out_dir = file.get_string("out", cfg.out_dir);

    world_spec& w = cfg.world;
    w.n_entities = file.get_int("world.n_entities", w.n_entities);
    w.n_relations = file.get_int("world.n_relations", w.n_relations);
    w.n_attributes = file.get_int("world.n_attributes", w.n_attributes);
    w.facts_per_entity = file.get_int("world.facts_per_entity", w.facts_per_entity);
    w.templates_per_relation =
        file.get_int("world.templates_per_relation", w.templates_per_relation);
    w.n_utility_entities =
        file.get_int("world.n_utility_entities", w.n_utility_entities);
    w.explanatory_group_size =
        file.get_int("world.explanatory_group_size", w.explanatory_group_size);
    w.seed = derive_seed(cfg.master_seed, "world");

    model_config& m = cfg.model;
    m.context_window = file.get_int("model.context_window", m.context_window);
    m.hidden_dim = file.get_int("model.hidden_dim", m.hidden_dim);
    m.n_layers = file.get_int("model.n_layers", m.n_layers);
    m.seed = derive_seed(cfg.master_seed, "model");

    train_config& t = cfg.train;
    t.epochs = file.get_int("train.epochs", t.epochs);
    t.lr = file.get_double("train.lr", t.lr);
    t.nll_threshold = file.get_double("train.nll_threshold", t.nll_threshold);

    unlearn_config& u = cfg.unlearn;
    const std::string loss = file.get_string("unlearn.loss", "npo");
    if (loss == "ga")
        u.loss = loss_kind::ga;
    else if (loss == "npo")
        u.loss = loss_kind::npo;
    else
        throw schema_error("unlearn.loss", "expected 'ga' or 'npo', got '" + loss + "'");
    u.max_epochs = file.get_int("unlearn.max_epochs", u.max_epochs);
    u.grid_step = file.get_int("unlearn.grid_step", u.grid_step);
    u.schedule_period = file.get_int("unlearn.schedule_period", u.schedule_period);
    u.lr_min = file.get_double("unlearn.lr_min", u.lr_min);
    u.lr_max = file.get_double("unlearn.lr_max", u.lr_max);
    u.lr_scale = file.get_double("unlearn.lr_scale", u.lr_scale);
    u.beta = file.get_double("unlearn.beta", u.beta);

    extract_config& x = u.extraction;
    const std::string mode = file.get_string("extract.mode", "sampled");
    if (mode == "sampled")
        x.mode = proposal_mode::sampled;
    else if (mode == "relation_aware")
        x.mode = proposal_mode::relation_aware;
    else
        throw schema_error("extract.mode",
                           "expected 'sampled' or 'relation_aware', got '" + mode + "'");
    x.n_proposals = file.get_int("extract.n_proposals", x.n_proposals);
    x.temperature = file.get_double("extract.temperature", x.temperature);

    cfg.targets = file.get_list("targets", {});
    cfg.others = file.get_list("others", {});

    const std::vector<std::string> method_names =
        file.get_list("methods", {"ours_npo"});
    if (method_names.empty())
        throw schema_error("methods", "the method list cannot be empty");
    for (const std::string& name : method_names)
        cfg.methods.push_back(parse_run_method(name));

    file.finish();
    return cfg;
}

experiment_config read_experiment_file(const std::string& path) {
    return parse_experiment(read_config_file(path));
}

std::uint64_t run_seed(const experiment_config& cfg, run_method method,
                       const std::string& target_name) {
    return derive_seed(cfg.master_seed,
                       "run:" + run_method_name(method) + ":" + target_name);
}

} // namespace culab
