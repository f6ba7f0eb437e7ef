#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/network.hpp"
#include "dlmf/reference.hpp"

namespace dlmf {

//! Everything one experiment run needs: the data source, the Monte Carlo
//! budget, the training recipe, and the master seed all replicate and
//! bootstrap streams derive from.
struct ExperimentConfig {
    // data source: a simulation model id, or CSV paths for the real pipeline
    int model = 1;
    std::string csv_red;
    std::string csv_white;
    std::string target = "quality";
    std::string delimiter = ";";
    int n_train_red = 199;
    int n_train_white = 195;
    bool standardize = true;
    std::vector<int> p_list = {5, 10, 15, 20, 25};

    long n = 2000;         // training size
    int T = 100;           // test points
    int R = 20;            // replicate training sets
    long S = 2000;         // Monte Carlo draws per prediction
    long S_prime = 5000;   // oracle draws per CV3 estimate
    int B = 50;            // bootstrap predictive roots
    int V = 200;           // validation size
    int O = 500;           // early-stop check period, in epochs
    double alpha = 0.05;

    ReferenceDist ref = ReferenceDist::std_normal(5);
    OptimizerKind optimizer = OptimizerKind::RMSProp;
    double lr = 1e-3;
    int epochs = 5000;
    double clip_m = 20.0;
    std::vector<int> hidden = {50};
    std::vector<int> gen_hidden = {50};
    std::vector<int> disc_hidden = {50, 25};
    double clip_b1 = 20.0;
    double clip_b2 = 20.0;
    double clip_b3 = 20.0;
    double clip_b4 = 1.0;
    bool early_stop = true;
    int early_stop_draws = 0;   // 0 means: reuse S

    std::uint64_t master_seed = 1000;
    int threads = 1;
    std::string out_dir = ".";
};

inline void validate_experiment_config(const ExperimentConfig& cfg) {
    if (cfg.model < 1 || cfg.model > 3) throw std::invalid_argument("config: model must be 1, 2, or 3");
    if (cfg.n < 1 || cfg.T < 1 || cfg.R < 1 || cfg.S < 1 || cfg.S_prime < 1 || cfg.B < 1 ||
        cfg.V < 1 || cfg.O < 1) {
        throw std::invalid_argument("config: every count must be >= 1");
    }
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("config: alpha must lie in (0, 1)");
    if (cfg.epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
    if (cfg.early_stop && cfg.O > cfg.epochs) {
        throw std::invalid_argument("config: early-stop period O must not exceed epochs");
    }
    validate_reference(cfg.ref);
    if (!(cfg.lr > 0.0) || !(cfg.clip_m > 0.0)) {
        throw std::invalid_argument("config: lr and clip_m must be positive");
    }
    if (cfg.threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

namespace detail {

inline std::string ints_to_string(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

inline std::vector<int> string_to_ints(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string trim(const std::string& s) {
    const std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    const std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace detail

//! Canonical emission: fixed key order, 17 significant digits for reals.
//! Parsing the emitted text reproduces the config exactly.
inline std::string emit_config(const ExperimentConfig& cfg) {
    std::ostringstream os;
    auto kv = [&](const char* key, const std::string& value) { os << key << " = " << value << '\n'; };
    kv("model", std::to_string(cfg.model));
    kv("csv_red", cfg.csv_red);
    kv("csv_white", cfg.csv_white);
    kv("target", cfg.target);
    kv("delimiter", cfg.delimiter);
    kv("n_train_red", std::to_string(cfg.n_train_red));
    kv("n_train_white", std::to_string(cfg.n_train_white));
    kv("standardize", cfg.standardize ? "on" : "off");
    kv("p_list", detail::ints_to_string(cfg.p_list));
    kv("n", std::to_string(cfg.n));
    kv("T", std::to_string(cfg.T));
    kv("R", std::to_string(cfg.R));
    kv("S", std::to_string(cfg.S));
    kv("S_prime", std::to_string(cfg.S_prime));
    kv("B", std::to_string(cfg.B));
    kv("V", std::to_string(cfg.V));
    kv("O", std::to_string(cfg.O));
    kv("alpha", detail::format_double(cfg.alpha));
    kv("ref", reference_to_string(cfg.ref));
    kv("optimizer", optimizer_to_string(cfg.optimizer));
    kv("lr", detail::format_double(cfg.lr));
    kv("epochs", std::to_string(cfg.epochs));
    kv("clip_m", detail::format_double(cfg.clip_m));
    kv("hidden", detail::ints_to_string(cfg.hidden));
    kv("gen_hidden", detail::ints_to_string(cfg.gen_hidden));
    kv("disc_hidden", detail::ints_to_string(cfg.disc_hidden));
    kv("clip_b1", detail::format_double(cfg.clip_b1));
    kv("clip_b2", detail::format_double(cfg.clip_b2));
    kv("clip_b3", detail::format_double(cfg.clip_b3));
    kv("clip_b4", detail::format_double(cfg.clip_b4));
    kv("early_stop", cfg.early_stop ? "on" : "off");
    kv("early_stop_draws", std::to_string(cfg.early_stop_draws));
    kv("seed", std::to_string(cfg.master_seed));
    kv("threads", std::to_string(cfg.threads));
    kv("out", cfg.out_dir);
    return os.str();
}

//! Flat `key = value` lines; '#' starts a comment, blank lines are skipped.
//! Unknown keys are rejected rather than ignored.
inline ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "model") cfg.model = std::stoi(value);
            else if (key == "csv_red") cfg.csv_red = value;
            else if (key == "csv_white") cfg.csv_white = value;
            else if (key == "target") cfg.target = value;
            else if (key == "delimiter") cfg.delimiter = value;
            else if (key == "n_train_red") cfg.n_train_red = std::stoi(value);
            else if (key == "n_train_white") cfg.n_train_white = std::stoi(value);
            else if (key == "standardize") cfg.standardize = (value == "on" || value == "true" || value == "1");
            else if (key == "p_list") cfg.p_list = detail::string_to_ints(value);
            else if (key == "n") cfg.n = std::stol(value);
            else if (key == "T") cfg.T = std::stoi(value);
            else if (key == "R") cfg.R = std::stoi(value);
            else if (key == "S") cfg.S = std::stol(value);
            else if (key == "S_prime") cfg.S_prime = std::stol(value);
            else if (key == "B") cfg.B = std::stoi(value);
            else if (key == "V") cfg.V = std::stoi(value);
            else if (key == "O") cfg.O = std::stoi(value);
            else if (key == "alpha") cfg.alpha = std::stod(value);
            else if (key == "ref") cfg.ref = parse_reference(value);
            else if (key == "optimizer") cfg.optimizer = parse_optimizer(value);
            else if (key == "lr") cfg.lr = std::stod(value);
            else if (key == "epochs") cfg.epochs = std::stoi(value);
            else if (key == "clip_m") cfg.clip_m = std::stod(value);
            else if (key == "hidden") cfg.hidden = detail::string_to_ints(value);
            else if (key == "gen_hidden") cfg.gen_hidden = detail::string_to_ints(value);
            else if (key == "disc_hidden") cfg.disc_hidden = detail::string_to_ints(value);
            else if (key == "clip_b1") cfg.clip_b1 = std::stod(value);
            else if (key == "clip_b2") cfg.clip_b2 = std::stod(value);
            else if (key == "clip_b3") cfg.clip_b3 = std::stod(value);
            else if (key == "clip_b4") cfg.clip_b4 = std::stod(value);
            else if (key == "early_stop") cfg.early_stop = (value == "on" || value == "true" || value == "1");
            else if (key == "early_stop_draws") cfg.early_stop_draws = std::stoi(value);
            else if (key == "seed") cfg.master_seed = std::stoull(value);
            else if (key == "threads") cfg.threads = std::stoi(value);
            else if (key == "out") cfg.out_dir = value;
            else throw std::invalid_argument("unknown key '" + key + "'");
        } catch (const std::invalid_argument&) {
            throw;
        } catch (...) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": bad value for '" +
                                        key + "'");
        }
    }
    return cfg;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

//! Training recipe implied by the config. Pass a validation set to arm
//! early stopping.
inline TrainSpec make_train_spec(const ExperimentConfig& cfg, std::uint64_t seed,
                                 std::shared_ptr<const Dataset> validation = nullptr,
                                 bool generator = false) {
    TrainSpec spec;
    spec.epochs = cfg.epochs;
    spec.lr = cfg.lr;
    spec.clip_m = cfg.clip_m;
    spec.optimizer = cfg.optimizer;
    spec.seed = seed;
    spec.hidden = generator ? cfg.gen_hidden : cfg.hidden;
    if (validation) {
        EarlyStop es;
        es.period = cfg.O;
        es.alpha = cfg.alpha;
        es.validation = std::move(validation);
        es.draws = cfg.early_stop_draws > 0 ? cfg.early_stop_draws : static_cast<int>(cfg.S);
        spec.early_stop = es;
    }
    return spec;
}

} // namespace dlmf
