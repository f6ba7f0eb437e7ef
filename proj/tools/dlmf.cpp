// Command-line front end: dataset simulation, transform training, point
// prediction, interval construction, and the simulation / wine experiment
// harnesses.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dlmf/config.hpp"
#include "dlmf/csv.hpp"
#include "dlmf/evaluation.hpp"
#include "dlmf/generators.hpp"
#include "dlmf/ppi.hpp"
#include "dlmf/simulation.hpp"
#include "dlmf/transform.hpp"
#include "dlmf/wine.hpp"

namespace {

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int p = 0;
    long n = 0;
    double alpha = 0.0;
    int threads = 0;
    int model = 0;
};

void add_common(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--config", ov.config_path, "config file (flat key = value lines)");
    cmd->add_option("--out", ov.out_dir, "output directory");
    cmd->add_option("--seed", ov.seed, "master seed")->each([&](const std::string&) { ov.seed_set = true; });
    cmd->add_option("--p", ov.p, "reference dimension p");
    cmd->add_option("--n", ov.n, "training size");
    cmd->add_option("--alpha", ov.alpha, "miscoverage level");
    cmd->add_option("--threads", ov.threads, "worker threads");
    cmd->add_option("--model", ov.model, "simulation model id (1-3)");
}

dlmf::ExperimentConfig resolve_config(const Overrides& ov) {
    dlmf::ExperimentConfig cfg;
    if (!ov.config_path.empty()) cfg = dlmf::load_config_file(ov.config_path);
    if (ov.seed_set) cfg.master_seed = ov.seed;
    if (!ov.out_dir.empty()) cfg.out_dir = ov.out_dir;
    if (ov.p > 0) cfg.ref.p = ov.p;
    if (ov.n > 0) cfg.n = ov.n;
    if (ov.alpha > 0.0) cfg.alpha = ov.alpha;
    if (ov.threads > 0) cfg.threads = ov.threads;
    if (ov.model > 0) cfg.model = ov.model;
    std::filesystem::create_directories(cfg.out_dir);
    return cfg;
}

void write_manifest(const dlmf::ExperimentConfig& cfg, const std::string& subcommand) {
    std::ofstream os(cfg.out_dir + "/run_manifest.txt");
    if (!os) throw std::runtime_error("cannot write run manifest in '" + cfg.out_dir + "'");
    os << "subcommand = " << subcommand << "\n" << dlmf::emit_config(cfg);
}

dlmf::Dataset resolve_training_data(const dlmf::ExperimentConfig& cfg, const std::string& data_csv,
                                    const std::string& delimiter, const std::string& target) {
    if (!data_csv.empty()) {
        return dlmf::load_csv(data_csv, delimiter.empty() ? ',' : delimiter[0], target);
    }
    dlmf::RngStream rng(cfg.master_seed, "rep/0/data");
    return dlmf::generate_model_data(dlmf::parse_sim_model(cfg.model), cfg.n, rng);
}

std::shared_ptr<const dlmf::Dataset> resolve_validation(const dlmf::ExperimentConfig& cfg,
                                                        const std::string& validation_csv,
                                                        const std::string& delimiter,
                                                        const std::string& target) {
    if (validation_csv.empty()) return nullptr;
    return std::make_shared<const dlmf::Dataset>(
        dlmf::load_csv(validation_csv, delimiter.empty() ? ',' : delimiter[0], target));
}

Eigen::VectorXd parse_point(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    Eigen::VectorXd x(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) x(static_cast<Eigen::Index>(i)) = vals[i];
    return x;
}

dlmf::TrainedTransform train_by_method(const dlmf::ExperimentConfig& cfg, const std::string& method,
                                       const dlmf::Dataset& ds,
                                       std::shared_ptr<const dlmf::Dataset> validation) {
    const std::uint64_t seed = dlmf::RngStream::derive_seed(cfg.master_seed, "rep/0/init");
    dlmf::RngStream rng(cfg.master_seed, "rep/0/train");
    if (method == "dlmf") {
        return dlmf::train_transform(ds, cfg.ref, dlmf::make_train_spec(cfg, seed, validation), rng);
    }
    dlmf::AdversarialSpec aspec;
    aspec.gen_spec = dlmf::make_train_spec(cfg, seed, validation, /*generator=*/true);
    aspec.disc_hidden = cfg.disc_hidden;
    aspec.clip_b1 = cfg.clip_b1;
    aspec.clip_b2 = cfg.clip_b2;
    aspec.clip_b3 = cfg.clip_b3;
    aspec.clip_b4 = cfg.clip_b4;
    aspec.loss = method == "dgkl" ? dlmf::DGLoss::KL : dlmf::DGLoss::WA;
    return dlmf::train_dg(ds, cfg.ref, aspec, rng);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep limit model-free prediction toolkit"};
    app.require_subcommand(1);

    Overrides ov;
    std::string method = "dlmf";
    std::string pi = "qpi";
    std::string data_csv, validation_csv, transform_path, x_text, roots_out;
    std::string delimiter = ",";
    std::string target = "y";
    std::string out_file;
    std::string red_csv, white_csv;
    long s_draws = 0;

    auto* simulate = app.add_subcommand("simulate", "draw a dataset from a simulation model");
    add_common(simulate, ov);
    simulate->add_option("--file", out_file, "output csv path")->required();

    auto* train = app.add_subcommand("train", "fit a transform or deep generator");
    add_common(train, ov);
    train->add_option("--method", method, "dlmf|dgkl|dgwa");
    train->add_option("--data", data_csv, "training csv (simulated data when omitted)");
    train->add_option("--validation", validation_csv, "validation csv arming early stopping");
    train->add_option("--delimiter", delimiter, "csv delimiter");
    train->add_option("--target", target, "response column name");
    train->add_option("--file", out_file, "path for the saved transform")->required();

    auto* predict = app.add_subcommand("predict", "Monte Carlo point predictions");
    add_common(predict, ov);
    predict->add_option("--transform", transform_path, "saved transform")->required();
    predict->add_option("--x", x_text, "comma-separated predictor vector");
    predict->add_option("--data", data_csv, "csv of predictor rows (header + numeric columns)");
    predict->add_option("--delimiter", delimiter, "csv delimiter");
    predict->add_option("--S", s_draws, "Monte Carlo draws");

    auto* interval = app.add_subcommand("interval", "prediction interval at one point");
    add_common(interval, ov);
    interval->add_option("--transform", transform_path, "saved transform (trained fresh when omitted)");
    interval->add_option("--x", x_text, "comma-separated predictor vector")->required();
    interval->add_option("--pi", pi, "qpi|ppi|pikl|piwa");
    interval->add_option("--data", data_csv, "training csv (required for ppi retraining)");
    interval->add_option("--delimiter", delimiter, "csv delimiter");
    interval->add_option("--target", target, "response column name");
    interval->add_option("--S", s_draws, "Monte Carlo draws");
    interval->add_option("--roots-out", roots_out, "csv dump of the bootstrap roots");

    auto* point_exp = app.add_subcommand("point-experiment", "replicated point-prediction study");
    add_common(point_exp, ov);
    point_exp->add_option("--method", method, "dlmf|dgkl|dgwa|ckde");

    auto* cover_exp = app.add_subcommand("coverage-experiment", "replicated interval-coverage study");
    add_common(cover_exp, ov);
    cover_exp->add_option("--pi", pi, "qpi|ppi|pikl|piwa");

    auto* wine = app.add_subcommand("wine", "wine-quality pipeline on user-supplied UCI csv files");
    add_common(wine, ov);
    wine->add_option("--red", red_csv, "red-wine csv path");
    wine->add_option("--white", white_csv, "white-wine csv path");

    CLI11_PARSE(app, argc, argv);

    try {
        dlmf::ExperimentConfig cfg = resolve_config(ov);

        if (simulate->parsed()) {
            dlmf::RngStream rng(cfg.master_seed, "simulate");
            const dlmf::Dataset ds =
                dlmf::generate_model_data(dlmf::parse_sim_model(cfg.model), cfg.n, rng);
            dlmf::write_dataset_csv(out_file, ds);
            std::cout << "wrote " << ds.n() << " rows to " << out_file << "\n";
        } else if (train->parsed()) {
            const dlmf::Dataset ds = resolve_training_data(cfg, data_csv, delimiter, target);
            auto validation = resolve_validation(cfg, validation_csv, delimiter, target);
            const dlmf::TrainedTransform t = train_by_method(cfg, method, ds, validation);
            std::ofstream os(out_file);
            if (!os) throw std::runtime_error("cannot write '" + out_file + "'");
            dlmf::save_transform(os, t);
            std::cout << "trained " << t.method << " for " << t.meta.epochs_run << " epochs ("
                      << (t.meta.stopped_early ? "stopped early" : "full budget")
                      << "), final loss " << t.meta.final_train_loss << ", saved to " << out_file
                      << "\n";
        } else if (predict->parsed()) {
            std::ifstream is(transform_path);
            if (!is) throw std::runtime_error("cannot open '" + transform_path + "'");
            const dlmf::TrainedTransform t = dlmf::load_transform(is);
            const long s = s_draws > 0 ? s_draws : cfg.S;
            Eigen::MatrixXd points;
            if (!x_text.empty()) {
                points = parse_point(x_text).transpose();
            } else if (!data_csv.empty()) {
                points = dlmf::load_matrix_csv(data_csv, delimiter.empty() ? ',' : delimiter[0]);
            } else {
                throw std::runtime_error("predict: pass --x or --data");
            }
            std::cout << "y_l2,y_l1\n";
            char buf[40];
            for (Eigen::Index j = 0; j < points.rows(); ++j) {
                dlmf::RngStream rng(cfg.master_seed, "predict/pt/" + std::to_string(j) + "/mc");
                const Eigen::VectorXd samples = dlmf::predict_samples(t, points.row(j).transpose(), s, rng);
                std::snprintf(buf, sizeof(buf), "%.17g", samples.mean());
                std::cout << buf << ',';
                std::snprintf(buf, sizeof(buf), "%.17g", dlmf::empirical_median(samples));
                std::cout << buf << '\n';
            }
        } else if (interval->parsed()) {
            const Eigen::VectorXd x = parse_point(x_text);
            const long s = s_draws > 0 ? s_draws : cfg.S;
            const dlmf::PiMethod pim = dlmf::parse_pi_method(pi);
            dlmf::Interval out;
            std::vector<double> roots;
            if (pim == dlmf::PiMethod::PPI) {
                if (data_csv.empty()) throw std::runtime_error("interval: ppi needs --data for retraining");
                const dlmf::Dataset ds =
                    dlmf::load_csv(data_csv, delimiter.empty() ? ',' : delimiter[0], target);
                const std::uint64_t seed = dlmf::RngStream::derive_seed(cfg.master_seed, "rep/0/init");
                const dlmf::TrainSpec spec = dlmf::make_train_spec(cfg, seed);
                dlmf::PPIConfig pcfg;
                pcfg.B = cfg.B;
                pcfg.S = s;
                pcfg.alpha = cfg.alpha;
                pcfg.threads = cfg.threads;
                dlmf::RngStream rng(cfg.master_seed, "rep/0/ppi");
                dlmf::TrainedTransform base;
                if (!transform_path.empty()) {
                    std::ifstream is(transform_path);
                    if (!is) throw std::runtime_error("cannot open '" + transform_path + "'");
                    base = dlmf::load_transform(is);
                } else {
                    dlmf::RngStream train_rng(cfg.master_seed, "rep/0/train");
                    base = dlmf::train_transform(ds, cfg.ref, spec, train_rng);
                }
                out = dlmf::pertinent_pi(base, ds, x, spec, pcfg, rng, &roots);
                if (!roots_out.empty()) {
                    std::ofstream os(roots_out);
                    if (!os) throw std::runtime_error("cannot write '" + roots_out + "'");
                    char buf[40];
                    for (double r : roots) {
                        std::snprintf(buf, sizeof(buf), "%.17g", r);
                        os << buf << '\n';
                    }
                }
            } else {
                if (transform_path.empty()) throw std::runtime_error("interval: pass --transform");
                std::ifstream is(transform_path);
                if (!is) throw std::runtime_error("cannot open '" + transform_path + "'");
                const dlmf::TrainedTransform t = dlmf::load_transform(is);
                dlmf::RngStream rng(cfg.master_seed, "rep/0/pt/0/mc");
                out = dlmf::quantile_pi(t, x, s, cfg.alpha, rng);
                out.method = pim;
            }
            char buf[40];
            std::cout << "method,lower,upper,center,alpha\n" << dlmf::pi_method_token(out.method) << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", out.lower);
            std::cout << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", out.upper);
            std::cout << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", out.center.value_or(0.0));
            std::cout << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", out.alpha);
            std::cout << buf << '\n';
        } else if (point_exp->parsed()) {
            write_manifest(cfg, "point-experiment");
            const dlmf::PredMethod pm = dlmf::parse_pred_method(method);
            const dlmf::PointErrorReport report = dlmf::run_point_experiment(cfg, pm);
            dlmf::write_point_report(cfg.out_dir + "/point_report.csv", cfg, pm, report);
            std::cout << "L_tilde = " << report.l_tilde << " -> " << cfg.out_dir
                      << "/point_report.csv\n";
        } else if (cover_exp->parsed()) {
            write_manifest(cfg, "coverage-experiment");
            const dlmf::PiMethod pim = dlmf::parse_pi_method(pi);
            const dlmf::CoverageReport report = dlmf::run_coverage_experiment(cfg, pim);
            dlmf::write_coverage_report(cfg.out_dir + "/coverage_report.csv", cfg, pim, report);
            dlmf::write_cv2_histograms(cfg.out_dir, pim, report, cfg.alpha);
            std::cout << "CV1 = " << report.cv1 << ", AL = " << report.al << " -> " << cfg.out_dir
                      << "/coverage_report.csv\n";
        } else if (wine->parsed()) {
            if (!red_csv.empty()) cfg.csv_red = red_csv;
            if (!white_csv.empty()) cfg.csv_white = white_csv;
            write_manifest(cfg, "wine");
            const dlmf::WineReport report = dlmf::run_wine_pipeline(cfg);
            std::cout << "wrote " << report.points.size() << " point rows and "
                      << report.intervals.size() << " interval rows to " << cfg.out_dir << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
