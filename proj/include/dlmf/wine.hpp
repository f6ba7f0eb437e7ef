#pragma once

#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/config.hpp"
#include "dlmf/csv.hpp"
#include "dlmf/evaluation.hpp"
#include "dlmf/ppi.hpp"
#include "dlmf/preprocess.hpp"
#include "dlmf/transform.hpp"

namespace dlmf {

struct WinePointRow {
    std::string dataset;
    std::string method;
    int p = 0;
    double mspe = 0.0;
};

struct WinePiRow {
    std::string dataset;
    std::string pi;
    int p = 0;
    double coverage = 0.0;
    double avg_length = 0.0;
};

struct WineReport {
    std::vector<WinePointRow> points;
    std::vector<WinePiRow> intervals;
};

namespace detail {

inline void write_split_manifest(const std::string& path, const std::string& tag,
                                 std::uint64_t seed, const SplitResult& split) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    os << "dataset = " << tag << "\nsplit_seed = " << seed << "\n";
    auto dump = [&](const char* name, const std::vector<Eigen::Index>& idx) {
        os << name << " (" << idx.size() << "):";
        for (Eigen::Index i : idx) os << ' ' << i;
        os << '\n';
    };
    dump("train_rows", split.train_idx);
    dump("validation_rows", split.validation_idx);
    dump("test_rows", split.test_idx);
}

//! Empirical test coverage and average length for one interval per test row.
inline WinePiRow score_intervals(const std::vector<Interval>& intervals, const Dataset& test,
                                 const std::string& dataset, PiMethod pi, int p) {
    Eigen::Index hits = 0;
    double total_len = 0.0;
    for (Eigen::Index j = 0; j < test.n(); ++j) {
        if (intervals[j].contains(test.y(j))) ++hits;
        total_len += intervals[j].length();
    }
    WinePiRow row;
    row.dataset = dataset;
    row.pi = pi_method_token(pi);
    row.p = p;
    row.coverage = static_cast<double>(hits) / static_cast<double>(test.n());
    row.avg_length = total_len / static_cast<double>(test.n());
    return row;
}

inline double test_mspe(const TrainedTransform& t, const Dataset& test, long s,
                        const RngStream& rng, int threads) {
    Eigen::VectorXd preds(test.n());
    parallel_for(static_cast<std::size_t>(test.n()), threads, [&](std::size_t j) {
        RngStream mc = rng.child("pt/" + std::to_string(j) + "/mc");
        preds(static_cast<Eigen::Index>(j)) = point_predict_l2(t, test.x.row(j).transpose(), s, mc);
    });
    return (preds - test.y).squaredNorm() / static_cast<double>(test.n());
}

//! One wine dataset end to end: split, optional standardization, then per p
//! train the three conditional samplers and score the four interval types
//! on the held-out test rows.
inline void run_wine_dataset(const ExperimentConfig& cfg, const std::string& tag,
                             const std::string& csv_path, int n_train, WineReport& report) {
    const Dataset full = load_csv(csv_path, cfg.delimiter.empty() ? ';' : cfg.delimiter[0], cfg.target);
    const std::uint64_t split_seed = RngStream::derive_seed(cfg.master_seed, "wine/" + tag + "/split");
    SplitResult split = split_real_data(full, n_train, split_seed);
    if (split.validation.n() < 1 || split.test.n() < 1) {
        throw std::runtime_error("wine: split left an empty validation or test set");
    }
    write_split_manifest(cfg.out_dir + "/wine_split_" + tag + ".txt", tag, split_seed, split);

    if (cfg.standardize) {
        standardize_fit_apply(split.train, {&split.validation, &split.test});
    }
    auto validation = std::make_shared<const Dataset>(split.validation);

    for (int p : cfg.p_list) {
        ReferenceDist ref = cfg.ref;
        ref.p = p;
        const std::string base_tag = "wine/" + tag + "/p" + std::to_string(p);

        // DLMF transform plus the two adversarial generators.
        const std::uint64_t seed = RngStream::derive_seed(cfg.master_seed, base_tag + "/init");
        RngStream train_rng(cfg.master_seed, base_tag + "/train");
        const TrainSpec spec = make_train_spec(cfg, seed, validation);
        const TrainedTransform h = train_transform(split.train, ref, spec, train_rng);

        std::vector<TrainedTransform> generators;
        for (DGLoss loss : {DGLoss::KL, DGLoss::WA}) {
            const std::string gtag = base_tag + (loss == DGLoss::KL ? "/dgkl" : "/dgwa");
            AdversarialSpec aspec;
            aspec.gen_spec = make_train_spec(cfg, RngStream::derive_seed(cfg.master_seed, gtag + "/init"),
                                             validation, /*generator=*/true);
            aspec.disc_hidden = cfg.disc_hidden;
            aspec.clip_b1 = cfg.clip_b1;
            aspec.clip_b2 = cfg.clip_b2;
            aspec.clip_b3 = cfg.clip_b3;
            aspec.clip_b4 = cfg.clip_b4;
            aspec.loss = loss;
            RngStream grng(cfg.master_seed, gtag + "/train");
            generators.push_back(train_dg(split.train, ref, aspec, grng));
        }

        const std::vector<std::pair<std::string, const TrainedTransform*>> methods = {
            {"dlmf", &h}, {"dgkl", &generators[0]}, {"dgwa", &generators[1]}};
        for (const auto& [name, t] : methods) {
            RngStream mspe_rng(cfg.master_seed, base_tag + "/" + name + "/mspe");
            report.points.push_back(
                {tag, name, p, test_mspe(*t, split.test, cfg.S, mspe_rng, cfg.threads)});
        }

        // QPI / PI-KL / PI-WA read quantiles straight off each sampler.
        const std::vector<std::pair<PiMethod, const TrainedTransform*>> quantile_methods = {
            {PiMethod::QPI, &h}, {PiMethod::PI_KL, &generators[0]}, {PiMethod::PI_WA, &generators[1]}};
        for (const auto& [pi, t] : quantile_methods) {
            RngStream pi_rng(cfg.master_seed, base_tag + "/" + pi_method_token(pi));
            std::vector<Interval> intervals(split.test.n());
            parallel_for(static_cast<std::size_t>(split.test.n()), cfg.threads, [&](std::size_t j) {
                RngStream mc = pi_rng.child("pt/" + std::to_string(j) + "/mc");
                intervals[j] =
                    quantile_pi(*t, split.test.x.row(j).transpose(), cfg.S, cfg.alpha, mc);
                intervals[j].method = pi;
            });
            report.intervals.push_back(score_intervals(intervals, split.test, tag, pi, p));
        }

        // PPI shares one bootstrap ensemble across the test rows.
        {
            RngStream ppi_rng(cfg.master_seed, base_tag + "/ppi");
            const BootstrapEnsemble ens =
                fit_bootstrap_ensemble(h, split.train, spec, cfg.B, cfg.threads, ppi_rng);
            PPIConfig pcfg;
            pcfg.B = cfg.B;
            pcfg.S = cfg.S;
            pcfg.alpha = cfg.alpha;
            std::vector<Interval> intervals(split.test.n());
            parallel_for(static_cast<std::size_t>(split.test.n()), cfg.threads, [&](std::size_t j) {
                intervals[j] = pertinent_pi_from_ensemble(h, ens, split.test.x.row(j).transpose(),
                                                          pcfg, "pt/" + std::to_string(j), ppi_rng);
            });
            report.intervals.push_back(
                score_intervals(intervals, split.test, tag, PiMethod::PPI, p));
        }
    }
}

} // namespace detail

//! The real-data pipeline over whichever wine CSVs the config names.
//! Emits wine_point_report.csv, wine_pi_report.csv, and per-dataset split
//! manifests under out_dir.
inline WineReport run_wine_pipeline(const ExperimentConfig& cfg) {
    if (cfg.csv_red.empty() && cfg.csv_white.empty()) {
        throw std::invalid_argument("wine: config names no csv_red or csv_white input");
    }
    if (cfg.p_list.empty()) throw std::invalid_argument("wine: p_list is empty");
    WineReport report;
    if (!cfg.csv_red.empty()) detail::run_wine_dataset(cfg, "red", cfg.csv_red, cfg.n_train_red, report);
    if (!cfg.csv_white.empty()) {
        detail::run_wine_dataset(cfg, "white", cfg.csv_white, cfg.n_train_white, report);
    }

    char buf[40];
    {
        std::ofstream os(cfg.out_dir + "/wine_point_report.csv");
        if (!os) throw std::runtime_error("cannot write wine point report");
        os << "dataset,method,p,mspe\n";
        for (const auto& row : report.points) {
            std::snprintf(buf, sizeof(buf), "%.17g", row.mspe);
            os << row.dataset << ',' << row.method << ',' << row.p << ',' << buf << '\n';
        }
    }
    {
        std::ofstream os(cfg.out_dir + "/wine_pi_report.csv");
        if (!os) throw std::runtime_error("cannot write wine interval report");
        os << "dataset,pi,p,coverage,avg_length\n";
        for (const auto& row : report.intervals) {
            os << row.dataset << ',' << row.pi << ',' << row.p << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", row.coverage);
            os << buf << ',';
            std::snprintf(buf, sizeof(buf), "%.17g", row.avg_length);
            os << buf << '\n';
        }
    }
    return report;
}

} // namespace dlmf
