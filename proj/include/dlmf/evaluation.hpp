#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/ckde.hpp"
#include "dlmf/config.hpp"
#include "dlmf/generators.hpp"
#include "dlmf/parallel.hpp"
#include "dlmf/ppi.hpp"
#include "dlmf/simulation.hpp"
#include "dlmf/transform.hpp"

namespace dlmf {

enum class PredMethod { DLMF, DGKL, DGWA, CKDE };

inline std::string pred_method_to_string(PredMethod m) {
    switch (m) {
        case PredMethod::DLMF: return "dlmf";
        case PredMethod::DGKL: return "dgkl";
        case PredMethod::DGWA: return "dgwa";
        case PredMethod::CKDE: return "ckde";
    }
    return {};
}

inline PredMethod parse_pred_method(const std::string& s) {
    if (s == "dlmf") return PredMethod::DLMF;
    if (s == "dgkl") return PredMethod::DGKL;
    if (s == "dgwa") return PredMethod::DGWA;
    if (s == "ckde") return PredMethod::CKDE;
    throw std::invalid_argument("unknown prediction method '" + s + "'");
}

inline std::string pi_method_token(PiMethod m) {
    switch (m) {
        case PiMethod::QPI: return "qpi";
        case PiMethod::PPI: return "ppi";
        case PiMethod::PI_KL: return "pikl";
        case PiMethod::PI_WA: return "piwa";
    }
    return {};
}

//! Squared point-prediction errors: per test point averaged over the R
//! training sets, and the grand average.
struct PointErrorReport {
    Eigen::VectorXd per_point;   // length T
    double l_tilde = 0.0;
};

inline PointErrorReport point_error(const Eigen::VectorXd& truth, const Eigen::MatrixXd& preds) {
    if (preds.cols() != truth.size()) {
        throw std::invalid_argument("point_error: prediction columns must match truth length");
    }
    if (preds.rows() < 1) throw std::invalid_argument("point_error: need at least one replicate row");
    PointErrorReport report;
    report.per_point =
        (preds.rowwise() - truth.transpose()).array().square().colwise().mean().transpose();
    report.l_tilde = report.per_point.mean();
    return report;
}

//! Coverage and length statistics for one interval method.
struct CoverageReport {
    std::string method;
    double cv1 = 0.0;        // grand-average coverage
    double sigma_pi = 0.0;   // sample std of the T per-point coverages
    double al = 0.0;         // grand-average interval length
    double sigma_len = 0.0;  // sample std of the T per-point mean lengths
    Eigen::VectorXd cv2;     // length T
};

inline void validate_coverage_report(const CoverageReport& r) {
    if (!(r.cv1 >= 0.0 && r.cv1 <= 1.0)) throw std::invalid_argument("coverage report: cv1 outside [0, 1]");
    if (r.sigma_pi < 0.0 || r.al < 0.0 || r.sigma_len < 0.0) {
        throw std::invalid_argument("coverage report: negative spread statistic");
    }
    if ((r.cv2.array() < 0.0).any() || (r.cv2.array() > 1.0).any()) {
        throw std::invalid_argument("coverage report: cv2 entry outside [0, 1]");
    }
}

namespace detail {

inline double sample_std(const Eigen::VectorXd& v) {
    if (v.size() < 2) return 0.0;
    const double mean = v.mean();
    return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

} // namespace detail

//! Fraction of S' oracle conditional draws the interval covers.
inline double estimate_cv3(const Interval& interval, SimModelId id, const Eigen::VectorXd& x,
                           long s_prime, RngStream& rng) {
    if (s_prime < 1) throw std::invalid_argument("estimate_cv3: S' must be >= 1");
    const Eigen::VectorXd draws = sample_conditional(id, x, s_prime, rng);
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < draws.size(); ++i) {
        if (interval.contains(draws(i))) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(s_prime);
}

//! CV2 is the per-point average over replicates, CV1 the grand average;
//! lengths are summarized the same way.
inline CoverageReport aggregate_coverage(const Eigen::MatrixXd& cv3, const Eigen::MatrixXd& lengths,
                                         const std::string& method = {}) {
    if (cv3.rows() != lengths.rows() || cv3.cols() != lengths.cols()) {
        throw std::invalid_argument("aggregate_coverage: cv3 and lengths must share shape");
    }
    if (cv3.rows() < 1 || cv3.cols() < 1) throw std::invalid_argument("aggregate_coverage: empty input");
    CoverageReport report;
    report.method = method;
    report.cv2 = cv3.colwise().mean().transpose();
    report.cv1 = cv3.mean();
    report.sigma_pi = detail::sample_std(report.cv2);
    report.al = lengths.mean();
    report.sigma_len = detail::sample_std(lengths.colwise().mean().transpose());
    validate_coverage_report(report);
    return report;
}

namespace detail {

inline Eigen::MatrixXd experiment_test_points(const ExperimentConfig& cfg) {
    RngStream rng(cfg.master_seed, "test");
    return sample_sim_predictors(cfg.T, rng);
}

inline std::string rep_tag(int r) { return "rep/" + std::to_string(r); }

inline TrainedTransform train_replicate(const ExperimentConfig& cfg, PredMethod method,
                                        const Dataset& ds, int r,
                                        std::shared_ptr<const Dataset> validation) {
    const std::string tag = rep_tag(r);
    const std::uint64_t seed = RngStream::derive_seed(cfg.master_seed, tag + "/init");
    RngStream train_rng(cfg.master_seed, tag + "/train");
    if (method == PredMethod::DLMF) {
        return train_transform(ds, cfg.ref, make_train_spec(cfg, seed, validation), train_rng);
    }
    AdversarialSpec aspec;
    aspec.gen_spec = make_train_spec(cfg, seed, validation, /*generator=*/true);
    aspec.disc_hidden = cfg.disc_hidden;
    aspec.clip_b1 = cfg.clip_b1;
    aspec.clip_b2 = cfg.clip_b2;
    aspec.clip_b3 = cfg.clip_b3;
    aspec.clip_b4 = cfg.clip_b4;
    aspec.loss = method == PredMethod::DGKL ? DGLoss::KL : DGLoss::WA;
    return train_dg(ds, cfg.ref, aspec, train_rng);
}

} // namespace detail

//! Point-prediction protocol: T shared test points, R fresh training sets,
//! each method predicts every point from S Monte Carlo draws (CKDE via
//! numerical integration), errors averaged per point then overall.
inline PointErrorReport run_point_experiment(const ExperimentConfig& cfg, PredMethod method) {
    validate_experiment_config(cfg);
    const SimModelId id = parse_sim_model(cfg.model);
    const Eigen::MatrixXd x_test = detail::experiment_test_points(cfg);

    Eigen::VectorXd truth(cfg.T);
    for (int j = 0; j < cfg.T; ++j) truth(j) = true_conditional_mean(id, x_test.row(j).transpose());

    Eigen::MatrixXd preds(cfg.R, cfg.T);
    parallel_for(static_cast<std::size_t>(cfg.R), cfg.threads, [&](std::size_t ri) {
        const int r = static_cast<int>(ri);
        const std::string tag = detail::rep_tag(r);
        RngStream data_rng(cfg.master_seed, tag + "/data");
        const Dataset ds = generate_model_data(id, cfg.n, data_rng);
        if (method == PredMethod::CKDE) {
            const CKDEModel model = ckde_fit(ds, default_bandwidth_grid());
            for (int j = 0; j < cfg.T; ++j) preds(r, j) = ckde_mean(model, x_test.row(j).transpose());
            return;
        }
        const TrainedTransform t = detail::train_replicate(cfg, method, ds, r, nullptr);
        for (int j = 0; j < cfg.T; ++j) {
            RngStream mc(cfg.master_seed, tag + "/pt/" + std::to_string(j) + "/mc");
            preds(r, j) = point_predict_l2(t, x_test.row(j).transpose(), cfg.S, mc);
        }
    });
    return point_error(truth, preds);
}

//! Coverage protocol: per replicate, train with early stopping against a
//! fresh validation set, build the requested interval at every test point,
//! and score it against S' oracle conditional draws.
inline CoverageReport run_coverage_experiment(const ExperimentConfig& cfg, PiMethod pi) {
    validate_experiment_config(cfg);
    const SimModelId id = parse_sim_model(cfg.model);
    const Eigen::MatrixXd x_test = detail::experiment_test_points(cfg);

    Eigen::MatrixXd cv3(cfg.R, cfg.T);
    Eigen::MatrixXd lengths(cfg.R, cfg.T);
    parallel_for(static_cast<std::size_t>(cfg.R), cfg.threads, [&](std::size_t ri) {
        const int r = static_cast<int>(ri);
        const std::string tag = detail::rep_tag(r);
        RngStream data_rng(cfg.master_seed, tag + "/data");
        const Dataset ds = generate_model_data(id, cfg.n, data_rng);
        std::shared_ptr<const Dataset> validation;
        if (cfg.early_stop) {
            RngStream val_rng(cfg.master_seed, tag + "/val");
            validation = std::make_shared<Dataset>(generate_model_data(id, cfg.V, val_rng));
        }

        const PredMethod trainer = pi == PiMethod::PI_KL  ? PredMethod::DGKL
                                   : pi == PiMethod::PI_WA ? PredMethod::DGWA
                                                           : PredMethod::DLMF;
        const TrainedTransform base = detail::train_replicate(cfg, trainer, ds, r, validation);

        std::vector<Interval> intervals(cfg.T);
        if (pi == PiMethod::PPI) {
            const std::uint64_t seed = RngStream::derive_seed(cfg.master_seed, tag + "/init");
            const TrainSpec spec = make_train_spec(cfg, seed, nullptr);
            RngStream ppi_rng(cfg.master_seed, tag + "/ppi");
            const BootstrapEnsemble ens = fit_bootstrap_ensemble(base, ds, spec, cfg.B, 1, ppi_rng);
            PPIConfig pcfg;
            pcfg.B = cfg.B;
            pcfg.S = cfg.S;
            pcfg.alpha = cfg.alpha;
            for (int j = 0; j < cfg.T; ++j) {
                intervals[j] = pertinent_pi_from_ensemble(base, ens, x_test.row(j).transpose(), pcfg,
                                                          "pt/" + std::to_string(j), ppi_rng);
            }
        } else {
            for (int j = 0; j < cfg.T; ++j) {
                RngStream mc(cfg.master_seed, tag + "/pt/" + std::to_string(j) + "/mc");
                intervals[j] = quantile_pi(base, x_test.row(j).transpose(), cfg.S, cfg.alpha, mc);
                intervals[j].method = pi;
            }
        }

        for (int j = 0; j < cfg.T; ++j) {
            RngStream cv_rng(cfg.master_seed, tag + "/pt/" + std::to_string(j) + "/cv3");
            cv3(r, j) = estimate_cv3(intervals[j], id, x_test.row(j).transpose(), cfg.S_prime, cv_rng);
            lengths(r, j) = intervals[j].length();
        }
    });
    return aggregate_coverage(cv3, lengths, pi_method_to_string(pi));
}

inline void write_point_report(const std::string& path, const ExperimentConfig& cfg,
                               PredMethod method, const PointErrorReport& report) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", report.l_tilde);
    os << "method,p,optimizer,L_tilde\n"
       << pred_method_to_string(method) << ',' << cfg.ref.p << ','
       << optimizer_to_string(cfg.optimizer) << ',' << buf << '\n';
}

inline void write_coverage_report(const std::string& path, const ExperimentConfig& cfg, PiMethod pi,
                                  const CoverageReport& report) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write '" + path + "'");
    char buf[4][40];
    std::snprintf(buf[0], sizeof(buf[0]), "%.17g", report.cv1);
    std::snprintf(buf[1], sizeof(buf[1]), "%.17g", report.sigma_pi);
    std::snprintf(buf[2], sizeof(buf[2]), "%.17g", report.al);
    std::snprintf(buf[3], sizeof(buf[3]), "%.17g", report.sigma_len);
    os << "method,p,n,CV1,sigma_PI,AL,sigma_Len\n"
       << pi_method_token(pi) << ',' << cfg.ref.p << ',' << cfg.n << ',' << buf[0] << ',' << buf[1]
       << ',' << buf[2] << ',' << buf[3] << '\n';
}

//! Histogram inputs mirroring the coverage figures: every CV2 value, plus
//! the subset below the nominal level.
inline void write_cv2_histograms(const std::string& dir, PiMethod pi, const CoverageReport& report,
                                 double alpha) {
    const std::string token = pi_method_token(pi);
    char buf[40];
    {
        std::ofstream os(dir + "/cv2_hist_" + token + ".csv");
        if (!os) throw std::runtime_error("cannot write cv2 histogram in '" + dir + "'");
        os << "cv2\n";
        for (Eigen::Index j = 0; j < report.cv2.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", report.cv2(j));
            os << buf << '\n';
        }
    }
    {
        std::ofstream os(dir + "/cv2_hist_" + token + "_under.csv");
        if (!os) throw std::runtime_error("cannot write cv2 histogram in '" + dir + "'");
        os << "cv2\n";
        for (Eigen::Index j = 0; j < report.cv2.size(); ++j) {
            if (report.cv2(j) < 1.0 - alpha) {
                std::snprintf(buf, sizeof(buf), "%.17g", report.cv2(j));
                os << buf << '\n';
            }
        }
    }
}

} // namespace dlmf
