#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/dataset.hpp"
#include "dlmf/parallel.hpp"
#include "dlmf/reference.hpp"
#include "dlmf/rng.hpp"
#include "dlmf/transform.hpp"

namespace dlmf {

//! Bootstrap settings for the pertinent prediction interval.
struct PPIConfig {
    int B = 200;            // bootstrap predictive roots
    Eigen::Index S = 10000; // Monte Carlo draws per point prediction
    double alpha = 0.05;
    int threads = 1;
};

inline void validate_ppi_config(const PPIConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
        throw std::invalid_argument("ppi: alpha must lie in (0, 1)");
    }
    if (cfg.B < min_sample_count(cfg.alpha)) {
        throw std::invalid_argument("ppi: need at least " +
                                    std::to_string(min_sample_count(cfg.alpha)) +
                                    " bootstrap roots for alpha = " + std::to_string(cfg.alpha));
    }
    if (cfg.S < 1) throw std::invalid_argument("ppi: S must be >= 1");
}

namespace detail {

//! Fixed-design pseudo responses: Y*_j = H(X_j, Z*_j) with the X rows as
//! observed and fresh reference draws.
inline Dataset bootstrap_dataset(const TrainedTransform& base, const Dataset& ds, RngStream& rng) {
    Eigen::MatrixXd in(ds.n(), base.d + base.ref.p);
    in.leftCols(base.d) = ds.x;
    in.rightCols(base.ref.p) = sample_reference(base.ref, ds.n(), rng);
    Dataset star;
    star.x = ds.x;
    star.y = forward_batch(base.net, in);
    return star;
}

//! Retraining spec for one bootstrap replicate: fresh init seed derived from
//! the replicate label, epoch budget frozen to what the base fit actually
//! ran (falling back to the spec budget for transforms loaded without
//! metadata), no validation re-evaluation.
inline TrainSpec bootstrap_retrain_spec(const TrainedTransform& base, const TrainSpec& spec, int b) {
    TrainSpec rspec = spec;
    rspec.seed = RngStream::derive_seed(spec.seed, "boot/" + std::to_string(b));
    rspec.epochs = base.meta.epochs_run > 0 ? base.meta.epochs_run : spec.epochs;
    rspec.early_stop.reset();
    return rspec;
}

} // namespace detail

//! The B retrained transforms of Algorithm 2, shared by every test point.
struct BootstrapEnsemble {
    std::vector<TrainedTransform> fits;
    int B() const { return static_cast<int>(fits.size()); }
};

//! Retrains B networks on fixed-design pseudo datasets drawn from the base
//! transform. Stream labels are keyed by replicate index, so serial and
//! concurrent execution produce bit-identical fits.
inline BootstrapEnsemble fit_bootstrap_ensemble(const TrainedTransform& base, const Dataset& ds,
                                                const TrainSpec& spec, int b_count, int threads,
                                                const RngStream& rng) {
    if (b_count < 1) throw std::invalid_argument("bootstrap ensemble: B must be >= 1");
    BootstrapEnsemble ens;
    ens.fits.resize(b_count);
    parallel_for(static_cast<std::size_t>(b_count), threads, [&](std::size_t b) {
        const std::string tag = "boot/" + std::to_string(b);
        RngStream ystar = rng.child(tag + "/ystar");
        const Dataset star = detail::bootstrap_dataset(base, ds, ystar);
        RngStream train = rng.child(tag + "/train");
        ens.fits[b] = train_transform(star, base.ref, detail::bootstrap_retrain_spec(base, spec, static_cast<int>(b)),
                                      train);
    });
    return ens;
}

//! One bootstrap predictive root R* = Y*_f - mean_S H*(x_f, Z) for an
//! already-retrained replicate. `point_tag` keys the Monte Carlo streams.
inline double bootstrap_root_from_fit(const TrainedTransform& base, const TrainedTransform& refit,
                                      const Eigen::VectorXd& x_f, Eigen::Index s, int b,
                                      const std::string& point_tag, const RngStream& rng) {
    const std::string tag = "boot/" + std::to_string(b) + "/" + point_tag;
    RngStream mc = rng.child(tag + "/mc");
    const double ystar_mean = point_predict_l2(refit, x_f, s, mc);
    RngStream root = rng.child(tag + "/root");
    Eigen::MatrixXd in(1, base.d + base.ref.p);
    in.leftCols(base.d) = x_f.transpose();
    in.rightCols(base.ref.p) = sample_reference(base.ref, 1, root);
    const double y_f = forward_batch(base.net, in)(0);
    return y_f - ystar_mean;
}

//! Single-root form of Algorithm 2 steps 6-11: draw the pseudo dataset,
//! retrain, and return Y*_f minus the retrained point prediction.
inline double bootstrap_root(const TrainedTransform& base, const Dataset& ds,
                             const Eigen::VectorXd& x_f, const TrainSpec& spec, Eigen::Index s,
                             const RngStream& rng, int b = 0) {
    RngStream ystar = rng.child("boot/" + std::to_string(b) + "/ystar");
    const Dataset star = detail::bootstrap_dataset(base, ds, ystar);
    RngStream train = rng.child("boot/" + std::to_string(b) + "/train");
    const TrainedTransform refit =
        train_transform(star, base.ref, detail::bootstrap_retrain_spec(base, spec, b), train);
    return bootstrap_root_from_fit(base, refit, x_f, s, b, "pt/0", rng);
}

//! Center plus type-1 root quantiles; the endpoints are always elements of
//! the root multiset shifted by the center.
inline Interval ppi_interval_from_roots(double center, Eigen::VectorXd roots, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("ppi: alpha must lie in (0, 1)");
    if (roots.size() < min_sample_count(alpha)) {
        throw std::invalid_argument("ppi: need at least " +
                                    std::to_string(min_sample_count(alpha)) +
                                    " roots for alpha = " + std::to_string(alpha));
    }
    std::sort(roots.data(), roots.data() + roots.size());
    auto pick = [&](double q) {
        Eigen::Index k = static_cast<Eigen::Index>(std::ceil(q * static_cast<double>(roots.size())));
        k = std::min(std::max<Eigen::Index>(k, 1), roots.size());
        return roots(k - 1);
    };
    Interval pi;
    pi.lower = center + pick(alpha / 2.0);
    pi.upper = center + pick(1.0 - alpha / 2.0);
    pi.center = center;
    pi.alpha = alpha;
    pi.method = PiMethod::PPI;
    return pi;
}

//! Pertinent interval for one point given the shared ensemble: the center is
//! the base L2 prediction and the endpoints shift it by root quantiles.
inline Interval pertinent_pi_from_ensemble(const TrainedTransform& base,
                                           const BootstrapEnsemble& ens,
                                           const Eigen::VectorXd& x_f, const PPIConfig& cfg,
                                           const std::string& point_tag, const RngStream& rng,
                                           std::vector<double>* roots_out = nullptr) {
    validate_ppi_config(cfg);
    if (ens.B() < cfg.B) throw std::invalid_argument("ppi: ensemble smaller than configured B");

    RngStream mc = rng.child(point_tag + "/mc");
    const double center = point_predict_l2(base, x_f, cfg.S, mc);

    Eigen::VectorXd roots(cfg.B);
    for (int b = 0; b < cfg.B; ++b) {
        roots(b) = bootstrap_root_from_fit(base, ens.fits[b], x_f, cfg.S, b, point_tag, rng);
    }
    if (roots_out) roots_out->assign(roots.data(), roots.data() + roots.size());
    return ppi_interval_from_roots(center, roots, cfg.alpha);
}

//! Full Algorithm 2 around a transform that is already fitted on ds.
inline Interval pertinent_pi(const TrainedTransform& base, const Dataset& ds,
                             const Eigen::VectorXd& x_f, const TrainSpec& spec,
                             const PPIConfig& cfg, const RngStream& rng,
                             std::vector<double>* roots_out = nullptr) {
    validate_ppi_config(cfg);
    const BootstrapEnsemble ens = fit_bootstrap_ensemble(base, ds, spec, cfg.B, cfg.threads, rng);
    return pertinent_pi_from_ensemble(base, ens, x_f, cfg, "pt/0", rng, roots_out);
}

//! Convenience overload that also fits the base transform.
inline Interval pertinent_pi(const Dataset& ds, const Eigen::VectorXd& x_f,
                             const ReferenceDist& ref, const TrainSpec& spec, const PPIConfig& cfg,
                             const RngStream& rng, std::vector<double>* roots_out = nullptr) {
    RngStream base_rng = rng.child("base");
    const TrainedTransform base = train_transform(ds, ref, spec, base_rng);
    return pertinent_pi(base, ds, x_f, spec, cfg, rng, roots_out);
}

} // namespace dlmf
