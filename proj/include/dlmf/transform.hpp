#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/dataset.hpp"
#include "dlmf/network.hpp"
#include "dlmf/reference.hpp"
#include "dlmf/rng.hpp"

namespace dlmf {

enum class PiMethod { QPI, PPI, PI_KL, PI_WA };

inline std::string pi_method_to_string(PiMethod m) {
    switch (m) {
        case PiMethod::QPI: return "QPI";
        case PiMethod::PPI: return "PPI";
        case PiMethod::PI_KL: return "PI-KL";
        case PiMethod::PI_WA: return "PI-WA";
    }
    return {};
}

inline PiMethod parse_pi_method(const std::string& s) {
    if (s == "qpi" || s == "QPI") return PiMethod::QPI;
    if (s == "ppi" || s == "PPI") return PiMethod::PPI;
    if (s == "pikl" || s == "PI-KL") return PiMethod::PI_KL;
    if (s == "piwa" || s == "PI-WA") return PiMethod::PI_WA;
    throw std::invalid_argument("unknown prediction-interval method '" + s + "'");
}

//! An equal-tail prediction interval at miscoverage level alpha.
struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    std::optional<double> center;
    double alpha = 0.05;
    PiMethod method = PiMethod::QPI;

    double length() const { return upper - lower; }
    bool contains(double v) const { return v >= lower && v <= upper; }
};

//! A fitted conditional sampler: network mapping (x, z) to y plus the
//! reference distribution its z inputs follow.
struct TrainedTransform {
    Network net;
    ReferenceDist ref;
    int d = 0;                 // predictor dimension
    std::string method = "dlmf";

    struct Meta {
        int epochs_run = 0;
        double final_train_loss = 0.0;
        bool stopped_early = false;
        std::uint64_t seed = 0;
    } meta;
};

inline void validate_transform(const TrainedTransform& t) {
    if (t.net.in_dim() != t.d + t.ref.p) {
        throw std::invalid_argument("transform: network input dim must equal d + p");
    }
    if (!std::isfinite(t.meta.final_train_loss)) {
        throw std::invalid_argument("transform: training loss is not finite");
    }
}

//! Type-1 empirical quantile: the order statistic at index ceil(q * len).
inline double empirical_quantile(Eigen::VectorXd v, double q) {
    if (v.size() < 1) throw std::invalid_argument("empirical_quantile: empty sample");
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("empirical_quantile: q must lie in (0, 1)");
    const Eigen::Index n = v.size();
    Eigen::Index k = static_cast<Eigen::Index>(std::ceil(q * static_cast<double>(n)));
    k = std::min(std::max<Eigen::Index>(k, 1), n);
    std::nth_element(v.data(), v.data() + (k - 1), v.data() + n);
    return v(k - 1);
}

//! Lower-middle median, i.e. the type-1 quantile at q = 1/2.
inline double empirical_median(const Eigen::VectorXd& v) { return empirical_quantile(v, 0.5); }

namespace detail {

//! Stacks x_f beside the reference draws: rows are (x_f, Z_j).
inline Eigen::MatrixXd mc_inputs(const TrainedTransform& t, const Eigen::VectorXd& x_f,
                                 Eigen::Index s, RngStream& rng) {
    if (x_f.size() != t.d) {
        throw std::invalid_argument("predict: x has dimension " + std::to_string(x_f.size()) +
                                    ", transform expects " + std::to_string(t.d));
    }
    Eigen::MatrixXd in(s, t.d + t.ref.p);
    in.leftCols(t.d) = x_f.transpose().replicate(s, 1);
    in.rightCols(t.ref.p) = sample_reference(t.ref, s, rng);
    return in;
}

} // namespace detail

//! S Monte Carlo evaluations of the frozen net at (x_f, Z), Z fresh i.i.d.
inline Eigen::VectorXd predict_samples(const TrainedTransform& t, const Eigen::VectorXd& x_f,
                                       Eigen::Index s, RngStream& rng) {
    if (s < 1) throw std::invalid_argument("predict_samples: need s >= 1");
    return forward_batch(t.net, detail::mc_inputs(t, x_f, s, rng));
}

//! L2-optimal point prediction: the Monte Carlo mean.
inline double point_predict_l2(const TrainedTransform& t, const Eigen::VectorXd& x_f,
                               Eigen::Index s, RngStream& rng) {
    return predict_samples(t, x_f, s, rng).mean();
}

//! L1-optimal point prediction: the Monte Carlo median.
inline double point_predict_l1(const TrainedTransform& t, const Eigen::VectorXd& x_f,
                               Eigen::Index s, RngStream& rng) {
    return empirical_median(predict_samples(t, x_f, s, rng));
}

inline Eigen::Index min_sample_count(double alpha) {
    return static_cast<Eigen::Index>(std::ceil(2.0 / alpha));
}

//! Equal-tail quantile interval over an existing Monte Carlo sample.
inline Interval quantile_pi_from_samples(Eigen::VectorXd samples, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("quantile_pi: alpha must lie in (0, 1)");
    if (samples.size() < min_sample_count(alpha)) {
        throw std::invalid_argument("quantile_pi: need at least " +
                                    std::to_string(min_sample_count(alpha)) +
                                    " samples for alpha = " + std::to_string(alpha));
    }
    std::sort(samples.data(), samples.data() + samples.size());
    const Eigen::Index n = samples.size();
    auto pick = [&](double q) {
        Eigen::Index k = static_cast<Eigen::Index>(std::ceil(q * static_cast<double>(n)));
        k = std::min(std::max<Eigen::Index>(k, 1), n);
        return samples(k - 1);
    };
    Interval pi;
    pi.lower = pick(alpha / 2.0);
    pi.upper = pick(1.0 - alpha / 2.0);
    pi.center = samples.mean();
    pi.alpha = alpha;
    pi.method = PiMethod::QPI;
    return pi;
}

//! Quantile prediction interval from S fresh draws of the transform.
inline Interval quantile_pi(const TrainedTransform& t, const Eigen::VectorXd& x_f,
                            Eigen::Index s, double alpha, RngStream& rng) {
    return quantile_pi_from_samples(predict_samples(t, x_f, s, rng), alpha);
}

//! True iff the fraction of validation responses falling inside their
//! intervals reaches 1 - alpha. Inclusive at the boundary.
inline bool early_stop_check(const std::vector<Interval>& intervals, const Dataset& validation,
                             double alpha) {
    if (intervals.size() != static_cast<std::size_t>(validation.n())) {
        throw std::invalid_argument("early_stop_check: one interval per validation row required");
    }
    Eigen::Index hits = 0;
    for (Eigen::Index v = 0; v < validation.n(); ++v) {
        if (intervals[v].contains(validation.y(v))) ++hits;
    }
    return static_cast<double>(hits) >= (1.0 - alpha) * static_cast<double>(validation.n());
}

namespace detail {

inline bool validation_coverage_reached(const TrainedTransform& t, const EarlyStop& es,
                                        RngStream rng) {
    std::vector<Interval> intervals;
    intervals.reserve(es.validation->n());
    for (Eigen::Index v = 0; v < es.validation->n(); ++v) {
        RngStream point = rng.child(std::to_string(v));
        intervals.push_back(quantile_pi(t, es.validation->x.row(v).transpose(), es.draws, es.alpha, point));
    }
    return early_stop_check(intervals, *es.validation, es.alpha);
}

} // namespace detail

//! Fits the inverse transform: reference draws are sampled once and held
//! fixed, then each epoch takes one full-batch gradient step and clips the
//! parameters to [-m, m].
inline TrainedTransform train_transform(const Dataset& ds, const ReferenceDist& ref,
                                        const TrainSpec& spec, RngStream& rng) {
    validate_dataset(ds);
    validate_reference(ref);
    validate_train_spec(spec);

    const Eigen::Index n = ds.n();
    const int d = static_cast<int>(ds.d());

    RngStream zrng = rng.child("z");
    Eigen::MatrixXd inputs(n, d + ref.p);
    inputs.leftCols(d) = ds.x;
    inputs.rightCols(ref.p) = sample_reference(ref, n, zrng);

    std::vector<int> sizes;
    sizes.push_back(d + ref.p);
    sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
    sizes.push_back(1);

    TrainedTransform t;
    t.net = mlp_init(sizes, spec.seed);
    t.ref = ref;
    t.d = d;
    t.meta.seed = spec.seed;

    OptimizerState opt = make_optimizer(spec.optimizer, spec.lr, t.net);
    for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
        auto [loss, grads] = loss_and_grads(t.net, inputs, ds.y);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train_transform: loss became non-finite at epoch " +
                                     std::to_string(epoch));
        }
        optimizer_step(opt, t.net, grads);
        clip_params(t.net, spec.clip_m);
        t.meta.epochs_run = epoch;
        if (spec.early_stop && epoch % spec.early_stop->period == 0) {
            const int check = epoch / spec.early_stop->period;
            if (detail::validation_coverage_reached(
                    t, *spec.early_stop, rng.child("earlystop/" + std::to_string(check)))) {
                t.meta.stopped_early = true;
                break;
            }
        }
    }
    t.meta.final_train_loss = mse_loss(t.net, inputs, ds.y);
    return t;
}

//! One-line header "ref=<spec>;d=<d>" (plus a method tag for non-default
//! transforms), then the network block.
inline void save_transform(std::ostream& os, const TrainedTransform& t) {
    os << "ref=" << reference_to_string(t.ref) << ";d=" << t.d;
    if (t.method != "dlmf") os << ";method=" << t.method;
    os << '\n';
    write_network(os, t.net);
}

inline TrainedTransform load_transform(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("transform: missing header");
    TrainedTransform t;
    std::stringstream hs(header);
    std::string field;
    bool saw_ref = false, saw_d = false;
    while (std::getline(hs, field, ';')) {
        const std::size_t eq = field.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("transform: malformed header field '" + field + "'");
        }
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "ref") {
            t.ref = parse_reference(value);
            saw_ref = true;
        } else if (key == "d") {
            t.d = std::stoi(value);
            saw_d = true;
        } else if (key == "method") {
            t.method = value;
        } else {
            throw std::runtime_error("transform: unknown header key '" + key + "'");
        }
    }
    if (!saw_ref || !saw_d) throw std::runtime_error("transform: header must carry ref and d");
    t.net = read_network(is);
    validate_transform(t);
    return t;
}

} // namespace dlmf
