#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "dlmf/dataset.hpp"
#include "dlmf/parallel.hpp"

namespace dlmf {

namespace detail {

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779;
// Below this log-weight even the largest kernel weight underflows double
// precision, which we treat as "outside every kernel's support".
inline constexpr double kLogWeightFloor = -708.0;

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z * M_SQRT1_2); }

} // namespace detail

//! Nadaraya-Watson estimate of F(y | x) with a Gaussian product kernel over
//! the predictors (one shared bandwidth h) and a Gaussian CDF smoothing the
//! responses at bandwidth h0. Throws std::domain_error when every predictor
//! weight underflows at the query point.
inline double kernel_cond_cdf(const Dataset& ds, const Eigen::VectorXd& x, double y, double h,
                              double h0) {
    validate_dataset(ds);
    if (!(h > 0.0) || !(h0 > 0.0)) throw std::invalid_argument("kernel_cond_cdf: bandwidths must be positive");
    if (x.size() != ds.d()) throw std::invalid_argument("kernel_cond_cdf: query dimension mismatch");

    const Eigen::Index n = ds.n();
    Eigen::VectorXd logw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        logw(i) = -(ds.x.row(i).transpose() - x).squaredNorm() / (2.0 * h * h);
    }
    const double m = logw.maxCoeff();
    if (m < detail::kLogWeightFloor) {
        throw std::domain_error("kernel_cond_cdf: query point lies outside every kernel's support");
    }
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = std::exp(logw(i) - m);
        num += w * detail::normal_cdf((y - ds.y(i)) / h0);
        den += w;
    }
    return num / den;
}

//! sup_t |ECDF_a(t) - ECDF_b(t)| over the pooled sample points.
inline double kolmogorov_distance(Eigen::VectorXd a, Eigen::VectorXd b) {
    if (a.size() < 1 || b.size() < 1) throw std::invalid_argument("kolmogorov_distance: empty sample");
    std::sort(a.data(), a.data() + a.size());
    std::sort(b.data(), b.data() + b.size());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double dist = 0.0;
    Eigen::Index ia = 0, ib = 0;
    while (ia < a.size() || ib < b.size()) {
        double t;
        if (ib >= b.size() || (ia < a.size() && a(ia) <= b(ib))) {
            t = a(ia);
        } else {
            t = b(ib);
        }
        while (ia < a.size() && a(ia) <= t) ++ia;
        while (ib < b.size() && b(ib) <= t) ++ib;
        dist = std::max(dist, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return dist;
}

//! Candidate bandwidths; the selector scans the full h x h0 cross product.
struct BandwidthGrid {
    std::vector<double> h;
    std::vector<double> h0;
};

//! 20 log-spaced points in [0.05, 2] on both axes.
inline BandwidthGrid default_bandwidth_grid() {
    BandwidthGrid grid;
    const int k = 20;
    const double lo = std::log(0.05), hi = std::log(2.0);
    for (int i = 0; i < k; ++i) {
        grid.h.push_back(std::exp(lo + (hi - lo) * static_cast<double>(i) / (k - 1)));
    }
    grid.h0 = grid.h;
    return grid;
}

//! Conditional kernel density model: predictors are z-scored with train
//! statistics, a single bandwidth h is shared across predictor dimensions.
struct CKDEModel {
    Eigen::MatrixXd xs;      // standardized predictors
    Eigen::VectorXd y;
    Eigen::VectorXd mean;    // per-column scaler
    Eigen::VectorXd scale;
    double h = 1.0;
    double h0 = 1.0;
    double loo_score = 0.0;  // log-likelihood of the selected pair

    Eigen::VectorXd standardize(const Eigen::VectorXd& x) const {
        return (x - mean).cwiseQuotient(scale);
    }
};

namespace detail {

//! Leave-one-out log-likelihood for every (h, h0) pair at once. Row blocks
//! decouple the exp() work per h from the work per h0; per-block partial
//! scores are reduced in block order so the result does not depend on
//! thread scheduling.
inline Eigen::MatrixXd loo_scores(const Eigen::MatrixXd& xs, const Eigen::VectorXd& y,
                                  const BandwidthGrid& grid, int threads) {
    const Eigen::Index n = xs.rows();
    const std::size_t nh = grid.h.size();
    const std::size_t nh0 = grid.h0.size();
    const Eigen::Index block = 128;
    const std::size_t blocks = static_cast<std::size_t>((n + block - 1) / block);

    std::vector<Eigen::MatrixXd> partial(blocks);
    parallel_for(blocks, threads, [&](std::size_t bi) {
        const Eigen::Index r0 = static_cast<Eigen::Index>(bi) * block;
        const Eigen::Index rows = std::min<Eigen::Index>(block, n - r0);

        Eigen::MatrixXd dx2(rows, n);
        Eigen::MatrixXd dy2(rows, n);
        for (Eigen::Index r = 0; r < rows; ++r) {
            dx2.row(r) = (xs.rowwise() - xs.row(r0 + r)).rowwise().squaredNorm().transpose();
            dy2.row(r) = (y.array() - y(r0 + r)).square().transpose();
        }

        std::vector<Eigen::MatrixXd> wx(nh);
        Eigen::MatrixXd den(rows, nh);
        for (std::size_t a = 0; a < nh; ++a) {
            wx[a] = (-dx2 / (2.0 * grid.h[a] * grid.h[a])).array().exp();
            for (Eigen::Index r = 0; r < rows; ++r) {
                den(r, a) = wx[a].row(r).sum() - wx[a](r, r0 + r);
            }
        }

        Eigen::MatrixXd score = Eigen::MatrixXd::Zero(nh, nh0);
        Eigen::MatrixXd ky(rows, n);
        for (std::size_t c = 0; c < nh0; ++c) {
            const double h0 = grid.h0[c];
            ky = (-dy2 / (2.0 * h0 * h0)).array().exp();
            const double log_norm = std::log(kInvSqrt2Pi / h0);
            for (std::size_t a = 0; a < nh; ++a) {
                for (Eigen::Index r = 0; r < rows; ++r) {
                    const double num = wx[a].row(r).dot(ky.row(r)) - wx[a](r, r0 + r) * ky(r, r0 + r);
                    if (num > 0.0 && den(r, a) > 0.0) {
                        score(a, c) += std::log(num / den(r, a)) + log_norm;
                    } else {
                        score(a, c) = -std::numeric_limits<double>::infinity();
                    }
                }
            }
        }
        partial[bi] = score;
    });

    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(nh, nh0);
    for (const auto& s : partial) total += s;
    return total;
}

} // namespace detail

//! Fits the CKDE benchmark: z-scores the predictors, then picks the (h, h0)
//! pair maximizing the leave-one-out log-likelihood. Ties go to the larger
//! bandwidth.
inline CKDEModel ckde_fit(const Dataset& ds, const BandwidthGrid& grid, int threads = 1) {
    validate_dataset(ds);
    if (grid.h.empty() || grid.h0.empty()) throw std::invalid_argument("ckde_fit: empty bandwidth grid");
    for (double v : grid.h) {
        if (!(v > 0.0)) throw std::invalid_argument("ckde_fit: bandwidths must be positive");
    }
    for (double v : grid.h0) {
        if (!(v > 0.0)) throw std::invalid_argument("ckde_fit: bandwidths must be positive");
    }

    const Eigen::Index n = ds.n();
    CKDEModel model;
    model.mean = ds.x.colwise().mean();
    model.scale.resize(ds.d());
    for (Eigen::Index j = 0; j < ds.d(); ++j) {
        double sd = 0.0;
        if (n > 1) {
            sd = std::sqrt((ds.x.col(j).array() - model.mean(j)).square().sum() /
                           static_cast<double>(n - 1));
        }
        model.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    if (n > 1) {
        bool x_flat = true;
        for (Eigen::Index j = 0; j < ds.d() && x_flat; ++j) {
            x_flat = (ds.x.col(j).array() == ds.x(0, j)).all();
        }
        const bool y_flat = (ds.y.array() == ds.y(0)).all();
        if (x_flat && y_flat) {
            throw std::invalid_argument("ckde_fit: degenerate data (zero variance in every dimension)");
        }
    }
    model.xs = (ds.x.rowwise() - model.mean.transpose()).array().rowwise() /
               model.scale.transpose().array();
    model.y = ds.y;

    if (grid.h.size() == 1 && grid.h0.size() == 1) {
        model.h = grid.h[0];
        model.h0 = grid.h0[0];
        model.loo_score = std::numeric_limits<double>::quiet_NaN();
        return model;
    }

    const Eigen::MatrixXd score = detail::loo_scores(model.xs, model.y, grid, threads);
    std::size_t best_a = 0, best_c = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < grid.h.size(); ++a) {
        for (std::size_t c = 0; c < grid.h0.size(); ++c) {
            if (score(a, c) >= best) {   // >= so ties land on the larger bandwidth
                best = score(a, c);
                best_a = a;
                best_c = c;
            }
        }
    }
    model.h = grid.h[best_a];
    model.h0 = grid.h0[best_c];
    model.loo_score = best;
    return model;
}

//! Estimated conditional density f(y | x); x in original coordinates.
inline double ckde_density(const CKDEModel& model, const Eigen::VectorXd& x, double y) {
    if (x.size() != model.xs.cols()) throw std::invalid_argument("ckde: query dimension mismatch");
    const Eigen::VectorXd q = model.standardize(x);
    const Eigen::Index n = model.xs.rows();
    Eigen::VectorXd logw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        logw(i) = -(model.xs.row(i).transpose() - q).squaredNorm() / (2.0 * model.h * model.h);
    }
    const double m = logw.maxCoeff();
    if (m < detail::kLogWeightFloor) {
        throw std::domain_error("ckde: query point lies outside every kernel's support");
    }
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = std::exp(logw(i) - m);
        const double u = (y - model.y(i)) / model.h0;
        num += w * detail::kInvSqrt2Pi * std::exp(-0.5 * u * u) / model.h0;
        den += w;
    }
    return num / den;
}

inline constexpr int kCkdeSubdivisions = 1000;
inline constexpr double kCkdeWindowFactor = 9.0;   // 3 * h0 * k with k = 3

//! Conditional mean by a midpoint rule with exactly 1000 subdivisions of
//! y * f(y|x) over the data range padded by 9 * h0, normalized by the
//! integral of the density itself.
inline double ckde_mean(const CKDEModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.xs.cols()) throw std::invalid_argument("ckde: query dimension mismatch");
    const Eigen::VectorXd q = model.standardize(x);
    const Eigen::Index n = model.xs.rows();
    Eigen::VectorXd logw(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        logw(i) = -(model.xs.row(i).transpose() - q).squaredNorm() / (2.0 * model.h * model.h);
    }
    const double m = logw.maxCoeff();
    if (m < detail::kLogWeightFloor) {
        throw std::domain_error("ckde: query point lies outside every kernel's support");
    }
    const Eigen::VectorXd w = (logw.array() - m).exp();

    const double lo = model.y.minCoeff() - kCkdeWindowFactor * model.h0;
    const double hi = model.y.maxCoeff() + kCkdeWindowFactor * model.h0;
    const double step = (hi - lo) / kCkdeSubdivisions;
    double num = 0.0, den = 0.0;
    for (int s = 0; s < kCkdeSubdivisions; ++s) {
        const double yv = lo + (static_cast<double>(s) + 0.5) * step;
        double f = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double u = (yv - model.y(i)) / model.h0;
            f += w(i) * std::exp(-0.5 * u * u);
        }
        num += yv * f;
        den += f;
    }
    if (!(den > 0.0)) {
        throw std::domain_error("ckde: conditional density vanished over the integration window");
    }
    return num / den;
}

} // namespace dlmf
