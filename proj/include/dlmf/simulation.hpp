#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

#include "dlmf/dataset.hpp"
#include "dlmf/rng.hpp"

namespace dlmf {

//! The three simulated data-generating processes: homoscedastic regression,
//! heteroscedastic regression, and a two-component location mixture.
enum class SimModelId { Model1 = 1, Model2 = 2, Model3 = 3 };

inline SimModelId parse_sim_model(int id) {
    switch (id) {
        case 1: return SimModelId::Model1;
        case 2: return SimModelId::Model2;
        case 3: return SimModelId::Model3;
    }
    throw std::invalid_argument("simulation model must be 1, 2, or 3");
}

inline constexpr int kSimPredictorDim = 5;
inline constexpr double kSimTruncation = 5.0;   // support bound for X and noise
inline constexpr double kModel3Sd = 0.25;

namespace detail {

inline double model_mean_part(SimModelId id, const Eigen::VectorXd& x) {
    switch (id) {
        case SimModelId::Model1:
            return x(0) * x(0) + std::exp(x(1) + x(2) / 3.0) + std::sin(x(3) + x(4));
        case SimModelId::Model2:
            return x(0) * x(0) + std::exp(x(1) + x(2) / 3.0) + x(3) - x(4);
        case SimModelId::Model3:
            return 0.0;
    }
    return 0.0;
}

inline double model2_noise_scale(const Eigen::VectorXd& x) {
    return 0.5 + x(1) * x(1) / 2.0 + x(4) * x(4) / 2.0;
}

//! One response draw given x. Consumes the mixture coin before the noise so
//! the draw order is fixed.
inline double draw_response(SimModelId id, const Eigen::VectorXd& x, RngStream& rng) {
    switch (id) {
        case SimModelId::Model1:
            return model_mean_part(id, x) + rng.next_truncated_normal(-kSimTruncation, kSimTruncation);
        case SimModelId::Model2:
            return model_mean_part(id, x) +
                   model2_noise_scale(x) * rng.next_truncated_normal(-kSimTruncation, kSimTruncation);
        case SimModelId::Model3: {
            const double u = rng.next_double();
            const double center = (u < 0.5) ? -x(0) : x(0);
            return center + kModel3Sd * rng.next_truncated_normal(-kSimTruncation, kSimTruncation);
        }
    }
    return 0.0;
}

} // namespace detail

//! Predictor rows i.i.d. N(0, I_5) truncated to [-5, 5] per coordinate.
inline Eigen::MatrixXd sample_sim_predictors(Eigen::Index count, RngStream& rng) {
    Eigen::MatrixXd x(count, kSimPredictorDim);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (int j = 0; j < kSimPredictorDim; ++j) {
            x(i, j) = rng.next_truncated_normal(-kSimTruncation, kSimTruncation);
        }
    }
    return x;
}

inline Dataset generate_model_data(SimModelId id, Eigen::Index n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("generate_model_data: n must be >= 1");
    Dataset ds;
    ds.x.resize(n, kSimPredictorDim);
    ds.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < kSimPredictorDim; ++j) {
            ds.x(i, j) = rng.next_truncated_normal(-kSimTruncation, kSimTruncation);
        }
        ds.y(i) = detail::draw_response(id, ds.x.row(i).transpose(), rng);
    }
    return ds;
}

//! E[Y | X = x] under the model. The truncated noise is symmetric, so no
//! bias correction enters; the mixture components of Model-3 cancel.
inline double true_conditional_mean(SimModelId id, const Eigen::VectorXd& x) {
    if (x.size() != kSimPredictorDim) {
        throw std::invalid_argument("true_conditional_mean: x must have dimension 5");
    }
    return detail::model_mean_part(id, x);
}

//! count i.i.d. draws of Y | X = x; the oracle sampler behind the CV3
//! coverage estimates.
inline Eigen::VectorXd sample_conditional(SimModelId id, const Eigen::VectorXd& x,
                                          Eigen::Index count, RngStream& rng) {
    if (x.size() != kSimPredictorDim) {
        throw std::invalid_argument("sample_conditional: x must have dimension 5");
    }
    if (count < 1) throw std::invalid_argument("sample_conditional: count must be >= 1");
    Eigen::VectorXd out(count);
    for (Eigen::Index i = 0; i < count; ++i) out(i) = detail::draw_response(id, x, rng);
    return out;
}

} // namespace dlmf
