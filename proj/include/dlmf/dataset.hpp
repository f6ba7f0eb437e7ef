#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dlmf {

//! A regression sample: n rows of predictors paired with a scalar response.
//! Row order is significant; shuffling only happens in explicit split
//! operations.
struct Dataset {
    Eigen::MatrixXd x;                                       // n x d
    Eigen::VectorXd y;                                       // n
    std::optional<std::vector<std::string>> feature_names;   // d labels

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index d() const { return x.cols(); }
};

//! Throws unless the dataset invariants hold: at least one row, matching
//! predictor/response counts, every entry finite.
inline void validate_dataset(const Dataset& ds) {
    if (ds.x.rows() < 1) {
        throw std::invalid_argument("dataset: need at least one row");
    }
    if (ds.x.rows() != ds.y.size()) {
        throw std::invalid_argument(
            "dataset: predictor rows (" + std::to_string(ds.x.rows()) +
            ") do not match response length (" + std::to_string(ds.y.size()) + ")");
    }
    if (ds.feature_names && static_cast<Eigen::Index>(ds.feature_names->size()) != ds.x.cols()) {
        throw std::invalid_argument("dataset: feature name count does not match predictor columns");
    }
    for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
            if (!std::isfinite(ds.x(i, j))) {
                throw std::invalid_argument(
                    "dataset: non-finite predictor at row " + std::to_string(i) +
                    ", column " + std::to_string(j));
            }
        }
        if (!std::isfinite(ds.y(i))) {
            throw std::invalid_argument("dataset: non-finite response at row " + std::to_string(i));
        }
    }
}

} // namespace dlmf
