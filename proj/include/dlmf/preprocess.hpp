#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dlmf/dataset.hpp"
#include "dlmf/rng.hpp"

namespace dlmf {

//! Train / validation / test partition with the row indices kept for audit.
struct SplitResult {
    Dataset train;
    Dataset validation;
    Dataset test;
    std::vector<Eigen::Index> train_idx;
    std::vector<Eigen::Index> validation_idx;
    std::vector<Eigen::Index> test_idx;
};

namespace detail {

inline Eigen::Index uniform_index(RngStream& rng, Eigen::Index bound) {
    // rejection keeps the draw exactly uniform on [0, bound)
    const std::uint64_t b = static_cast<std::uint64_t>(bound);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % b;
    for (;;) {
        const std::uint64_t v = rng.next_u64();
        if (v < limit) return static_cast<Eigen::Index>(v % b);
    }
}

inline Dataset take_rows(const Dataset& ds, const std::vector<Eigen::Index>& idx) {
    Dataset out;
    out.x.resize(static_cast<Eigen::Index>(idx.size()), ds.d());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = ds.x.row(idx[i]);
        out.y(static_cast<Eigen::Index>(i)) = ds.y(idx[i]);
    }
    out.feature_names = ds.feature_names;
    return out;
}

} // namespace detail

//! Seeded uniform shuffle, then: first n_train rows train; of the rest,
//! round(0.2 * |rest|) validation and the remainder test.
inline SplitResult split_real_data(const Dataset& ds, Eigen::Index n_train, std::uint64_t seed) {
    validate_dataset(ds);
    if (n_train < 1) throw std::invalid_argument("split: n_train must be >= 1");
    if (n_train >= ds.n()) {
        throw std::invalid_argument("split: n_train must leave at least one held-out row");
    }
    std::vector<Eigen::Index> perm(ds.n());
    std::iota(perm.begin(), perm.end(), 0);
    RngStream rng(seed, "split");
    for (Eigen::Index i = ds.n() - 1; i > 0; --i) {
        const Eigen::Index j = detail::uniform_index(rng, i + 1);
        std::swap(perm[i], perm[j]);
    }

    SplitResult split;
    const Eigen::Index rest = ds.n() - n_train;
    const Eigen::Index n_val = static_cast<Eigen::Index>(std::lround(0.2 * static_cast<double>(rest)));
    split.train_idx.assign(perm.begin(), perm.begin() + n_train);
    split.validation_idx.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    split.test_idx.assign(perm.begin() + n_train + n_val, perm.end());
    split.train = detail::take_rows(ds, split.train_idx);
    split.validation = detail::take_rows(ds, split.validation_idx);
    split.test = detail::take_rows(ds, split.test_idx);
    return split;
}

//! Per-predictor z-score parameters. Constant columns get scale 1 so the
//! transform stays invertible.
struct Scaler {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

inline Scaler fit_scaler(const Dataset& train) {
    validate_dataset(train);
    Scaler sc;
    sc.mean = train.x.colwise().mean();
    sc.scale.resize(train.d());
    for (Eigen::Index j = 0; j < train.d(); ++j) {
        double sd = 0.0;
        if (train.n() > 1) {
            sd = std::sqrt((train.x.col(j).array() - sc.mean(j)).square().sum() /
                           static_cast<double>(train.n() - 1));
        }
        sc.scale(j) = sd > 0.0 ? sd : 1.0;
    }
    return sc;
}

//! Applies the z-score transform to the predictors; the response is untouched.
inline Dataset apply_scaler(const Scaler& sc, const Dataset& ds) {
    if (sc.mean.size() != ds.d()) throw std::invalid_argument("scaler: dimension mismatch");
    Dataset out = ds;
    out.x = (ds.x.rowwise() - sc.mean.transpose()).array().rowwise() / sc.scale.transpose().array();
    return out;
}

//! Fits on train only, applies to every split handed in.
inline Scaler standardize_fit_apply(Dataset& train, std::vector<Dataset*> others = {}) {
    const Scaler sc = fit_scaler(train);
    train = apply_scaler(sc, train);
    for (Dataset* ds : others) {
        if (ds && ds->n() > 0) *ds = apply_scaler(sc, *ds);
    }
    return sc;
}

} // namespace dlmf
