#pragma once

#include <Eigen/Dense>

#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "dlmf/rng.hpp"

namespace dlmf {

enum class RefKind { UniformCube, StdNormal, TruncStdNormal };

//! Distribution of the reference variable Z that carries the conditional
//! randomness through the learned transform.
struct ReferenceDist {
    RefKind kind = RefKind::StdNormal;
    int p = 1;
    double lo = -5.0;   // truncation bounds, TruncStdNormal only
    double hi = 5.0;

    static ReferenceDist uniform_cube(int p) { return {RefKind::UniformCube, p, 0.0, 1.0}; }
    static ReferenceDist std_normal(int p) { return {RefKind::StdNormal, p, 0.0, 0.0}; }
    static ReferenceDist trunc_std_normal(int p, double lo, double hi) {
        return {RefKind::TruncStdNormal, p, lo, hi};
    }
};

inline void validate_reference(const ReferenceDist& dist) {
    if (dist.p < 1) throw std::invalid_argument("reference: dimension p must be >= 1");
    if (dist.kind == RefKind::TruncStdNormal && !(dist.lo < dist.hi)) {
        throw std::invalid_argument("reference: truncation bounds must satisfy lo < hi");
    }
}

//! Parses the config syntax "uniform:p", "normal:p", "truncnormal:p:lo:hi".
inline ReferenceDist parse_reference(const std::string& text) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = text.find(':', start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw std::invalid_argument("reference: bad integer '" + s + "' in '" + text + "'");
        }
    };
    auto to_double = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument("trailing");
            return v;
        } catch (...) {
            throw std::invalid_argument("reference: bad number '" + s + "' in '" + text + "'");
        }
    };

    ReferenceDist dist;
    if (parts.size() == 2 && parts[0] == "uniform") {
        dist = ReferenceDist::uniform_cube(to_int(parts[1]));
    } else if (parts.size() == 2 && parts[0] == "normal") {
        dist = ReferenceDist::std_normal(to_int(parts[1]));
    } else if (parts.size() == 4 && parts[0] == "truncnormal") {
        dist = ReferenceDist::trunc_std_normal(to_int(parts[1]), to_double(parts[2]), to_double(parts[3]));
    } else {
        throw std::invalid_argument("reference: cannot parse spec '" + text + "'");
    }
    validate_reference(dist);
    return dist;
}

inline std::string reference_to_string(const ReferenceDist& dist) {
    switch (dist.kind) {
        case RefKind::UniformCube: return "uniform:" + std::to_string(dist.p);
        case RefKind::StdNormal: return "normal:" + std::to_string(dist.p);
        case RefKind::TruncStdNormal: {
            char buf[96];
            std::snprintf(buf, sizeof(buf), "truncnormal:%d:%.17g:%.17g", dist.p, dist.lo, dist.hi);
            return buf;
        }
    }
    return {};
}

//! i.i.d. draws from the truncated standard normal, by rejection.
inline Eigen::VectorXd sample_truncated_normal(double lo, double hi, Eigen::Index count, RngStream& rng) {
    if (!(lo < hi)) throw std::invalid_argument("sample_truncated_normal: lo must be < hi");
    Eigen::VectorXd out(count);
    for (Eigen::Index i = 0; i < count; ++i) out(i) = rng.next_truncated_normal(lo, hi);
    return out;
}

//! count i.i.d. rows from the reference distribution.
inline Eigen::MatrixXd sample_reference(const ReferenceDist& dist, Eigen::Index count, RngStream& rng) {
    validate_reference(dist);
    if (count < 1) throw std::invalid_argument("sample_reference: count must be >= 1");
    Eigen::MatrixXd z(count, dist.p);
    for (Eigen::Index i = 0; i < count; ++i) {
        for (int j = 0; j < dist.p; ++j) {
            switch (dist.kind) {
                case RefKind::UniformCube: z(i, j) = rng.next_double(); break;
                case RefKind::StdNormal: z(i, j) = rng.next_normal(); break;
                case RefKind::TruncStdNormal: z(i, j) = rng.next_truncated_normal(dist.lo, dist.hi); break;
            }
        }
    }
    return z;
}

} // namespace dlmf
