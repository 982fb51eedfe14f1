#pragma once

#include <initializer_list>
#include <random>

#include "vdamp/potential.hpp"

namespace vdamp::testing {

inline Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) {
        v[i++] = x;
    }
    return v;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    const auto cols = static_cast<Eigen::Index>(rows.begin()->size());
    Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        Eigen::Index c = 0;
        for (double x : row) {
            m(r, c++) = x;
        }
        ++r;
    }
    return m;
}

/// Fixed-seed point generator for property tests.
class Points {
public:
    explicit Points(std::uint64_t seed, double scale = 2.0) : rng_(seed), normal_(0.0, scale) {}

    Vector draw(Eigen::Index n) {
        Vector x(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            x[i] = normal_(rng_);
        }
        return x;
    }

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
};

/// One instance of every potential kind, as used by the bundled scenarios.
inline std::vector<PotentialSpec> catalog() {
    return {
        PotentialSpec::quadratic(mat({{1.0, 0.0}, {0.0, 1.0}}), vec({0.0, 0.0})),
        PotentialSpec::quadratic(mat({{2.0, 0.5}, {0.5, 1.0}}), vec({1.0, 0.0})),
        PotentialSpec::quadratic(mat({{1.0, 0.0}, {0.0, 0.0}}), vec({1.0, 0.0})),
        PotentialSpec::least_squares(mat({{1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}}), vec({1.0, 0.0, -1.0})),
        PotentialSpec::least_squares(mat({{1.0, 2.0}, {3.0, 4.0}, {5.0, 6.0}}), vec({1.0, 2.0, 3.0})),
        PotentialSpec::log_sum_exp(mat({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}), vec({0.0, 0.0, 0.0, 0.0})),
        PotentialSpec::log_sum_exp(mat({{1.0, 2.0}, {-1.0, 0.5}, {0.0, -1.0}}), vec({0.3, -0.2, 0.1})),
        PotentialSpec::huber(1.0, vec({1.0, -2.0})),
        PotentialSpec::zero(3),
    };
}

} // namespace vdamp::testing
