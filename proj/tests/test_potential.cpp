#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "vdamp/error.hpp"
#include "vdamp/potential.hpp"

using namespace vdamp;
using namespace vdamp::testing;

namespace {

const PotentialSpec identity2 = PotentialSpec::quadratic(mat({{1.0, 0.0}, {0.0, 1.0}}), vec({0.0, 0.0}));

} // namespace

TEST_CASE("value at hand-checked points") {
    CHECK(identity2.value(vec({3.0, 4.0})) == doctest::Approx(12.5).epsilon(1e-15));
    CHECK(PotentialSpec::zero(2).value(vec({-7.0, 2.5})) == 0.0);

    // Brute-force log(e^0 + e^0).
    const PotentialSpec lse = PotentialSpec::log_sum_exp(mat({{1.0}, {-1.0}}), vec({0.0, 0.0}));
    const double brute = std::log(std::exp(0.0) + std::exp(-0.0));
    CHECK(lse.value(vec({0.0})) == doctest::Approx(brute).epsilon(1e-15));
    CHECK(lse.value(vec({0.0})) == doctest::Approx(0.693147).epsilon(1e-6));
}

TEST_CASE("gradient at hand-checked points") {
    const Vector g = identity2.gradient(vec({3.0, 4.0}));
    CHECK(g[0] == 3.0);
    CHECK(g[1] == 4.0);
    CHECK(PotentialSpec::zero(2).gradient(vec({1.0, 2.0})).isZero(0.0));

    const PotentialSpec huber = PotentialSpec::huber(1.0, vec({0.0}));
    CHECK(huber.gradient(vec({2.0}))[0] == 1.0);
    CHECK(check_gradient_fd(huber, vec({2.0}), 1e-6) <= 1e-8);
}

TEST_CASE("finite-difference gradient oracle") {
    CHECK(check_gradient_fd(identity2, vec({3.0, 4.0}), 1e-5) <= 1e-8);
    CHECK(check_gradient_fd(PotentialSpec::zero(2), vec({3.0, 4.0}), 1e-5) == 0.0);

    const PotentialSpec lse =
        PotentialSpec::log_sum_exp(mat({{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}}), vec({0.0, 0.0, 0.0, 0.0}));
    Points pts(11);
    for (int k = 0; k < 10; ++k) {
        CHECK(check_gradient_fd(lse, pts.draw(2), 1e-5) <= 1e-6);
    }
    CHECK_THROWS_AS(check_gradient_fd(lse, vec({0.0, 0.0}), 0.0), InvalidInput);
}

TEST_CASE("convexity gap") {
    const PotentialSpec q1 = PotentialSpec::quadratic(mat({{1.0}}), vec({0.0}));
    CHECK(check_convexity_gap(q1, vec({1.0}), vec({3.0})) == doctest::Approx(2.0).epsilon(1e-15));
    for (const PotentialSpec& p : catalog()) {
        const Vector x = Vector::LinSpaced(p.dim(), -1.0, 2.0);
        CHECK(check_convexity_gap(p, x, x) == 0.0);
    }
    CHECK(check_convexity_gap(PotentialSpec::zero(2), vec({1.0, 2.0}), vec({-3.0, 5.0})) == 0.0);
}

TEST_CASE("distance to argmin") {
    CHECK(distance_to_argmin(identity2, vec({3.0, 4.0})) == doctest::Approx(5.0).epsilon(1e-15));
    const PotentialSpec degenerate = PotentialSpec::quadratic(mat({{1.0, 0.0}, {0.0, 0.0}}), vec({0.0, 0.0}));
    CHECK(distance_to_argmin(degenerate, vec({3.0, 4.0})) == doctest::Approx(3.0).epsilon(1e-14));
    for (const PotentialSpec& p : catalog()) {
        CHECK(distance_to_argmin(p, *p.argmin_witness()) <= 1e-12);
    }
}

TEST_CASE("construction rejects invalid potentials") {
    CHECK_THROWS_AS(PotentialSpec::quadratic(mat({{1.0, 2.0}, {0.0, 1.0}}), vec({0.0, 0.0})), InvalidInput);
    CHECK_THROWS_AS(PotentialSpec::quadratic(mat({{-1.0}}), vec({0.0})), InvalidInput);
    // b outside range(A): Phi unbounded below along the null space.
    CHECK_THROWS_AS(PotentialSpec::quadratic(mat({{1.0, 0.0}, {0.0, 0.0}}), vec({0.0, 1.0})), InvalidInput);
    CHECK_THROWS_AS(PotentialSpec::huber(0.0, vec({0.0})), InvalidInput);
    CHECK_THROWS_AS(PotentialSpec::zero(0), InvalidInput);
    // All rows on one side: log-sum-exp decreases forever.
    CHECK_THROWS(PotentialSpec::log_sum_exp(mat({{1.0}, {2.0}}), vec({0.0, 0.0})));
    CHECK_THROWS_AS(identity2.value(vec({1.0})), InvalidInput);
}

TEST_CASE("excess matches value minus minimum") {
    Points pts(5);
    for (const PotentialSpec& p : catalog()) {
        for (int k = 0; k < 20; ++k) {
            const Vector x = pts.draw(p.dim());
            CHECK(p.excess(x) == doctest::Approx(p.value(x) - p.min_value()).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("catalog properties with fixed seeds") {
    Points pts(20240917);
    for (const PotentialSpec& p : catalog()) {
        CAPTURE(p.kind_name());
        const Vector& w = *p.argmin_witness();
        CHECK(p.gradient(w).norm() <= 1e-9 * (1.0 + w.norm()));
        CHECK(std::abs(p.value(w) - p.min_value()) <= 1e-10 * (1.0 + std::abs(p.min_value())));
        for (int k = 0; k < 10; ++k) {
            CHECK(check_gradient_fd(p, pts.draw(p.dim()), 1e-6) <= 1e-6);
        }
        for (int k = 0; k < 100; ++k) {
            const Vector x = pts.draw(p.dim());
            const Vector y = pts.draw(p.dim());
            CHECK(check_convexity_gap(p, x, y) >= -1e-10 * (1.0 + std::abs(p.value(y))));
            CHECK(p.value(x) >= p.min_value() - 1e-10);
        }
    }
}

TEST_CASE("affine argmin description") {
    const PotentialSpec degenerate = PotentialSpec::quadratic(mat({{1.0, 0.0}, {0.0, 0.0}}), vec({1.0, 0.0}));
    const auto& aff = *degenerate.argmin_affine();
    REQUIRE(aff.basis.cols() == 1);
    CHECK(std::abs(aff.basis(0, 0)) <= 1e-15);
    CHECK(std::abs(aff.basis(1, 0)) == doctest::Approx(1.0));
    CHECK(degenerate.gradient(aff.basepoint + 7.0 * aff.basis.col(0)).norm() <= 1e-12);

    const PotentialSpec ls = PotentialSpec::least_squares(mat({{1.0, 1.0}}), vec({2.0}));
    REQUIRE(ls.argmin_affine()->basis.cols() == 1);
    CHECK(ls.min_value() == doctest::Approx(0.0).scale(1.0));
    CHECK(distance_to_argmin(ls, vec({2.0, 0.0})) <= 1e-12);
    CHECK(distance_to_argmin(ls, vec({0.0, 0.0})) == doctest::Approx(std::sqrt(2.0)));
}
