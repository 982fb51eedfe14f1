#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "support.hpp"
#include "vdamp/damping.hpp"
#include "vdamp/error.hpp"

using namespace vdamp;
using namespace vdamp::testing;

TEST_CASE("gamma closed forms") {
    CHECK(DampingSpec::over_t(4.0, 1.0).gamma(2.0) == 2.0);
    CHECK(DampingSpec::shifted(5.0, 1.0, 1.0).gamma(9.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(DampingSpec::power_law(2.0, 0.5, 1.0).gamma(4.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(DampingSpec::over_t(4.0, 1.0).gamma(0.5), InvalidInput);
}

TEST_CASE("positive part of (t gamma)'") {
    const DampingSpec over = DampingSpec::over_t(4.0, 1.0);
    for (double t : {1.0, 2.0, 1e3, 1e8}) {
        CHECK(over.t_gamma_prime_pos(t) == 0.0);
    }
    CHECK(DampingSpec::shifted(5.0, 1.0, 1.0).t_gamma_prime_pos(9.0) == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(DampingSpec::power_law(2.0, 0.5, 1.0).t_gamma_prime_pos(4.0) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("(t gamma)' agrees with central differences") {
    const std::vector<DampingSpec> ds = {
        DampingSpec::shifted(5.0, 1.0, 10.0), DampingSpec::shifted(5.0, -0.5, 1.0),
        DampingSpec::power_law(2.0, 0.5, 1.0), DampingSpec::tabulated({1.0, 2.0, 5.0}, {6.0, 2.5, 0.9})};
    for (const DampingSpec& d : ds) {
        for (double t : {d.t0() + 0.3, d.t0() + 2.2, 40.0}) {
            const double h = 1e-6 * t;
            const double fd = (d.t_gamma(t + h) - d.t_gamma(t - h)) / (2.0 * h);
            CHECK(d.t_gamma_prime(t) == doctest::Approx(fd).epsilon(1e-6));
        }
    }
}

TEST_CASE("certificates") {
    const auto over = certify(DampingSpec::over_t(4.0, 1.0));
    CHECK(over.k_inf == 4.0);
    CHECK(over.satisfies_lower_bound);
    CHECK(over.positive_variation_integral == 0.0);
    CHECK(over.satisfies_integrability);
    CHECK(over.method == CertificateMethod::ClosedForm);

    const auto shifted = certify(DampingSpec::shifted(5.0, 1.0, 10.0));
    CHECK(std::abs(shifted.k_inf - 50.0 / 11.0) <= 1e-12);
    CHECK(shifted.satisfies_lower_bound);
    CHECK(std::abs(shifted.positive_variation_integral - 5.0 / 11.0) <= 1e-12);
    CHECK(shifted.satisfies_integrability);

    const auto power = certify(DampingSpec::power_law(2.0, 0.5, 1.0));
    CHECK(power.k_inf == doctest::Approx(2.0));
    CHECK_FALSE(power.satisfies_lower_bound);
    CHECK(power.positive_variation_integral == std::numeric_limits<double>::infinity());
    CHECK_FALSE(power.satisfies_integrability);

    CHECK_FALSE(certify(DampingSpec::over_t(2.0, 1.0)).satisfies_lower_bound);
    // K = 3 exactly is the excluded boundary.
    CHECK_FALSE(certify(DampingSpec::over_t(3.0, 1.0)).satisfies_lower_bound);
}

namespace {

// Independent oracle: sum of positive increments of t gamma on a fine grid.
double positive_variation_fd(const std::vector<double>& t, const std::vector<double>& g) {
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        const int n = 200000;
        double prev = t[k] * g[k];
        for (int i = 1; i <= n; ++i) {
            const double s = t[k] + (t[k + 1] - t[k]) * i / n;
            const double v = s * (g[k] + (g[k + 1] - g[k]) * (s - t[k]) / (t[k + 1] - t[k]));
            total += std::max(0.0, v - prev);
            prev = v;
        }
    }
    return total;
}

} // namespace

TEST_CASE("tabulated certificate is exact per segment") {
    // t gamma is 6, 5, 4.5, 4.2, 4 at the knots but rises inside every segment,
    // since t (a + b t) peaks in the interior when gamma falls steeply enough.
    const std::vector<double> t = {1, 2, 5, 10, 100};
    const std::vector<double> g = {6, 2.5, 0.9, 0.42, 0.04};
    const DampingSpec d = DampingSpec::tabulated(t, g);
    const auto c = certify(d);
    CHECK(c.k_inf == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(c.positive_variation_integral == doctest::Approx(positive_variation_fd(t, g)).epsilon(1e-8));
    CHECK(c.positive_variation_integral == doctest::Approx(10.319).epsilon(1e-4));
    CHECK(c.satisfies_integrability);
    CHECK(c.method == CertificateMethod::PiecewiseExact);
    // Held constant past the last knot.
    CHECK(d.t_gamma(1e6) == doctest::Approx(4.0).epsilon(1e-14));

    // gamma = 5.5 - 1.5 t on [1, 2]: t gamma peaks at t = 11/6 with value 121/24.
    const auto rising = certify(DampingSpec::tabulated({1, 2}, {4, 2.5}));
    CHECK(rising.positive_variation_integral == doctest::Approx(121.0 / 24.0 - 4.0).epsilon(1e-12));
    CHECK(rising.positive_variation_integral == doctest::Approx(positive_variation_fd({1, 2}, {4, 2.5})).epsilon(1e-8));

    // Shallow decrease keeps t gamma monotone: no positive variation.
    CHECK(certify(DampingSpec::tabulated({1, 2}, {4, 3})).positive_variation_integral ==
          doctest::Approx(positive_variation_fd({1, 2}, {4, 3})).scale(1.0));
}

TEST_CASE("big gamma") {
    CHECK(DampingSpec::over_t(4.0, 1.0).big_gamma(1.0, std::exp(1.0)) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(DampingSpec::shifted(5.0, 1.0, 1.0).big_gamma(9.0, 19.0) ==
          doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(DampingSpec::shifted(5.0, 1.0, 1.0).big_gamma(9.0, 19.0) == doctest::Approx(3.4657).epsilon(1e-4));
    for (const DampingSpec& d : {DampingSpec::over_t(4.0, 1.0), DampingSpec::power_law(2.0, 0.5, 1.0),
                                 DampingSpec::tabulated({1, 2, 5}, {6, 2.5, 0.9})}) {
        CHECK(d.big_gamma(3.0, 3.0) == 0.0);
    }
}

TEST_CASE("tail kernel") {
    const KernelCheck a = tail_kernel_check(DampingSpec::over_t(4.0, 1.0), 2.0, 4.0);
    CHECK(a.bound == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(std::abs(a.numeric / a.bound - 1.0) <= 1e-8);

    const KernelCheck b = tail_kernel_check(DampingSpec::over_t(10.0, 1.0), 1.0, 10.0);
    CHECK(b.bound == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(std::abs(b.numeric / b.bound - 1.0) <= 1e-8);

    // Exact value (1 + s) / (K - 1) for K / (1 + t).
    const KernelCheck c = tail_kernel_check(DampingSpec::shifted(5.0, 1.0, 10.0), 10.0, 50.0 / 11.0);
    CHECK(c.bound == doctest::Approx(10.0 / (50.0 / 11.0 - 1.0)).epsilon(1e-14));
    CHECK(c.bound == doctest::Approx(2.821).epsilon(1e-3));
    CHECK(c.numeric == doctest::Approx(11.0 / 4.0).epsilon(1e-9));
    CHECK(c.numeric <= c.bound * (1.0 + 1e-8));

    CHECK_THROWS_AS(tail_kernel_check(DampingSpec::over_t(4.0, 1.0), 2.0, 1.0), Unsupported);
}

TEST_CASE("damping properties on log grids") {
    Points pts(77);
    std::vector<DampingSpec> ds = {DampingSpec::over_t(4.0, 1.0), DampingSpec::shifted(5.0, 1.0, 10.0),
                                   DampingSpec::shifted(4.0, -0.5, 1.0), DampingSpec::power_law(2.0, 0.5, 1.0),
                                   DampingSpec::tabulated({1, 2, 5, 10, 100}, {6, 2.5, 0.9, 0.42, 0.04})};
    for (int k = 0; k < 5; ++k) {
        ds.push_back(DampingSpec::shifted(pts.uniform(3.5, 12.0), pts.uniform(-0.5, 5.0), pts.uniform(1.0, 20.0)));
    }
    for (const DampingSpec& d : ds) {
        CAPTURE(d.kind_name());
        const auto c = certify(d);
        for (int i = 0; i <= 1000; ++i) {
            const double t = d.t0() * std::pow(10.0, 8.0 * i / 1000.0);
            CHECK(d.gamma(t) > 0.0);
            CHECK(t * d.gamma(t) >= c.k_inf - 1e-9);
        }
        // Additivity of Gamma.
        for (int k = 0; k < 20; ++k) {
            const double s = d.t0() * pts.uniform(1.0, 100.0);
            const double u = s * pts.uniform(1.0, 50.0);
            const double t = u * pts.uniform(1.0, 50.0);
            const double whole = d.big_gamma(s, t);
            CHECK(std::abs(whole - d.big_gamma(s, u) - d.big_gamma(u, t)) <= 1e-10 * (1.0 + std::abs(whole)));
        }
        if (c.satisfies_lower_bound) {
            for (double s : {d.t0(), 3.0 * d.t0(), 100.0 * d.t0()}) {
                const KernelCheck kc = tail_kernel_check(d, s, c.k_inf);
                CHECK(kc.numeric <= kc.bound * (1.0 + 1e-8));
            }
        }
    }
}
