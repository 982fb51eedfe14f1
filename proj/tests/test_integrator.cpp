#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "vdamp/diagnostics.hpp"
#include "vdamp/error.hpp"
#include "vdamp/integrator.hpp"

using namespace vdamp;
using namespace vdamp::testing;

namespace {

const PotentialSpec q1 = PotentialSpec::quadratic(mat({{1.0}}), vec({0.0}));
const PotentialSpec q2 = PotentialSpec::quadratic(mat({{1.0, 0.0}, {0.0, 1.0}}), vec({0.0, 0.0}));
const PotentialSpec flat = PotentialSpec::zero(1);
const DampingSpec over4 = DampingSpec::over_t(4.0, 1.0);

// Free flow with K = 4, x(1) = v(1) = 1: x' = t^-4.
double free_x(double t) { return 1.0 + (1.0 - std::pow(t, -3.0)) / 3.0; }

} // namespace

TEST_CASE("right-hand side") {
    const Derivative a = rhs(State{2.0, vec({1.0}), vec({0.0})}, q1, over4);
    CHECK(a.dx[0] == 0.0);
    CHECK(a.dv[0] == -1.0);

    const Derivative b = rhs(State{1.0, vec({0.0}), vec({1.0})}, flat, over4);
    CHECK(b.dx[0] == 1.0);
    CHECK(b.dv[0] == -4.0);

    for (const PotentialSpec& p : catalog()) {
        const Derivative c = rhs(State{3.0, *p.argmin_witness(), Vector::Zero(p.dim())}, p, over4);
        CHECK(c.dx.isZero(0.0));
        CHECK(c.dv.norm() <= 1e-9);
    }
}

TEST_CASE("log schedule") {
    const std::vector<double> s = log_schedule(1.0, 1e4, 200);
    CHECK(s.front() == 1.0);
    CHECK(s.back() == 1e4);
    CHECK(std::find(s.begin(), s.end(), 1e3) != s.end());
    CHECK(std::find(s.begin(), s.end(), 5e3) != s.end());
    CHECK(std::is_sorted(s.begin(), s.end()));
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.size() >= 801);
}

TEST_CASE("stationary solution stays at the minimizer") {
    const Trajectory tr = integrate(q2, over4, vec({0.0, 0.0}), vec({0.0, 0.0}), 1.0, 1e3);
    for (const State& s : tr.samples) {
        CHECK(s.x.norm() <= 1e-9);
    }
    const Trajectory ref = reference_integrate(q2, over4, vec({0.0, 0.0}), vec({0.0, 0.0}), 1.0, 10.0, 1e-3);
    for (const State& s : ref.samples) {
        CHECK(s.x.norm() == 0.0);
        CHECK(s.v.norm() == 0.0);
    }
}

TEST_CASE("free flow against the closed form") {
    const Trajectory tr = integrate(flat, over4, vec({1.0}), vec({1.0}), 1.0, 1e3);
    double err = 0.0;
    for (const State& s : tr.samples) {
        err = std::max(err, std::abs(s.x[0] - free_x(s.t)));
    }
    CHECK(err <= 1e-8);
    CHECK(tr.samples.back().t == 1e3);
    CHECK(tr.samples.back().x[0] == doctest::Approx(1.333333).epsilon(1e-6));

    // The dense interpolant is accurate between samples too.
    for (double t : {1.01, 1.5, 7.3, 123.4}) {
        CHECK(std::abs(tr.dense.evaluate(t).x[0] - free_x(t)) <= 1e-8);
    }
}

TEST_CASE("reference integrator on the closed form") {
    const Trajectory tr = reference_integrate(flat, over4, vec({1.0}), vec({1.0}), 1.0, 10.0, 1e-4);
    double err = 0.0;
    for (const State& s : tr.samples) {
        err = std::max(err, std::abs(s.x[0] - free_x(s.t)));
    }
    CHECK(err <= 1e-10);
}

TEST_CASE("reference integrator is fourth order") {
    std::vector<double> grid;
    for (int k = 1; k <= 100; ++k) {
        grid.push_back(k);
    }
    const auto err = [&](double h) {
        const Trajectory tr = reference_integrate(flat, over4, vec({1.0}), vec({1.0}), 1.0, 100.0, h, grid);
        double e = 0.0;
        for (const State& s : tr.samples) {
            e = std::max(e, std::abs(s.x[0] - free_x(s.t)));
        }
        return e;
    };
    const double factor = err(1e-3) / err(5e-4);
    CAPTURE(factor);
    CHECK(std::abs(factor / 16.0 - 1.0) <= 0.2);
}

TEST_CASE("adaptive run agrees with the fixed-step reference") {
    const std::vector<double> times = log_schedule(1.0, 100.0);
    IntegratorOptions o;
    o.output_times = times;
    const Trajectory a = integrate(q1, over4, vec({1.0}), vec({0.0}), 1.0, 100.0, o);
    const Trajectory b = reference_integrate(q1, over4, vec({1.0}), vec({0.0}), 1.0, 100.0, 1e-5, times);
    REQUIRE(a.samples.size() == b.samples.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].t == b.samples[i].t);
        worst = std::max({worst, (a.samples[i].x - b.samples[i].x).lpNorm<Eigen::Infinity>(),
                          (a.samples[i].v - b.samples[i].v).lpNorm<Eigen::Infinity>()});
    }
    CHECK(worst <= 1e-7);
}

TEST_CASE("adaptive vs reference scales with rel_tol on the catalog") {
    const std::vector<double> times = log_schedule(1.0, 100.0, 20);
    Points pts(9);
    for (const PotentialSpec& p : catalog()) {
        CAPTURE(p.kind_name());
        const Vector x0 = pts.draw(p.dim());
        const Vector v0 = pts.draw(p.dim());
        IntegratorOptions o;
        o.output_times = times;
        const Trajectory a = integrate(p, over4, x0, v0, 1.0, 100.0, o);
        const Trajectory b = reference_integrate(p, over4, x0, v0, 1.0, 100.0, 2e-4, times);
        for (std::size_t i = 0; i < a.samples.size(); ++i) {
            const double e = (a.samples[i].x - b.samples[i].x).lpNorm<Eigen::Infinity>();
            CHECK(e <= 10.0 * o.rel_tol * (1.0 + b.samples[i].x.norm()));
        }
    }
}

TEST_CASE("energy is non-increasing on random catalog trajectories") {
    Points pts(31);
    for (const PotentialSpec& p : catalog()) {
        for (double K : {3.5, 4.0, 10.0}) {
            const DampingSpec d = DampingSpec::over_t(K, 1.0);
            IntegratorOptions o;
            o.output_times = log_schedule(1.0, 1e3, 50);
            const Trajectory tr = integrate(p, d, pts.draw(p.dim()), pts.draw(p.dim()), 1.0, 1e3, o);
            double prev = energy(tr.samples.front(), p);
            for (const State& s : tr.samples) {
                const double W = energy(s, p);
                CHECK(W >= 0.0);
                CHECK(W - prev <= 1e-12 * (1.0 + prev));
                prev = W;
            }
        }
    }
}

TEST_CASE("first sample is the initial condition and samples land on the schedule") {
    IntegratorOptions o;
    o.output_times = {1.0, 1.5, 2.0, 10.0};
    const Trajectory tr = integrate(q1, over4, vec({0.3}), vec({-0.2}), 1.0, 10.0, o);
    REQUIRE(tr.samples.size() == 4);
    CHECK(tr.samples[0].x[0] == 0.3);
    CHECK(tr.samples[0].v[0] == -0.2);
    CHECK(tr.samples[1].t == 1.5);
    CHECK(tr.samples[3].t == 10.0);
}

TEST_CASE("invalid requests") {
    CHECK_THROWS_AS(integrate(q1, over4, vec({0.0, 1.0}), vec({0.0}), 1.0, 10.0), InvalidInput);
    CHECK_THROWS_AS(integrate(q1, over4, vec({0.0}), vec({0.0}), 1.0, 0.5), InvalidInput);
    CHECK_THROWS_AS(integrate(q1, over4, vec({0.0}), vec({0.0}), 0.5, 10.0), InvalidInput);
    CHECK_THROWS_AS(reference_integrate(q1, over4, vec({0.0}), vec({0.0}), 1.0, 10.0, 0.0), InvalidInput);
    CHECK_THROWS_AS(reference_integrate(q1, over4, vec({0.0}), vec({0.0}), 1.0, 1e3, 1e-6, {}, 1000), InvalidInput);
}

TEST_CASE("step budget exhaustion is reported as an integration failure") {
    IntegratorOptions o;
    o.max_steps = 50;
    try {
        integrate(q1, over4, vec({1.0}), vec({0.0}), 1.0, 1e3, o);
        FAIL("expected IntegrationFailure");
    } catch (const IntegrationFailure& e) {
        CHECK(e.kind() == IntegrationFailure::Kind::StepBudget);
        CHECK(e.t() > 1.0);
    }
}
