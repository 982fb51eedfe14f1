#pragma once

#include <cstddef>
#include <vector>

#include "vdamp/damping.hpp"
#include "vdamp/potential.hpp"

namespace vdamp {

struct State {
    double t = 0.0;
    Vector x;
    Vector v;
};

struct Derivative {
    Vector dx;
    Vector dv;
};

/// dx = v, dv = -gamma(t) v - grad Phi(x).
Derivative rhs(const State& s, const PotentialSpec& p, const DampingSpec& d);

/// Continuous extension of an accepted Dormand-Prince step sequence: one quartic
/// polynomial per step over the stacked state y = [x; v].
class DenseOutput {
public:
    explicit DenseOutput(Eigen::Index state_size = 0) : m_(state_size) {}

    void append(double t, double h, const Vector& r1, const Vector& r2, const Vector& r3, const Vector& r4,
                const Vector& r5);

    std::size_t size() const noexcept { return t_.size(); }
    bool empty() const noexcept { return t_.empty(); }
    Eigen::Index state_size() const noexcept { return m_; }
    double start(std::size_t i) const { return t_[i]; }
    double end(std::size_t i) const { return t_[i] + h_[i]; }
    /// Index of the step containing t (clamped to the covered range).
    std::size_t locate(double t) const;
    void evaluate(std::size_t i, double t, Eigen::Ref<Vector> y) const;
    State evaluate(double t) const;

private:
    Eigen::Index m_;
    std::vector<double> t_;
    std::vector<double> h_;
    std::vector<double> coeffs_;  // 5 * m_ per step
};

struct Trajectory {
    std::vector<State> samples;
    DenseOutput dense;
    long accepted_steps = 0;
    long rejected_steps = 0;
    double rel_tol = 0.0;
    double abs_tol = 0.0;

    Eigen::Index dim() const { return samples.empty() ? 0 : samples.front().x.size(); }
    double t0() const { return samples.front().t; }
    double t_end() const { return samples.back().t; }
};

/// Log-spaced output times on [t0, T] with `points_per_decade` points per decade.
/// T/10 and T/2 are always included when they exceed t0, so decay ratios land on
/// exact samples.
std::vector<double> log_schedule(double t0, double T, int points_per_decade = 200);

struct IntegratorOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    /// Empty means log_schedule(t0, T).
    std::vector<double> output_times;
    /// Cap h <= step_cap_fraction * min(t, 1/gamma(t), 1/sqrt(L)).
    double step_cap_fraction = 0.1;
    long max_steps = 20'000'000;
};

/// Adaptive Dormand-Prince 5(4) with PI step control on [t0, T].
/// Throws IntegrationFailure on step-size underflow or a non-finite state.
Trajectory integrate(const PotentialSpec& p, const DampingSpec& d, const Vector& x0, const Vector& v0, double t0,
                     double T, const IntegratorOptions& opts = {});

/// Classical fixed-step RK4, stepping exactly onto each output time with steps <= h.
/// Rejects requests needing more than max_steps steps.
Trajectory reference_integrate(const PotentialSpec& p, const DampingSpec& d, const Vector& x0, const Vector& v0,
                               double t0, double T, double h, std::vector<double> output_times = {},
                               long max_steps = 200'000'000);

} // namespace vdamp
