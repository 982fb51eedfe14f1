#include "vdamp/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <fmt/format.h>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Hairer's continuous extension of order 4.
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

// PI controller.
constexpr double kSafety = 0.9;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 5.0;
constexpr double kAlpha = 0.17;
constexpr double kBeta = 0.04;

class FirstOrderSystem {
public:
    FirstOrderSystem(const PotentialSpec& p, const DampingSpec& d) : p_(p), d_(d), n_(p.dim()) {}

    // out = [v; -gamma v - grad Phi(x)] for y = [x; v]
    void operator()(double t, const Vector& y, Vector& out) const {
        const double g = d_.gamma(t);
        out.head(n_) = y.tail(n_);
        p_.gradient_into(y.head(n_), out.tail(n_));
        out.tail(n_) = -out.tail(n_) - g * y.tail(n_);
    }

    Eigen::Index n() const { return n_; }

private:
    const PotentialSpec& p_;
    const DampingSpec& d_;
    Eigen::Index n_;
};

State split(double t, const Vector& y, Eigen::Index n) {
    return State{t, y.head(n), y.tail(n)};
}

void check_initial(const PotentialSpec& p, const DampingSpec& d, const Vector& x0, const Vector& v0, double t0,
                   double T) {
    if (x0.size() != p.dim() || v0.size() != p.dim()) {
        throw InvalidInput("initial condition dimension does not match the potential");
    }
    if (!(t0 > 0.0)) {
        throw InvalidInput("t0 must be strictly positive");
    }
    if (!(T > t0)) {
        throw InvalidInput("T must exceed t0");
    }
    if (t0 < d.t0()) {
        throw InvalidInput("t0 precedes the damping's left endpoint");
    }
}

std::vector<double> normalize_schedule(std::vector<double> times, double t0, double T) {
    if (times.empty()) {
        return log_schedule(t0, T);
    }
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t0 || times[i] > T || (i > 0 && !(times[i] > times[i - 1]))) {
            throw InvalidInput("output times must be strictly increasing within [t0, T]");
        }
    }
    if (times.front() != t0) {
        times.insert(times.begin(), t0);
    }
    if (times.back() != T) {
        times.push_back(T);
    }
    return times;
}

double rms_scaled(const Vector& e, const Vector& y0, const Vector& y1, double rel, double abs) {
    const auto sc = abs + rel * y0.cwiseAbs().cwiseMax(y1.cwiseAbs()).array();
    return std::sqrt((e.array() / sc).square().mean());
}

} // namespace

Derivative rhs(const State& s, const PotentialSpec& p, const DampingSpec& d) {
    if (s.x.size() != p.dim() || s.v.size() != p.dim()) {
        throw InvalidInput("rhs: state dimension does not match the potential");
    }
    Derivative out{s.v, p.gradient(s.x)};
    out.dv = -out.dv - d.gamma(s.t) * s.v;
    return out;
}

void DenseOutput::append(double t, double h, const Vector& r1, const Vector& r2, const Vector& r3, const Vector& r4,
                         const Vector& r5) {
    t_.push_back(t);
    h_.push_back(h);
    for (const Vector* r : {&r1, &r2, &r3, &r4, &r5}) {
        coeffs_.insert(coeffs_.end(), r->data(), r->data() + m_);
    }
}

std::size_t DenseOutput::locate(double t) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    const auto idx = static_cast<std::size_t>(it - t_.begin());
    return idx == 0 ? 0 : idx - 1;
}

void DenseOutput::evaluate(std::size_t i, double t, Eigen::Ref<Vector> y) const {
    const double th = (t - t_[i]) / h_[i];
    const double th1 = 1.0 - th;
    const double* base = coeffs_.data() + 5 * m_ * i;
    Eigen::Map<const Vector> r1(base, m_), r2(base + m_, m_), r3(base + 2 * m_, m_), r4(base + 3 * m_, m_),
        r5(base + 4 * m_, m_);
    y = r1 + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5)));
}

State DenseOutput::evaluate(double t) const {
    Vector y(m_);
    evaluate(locate(t), t, y);
    return split(t, y, m_ / 2);
}

std::vector<double> log_schedule(double t0, double T, int points_per_decade) {
    if (!(t0 > 0.0) || !(T > t0) || points_per_decade < 1) {
        throw InvalidInput("log_schedule: need 0 < t0 < T and a positive density");
    }
    const double decades = std::log10(T / t0);
    const auto count = static_cast<long>(std::ceil(decades * points_per_decade - 1e-9));
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(count) + 3);
    for (long k = 0; k < count; ++k) {
        times.push_back(t0 * std::pow(10.0, static_cast<double>(k) / points_per_decade));
    }
    times.push_back(T);
    for (double extra : {T / 10.0, T / 2.0}) {
        if (extra > t0) {
            times.push_back(extra);
        }
    }
    std::sort(times.begin(), times.end());
    // Merge near-duplicates produced by pow() rounding, keeping the exact landmark.
    std::vector<double> merged;
    for (double t : times) {
        if (!merged.empty() && std::abs(t - merged.back()) <= 1e-12 * t) {
            if (t == T || t == T / 10.0 || t == T / 2.0) {
                merged.back() = t;
            }
            continue;
        }
        merged.push_back(t);
    }
    merged.front() = t0;
    return merged;
}

Trajectory integrate(const PotentialSpec& p, const DampingSpec& d, const Vector& x0, const Vector& v0, double t0,
                     double T, const IntegratorOptions& opts) {
    check_initial(p, d, x0, v0, t0, T);
    if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0)) {
        throw InvalidInput("tolerances must be positive");
    }
    const std::vector<double> schedule = normalize_schedule(opts.output_times, t0, T);

    const FirstOrderSystem f(p, d);
    const Eigen::Index n = f.n();
    const Eigen::Index m = 2 * n;
    const double rel = opts.rel_tol;
    const double abs = opts.abs_tol;
    const double inv_sqrt_L = p.lipschitz_bound() > 0.0 ? 1.0 / std::sqrt(p.lipschitz_bound())
                                                        : std::numeric_limits<double>::infinity();
    auto step_cap = [&](double t) {
        const double g = d.gamma(t);
        const double damping_scale = g > 0.0 ? 1.0 / g : std::numeric_limits<double>::infinity();
        return opts.step_cap_fraction * std::min({t, damping_scale, inv_sqrt_L});
    };

    Trajectory traj;
    traj.rel_tol = rel;
    traj.abs_tol = abs;
    traj.dense = DenseOutput(m);
    traj.samples.reserve(schedule.size());

    Vector y(m);
    y << x0, v0;
    traj.samples.push_back(State{t0, x0, v0});
    std::size_t next_sample = 1;

    Vector k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), ytmp(m), ynew(m), err(m), buf(m);
    Vector r2(m), r3(m), r4(m), r5(m);
    f(t0, y, k1);

    // Initial step from the scaled magnitudes of y and y'.
    double h;
    {
        const Vector sc = (abs + rel * y.cwiseAbs().array()).matrix();
        const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
        const double dd1 = std::sqrt((k1.array() / sc.array()).square().mean());
        h = (d0 < 1e-5 || dd1 < 1e-5) ? 1e-6 : 0.01 * d0 / dd1;
        h = std::min({h, step_cap(t0), T - t0});
    }

    double t = t0;
    double err_old = 1e-4;
    bool last_rejected = false;
    long steps = 0;

    while (t < T) {
        if (++steps > opts.max_steps) {
            throw IntegrationFailure(IntegrationFailure::Kind::StepBudget, t,
                                     fmt::format("step budget of {} exhausted at t = {:.17g}", opts.max_steps, t));
        }
        h = std::min(h, step_cap(t));
        bool final_step = false;
        if (t + h >= T) {
            h = T - t;
            final_step = true;
        }
        if (h < 1e-14 * t) {
            throw IntegrationFailure(IntegrationFailure::Kind::StepUnderflow, t,
                                     fmt::format("step size underflow (h = {:.3g}) at t = {:.17g}", h, t));
        }

        ytmp.noalias() = y + h * (a21 * k1);
        f(t + c2 * h, ytmp, k2);
        ytmp.noalias() = y + h * (a31 * k1 + a32 * k2);
        f(t + c3 * h, ytmp, k3);
        ytmp.noalias() = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        f(t + c4 * h, ytmp, k4);
        ytmp.noalias() = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        f(t + c5 * h, ytmp, k5);
        ytmp.noalias() = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        const double t_new = final_step ? T : t + h;
        f(t_new, ytmp, k6);
        ynew.noalias() = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        f(t_new, ynew, k7);
        err.noalias() = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        const double en = rms_scaled(err, y, ynew, rel, abs);
        if (!std::isfinite(en) || !ynew.allFinite()) {
            ++traj.rejected_steps;
            last_rejected = true;
            h *= kMinFactor;
            if (h < 1e-14 * t) {
                throw IntegrationFailure(IntegrationFailure::Kind::Divergence, t,
                                         fmt::format("non-finite state near t = {:.17g}", t));
            }
            continue;
        }

        if (en <= 1.0) {
            // Dense output coefficients for [t, t_new].
            r2 = ynew - y;
            r3 = h * k1 - r2;
            r4 = r2 - h * k7 - r3;
            r5.noalias() = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
            traj.dense.append(t, t_new - t, y, r2, r3, r4, r5);
            const std::size_t seg = traj.dense.size() - 1;

            while (next_sample < schedule.size() && schedule[next_sample] <= t_new) {
                const double ts = schedule[next_sample];
                if (ts == t_new) {
                    traj.samples.push_back(split(ts, ynew, n));
                } else {
                    traj.dense.evaluate(seg, ts, buf);
                    traj.samples.push_back(split(ts, buf, n));
                }
                ++next_sample;
            }

            t = t_new;
            y.swap(ynew);
            k1.swap(k7);
            ++traj.accepted_steps;

            double fac = kSafety * std::pow(std::max(en, 1e-10), -kAlpha) * std::pow(err_old, kBeta);
            fac = std::clamp(fac, kMinFactor, kMaxFactor);
            if (last_rejected) {
                fac = std::min(fac, 1.0);
            }
            err_old = std::max(en, 1e-4);
            last_rejected = false;
            h *= fac;
        } else {
            ++traj.rejected_steps;
            last_rejected = true;
            h *= std::max(kMinFactor, kSafety * std::pow(en, -0.2));
        }
    }
    return traj;
}

Trajectory reference_integrate(const PotentialSpec& p, const DampingSpec& d, const Vector& x0, const Vector& v0,
                               double t0, double T, double h, std::vector<double> output_times, long max_steps) {
    check_initial(p, d, x0, v0, t0, T);
    if (!(h > 0.0)) {
        throw InvalidInput("reference_integrate: h must be positive");
    }
    const std::vector<double> schedule = normalize_schedule(std::move(output_times), t0, T);

    std::vector<long> counts(schedule.size(), 0);
    double total = 0.0;
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        const double steps = std::ceil((schedule[i] - schedule[i - 1]) / h - 1e-9);
        counts[i] = static_cast<long>(std::max(1.0, steps));
        total += static_cast<double>(counts[i]);
    }
    if (total > static_cast<double>(max_steps)) {
        throw InvalidInput(fmt::format("reference_integrate: {:.0f} steps exceed the budget of {}", total, max_steps));
    }

    const FirstOrderSystem f(p, d);
    const Eigen::Index n = f.n();
    const Eigen::Index m = 2 * n;

    Trajectory traj;
    traj.samples.reserve(schedule.size());
    traj.samples.push_back(State{t0, x0, v0});

    Vector y(m), k1(m), k2(m), k3(m), k4(m), tmp(m), inc(m);
    y << x0, v0;
    // Compensated (Kahan) accumulation keeps rounding well below the O(h^4)
    // truncation error even over millions of steps.
    Vector carry = Vector::Zero(m);
    for (std::size_t i = 1; i < schedule.size(); ++i) {
        const double a = schedule[i - 1];
        const double b = schedule[i];
        const long steps = counts[i];
        const double hs = (b - a) / static_cast<double>(steps);
        for (long k = 0; k < steps; ++k) {
            const double t = a + static_cast<double>(k) * hs;
            const double tn = (k + 1 == steps) ? b : a + static_cast<double>(k + 1) * hs;
            const double tm = t + 0.5 * hs;
            f(t, y, k1);
            tmp.noalias() = y + (0.5 * hs) * k1;
            f(tm, tmp, k2);
            tmp.noalias() = y + (0.5 * hs) * k2;
            f(tm, tmp, k3);
            tmp.noalias() = y + hs * k3;
            f(tn, tmp, k4);
            inc.noalias() = (hs / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4) - carry;
            tmp.noalias() = y + inc;
            carry.noalias() = (tmp - y) - inc;
            y.swap(tmp);
        }
        if (!y.allFinite()) {
            throw IntegrationFailure(IntegrationFailure::Kind::Divergence, b,
                                     fmt::format("reference integration diverged before t = {:.17g}", b));
        }
        traj.samples.push_back(split(b, y, n));
        traj.accepted_steps += steps;
    }
    return traj;
}

} // namespace vdamp
