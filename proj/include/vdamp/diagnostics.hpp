#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "vdamp/error.hpp"
#include "vdamp/integrator.hpp"

namespace vdamp {

enum class Verdict { Pass, Fail, SkippedHypothesis, Inapplicable, NotEvaluated };

std::string_view to_string(Verdict v) noexcept;

/// W = 1/2 ||v||^2 + Phi(x) - min Phi. Values within 1e-12 below zero are clamped to 0.
double energy(const State& s, const PotentialSpec& p);

/// Per-sample diagnostic time series. The anchored fields (h, h', and the
/// integrals involving h) are empty unless built with an anchor.
struct DiagnosticSeries {
    std::vector<double> t;
    std::vector<double> W;
    std::vector<double> t2W;
    std::vector<double> speed2;
    std::vector<double> int_sW;  ///< int_{t0}^t s W(s) ds

    std::optional<Vector> anchor;
    std::vector<double> h;           ///< 1/2 ||x - x*||^2
    std::vector<double> h_prime;     ///< <x', x - x*>
    std::vector<double> int_EQh;     ///< int [(s gamma)']_+ h ds
    std::vector<double> int_hp_pos;  ///< int [h']_+ ds

    std::size_t size() const noexcept { return t.size(); }
    bool anchored() const noexcept { return anchor.has_value(); }
};

/// Integrals of M integrands f(t, x, v) over each output interval [t_i, t_{i+1}].
/// Composite Simpson with `panels` panels on every piece of the interval cut by
/// accepted step boundaries, evaluated through the dense interpolant.
template <std::size_t M, class F>
std::vector<std::array<double, M>> integrate_over_samples(const Trajectory& traj, F&& f, int panels = 4) {
    const DenseOutput& dense = traj.dense;
    if (dense.empty()) {
        throw InvalidInput("trajectory carries no dense output");
    }
    const Eigen::Index m = dense.state_size();
    const Eigen::Index n = m / 2;
    std::vector<std::array<double, M>> out(traj.samples.size() - 1);
    Vector y(m);
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const double a = traj.samples[i].t;
        const double b = traj.samples[i + 1].t;
        std::array<double, M> total{};
        for (std::size_t seg = dense.locate(a); seg < dense.size() && dense.start(seg) < b; ++seg) {
            const double lo = std::max(a, dense.start(seg));
            const double hi = std::min(b, dense.end(seg));
            if (hi > lo) {
                const double hp = (hi - lo) / panels;
                std::array<double, M> piece{};
                for (int j = 0; j <= panels; ++j) {
                    const double tj = j == panels ? hi : lo + j * hp;
                    const double w = (j == 0 || j == panels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
                    dense.evaluate(seg, tj, y);
                    const std::array<double, M> vals = f(tj, y.head(n), y.tail(n));
                    for (std::size_t k = 0; k < M; ++k) {
                        piece[k] += w * vals[k];
                    }
                }
                for (std::size_t k = 0; k < M; ++k) {
                    total[k] += piece[k] * hp / 3.0;
                }
            }
            if (dense.end(seg) >= b) {
                break;
            }
        }
        out[i] = total;
    }
    return out;
}

DiagnosticSeries energy_series(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d);

/// Rejects an anchor with ||grad Phi(anchor)|| > 1e-8.
DiagnosticSeries anchored_series(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d,
                                 const Vector& anchor);

/// Constants of the integrated Lyapunov bound
///   A int sW + B t^2 W + eps h <= C0 + int [(s gamma)']_+ h.
/// C0 includes the boundary term t0 gamma(t0) h(t0) from integrating
/// -s gamma h' by parts; c0_printed omits it.
struct ProofConstants {
    double K = 0.0;
    double epsilon = 0.0;
    double A = 0.0;
    double B = 0.0;
    double C0 = 0.0;
    double c0_printed = 0.0;
};

/// epsilon defaults to (K - 3) / 6.
ProofConstants proof_constants(const DiagnosticSeries& s, const DampingSpec& d, double K,
                               std::optional<double> epsilon = {});

/// max_i (W_{i+1} - W_i) / (1 + W_i); <= 0 for a dissipative trajectory.
double energy_increase(const DiagnosticSeries& s);

/// max_i |W_{i+1} - W_i + int gamma ||x'||^2| / (1 + W_i).
double energy_dissipation_residual(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d);

/// Integrated form of h'' + gamma h' = ||x'||^2 + <grad Phi(x), x* - x>:
/// max_k |h'(t_k) - h'(t0) - int_{t0}^{t_k} rhs| / (1 + |h'(t_k)| + |h'(t0)| + int |rhs|).
double distance_identity_residual(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d,
                                  const Vector& anchor);

struct Margin {
    double min_margin;  ///< min_i (rhs - lhs)
    double min_scaled;  ///< min_i (rhs - lhs) / (1 + W_i)
};

/// W <= 3/2 ||x'||^2 - h'' - gamma h' at every sample, with h'' substituted
/// from the equation of motion.
Margin energy_bound_margin(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d,
                           const Vector& anchor);

/// Integrated form of (t^2 W)' = 2 t W - t^2 gamma ||x'||^2, relative residual as above.
double scaled_energy_identity_residual(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d);

/// min_k of C0 + int_EQh - (A int_sW + B t^2 W + eps h). Throws Unsupported when
/// K <= 3 + 3 eps (hypothesis unmet).
double integrated_bound_margin(const DiagnosticSeries& s, const ProofConstants& c);

struct GronwallCheck {
    double sup_h;
    double bound;  ///< (C0/eps) exp(variation_integral / eps)
    Verdict verdict;
};

GronwallCheck gronwall_bound_check(const DiagnosticSeries& s, const ProofConstants& c, double variation_integral);

struct FubiniCheck {
    double lhs;  ///< int_{t0}^T [h']_+
    double rhs;  ///< (t0 |h'(t0)| + int_{t0}^T tau ||x'||^2) / (K - 1)
    bool pass;
};

FubiniCheck fubini_tail_check(const Trajectory& traj, const DiagnosticSeries& s, const ProofConstants& c);

struct DecayReport {
    std::optional<double> slope;  ///< empty when W vanishes on the window
    double t2W_end = 0.0;
    double t2W_ratio = 0.0;      ///< t^2W(T) / t^2W(T/10)
    double sW_tail_ratio = 0.0;  ///< int_{T/2}^T sW / int_{t0}^{T/2} sW
    double m_estimate = 0.0;     ///< t^2 W(T)
};

/// `window` is the trailing fraction of the log-time span used for the slope fit.
DecayReport decay_report(const DiagnosticSeries& s, double window = 0.25);

struct OpialTolerances {
    double oscillation = 1e-4;  ///< scaled by (1 + ||x*||)
    double phi_gap = 1e-6;
    double displacement = 1e-4;
};

struct OpialResult {
    Vector limit_candidate;
    std::vector<double> oscillation;
    double phi_gap = 0.0;
    double displacement = 0.0;
    bool pass = false;
};

/// Needs >= 2 distinct anchors when argmin is not a singleton, else >= 1.
OpialResult opial_convergence_check(const Trajectory& traj, const PotentialSpec& p, const std::vector<Vector>& anchors,
                                    double window = 0.25, const OpialTolerances& tol = {});

} // namespace vdamp
