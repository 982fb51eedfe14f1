#include "vdamp/diagnostics.hpp"

#include <cmath>
#include <limits>

namespace vdamp {

namespace {

// Indices of samples whose log t lies in the trailing `window` of the log span.
std::size_t window_start(const std::vector<double>& t, double window) {
    if (!(window > 0.0 && window <= 1.0)) {
        throw InvalidInput("window must lie in (0, 1]");
    }
    const double lo = std::log(t.back()) - window * (std::log(t.back()) - std::log(t.front()));
    std::size_t i = 0;
    while (i < t.size() && std::log(t[i]) < lo - 1e-12) {
        ++i;
    }
    return i;
}

// Linear interpolation; exact at sample times.
double value_at(const std::vector<double>& t, const std::vector<double>& y, double at) {
    const auto it = std::lower_bound(t.begin(), t.end(), at);
    if (it == t.end()) {
        return y.back();
    }
    const auto i = static_cast<std::size_t>(it - t.begin());
    if (*it == at || i == 0) {
        return y[i];
    }
    const double w = (at - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - w) * y[i - 1] + w * y[i];
}

void check_anchor(const PotentialSpec& p, const Vector& anchor) {
    if (anchor.size() != p.dim()) {
        throw InvalidInput("anchor dimension does not match the potential");
    }
    const double g = p.gradient(anchor).norm();
    if (!(g <= 1e-8)) {
        throw InvalidInput("rejected anchor: ||grad Phi(anchor)|| = " + std::to_string(g) + " > 1e-8");
    }
}

double ratio_or_zero(double num, double den) {
    if (den == 0.0) {
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return num / den;
}

} // namespace

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
    case Verdict::Pass:
        return "pass";
    case Verdict::Fail:
        return "fail";
    case Verdict::SkippedHypothesis:
        return "skipped(hypothesis unmet)";
    case Verdict::Inapplicable:
        return "inapplicable";
    case Verdict::NotEvaluated:
        return "not evaluated";
    }
    return "unknown";
}

double energy(const State& s, const PotentialSpec& p) {
    const double W = 0.5 * s.v.squaredNorm() + p.excess(s.x);
    return (W < 0.0 && W >= -1e-12) ? 0.0 : W;
}

DiagnosticSeries energy_series(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d) {
    (void)d;
    DiagnosticSeries s;
    const std::size_t N = traj.samples.size();
    s.t.reserve(N);
    s.W.reserve(N);
    s.t2W.reserve(N);
    s.speed2.reserve(N);
    for (const State& st : traj.samples) {
        const double W = energy(st, p);
        s.t.push_back(st.t);
        s.W.push_back(W);
        s.t2W.push_back(st.t * st.t * W);
        s.speed2.push_back(st.v.squaredNorm());
    }
    const auto pieces = integrate_over_samples<1>(
        traj, [&](double t, const auto& x, const auto& v) -> std::array<double, 1> {
            return {t * (0.5 * v.squaredNorm() + p.excess(x))};
        });
    s.int_sW.assign(N, 0.0);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        s.int_sW[i + 1] = s.int_sW[i] + pieces[i][0];
    }
    return s;
}

DiagnosticSeries anchored_series(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d,
                                 const Vector& anchor) {
    check_anchor(p, anchor);
    DiagnosticSeries s = energy_series(traj, p, d);
    s.anchor = anchor;
    const std::size_t N = traj.samples.size();
    s.h.reserve(N);
    s.h_prime.reserve(N);
    for (const State& st : traj.samples) {
        const Vector r = st.x - anchor;
        s.h.push_back(0.5 * r.squaredNorm());
        s.h_prime.push_back(st.v.dot(r));
    }
    const auto pieces = integrate_over_samples<2>(
        traj, [&](double t, const auto& x, const auto& v) -> std::array<double, 2> {
            const Vector r = x - anchor;
            return {d.t_gamma_prime_pos(t) * 0.5 * r.squaredNorm(), std::max(v.dot(r), 0.0)};
        });
    s.int_EQh.assign(N, 0.0);
    s.int_hp_pos.assign(N, 0.0);
    for (std::size_t i = 0; i + 1 < N; ++i) {
        s.int_EQh[i + 1] = s.int_EQh[i] + pieces[i][0];
        s.int_hp_pos[i + 1] = s.int_hp_pos[i] + pieces[i][1];
    }
    return s;
}

ProofConstants proof_constants(const DiagnosticSeries& s, const DampingSpec& d, double K,
                               std::optional<double> epsilon) {
    if (!s.anchored()) {
        throw InvalidInput("proof constants need an anchored series");
    }
    ProofConstants c;
    c.K = K;
    c.epsilon = epsilon.value_or((K - 3.0) / 6.0);
    c.A = 1.0 - 3.0 / K;
    c.B = 3.0 / (2.0 * K) - 1.0 / (K - 1.0 - c.epsilon);
    const double t0 = s.t.front();
    const double tail = 3.0 / (2.0 * K) * t0 * t0 * s.W.front() + t0 * s.h_prime.front();
    c.c0_printed = tail - s.h.front();
    c.C0 = tail + (t0 * d.gamma(t0) - 1.0) * s.h.front();
    return c;
}

double energy_increase(const DiagnosticSeries& s) {
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        worst = std::max(worst, (s.W[i + 1] - s.W[i]) / (1.0 + s.W[i]));
    }
    return s.size() < 2 ? 0.0 : worst;
}

double energy_dissipation_residual(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d) {
    const auto pieces = integrate_over_samples<1>(
        traj, [&](double t, const auto&, const auto& v) -> std::array<double, 1> {
            return {d.gamma(t) * v.squaredNorm()};
        });
    double worst = 0.0;
    double W_prev = energy(traj.samples.front(), p);
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        const double W_next = energy(traj.samples[i + 1], p);
        worst = std::max(worst, std::abs(W_next - W_prev + pieces[i][0]) / (1.0 + W_prev));
        W_prev = W_next;
    }
    return worst;
}

double distance_identity_residual(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d,
                                  const Vector& anchor) {
    check_anchor(p, anchor);
    Vector g(p.dim());
    const auto pieces = integrate_over_samples<2>(
        traj, [&](double t, const auto& x, const auto& v) -> std::array<double, 2> {
            const Vector r = x - anchor;
            p.gradient_into(x, g);
            const double f = v.squaredNorm() - g.dot(r) - d.gamma(t) * v.dot(r);
            return {f, std::abs(f)};
        });
    const auto hprime = [&](const State& st) { return st.v.dot(st.x - anchor); };
    const double hp0 = hprime(traj.samples.front());
    double integral = 0.0;
    double magnitude = 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        integral += pieces[i][0];
        magnitude += pieces[i][1];
        const double hp = hprime(traj.samples[i + 1]);
        const double scale = 1.0 + std::abs(hp) + std::abs(hp0) + magnitude;
        worst = std::max(worst, std::abs(hp - hp0 - integral) / scale);
    }
    return worst;
}

Margin energy_bound_margin(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d,
                           const Vector& anchor) {
    check_anchor(p, anchor);
    Margin m{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (const State& st : traj.samples) {
        const Vector r = st.x - anchor;
        const Vector g = p.gradient(st.x);
        const double gamma = d.gamma(st.t);
        const double speed2 = st.v.squaredNorm();
        const double hp = st.v.dot(r);
        // x'' = -gamma x' - grad Phi(x)
        const double hpp = speed2 + (-gamma * st.v - g).dot(r);
        const double W = energy(st, p);
        const double margin = 1.5 * speed2 - hpp - gamma * hp - W;
        m.min_margin = std::min(m.min_margin, margin);
        m.min_scaled = std::min(m.min_scaled, margin / (1.0 + W));
    }
    return m;
}

double scaled_energy_identity_residual(const Trajectory& traj, const PotentialSpec& p, const DampingSpec& d) {
    const auto pieces = integrate_over_samples<2>(
        traj, [&](double t, const auto& x, const auto& v) -> std::array<double, 2> {
            const double speed2 = v.squaredNorm();
            const double W = 0.5 * speed2 + p.excess(x);
            const double f = 2.0 * t * W - t * t * d.gamma(t) * speed2;
            return {f, std::abs(f)};
        });
    const auto t2W = [&](const State& st) { return st.t * st.t * energy(st, p); };
    const double base = t2W(traj.samples.front());
    double integral = 0.0;
    double magnitude = 0.0;
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
        integral += pieces[i][0];
        magnitude += pieces[i][1];
        const double now = t2W(traj.samples[i + 1]);
        const double scale = 1.0 + std::abs(now) + std::abs(base) + magnitude;
        worst = std::max(worst, std::abs(now - base - integral) / scale);
    }
    return worst;
}

double integrated_bound_margin(const DiagnosticSeries& s, const ProofConstants& c) {
    if (!s.anchored()) {
        throw InvalidInput("integrated bound needs an anchored series");
    }
    if (!(c.K > 3.0 + 3.0 * c.epsilon) || !(c.epsilon > 0.0)) {
        throw Unsupported("hypothesis unmet: need K > 3 + 3 eps with eps > 0");
    }
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double lhs = c.A * s.int_sW[k] + c.B * s.t2W[k] + c.epsilon * s.h[k];
        const double rhs = c.C0 + s.int_EQh[k];
        worst = std::min(worst, rhs - lhs);
    }
    return worst;
}

GronwallCheck gronwall_bound_check(const DiagnosticSeries& s, const ProofConstants& c, double variation_integral) {
    if (!s.anchored()) {
        throw InvalidInput("Gronwall check needs an anchored series");
    }
    GronwallCheck g{};
    g.sup_h = *std::max_element(s.h.begin(), s.h.end());
    g.bound = c.C0 / c.epsilon * std::exp(variation_integral / c.epsilon);
    if (!(c.epsilon > 0.0) || !std::isfinite(variation_integral)) {
        g.verdict = Verdict::SkippedHypothesis;
    } else if (c.C0 < 0.0) {
        g.verdict = Verdict::Inapplicable;
    } else {
        g.verdict = g.sup_h <= g.bound * (1.0 + 1e-6) ? Verdict::Pass : Verdict::Fail;
    }
    return g;
}

FubiniCheck fubini_tail_check(const Trajectory& traj, const DiagnosticSeries& s, const ProofConstants& c) {
    if (!s.anchored()) {
        throw InvalidInput("Fubini check needs an anchored series");
    }
    if (!(c.K > 1.0)) {
        throw Unsupported("hypothesis unmet: Fubini tail bound needs K > 1");
    }
    const auto pieces = integrate_over_samples<1>(
        traj, [](double t, const auto&, const auto& v) -> std::array<double, 1> { return {t * v.squaredNorm()}; });
    double weighted_speed = 0.0;
    for (const auto& piece : pieces) {
        weighted_speed += piece[0];
    }
    FubiniCheck f{};
    f.lhs = s.int_hp_pos.back();
    f.rhs = (s.t.front() * std::abs(s.h_prime.front()) + weighted_speed) / (c.K - 1.0);
    f.pass = f.lhs <= f.rhs * (1.0 + 1e-6);
    return f;
}

DecayReport decay_report(const DiagnosticSeries& s, double window) {
    if (s.size() < 2 || std::log10(s.t.back() / s.t.front()) < 2.0 - 1e-9) {
        throw InvalidInput("decay report needs a series spanning at least two decades");
    }
    const std::size_t first = window_start(s.t, window);
    if (s.size() - first < 5) {
        throw InvalidInput("decay window holds fewer than 5 samples");
    }

    DecayReport r;
    // Least-squares slope of log W against log t over samples with W > 0.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t count = 0;
    for (std::size_t i = first; i < s.size(); ++i) {
        if (s.W[i] > 0.0) {
            const double lx = std::log(s.t[i]);
            const double ly = std::log(s.W[i]);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++count;
        }
    }
    if (count >= 2) {
        const double nn = static_cast<double>(count);
        r.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
    }

    const double T = s.t.back();
    r.t2W_end = s.t2W.back();
    r.m_estimate = r.t2W_end;
    r.t2W_ratio = ratio_or_zero(r.t2W_end, value_at(s.t, s.t2W, T / 10.0));
    const double head = value_at(s.t, s.int_sW, T / 2.0);
    r.sW_tail_ratio = ratio_or_zero(s.int_sW.back() - head, head);
    return r;
}

OpialResult opial_convergence_check(const Trajectory& traj, const PotentialSpec& p, const std::vector<Vector>& anchors,
                                    double window, const OpialTolerances& tol) {
    const auto& aff = p.argmin_affine();
    const bool singleton = aff && aff->basis.cols() == 0;
    std::size_t distinct = 0;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        bool fresh = true;
        for (std::size_t j = 0; j < i; ++j) {
            fresh = fresh && (anchors[i] - anchors[j]).norm() > 1e-12;
        }
        distinct += fresh ? 1 : 0;
    }
    if (distinct < (singleton ? 1u : 2u)) {
        throw InvalidInput("opial check needs >= 2 distinct anchors for a non-singleton argmin (>= 1 otherwise)");
    }
    for (const Vector& a : anchors) {
        if (distance_to_argmin(p, a) > 1e-8 * (1.0 + a.norm())) {
            throw InvalidInput("opial anchor is not a minimizer");
        }
    }

    std::vector<double> times;
    times.reserve(traj.samples.size());
    for (const State& st : traj.samples) {
        times.push_back(st.t);
    }
    const std::size_t first = window_start(times, window);

    OpialResult r;
    const State& last = traj.samples.back();
    r.limit_candidate = last.x;
    r.pass = true;
    for (const Vector& a : anchors) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (std::size_t i = first; i < traj.samples.size(); ++i) {
            const double dist = (traj.samples[i].x - a).norm();
            lo = std::min(lo, dist);
            hi = std::max(hi, dist);
        }
        const double osc = hi - lo;
        r.oscillation.push_back(osc);
        r.pass = r.pass && osc <= tol.oscillation * (1.0 + a.norm());
    }
    r.phi_gap = p.excess(last.x);
    const Vector mid = traj.dense.empty() ? traj.samples[traj.samples.size() / 2].x
                                          : traj.dense.evaluate(last.t / 2.0).x;
    r.displacement = (last.x - mid).norm();
    r.pass = r.pass && r.phi_gap <= tol.phi_gap && r.displacement <= tol.displacement;
    return r;
}

} // namespace vdamp
