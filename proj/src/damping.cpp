#include "vdamp/damping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw InvalidInput(msg);
    }
}

using GK = boost::math::quadrature::gauss_kronrod<double, 61>;

// Knot segment index i with t[i] <= t < t[i+1]; returns n-1 past the last knot.
std::size_t segment_of(const Tabulated& tab, double t) {
    const auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
    const auto idx = static_cast<std::size_t>(it - tab.t.begin());
    return idx == 0 ? 0 : idx - 1;
}

double slope_of(const Tabulated& tab, std::size_t i) {
    return (tab.gamma[i + 1] - tab.gamma[i]) / (tab.t[i + 1] - tab.t[i]);
}

// int_a^b max(alpha + beta t, 0) dt
double positive_linear_integral(double alpha, double beta, double a, double b) {
    const double fa = alpha + beta * a;
    const double fb = alpha + beta * b;
    if (fa >= 0.0 && fb >= 0.0) {
        return 0.5 * (fa + fb) * (b - a);
    }
    if (fa <= 0.0 && fb <= 0.0) {
        return 0.0;
    }
    const double r = -alpha / beta;
    return fa > 0.0 ? 0.5 * fa * (r - a) : 0.5 * fb * (b - r);
}

AdmissibilityCertificate certify_tabulated(const Tabulated& tab, double t0) {
    AdmissibilityCertificate c;
    c.method = CertificateMethod::PiecewiseExact;
    c.tail_unknown = true;

    const std::size_t n = tab.t.size();
    const double tail_level = tab.t[n - 1] * tab.gamma[n - 1];
    double kinf = tail_level;
    double integral = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double a = std::max(tab.t[i], t0);
        const double b = tab.t[i + 1];
        if (a >= b) {
            continue;
        }
        const double s = slope_of(tab, i);
        const double gi = tab.gamma[i];
        const double ti = tab.t[i];
        // t gamma(t) = t (gi + s (t - ti)); its derivative gi + s (2t - ti) is linear.
        auto q = [&](double t) { return t * (gi + s * (t - ti)); };
        kinf = std::min({kinf, q(a), q(b)});
        if (s > 0.0) {
            const double vertex = 0.5 * (ti - gi / s);
            if (vertex > a && vertex < b) {
                kinf = std::min(kinf, q(vertex));
            }
        }
        integral += positive_linear_integral(gi - s * ti, 2.0 * s, a, b);
    }
    c.k_inf = kinf;
    c.positive_variation_integral = integral;
    return c;
}

} // namespace

DampingSpec DampingSpec::over_t(double K, double t0) {
    require(K > 0.0 && std::isfinite(K), "over_t: K must be positive");
    require(t0 > 0.0 && std::isfinite(t0), "over_t: t0 must be positive");
    return DampingSpec(OverT{K}, t0);
}

DampingSpec DampingSpec::shifted(double K, double a, double t0) {
    require(K > 0.0 && std::isfinite(K), "shifted: K must be positive");
    require(std::isfinite(a), "shifted: a must be finite");
    require(t0 > 0.0 && t0 > -a, "shifted: need t0 > 0 and t0 > -a");
    return DampingSpec(Shifted{K, a}, t0);
}

DampingSpec DampingSpec::power_law(double K, double alpha, double t0) {
    require(K > 0.0 && std::isfinite(K), "power_law: K must be positive");
    require(alpha >= 0.0 && alpha < 1.0, "power_law: alpha must lie in [0, 1)");
    require(t0 > 0.0 && std::isfinite(t0), "power_law: t0 must be positive");
    return DampingSpec(PowerLaw{K, alpha}, t0);
}

DampingSpec DampingSpec::tabulated(std::vector<double> t, std::vector<double> gamma, double t0) {
    require(t.size() >= 2 && t.size() == gamma.size(), "tabulated: need at least two (t, gamma) knots");
    for (std::size_t i = 0; i < t.size(); ++i) {
        require(std::isfinite(t[i]) && std::isfinite(gamma[i]), "tabulated: non-finite knot");
        require(gamma[i] > 0.0, "tabulated: gamma must be positive at every knot");
        if (i > 0) {
            require(t[i] > t[i - 1], "tabulated: knot times must be strictly increasing");
        }
    }
    require(t.front() > 0.0, "tabulated: knot times must be positive");
    if (t0 == 0.0) {
        t0 = t.front();
    }
    require(t0 >= t.front(), "tabulated: t0 precedes the first knot");
    return DampingSpec(Tabulated{std::move(t), std::move(gamma)}, t0);
}

std::string_view DampingSpec::kind_name() const noexcept {
    return std::visit(overloaded{
                          [](const OverT&) { return std::string_view("over_t"); },
                          [](const Shifted&) { return std::string_view("shifted"); },
                          [](const PowerLaw&) { return std::string_view("power_law"); },
                          [](const Tabulated&) { return std::string_view("tabulated"); },
                      },
                      kind_);
}

DampingSpec DampingSpec::with_K(double K) const {
    return std::visit(overloaded{
                          [&](const OverT&) { return over_t(K, t0_); },
                          [&](const Shifted& s) { return shifted(K, s.a, t0_); },
                          [&](const PowerLaw& p) { return power_law(K, p.alpha, t0_); },
                          [](const Tabulated&) -> DampingSpec {
                              throw InvalidInput("tabulated damping has no K parameter");
                          },
                      },
                      kind_);
}

DampingSpec DampingSpec::with_t0(double t0) const {
    return std::visit(overloaded{
                          [&](const OverT& o) { return over_t(o.K, t0); },
                          [&](const Shifted& s) { return shifted(s.K, s.a, t0); },
                          [&](const PowerLaw& p) { return power_law(p.K, p.alpha, t0); },
                          [&](const Tabulated& tab) { return tabulated(tab.t, tab.gamma, t0); },
                      },
                      kind_);
}

void DampingSpec::require_domain(double t) const {
    if (!(t >= t0_)) {
        throw InvalidInput("damping evaluated at t = " + std::to_string(t) + " < t0 = " + std::to_string(t0_));
    }
}

double DampingSpec::gamma_at(double t) const noexcept {
    return std::visit(overloaded{
                          [&](const OverT& o) { return o.K / t; },
                          [&](const Shifted& s) { return s.K / (s.a + t); },
                          [&](const PowerLaw& p) { return p.K * std::pow(t, -p.alpha); },
                          [&](const Tabulated& tab) {
                              const std::size_t n = tab.t.size();
                              if (t >= tab.t[n - 1]) {
                                  return tab.t[n - 1] * tab.gamma[n - 1] / t;
                              }
                              const std::size_t i = segment_of(tab, t);
                              return tab.gamma[i] + slope_of(tab, i) * (t - tab.t[i]);
                          },
                      },
                      kind_);
}

double DampingSpec::gamma(double t) const {
    require_domain(t);
    return gamma_at(t);
}

double DampingSpec::t_gamma(double t) const {
    require_domain(t);
    return t * gamma_at(t);
}

double DampingSpec::t_gamma_prime(double t) const {
    require_domain(t);
    return std::visit(overloaded{
                          [](const OverT&) { return 0.0; },
                          [&](const Shifted& s) { return s.K * s.a / ((s.a + t) * (s.a + t)); },
                          [&](const PowerLaw& p) { return p.K * (1.0 - p.alpha) * std::pow(t, -p.alpha); },
                          [&](const Tabulated& tab) {
                              const std::size_t n = tab.t.size();
                              if (t >= tab.t[n - 1]) {
                                  return 0.0;
                              }
                              const std::size_t i = segment_of(tab, t);
                              const double s = slope_of(tab, i);
                              return tab.gamma[i] + s * (2.0 * t - tab.t[i]);
                          },
                      },
                      kind_);
}

double DampingSpec::t_gamma_prime_pos(double t) const {
    return std::max(t_gamma_prime(t), 0.0);
}

double DampingSpec::big_gamma(double s, double t) const {
    require_domain(s);
    require(s <= t, "big_gamma: need s <= t");
    return std::visit(overloaded{
                          [&](const OverT& o) { return o.K * std::log(t / s); },
                          [&](const Shifted& sh) { return sh.K * std::log((sh.a + t) / (sh.a + s)); },
                          [&](const PowerLaw& p) {
                              const double e = 1.0 - p.alpha;
                              return p.K * (std::pow(t, e) - std::pow(s, e)) / e;
                          },
                          [&](const Tabulated& tab) {
                              // Exact integral of the piecewise-linear interpolant plus the K/t tail.
                              const std::size_t n = tab.t.size();
                              const double t_last = tab.t[n - 1];
                              double acc = 0.0;
                              for (std::size_t i = segment_of(tab, s); i + 1 < n; ++i) {
                                  const double a = std::max(s, tab.t[i]);
                                  const double b = std::min(t, tab.t[i + 1]);
                                  if (a >= b) {
                                      if (tab.t[i] >= t) {
                                          break;
                                      }
                                      continue;
                                  }
                                  acc += 0.5 * (gamma_at(a) + gamma_at(b)) * (b - a);
                              }
                              if (t > t_last) {
                                  acc += t_last * tab.gamma[n - 1] * std::log(t / std::max(s, t_last));
                              }
                              return acc;
                          },
                      },
                      kind_);
}

std::string_view to_string(CertificateMethod m) noexcept {
    switch (m) {
    case CertificateMethod::ClosedForm:
        return "closed_form";
    case CertificateMethod::QuadratureTailBound:
        return "quadrature+tail_bound";
    case CertificateMethod::PiecewiseExact:
        return "piecewise_exact";
    }
    return "unknown";
}

AdmissibilityCertificate certify(const DampingSpec& d) {
    const double t0 = d.t0();
    AdmissibilityCertificate c = std::visit(
        overloaded{
            [](const OverT& o) {
                AdmissibilityCertificate r;
                r.k_inf = o.K;
                r.positive_variation_integral = 0.0;
                return r;
            },
            [&](const Shifted& s) {
                // t gamma = K t / (a + t) is increasing for a > 0 (inf at t0) and
                // decreasing to K for a <= 0, where (t gamma)' <= 0 everywhere.
                AdmissibilityCertificate r;
                if (s.a > 0.0) {
                    r.k_inf = s.K * t0 / (s.a + t0);
                    r.positive_variation_integral = s.K * s.a / (s.a + t0);
                } else {
                    r.k_inf = s.K;
                    r.positive_variation_integral = 0.0;
                }
                return r;
            },
            [&](const PowerLaw& p) {
                AdmissibilityCertificate r;
                r.method = CertificateMethod::QuadratureTailBound;
                const double e = 1.0 - p.alpha;
                r.k_inf = p.K * std::pow(t0, e);
                // The analytic partial integral K (T^e - t0^e) is a lower bound that
                // grows without limit; quadrature over growing horizons confirms it.
                auto integrand = [&](double u) {
                    const double t = t0 * std::exp(u);
                    return p.K * e * std::pow(t, -p.alpha) * t;
                };
                bool grows = true;
                double previous = 0.0;
                for (int decades = 2; decades <= 8; decades += 2) {
                    const double T = t0 * std::pow(10.0, decades);
                    const double quad = GK::integrate(integrand, 0.0, std::log(T / t0), 15, 1e-12);
                    const double lower = p.K * (std::pow(T, e) - std::pow(t0, e));
                    grows = grows && quad >= lower * (1.0 - 1e-8) && quad > previous;
                    previous = quad;
                }
                if (!grows) {
                    throw std::runtime_error("power_law certificate: quadrature disagrees with closed form");
                }
                r.positive_variation_integral = kInf;
                return r;
            },
            [&](const Tabulated& tab) { return certify_tabulated(tab, t0); },
        },
        d.kind());
    c.satisfies_lower_bound = c.k_inf > 3.0;
    c.satisfies_integrability = std::isfinite(c.positive_variation_integral);
    return c;
}

KernelCheck tail_kernel_check(const DampingSpec& d, double s, double K) {
    if (!(s >= d.t0())) {
        throw InvalidInput("tail_kernel_check: need s >= t0");
    }
    if (!(K > 1.0)) {
        throw Unsupported("tail_kernel_check: bound s/(K-1) needs K > 1");
    }
    // Substitute t = s e^u. Past t_cut = s e^U, gamma >= K/t gives
    // exp(-Gamma(t, s)) <= exp(-Gamma(t_cut, s)) (t_cut/t)^K, whose integral is
    // exp(-Gamma(t_cut, s)) t_cut / (K - 1).
    const double U = std::min(40.0 / (K - 1.0), 600.0);
    auto integrand = [&](double u) {
        const double t = s * std::exp(u);
        return t * std::exp(-d.big_gamma(s, t));
    };
    const double body = GK::integrate(integrand, 0.0, U, 20, 1e-14);
    const double t_cut = s * std::exp(U);
    const double tail = std::exp(-d.big_gamma(s, t_cut)) * t_cut / (K - 1.0);
    return {body + tail, s / (K - 1.0)};
}

} // namespace vdamp
