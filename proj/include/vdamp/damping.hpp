#pragma once

#include <string_view>
#include <variant>
#include <vector>

namespace vdamp {

/// gamma(t) = K / t
struct OverT {
    double K;
};

/// gamma(t) = K / (a + t), defined for t > -a
struct Shifted {
    double K;
    double a;
};

/// gamma(t) = K / t^alpha with alpha in [0, 1)
struct PowerLaw {
    double K;
    double alpha;
};

/// Piecewise-linear gamma through (t_i, gamma_i). Past the last knot t*gamma(t)
/// is held at its last value, i.e. gamma(t) = t_n gamma_n / t.
struct Tabulated {
    std::vector<double> t;
    std::vector<double> gamma;
};

using DampingKind = std::variant<OverT, Shifted, PowerLaw, Tabulated>;

class DampingSpec {
public:
    static DampingSpec over_t(double K, double t0);
    static DampingSpec shifted(double K, double a, double t0);
    static DampingSpec power_law(double K, double alpha, double t0);
    /// t0 defaults to the first knot.
    static DampingSpec tabulated(std::vector<double> t, std::vector<double> gamma, double t0 = 0.0);

    double t0() const noexcept { return t0_; }
    const DampingKind& kind() const noexcept { return kind_; }
    std::string_view kind_name() const noexcept;

    /// Same family with the leading constant replaced (sweeps). Not defined for Tabulated.
    DampingSpec with_K(double K) const;
    /// Same family on a different left endpoint.
    DampingSpec with_t0(double t0) const;

    // All of these reject t < t0.
    double gamma(double t) const;
    double t_gamma(double t) const;
    double t_gamma_prime(double t) const;
    double t_gamma_prime_pos(double t) const;
    /// Gamma(t, s) = int_s^t gamma(tau) dtau for t0 <= s <= t.
    double big_gamma(double s, double t) const;

private:
    DampingSpec(DampingKind kind, double t0) : kind_(std::move(kind)), t0_(t0) {}
    void require_domain(double t) const;
    double gamma_at(double t) const noexcept;

    DampingKind kind_;
    double t0_;
};

enum class CertificateMethod { ClosedForm, QuadratureTailBound, PiecewiseExact };

std::string_view to_string(CertificateMethod m) noexcept;

/// Numerical certificate for the two damping hypotheses:
///   t gamma(t) >= K > 3 on [t0, inf)   (lower bound)
///   int_{t0}^inf [(t gamma(t))']_+ dt < inf   (integrable positive variation)
struct AdmissibilityCertificate {
    double k_inf = 0.0;  ///< inf_{t >= t0} t gamma(t)
    bool satisfies_lower_bound = false;
    double positive_variation_integral = 0.0;  ///< may be +inf
    bool satisfies_integrability = false;
    CertificateMethod method = CertificateMethod::ClosedForm;
    bool tail_unknown = false;  ///< Tabulated: integral is over the knot range only
};

AdmissibilityCertificate certify(const DampingSpec& d);

struct KernelCheck {
    double numeric;  ///< int_s^inf exp(-Gamma(t, s)) dt
    double bound;    ///< s / (K - 1)
};

/// Throws Unsupported for K <= 1.
KernelCheck tail_kernel_check(const DampingSpec& d, double s, double K);

} // namespace vdamp
