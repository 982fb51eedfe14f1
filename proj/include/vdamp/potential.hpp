#pragma once

#include <optional>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

namespace vdamp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Phi(x) = 1/2 x^T A x - b^T x, A symmetric PSD, b in range(A).
struct Quadratic {
    Matrix A;
    Vector b;
};

/// Phi(x) = 1/2 ||M x - y||^2.
struct LeastSquares {
    Matrix M;
    Vector y;
};

/// Phi(x) = log sum_i exp(<a_i, x> + b_i); rows of `rows` are the a_i.
struct LogSumExp {
    Matrix rows;
    Vector offsets;
};

/// Separable Huber loss around `center`, quadratic for |r| <= delta.
struct Huber {
    double delta;
    Vector center;
};

struct Zero {};

using PotentialKind = std::variant<Quadratic, LeastSquares, LogSumExp, Huber, Zero>;

/// Minimizing affine subspace {basepoint + basis * c}; basis columns are orthonormal
/// and may be empty (singleton argmin).
struct AffineSet {
    Vector basepoint;
    Matrix basis;
};

/// Immutable convex C^1 potential with known minimum. Construct through the
/// named factories; they validate convexity, boundedness and precompute
/// min_value and the argmin description.
class PotentialSpec {
public:
    static PotentialSpec quadratic(Matrix A, Vector b);
    static PotentialSpec least_squares(Matrix M, Vector y);
    /// min_value is found by a damped gradient-descent run to ||grad|| <= 1e-12.
    static PotentialSpec log_sum_exp(Matrix rows, Vector offsets);
    static PotentialSpec huber(double delta, Vector center);
    static PotentialSpec zero(Eigen::Index dim);

    Eigen::Index dim() const noexcept { return dim_; }
    double min_value() const noexcept { return min_value_; }
    const std::optional<Vector>& argmin_witness() const noexcept { return witness_; }
    const std::optional<AffineSet>& argmin_affine() const noexcept { return affine_; }
    /// Global Lipschitz constant of the gradient (upper bound).
    double lipschitz_bound() const noexcept { return lipschitz_; }
    const PotentialKind& kind() const noexcept { return kind_; }
    std::string_view kind_name() const noexcept;

    double value(const Eigen::Ref<const Vector>& x) const;
    /// Phi(x) - min Phi, evaluated without cancellation near the minimizer.
    double excess(const Eigen::Ref<const Vector>& x) const;
    Vector gradient(const Eigen::Ref<const Vector>& x) const;
    /// Allocation-free variant for the integrator's inner loop.
    void gradient_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const;

private:
    PotentialSpec(PotentialKind kind, Eigen::Index dim) : kind_(std::move(kind)), dim_(dim) {}

    void require_dim(Eigen::Index n) const;

    PotentialKind kind_;
    Eigen::Index dim_ = 0;
    double min_value_ = 0.0;
    double lipschitz_ = 0.0;
    std::optional<Vector> witness_;
    std::optional<AffineSet> affine_;
    Vector lse_weights_;  // softmax weights at the witness (LogSumExp only)
};

/// Max over coordinates of |fd_i - g_i| / max(1, |g_i|) with central differences.
double check_gradient_fd(const PotentialSpec& p, const Vector& x, double step);

/// Phi(y) - Phi(x) - <grad Phi(x), y - x>; non-negative for convex Phi.
double check_convexity_gap(const PotentialSpec& p, const Vector& x, const Vector& y);

/// Euclidean distance to argmin. Throws Unsupported without an argmin description.
double distance_to_argmin(const PotentialSpec& p, const Vector& x);

} // namespace vdamp
