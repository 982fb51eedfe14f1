#include "vdamp/potential.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vdamp/error.hpp"

namespace vdamp {

namespace {

constexpr double kConvexityTol = 1e-12;
constexpr double kLseGradTol = 1e-12;
constexpr long kLseMaxIterations = 5'000'000;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw InvalidInput(msg);
    }
}

// Columns of V whose singular value is at or below tol span the null space.
Matrix null_space(const Matrix& M) {
    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double tol = 1e-12 * std::max(1.0, smax);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > tol) {
        ++rank;
    }
    const Eigen::Index n = M.cols();
    return svd.matrixV().rightCols(n - rank);
}

double lse_value(const LogSumExp& f, const Eigen::Ref<const Vector>& x) {
    const Vector z = f.rows * x + f.offsets;
    const double mu = z.maxCoeff();
    return mu + std::log((z.array() - mu).exp().sum());
}

void lse_gradient(const LogSumExp& f, const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) {
    thread_local Vector z;
    z.resize(f.rows.rows());
    z.noalias() = f.rows * x;
    z += f.offsets;
    const double mu = z.maxCoeff();
    z = (z.array() - mu).exp();
    z /= z.sum();
    out.noalias() = f.rows.transpose() * z;
}

// e^d - 1 - d, accurate for small |d|.
double expm1_minus_linear(double d) {
    if (std::abs(d) < 1e-3) {
        return d * d * (0.5 + d * (1.0 / 6 + d * (1.0 / 24 + d / 120)));
    }
    return std::expm1(d) - d;
}

double huber_scalar(double r, double delta) {
    const double a = std::abs(r);
    return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

} // namespace

PotentialSpec PotentialSpec::quadratic(Matrix A, Vector b) {
    const Eigen::Index n = A.rows();
    require(n > 0 && A.cols() == n, "quadratic: A must be square and non-empty");
    require(b.size() == n, "quadratic: b has wrong dimension");
    require((A - A.transpose()).norm() <= 1e-12 * (1.0 + A.norm()), "quadratic: A must be symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    const Vector& lambda = es.eigenvalues();
    const double lmax = lambda.maxCoeff();
    require(lambda.minCoeff() >= -kConvexityTol * std::max(1.0, std::abs(lmax)),
            "quadratic: A has a negative eigenvalue (not convex)");

    const double tol = 1e-12 * std::max(1.0, lmax);
    Vector xstar = Vector::Zero(n);
    std::vector<Eigen::Index> null_cols;
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto q = es.eigenvectors().col(i);
        if (lambda(i) > tol) {
            xstar += q * (q.dot(b) / lambda(i));
        } else {
            null_cols.push_back(i);
        }
    }
    require((A * xstar - b).norm() <= 1e-9 * (1.0 + b.norm()),
            "quadratic: b is not in the range of A (potential unbounded below)");

    Matrix basis(n, static_cast<Eigen::Index>(null_cols.size()));
    for (std::size_t j = 0; j < null_cols.size(); ++j) {
        basis.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(null_cols[j]);
    }

    PotentialSpec p(Quadratic{std::move(A), std::move(b)}, n);
    p.lipschitz_ = std::max(lmax, 0.0);
    p.min_value_ = p.value(xstar);
    p.affine_ = AffineSet{xstar, std::move(basis)};
    p.witness_ = std::move(xstar);
    return p;
}

PotentialSpec PotentialSpec::least_squares(Matrix M, Vector y) {
    const Eigen::Index n = M.cols();
    require(n > 0 && M.rows() > 0, "least_squares: M must be non-empty");
    require(y.size() == M.rows(), "least_squares: y has wrong dimension");

    Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    // Same absolute rank cut as null_space(); Eigen's threshold is relative to smax.
    if (smax > 0.0) {
        svd.setThreshold(std::min(1.0, 1e-12 * std::max(1.0, smax) / smax));
    }
    Vector xstar = smax > 0.0 ? Vector(svd.solve(y)) : Vector(Vector::Zero(n));
    Matrix basis = null_space(M);

    PotentialSpec p(LeastSquares{std::move(M), std::move(y)}, n);
    p.lipschitz_ = smax * smax;
    p.min_value_ = p.value(xstar);
    p.affine_ = AffineSet{xstar, std::move(basis)};
    p.witness_ = std::move(xstar);
    return p;
}

PotentialSpec PotentialSpec::log_sum_exp(Matrix rows, Vector offsets) {
    const Eigen::Index n = rows.cols();
    require(n > 0 && rows.rows() > 0, "log_sum_exp: need at least one row");
    require(offsets.size() == rows.rows(), "log_sum_exp: offsets has wrong dimension");

    PotentialSpec p(LogSumExp{std::move(rows), std::move(offsets)}, n);
    const auto& f = std::get<LogSumExp>(p.kind_);
    const double L = f.rows.rowwise().squaredNorm().maxCoeff();
    p.lipschitz_ = L;

    // Damped gradient descent with step 1/L; the iterate stays in the row space,
    // so it converges to the minimal-norm minimizer.
    Vector x = Vector::Zero(n);
    Vector g(n);
    if (L > 0.0) {
        long it = 0;
        for (;; ++it) {
            lse_gradient(f, x, g);
            if (g.norm() <= kLseGradTol) {
                break;
            }
            require(it < kLseMaxIterations && x.norm() < 1e8,
                    "log_sum_exp: gradient descent did not converge (potential unbounded below?)");
            x -= g / L;
        }
    }

    p.min_value_ = lse_value(f, x);
    Vector z = f.rows * x + f.offsets;
    z = (z.array() - z.maxCoeff()).exp();
    p.lse_weights_ = z / z.sum();
    p.affine_ = AffineSet{x, null_space(f.rows)};
    p.witness_ = std::move(x);
    return p;
}

PotentialSpec PotentialSpec::huber(double delta, Vector center) {
    const Eigen::Index n = center.size();
    require(n > 0, "huber: center must be non-empty");
    require(delta > 0.0 && std::isfinite(delta), "huber: delta must be positive");
    PotentialSpec p(Huber{delta, center}, n);
    p.lipschitz_ = 1.0;
    p.min_value_ = 0.0;
    p.affine_ = AffineSet{center, Matrix(n, 0)};
    p.witness_ = std::move(center);
    return p;
}

PotentialSpec PotentialSpec::zero(Eigen::Index dim) {
    require(dim > 0, "zero: dimension must be positive");
    PotentialSpec p(Zero{}, dim);
    p.witness_ = Vector::Zero(dim);
    p.affine_ = AffineSet{Vector::Zero(dim), Matrix::Identity(dim, dim)};
    return p;
}

std::string_view PotentialSpec::kind_name() const noexcept {
    return std::visit(overloaded{
                          [](const Quadratic&) { return std::string_view("quadratic"); },
                          [](const LeastSquares&) { return std::string_view("least_squares"); },
                          [](const LogSumExp&) { return std::string_view("log_sum_exp"); },
                          [](const Huber&) { return std::string_view("huber"); },
                          [](const Zero&) { return std::string_view("zero"); },
                      },
                      kind_);
}

void PotentialSpec::require_dim(Eigen::Index n) const {
    if (n != dim_) {
        throw InvalidInput("dimension mismatch: expected " + std::to_string(dim_) + ", got " +
                           std::to_string(n));
    }
}

double PotentialSpec::value(const Eigen::Ref<const Vector>& x) const {
    require_dim(x.size());
    return std::visit(overloaded{
                          [&](const Quadratic& q) { return 0.5 * x.dot(q.A * x) - q.b.dot(x); },
                          [&](const LeastSquares& ls) { return 0.5 * (ls.M * x - ls.y).squaredNorm(); },
                          [&](const LogSumExp& f) { return lse_value(f, x); },
                          [&](const Huber& h) {
                              double s = 0.0;
                              for (Eigen::Index i = 0; i < x.size(); ++i) {
                                  s += huber_scalar(x(i) - h.center(i), h.delta);
                              }
                              return s;
                          },
                          [](const Zero&) { return 0.0; },
                      },
                      kind_);
}

double PotentialSpec::excess(const Eigen::Ref<const Vector>& x) const {
    require_dim(x.size());
    return std::visit(overloaded{
                          [&](const Quadratic& q) {
                              const Vector r = x - *witness_;
                              return 0.5 * r.dot(q.A * r);
                          },
                          [&](const LeastSquares& ls) { return 0.5 * (ls.M * (x - *witness_)).squaredNorm(); },
                          [&](const LogSumExp& f) {
                              // log sum_i w_i e^{d_i} with w the softmax weights at the witness and
                              // d_i = <a_i, x - x*>; sum_i w_i d_i is the (near-zero) linear term.
                              const Vector delta = f.rows * (x - *witness_);
                              if (delta.cwiseAbs().maxCoeff() > 30.0) {
                                  return value(x) - min_value_;
                              }
                              double s = 0.0;
                              for (Eigen::Index i = 0; i < delta.size(); ++i) {
                                  s += lse_weights_(i) * (expm1_minus_linear(delta(i)) + delta(i));
                              }
                              return std::log1p(s);
                          },
                          [&](const Huber&) { return value(x); },
                          [](const Zero&) { return 0.0; },
                      },
                      kind_);
}

Vector PotentialSpec::gradient(const Eigen::Ref<const Vector>& x) const {
    Vector g(dim_);
    gradient_into(x, g);
    return g;
}

void PotentialSpec::gradient_into(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
    require_dim(x.size());
    std::visit(overloaded{
                   [&](const Quadratic& q) {
                       out.noalias() = q.A * x;
                       out -= q.b;
                   },
                   [&](const LeastSquares& ls) {
                       thread_local Vector r;
                       r.resize(ls.M.rows());
                       r.noalias() = ls.M * x;
                       r -= ls.y;
                       out.noalias() = ls.M.transpose() * r;
                   },
                   [&](const LogSumExp& f) { lse_gradient(f, x, out); },
                   [&](const Huber& h) {
                       for (Eigen::Index i = 0; i < x.size(); ++i) {
                           out(i) = std::clamp(x(i) - h.center(i), -h.delta, h.delta);
                       }
                   },
                   [&](const Zero&) { out.setZero(); },
               },
               kind_);
}

double check_gradient_fd(const PotentialSpec& p, const Vector& x, double step) {
    if (!(step > 0.0)) {
        throw InvalidInput("check_gradient_fd: step must be positive");
    }
    const Vector g = p.gradient(x);
    double worst = 0.0;
    Vector xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp(i) = x(i) + step;
        const double fp = p.value(xp);
        xp(i) = x(i) - step;
        const double fm = p.value(xp);
        xp(i) = x(i);
        const double fd = (fp - fm) / (2.0 * step);
        worst = std::max(worst, std::abs(fd - g(i)) / std::max(1.0, std::abs(g(i))));
    }
    return worst;
}

double check_convexity_gap(const PotentialSpec& p, const Vector& x, const Vector& y) {
    return p.value(y) - p.value(x) - p.gradient(x).dot(y - x);
}

double distance_to_argmin(const PotentialSpec& p, const Vector& x) {
    if (x.size() != p.dim()) {
        throw InvalidInput("distance_to_argmin: dimension mismatch");
    }
    if (const auto& aff = p.argmin_affine()) {
        Vector r = x - aff->basepoint;
        if (aff->basis.cols() > 0) {
            r -= aff->basis * (aff->basis.transpose() * r);
        }
        return r.norm();
    }
    if (const auto& w = p.argmin_witness()) {
        return (x - *w).norm();
    }
    throw Unsupported("distance_to_argmin: potential has no argmin description");
}

} // namespace vdamp
