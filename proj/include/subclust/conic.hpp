#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "subclust/errors.hpp"

namespace subclust {

enum class StructureKind { line, circle, ellipse, conic };

inline const char* kind_name(StructureKind k) {
    switch (k) {
        case StructureKind::line: return "line";
        case StructureKind::circle: return "circle";
        case StructureKind::ellipse: return "ellipse";
        case StructureKind::conic: return "conic";
    }
    return "?";
}

inline StructureKind kind_from_name(const std::string& s) {
    if (s == "line") return StructureKind::line;
    if (s == "circle") return StructureKind::circle;
    if (s == "ellipse") return StructureKind::ellipse;
    if (s == "conic") return StructureKind::conic;
    throw ValidationError("unknown structure kind '" + s + "'");
}

/// Minimal number of points that determines a model of the given kind.
inline int minimal_support(StructureKind k) {
    switch (k) {
        case StructureKind::line: return 2;
        case StructureKind::circle: return 3;
        case StructureKind::ellipse: return 5;
        case StructureKind::conic: return 5;
    }
    return 0;
}

/// General conic A x^2 + B xy + C y^2 + D x + E y + F = 0. Coefficients are
/// stored normalized to unit Euclidean norm with the first nonzero
/// coefficient positive, so representations are unique.
struct Conic {
    std::array<double, 6> c{};  // A, B, C, D, E, F

    double a() const { return c[0]; }
    double b() const { return c[1]; }
    double cc() const { return c[2]; }
    double d() const { return c[3]; }
    double e() const { return c[4]; }
    double f() const { return c[5]; }
};

inline Conic make_conic(double A, double B, double C, double D, double E, double F) {
    std::array<double, 6> v{A, B, C, D, E, F};
    double norm2 = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) throw ValidationError("conic: non-finite coefficient");
        norm2 += x * x;
    }
    if (norm2 == 0.0) throw ValidationError("conic: all coefficients zero");
    double scale = 1.0 / std::sqrt(norm2);
    for (double x : v) {
        if (x != 0.0) {
            if (x < 0.0) scale = -scale;
            break;
        }
    }
    Conic out;
    for (std::size_t i = 0; i < 6; ++i) out.c[i] = v[i] * scale;
    return out;
}

/// Algebraic residual of the conic equation at a point.
inline double conic_residual(const Eigen::Vector2d& p, const Conic& k) {
    const double x = p.x(), y = p.y();
    return k.a() * x * x + k.b() * x * y + k.cc() * y * y + k.d() * x + k.e() * y + k.f();
}

// ---------------------------------------------------------------------------
// Parametric forms recovered from conic coefficients
// ---------------------------------------------------------------------------

struct CircleGeometry {
    Eigen::Vector2d center;
    double radius;
};

struct EllipseGeometry {
    Eigen::Vector2d center;
    double semi_major;  // a >= b
    double semi_minor;
    double angle;  // rotation of the major axis, radians

    Eigen::Vector2d point_at(double theta) const {
        const double ct = std::cos(theta), st = std::sin(theta);
        const double ca = std::cos(angle), sa = std::sin(angle);
        return center + Eigen::Vector2d(semi_major * ct * ca - semi_minor * st * sa,
                                        semi_major * ct * sa + semi_minor * st * ca);
    }
};

inline CircleGeometry circle_geometry(const Conic& k) {
    const double A = k.a();
    if (std::abs(A) < 1e-14 || std::abs(k.a() - k.cc()) > 1e-9 * std::abs(A) + 1e-12 ||
        std::abs(k.b()) > 1e-9)
        throw ValidationError("conic does not encode a circle");
    const double cx = -k.d() / (2.0 * A);
    const double cy = -k.e() / (2.0 * A);
    const double r2 = cx * cx + cy * cy - k.f() / A;
    if (r2 <= 0.0) throw ValidationError("conic encodes an imaginary circle");
    return {Eigen::Vector2d(cx, cy), std::sqrt(r2)};
}

inline EllipseGeometry ellipse_geometry(const Conic& k) {
    const double A = k.a(), B = k.b(), C = k.cc(), D = k.d(), E = k.e(), F = k.f();
    const double disc = B * B - 4.0 * A * C;
    if (disc >= 0.0) throw ValidationError("conic is not an ellipse");
    // Center solves the gradient system [2A B; B 2C] c = -[D; E].
    const double det = 4.0 * A * C - B * B;
    const double cx = (B * E - 2.0 * C * D) / det;
    const double cy = (B * D - 2.0 * A * E) / det;
    const double f0 = A * cx * cx + B * cx * cy + C * cy * cy + D * cx + E * cy + F;
    Eigen::Matrix2d M;
    M << A, B / 2.0, B / 2.0, C;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(M);
    const Eigen::Vector2d lam = es.eigenvalues();
    // x^T M x = -f0 on the curve; both -f0/lambda_i must be positive.
    const double r1 = -f0 / lam(0), r2 = -f0 / lam(1);
    if (!(r1 > 0.0) || !(r2 > 0.0)) throw ValidationError("conic encodes an empty ellipse");
    double a = std::sqrt(r1), b = std::sqrt(r2);
    Eigen::Vector2d axis = es.eigenvectors().col(0);
    if (a < b) {
        std::swap(a, b);
        axis = es.eigenvectors().col(1);
    }
    return {Eigen::Vector2d(cx, cy), a, b, std::atan2(axis.y(), axis.x())};
}

// ---------------------------------------------------------------------------
// Least-squares fitters
// ---------------------------------------------------------------------------

/// Total least squares line: first principal direction through the centroid.
/// Encoded as a Conic with A = B = C = 0.
inline Conic fit_line_tls(const Eigen::Matrix2Xd& points) {
    const Eigen::Index n = points.cols();
    if (n < 2) throw FitError("fit_line_tls: need at least 2 points");
    const Eigen::Vector2d mu = points.rowwise().mean();
    const Eigen::Matrix2Xd centered = points.colwise() - mu;
    const Eigen::Matrix2d scatter = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
    if (es.eigenvalues()(1) <= 1e-24) throw FitError("fit_line_tls: coincident points");
    // Normal = eigenvector of the smallest eigenvalue.
    const Eigen::Vector2d normal = es.eigenvectors().col(0);
    return make_conic(0.0, 0.0, 0.0, normal.x(), normal.y(), -normal.dot(mu));
}

/// Algebraic (Kasa) circle fit: linear least squares on
/// x^2 + y^2 + d x + e y + f = 0. Encoded with A = C = 1, B = 0 before
/// normalization.
inline Conic fit_circle_algebraic(const Eigen::Matrix2Xd& points) {
    const Eigen::Index n = points.cols();
    if (n < 3) throw FitError("fit_circle_algebraic: need at least 3 points");
    Eigen::MatrixXd G(n, 3);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = points(0, i), y = points(1, i);
        G(i, 0) = x;
        G(i, 1) = y;
        G(i, 2) = 1.0;
        rhs(i) = -(x * x + y * y);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
    qr.setThreshold(1e-10);
    if (qr.rank() < 3) throw FitError("fit_circle_algebraic: degenerate configuration");
    const Eigen::Vector3d sol = qr.solve(rhs);
    const double cx = -sol(0) / 2.0, cy = -sol(1) / 2.0;
    if (cx * cx + cy * cy - sol(2) <= 0.0) throw FitError("fit_circle_algebraic: imaginary radius");
    return make_conic(1.0, 0.0, 1.0, sol(0), sol(1), sol(2));
}

/// Ellipse-specific direct least squares fit: the generalized eigen-solution
/// under the constraint 4AC - B^2 = 1, computed with the numerically stable
/// block partitioning of the scatter matrix. Input points are centered and
/// isotropically scaled first; the conic is mapped back afterwards.
inline Conic fit_ellipse_direct(const Eigen::Matrix2Xd& points) {
    const Eigen::Index n = points.cols();
    if (n < 5) throw FitError("fit_ellipse_direct: need at least 5 points");

    const Eigen::Vector2d mu = points.rowwise().mean();
    const Eigen::Matrix2Xd centered = points.colwise() - mu;
    double scale = std::sqrt(centered.squaredNorm() / static_cast<double>(2 * n));
    if (scale < 1e-12) throw FitError("fit_ellipse_direct: coincident points");
    const Eigen::Matrix2Xd P = centered / scale;

    Eigen::MatrixXd D1(n, 3), D2(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = P(0, i), y = P(1, i);
        D1(i, 0) = x * x;
        D1(i, 1) = x * y;
        D1(i, 2) = y * y;
        D2(i, 0) = x;
        D2(i, 1) = y;
        D2(i, 2) = 1.0;
    }
    const Eigen::Matrix3d S1 = D1.transpose() * D1;
    const Eigen::Matrix3d S2 = D1.transpose() * D2;
    const Eigen::Matrix3d S3 = D2.transpose() * D2;

    Eigen::FullPivLU<Eigen::Matrix3d> lu(S3);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) throw FitError("fit_ellipse_direct: rank-deficient scatter");
    const Eigen::Matrix3d T = -lu.solve(S2.transpose());

    Eigen::Matrix3d C1inv;
    C1inv << 0.0, 0.0, 0.5, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0;
    const Eigen::Matrix3d M = C1inv * (S1 + S2 * T);

    Eigen::EigenSolver<Eigen::Matrix3d> es(M);
    std::optional<Eigen::Vector3d> best;
    double best_cond = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(es.eigenvalues()(i).imag()) > 1e-8) continue;
        Eigen::Vector3d v = es.eigenvectors().col(i).real();
        const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
        if (cond > 0.0 && cond > best_cond) {
            best = v;
            best_cond = cond;
        }
    }
    if (!best) throw FitError("fit_ellipse_direct: no ellipse solution (degenerate input)");
    const Eigen::Vector3d a1 = *best;
    const Eigen::Vector3d a2 = T * a1;

    // Undo the centering/scaling substitution u = (x - mx)/s, v = (y - my)/s.
    const double A = a1(0), B = a1(1), C = a1(2);
    const double D = a2(0), E = a2(1), F = a2(2);
    const double s = scale, mx = mu.x(), my = mu.y();
    const double Df = -2.0 * A * mx - B * my + D * s;
    const double Ef = -B * mx - 2.0 * C * my + E * s;
    const double Ff =
        A * mx * mx + B * mx * my + C * my * my - D * s * mx - E * s * my + F * s * s;
    Conic out = make_conic(A, B, C, Df, Ef, Ff);
    if (out.b() * out.b() - 4.0 * out.a() * out.cc() >= 0.0)
        throw FitError("fit_ellipse_direct: result is not an ellipse");
    return out;
}

/// Unconstrained conic fit: smallest right singular vector of the design
/// matrix. Used for the general-conic baseline kind.
inline Conic fit_conic_general(const Eigen::Matrix2Xd& points) {
    const Eigen::Index n = points.cols();
    if (n < 5) throw FitError("fit_conic_general: need at least 5 points");
    Eigen::MatrixXd D(n, 6);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = points(0, i), y = points(1, i);
        D.row(i) << x * x, x * y, y * y, x, y, 1.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(D, Eigen::ComputeThinV);
    if (svd.singularValues()(4) < 1e-12) throw FitError("fit_conic_general: degenerate configuration");
    const Eigen::VectorXd v = svd.matrixV().col(5);
    return make_conic(v(0), v(1), v(2), v(3), v(4), v(5));
}

inline Conic fit_kind(StructureKind kind, const Eigen::Matrix2Xd& points) {
    switch (kind) {
        case StructureKind::line: return fit_line_tls(points);
        case StructureKind::circle: return fit_circle_algebraic(points);
        case StructureKind::ellipse: return fit_ellipse_direct(points);
        case StructureKind::conic: return fit_conic_general(points);
    }
    throw ValidationError("fit_kind: unknown kind");
}

// ---------------------------------------------------------------------------
// Geometric point-to-curve distance
// ---------------------------------------------------------------------------

namespace detail {

/// Golden-section minimization of f on [lo, hi] down to interval width tol.
template <class F>
double golden_section(F&& f, double lo, double hi, double tol) {
    constexpr double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return f((a + b) / 2.0);
}

/// Coarse scan over the curve parameter followed by golden-section
/// refinement of the best bracket.
template <class F>
double scan_refine(F&& f, double period, int samples, double tol) {
    int best = 0;
    double best_val = f(0.0);
    const double step = period / samples;
    for (int i = 1; i < samples; ++i) {
        const double v = f(i * step);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    const double lo = (best - 1) * step;
    const double hi = (best + 1) * step;
    return golden_section(f, lo, hi, tol);
}

}  // namespace detail

/// Euclidean distance from a point to the curve. Closed form for lines and
/// circles; parameter-space minimization for ellipses; first-order (Sampson)
/// approximation for a general conic.
inline double geometric_distance(const Eigen::Vector2d& p, const Conic& k, StructureKind kind) {
    switch (kind) {
        case StructureKind::line: {
            const double denom = std::hypot(k.d(), k.e());
            if (denom < 1e-300) throw ValidationError("geometric_distance: degenerate line conic");
            return std::abs(k.d() * p.x() + k.e() * p.y() + k.f()) / denom;
        }
        case StructureKind::circle: {
            const CircleGeometry g = circle_geometry(k);
            return std::abs((p - g.center).norm() - g.radius);
        }
        case StructureKind::ellipse: {
            const EllipseGeometry g = ellipse_geometry(k);
            auto dist = [&](double t) { return (p - g.point_at(t)).norm(); };
            return detail::scan_refine(dist, 2.0 * std::numbers::pi, 128, 1e-10);
        }
        case StructureKind::conic: {
            const double r = conic_residual(p, k);
            const double gx = 2.0 * k.a() * p.x() + k.b() * p.y() + k.d();
            const double gy = k.b() * p.x() + 2.0 * k.cc() * p.y() + k.e();
            const double gn = std::hypot(gx, gy);
            if (gn < 1e-300) return std::abs(r) < 1e-300 ? 0.0 : std::numeric_limits<double>::infinity();
            return std::abs(r) / gn;
        }
    }
    throw ValidationError("geometric_distance: unknown kind");
}

}  // namespace subclust
