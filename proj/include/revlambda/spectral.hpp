#pragma once

// First Dirichlet eigenvalue of a surface of revolution via its profile
// curve. The weighted quotient
//
//     int |w'|^2 F / |g'| dt  /  int w^2 F |g'| dt ,   w(0) = w(1) = 0,
//
// is discretized with P1 elements on the sample grid, F and |g'| constant per
// element (F at the chord midpoint, |g'| = n * chord). The element matrices
// then depend only on the chord c_e and the midpoint radius F_e:
//
//     K_e = (F_e / c_e) [1 -1; -1 1],    M_e = (F_e c_e / 6) [2 1; 1 2].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "revlambda/error.hpp"
#include "revlambda/geometry.hpp"

namespace revlambda {

/// Stiffness and mass on the n-1 interior nodes, both symmetric tridiagonal.
struct TridiagonalPencil {
    std::vector<double> k_diag, k_off;
    std::vector<double> m_diag, m_off;
    // Per-element weights F/c and F c (n entries) for exact quadratic forms.
    std::vector<double> stiffness_weight, mass_weight;

    std::size_t size() const { return k_diag.size(); }
};

struct SpectralResult {
    double lambda1 = 0.0;
    double lambda2 = std::numeric_limits<double>::infinity();
    std::vector<double> phi;     // n + 1 samples, phi[0] = phi[n] = 0
    double normalization = 1.0;  // int phi^2 F |g'| dt
    std::size_t mesh_size = 0;

    double spectral_gap() const { return lambda2 - lambda1; }
};

inline TridiagonalPencil assemble(const ProfileCurve& curve) {
    const std::size_t n = curve.n();
    if (n < 2) throw Error(ErrorKind::Precondition, "assemble: need n >= 2");
    const auto& s = curve.samples;
    TridiagonalPencil pen;
    pen.stiffness_weight.resize(n);
    pen.mass_weight.resize(n);
    for (std::size_t e = 0; e < n; ++e) {
        const double c = distance(s[e], s[e + 1]);
        if (!(c > 0.0)) throw Error(ErrorKind::Degenerate, "assemble: zero-length chord at element " + std::to_string(e));
        const double f = 0.5 * (s[e].x + s[e + 1].x);
        pen.stiffness_weight[e] = f / c;
        pen.mass_weight[e] = f * c;
    }
    const std::size_t m = n - 1;
    pen.k_diag.resize(m);
    pen.m_diag.resize(m);
    pen.k_off.resize(m - 1);
    pen.m_off.resize(m - 1);
    for (std::size_t i = 0; i < m; ++i) {
        // interior node i+1 touches elements i and i+1
        pen.k_diag[i] = pen.stiffness_weight[i] + pen.stiffness_weight[i + 1];
        pen.m_diag[i] = (pen.mass_weight[i] + pen.mass_weight[i + 1]) / 3.0;
        if (i + 1 < m) {
            pen.k_off[i] = -pen.stiffness_weight[i + 1];
            pen.m_off[i] = pen.mass_weight[i + 1] / 6.0;
        }
    }
    return pen;
}

namespace detail {

/// Number of generalized eigenvalues below `lambda` (inertia of K - lambda M).
inline std::size_t sturm_count(const TridiagonalPencil& pen, double lambda) {
    const std::size_t m = pen.size();
    const double pivmin = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();
    std::size_t count = 0;
    double d = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        double a = pen.k_diag[i] - lambda * pen.m_diag[i];
        if (i > 0) {
            const double b = pen.k_off[i - 1] - lambda * pen.m_off[i - 1];
            a -= b * b / d;
        }
        d = a;
        if (std::abs(d) < pivmin) d = -pivmin;
        if (d < 0.0) ++count;
    }
    return count;
}

/// Solves (K - sigma M) x = rhs by tridiagonal LU with partial pivoting.
inline std::vector<double> solve_shifted(const TridiagonalPencil& pen, double sigma, std::span<const double> rhs) {
    const std::size_t m = pen.size();
    std::vector<double> dl(m > 0 ? m - 1 : 0), d(m), du(m > 0 ? m - 1 : 0), du2(m, 0.0), x(rhs.begin(), rhs.end());
    for (std::size_t i = 0; i < m; ++i) d[i] = pen.k_diag[i] - sigma * pen.m_diag[i];
    for (std::size_t i = 0; i + 1 < m; ++i) dl[i] = du[i] = pen.k_off[i] - sigma * pen.m_off[i];
    const double tiny = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        if (std::abs(d[i]) >= std::abs(dl[i])) {
            if (d[i] == 0.0) d[i] = tiny;
            const double f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            x[i + 1] -= f * x[i];
            dl[i] = f;
        } else {
            const double f = d[i] / dl[i];
            d[i] = dl[i];
            const double tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if (i + 2 < m) {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du2[i];
            }
            du[i] = tmp;
            std::swap(x[i], x[i + 1]);
            x[i + 1] -= f * x[i];
            dl[i] = f;
        }
    }
    if (m > 0 && d[m - 1] == 0.0) d[m - 1] = tiny;
    for (std::size_t k = m; k-- > 0;) {
        double v = x[k];
        if (k + 1 < m) v -= du[k] * x[k + 1];
        if (k + 2 < m) v -= du2[k] * x[k + 2];
        x[k] = v / d[k];
    }
    return x;
}

inline std::vector<double> mass_apply(const TridiagonalPencil& pen, std::span<const double> x) {
    const std::size_t m = pen.size();
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) {
        double v = pen.m_diag[i] * x[i];
        if (i > 0) v += pen.m_off[i - 1] * x[i - 1];
        if (i + 1 < m) v += pen.m_off[i] * x[i + 1];
        y[i] = v;
    }
    return y;
}

// Quadratic forms over interior values (endpoints implicitly zero), summed
// element by element so every term is non-negative.
inline double stiffness_form(const TridiagonalPencil& pen, std::span<const double> x) {
    const std::size_t m = pen.size();
    double sum = 0.0;
    for (std::size_t e = 0; e <= m; ++e) {
        const double a = e > 0 ? x[e - 1] : 0.0;
        const double b = e < m ? x[e] : 0.0;
        sum += pen.stiffness_weight[e] * (b - a) * (b - a);
    }
    return sum;
}

inline double mass_form(const TridiagonalPencil& pen, std::span<const double> x) {
    const std::size_t m = pen.size();
    double sum = 0.0;
    for (std::size_t e = 0; e <= m; ++e) {
        const double a = e > 0 ? x[e - 1] : 0.0;
        const double b = e < m ? x[e] : 0.0;
        sum += pen.mass_weight[e] * (a * a + a * b + b * b) / 3.0;
    }
    return sum;
}

inline double mass_inner(const TridiagonalPencil& pen, std::span<const double> x, std::span<const double> y) {
    const auto my = mass_apply(pen, y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * my[i];
    return s;
}

// sin(pi s / L) in cumulative chord length: a positive trial vector close to
// the ground state for most curves.
inline std::vector<double> trial_vector(const ProfileCurve& curve) {
    const auto chords = chord_lengths(curve);
    double total = 0.0;
    for (double c : chords) total += c;
    std::vector<double> x(curve.n() - 1);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < curve.n(); ++i) {
        s += chords[i];
        x[i] = std::sin(std::numbers::pi * s / total) + 1e-3;
    }
    return x;
}

inline double bisect_eigenvalue(const TridiagonalPencil& pen, std::size_t index, double lo, double hi, double rel_tol) {
    // invariant: count(lo) <= index < count(hi)
    for (int it = 0; it < 400; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= rel_tol * hi || mid <= lo || mid >= hi) break;
        (sturm_count(pen, mid) > index ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Eigenpair {
    double value;
    double lower;  // bisection lower bound, count(lower) <= index
    std::vector<double> vector;  // interior values, M-normalized
};

inline double upper_bound_for(const TridiagonalPencil& pen, std::size_t index, double start) {
    double hi = std::max(start, std::numeric_limits<double>::min());
    for (int k = 0; k < 2000 && sturm_count(pen, hi) <= index; ++k) hi *= 2.0;
    return hi;
}

inline Eigenpair ground_state(const TridiagonalPencil& pen, const ProfileCurve& curve, double rel_tol) {
    std::vector<double> x = trial_vector(curve);
    const double rq = stiffness_form(pen, x) / mass_form(pen, x);
    const double hi = upper_bound_for(pen, 0, rq * (1.0 + 1e-9));
    const double lam = bisect_eigenvalue(pen, 0, 0.0, hi, rel_tol);
    const double sigma = lam * (1.0 - 4.0 * rel_tol);
    for (int it = 0; it < 3; ++it) {
        x = solve_shifted(pen, sigma, mass_apply(pen, x));
        const double nrm = std::sqrt(mass_form(pen, x));
        for (double& v : x) v /= nrm;
    }
    double sum = 0.0;
    for (double v : x) sum += v;
    if (sum < 0.0)
        for (double& v : x) v = -v;
    return {stiffness_form(pen, x) / mass_form(pen, x), sigma, std::move(x)};
}

inline double second_eigenvalue(const TridiagonalPencil& pen, const Eigenpair& ground) {
    if (pen.size() < 2) return std::numeric_limits<double>::infinity();
    const double hi = upper_bound_for(pen, 1, 4.0 * ground.value);
    const double lo = ground.value * (1.0 + 1e-12);
    const double lam = bisect_eigenvalue(pen, 1, std::min(lo, hi), hi, 1e-13);
    // Inverse iteration deflated against the ground state, then Rayleigh quotient.
    std::vector<double> x(pen.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(std::numbers::pi * (i + 1.0) / (x.size() + 1.0));
    auto deflate = [&](std::vector<double>& v) {
        const double c = mass_inner(pen, ground.vector, v);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * ground.vector[i];
    };
    for (int it = 0; it < 3; ++it) {
        deflate(x);
        x = solve_shifted(pen, lam, mass_apply(pen, x));
        deflate(x);
        const double nrm = std::sqrt(mass_form(pen, x));
        for (double& v : x) v /= nrm;
    }
    const double rq = stiffness_form(pen, x) / mass_form(pen, x);
    return std::abs(rq - lam) <= 1e-6 * lam ? rq : lam;
}

}  // namespace detail

/// lambda1 and lambda2 of the pencil: Sturm-sequence bisection, inverse
/// iteration for the eigenvector, Rayleigh-quotient polish of lambda1.
inline SpectralResult lambda1(const ProfileCurve& curve, bool with_lambda2 = true) {
    require_valid(curve, "lambda1");
    const auto pen = assemble(curve);
    auto ground = detail::ground_state(pen, curve, 1e-14);
    SpectralResult out;
    out.lambda1 = ground.value;
    if (with_lambda2) out.lambda2 = detail::second_eigenvalue(pen, ground);
    out.mesh_size = curve.n();
    out.phi.assign(curve.n() + 1, 0.0);
    std::copy(ground.vector.begin(), ground.vector.end(), out.phi.begin() + 1);
    out.normalization = detail::mass_form(pen, ground.vector);
    return out;
}

/// lambda1 only; the hot path for optimization sweeps.
inline double lambda1_value(const ProfileCurve& curve) {
    const auto pen = assemble(curve);
    return detail::ground_state(pen, curve, 1e-14).value;
}

/// Discrete quotient for w sampled on the n+1 grid points (w[0] = w[n] = 0).
inline double rayleigh_quotient(const ProfileCurve& curve, std::span<const double> w) {
    if (w.size() != curve.n() + 1) throw Error(ErrorKind::Precondition, "rayleigh_quotient: w needs n+1 samples");
    if (w.front() != 0.0 || w.back() != 0.0)
        throw Error(ErrorKind::Precondition, "rayleigh_quotient: w must vanish at the endpoints");
    if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; }))
        throw Error(ErrorKind::Precondition, "rayleigh_quotient: w is identically zero");
    const auto pen = assemble(curve);
    const auto interior = w.subspan(1, w.size() - 2);
    return detail::stiffness_form(pen, interior) / detail::mass_form(pen, interior);
}

struct EulerLagrangeResidual {
    std::vector<double> res_F;  // one entry per interior node 1..n-1
    std::vector<double> res_G;
    double max_abs = 0.0;
    // max_abs relative to the largest undifferentiated-test-function term;
    // O(1) away from critical curves, O(n^-2) on them.
    double relative = 0.0;
};

/// Weak-form residuals of the stationarity system for a constant-speed curve
/// of length L with eigenpair (Lambda, phi), tested against the hat functions:
///
///   res_F[i] = int (phi'^2 + Lambda L^2 phi^2) F F' psi_i' + int (Lambda L^4 phi^2 - L^2 phi'^2) psi_i
///   res_G[i] = int (phi'^2 + Lambda L^2 phi^2) F G' psi_i'
///
/// F, F', G', phi' are constant per element and the undifferentiated psi_i is
/// integrated at its element mean (1/2), matching the assembly. With that
/// quadrature res_F[i] = -L^3 d(lambda1)/dF_i for the discrete problem.
inline EulerLagrangeResidual euler_lagrange_residual(const ProfileCurve& curve, const SpectralResult& spec) {
    const std::size_t n = curve.n();
    if (spec.phi.size() != n + 1) throw Error(ErrorKind::Precondition, "euler_lagrange_residual: phi/curve size mismatch");
    const auto chords = chord_lengths(curve);
    double total = 0.0;
    for (double c : chords) total += c;
    const double mean = total / static_cast<double>(n);
    for (std::size_t e = 0; e < n; ++e) {
        if (std::abs(chords[e] - mean) > 0.01 * mean)
            throw Error(ErrorKind::Precondition,
                        "euler_lagrange_residual: curve is not constant-speed (element " + std::to_string(e) + ")");
    }
    const double L = total;
    const double lam = spec.lambda1;
    const double h = 1.0 / static_cast<double>(n);
    const double nd = static_cast<double>(n);
    const auto& s = curve.samples;
    const auto& phi = spec.phi;

    // Per element: flux-type coefficient A_e (multiplies psi'), source B_e (integral against psi_i mean).
    std::vector<double> aF(n), aG(n), src(n), src_scale(n);
    for (std::size_t e = 0; e < n; ++e) {
        const double f = 0.5 * (s[e].x + s[e + 1].x);
        const double df = nd * (s[e + 1].x - s[e].x);
        const double dg = nd * (s[e + 1].y - s[e].y);
        const double dphi = nd * (phi[e + 1] - phi[e]);
        const double phi2 = h * (phi[e] * phi[e] + phi[e] * phi[e + 1] + phi[e + 1] * phi[e + 1]) / 3.0;
        const double energy = h * dphi * dphi + lam * L * L * phi2;  // int (phi'^2 + Lambda L^2 phi^2)
        aF[e] = nd * energy * f * df;
        aG[e] = nd * energy * f * dg;
        src[e] = 0.5 * (lam * L * L * L * L * phi2 - L * L * h * dphi * dphi);
        src_scale[e] = 0.5 * (lam * L * L * L * L * phi2 + L * L * h * dphi * dphi);
    }
    EulerLagrangeResidual out;
    out.res_F.resize(n - 1);
    out.res_G.resize(n - 1);
    double scale = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        // psi_i' = +n on element i-1 and -n on element i.
        out.res_F[i - 1] = aF[i - 1] - aF[i] + src[i - 1] + src[i];
        out.res_G[i - 1] = aG[i - 1] - aG[i];
        out.max_abs = std::max({out.max_abs, std::abs(out.res_F[i - 1]), std::abs(out.res_G[i - 1])});
        scale = std::max(scale, src_scale[i - 1] + src_scale[i]);
    }
    out.relative = scale > 0.0 ? out.max_abs / scale : 0.0;
    return out;
}

}  // namespace revlambda
