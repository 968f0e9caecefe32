#pragma once

// First Dirichlet eigenvalues of the flat disc and the concentric annulus,
// the comparison baselines for profile curves.

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <utility>

#include "revlambda/bessel.hpp"
#include "revlambda/error.hpp"

namespace revlambda {

struct AnnulusSpec {
    double inner = 0.0;
    double outer = 0.0;

    bool valid() const { return inner > 0.0 && outer > inner; }
};

namespace detail {

template <class Fn>
double bisect_sign_change(Fn&& f, double lo, double hi, double rel_tol) {
    double flo = f(lo);
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi || hi - lo <= rel_tol * std::abs(hi)) break;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// First positive zero of J0, found once by bisection on bessel::j0.
inline double j0_first_zero() {
    static const double zero = detail::bisect_sign_change([](double x) { return bessel::j0(x); }, 2.0, 3.0, 1e-16);
    return zero;
}

inline double disc_lambda1(double radius) {
    if (!(radius > 0.0)) throw Error(ErrorKind::Domain, "disc_lambda1 requires R > 0");
    const double k = j0_first_zero() / radius;
    return k * k;
}

/// J0(k a) Y0(k b) - J0(k b) Y0(k a); antisymmetric in (a, b).
inline double annulus_cross_product(double k, double a, double b) {
    return bessel::j0(k * a) * bessel::y0(k * b) - bessel::j0(k * b) * bessel::y0(k * a);
}

/// Smallest positive k with annulus_cross_product(k, a, b) = 0. The scan step
/// pi / (4 |b - a|) is a quarter of the asymptotic zero spacing.
inline double annulus_first_root(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0) || a == b) throw Error(ErrorKind::Domain, "annulus root needs distinct radii > 0");
    const double step = std::numbers::pi / (4.0 * std::abs(b - a));
    auto f = [&](double k) { return annulus_cross_product(k, a, b); };
    double k0 = 1e-3 * step;
    double f0 = f(k0);
    constexpr int max_steps = 100000;
    for (int i = 0; i < max_steps; ++i) {
        const double k1 = k0 + step;
        const double f1 = f(k1);
        if (f1 == 0.0) return k1;
        if ((f0 > 0.0) != (f1 > 0.0)) return detail::bisect_sign_change(f, k0, k1, 1e-15);
        k0 = k1;
        f0 = f1;
    }
    std::ostringstream msg;
    msg << "annulus root not bracketed: a=" << a << " b=" << b << " scanned k up to " << k0 << " with step " << step;
    throw Error(ErrorKind::Convergence, msg.str());
}

inline double annulus_lambda1(const AnnulusSpec& spec) {
    if (!spec.valid()) throw Error(ErrorKind::Domain, "annulus_lambda1 requires 0 < a < b");
    const double k = annulus_first_root(spec.inner, spec.outer);
    return k * k;
}

/// First x > x0 where J0(x) Y0(x0) - Y0(x) J0(x0) vanishes: the radius (in
/// units of 1/sqrt(lambda)) where the radial solution started at x0 returns
/// to zero.
inline double cylinder_cross_zero(double x0) {
    if (!(x0 > 0.0)) throw Error(ErrorKind::Domain, "cylinder_cross_zero requires x0 > 0");
    const double j_at = bessel::j0(x0);
    const double y_at = bessel::y0(x0);
    // Negative just right of x0: the derivative there is -2 / (pi x0).
    auto f = [&](double x) { return bessel::j0(x) * y_at - bessel::y0(x) * j_at; };
    // Zero spacing of sqrt(x) J-type solutions exceeds pi / sqrt(1 + 1/(4 x0^2)).
    const double step = 0.25 * std::numbers::pi / std::sqrt(1.0 + 1.0 / (4.0 * x0 * x0));
    double lo = x0;
    for (int i = 0; i < 100000; ++i) {
        const double hi = lo + step;
        const double fh = f(hi);
        if (fh == 0.0) return hi;
        if (fh > 0.0) {
            auto g = [&](double x) { return x == x0 ? -1.0 : f(x); };
            return detail::bisect_sign_change(g, lo, hi, 1e-16);
        }
        lo = hi;
    }
    throw Error(ErrorKind::Convergence, "cylinder_cross_zero: no zero bracketed");
}

}  // namespace revlambda
