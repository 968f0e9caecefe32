#pragma once

// Bessel functions of order zero, J0 and Y0, to about 1e-14 absolute.
//
//   x <= 8       power series
//   8 < x <= 25  Miller backward recurrence for J_k, Neumann series for Y0
//   x > 25       Hankel asymptotic expansion
//
// The Hankel series alone is only good to ~1e-7 at x = 8 (its smallest term
// behaves like exp(-2x)), hence the middle band.

#include <cmath>
#include <numbers>
#include <vector>

#include "revlambda/error.hpp"

namespace revlambda::bessel {

namespace detail {

inline constexpr double euler_gamma = 0.57721566490153286061;
inline constexpr double series_limit = 8.0;
inline constexpr double hankel_limit = 25.0;

inline double j0_series(double x) {
    const double z = 0.25 * x * x;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < 200; ++k) {
        term *= -z / (static_cast<double>(k) * k);
        sum += term;
        if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(sum))) break;
    }
    return sum;
}

inline double y0_series(double x) {
    const double z = 0.25 * x * x;
    double term = 1.0;
    double harmonic = 0.0;
    double tail = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= -z / (static_cast<double>(k) * k);
        harmonic += 1.0 / k;
        const double t = -term * harmonic;  // (-1)^{k+1} H_k z^k / (k!)^2
        tail += t;
        if (std::abs(t) < 1e-18 * std::max(1.0, std::abs(tail))) break;
    }
    return (2.0 / std::numbers::pi) * ((std::log(0.5 * x) + euler_gamma) * j0_series(x) + tail);
}

struct MillerPair {
    double j0;
    double y0;
};

// Backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalized with
// J0 + 2 sum J_{2k} = 1. Y0 from the Neumann series
// Y0 = (2/pi) [ (ln(x/2) + gamma) J0 - 2 sum (-1)^k J_{2k} / k ].
inline MillerPair miller(double x) {
    int top = static_cast<int>(x + 30.0 + 6.0 * std::cbrt(x));
    if (top % 2) ++top;
    std::vector<double> j(static_cast<std::size_t>(top) + 2, 0.0);
    j[static_cast<std::size_t>(top)] = 1e-300;
    for (int k = top; k >= 1; --k) {
        const auto uk = static_cast<std::size_t>(k);
        j[uk - 1] = (2.0 * k / x) * j[uk] - j[uk + 1];
        if (std::abs(j[uk - 1]) > 1e250) {
            for (auto& v : j) v *= 1e-250;
        }
    }
    double norm = j[0];
    double neumann = 0.0;
    for (int k = 1; 2 * k <= top; ++k) {
        const double j2k = j[static_cast<std::size_t>(2 * k)];
        norm += 2.0 * j2k;
        neumann += (k % 2 ? -1.0 : 1.0) * j2k / k;
    }
    const double j0 = j[0] / norm;
    const double y0 = (2.0 / std::numbers::pi) * ((std::log(0.5 * x) + euler_gamma) * j0 - 2.0 * neumann / norm);
    return {j0, y0};
}

struct HankelPair {
    double p;
    double q;
};

inline HankelPair hankel_pq(double x) {
    // a_k = prod_{j<=k} (-(2j-1)^2) / (k! 8^k)
    double a = 1.0;
    double p = 1.0;
    double q = 0.0;
    double xk = 1.0;
    double last = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        a *= -(odd * odd) / (8.0 * k);
        xk *= x;
        const double term = a / xk;
        if (std::abs(term) > last) break;  // asymptotic series starts diverging
        last = std::abs(term);
        // P = sum (-1)^m a_{2m} / x^{2m}; Q = sum (-1)^m a_{2m+1} / x^{2m+1}
        if (k % 2 == 0) {
            p += ((k / 2) % 2 ? -1.0 : 1.0) * term;
        } else {
            q += (((k - 1) / 2) % 2 ? -1.0 : 1.0) * term;
        }
        if (last < 1e-18) break;
    }
    return {p, q};
}

}  // namespace detail

inline double j0(double x) {
    x = std::abs(x);
    if (x <= detail::series_limit) return detail::j0_series(x);
    if (x <= detail::hankel_limit) return detail::miller(x).j0;
    const auto [p, q] = detail::hankel_pq(x);
    const double chi = x - 0.25 * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

inline double y0(double x) {
    if (!(x > 0.0)) throw Error(ErrorKind::Domain, "bessel_y0 requires x > 0");
    if (x <= detail::series_limit) return detail::y0_series(x);
    if (x <= detail::hankel_limit) return detail::miller(x).y0;
    const auto [p, q] = detail::hankel_pq(x);
    const double chi = x - 0.25 * std::numbers::pi;
    return std::sqrt(2.0 / (std::numbers::pi * x)) * (p * std::sin(chi) + q * std::cos(chi));
}

}  // namespace revlambda::bessel
