#pragma once

// Shooting for critical profiles between two boundary points: find the
// initial angle Theta and eigenvalue lambda whose critical trajectory from p
// ends at q, by Newton's method on the endpoint map in the coordinates
// (x, y) = lambda^{-1/2} (cos Theta, sin Theta).

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "revlambda/critical_ode.hpp"
#include "revlambda/error.hpp"
#include "revlambda/geometry.hpp"
#include "revlambda/parallel.hpp"

namespace revlambda {

struct EndpointRecord {
    double theta0 = 0.0;
    double lambda = 0.0;
    HalfPlanePoint endpoint;
    CriticalTrajectory trajectory;
    int iterations = 0;
    double miss = 0.0;  // |endpoint - q|
};

struct ShootingOptions {
    double B = 0.0;             // eigenvalue floor; <= 0 selects 2 * disc_lambda1(p1)
    double rel_tol = 1e-10;     // on |Phi - q| / |q - p|
    int max_iterations = 50;
    int max_halvings = 20;
    CriticalOptions ode{1e-13, 2.0};
};

struct NewtonIterate {
    double x, y, miss;
};

namespace detail {

inline double resolve_floor(HalfPlanePoint p, const ShootingOptions& opt) {
    return opt.B > 0.0 ? opt.B : default_floor(p.x);
}

// Phi without the U check; integration guards still apply.
inline HalfPlanePoint phi_raw(double x, double y, HalfPlanePoint p, const CriticalOptions& ode) {
    const double r = std::hypot(x, y);
    if (r == 0.0) return p;
    const auto d = rescaled_unchecked(r, std::atan2(y, x), p.x, ode).displacement();
    return {p.x + r * d.x, p.y + r * d.y};
}

inline std::string history_text(const std::vector<NewtonIterate>& h) {
    std::ostringstream s;
    s.precision(6);
    for (const auto& it : h) s << " (" << it.x << ", " << it.y << "; miss " << it.miss << ")";
    return s.str();
}

inline void check_target(HalfPlanePoint p, HalfPlanePoint q, double B) {
    if (!(p.x > 0.0) || !(q.x > 0.0)) throw Error(ErrorKind::Precondition, "solve_boundary: p and q need x > 0");
    const double floor = disc_lambda1(p.x);
    if (!(B > floor)) {
        std::ostringstream msg;
        msg << "solve_boundary: B = " << B << " must exceed the disc eigenvalue " << floor;
        throw Error(ErrorKind::Precondition, msg.str());
    }
    const double dist = distance(p, q);
    if (!(dist > 0.0)) throw Error(ErrorKind::Precondition, "solve_boundary: q must differ from p");
    const double limit = std::numbers::pi / std::sqrt(B);
    if (!(dist < limit)) {
        std::ostringstream msg;
        msg << "solve_boundary: |q - p| = " << dist << " outside the disc U image radius " << limit;
        throw Error(ErrorKind::Domain, msg.str());
    }
}

}  // namespace detail

/// Damped Newton from an explicit starting point (x0, y0).
inline EndpointRecord solve_boundary_from(HalfPlanePoint p, HalfPlanePoint q, double x0, double y0,
                                          const ShootingOptions& opt = {}) {
    const double B = detail::resolve_floor(p, opt);
    detail::check_target(p, q, B);
    const double dist = distance(p, q);
    const double r_max = 1.0 / std::sqrt(B);
    const double fd = std::max(1e-6, 1e-3 * dist) / std::numbers::pi;  // in (x, y) units
    const double target = opt.rel_tol * dist;

    auto inside = [&](double x, double y) { return x * x + y * y < r_max * r_max; };
    auto residual = [&](double x, double y) { return detail::phi_raw(x, y, p, opt.ode) - q; };

    double x = x0, y = y0;
    if (!inside(x, y)) throw Error(ErrorKind::Domain, "solve_boundary: starting point outside U");
    HalfPlanePoint res = residual(x, y);
    std::vector<NewtonIterate> history{{x, y, norm(res)}};
    auto fail = [&](const std::string& why) {
        throw Error(ErrorKind::Convergence, "inversion failed: " + why + "; iterates:" + detail::history_text(history));
    };

    int it = 0;
    for (; norm(res) > target; ++it) {
        if (it >= opt.max_iterations) fail("iteration cap reached");
        // central differences; one-sided near the boundary of U
        std::array<HalfPlanePoint, 2> col;
        for (int k = 0; k < 2; ++k) {
            const double dx = k == 0 ? fd : 0.0, dy = k == 0 ? 0.0 : fd;
            if (inside(x + dx, y + dy) && inside(x - dx, y - dy)) {
                col[k] = (1.0 / (2.0 * fd)) * (residual(x + dx, y + dy) - residual(x - dx, y - dy));
            } else {
                col[k] = (1.0 / fd) * (res - residual(x - dx, y - dy));
            }
        }
        const double det = col[0].x * col[1].y - col[1].x * col[0].y;
        const double jscale = std::max(norm(col[0]), norm(col[1]));
        if (!(std::abs(det) > 1e-10 * jscale * jscale)) fail("Jacobian near-singular");
        const double sx = -(col[1].y * res.x - col[1].x * res.y) / det;
        const double sy = -(-col[0].y * res.x + col[0].x * res.y) / det;

        double step = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, step *= 0.5) {
            const double nx = x + step * sx, ny = y + step * sy;
            if (!inside(nx, ny)) continue;
            HalfPlanePoint nres;
            try {
                nres = residual(nx, ny);
            } catch (const Error&) {
                continue;
            }
            if (norm(nres) < norm(res)) {
                x = nx;
                y = ny;
                res = nres;
                accepted = true;
                break;
            }
        }
        history.push_back({x, y, norm(res)});
        if (!accepted) fail("no decrease after step halving");
    }

    const double sigma = std::hypot(x, y);
    const double theta = std::atan2(y, x);
    EndpointRecord rec;
    rec.theta0 = theta;
    rec.lambda = 1.0 / (sigma * sigma);
    rec.trajectory = to_physical(detail::rescaled_unchecked(sigma, theta, p.x, opt.ode), p.y);
    rec.endpoint = rec.trajectory.endpoint();
    rec.iterations = it;
    rec.miss = distance(rec.endpoint, q);
    return rec;
}

/// Newton from the small-distance guess (x, y) = (q - p) / pi.
inline EndpointRecord solve_boundary(HalfPlanePoint p, HalfPlanePoint q, const ShootingOptions& opt = {}) {
    const auto d = q - p;
    return solve_boundary_from(p, q, d.x / std::numbers::pi, d.y / std::numbers::pi, opt);
}

struct ScanReport {
    std::vector<EndpointRecord> classes;  // one representative per (Theta, lambda) class
    std::vector<std::size_t> class_sizes;
    std::size_t attempted = 0;
    std::size_t converged = 0;
};

inline double angle_gap(double a, double b) {
    const double two_pi = 2.0 * std::numbers::pi;
    double d = std::fmod(std::abs(a - b), two_pi);
    return std::min(d, two_pi - d);
}

/// Newton from m starting angles 2 pi k / m at the guess lambda = (pi / |q - p|)^2,
/// then grouping of the converged solutions by (Theta mod 2 pi, lambda).
inline ScanReport uniqueness_scan(HalfPlanePoint p, HalfPlanePoint q, std::size_t m, const ShootingOptions& opt = {},
                                  double class_tol = 1e-6) {
    const double B = detail::resolve_floor(p, opt);
    detail::check_target(p, q, B);
    if (m < 1) throw Error(ErrorKind::Precondition, "uniqueness_scan: m >= 1");
    const double sigma0 = distance(p, q) / std::numbers::pi;
    std::vector<std::optional<EndpointRecord>> runs(m);
    parallel_for(m, [&](std::size_t k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(m);
        try {
            runs[k] = solve_boundary_from(p, q, sigma0 * std::cos(a), sigma0 * std::sin(a), opt);
        } catch (const Error&) {
        }
    });
    ScanReport out;
    out.attempted = m;
    for (auto& r : runs) {
        if (!r) continue;
        ++out.converged;
        bool merged = false;
        for (std::size_t c = 0; c < out.classes.size(); ++c) {
            const auto& rep = out.classes[c];
            if (angle_gap(rep.theta0, r->theta0) <= class_tol &&
                std::abs(rep.lambda - r->lambda) <= class_tol * rep.lambda) {
                ++out.class_sizes[c];
                merged = true;
                break;
            }
        }
        if (!merged) {
            out.classes.push_back(std::move(*r));
            out.class_sizes.push_back(1);
        }
    }
    return out;
}

struct RadiusSweep {
    std::vector<double> radii;
    std::vector<std::size_t> class_counts;
    double largest_single_class = 0.0;  // 0 when even the smallest radius fails
};

/// Scans targets q = p + r (cos phi, sin phi) for increasing r and records the
/// largest r (before the first failure) whose scan yields exactly one class.
inline RadiusSweep single_class_sweep(HalfPlanePoint p, double phi, const std::vector<double>& radii, std::size_t m,
                                      const ShootingOptions& opt = {}) {
    RadiusSweep out;
    bool intact = true;
    for (double r : radii) {
        const HalfPlanePoint q{p.x + r * std::cos(phi), p.y + r * std::sin(phi)};
        std::size_t classes = 0;
        try {
            classes = uniqueness_scan(p, q, m, opt).classes.size();
        } catch (const Error&) {
            classes = 0;
        }
        out.radii.push_back(r);
        out.class_counts.push_back(classes);
        if (intact && classes == 1) out.largest_single_class = r;
        if (classes != 1) intact = false;
    }
    return out;
}

}  // namespace revlambda
