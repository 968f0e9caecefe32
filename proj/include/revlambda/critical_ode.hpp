#pragma once

// Initial value problem for critical profiles. With v the radial
// eigenfunction along the unit-speed curve (F, G) and theta its tangent angle:
//
//     v'' = -(cos(theta) / F) v' - lambda v
//     theta' = sin(theta) (v'^2 - lambda v^2) / (F (v'^2 + lambda v^2))
//     F' = cos(theta),  G' = sin(theta)
//
// v(0) = 0, v'(0) = 1, theta(0) = Theta, (F, G)(0) = p, integrated to the
// first zero L of v. The rescaled form in sigma = lambda^{-1/2}
//
//     v0'' = -sigma cos(theta0) / (p1 + sigma F0) v0' - v0
//     theta0' = sigma sin(theta0) (v0'^2 - v0^2) / ((p1 + sigma F0)(v0'^2 + v0^2))
//
// is regular at sigma = 0, where v0 = sin t and the endpoint is pi (cos, sin).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include "revlambda/error.hpp"
#include "revlambda/geometry.hpp"
#include "revlambda/ode.hpp"
#include "revlambda/reference_spectra.hpp"

namespace revlambda {

// Component order of the 5-state vector.
enum : std::size_t { kV = 0, kVp = 1, kTheta = 2, kF = 3, kG = 4 };

using OdeState = ode::State<5>;

/// Common storage: accepted grid, states, derivatives and dense segments.
struct TrajectoryData {
    std::vector<double> grid;
    std::vector<OdeState> states;
    std::vector<OdeState> rates;  // right-hand side at each grid point
    std::vector<ode::DenseSegment<5>> segments;
    double L = 0.0;

    OdeState at(double t) const {
        if (segments.empty()) return states.front();
        t = std::clamp(t, 0.0, L);
        auto it = std::lower_bound(segments.begin(), segments.end(), t,
                                   [](const ode::DenseSegment<5>& s, double x) { return s.t1() < x; });
        if (it == segments.end()) --it;
        return (*it)(t);
    }

    const OdeState& final_state() const { return states.back(); }
};

struct CriticalTrajectory : TrajectoryData {
    double theta0 = 0.0;
    double lambda = 0.0;
    HalfPlanePoint p;

    HalfPlanePoint endpoint() const { return {final_state()[kF], final_state()[kG]}; }
};

struct RescaledTrajectory : TrajectoryData {
    double sigma = 0.0;
    double theta0 = 0.0;
    double p1 = 0.0;

    double L0() const { return L; }
    /// (F0, G0) at the first zero.
    HalfPlanePoint displacement() const { return {final_state()[kF], final_state()[kG]}; }
};

struct CriticalOptions {
    double tol = 1e-11;
    double horizon_safety = 2.0;
};

namespace detail {

struct ShotModel {
    // physical radius F = radius_offset + radius_scale * y[kF]
    double radius_offset;
    double radius_scale;
    double phase_weight;    // coefficient of v^2 in the phase quantity
    double horizon_factor;  // horizon = horizon_factor * sqrt(b / a)
};

inline double phase_of(const OdeState& y, double weight) { return weight * y[kV] * y[kV] + y[kVp] * y[kVp]; }

template <class Rhs>
TrajectoryData shoot_to_first_zero(Rhs rhs, const OdeState& y0, const ShotModel& model, const CriticalOptions& opt) {
    auto radius = [&](const OdeState& y) { return model.radius_offset + model.radius_scale * y[kF]; };
    ode::Dopri5<5, Rhs> solver(rhs, 0.0, y0, {opt.tol, opt.tol, std::numeric_limits<double>::infinity(), 2000000});

    TrajectoryData out;
    out.grid.push_back(0.0);
    out.states.push_back(y0);
    out.rates.push_back(solver.dy());
    double a_run = radius(y0), b_run = a_run;

    auto guard_state = [&](const OdeState& y, double t) {
        const double r = radius(y);
        if (!(r > 0.0)) {
            std::ostringstream msg;
            msg << "left half-plane: F = " << r << " at t = " << t;
            throw Error(ErrorKind::Guard, msg.str());
        }
        const double ph = phase_of(y, model.phase_weight);
        if (!(ph >= 1e-14)) {
            std::ostringstream msg;
            msg << "degenerate phase: lambda v^2 + v'^2 = " << ph << " at t = " << t;
            throw Error(ErrorKind::Guard, msg.str());
        }
    };

    for (;;) {
        try {
            solver.step();
        } catch (const Error& e) {
            // a collapsing step size next to the axis is the half-plane guard
            if (e.kind() == ErrorKind::Convergence && radius(solver.y()) < 1e-3 * b_run) {
                throw Error(ErrorKind::Guard, std::string("left half-plane: ") + e.what());
            }
            throw;
        }
        const auto& seg = solver.segment();
        const OdeState& y = solver.y();
        if (y[kV] <= 0.0) {
            // first zero inside this step: bisect the interpolant, then polish
            // with exact partial steps and Newton in t
            double lo = seg.t0, hi = seg.t1();
            for (int it = 0; it < 200 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                (seg.component(kV, mid) > 0.0 ? lo : hi) = mid;
            }
            double tz = 0.5 * (lo + hi);
            OdeState yz = solver.probe_from_segment(tz - seg.t0);
            for (int it = 0; it < 4 && std::abs(yz[kV]) > 1e-15 && yz[kVp] != 0.0; ++it) {
                tz = std::clamp(tz - yz[kV] / yz[kVp], seg.t0, seg.t1());
                yz = solver.probe_from_segment(tz - seg.t0);
            }
            guard_state(yz, tz);
            ode::DenseSegment<5> last = seg;
            out.segments.push_back(last);
            out.grid.push_back(tz);
            out.states.push_back(yz);
            OdeState dz;
            rhs(tz, yz, dz);
            out.rates.push_back(dz);
            out.L = tz;
            return out;
        }
        guard_state(y, solver.t());
        a_run = std::min(a_run, radius(y));
        b_run = std::max(b_run, radius(y));
        out.segments.push_back(seg);
        out.grid.push_back(solver.t());
        out.states.push_back(y);
        out.rates.push_back(solver.dy());
        const double horizon = model.horizon_factor * std::sqrt(b_run / a_run);
        if (solver.t() > horizon) {
            std::ostringstream msg;
            msg << "no zero before bound: t = " << solver.t() << " exceeds " << horizon;
            throw Error(ErrorKind::Guard, msg.str());
        }
    }
}

inline double disc_limit_sigma(double p1, double safety) { return 1.0 / std::sqrt(disc_lambda1(p1) * safety); }

inline RescaledTrajectory rescaled_unchecked(double sigma, double theta0, double p1, const CriticalOptions& opt) {
    RescaledTrajectory out;
    out.sigma = sigma;
    out.theta0 = theta0;
    out.p1 = p1;
    const OdeState y0{0.0, 1.0, theta0, 0.0, 0.0};
    if (sigma == 0.0) {
        // closed form: v0 = sin t, theta0 constant, straight segment of length pi
        const std::size_t m = 1024;
        const double c = std::cos(theta0), s = std::sin(theta0);
        for (std::size_t i = 0; i <= m; ++i) {
            const double t = std::numbers::pi * static_cast<double>(i) / m;
            out.grid.push_back(t);
            out.states.push_back({i == m ? 0.0 : std::sin(t), std::cos(t), theta0, t * c, t * s});
            out.rates.push_back({std::cos(t), -std::sin(t), 0.0, c, s});
        }
        out.states.back()[kF] = std::numbers::pi * c;
        out.states.back()[kG] = std::numbers::pi * s;
        for (std::size_t i = 0; i < m; ++i) {
            // cubic Hermite in the quartic layout (r4 = 0)
            ode::DenseSegment<5> seg;
            seg.t0 = out.grid[i];
            seg.h = out.grid[i + 1] - out.grid[i];
            for (std::size_t k = 0; k < 5; ++k) {
                const double dy = out.states[i + 1][k] - out.states[i][k];
                const double bspl = seg.h * out.rates[i][k] - dy;
                seg.r[0][k] = out.states[i][k];
                seg.r[1][k] = dy;
                seg.r[2][k] = bspl;
                seg.r[3][k] = dy - seg.h * out.rates[i + 1][k] - bspl;
                seg.r[4][k] = 0.0;
            }
            out.segments.push_back(seg);
        }
        out.L = std::numbers::pi;
        return out;
    }
    auto rhs = [sigma, p1](double, const OdeState& y, OdeState& dy) {
        const double F = p1 + sigma * y[kF];
        const double c = std::cos(y[kTheta]), s = std::sin(y[kTheta]);
        const double a = y[kVp] * y[kVp], b = y[kV] * y[kV];
        dy[kV] = y[kVp];
        dy[kVp] = -sigma * c / F * y[kVp] - y[kV];
        dy[kTheta] = sigma * s * (a - b) / (F * (a + b));
        dy[kF] = c;
        dy[kG] = s;
    };
    ShotModel model{p1, sigma, 1.0, opt.horizon_safety * std::numbers::pi};
    static_cast<TrajectoryData&>(out) = shoot_to_first_zero(rhs, y0, model, opt);
    return out;
}

}  // namespace detail

/// Physical-scale integration to the first zero of v.
inline CriticalTrajectory integrate_critical(double theta0, double lambda, HalfPlanePoint p,
                                             const CriticalOptions& opt = {}) {
    if (!(opt.tol > 0.0)) throw Error(ErrorKind::Precondition, "integrate_critical: tol must be > 0");
    if (!(p.x > 0.0)) throw Error(ErrorKind::Precondition, "integrate_critical: p must satisfy p1 > 0");
    const double floor = disc_lambda1(p.x);
    if (!(lambda > floor)) {
        std::ostringstream msg;
        msg << "integrate_critical: lambda = " << lambda << " must exceed the disc eigenvalue " << floor;
        throw Error(ErrorKind::Precondition, msg.str());
    }
    auto rhs = [lambda](double, const OdeState& y, OdeState& dy) {
        const double c = std::cos(y[kTheta]), s = std::sin(y[kTheta]);
        const double a = y[kVp] * y[kVp], b = lambda * y[kV] * y[kV];
        dy[kV] = y[kVp];
        dy[kVp] = -c / y[kF] * y[kVp] - lambda * y[kV];
        dy[kTheta] = s * (a - b) / (y[kF] * (a + b));
        dy[kF] = c;
        dy[kG] = s;
    };
    const OdeState y0{0.0, 1.0, theta0, p.x, p.y};
    detail::ShotModel model{0.0, 1.0, lambda, opt.horizon_safety * std::numbers::pi / std::sqrt(lambda)};
    CriticalTrajectory out;
    static_cast<TrajectoryData&>(out) = detail::shoot_to_first_zero(rhs, y0, model, opt);
    out.theta0 = theta0;
    out.lambda = lambda;
    out.p = p;
    return out;
}

/// Rescaled integration; sigma must keep 1/sigma^2 above safety * disc eigenvalue.
inline RescaledTrajectory integrate_rescaled(double sigma, double theta0, double p1, const CriticalOptions& opt = {}) {
    if (!(p1 > 0.0)) throw Error(ErrorKind::Precondition, "integrate_rescaled: p1 must be > 0");
    const double limit = detail::disc_limit_sigma(p1, opt.horizon_safety);
    if (!(sigma >= 0.0) || !(sigma < limit)) {
        std::ostringstream msg;
        msg << "integrate_rescaled: sigma = " << sigma << " outside [0, " << limit << ")";
        throw Error(ErrorKind::Precondition, msg.str());
    }
    return detail::rescaled_unchecked(sigma, theta0, p1, opt);
}

/// Maps a rescaled solution (sigma > 0) to physical variables:
/// t = sigma t0, v = sigma v0, F = p1 + sigma F0, G = p2 + sigma G0.
inline CriticalTrajectory to_physical(const RescaledTrajectory& r, double p2) {
    if (!(r.sigma > 0.0)) throw Error(ErrorKind::Precondition, "to_physical: sigma must be > 0");
    const double s = r.sigma;
    auto map_state = [&](const OdeState& y) {
        return OdeState{s * y[kV], y[kVp], y[kTheta], r.p1 + s * y[kF], p2 + s * y[kG]};
    };
    auto map_rate = [&](const OdeState& d) {
        // d/dt = (1/sigma) d/dt0
        return OdeState{d[kV], d[kVp] / s, d[kTheta] / s, d[kF], d[kG]};
    };
    const OdeState scale{s, 1.0, 1.0, s, s};
    CriticalTrajectory out;
    out.theta0 = r.theta0;
    out.lambda = 1.0 / (s * s);
    out.p = {r.p1, p2};
    out.L = s * r.L;
    for (std::size_t i = 0; i < r.grid.size(); ++i) {
        out.grid.push_back(s * r.grid[i]);
        out.states.push_back(map_state(r.states[i]));
        out.rates.push_back(map_rate(r.rates[i]));
    }
    for (const auto& seg : r.segments) {
        ode::DenseSegment<5> m;
        m.t0 = s * seg.t0;
        m.h = s * seg.h;
        m.r[0] = map_state(seg.r[0]);
        for (std::size_t k = 1; k < 5; ++k)
            for (std::size_t i = 0; i < 5; ++i) m.r[k][i] = scale[i] * seg.r[k][i];
        out.segments.push_back(m);
    }
    out.states.front() = {0.0, 1.0, r.theta0, r.p1, p2};
    return out;
}

struct BergerResidual {
    double max_abs = 0.0;
    double relative = 0.0;  // max_abs over the largest single term
};

/// (v'^2 - lambda v^2)(theta' + sin(theta)/F) - 2 v'^2 theta' over the grid,
/// with theta' taken from the stored right-hand side.
inline BergerResidual berger_residual(const CriticalTrajectory& traj) {
    BergerResidual out;
    double scale = 0.0;
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const auto& y = traj.states[i];
        const double dth = traj.rates[i][kTheta];
        const double a = y[kVp] * y[kVp], b = traj.lambda * y[kV] * y[kV];
        const double curv = std::sin(y[kTheta]) / y[kF];
        const double r = (a - b) * (dth + curv) - 2.0 * a * dth;
        out.max_abs = std::max(out.max_abs, std::abs(r));
        scale = std::max({scale, std::abs(a - b) * (std::abs(dth) + std::abs(curv)), 2.0 * a * std::abs(dth)});
    }
    out.relative = scale > 0.0 ? out.max_abs / scale : 0.0;
    return out;
}

/// Samples (F, G) at t_i = i L / n from the dense output; nearly constant speed.
inline ProfileCurve trajectory_curve(const CriticalTrajectory& traj, std::size_t n) {
    if (n < 2) throw Error(ErrorKind::Precondition, "trajectory_curve: n >= 2");
    ProfileCurve c;
    c.p = traj.p;
    c.q = traj.endpoint();
    c.samples.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const auto y = traj.at(traj.L * static_cast<double>(i) / static_cast<double>(n));
        c.samples[i] = {y[kF], y[kG]};
    }
    c.samples.front() = c.p;
    c.samples.back() = c.q;
    return c;
}

/// Phi(x, y): endpoint of the critical curve with lambda^{-1/2} (cos, sin)(Theta) = (x, y).
/// Computed through the rescaled system as p + sigma (F0, G0)(L0), so Phi(0,0) = p.
inline HalfPlanePoint endpoint_map(double x, double y, HalfPlanePoint p, double B, const CriticalOptions& opt = {}) {
    if (!(p.x > 0.0)) throw Error(ErrorKind::Precondition, "endpoint_map: p1 must be > 0");
    const double floor = disc_lambda1(p.x);
    if (!(B > floor)) {
        std::ostringstream msg;
        msg << "endpoint_map: B = " << B << " must exceed the disc eigenvalue " << floor;
        throw Error(ErrorKind::Precondition, msg.str());
    }
    const double r = std::hypot(x, y);
    if (!(r * r < 1.0 / B)) {
        std::ostringstream msg;
        msg << "endpoint_map: (x, y) with radius " << r << " outside U (radius " << 1.0 / std::sqrt(B) << ")";
        throw Error(ErrorKind::Domain, msg.str());
    }
    if (r == 0.0) return p;
    const auto traj = detail::rescaled_unchecked(r, std::atan2(y, x), p.x, opt);
    const auto d = traj.displacement();
    return {p.x + r * d.x, p.y + r * d.y};
}

inline double default_floor(double p1) { return 2.0 * disc_lambda1(p1); }

}  // namespace revlambda
