#pragma once

// Direct maximization of lambda1 over profile curves from p to q.
//
// The iterate is a constant-speed polyline described by the tangent angles of
// its n chords. A step perturbs those angles by a smooth combination of
// Chebyshev modes, then rotates and scales the polyline in closed form so it
// ends exactly at q. lambda1 is maximized over the mode coefficients with a
// shifted Newton iteration on finite-difference derivatives; every few
// iterations the circle-inversion and chord-replacement moves are tried and
// kept only when they strictly raise lambda1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "revlambda/error.hpp"
#include "revlambda/geometry.hpp"
#include "revlambda/parallel.hpp"
#include "revlambda/reference_spectra.hpp"
#include "revlambda/shooting.hpp"
#include "revlambda/spectral.hpp"

namespace revlambda {

enum class InitialShape { Chord, ArcOutward, ArcInward, Custom };

struct MaximizerConfig {
    double gtol = 1e-8;   // on max |dlambda/dc_k| / lambda
    double rtol = 1e-2;   // on the relative Euler-Lagrange residual
    int max_iterations = 60;
    int move_every = 10;
    std::size_t modes = 16;
    double grad_step = 1e-3;     // times |q - p| / L, in radians
    double hessian_step = 1e-4;  // radians
    double sagitta = 0.2;        // arc initializations, relative to |q - p|
    InitialShape init = InitialShape::Chord;
    std::optional<ProfileCurve> custom_start;
    bool compare_shooting = false;
    ShootingOptions shooting;
};

struct ShootingMatch {
    double theta0 = 0.0;
    double lambda = 0.0;
    double lambda_rel_diff = 0.0;
    double hausdorff = 0.0;
};

struct MaximizerReport {
    ProfileCurve curve;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double Lambda_baseline = 0.0;
    double chord_lambda = 0.0;
    double el_residual = 0.0;  // max |res_F|, |res_G| of the weak-form residual
    double el_relative = 0.0;  // the same, normalized by the size of its terms
    double gradient_norm = 0.0;  // max |dlambda/dc_k| / lambda at the final iterate
    int iterations = 0;
    bool converged = false;
    std::size_t inversions_accepted = 0;
    std::size_t chord_moves_accepted = 0;
    std::size_t projections_accepted = 0;
    std::size_t bound_violations = 0;
    std::vector<double> lambda_history;
    std::optional<ShootingMatch> shooting_match;
};

namespace detail {

inline double chebyshev(std::size_t k, double x) { return std::cos(static_cast<double>(k) * std::acos(std::clamp(x, -1.0, 1.0))); }

/// Equal-chord polyline from p to q with the given chord angles, up to one
/// common rotation and scale. Returns nullopt when degenerate or leaving x > 0.
inline std::optional<ProfileCurve> close_polyline(HalfPlanePoint p, HalfPlanePoint q, const std::vector<double>& angles,
                                                  std::vector<double>* rotated = nullptr) {
    const std::size_t n = angles.size();
    double ex = 0.0, ey = 0.0;
    for (double a : angles) {
        ex += std::cos(a);
        ey += std::sin(a);
    }
    ex /= static_cast<double>(n);
    ey /= static_cast<double>(n);
    const double e = std::hypot(ex, ey);
    if (!(e > 1e-6)) return std::nullopt;
    const HalfPlanePoint d = q - p;
    const double chord = norm(d) / (e * static_cast<double>(n));
    const double alpha = std::atan2(d.y, d.x) - std::atan2(ey, ex);
    ProfileCurve c{p, q, std::vector<HalfPlanePoint>(n + 1)};
    c.samples[0] = p;
    HalfPlanePoint here = p;
    if (rotated) rotated->resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double a = angles[j] + alpha;
        if (rotated) (*rotated)[j] = a;
        here = here + chord * HalfPlanePoint{std::cos(a), std::sin(a)};
        c.samples[j + 1] = here;
        if (!(here.x > 0.0)) return std::nullopt;
    }
    c.samples[n] = q;
    if (!validate_curve(c).empty()) return std::nullopt;
    return c;
}

inline std::vector<double> chord_angles(const ProfileCurve& c) {
    std::vector<double> a(c.n());
    for (std::size_t j = 0; j < c.n(); ++j) {
        const auto d = c.samples[j + 1] - c.samples[j];
        a[j] = std::atan2(d.y, d.x);
    }
    // unwrap so modes see a continuous function
    for (std::size_t j = 1; j < a.size(); ++j) {
        while (a[j] - a[j - 1] > std::numbers::pi) a[j] -= 2.0 * std::numbers::pi;
        while (a[j] - a[j - 1] < -std::numbers::pi) a[j] += 2.0 * std::numbers::pi;
    }
    return a;
}

class ModeObjective {
public:
    ModeObjective(HalfPlanePoint p, HalfPlanePoint q, std::vector<double> base, std::size_t modes)
        : p_(p), q_(q), base_(std::move(base)), basis_(modes, std::vector<double>(base_.size())) {
        const double n = static_cast<double>(base_.size());
        for (std::size_t k = 0; k < modes; ++k)
            for (std::size_t j = 0; j < base_.size(); ++j)
                basis_[k][j] = chebyshev(k + 1, 2.0 * (static_cast<double>(j) + 0.5) / n - 1.0);
    }

    std::size_t dim() const { return basis_.size(); }

    std::vector<double> angles(const std::vector<double>& c) const {
        std::vector<double> a = base_;
        for (std::size_t k = 0; k < c.size(); ++k)
            if (c[k] != 0.0)
                for (std::size_t j = 0; j < a.size(); ++j) a[j] += c[k] * basis_[k][j];
        return a;
    }

    std::optional<ProfileCurve> curve(const std::vector<double>& c, std::vector<double>* rotated = nullptr) const {
        return close_polyline(p_, q_, angles(c), rotated);
    }

    double value(const std::vector<double>& c) const {
        const auto cv = curve(c);
        if (!cv) return -std::numeric_limits<double>::infinity();
        try {
            return lambda1_value(*cv);
        } catch (const Error&) {
            return -std::numeric_limits<double>::infinity();
        }
    }

private:
    HalfPlanePoint p_, q_;
    std::vector<double> base_;
    std::vector<std::vector<double>> basis_;
};

// Solves (-H + mu I) s = g with the smallest mu >= 0 (on a doubling ladder)
// for which the matrix is positive definite.
inline std::vector<double> shifted_newton_step(std::vector<std::vector<double>> H, const std::vector<double>& g) {
    const std::size_t m = g.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(H[i][i]));
    if (scale == 0.0) scale = 1.0;
    for (double mu = 0.0;; mu = mu == 0.0 ? 1e-8 * scale : 4.0 * mu) {
        std::vector<std::vector<double>> L(m, std::vector<double>(m, 0.0));
        bool ok = true;
        for (std::size_t i = 0; i < m && ok; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double s = -H[i][j] + (i == j ? mu : 0.0);
                for (std::size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
                if (i == j) {
                    if (!(s > 1e-12 * scale)) {
                        ok = false;
                        break;
                    }
                    L[i][i] = std::sqrt(s);
                } else {
                    L[i][j] = s / L[j][j];
                }
            }
        }
        if (!ok) {
            if (mu > 1e12 * scale) throw Error(ErrorKind::Convergence, "maximizer: Hessian shift diverged");
            continue;
        }
        std::vector<double> y(m), s(m);
        for (std::size_t i = 0; i < m; ++i) {
            double v = g[i];
            for (std::size_t k = 0; k < i; ++k) v -= L[i][k] * y[k];
            y[i] = v / L[i][i];
        }
        for (std::size_t i = m; i-- > 0;) {
            double v = y[i];
            for (std::size_t k = i + 1; k < m; ++k) v -= L[k][i] * s[k];
            s[i] = v / L[i][i];
        }
        return s;
    }
}

/// Least-squares fit of the angles by Chebyshev polynomials of degree <= degree.
inline std::vector<double> project_angles(const std::vector<double>& angles, std::size_t degree) {
    const std::size_t n = angles.size();
    const std::size_t m = std::min(degree + 1, n);
    std::vector<std::vector<double>> q(m, std::vector<double>(n));
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t j = 0; j < n; ++j)
            q[k][j] = chebyshev(k, 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(n) - 1.0);
        // modified Gram-Schmidt, twice for stability
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t l = 0; l < k; ++l) {
                double d = 0.0;
                for (std::size_t j = 0; j < n; ++j) d += q[l][j] * q[k][j];
                for (std::size_t j = 0; j < n; ++j) q[k][j] -= d * q[l][j];
            }
        double nn = 0.0;
        for (double v : q[k]) nn += v * v;
        nn = std::sqrt(nn);
        for (double& v : q[k]) v /= nn;
    }
    std::vector<double> fit(n, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double d = 0.0;
        for (std::size_t j = 0; j < n; ++j) d += q[k][j] * angles[j];
        for (std::size_t j = 0; j < n; ++j) fit[j] += d * q[k][j];
    }
    return fit;
}

struct Derivatives {
    double value = 0.0;
    std::vector<double> grad;
    std::vector<std::vector<double>> hess;
};

inline Derivatives mode_derivatives(const ModeObjective& obj, double gstep, double hstep, bool with_hessian) {
    const std::size_t m = obj.dim();
    Derivatives d;
    d.grad.assign(m, 0.0);
    // evaluation plan: center, +-gstep and +-2 gstep along e_k (fourth-order
    // gradient), and for the Hessian +-hstep e_k and the four corners per pair
    struct Eval {
        std::vector<double> c;
        double f = 0.0;
    };
    std::vector<Eval> evals;
    auto add = [&](std::initializer_list<std::pair<std::size_t, double>> entries) {
        Eval e{std::vector<double>(m, 0.0)};
        for (auto [k, v] : entries) e.c[k] += v;
        evals.push_back(std::move(e));
        return evals.size() - 1;
    };
    const std::size_t center = add({});
    std::vector<std::size_t> gp(m), gm(m), gp2(m), gm2(m), hp(m), hm(m);
    std::vector<std::vector<std::array<std::size_t, 4>>> corner(m, std::vector<std::array<std::size_t, 4>>(m));
    for (std::size_t k = 0; k < m; ++k) {
        gp[k] = add({{k, gstep}});
        gm[k] = add({{k, -gstep}});
        gp2[k] = add({{k, 2.0 * gstep}});
        gm2[k] = add({{k, -2.0 * gstep}});
    }
    if (with_hessian) {
        for (std::size_t k = 0; k < m; ++k) {
            hp[k] = add({{k, hstep}});
            hm[k] = add({{k, -hstep}});
            for (std::size_t l = 0; l < k; ++l) {
                corner[k][l] = {add({{k, hstep}, {l, hstep}}), add({{k, hstep}, {l, -hstep}}),
                                add({{k, -hstep}, {l, hstep}}), add({{k, -hstep}, {l, -hstep}})};
            }
        }
    }
    parallel_for(evals.size(), [&](std::size_t i) { evals[i].f = obj.value(evals[i].c); });
    d.value = evals[center].f;
    for (std::size_t k = 0; k < m; ++k) d.grad[k] = (8.0 * (evals[gp[k]].f - evals[gm[k]].f) - (evals[gp2[k]].f - evals[gm2[k]].f)) / (12.0 * gstep);
    if (with_hessian) {
        d.hess.assign(m, std::vector<double>(m, 0.0));
        const double h2 = hstep * hstep;
        for (std::size_t k = 0; k < m; ++k) {
            d.hess[k][k] = (evals[hp[k]].f - 2.0 * d.value + evals[hm[k]].f) / h2;
            for (std::size_t l = 0; l < k; ++l) {
                const auto& c = corner[k][l];
                const double v = (evals[c[0]].f - evals[c[1]].f - evals[c[2]].f + evals[c[3]].f) / (4.0 * h2);
                d.hess[k][l] = d.hess[l][k] = v;
            }
        }
    }
    return d;
}

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline ProfileCurve arc_between(HalfPlanePoint p, HalfPlanePoint q, double sagitta, std::size_t n) {
    // circular arc through p and q whose midpoint sits `sagitta` off the chord
    // along the normal (+x side of the chord direction when sagitta > 0)
    const HalfPlanePoint d = q - p;
    const double c = norm(d);
    HalfPlanePoint nrm{d.y / c, -d.x / c};
    if (nrm.x < 0.0 || (nrm.x == 0.0 && nrm.y < 0.0)) nrm = -1.0 * nrm;
    const double s = std::abs(sagitta);
    const double sign = sagitta >= 0.0 ? 1.0 : -1.0;
    const double radius = (c * c / 4.0 + s * s) / (2.0 * s);
    const HalfPlanePoint mid = p + 0.5 * d;
    const HalfPlanePoint center = mid + (sign * (s - radius)) * nrm;
    const double a0 = std::atan2(p.y - center.y, p.x - center.x);
    double a1 = std::atan2(q.y - center.y, q.x - center.x);
    // pick the sweep that passes through the apex
    const HalfPlanePoint apex = mid + (sign * s) * nrm;
    const double am = std::atan2(apex.y - center.y, apex.x - center.x);
    auto unwrap_near = [](double a, double ref) {
        while (a - ref > std::numbers::pi) a -= 2.0 * std::numbers::pi;
        while (a - ref < -std::numbers::pi) a += 2.0 * std::numbers::pi;
        return a;
    };
    const double amu = unwrap_near(am, a0);
    a1 = unwrap_near(a1, amu);
    auto arc = make_curve(n, [&](double t) {
        const double a = a0 + t * (a1 - a0);
        return HalfPlanePoint{center.x + radius * std::cos(a), center.y + radius * std::sin(a)};
    });
    arc.p = arc.samples.front() = p;
    arc.q = arc.samples.back() = q;
    return arc;
}

inline void two_circle_centers(HalfPlanePoint a, HalfPlanePoint b, double r, std::vector<HalfPlanePoint>& out) {
    const HalfPlanePoint d = b - a;
    const double c = norm(d);
    if (!(r > 0.5 * c)) return;
    const double h = std::sqrt(r * r - 0.25 * c * c);
    const HalfPlanePoint mid = a + 0.5 * d;
    const HalfPlanePoint nrm{-d.y / c, d.x / c};
    out.push_back(mid + h * nrm);
    out.push_back(mid - h * nrm);
}

struct InversionCandidate {
    CircleSpec circle;
    std::size_t i1, i2;
    double excursion;  // max r / r0 over the window
};

/// Windows whose interior lies in the annulus r0 < r < 2 r0 of an admissible
/// circle through the window endpoints.
inline std::vector<InversionCandidate> find_bulges(const ProfileCurve& c, std::size_t limit) {
    std::vector<InversionCandidate> found;
    const std::size_t n = c.n();
    std::vector<HalfPlanePoint> centers;
    for (std::size_t w = 4; w <= n / 2; w *= 2) {
        for (std::size_t i1 = 0; i1 + w <= n; i1 += std::max<std::size_t>(1, w / 2)) {
            const std::size_t i2 = i1 + w;
            const double chord = distance(c.samples[i1], c.samples[i2]);
            if (!(chord > 0.0)) continue;
            for (double f : {0.5001, 0.6, 0.8, 1.0}) {
                const double r0 = f * chord;
                centers.clear();
                two_circle_centers(c.samples[i1], c.samples[i2], r0, centers);
                for (const auto& ctr : centers) {
                    const CircleSpec circ{ctr, r0};
                    if (!circ.admissible()) continue;
                    double worst = 0.0;
                    bool ok = true;
                    for (std::size_t i = i1 + 1; i < i2 && ok; ++i) {
                        const double r = distance(c.samples[i], ctr) / r0;
                        ok = r > 1.0 && r < 2.0;
                        worst = std::max(worst, r);
                    }
                    if (ok) found.push_back({circ, i1, i2, worst});
                }
            }
        }
    }
    std::sort(found.begin(), found.end(),
              [](const InversionCandidate& a, const InversionCandidate& b) { return a.excursion > b.excursion; });
    if (found.size() > limit) found.resize(limit);
    return found;
}

/// Pairs (i, j), j >= i + 3, whose samples come closer than half a chord.
inline std::vector<std::pair<std::size_t, std::size_t>> find_near_crossings(const ProfileCurve& c, std::size_t limit) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto chords = chord_lengths(c);
    double mean = 0.0;
    for (double x : chords) mean += x;
    mean /= static_cast<double>(chords.size());
    const double tol = 0.5 * mean;
    for (std::size_t i = 0; i < c.samples.size() && out.size() < limit; ++i)
        for (std::size_t j = i + 3; j < c.samples.size(); ++j)
            if (distance(c.samples[i], c.samples[j]) < tol) {
                out.emplace_back(i, j);
                break;
            }
    return out;
}

}  // namespace detail

/// Baseline every connected candidate should beat: the better of the straight
/// chord and the disc whose radius is the larger boundary radius.
inline double maximizer_baseline(HalfPlanePoint p, HalfPlanePoint q, std::size_t n, double* chord_lambda = nullptr) {
    const double chord = lambda1_value(make_segment(p, q, n));
    if (chord_lambda) *chord_lambda = chord;
    return std::max(chord, disc_lambda1(std::max(p.x, q.x)));
}

inline ProfileCurve initial_curve(HalfPlanePoint p, HalfPlanePoint q, std::size_t n, const MaximizerConfig& cfg) {
    switch (cfg.init) {
        case InitialShape::Chord: return make_segment(p, q, n);
        case InitialShape::ArcOutward: return detail::arc_between(p, q, cfg.sagitta * distance(p, q), n);
        case InitialShape::ArcInward: return detail::arc_between(p, q, -cfg.sagitta * distance(p, q), n);
        case InitialShape::Custom:
            if (!cfg.custom_start) throw Error(ErrorKind::Precondition, "optimize: custom start requires a curve");
            return resample_equal_chords(*cfg.custom_start, n);
    }
    return make_segment(p, q, n);
}

inline MaximizerReport optimize(HalfPlanePoint p, HalfPlanePoint q, std::size_t n, const MaximizerConfig& cfg = {}) {
    if (!(p.x > 0.0) || !(q.x > 0.0)) throw Error(ErrorKind::Precondition, "optimize: p and q need x > 0");
    if (n < 32) throw Error(ErrorKind::Precondition, "optimize: n >= 32 required");
    if (!(distance(p, q) > 0.0)) throw Error(ErrorKind::Precondition, "optimize: p and q must differ");
    if (!(cfg.gtol > 0.0) || !(cfg.rtol > 0.0)) throw Error(ErrorKind::Precondition, "optimize: tolerances must be > 0");
    if (cfg.modes < 1) throw Error(ErrorKind::Precondition, "optimize: at least one mode");

    MaximizerReport rep;
    rep.Lambda_baseline = maximizer_baseline(p, q, n, &rep.chord_lambda);

    ProfileCurve start = initial_curve(p, q, n, cfg);
    start = arclength_reparametrize(start);
    std::vector<double> base = detail::chord_angles(start);
    {
        // snap to the exact closed equal-chord form
        std::vector<double> rotated;
        auto closed = detail::close_polyline(p, q, base, &rotated);
        if (!closed) throw Error(ErrorKind::Precondition, "optimize: initial curve leaves x > 0");
        base = rotated;
    }

    // the discrete eigenvalue overshoots by about (pi h)^2 / 12 relative
    const double bound_tol = 1e-6 + 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    auto check_bounds = [&](const ProfileCurve& c, double lam) {
        const auto e = radial_extent(c);
        const double L = curve_length(c);
        if (L * L > std::numbers::pi * std::numbers::pi * e.b / (e.a * lam) * (1.0 + bound_tol)) ++rep.bound_violations;
        if (e.b > e.a * (1.0 + 1e-9) && lam > annulus_lambda1({e.a, e.b}) * (1.0 + bound_tol)) ++rep.bound_violations;
    };

    const double dist = distance(p, q);
    double lam = 0.0;

    auto try_surgery = [&](const ProfileCurve& cur) {
        for (const auto& cand : detail::find_bulges(cur, 6)) {
            try {
                const auto inv = arclength_reparametrize(invert_in_circle(cur, cand.circle, cand.i1, cand.i2));
                const double v = lambda1_value(inv);
                if (v > lam) {
                    base = detail::chord_angles(inv);
                    ++rep.inversions_accepted;
                    return true;
                }
            } catch (const Error&) {
            }
        }
        for (const auto& [i1, i2] : detail::find_near_crossings(cur, 6)) {
            try {
                const auto cr = arclength_reparametrize(chord_replace(cur, i1, i2));
                const double v = lambda1_value(cr);
                if (v > lam) {
                    base = detail::chord_angles(cr);
                    ++rep.chord_moves_accepted;
                    return true;
                }
            } catch (const Error&) {
            }
        }
        return false;
    };
    // Corners left by the moves are invisible to the smooth modes; replacing
    // the angles by their polynomial fit removes them.
    auto try_projection = [&] {
        std::vector<double> rotated;
        const auto c = detail::close_polyline(p, q, detail::project_angles(base, cfg.modes), &rotated);
        if (!c) return false;
        double v = 0.0;
        try {
            v = lambda1_value(*c);
        } catch (const Error&) {
            return false;
        }
        if (!(v > lam * (1.0 + 1e-14))) return false;
        base = rotated;
        ++rep.projections_accepted;
        return true;
    };
    auto reclose = [&] {
        std::vector<double> rotated;
        if (detail::close_polyline(p, q, base, &rotated)) base = rotated;
    };

    int it = 0;
    for (;; ++it) {
        detail::ModeObjective obj(p, q, base, cfg.modes);
        double ex = 0.0, ey = 0.0;
        for (double a : base) {
            ex += std::cos(a);
            ey += std::sin(a);
        }
        const double L = dist * static_cast<double>(base.size()) / std::max(1e-300, std::hypot(ex, ey));
        const double gstep = cfg.grad_step * dist / L;
        auto der = detail::mode_derivatives(obj, gstep, cfg.hessian_step, false);
        lam = der.value;
        rep.lambda_history.push_back(lam);
        const auto cur = *obj.curve(std::vector<double>(cfg.modes, 0.0));
        check_bounds(cur, lam);
        rep.gradient_norm = detail::max_abs(der.grad) / lam;
        const bool flat = rep.gradient_norm < cfg.gtol;
        if (flat && euler_lagrange_residual(cur, lambda1(cur, false)).relative < cfg.rtol) {
            rep.converged = true;
            break;
        }
        if (it >= cfg.max_iterations) break;

        const bool scheduled = cfg.move_every > 0 && it > 0 && it % cfg.move_every == 0;
        if ((scheduled || flat) && try_surgery(cur)) {
            reclose();
            continue;
        }
        if (flat) {
            // stationary in the mode space but not critical
            if (try_projection()) continue;
            break;
        }

        der = detail::mode_derivatives(obj, gstep, cfg.hessian_step, true);
        auto step = detail::shifted_newton_step(der.hess, der.grad);
        const double cap = 0.5;
        const double big = detail::max_abs(step);
        if (big > cap)
            for (double& s : step) s *= cap / big;
        double slope = 0.0;
        for (std::size_t k = 0; k < step.size(); ++k) slope += der.grad[k] * step[k];
        double alpha = 1.0;
        double gained = 0.0;
        for (int h = 0; h < 30; ++h, alpha *= 0.5) {
            std::vector<double> c(step.size());
            for (std::size_t k = 0; k < c.size(); ++k) c[k] = alpha * step[k];
            const double v = obj.value(c);
            if (v >= lam + 1e-4 * alpha * slope && v >= lam) {
                std::vector<double> rotated;
                obj.curve(c, &rotated);
                base = rotated;
                gained = v - lam;
                break;
            }
        }
        if (!(gained > 1e-14 * lam)) {
            // no usable ascent direction left in the mode space
            if (try_surgery(cur)) {
                reclose();
                continue;
            }
            if (try_projection()) continue;
            break;
        }
    }

    rep.iterations = it;
    rep.curve = *detail::close_polyline(p, q, base);
    const auto spec = lambda1(rep.curve);
    rep.lambda1 = spec.lambda1;
    rep.lambda2 = spec.lambda2;
    const auto el = euler_lagrange_residual(rep.curve, spec);
    rep.el_residual = el.max_abs;
    rep.el_relative = el.relative;
    if (!rep.converged && rep.gradient_norm < cfg.gtol && rep.el_relative < cfg.rtol) rep.converged = true;

    if (cfg.compare_shooting) {
        try {
            const auto rec = solve_boundary(p, q, cfg.shooting);
            const auto shot = arclength_reparametrize(trajectory_curve(rec.trajectory, n));
            ShootingMatch m;
            m.theta0 = rec.theta0;
            m.lambda = rec.lambda;
            m.lambda_rel_diff = std::abs(rep.lambda1 - rec.lambda) / rec.lambda;
            m.hausdorff = hausdorff_distance(rep.curve, shot);
            rep.shooting_match = m;
        } catch (const Error&) {
            rep.shooting_match.reset();
        }
    }
    return rep;
}

// Improvement-move audit --------------------------------------------------

struct ReparametrizeMove {};
struct InversionMove {
    CircleSpec circle;
    std::size_t i1 = 0, i2 = 0;
};
struct ChordMove {
    std::size_t i1 = 0, i2 = 0;
};
using Move = std::variant<ReparametrizeMove, InversionMove, ChordMove>;

struct AuditResult {
    double lambda_before = 0.0;
    double lambda_after = 0.0;
    bool expectation_met = false;
    std::string expectation;
};

/// Applies the move and compares lambda1 before and after. Reparametrization
/// and chord replacement are expected not to lower lambda1 by more than
/// `tol`; an inversion is expected to raise it strictly.
inline AuditResult improvement_move_audit(const ProfileCurve& curve, const Move& move, double tol = 1e-8) {
    AuditResult out;
    out.lambda_before = lambda1_value(curve);
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ReparametrizeMove>) {
                out.lambda_after = lambda1_value(arclength_reparametrize(curve));
                out.expectation_met = out.lambda_after >= out.lambda_before - tol;
                out.expectation = "non-decrease within tolerance";
            } else if constexpr (std::is_same_v<T, InversionMove>) {
                out.lambda_after = lambda1_value(invert_in_circle(curve, m.circle, m.i1, m.i2));
                out.expectation_met = out.lambda_after > out.lambda_before;
                out.expectation = "strict increase";
            } else {
                out.lambda_after = lambda1_value(chord_replace(curve, m.i1, m.i2));
                out.expectation_met = out.lambda_after >= out.lambda_before - tol;
                out.expectation = "non-decrease within tolerance";
            }
        },
        move);
    return out;
}

/// The outward detour used to exercise the inversion move: vertical segment
/// (x0, 0) to (x0, 1) that leaves the circle of radius r0 about (x0, 0.5) and
/// bulges out by `height` before rejoining it.
struct BulgeFixture {
    ProfileCurve curve;
    InversionMove move;
};

inline BulgeFixture outward_bulge_fixture(double x0 = 1.0, double r0 = 0.1, double height = 0.05,
                                          std::size_t straight = 400, std::size_t arc = 200) {
    const HalfPlanePoint center{x0, 0.5};
    BulgeFixture f;
    auto& c = f.curve;
    c.p = {x0, 0.0};
    c.q = {x0, 1.0};
    const double below = 0.5 - r0;
    for (std::size_t i = 0; i <= straight; ++i) c.samples.push_back({x0, below * i / straight});
    for (std::size_t i = 1; i < arc; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(arc);
        const double a = std::numbers::pi * (t - 0.5);
        const double r = r0 + height * std::sin(std::numbers::pi * t);
        c.samples.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
    }
    for (std::size_t i = 0; i <= straight; ++i) c.samples.push_back({x0, 0.5 + r0 + below * i / straight});
    c.samples.back() = c.q;
    f.move = {CircleSpec{center, r0}, straight, straight + arc};
    return f;
}

// Disc-type family -----------------------------------------------------------

/// lambda1 of the flat profiles (d, 0) to (R, 0), sampled geometrically
/// (r_i = d (R/d)^{i/n}) so the small end is resolved.
inline std::vector<double> disc_type_bound(double R, const std::vector<double>& d_values, std::size_t n = 4096) {
    if (!(R > 0.0)) throw Error(ErrorKind::Precondition, "disc_type_bound: R > 0");
    std::vector<double> out;
    for (double d : d_values) {
        if (!(d > 0.0) || !(d < R)) throw Error(ErrorKind::Precondition, "disc_type_bound: need 0 < d < R");
        const double ratio = std::log(R / d);
        ProfileCurve c = make_curve(n, [&](double t) { return HalfPlanePoint{d * std::exp(ratio * t), 0.0}; });
        c.q = c.samples.back() = {R, 0.0};
        out.push_back(lambda1_value(c));
    }
    return out;
}

/// Limit of lambda(d) as d -> 0 from a least-squares fit
/// lambda = c0 + c1 u + c2 u^2, u = 1 / |log d|, evaluated at u = 0.
inline double extrapolate_disc_limit(const std::vector<double>& d_values, const std::vector<double>& lambdas) {
    const std::size_t m = d_values.size();
    if (m < 3 || lambdas.size() != m) throw Error(ErrorKind::Precondition, "extrapolate_disc_limit: need >= 3 points");
    // normal equations for the 3-parameter fit
    double A[3][3] = {}, b[3] = {};
    for (std::size_t i = 0; i < m; ++i) {
        const double u = 1.0 / std::abs(std::log(d_values[i]));
        const double row[3] = {1.0, u, u * u};
        for (int r = 0; r < 3; ++r) {
            b[r] += row[r] * lambdas[i];
            for (int c = 0; c < 3; ++c) A[r][c] += row[r] * row[c];
        }
    }
    for (int k = 0; k < 3; ++k) {
        int piv = k;
        for (int r = k + 1; r < 3; ++r)
            if (std::abs(A[r][k]) > std::abs(A[piv][k])) piv = r;
        std::swap(A[k], A[piv]);
        std::swap(b[k], b[piv]);
        for (int r = k + 1; r < 3; ++r) {
            const double f = A[r][k] / A[k][k];
            for (int c = k; c < 3; ++c) A[r][c] -= f * A[k][c];
            b[r] -= f * b[k];
        }
    }
    double x[3];
    for (int k = 2; k >= 0; --k) {
        double v = b[k];
        for (int c = k + 1; c < 3; ++c) v -= A[k][c] * x[c];
        x[k] = v / A[k][k];
    }
    return x[0];
}

}  // namespace revlambda
