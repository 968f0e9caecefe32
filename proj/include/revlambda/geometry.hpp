#pragma once

// Profile curves in the open right half-plane {x > 0}. A curve (F, G) is
// stored as n+1 samples at uniform parameter values t_i = i/n; revolving it
// about the y-axis generates the surface whose spectrum the rest of the
// library studies.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "revlambda/error.hpp"

namespace revlambda {

/// Point of the meridian plane; x is the distance to the axis, y the height.
struct HalfPlanePoint {
    double x = 0.0;
    double y = 0.0;

    bool in_half_plane() const { return x > 0.0; }

    friend HalfPlanePoint operator+(HalfPlanePoint a, HalfPlanePoint b) { return {a.x + b.x, a.y + b.y}; }
    friend HalfPlanePoint operator-(HalfPlanePoint a, HalfPlanePoint b) { return {a.x - b.x, a.y - b.y}; }
    friend HalfPlanePoint operator*(double s, HalfPlanePoint a) { return {s * a.x, s * a.y}; }
    friend bool operator==(HalfPlanePoint a, HalfPlanePoint b) = default;
};

inline double dot(HalfPlanePoint a, HalfPlanePoint b) { return a.x * b.x + a.y * b.y; }
inline double norm(HalfPlanePoint a) { return std::hypot(a.x, a.y); }
inline double distance(HalfPlanePoint a, HalfPlanePoint b) { return norm(a - b); }

struct ProfileCurve {
    HalfPlanePoint p;
    HalfPlanePoint q;
    std::vector<HalfPlanePoint> samples;

    std::size_t n() const { return samples.empty() ? 0 : samples.size() - 1; }
};

/// Closed disc used by the inversion move. Admissible when 5 r <= x of center.
struct CircleSpec {
    HalfPlanePoint center;
    double radius = 0.0;

    bool admissible() const { return radius > 0.0 && 5.0 * radius <= center.x; }
};

struct Violation {
    std::size_t index = 0;
    std::string invariant;
};

struct RadialExtent {
    double a = 0.0;  // min F
    double b = 0.0;  // max F
};

/// Samples `shape(t)` at t_i = i/n; the endpoints are pinned to shape(0), shape(1).
inline ProfileCurve make_curve(std::size_t n, const std::function<HalfPlanePoint(double)>& shape) {
    if (n < 1) throw Error(ErrorKind::Precondition, "curve needs n >= 1");
    ProfileCurve c;
    c.p = shape(0.0);
    c.q = shape(1.0);
    c.samples.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) c.samples[i] = shape(static_cast<double>(i) / static_cast<double>(n));
    c.samples.front() = c.p;
    c.samples.back() = c.q;
    return c;
}

inline ProfileCurve make_segment(HalfPlanePoint p, HalfPlanePoint q, std::size_t n) {
    return make_curve(n, [&](double t) { return p + t * (q - p); });
}

inline std::vector<double> chord_lengths(const ProfileCurve& curve) {
    std::vector<double> out;
    out.reserve(curve.n());
    for (std::size_t i = 0; i + 1 < curve.samples.size(); ++i)
        out.push_back(distance(curve.samples[i], curve.samples[i + 1]));
    return out;
}

inline std::vector<Violation> validate_curve(const ProfileCurve& curve) {
    std::vector<Violation> out;
    const auto& s = curve.samples;
    if (s.size() < 2) {
        out.push_back({0, "at least two samples"});
        return out;
    }
    if (!(s.front() == curve.p)) out.push_back({0, "samples[0] = p"});
    if (!(s.back() == curve.q)) out.push_back({s.size() - 1, "samples[n] = q"});
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s[i].x > 0.0) || !std::isfinite(s[i].x) || !std::isfinite(s[i].y)) out.push_back({i, "x > 0"});
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        if (s[i] == s[i + 1]) out.push_back({i + 1, "consecutive samples distinct"});
    }
    return out;
}

inline void require_valid(const ProfileCurve& curve, const char* who) {
    const auto v = validate_curve(curve);
    if (v.empty()) return;
    std::ostringstream msg;
    msg << who << ": invalid curve, sample " << v.front().index << " violates '" << v.front().invariant << "'";
    if (v.size() > 1) msg << " (+" << v.size() - 1 << " more)";
    throw Error(ErrorKind::Precondition, msg.str());
}

inline double curve_length(const ProfileCurve& curve) {
    double total = 0.0;
    for (double c : chord_lengths(curve)) total += c;
    return total;
}

inline RadialExtent radial_extent(const ProfileCurve& curve) {
    RadialExtent e{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& s : curve.samples) {
        e.a = std::min(e.a, s.x);
        e.b = std::max(e.b, s.x);
    }
    return e;
}

namespace detail {

// Walks forward along a polyline and returns the first point whose Euclidean
// distance from the current point equals `chord`. Returns false when the
// polyline ends first.
class ChordWalker {
public:
    explicit ChordWalker(const std::vector<HalfPlanePoint>& pts) : pts_(pts), here_(pts.front()) {}

    bool step(double chord) {
        const double c2 = chord * chord;
        double u0 = u_;
        for (std::size_t s = seg_; s + 1 < pts_.size(); ++s, u0 = 0.0) {
            const HalfPlanePoint a = pts_[s];
            const HalfPlanePoint d = pts_[s + 1] - a;
            const HalfPlanePoint w = a - here_;
            const double qa = dot(d, d);
            if (qa == 0.0) continue;
            // A vertex on the circle up to rounding is the exit; on a sharp turn
            // the root below would otherwise pick the second crossing.
            if (u0 == 0.0 && s > seg_ && dot(w, w) >= c2 * (1.0 - 1e-12)) {
                seg_ = s;
                u_ = 0.0;
                here_ = a;
                return true;
            }
            if (dot(pts_[s + 1] - here_, pts_[s + 1] - here_) < c2) continue;
            // |w + u d|^2 = c^2, larger root; the walker is inside the circle at u0.
            const double qb = dot(w, d);
            const double qc = dot(w, w) - c2;
            const double disc = std::max(0.0, qb * qb - qa * qc);
            double u = (-qb + std::sqrt(disc)) / qa;
            u = std::clamp(u, u0, 1.0);
            seg_ = s;
            u_ = u;
            here_ = a + u * d;
            return true;
        }
        return false;
    }

    HalfPlanePoint here() const { return here_; }

private:
    const std::vector<HalfPlanePoint>& pts_;
    std::size_t seg_ = 0;
    double u_ = 0.0;
    HalfPlanePoint here_;
};

inline ProfileCurve arclength_uniform(const ProfileCurve& curve, std::size_t m) {
    const auto chords = chord_lengths(curve);
    std::vector<double> cum(chords.size() + 1, 0.0);
    for (std::size_t i = 0; i < chords.size(); ++i) cum[i + 1] = cum[i] + chords[i];
    const double total = cum.back();
    ProfileCurve out{curve.p, curve.q, std::vector<HalfPlanePoint>(m + 1)};
    for (std::size_t i = 0; i <= m; ++i) {
        const double s = total * static_cast<double>(i) / static_cast<double>(m);
        auto it = std::upper_bound(cum.begin(), cum.end(), s);
        std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), chords.size()) - 1;
        const double u = chords[k] > 0.0 ? (s - cum[k]) / chords[k] : 0.0;
        out.samples[i] = curve.samples[k] + std::clamp(u, 0.0, 1.0) * (curve.samples[k + 1] - curve.samples[k]);
    }
    out.samples.front() = curve.p;
    out.samples.back() = curve.q;
    return out;
}

}  // namespace detail

/// Resamples the polyline with m equal chords, every new sample lying on the
/// old polyline. The chord is found by bisection so that m chord steps from p
/// end exactly at q.
inline ProfileCurve resample_equal_chords(const ProfileCurve& curve, std::size_t m) {
    if (m < 1) throw Error(ErrorKind::Precondition, "resample: m >= 1 required");
    const double total = curve_length(curve);
    if (!(total > 0.0)) throw Error(ErrorKind::Degenerate, "constant curve");
    const auto& pts = curve.samples;

    // > 0 while the chord is too short to reach q in m steps.
    auto shortfall = [&](double chord) {
        detail::ChordWalker walk(pts);
        for (std::size_t i = 1; i < m; ++i)
            if (!walk.step(chord)) return -std::numeric_limits<double>::infinity();
        return distance(walk.here(), curve.q) - chord;
    };

    double hi = total / static_cast<double>(m);
    double lo = hi;
    for (int k = 0; k < 60 && shortfall(lo) <= 0.0; ++k) lo *= 0.5;
    if (shortfall(lo) <= 0.0) return detail::arclength_uniform(curve, m);  // p == q style loops
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (shortfall(mid) > 0.0 ? lo : hi) = mid;
    }
    const double chord = 0.5 * (lo + hi);

    ProfileCurve out{curve.p, curve.q, std::vector<HalfPlanePoint>(m + 1)};
    out.samples.front() = curve.p;
    detail::ChordWalker walk(pts);
    for (std::size_t i = 1; i < m; ++i) {
        walk.step(chord);
        out.samples[i] = walk.here();
    }
    out.samples.back() = curve.q;
    return out;
}

/// Constant-speed reparametrization with the same sample count.
inline ProfileCurve arclength_reparametrize(const ProfileCurve& curve) {
    return resample_equal_chords(curve, curve.n());
}

/// Inversion through the boundary circle: r -> r0^2 / r at fixed polar angle.
inline HalfPlanePoint inversion_image(HalfPlanePoint point, const CircleSpec& circle) {
    const HalfPlanePoint d = point - circle.center;
    const double r2 = dot(d, d);
    if (r2 == 0.0) throw Error(ErrorKind::Domain, "inversion of the circle center");
    return circle.center + (circle.radius * circle.radius / r2) * d;
}

inline ProfileCurve invert_in_circle(const ProfileCurve& curve, const CircleSpec& circle, std::size_t i1,
                                     std::size_t i2) {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::Precondition, "invert_in_circle: " + what); };
    if (!circle.admissible()) fail("circle must satisfy 5 r <= center.x");
    if (!(i1 < i2) || i2 > curve.n()) fail("need i1 < i2 <= n");
    const double r0 = circle.radius;
    const double on_tol = 1e-8 * r0;
    for (std::size_t i : {i1, i2}) {
        if (std::abs(distance(curve.samples[i], circle.center) - r0) > on_tol)
            fail("sample " + std::to_string(i) + " is not on the circle");
    }
    for (std::size_t i = i1 + 1; i < i2; ++i) {
        const double r = distance(curve.samples[i], circle.center);
        // samples on the circle are fixed points and allowed
        if (!(r >= r0 - on_tol)) fail("sample " + std::to_string(i) + " is inside the circle");
        if (!(r < 2.0 * r0)) fail("sample " + std::to_string(i) + " is not within 2 r0 of the center");
    }
    ProfileCurve out = curve;
    for (std::size_t i = i1 + 1; i < i2; ++i) out.samples[i] = inversion_image(curve.samples[i], circle);
    return out;
}

inline ProfileCurve chord_replace(const ProfileCurve& curve, std::size_t i1, std::size_t i2) {
    if (!(i1 < i2) || i2 > curve.n()) throw Error(ErrorKind::Precondition, "chord_replace: need i1 < i2 <= n");
    const HalfPlanePoint a = curve.samples[i1];
    const HalfPlanePoint b = curve.samples[i2];
    // The chord is convex, so it stays in x > 0 iff both ends do.
    if (!(a.x > 0.0) || !(b.x > 0.0)) throw Error(ErrorKind::Precondition, "chord_replace: chord leaves x > 0");
    ProfileCurve out = curve;
    const double span = static_cast<double>(i2 - i1);
    for (std::size_t i = i1 + 1; i < i2; ++i) out.samples[i] = a + (static_cast<double>(i - i1) / span) * (b - a);
    return out;
}

inline double distance_to_segment(HalfPlanePoint x, HalfPlanePoint a, HalfPlanePoint b) {
    const HalfPlanePoint d = b - a;
    const double dd = dot(d, d);
    const double u = dd > 0.0 ? std::clamp(dot(x - a, d) / dd, 0.0, 1.0) : 0.0;
    return distance(x, a + u * d);
}

/// Symmetric Hausdorff distance between the vertex sets and the opposite polylines.
inline double hausdorff_distance(const ProfileCurve& a, const ProfileCurve& b) {
    auto one_sided = [](const ProfileCurve& from, const ProfileCurve& to) {
        double worst = 0.0;
        for (const auto& x : from.samples) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < to.samples.size(); ++i)
                best = std::min(best, distance_to_segment(x, to.samples[i], to.samples[i + 1]));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one_sided(a, b), one_sided(b, a));
}

}  // namespace revlambda
