#pragma once

// Dormand-Prince 5(4) with adaptive steps and the standard quartic dense
// output (Hairer, Norsett, Wanner, Solving ODEs I, II.6).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "revlambda/error.hpp"

namespace revlambda::ode {

template <std::size_t N>
using State = std::array<double, N>;

/// Interpolant on one accepted step [t0, t0 + h].
template <std::size_t N>
struct DenseSegment {
    double t0 = 0.0;
    double h = 0.0;
    std::array<State<N>, 5> r{};

    double t1() const { return t0 + h; }

    State<N> operator()(double t) const {
        const double s = h != 0.0 ? (t - t0) / h : 0.0;
        const double s1 = 1.0 - s;
        State<N> y;
        for (std::size_t i = 0; i < N; ++i)
            y[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        return y;
    }

    double component(std::size_t i, double t) const {
        const double s = h != 0.0 ? (t - t0) / h : 0.0;
        const double s1 = 1.0 - s;
        return r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
    }
};

struct StepControl {
    double rtol = 1e-10;
    double atol = 1e-10;
    double hmax = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 1000000;
};

template <std::size_t N, class Rhs>
class Dopri5 {
public:
    Dopri5(Rhs rhs, double t0, const State<N>& y0, StepControl ctl) : f_(std::move(rhs)), ctl_(ctl), t_(t0), y_(y0) {
        f_(t_, y_, k1_);
        h_ = initial_step();
    }

    double t() const { return t_; }
    const State<N>& y() const { return y_; }
    const State<N>& dy() const { return k1_; }
    const DenseSegment<N>& segment() const { return seg_; }
    std::size_t steps() const { return accepted_; }

    /// Advances by one accepted step and records its dense output.
    void step() {
        for (int tries = 0;; ++tries) {
            if (accepted_ + rejected_ >= ctl_.max_steps)
                throw Error(ErrorKind::Convergence, "ode: step budget exhausted at t=" + std::to_string(t_));
            const double h = std::min(h_, ctl_.hmax);
            if (!(h > 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t_))))
                throw Error(ErrorKind::Convergence, "ode: step size underflow at t=" + std::to_string(t_));
            State<N> y1, k7;
            const double err = attempt(h, y1, k7);
            if (err <= 1.0) {
                const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, tries ? 1.0 : 5.0);
                build_dense(h, y1, k7);
                t_ += h;
                y_ = y1;
                k1_ = k7;
                h_ = h * fac;
                ++accepted_;
                return;
            }
            ++rejected_;
            h_ = std::isfinite(err) ? h * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.25 * h;
        }
    }

    /// One unadapted step of size h from the current point (no state change).
    State<N> probe(double h) const {
        State<N> y1, k7;
        stages(h, y1, k7);
        return y1;
    }

    /// Step from the start of the last accepted segment by h (for event polish).
    State<N> probe_from_segment(double h) const {
        Dopri5 copy = *this;
        copy.t_ = seg_.t0;
        copy.y_ = seg_start_y_;
        copy.k1_ = seg_start_k_;
        return copy.probe(h);
    }

private:
    // Butcher tableau
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                            d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                            d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

    void stages(double h, State<N>& y1, State<N>& k7) const {
        State<N> tmp;
        auto combo = [&](std::initializer_list<std::pair<double, const State<N>*>> terms) {
            for (std::size_t i = 0; i < N; ++i) {
                double s = 0.0;
                for (const auto& [a, k] : terms) s += a * (*k)[i];
                tmp[i] = y_[i] + h * s;
            }
            return tmp;
        };
        f_(t_ + c2 * h, combo({{a21, &k1_}}), k2_);
        f_(t_ + c3 * h, combo({{a31, &k1_}, {a32, &k2_}}), k3_);
        f_(t_ + c4 * h, combo({{a41, &k1_}, {a42, &k2_}, {a43, &k3_}}), k4_);
        f_(t_ + c5 * h, combo({{a51, &k1_}, {a52, &k2_}, {a53, &k3_}, {a54, &k4_}}), k5_);
        f_(t_ + h, combo({{a61, &k1_}, {a62, &k2_}, {a63, &k3_}, {a64, &k4_}, {a65, &k5_}}), k6_);
        y1 = combo({{a71, &k1_}, {a73, &k3_}, {a74, &k4_}, {a75, &k5_}, {a76, &k6_}});
        f_(t_ + h, y1, k7);
    }

    double attempt(double h, State<N>& y1, State<N>& k7) {
        stages(h, y1, k7);
        double sum = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] + e7 * k7[i]);
            const double sc = ctl_.atol + ctl_.rtol * std::max(std::abs(y_[i]), std::abs(y1[i]));
            sum += (e / sc) * (e / sc);
        }
        const double err = std::sqrt(sum / N);
        return std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
    }

    void build_dense(double h, const State<N>& y1, const State<N>& k7) {
        seg_.t0 = t_;
        seg_.h = h;
        seg_start_y_ = y_;
        seg_start_k_ = k1_;
        for (std::size_t i = 0; i < N; ++i) {
            const double dy = y1[i] - y_[i];
            const double bspl = h * k1_[i] - dy;
            seg_.r[0][i] = y_[i];
            seg_.r[1][i] = dy;
            seg_.r[2][i] = bspl;
            seg_.r[3][i] = dy - h * k7[i] - bspl;
            seg_.r[4][i] =
                h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] + d7 * k7[i]);
        }
    }

    double initial_step() {
        // Hairer's starting step heuristic
        double d0 = 0.0, d1n = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = ctl_.atol + ctl_.rtol * std::abs(y_[i]);
            d0 += (y_[i] / sc) * (y_[i] / sc);
            d1n += (k1_[i] / sc) * (k1_[i] / sc);
        }
        d0 = std::sqrt(d0 / N);
        d1n = std::sqrt(d1n / N);
        double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
        h0 = std::min(h0, ctl_.hmax);
        State<N> y1, k2;
        for (std::size_t i = 0; i < N; ++i) y1[i] = y_[i] + h0 * k1_[i];
        f_(t_ + h0, y1, k2);
        double d2 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double sc = ctl_.atol + ctl_.rtol * std::abs(y_[i]);
            d2 += ((k2[i] - k1_[i]) / sc) * ((k2[i] - k1_[i]) / sc);
        }
        d2 = std::sqrt(d2 / N) / h0;
        const double dmax = std::max(d1n, d2);
        const double h1 = dmax <= 1e-15 ? std::max(1e-6, 1e-3 * h0) : std::pow(0.01 / dmax, 0.2);
        return std::min({100.0 * h0, h1, ctl_.hmax});
    }

    Rhs f_;
    StepControl ctl_;
    double t_;
    State<N> y_;
    State<N> k1_{};
    mutable State<N> k2_{}, k3_{}, k4_{}, k5_{}, k6_{};
    double h_ = 0.0;
    std::size_t accepted_ = 0, rejected_ = 0;
    DenseSegment<N> seg_;
    State<N> seg_start_y_{}, seg_start_k_{};
};

}  // namespace revlambda::ode
