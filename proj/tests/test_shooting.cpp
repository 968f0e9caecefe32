#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "revlambda/shooting.hpp"
#include "revlambda/spectral.hpp"

using namespace revlambda;

namespace {
constexpr double pi = std::numbers::pi;
}

TEST(Solve, HitsTargetAndStoresTrajectory) {
    const HalfPlanePoint p{1.0, 0.0}, q{1.0, 0.1};
    const auto rec = solve_boundary(p, q);
    EXPECT_LE(distance(rec.endpoint, q), 1e-10 * distance(p, q));
    EXPECT_EQ(rec.endpoint, rec.trajectory.endpoint());
    EXPECT_EQ(rec.trajectory.lambda, rec.lambda);
    EXPECT_EQ(rec.trajectory.theta0, rec.theta0);
    EXPECT_GT(rec.lambda, disc_lambda1(p.x));
}

TEST(Solve, RoundTripThroughEndpointMap) {
    const HalfPlanePoint p{1.0, 0.0}, q{1.03, 0.04};
    const auto rec = solve_boundary(p, q);
    const double s = 1.0 / std::sqrt(rec.lambda);
    const auto back = endpoint_map(s * std::cos(rec.theta0), s * std::sin(rec.theta0), p, default_floor(1.0),
                                   ShootingOptions{}.ode);
    EXPECT_LE(distance(back, q), 1e-10 * distance(p, q));
}

TEST(Solve, RadialTargetMatchesBesselReduction) {
    const HalfPlanePoint p{1.0, 0.0};
    for (double delta : {0.01, 0.05, 0.2}) {
        const auto rec = solve_boundary(p, {1.0 + delta, 0.0});
        EXPECT_NEAR(rec.theta0, 0.0, 1e-9);
        // the radial problem is the annulus (1, 1 + delta)
        const double lam = annulus_lambda1({1.0, 1.0 + delta});
        EXPECT_NEAR(rec.lambda, lam, 1e-8 * lam) << delta;
        EXPECT_NEAR(rec.lambda * delta * delta / (pi * pi), 1.0, 2.0 * delta);
    }
}

TEST(Solve, MirrorTarget) {
    const HalfPlanePoint p{1.0, 2.0};
    const auto a = solve_boundary(p, {1.03, 2.06});
    const auto b = solve_boundary(p, {1.03, 1.94});
    EXPECT_NEAR(a.theta0, -b.theta0, 1e-9);
    EXPECT_NEAR(a.lambda, b.lambda, 1e-9 * a.lambda);
}

TEST(Solve, SmallDistanceAsymptotics) {
    const HalfPlanePoint p{1.0, 0.0};
    for (double phi : {0.0, 0.7, pi / 2, 2.5}) {
        const double d = 1e-3;
        const auto rec = solve_boundary(p, {1.0 + d * std::cos(phi), d * std::sin(phi)});
        EXPECT_NEAR(std::sqrt(rec.lambda) * d, pi, 0.01 * pi);
    }
}

TEST(Solve, Preconditions) {
    const HalfPlanePoint p{1.0, 0.0};
    EXPECT_THROW(solve_boundary(p, p), Error);
    try {
        solve_boundary(p, {1.0, 5.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Domain);
    }
    ShootingOptions low;
    low.B = 1.0;  // below the disc eigenvalue
    EXPECT_THROW(solve_boundary(p, {1.0, 0.1}, low), Error);
}

TEST(Solve, SolutionIsCriticalUnderRefinement) {
    const auto rec = solve_boundary({1.0, 0.0}, {1.0, 0.1});
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n : {128, 256, 512}) {
        const auto curve = arclength_reparametrize(trajectory_curve(rec.trajectory, n));
        const auto spec = lambda1(curve);
        EXPECT_NEAR(spec.lambda1, rec.lambda, 1e-3 * rec.lambda);
        const double r = euler_lagrange_residual(curve, spec).relative;
        EXPECT_LT(r, prev);
        prev = r;
    }
}

TEST(Scan, CloseTargetHasOneClass) {
    const auto rep = uniqueness_scan({1.0, 0.0}, {1.0, 0.05}, 8);
    EXPECT_EQ(rep.attempted, 8u);
    EXPECT_EQ(rep.converged, 8u);
    ASSERT_EQ(rep.classes.size(), 1u);
    EXPECT_EQ(rep.class_sizes[0], 8u);
}

TEST(Scan, MirrorTargetsGiveMirrorClasses) {
    const auto a = uniqueness_scan({1.0, 0.0}, {1.03, 0.04}, 8);
    const auto b = uniqueness_scan({1.0, 0.0}, {1.03, -0.04}, 8);
    ASSERT_EQ(a.classes.size(), 1u);
    ASSERT_EQ(b.classes.size(), 1u);
    EXPECT_NEAR(a.classes[0].theta0, -b.classes[0].theta0, 1e-8);
    EXPECT_NEAR(a.classes[0].lambda, b.classes[0].lambda, 1e-8 * a.classes[0].lambda);
}

TEST(Scan, RejectsCoincidentTarget) {
    EXPECT_THROW(uniqueness_scan({1.0, 0.0}, {1.0, 0.0}, 8), Error);
}

TEST(Scan, AngleGap) {
    EXPECT_NEAR(angle_gap(0.1, 2 * pi - 0.1), 0.2, 1e-15);
    EXPECT_NEAR(angle_gap(-pi, pi), 0.0, 1e-15);
}

TEST(Sweep, SmallRadiiAreSingleClass) {
    const auto s = single_class_sweep({1.0, 0.0}, pi / 2, {0.02, 0.05}, 4);
    ASSERT_EQ(s.class_counts.size(), 2u);
    EXPECT_EQ(s.class_counts[0], 1u);
    EXPECT_EQ(s.class_counts[1], 1u);
    EXPECT_EQ(s.largest_single_class, 0.05);
}
