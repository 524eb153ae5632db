#include "evcalib/calibration.hpp"
#include "evcalib/kinematics.hpp"
#include "evcalib/synth.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace evcalib;

namespace {

std::vector<Vec3> random_dirs(std::mt19937_64& rng, std::size_t n, bool planar) {
    std::vector<Vec3> v(n);
    for (auto& x : v) {
        x = oracle::random_unit(rng);
        if (planar) x = Vec3(x.x(), x.y(), 0.0).normalized();
    }
    return v;
}

std::vector<Vec3> rotate(const Mat3& r, const std::vector<Vec3>& v) {
    std::vector<Vec3> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = r * v[i];
    return out;
}

AssociatedPairs pairs_of(std::vector<Vec3> o, std::vector<Vec3> e) {
    AssociatedPairs p;
    p.v_o = std::move(o);
    p.v_e = std::move(e);
    return p;
}

Vec3 perturb(std::mt19937_64& rng, const Vec3& v, double sigma_rad) {
    std::normal_distribution<double> n(0.0, sigma_rad);
    return Rotation3::about_axis(oracle::random_unit(rng), std::abs(n(rng))) * v;
}

SimConfig polyline(double t_offset, double noise = 0.0) {
    SimConfig c;
    c.shape = Shape::Polyline;
    c.t_offset = t_offset;
    c.noise_sigma_o = c.noise_sigma_e = noise;
    c.r_gt = Rotation3::from_ypr(0.4, -0.2, 1.0);
    return c;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

TEST(Covariances, MatchBruteForceOracle) {
    std::mt19937_64 rng(1);
    const auto o = random_dirs(rng, 257, false), e = random_dirs(rng, 257, false);
    const auto c = covariances_of(pairs_of(o, e));
    const auto ref = oracle::brute_covariances(o, e);
    EXPECT_LT((c.cross - ref.cross).norm(), 1e-12);
    EXPECT_LT((c.auto_o - ref.auto_a).norm(), 1e-12);
    EXPECT_LT((c.auto_e - ref.auto_b).norm(), 1e-12);
    EXPECT_EQ(c.n, 257u);
}

TEST(Covariances, LinearRelation) {
    std::mt19937_64 rng(2);
    const Mat3 r = oracle::random_rotation(rng);
    const auto o = random_dirs(rng, 100, false);
    const auto c = covariances_of(pairs_of(o, rotate(r, o)));
    EXPECT_LT((c.cross - c.auto_o * r.transpose()).norm(), 1e-9);
    EXPECT_LT((c.auto_o - c.auto_o.transpose()).norm(), 1e-15);
}

TEST(Covariances, ConstantSeriesIsZero) {
    const std::vector<Vec3> o(10, Vec3(0.6, 0.8, 0.0)), e(10, Vec3::UnitZ());
    const auto c = covariances_of(pairs_of(o, e));
    EXPECT_EQ(c.cross.norm(), 0.0);
    EXPECT_EQ(c.auto_o.norm(), 0.0);
    EXPECT_EQ(c.auto_e.norm(), 0.0);
}

TEST(Covariances, InsufficientOverlap) {
    try {
        covariances_of(pairs_of({Vec3::UnitX(), Vec3::UnitY()}, {Vec3::UnitX(), Vec3::UnitY()}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "insufficient overlap");
    }
}

TEST(Covariances, SimulatorPlanarStructure) {
    SimConfig cfg = polyline(0.0, 0.02);
    cfg.seed = 5;
    const auto d = simulate(cfg);
    const auto c = covariances_at_lag(d.v_o_noisy, d.v_o_noisy, 0.0);
    std::vector<Vec3> dirs;
    for (const auto& s : d.v_o_noisy.samples()) dirs.push_back(s.dir.vec());
    const auto ref = oracle::brute_covariances(dirs, dirs);
    EXPECT_LT((c.auto_o - ref.auto_a).norm(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Mat3> es(c.auto_o);
    EXPECT_LT(es.eigenvalues()[0], 1e-15);
    EXPECT_GT(es.eigenvalues()[1], 0.05);
}

TEST(TraceCorrelation, MatchesWhitenedOracle) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Mat3 r = oracle::random_rotation(rng);
        auto o = random_dirs(rng, 200, false);
        std::vector<Vec3> e;
        for (const auto& v : rotate(r, o)) e.push_back(perturb(rng, v, 0.3));
        const auto c = covariances_of(pairs_of(o, e));
        const auto ref = oracle::brute_covariances(o, e);
        EXPECT_NEAR(trace_correlation(c, 1e-8), oracle::trace_correlation(ref, 1e-8), 1e-9);
    }
}

TEST(TraceCorrelation, PlanarCeiling) {
    std::mt19937_64 rng(4);
    const auto o = random_dirs(rng, 300, true);
    const auto c = covariances_of(pairs_of(o, o));
    EXPECT_NEAR(trace_correlation(c, 1e-8), std::sqrt(2.0 / 3.0), 1e-6);
    EXPECT_THROW(trace_correlation(c, 0.0), Error);
}

TEST(TraceCorrelation, RotationInvariantAndSymmetric) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        const bool planar = i % 2 == 0;
        const auto o = random_dirs(rng, 100, planar);
        std::vector<Vec3> e;
        const Mat3 r0 = oracle::random_rotation(rng);
        for (const auto& v : rotate(r0, o)) e.push_back(perturb(rng, v, 0.2));
        const Mat3 r = oracle::random_rotation(rng);
        const double base = trace_correlation(covariances_of(pairs_of(o, e)), 1e-8);
        const double rotated = trace_correlation(covariances_of(pairs_of(o, rotate(r, e))), 1e-8);
        const double swapped = trace_correlation(covariances_of(pairs_of(e, o)), 1e-8);
        EXPECT_LT(std::abs(base - rotated), 1e-9);
        EXPECT_LT(std::abs(base - swapped), 1e-9);
    }
}

TEST(TraceCorrelation, IndependentWhiteDirections) {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        const auto o = random_dirs(rng, 500, false), e = random_dirs(rng, 500, false);
        EXPECT_LT(trace_correlation(covariances_of(pairs_of(o, e)), 1e-8), 0.2);
    }
}

TEST(TemporalOffset, RecoversInjectedOffset) {
    const auto d = simulate(polyline(0.2));
    const auto off = find_temporal_offset(d.v_o_true, d.v_e_noisy);
    EXPECT_NEAR(off.t_d, 0.2, 0.005);
    EXPECT_EQ(off.curve.lags.size(), off.curve.values.size());
    for (double v : off.curve.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(TemporalOffset, ZeroOffset) {
    const auto d = simulate(polyline(0.0));
    EXPECT_LE(std::abs(find_temporal_offset(d.v_o_true, d.v_e_noisy).t_d), 0.005);
}

TEST(TemporalOffset, ShiftEquivariance) {
    const auto d = simulate(polyline(0.1));
    const auto base = find_temporal_offset(d.v_o_true, d.v_e_noisy);
    for (double delta : {-0.15, 0.05, 0.2}) {
        const auto moved = find_temporal_offset(d.v_o_true, d.v_e_noisy.shifted(delta));
        EXPECT_NEAR(moved.t_d, base.t_d - delta, 0.005) << delta;
    }
}

TEST(TemporalOffset, NoisyArcTrials) {
    const auto groups = experiment_groups(Shape::Arc);
    int good = 0;
    for (int i = 0; i < 20; ++i) {
        SimConfig c = make_trial(groups[0].base, 99, i);
        c.t_offset = 0.2;
        const auto d = simulate(c);
        const auto usable = filter_usable(d.v_o_noisy);
        const auto rep = calibrate(d.v_o_noisy, usable, d.v_e_noisy);
        good += std::abs(rep.t_d - 0.2) <= 0.01;
    }
    EXPECT_GE(good, 18);
}

TEST(TemporalOffset, Errors) {
    const VelocitySeries empty(Frame::Body);
    const auto d = simulate(polyline(0.0));
    EXPECT_THROW(find_temporal_offset(empty, d.v_e_noisy), Error);
    TemporalSearchConfig cfg;
    cfg.t_step = 0.0;
    EXPECT_THROW(find_temporal_offset(d.v_o_true, d.v_e_noisy, cfg), Error);
    // No overlap at any lag.
    try {
        find_temporal_offset(d.v_o_true, d.v_e_noisy.shifted(1000.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "no valid lag");
    }
}

TEST(Cca, NonPlanarExact) {
    std::mt19937_64 rng(10);
    for (int i = 0; i < 20; ++i) {
        const Mat3 r = oracle::random_rotation(rng);
        const auto e = random_dirs(rng, 200, false);
        const auto c = covariances_of(pairs_of(rotate(r, e), e));
        const auto est = rotation_cca_closed_form(c, 1e-12);
        EXPECT_LT(oracle::angle_deg(est.matrix(), r) * kDegToRad, 1e-6);
    }
}

TEST(Cca, IdentityRelation) {
    std::mt19937_64 rng(11);
    const auto e = random_dirs(rng, 200, false);
    const auto est = rotation_cca_closed_form(covariances_of(pairs_of(e, e)), 1e-12);
    EXPECT_LT((est.matrix() - Mat3::Identity()).norm(), 1e-9);
}

TEST(Cca, PlanarIsStillARotation) {
    std::mt19937_64 rng(12);
    const Mat3 r = oracle::random_rotation(rng);
    const auto o = random_dirs(rng, 200, true);
    const auto est = rotation_cca_closed_form(covariances_of(pairs_of(o, rotate(r.transpose(), o))), 1e-6);
    EXPECT_NEAR(est.matrix().determinant(), 1.0, 1e-9);
    EXPECT_LT((est.matrix() * est.matrix().transpose() - Mat3::Identity()).norm(), 1e-9);
}

TEST(Irls, IdentityPairs) {
    std::mt19937_64 rng(13);
    const auto v = random_dirs(rng, 10, false);
    const auto res = rotation_irls(v, v);
    EXPECT_LT(rotation_error_deg(res.r_oe, Rotation3()), 1e-9);
}

TEST(Irls, NoiseFreeRecovery) {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 20; ++i) {
        const Mat3 r = oracle::random_rotation(rng);
        const auto e = random_dirs(rng, 100, false);
        const auto res = rotation_irls(rotate(r, e), e);
        EXPECT_LT(rotation_error_deg(res.r_oe, Rotation3::project(r)), 1e-6);
        EXPECT_LT(res.stats.max, 1e-6);
    }
}

TEST(Irls, SingleUnitIterationIsClosedForm) {
    std::mt19937_64 rng(15);
    IrlsConfig one;
    one.max_iter = 1;
    for (int i = 0; i < 100; ++i) {
        const Mat3 r = oracle::random_rotation(rng);
        const auto e = random_dirs(rng, 50, i % 3 == 0);
        std::vector<Vec3> o;
        for (const auto& v : rotate(r, e)) o.push_back(perturb(rng, v, 0.05));
        const auto res = rotation_irls(o, e, one);
        EXPECT_EQ(res.iterations, 1);
        EXPECT_LT((res.r_oe.matrix() - oracle::horn_rotation(o, e)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Irls, OutliersHandledBetterThanUnweighted) {
    std::mt19937_64 rng(16);
    IrlsConfig one;
    one.max_iter = 1;
    std::vector<double> robust, plain;
    for (int trial = 0; trial < 100; ++trial) {
        const Mat3 r = oracle::random_rotation(rng);
        const auto e = random_dirs(rng, 100, false);
        std::vector<Vec3> o = rotate(r, e);
        for (std::size_t i = 0; i < o.size(); ++i)
            o[i] = i % 10 == 0 ? oracle::random_unit(rng) : perturb(rng, o[i], 1.0 * kDegToRad);
        const auto truth = Rotation3::project(r);
        robust.push_back(rotation_error_deg(rotation_irls(o, e).r_oe, truth));
        plain.push_back(rotation_error_deg(rotation_irls(o, e, one).r_oe, truth));
    }
    EXPECT_LT(median(robust), median(plain));
}

TEST(Irls, ReflectionInputStaysProper) {
    std::mt19937_64 rng(17);
    const auto e = random_dirs(rng, 30, false);
    std::vector<Vec3> o;
    for (const auto& v : e) o.push_back(Vec3(v.x(), v.y(), -v.z()));
    const auto res = rotation_irls(o, e);
    EXPECT_TRUE(Rotation3::is_valid(res.r_oe.matrix()));
}

TEST(Irls, DegenerateDirections) {
    const std::vector<Vec3> v(5, Vec3::UnitX());
    try {
        rotation_irls(v, v);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "degenerate directions");
    }
}

TEST(CanonicalCoefficients, ConsistentWithTraceCorrelation) {
    const auto d = simulate(polyline(0.0));
    const auto rep = calibrate(d.v_o_true, d.v_e_noisy);
    const auto c = covariances_at_lag(d.v_o_true, d.v_e_noisy, rep.t_d);
    const Vec3 rho = canonical_coefficients(c, rep.r_oe, 1e-8);
    EXPECT_GT(rho[0], 0.99);
    EXPECT_GT(rho[1], 0.99);
    const double r = trace_correlation(c, 1e-8);
    EXPECT_NEAR(r * r, rho.squaredNorm() / 3.0, 1e-9);
}

TEST(Calibrate, IdentityPipeline) {
    SimConfig cfg = polyline(0.0);
    cfg.r_gt = Rotation3();
    const auto d = simulate(cfg);
    const auto rep = calibrate(d.v_o_true, d.v_e_noisy);
    EXPECT_LT(rotation_error_deg(rep.r_oe, Rotation3()), 1e-6);
    EXPECT_LE(std::abs(rep.t_d), 0.005);
    EXPECT_EQ(rep.method, "VC");
}

TEST(Calibrate, SkipTemporalIsNoBetter) {
    const auto g = experiment_groups(Shape::Polyline)[1].base;
    std::vector<double> full, wota;
    for (int i = 0; i < 15; ++i) {
        const auto d = simulate(make_trial(g, 7, i));
        const auto usable = filter_usable(d.v_o_noisy);
        CalibrationConfig skip;
        skip.skip_temporal = true;
        full.push_back(rotation_error_deg(calibrate(d.v_o_noisy, usable, d.v_e_noisy).r_oe, d.r_gt));
        const auto w = calibrate(d.v_o_noisy, usable, d.v_e_noisy, skip);
        EXPECT_EQ(w.method, "VC-woTA");
        wota.push_back(rotation_error_deg(w.r_oe, d.r_gt));
    }
    EXPECT_LE(median(full), median(wota));
}

TEST(Calibrate, EmptyInput) {
    const VelocitySeries o(Frame::Body), e(Frame::Camera);
    try {
        calibrate(o, e);
        FAIL();
    } catch (const Error& err) {
        EXPECT_STREQ(err.what(), "insufficient overlap");
    }
}
