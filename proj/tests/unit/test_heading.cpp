#include "evcalib/heading.hpp"
#include "evcalib/synth.hpp"
#include "support/oracles.hpp"
#include "support/scene.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace evcalib;

namespace {

double angle_deg(const Vec3& a, const Vec3& b) { return angle_between(a, b) * kRadToDeg; }

/// Combined surface of a moving quadrant boundary whose L vertex ends at (end, end).
SurfaceMap l_corner_surface(int end) {
    EventStream s{96, 96, {}};
    const int arm = 30;
    for (int a = 10; a <= end; ++a) {
        const double t = 0.005 * a;
        for (int y = std::max(0, a - arm); y < a; ++y) s.events.push_back({t, a, y, true});
        for (int x = std::max(0, a - arm); x <= a; ++x) s.events.push_back({t, x, a, true});
    }
    SurfaceRenderer r(s, RepresentationConfig{});
    r.advance_to(0.005 * end);
    return r.combined();
}

SurfaceMap rich_surface(std::uint64_t seed) {
    EventSceneConfig sc;
    sc.speed = 1.0;
    sc.duration = 0.1;
    sc.seed = seed;
    const auto stream = generate_event_scene(sc);
    SurfaceRenderer r(stream, RepresentationConfig{});
    r.advance_to(0.08);
    return r.combined();
}

SurfaceMap shifted(const SurfaceMap& s, int dx) {
    SurfaceMap out(s.width, s.height, s.render_time);
    for (int y = 0; y < s.height; ++y)
        for (int x = dx; x < s.width; ++x) out.at(x, y) = s.at(x - dx, y);
    return out;
}

}  // namespace

TEST(Corners, ZeroSurfaceHasNone) {
    const SurfaceMap s(64, 48, 0.0);
    EXPECT_TRUE(detect_corners(s).empty());
}

TEST(Corners, FindsLVertex) {
    const int end = 60;
    const auto corners = detect_corners(l_corner_surface(end));
    ASSERT_FALSE(corners.empty());
    bool near = false;
    for (const auto& c : corners) near |= std::hypot(c.x - end, c.y - end) <= 2.0;
    EXPECT_TRUE(near);
}

TEST(Corners, CapAndOrdering) {
    CornerConfig cfg;
    cfg.max_corners = 10;
    const auto corners = detect_corners(rich_surface(1), cfg);
    ASSERT_LE(corners.size(), 10u);
    ASSERT_GE(corners.size(), 2u);
    for (std::size_t i = 1; i < corners.size(); ++i) EXPECT_GE(corners[i - 1].score, corners[i].score);
}

TEST(Corners, ScalarAndVectorResponsesAgree) {
    const auto s = rich_surface(2);
    const auto a = harris_response(s, CornerConfig{}, simd::scalar_kernels());
    const auto b = harris_response(s, CornerConfig{}, simd::active_kernels());
    EXPECT_EQ(a, b);
}

TEST(Matching, IdenticalSurfacesMatchThemselves) {
    const auto s = rich_surface(3);
    const auto corners = detect_corners(s);
    const auto m = match_corners(s, s, corners, corners);
    ASSERT_GT(m.size(), 20u);
    for (const auto& pm : m) {
        EXPECT_EQ(pm.a, pm.b);
        EXPECT_EQ(pm.distance, 0u);
    }
    const auto k = EventSceneConfig::default_intrinsics();
    for (const auto& c : match_features(s, s, corners, corners, k)) EXPECT_EQ(c.p1, c.p2);
}

TEST(Matching, TranslatedSurface) {
    const auto a = rich_surface(4);
    const auto b = shifted(a, 5);
    const auto ca = detect_corners(a), cb = detect_corners(b);
    const auto m = match_corners(a, b, ca, cb);
    const int margin = kPatchRadius + 10;
    int eligible = 0, good = 0;
    for (std::size_t i = 0; i < ca.size(); ++i) {
        if (ca[i].x < margin || ca[i].y < margin || ca[i].x > a.width - margin || ca[i].y > a.height - margin)
            continue;
        ++eligible;
        for (const auto& pm : m)
            if (pm.a == i && std::abs(cb[pm.b].x - ca[i].x - 5.0) < 1e-3 && std::abs(cb[pm.b].y - ca[i].y) < 1e-3)
                ++good;
    }
    ASSERT_GT(eligible, 20);
    EXPECT_GE(good, 0.8 * eligible);
}

TEST(Matching, TexturelessPair) {
    const SurfaceMap s(64, 48, 0.0);
    const auto k = EventSceneConfig::default_intrinsics();
    try {
        match_features(s, s, {}, {}, k);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "insufficient matches");
    }
}

TEST(Ransac, LateralTranslation) {
    const auto m = scene::translate(Vec3(0.1, 0, 0), 1);
    const auto est = solve_translation_ransac(m);
    EXPECT_LT(angle_deg(est.dir.vec(), Vec3::UnitX()), 1e-6 * kRadToDeg);
    EXPECT_EQ(est.inlier_count, 50);
}

TEST(Ransac, ForwardTranslation) {
    const auto m = scene::translate(Vec3(0, 0, 0.1), 2);
    const auto est = solve_translation_ransac(m);
    EXPECT_LT(angle_deg(est.dir.vec(), Vec3::UnitZ()), 1e-6 * kRadToDeg);
}

TEST(Ransac, NoiseAndOutliers) {
    scene::Options o;
    o.noise_px = 0.5;
    o.outlier_fraction = 0.2;
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 t = 0.1 * oracle::random_unit(rng);
        const auto m = scene::translate(t, 100 + trial, o);
        RansacConfig cfg;
        cfg.seed = trial;
        // About two residual sigmas for 0.5 px noise in both views.
        cfg.epipolar_tol = 3e-3;
        const auto est = solve_translation_ransac(m, cfg);
        EXPECT_LT(angle_deg(est.dir.vec(), t), 5.0) << trial;
        EXPECT_GE(est.inlier_ratio, 0.7) << trial;
    }
}

TEST(Ransac, NoiseFreeResidualsAndUnitNorm) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3 t = 0.2 * oracle::random_unit(rng);
        const auto m = scene::translate(t, trial);
        const auto est = solve_translation_ransac(m);
        EXPECT_NEAR(est.dir.vec().norm(), 1.0, 1e-9);
        for (const auto& c : m) {
            const Vec3 n = Vec3(c.p1.x(), c.p1.y(), 1).cross(Vec3(c.p2.x(), c.p2.y(), 1));
            EXPECT_LT(std::abs(est.dir.vec().dot(n) / n.norm()), 1e-9);
        }
    }
}

TEST(Ransac, Deterministic) {
    scene::Options o;
    o.noise_px = 0.5;
    o.outlier_fraction = 0.2;
    const auto m = scene::translate(Vec3(0.3, -0.1, 0.8), 9, o);
    RansacConfig cfg;
    cfg.seed = 1234;
    const auto a = solve_translation_ransac(m, cfg), b = solve_translation_ransac(m, cfg);
    EXPECT_EQ(a.dir.vec(), b.dir.vec());
    EXPECT_EQ(a.inlier_count, b.inlier_count);
}

TEST(Ransac, DepthScaleInvariant) {
    const Vec3 t(0.05, 0.02, 0.1);
    scene::Options doubled;
    doubled.depth_scale = 2.0;
    const auto a = solve_translation_ransac(scene::translate(t, 3));
    const auto b = solve_translation_ransac(scene::translate(2.0 * t, 3, doubled));
    EXPECT_LT(angle_between(a.dir.vec(), b.dir.vec()), 1e-6);
}

TEST(Ransac, DegenerateInputs) {
    EXPECT_THROW(solve_translation_ransac(std::vector<Correspondence>{}), Error);
    // Identical normals: every minimal sample is degenerate.
    const std::vector<Correspondence> same(5, Correspondence{Vec2(0.1, 0.0), Vec2(0.2, 0.0)});
    try {
        solve_translation_ransac(same);
        FAIL();
    } catch (const Error& e) {
        EXPECT_STREQ(e.what(), "heading unresolved");
    }
}

TEST(Ransac, PureOutliersRejected) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    std::vector<Correspondence> m;
    for (int i = 0; i < 60; ++i) m.push_back({Vec2(u(rng), u(rng)), Vec2(u(rng), u(rng))});
    RansacConfig cfg;
    cfg.epipolar_tol = 1e-4;
    EXPECT_THROW(solve_translation_ransac(m, cfg), Error);
}

TEST(Intrinsics, NormalizeProjectRoundTrip) {
    CameraIntrinsics k = EventSceneConfig::default_intrinsics();
    k.distortion = {-0.2, 0.05, 1e-3, -5e-4};
    for (const Vec2& px : {Vec2(10, 20), Vec2(319.5, 239.5), Vec2(600, 450)}) {
        const Vec2 back = k.project(k.normalize(px));
        EXPECT_LT((back - px).norm(), 1e-6);
    }
    CameraIntrinsics bad;
    bad.fx = 0.0;
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Pipeline, StationaryCameraGivesEmptySeries) {
    const EventStream s{640, 480, {}};
    EXPECT_TRUE(estimate_headings(s, EventSceneConfig::default_intrinsics(), 0.03).empty());
}

TEST(Pipeline, RejectsNonPositiveSpacing) {
    const EventStream s{640, 480, {{0.0, 1, 1, true}}};
    EXPECT_THROW(estimate_headings(s, EventSceneConfig::default_intrinsics(), 0.0), Error);
    EXPECT_THROW(estimate_headings(s, EventSceneConfig::default_intrinsics(), -0.1), Error);
}

TEST(Pipeline, LateralMotionEndToEnd) {
    EventSceneConfig sc;
    sc.direction = Vec3::UnitX();
    sc.speed = 1.0;
    sc.duration = 0.3;
    sc.seed = 11;
    const auto stream = generate_event_scene(sc);
    HeadingRunStats stats;
    const auto series = estimate_headings(stream, sc.intrinsics, 0.03, HeadingConfig{}, &stats);
    ASSERT_GE(series.size(), 5u);
    EXPECT_EQ(stats.pairs_succeeded, static_cast<int>(series.size()));
    for (const auto& s : series.samples()) EXPECT_LT(angle_deg(s.dir.vec(), Vec3::UnitX()), 5.0) << s.t;
}
