#include "evcalib/representation.hpp"
#include "support/edge.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace evcalib;

TEST(RenderTs, ZeroElapsedIsOne) {
    const EventStream s{8, 8, {{1.0, 3, 4, true}}};
    EXPECT_EQ(render_ts(s, 1.0, 0.03).at(3, 4), 1.0f);
}

TEST(RenderTs, OneDecayConstant) {
    const EventStream s{8, 8, {{1.0, 3, 4, true}}};
    EXPECT_FLOAT_EQ(render_ts(s, 1.03, 0.03).at(3, 4), static_cast<float>(std::exp(-1.0)));
}

TEST(RenderTs, SilentPixelIsZero) {
    const EventStream s{8, 8, {{1.0, 3, 4, true}}};
    const auto m = render_ts(s, 1.5, 0.03);
    EXPECT_EQ(m.at(0, 0), 0.0f);
    EXPECT_EQ(m.at(3, 3), 0.0f);
}

TEST(RenderTs, LatestEventWinsAndFutureIgnored) {
    const EventStream s{4, 4, {{0.0, 1, 1, true}, {0.5, 1, 1, false}, {2.0, 1, 1, true}}};
    EXPECT_FLOAT_EQ(render_ts(s, 0.53, 0.03).at(1, 1), static_cast<float>(std::exp(-1.0)));
}

TEST(RenderTs, MonotoneInElapsedTime) {
    const EventStream s{2, 1, {{0.0, 0, 0, true}}};
    float prev = 2.0f;
    for (double t = 0.0; t < 0.3; t += 0.01) {
        const float v = render_ts(s, t, 0.03).at(0, 0);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(RenderTs, RejectsBadTau) {
    const EventStream s{2, 2, {{0.0, 0, 0, true}}};
    EXPECT_THROW(render_ts(s, 0.0, 0.0), Error);
    EXPECT_THROW(render_ts(s, 0.0, -1.0), Error);
}

TEST(UpdateTos, FreshEvent) {
    const TosState st(9, 9, 2, 1);
    const auto out = update_tos(st, {0.0, 4, 4, true});
    EXPECT_EQ(out.at(4, 4), 255);
    EXPECT_EQ(out.at(3, 4), 0);
    EXPECT_EQ(out.at(6, 6), 0);
}

TEST(UpdateTos, NeighborDecrementsAndClamps) {
    TosState st(9, 9, 2, 1);
    st = update_tos(st, {0.0, 4, 4, true});
    st = update_tos(st, {0.1, 5, 4, true});
    EXPECT_EQ(st.at(4, 4), 254);
    EXPECT_EQ(st.at(5, 4), 255);
    EXPECT_EQ(st.at(7, 4), 0);
    // Outside the window of the second event: untouched.
    EXPECT_EQ(st.at(8, 8), 0);
}

TEST(UpdateTos, RejectsOutOfGrid) {
    const TosState st(4, 4, 1, 1);
    EXPECT_THROW(update_tos(st, {0.0, 4, 0, true}), Error);
    EXPECT_THROW(update_tos(st, {0.0, 0, -1, true}), Error);
}

TEST(UpdateTos, StaysInRangeUnderLargeDecrement) {
    TosState st(5, 5, 2, 200);
    for (int i = 0; i < 10; ++i) apply_tos_event(st, {0.01 * i, i % 5, (i * 3) % 5, true});
    for (auto v : st.values) EXPECT_LE(v, 255);
}

TEST(RenderCombined, Examples) {
    SurfaceMap ts(3, 1, 0.0);
    ts.values = {0.9f, 0.01f, 0.9f};
    TosState tos(3, 1, 1, 1);
    tos.values = {255, 255, 150};
    const auto out = render_combined(ts, tos, 0.1, 200);
    EXPECT_EQ(out.values[0], 1.0f);
    EXPECT_EQ(out.values[1], 0.0f);
    EXPECT_EQ(out.values[2], 0.0f);
}

TEST(RenderCombined, DimensionMismatch) {
    const SurfaceMap ts(3, 2, 0.0);
    const TosState tos(2, 3, 1, 1);
    EXPECT_THROW(render_combined(ts, tos, 0.1, 200), Error);
}

TEST(SurfaceRenderer, MatchesBatchRendering) {
    const auto stream = edge::sweep(40, 10, 200.0, 30);
    RepresentationConfig cfg;
    SurfaceRenderer r(stream, cfg);
    for (double t : {0.02, 0.05, 0.1, 0.15}) {
        r.advance_to(t);
        const auto batch = render_ts(stream, t, cfg.tau);
        EXPECT_EQ(r.time_surface().values, batch.values) << t;
        TosState tos(40, 10, cfg.tos_halfwidth, cfg.tos_decrement);
        for (const auto& e : stream.events)
            if (e.t <= t) apply_tos_event(tos, e);
        EXPECT_EQ(r.tos().values, tos.values) << t;
    }
    EXPECT_THROW(r.advance_to(0.1), Error);
}

TEST(SurfaceRenderer, PolarityFilter) {
    const EventStream s{4, 1, {{0.0, 0, 0, true}, {0.0, 2, 0, false}}};
    RepresentationConfig cfg;
    cfg.polarity = PolarityFilter::OnOnly;
    SurfaceRenderer r(s, cfg);
    r.advance_to(0.0);
    EXPECT_EQ(r.tos().at(0, 0), 255);
    EXPECT_EQ(r.tos().at(2, 0), 0);
}

TEST(SpeedInvariance, EdgeSupportOverlaps) {
    const RepresentationConfig cfg;
    for (double s : {50.0, 100.0, 200.0}) {
        const auto slow = edge::support_at(64, 32, s, 40, cfg);
        const auto fast = edge::support_at(64, 32, 4.0 * s, 40, cfg);
        EXPECT_GT(edge::iou(slow, fast), 0.9) << s;
    }
}

TEST(SpeedInvariance, TimeSurfaceAloneIsNotInvariant) {
    const RepresentationConfig cfg;
    auto ts_support = [&](double speed) {
        const auto stream = edge::sweep(64, 32, speed, 40);
        const auto m = render_ts(stream, 40 / speed, cfg.tau);
        std::vector<bool> out(m.values.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = m.values[i] > cfg.ts_threshold;
        return out;
    };
    EXPECT_LT(edge::iou(ts_support(100.0), ts_support(400.0)), 0.5);
}

TEST(Pgm, WritesHeaderAndBytes) {
    SurfaceMap m(3, 2, 0.0);
    m.values = {0.0f, 1.0f, 0.5f, 0.25f, 1.0f, 0.0f};
    const auto path = std::filesystem::temp_directory_path() / "evcalib_test_surface.pgm";
    write_pgm(m, path);
    std::ifstream in(path, std::ios::binary);
    const std::string data((std::istreambuf_iterator<char>(in)), {});
    const std::string header = "P5\n3 2\n255\n";
    ASSERT_EQ(data.size(), header.size() + 6);
    EXPECT_EQ(data.substr(0, header.size()), header);
    EXPECT_EQ(static_cast<unsigned char>(data[header.size() + 1]), 255);
    EXPECT_EQ(static_cast<unsigned char>(data[header.size() + 2]), 128);
    std::filesystem::remove(path);
}
