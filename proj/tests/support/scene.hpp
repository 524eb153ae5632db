#pragma once

// Pinhole correspondences for a camera translating through the event-scene point cloud.

#include "evcalib/heading.hpp"
#include "evcalib/synth.hpp"
#include "support/oracles.hpp"

#include <random>
#include <vector>

namespace scene {

struct Options {
    int points = 50;
    double depth_scale = 1.0;
    double noise_px = 0.0;
    /// Exactly round(outlier_fraction * points) correspondences get a random second point.
    double outlier_fraction = 0.0;
};

/// Points from random_scene in view 1; view 2 is the camera moved by `t` with
/// the same orientation. Returns normalized coordinates.
inline std::vector<evcalib::Correspondence> translate(const evcalib::Vec3& t, std::uint64_t seed,
                                                      const Options& o = {}) {
    evcalib::EventSceneConfig sc;
    sc.num_points = 4 * o.points;
    sc.seed = seed;
    const auto cloud = evcalib::random_scene(sc);
    const double f = sc.intrinsics.fx;
    const double hx = 0.5 * sc.intrinsics.width / f, hy = 0.5 * sc.intrinsics.height / f;

    std::mt19937_64 rng(seed ^ 0xA5A5A5A5ull);
    std::normal_distribution<double> px(0.0, o.noise_px / f);
    std::uniform_real_distribution<double> ux(-hx, hx), uy(-hy, hy);
    const int outliers = static_cast<int>(std::lround(o.outlier_fraction * o.points));
    std::vector<evcalib::Correspondence> out;
    for (const auto& p0 : cloud) {
        if (static_cast<int>(out.size()) == o.points) break;
        const evcalib::Vec3 p = o.depth_scale * p0;
        const evcalib::Vec3 q = p - t;
        if (q.z() <= 0.1) continue;
        evcalib::Correspondence c{oracle::normalized(p), oracle::normalized(q)};
        if (o.noise_px > 0.0) {
            c.p1 += evcalib::Vec2(px(rng), px(rng));
            c.p2 += evcalib::Vec2(px(rng), px(rng));
        }
        if (static_cast<int>(out.size()) < outliers) c.p2 = evcalib::Vec2(ux(rng), uy(rng));
        out.push_back(c);
    }
    return out;
}

}  // namespace scene
