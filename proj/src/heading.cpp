#include "evcalib/heading.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace evcalib {
namespace {

struct PatternPair {
    int ax, ay, bx, by;
};

// Fixed BRIEF test pattern: 256 point pairs drawn from an isotropic Gaussian
// (sigma = patch/5) with a constant seed, clamped to the 31x31 patch.
const std::array<PatternPair, 256>& brief_pattern() {
    static const std::array<PatternPair, 256> pattern = [] {
        std::array<PatternPair, 256> p{};
        std::mt19937 rng(0x5eedb00fu);
        auto uniform = [&] { return (static_cast<double>(rng() >> 8) + 0.5) / 16777216.0; };
        auto gauss = [&] {
            const double u1 = uniform(), u2 = uniform();
            return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
        };
        const double sigma = (2.0 * kPatchRadius + 1.0) / 5.0;
        auto draw = [&] {
            return std::clamp(static_cast<int>(std::lround(gauss() * sigma)), -kPatchRadius, kPatchRadius);
        };
        for (auto& q : p) {
            do {
                q = {draw(), draw(), draw(), draw()};
            } while (q.ax == q.bx && q.ay == q.by);
        }
        return p;
    }();
    return pattern;
}

// Separable box sum with clamped borders: horizontal per row, then a
// vertical sum of 2r+1 clamped rows.
std::vector<float> box_sum(const std::vector<float>& img, int w, int h, int r, const simd::KernelTable& k) {
    std::vector<float> horiz(img.size());
    for (int y = 0; y < h; ++y)
        k.box_row(img.data() + static_cast<std::size_t>(y) * w, static_cast<std::size_t>(w), r,
                  horiz.data() + static_cast<std::size_t>(y) * w);
    std::vector<float> out(img.size());
    for (int y = 0; y < h; ++y) {
        float* dst = out.data() + static_cast<std::size_t>(y) * w;
        const float* first = horiz.data() + static_cast<std::size_t>(std::clamp(y - r, 0, h - 1)) * w;
        std::copy(first, first + w, dst);
        for (int d = -r + 1; d <= r; ++d) {
            const float* src = horiz.data() + static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * w;
            k.accumulate(src, static_cast<std::size_t>(w), dst);
        }
    }
    return out;
}

Vec3 homogeneous(const Vec2& p) { return {p.x(), p.y(), 1.0}; }

/// Smallest right singular vector of the stacked constraint rows.
Vec3 null_direction(const std::vector<Vec3>& rows) {
    Eigen::MatrixX3d a(static_cast<Eigen::Index>(rows.size()), 3);
    for (std::size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    Eigen::JacobiSVD<Eigen::MatrixX3d> svd(a, Eigen::ComputeFullV);
    return svd.matrixV().col(2).normalized();
}

/// Depths (lambda1, lambda2) of the midpoint triangulation lambda1*x1 - lambda2*x2 = t.
bool triangulate_depths(const Vec3& x1, const Vec3& x2, const Vec3& t, double& l1, double& l2) {
    const double a = x1.dot(x1), b = -x1.dot(x2), c = x2.dot(x2);
    const double det = a * c - b * b;
    if (std::abs(det) < 1e-12 * a * c) return false;
    const double r1 = x1.dot(t), r2 = -x2.dot(t);
    l1 = (c * r1 - b * r2) / det;
    l2 = (a * r2 - b * r1) / det;
    return true;
}

/// Epipolar inliers of the signed direction t that also triangulate in front of
/// both views. Pairs without a usable triangulation are kept.
std::vector<std::size_t> inliers_of(const Vec3& t, std::span<const Correspondence> m, double tol) {
    std::vector<std::size_t> in;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!(epipolar_residual(t, m[i]) < tol)) continue;
        double l1 = 0.0, l2 = 0.0;
        if (triangulate_depths(homogeneous(m[i].p1), homogeneous(m[i].p2), t, l1, l2) && (l1 <= 0.0 || l2 <= 0.0))
            continue;
        in.push_back(i);
    }
    return in;
}

}  // namespace

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw Error("focal lengths must be positive");
    if (width < 0 || height < 0) throw Error("image size must be non-negative");
}

Vec2 CameraIntrinsics::normalize(const Vec2& pixel) const {
    const double xd = (pixel.x() - cx) / fx;
    const double yd = (pixel.y() - cy) / fy;
    const auto [k1, k2, p1, p2] = distortion;
    if (k1 == 0.0 && k2 == 0.0 && p1 == 0.0 && p2 == 0.0) return {xd, yd};
    double x = xd, y = yd;
    for (int it = 0; it < 20; ++it) {
        const double r2 = x * x + y * y;
        const double radial = 1.0 + k1 * r2 + k2 * r2 * r2;
        const double dx = 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
        const double dy = p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
        x = (xd - dx) / radial;
        y = (yd - dy) / radial;
    }
    return {x, y};
}

Vec2 CameraIntrinsics::project(const Vec2& n) const {
    const auto [k1, k2, p1, p2] = distortion;
    const double x = n.x(), y = n.y();
    const double r2 = x * x + y * y;
    const double radial = 1.0 + k1 * r2 + k2 * r2 * r2;
    const double xd = x * radial + 2.0 * p1 * x * y + p2 * (r2 + 2.0 * x * x);
    const double yd = y * radial + p1 * (r2 + 2.0 * y * y) + 2.0 * p2 * x * y;
    return {fx * xd + cx, fy * yd + cy};
}

std::vector<float> harris_response(const SurfaceMap& surface, const CornerConfig& cfg,
                                   const simd::KernelTable& k) {
    const int w = surface.width, h = surface.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<float> response(n, 0.0f);
    if (w == 0 || h == 0) return response;

    std::vector<float> gx(n), gy(n);
    for (int y = 0; y < h; ++y) {
        const float* up = surface.values.data() + static_cast<std::size_t>(std::max(y - 1, 0)) * w;
        const float* row = surface.values.data() + static_cast<std::size_t>(y) * w;
        const float* down = surface.values.data() + static_cast<std::size_t>(std::min(y + 1, h - 1)) * w;
        k.gradient_row(up, row, down, static_cast<std::size_t>(w), gx.data() + static_cast<std::size_t>(y) * w,
                       gy.data() + static_cast<std::size_t>(y) * w);
    }
    std::vector<float> xx(n), yy(n), xy(n);
    k.structure_products(gx.data(), gy.data(), n, xx.data(), yy.data(), xy.data());
    const auto sxx = box_sum(xx, w, h, cfg.window_radius, k);
    const auto syy = box_sum(yy, w, h, cfg.window_radius, k);
    const auto sxy = box_sum(xy, w, h, cfg.window_radius, k);
    k.harris_response(sxx.data(), syy.data(), sxy.data(), n, cfg.harris_k, response.data());
    return response;
}

std::vector<Corner> detect_corners(const SurfaceMap& surface, const CornerConfig& cfg) {
    if (cfg.max_corners <= 0) return {};
    const int w = surface.width, h = surface.height;
    const auto resp = harris_response(surface, cfg);
    auto at = [&](int x, int y) { return resp[static_cast<std::size_t>(y) * w + x]; };
    const int r = cfg.nms_radius;

    std::vector<Corner> corners;
    for (int y = 1; y + 1 < h; ++y) {
        for (int x = 1; x + 1 < w; ++x) {
            const float v = at(x, y);
            if (!(v > cfg.threshold)) continue;
            bool is_max = true;
            for (int dy = -r; dy <= r && is_max; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -r; dx <= r; ++dx) {
                    const int xx = x + dx;
                    if (xx < 0 || xx >= w || (dx == 0 && dy == 0)) continue;
                    const float o = at(xx, yy);
                    // Plateau ties go to the first pixel in raster order.
                    const bool earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (o > v || (earlier && o == v)) {
                        is_max = false;
                        break;
                    }
                }
            }
            if (!is_max) continue;
            auto offset = [](float m, float c, float p) {
                const float denom = m - 2.0f * c + p;
                if (!(denom < 0.0f)) return 0.0;
                return std::clamp(0.5 * static_cast<double>(m - p) / static_cast<double>(denom), -0.5, 0.5);
            };
            corners.push_back({x + offset(at(x - 1, y), v, at(x + 1, y)), y + offset(at(x, y - 1), v, at(x, y + 1)), v});
        }
    }
    std::stable_sort(corners.begin(), corners.end(), [](const Corner& a, const Corner& b) { return a.score > b.score; });
    if (corners.size() > static_cast<std::size_t>(cfg.max_corners)) corners.resize(static_cast<std::size_t>(cfg.max_corners));
    return corners;
}

SurfaceMap smooth(const SurfaceMap& surface, int radius) {
    SurfaceMap out(surface.width, surface.height, surface.render_time);
    if (surface.values.empty()) return out;
    out.values = box_sum(surface.values, surface.width, surface.height, radius, simd::active_kernels());
    const float norm = 1.0f / static_cast<float>((2 * radius + 1) * (2 * radius + 1));
    for (float& v : out.values) v *= norm;
    return out;
}

simd::Descriptor256 describe(const SurfaceMap& s, int x, int y) {
    simd::Descriptor256 d;
    const auto& pattern = brief_pattern();
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        const PatternPair& p = pattern[i];
        if (s.at(x + p.ax, y + p.ay) < s.at(x + p.bx, y + p.by)) d.words[i >> 6] |= std::uint64_t{1} << (i & 63);
    }
    return d;
}

std::vector<PixelMatch> match_corners(const SurfaceMap& surf_a, const SurfaceMap& surf_b,
                                      std::span<const Corner> corners_a, std::span<const Corner> corners_b,
                                      const MatchConfig& cfg) {
    if (surf_a.width != surf_b.width || surf_a.height != surf_b.height) throw Error("surface dimension mismatch");
    const SurfaceMap sa = smooth(surf_a, cfg.blur_radius);
    const SurfaceMap sb = smooth(surf_b, cfg.blur_radius);

    struct Described {
        std::size_t index;
        int x, y;
        simd::Descriptor256 d;
    };
    auto describe_all = [](const SurfaceMap& s, std::span<const Corner> cs) {
        std::vector<Described> out;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            const int x = static_cast<int>(std::lround(cs[i].x));
            const int y = static_cast<int>(std::lround(cs[i].y));
            if (x < kPatchRadius || y < kPatchRadius || x >= s.width - kPatchRadius || y >= s.height - kPatchRadius)
                continue;
            out.push_back({i, x, y, describe(s, x, y)});
        }
        return out;
    };
    const auto da = describe_all(sa, corners_a);
    const auto db = describe_all(sb, corners_b);
    if (da.empty() || db.empty()) return {};

    std::vector<simd::Descriptor256> db_desc(db.size());
    std::transform(db.begin(), db.end(), db_desc.begin(), [](const Described& d) { return d.d; });

    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    const std::size_t na = da.size(), nb = db.size();
    std::vector<std::uint32_t> dist(na * nb);
    const auto& kernels = simd::active_kernels();
    for (std::size_t i = 0; i < na; ++i) {
        kernels.hamming256(da[i].d, db_desc.data(), nb, dist.data() + i * nb);
        for (std::size_t j = 0; j < nb; ++j) {
            if (std::abs(da[i].x - db[j].x) > cfg.max_disparity_px || std::abs(da[i].y - db[j].y) > cfg.max_disparity_px)
                dist[i * nb + j] = kNone;
        }
    }

    std::vector<std::size_t> best_a_for_b(nb, na);
    for (std::size_t j = 0; j < nb; ++j) {
        std::uint32_t best = kNone;
        for (std::size_t i = 0; i < na; ++i) {
            if (dist[i * nb + j] < best) {
                best = dist[i * nb + j];
                best_a_for_b[j] = i;
            }
        }
    }

    std::vector<PixelMatch> matches;
    for (std::size_t i = 0; i < na; ++i) {
        std::uint32_t best = kNone, second = kNone;
        std::size_t best_j = nb;
        for (std::size_t j = 0; j < nb; ++j) {
            const std::uint32_t d = dist[i * nb + j];
            if (d < best) {
                second = best;
                best = d;
                best_j = j;
            } else if (d < second) {
                second = d;
            }
        }
        if (best_j == nb || best_a_for_b[best_j] != i) continue;
        if (second != kNone && !(static_cast<double>(best) < cfg.ratio * static_cast<double>(second))) continue;
        matches.push_back({da[i].index, db[best_j].index, best});
    }
    return matches;
}

std::vector<Correspondence> match_features(const SurfaceMap& surf_a, const SurfaceMap& surf_b,
                                           std::span<const Corner> corners_a,
                                           std::span<const Corner> corners_b,
                                           const CameraIntrinsics& intrinsics, const MatchConfig& cfg) {
    const auto pixel = match_corners(surf_a, surf_b, corners_a, corners_b, cfg);
    if (pixel.size() < 2) throw Error("insufficient matches");
    std::vector<Correspondence> out;
    out.reserve(pixel.size());
    for (const auto& m : pixel) {
        const Corner& a = corners_a[m.a];
        const Corner& b = corners_b[m.b];
        out.push_back({intrinsics.normalize({a.x, a.y}), intrinsics.normalize({b.x, b.y})});
    }
    return out;
}

double epipolar_residual(const Vec3& t, const Correspondence& c) {
    const Vec3 x1 = homogeneous(c.p1), x2 = homogeneous(c.p2);
    const Vec3 ex1 = t.cross(x1);  // [t]x x1
    const Vec3 etx2 = x2.cross(t);  // [t]x^T x2
    const double e = x2.dot(ex1);
    const double denom = ex1.x() * ex1.x() + ex1.y() * ex1.y() + etx2.x() * etx2.x() + etx2.y() * etx2.y();
    if (!(denom > 0.0)) return std::abs(e) > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return std::abs(e) / std::sqrt(denom);
}

HeadingEstimate solve_translation_ransac(std::span<const Correspondence> m, const RansacConfig& cfg) {
    if (m.size() < 2) throw Error("heading unresolved");
    std::vector<Vec3> normals(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) normals[i] = homogeneous(m[i].p1).cross(homogeneous(m[i].p2));

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
    Vec3 best_t = Vec3::Zero();
    std::size_t best_count = 0;
    double best_cost = std::numeric_limits<double>::infinity();
    int accepted = 0;
    const int max_draws = std::max(1, cfg.iterations) * 10;
    const double tol2 = cfg.epipolar_tol * cfg.epipolar_tol;
    for (int draw = 0; draw < max_draws && accepted < cfg.iterations; ++draw) {
        const std::size_t i = pick(rng);
        std::size_t j = pick(rng);
        if (i == j) continue;
        const Vec3 cand = normals[i].cross(normals[j]);
        const double scale = normals[i].norm() * normals[j].norm();
        if (!(scale > 0.0) || cand.norm() < 1e-9 * scale) continue;
        ++accepted;
        for (const Vec3& t : {Vec3(cand.normalized()), Vec3(-cand.normalized())}) {
            // Truncated quadratic score: outliers cost tol^2, inliers their squared residual.
            const auto in = inliers_of(t, m, cfg.epipolar_tol);
            double cost = static_cast<double>(m.size() - in.size()) * tol2;
            for (std::size_t k : in) {
                const double r = epipolar_residual(t, m[k]);
                cost += r * r;
            }
            if (cost < best_cost) {
                best_cost = cost;
                best_count = in.size();
                best_t = t;
            }
        }
    }
    if (accepted == 0 || best_count < 2) throw Error("heading unresolved");

    Vec3 t = best_t;
    std::vector<std::size_t> in = inliers_of(t, m, cfg.epipolar_tol);
    for (int round = 0; round < 3 && in.size() >= 2; ++round) {
        std::vector<Vec3> rows;
        rows.reserve(in.size());
        for (std::size_t i : in) rows.push_back(normals[i]);
        Vec3 refined = null_direction(rows);
        if (refined.dot(t) < 0.0) refined = -refined;
        auto refined_in = inliers_of(refined, m, cfg.epipolar_tol);
        if (refined_in.size() < in.size()) break;
        t = refined;
        const bool stable = refined_in == in;
        in = std::move(refined_in);
        if (stable) break;
    }

    const double ratio = static_cast<double>(in.size()) / static_cast<double>(m.size());
    if (in.size() < 2 || ratio < cfg.min_inlier_ratio) throw Error("heading unresolved");

    int positive = 0, negative = 0;
    double depth_sum = 0.0;
    for (std::size_t i : in) {
        double l1 = 0.0, l2 = 0.0;
        if (!triangulate_depths(homogeneous(m[i].p1), homogeneous(m[i].p2), t, l1, l2)) continue;
        if (l1 > 0.0 && l2 > 0.0) ++positive;
        if (l1 < 0.0 && l2 < 0.0) ++negative;
        depth_sum += l1;
    }
    if (negative > positive || (negative == positive && depth_sum < 0.0)) t = -t;

    HeadingEstimate est;
    est.dir = UnitVec3::normalized(t);
    est.inlier_count = static_cast<int>(in.size());
    est.inlier_ratio = ratio;
    return est;
}

std::vector<HeadingEstimate> estimate_heading_list(const EventStream& stream, const CameraIntrinsics& intrinsics,
                                                   double pair_spacing, const HeadingConfig& cfg,
                                                   HeadingRunStats* stats) {
    if (!(pair_spacing > 0.0)) throw Error("pair spacing must be positive");
    intrinsics.validate();
    HeadingRunStats local;
    HeadingRunStats& st = stats != nullptr ? *stats : local;
    std::vector<HeadingEstimate> out;
    if (stream.events.empty()) return out;

    SurfaceRenderer renderer(stream, cfg.representation);
    const double t0 = stream.events.front().t;
    const double t_end = stream.events.back().t;

    struct RenderedFrame {
        SurfaceMap surface;
        std::vector<Corner> corners;
    };
    auto render_at = [&](double t) {
        renderer.advance_to(t);
        RenderedFrame f{renderer.combined(), {}};
        f.corners = detect_corners(f.surface, cfg.corners);
        return f;
    };

    RenderedFrame prev = render_at(t0 + pair_spacing);
    for (std::uint64_t k = 1;; ++k) {
        const double t = t0 + pair_spacing * static_cast<double>(k + 1);
        if (t > t_end) break;
        RenderedFrame cur = render_at(t);
        ++st.pairs_attempted;
        const double t_mid = 0.5 * (prev.surface.render_time + cur.surface.render_time);
        try {
            const auto matches =
                match_features(prev.surface, cur.surface, prev.corners, cur.corners, intrinsics, cfg.match);
            RansacConfig rc = cfg.ransac;
            rc.seed = cfg.ransac.seed ^ (k * 0x9E3779B97F4A7C15ull);
            HeadingEstimate est = solve_translation_ransac(matches, rc);
            est.t_mid = t_mid;
            out.push_back(est);
            ++st.pairs_succeeded;
        } catch (const Error& e) {
            st.failures.push_back("pair at t=" + std::to_string(t_mid) + ": " + e.what());
        }
        prev = std::move(cur);
    }
    return out;
}

VelocitySeries estimate_headings(const EventStream& stream, const CameraIntrinsics& intrinsics, double pair_spacing,
                                 const HeadingConfig& cfg, HeadingRunStats* stats) {
    VelocitySeries series(Frame::Camera);
    for (const auto& h : estimate_heading_list(stream, intrinsics, pair_spacing, cfg, stats))
        series.push_back({h.t_mid, h.dir, std::nullopt});
    return series;
}

}  // namespace evcalib
