#pragma once

#include "evcalib/core.hpp"
#include "evcalib/representation.hpp"
#include "evcalib/simd/kernels.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace evcalib {

struct CameraIntrinsics {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    /// Radial-tangential coefficients k1, k2, p1, p2.
    std::array<double, 4> distortion{0.0, 0.0, 0.0, 0.0};
    int width = 0;
    int height = 0;

    void validate() const;
    /// Pixel -> undistorted normalized coordinates on the z = 1 plane.
    Vec2 normalize(const Vec2& pixel) const;
    /// Normalized coordinates -> distorted pixel.
    Vec2 project(const Vec2& normalized) const;
};

struct Corner {
    double x = 0.0;
    double y = 0.0;
    float score = 0.0f;
};

struct Correspondence {
    Vec2 p1;
    Vec2 p2;
};

struct HeadingEstimate {
    double t_mid = 0.0;
    UnitVec3 dir;
    int inlier_count = 0;
    double inlier_ratio = 0.0;
};

struct CornerConfig {
    int max_corners = 300;
    int nms_radius = 5;
    /// Half-width of the structure-tensor box window.
    int window_radius = 2;
    float harris_k = 0.04f;
    float threshold = 1e-3f;
};

struct MatchConfig {
    double ratio = 0.8;
    /// Candidate pairs further apart than this (pixels, per axis) are not compared.
    double max_disparity_px = 40.0;
    int blur_radius = 2;
};

struct RansacConfig {
    int iterations = 200;
    double epipolar_tol = 2e-3;
    double min_inlier_ratio = 0.3;
    std::uint64_t seed = 0;
};

struct HeadingConfig {
    RepresentationConfig representation;
    CornerConfig corners;
    MatchConfig match;
    RansacConfig ransac;
};

/// Harris corners on a rendered surface, strongest first.
std::vector<Corner> detect_corners(const SurfaceMap& surface, const CornerConfig& cfg = {});

/// Harris response image (exposed for tests and debugging).
std::vector<float> harris_response(const SurfaceMap& surface, const CornerConfig& cfg,
                                   const simd::KernelTable& kernels = simd::active_kernels());

/// Half-size of the descriptor patch (31 x 31).
inline constexpr int kPatchRadius = 15;

/// 256-bit binary descriptor of a smoothed surface around (x, y). The caller
/// guarantees the patch lies inside the surface.
simd::Descriptor256 describe(const SurfaceMap& smoothed, int x, int y);

/// Box-smoothed copy used for descriptor sampling.
SurfaceMap smooth(const SurfaceMap& surface, int radius);

struct PixelMatch {
    std::size_t a = 0;
    std::size_t b = 0;
    std::uint32_t distance = 0;
};

/// Mutual nearest-neighbour Hamming matches passing the ratio test.
/// Corners whose descriptor patch leaves the image are not matched.
std::vector<PixelMatch> match_corners(const SurfaceMap& surf_a, const SurfaceMap& surf_b,
                                      std::span<const Corner> corners_a, std::span<const Corner> corners_b,
                                      const MatchConfig& cfg = {});

/// match_corners followed by undistortion and normalization. Throws
/// "insufficient matches" when fewer than two survive.
std::vector<Correspondence> match_features(const SurfaceMap& surf_a, const SurfaceMap& surf_b,
                                           std::span<const Corner> corners_a,
                                           std::span<const Corner> corners_b,
                                           const CameraIntrinsics& intrinsics, const MatchConfig& cfg = {});

/// Translation-only epipolar RANSAC (E = [t]x). Returns the unit camera
/// displacement between the two views; t_mid is left at zero.
HeadingEstimate solve_translation_ransac(std::span<const Correspondence> matches, const RansacConfig& cfg = {});

/// Sampson distance of a correspondence to the epipolar geometry of a pure translation.
double epipolar_residual(const Vec3& t, const Correspondence& c);

struct HeadingRunStats {
    int pairs_attempted = 0;
    int pairs_succeeded = 0;
    std::vector<std::string> failures;
};

/// Runs render -> corners -> match -> RANSAC on consecutive render times
/// spaced by pair_spacing. Failed pairs are skipped and recorded in stats.
std::vector<HeadingEstimate> estimate_heading_list(const EventStream& stream, const CameraIntrinsics& intrinsics,
                                                   double pair_spacing, const HeadingConfig& cfg = {},
                                                   HeadingRunStats* stats = nullptr);

/// Same as estimate_heading_list, as a camera-frame velocity series without speeds.
VelocitySeries estimate_headings(const EventStream& stream, const CameraIntrinsics& intrinsics,
                                 double pair_spacing, const HeadingConfig& cfg = {},
                                 HeadingRunStats* stats = nullptr);

}  // namespace evcalib
