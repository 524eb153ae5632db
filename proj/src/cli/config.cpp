#include "evcalib/cli.hpp"
#include "evcalib/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace evcalib::cli {
namespace {

void require(bool ok, const char* key, const char* what) {
    if (!ok) throw ParseError(std::string("invalid config: ") + key + " " + what);
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

template <class T>
bool parse_value(std::string_view s, T& out) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return false;
    if constexpr (std::is_floating_point_v<T>)
        if (!std::isfinite(v)) return false;
    out = v;
    return true;
}

bool parse_value(std::string_view s, std::string& out) {
    out = std::string(s);
    return true;
}

}  // namespace

void RunConfig::validate() const {
    const auto& r = heading.representation;
    require(r.tau > 0.0, "tau", "must be positive");
    require(r.tos_halfwidth >= 1, "tos-halfwidth", "must be at least 1");
    require(r.tos_decrement >= 1, "tos-decrement", "must be at least 1");
    require(r.ts_threshold >= 0.0 && r.ts_threshold <= 1.0, "ts-threshold", "must be in [0, 1]");
    require(r.tos_threshold >= -1 && r.tos_threshold <= 255, "tos-threshold", "must be in [-1, 255]");
    const auto& c = heading.corners;
    require(c.max_corners >= 1, "max-corners", "must be at least 1");
    require(c.nms_radius >= 0, "nms-radius", "must be non-negative");
    require(c.window_radius >= 1, "window-radius", "must be at least 1");
    require(c.harris_k > 0.0f && c.harris_k < 0.25f, "harris-k", "must be in (0, 0.25)");
    require(c.threshold >= 0.0f, "corner-threshold", "must be non-negative");
    const auto& m = heading.match;
    require(m.ratio > 0.0 && m.ratio <= 1.0, "match-ratio", "must be in (0, 1]");
    require(m.max_disparity_px > 0.0, "max-disparity", "must be positive");
    require(m.blur_radius >= 0, "blur-radius", "must be non-negative");
    const auto& ra = heading.ransac;
    require(ra.iterations >= 1, "ransac-iterations", "must be at least 1");
    require(ra.epipolar_tol > 0.0, "epipolar-tol", "must be positive");
    require(ra.min_inlier_ratio >= 0.0 && ra.min_inlier_ratio <= 1.0, "min-inlier-ratio", "must be in [0, 1]");
    require(pair_spacing > 0.0, "pair-spacing", "must be positive");

    require(filter.v_min >= 0.0, "v-min", "must be non-negative");
    require(kinematics.steer_agreement_tol > 0.0, "steer-tol", "must be positive");
    require(filter.steer_rate_max > 0.0, "steer-rate-max", "must be positive");
    require(filter.window >= 0.0, "filter-window", "must be non-negative");
    const auto& t = calibration.temporal;
    require(t.t_max >= 0.0, "t-max", "must be non-negative");
    require(t.t_step > 0.0, "t-step", "must be positive");
    require(t.ridge >= 0.0, "ridge", "must be non-negative");
    require(t.interp.max_gap > 0.0, "max-gap", "must be positive");
    const auto& i = calibration.irls;
    require(i.delta > 0.0, "irls-delta", "must be positive");
    require(i.max_iter >= 1, "irls-max-iter", "must be at least 1");
    require(i.tol > 0.0, "irls-tol", "must be positive");
    require(handeye_stride > 0.0, "handeye-stride", "must be positive");
    require(handeye.max_iter >= 1, "handeye-max-iter", "must be at least 1");
    require(handeye.min_rotation_deg >= 0.0, "min-rotation-deg", "must be non-negative");
}

std::vector<Setting> heading_settings(RunConfig& cfg) {
    auto& r = cfg.heading.representation;
    auto& c = cfg.heading.corners;
    auto& m = cfg.heading.match;
    auto& ra = cfg.heading.ransac;
    return {
        {"tau", &r.tau, "time-surface decay constant (s)"},
        {"tos-halfwidth", &r.tos_halfwidth, "TOS window half-width k (px)"},
        {"tos-decrement", &r.tos_decrement, "TOS decrement per event"},
        {"ts-threshold", &r.ts_threshold, "time-surface threshold in [0, 1]"},
        {"tos-threshold", &r.tos_threshold, "TOS threshold, -1 for 255 - 2k"},
        {"max-corners", &c.max_corners, "corners kept per surface"},
        {"nms-radius", &c.nms_radius, "corner suppression radius (px)"},
        {"window-radius", &c.window_radius, "structure-tensor half-window (px)"},
        {"harris-k", &c.harris_k, "Harris sensitivity"},
        {"corner-threshold", &c.threshold, "minimum corner response"},
        {"match-ratio", &m.ratio, "descriptor ratio test"},
        {"max-disparity", &m.max_disparity_px, "largest match displacement (px)"},
        {"blur-radius", &m.blur_radius, "descriptor smoothing radius (px)"},
        {"ransac-iterations", &ra.iterations, "RANSAC hypotheses"},
        {"epipolar-tol", &ra.epipolar_tol, "inlier threshold (normalized units)"},
        {"min-inlier-ratio", &ra.min_inlier_ratio, "reject pairs below this inlier ratio"},
        {"pair-spacing", &cfg.pair_spacing, "time between rendered surfaces (s)"},
        {"seed", &cfg.seed, "random seed"},
    };
}

std::vector<Setting> calibration_settings(RunConfig& cfg) {
    auto& t = cfg.calibration.temporal;
    auto& i = cfg.calibration.irls;
    return {
        {"v-min", &cfg.filter.v_min, "stationary speed threshold (m/s)"},
        {"steer-tol", &cfg.kinematics.steer_agreement_tol, "wheel steering agreement (rad)"},
        {"steer-rate-max", &cfg.filter.steer_rate_max, "largest usable heading rate (rad/s)"},
        {"filter-window", &cfg.filter.window, "heading-rate window (s)"},
        {"t-max", &t.t_max, "temporal search half-range (s)"},
        {"t-step", &t.t_step, "temporal search step (s)"},
        {"ridge", &t.ridge, "relative covariance ridge"},
        {"max-gap", &t.interp.max_gap, "largest interpolation gap (s)"},
        {"irls-delta", &i.delta, "IRLS residual floor"},
        {"irls-max-iter", &i.max_iter, "IRLS iteration cap"},
        {"irls-tol", &i.tol, "IRLS convergence angle (rad)"},
        {"handeye-stride", &cfg.handeye_stride, "hand-eye pose spacing (s)"},
        {"handeye-max-iter", &cfg.handeye.max_iter, "hand-eye iteration cap"},
        {"min-rotation-deg", &cfg.handeye.min_rotation_deg, "hand-eye excitation threshold (deg)"},
        {"seed", &cfg.seed, "random seed"},
    };
}

std::vector<Setting> simulate_settings(SimArgs& a) {
    return {
        {"shape", &a.shape, "arc, polyline or finger"},
        {"turn-deg", &a.turn_deg, "polyline turn angle (deg)"},
        {"segment-m", &a.segment_m, "polyline segment length (m)"},
        {"radius", &a.radius, "arc radius (m)"},
        {"rate", &a.rate, "arc angular rate (rad/s)"},
        {"sweep-deg", &a.sweep_deg, "arc forward sweep (deg)"},
        {"backtrack", &a.backtrack, "arc reverse fraction of the sweep"},
        {"fingers", &a.fingers, "finger count"},
        {"finger-length", &a.finger_length, "finger leg length (m)"},
        {"spread-deg", &a.spread_deg, "angle between fingers (deg)"},
        {"steer-rate", &a.steer_rate, "finger transition steering rate (rad/s)"},
        {"speed", &a.speed, "polyline and finger speed (m/s)"},
        {"dt", &a.dt, "sample period (s)"},
        {"duration", &a.duration, "dataset length (s)"},
        {"noise", &a.noise, "velocity noise sigma (m/s)"},
        {"noise-w", &a.noise_w, "angular-rate noise sigma (rad/s)"},
        {"t-offset", &a.t_offset, "camera clock offset (s)"},
        {"yaw-deg", &a.yaw_deg, "R_oe yaw (deg)"},
        {"pitch-deg", &a.pitch_deg, "R_oe pitch (deg)"},
        {"roll-deg", &a.roll_deg, "R_oe roll (deg)"},
        {"seed", &a.seed, "random seed"},
        {"event-speed", &a.event_speed, "event scene camera speed (m/s)"},
        {"event-duration", &a.event_duration, "event scene length (s)"},
        {"event-points", &a.event_points, "event scene point count"},
    };
}

std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path.string());
    std::vector<ConfigEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
        s = trim(s);
        if (s.empty()) continue;
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key(trim(s.substr(0, eq)));
        const std::string_view value = trim(s.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        for (char& ch : key)
            if (ch == '_') ch = '-';
        out.push_back({key, std::string(value), lineno});
    }
    return out;
}

bool assign_setting(const Setting& s, std::string_view value) {
    return std::visit([&](auto* p) { return parse_value(value, *p); }, s.target);
}

}  // namespace evcalib::cli
