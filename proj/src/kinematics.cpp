#include "evcalib/kinematics.hpp"

#include <algorithm>
#include <cmath>

namespace evcalib {

void WheelState::validate() const {
    if (!std::isfinite(t)) throw Error("odometry timestamp is not finite");
    for (double s : steer)
        if (!std::isfinite(s) || s <= -kPi || s > kPi) throw Error("steering angle outside (-pi, pi]");
    for (double v : speed)
        if (!std::isfinite(v)) throw Error("wheel speed is not finite");
}

BodyVelocity body_velocity(const WheelState& w, const KinematicsConfig& cfg) {
    w.validate();
    double s = 0.0, c = 0.0, v = 0.0;
    for (int i = 0; i < 4; ++i) {
        s += std::sin(w.steer[i]);
        c += std::cos(w.steer[i]);
        v += w.speed[i];
    }
    s /= 4.0;
    c /= 4.0;
    v /= 4.0;
    if (std::hypot(s, c) < 1e-9) throw Error("inconsistent steering");
    const double theta = std::atan2(s, c);

    BodyVelocity out;
    out.mean_steer = theta;
    const Vec3 heading(std::cos(theta), std::sin(theta), 0.0);
    // The sign of the mean speed decides the motion direction along the wheels.
    out.sample.t = w.t;
    out.sample.dir = UnitVec3::normalized(v < 0.0 ? Vec3(-heading) : heading);
    out.sample.speed = std::abs(v);

    double spread = 0.0;
    for (double a : w.steer) spread = std::max(spread, std::abs(wrap_angle(a - theta)));
    if (spread > cfg.steer_agreement_tol)
        out.status = MotionStatus::NotPureTranslation;
    else if (std::abs(v) < cfg.v_min)
        out.status = MotionStatus::Stationary;
    return out;
}

VelocitySeries odometry_to_series(std::span<const WheelState> log, const KinematicsConfig& cfg) {
    VelocitySeries out(Frame::Body);
    for (const WheelState& w : log) {
        const BodyVelocity bv = body_velocity(w, cfg);
        if (bv.status == MotionStatus::NotPureTranslation) continue;
        out.push_back(bv.sample);
    }
    return out;
}

VelocitySeries filter_usable(const VelocitySeries& series, const FilterConfig& cfg) {
    const auto& s = series.samples();
    std::vector<double> heading(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i].speed) throw Error("filter_usable requires speeds on every sample");
        heading[i] = std::atan2(s[i].dir.y(), s[i].dir.x());
    }

    VelocitySeries out(series.frame());
    std::size_t lo = 0, hi = 0;
    const double half = 0.5 * cfg.window;
    for (std::size_t i = 0; i < s.size(); ++i) {
        while (s[lo].t < s[i].t - half) ++lo;
        if (hi < i) hi = i;
        while (hi + 1 < s.size() && s[hi + 1].t <= s[i].t + half) ++hi;
        if (*s[i].speed < cfg.v_min) continue;
        if (hi > lo) {
            // Steering-axis change: a reversal flips the direction but not the steering angle.
            const double turn = 0.5 * std::abs(wrap_angle(2.0 * (heading[hi] - heading[lo])));
            const double rate = turn / (s[hi].t - s[lo].t);
            if (rate > cfg.steer_rate_max) continue;
        }
        out.push_back(s[i]);
    }
    return out;
}

}  // namespace evcalib
