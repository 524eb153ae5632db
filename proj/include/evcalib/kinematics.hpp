#pragma once

#include "evcalib/core.hpp"

#include <array>
#include <span>
#include <vector>

namespace evcalib {

/// Odometer state of an all-wheel-steering platform. Wheel order: fl, fr, rl, rr.
struct WheelState {
    double t = 0.0;
    std::array<double, 4> steer{};
    std::array<double, 4> speed{};

    void validate() const;
};

enum class MotionStatus {
    Ok,
    /// Speed below the stationarity threshold; the direction carries no information.
    Stationary,
    /// Steering angles disagree by more than the tolerance.
    NotPureTranslation,
};

struct BodyVelocity {
    VelocitySample sample;
    MotionStatus status = MotionStatus::Ok;
    /// Circular mean of the four steering angles.
    double mean_steer = 0.0;
};

struct KinematicsConfig {
    double v_min = 0.05;
    double steer_agreement_tol = 2.0 * kDegToRad;
};

/// Body-frame velocity from the mean wheel speed and the circular mean
/// steering angle: v = Rz(theta) * (v_mean, 0, 0). Throws "inconsistent
/// steering" when the circular mean is undefined.
BodyVelocity body_velocity(const WheelState& w, const KinematicsConfig& cfg = {});

/// Converts an odometry log to a body-frame series, dropping samples that
/// are not pure translation. Stationary samples are kept (speed < v_min) for
/// filter_usable to remove.
VelocitySeries odometry_to_series(std::span<const WheelState> log, const KinematicsConfig& cfg = {});

struct FilterConfig {
    double v_min = 0.05;
    double steer_rate_max = 0.1;
    double window = 0.2;
};

/// Removes stationary samples and samples whose heading axis (direction modulo
/// pi, so reversals do not count) changes faster than steer_rate_max across a
/// sliding window centred on the sample.
VelocitySeries filter_usable(const VelocitySeries& series, const FilterConfig& cfg = {});

}  // namespace evcalib
