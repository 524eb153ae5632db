#pragma once

#include "evcalib/core.hpp"
#include "evcalib/heading.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace evcalib {

enum class Shape { Arc, Polyline, Finger };

std::string to_string(Shape s);
/// Throws Error("invalid shape: ...") for unknown names.
Shape parse_shape(std::string_view name);

struct SimConfig {
    Shape shape = Shape::Polyline;

    /// Arc: the vehicle drives `arc_sweep` radians along a circle at a constant
    /// angular rate, then reverses for arc_backtrack * arc_sweep, repeatedly.
    /// Speed is arc_rate * arc_radius.
    double arc_radius = 10.0;
    double arc_rate = 0.1;
    double arc_sweep = kPi / 2.0;
    double arc_backtrack = 0.5;

    /// Polyline: left turns of `turn` radians every `segment` metres.
    double turn = 60.0 * kDegToRad;
    double segment = 10.0;

    /// Finger: out-and-back legs at headings k * finger_spread, joined by
    /// transitions where the steering ramps at steer_rate. The pattern is run
    /// once, so `duration` does not apply.
    int fingers = 3;
    double finger_length = 10.0;
    double finger_spread = 30.0 * kDegToRad;
    double steer_rate = 0.5;

    double speed = 1.0;
    double dt = 0.02;
    double duration = 60.0;

    double noise_sigma_o = 0.0;
    double noise_sigma_e = 0.0;
    /// Angular-rate noise (rad/s) on the dead-reckoned orientations.
    double noise_sigma_w = 0.0;

    double t_offset = 0.0;
    Rotation3 r_gt;
    std::uint64_t seed = 0;

    void validate() const;
    double effective_speed() const { return shape == Shape::Arc ? arc_rate * arc_radius : speed; }
};

/// Noise-free commanded motion sampled every dt.
struct MotionProfile {
    std::vector<double> t;
    /// Planar velocity vector.
    std::vector<Vec3> velocity;
    /// Commanded yaw (rad, unwrapped).
    std::vector<double> yaw;
    /// Steering heading; velocity = (reverse ? -1 : 1) * |v| * (cos, sin, 0) of it.
    std::vector<double> heading;
    std::vector<bool> reverse;
    /// True while steering is changing (arc sweeps, finger transitions) or at a corner.
    std::vector<bool> transition;
    Vec3 start = Vec3::Zero();

    std::size_t size() const { return t.size(); }
};

MotionProfile generate_motion(const SimConfig& cfg);

/// Body-frame true velocities with speeds.
VelocitySeries generate_velocity_profile(const SimConfig& cfg);

struct SimDataset {
    MotionProfile motion;
    VelocitySeries v_o_true{Frame::Body};
    VelocitySeries v_o_noisy{Frame::Body};
    VelocitySeries v_e_noisy{Frame::Camera};
    /// Noisy body velocity vectors, index-aligned with v_o_noisy.
    std::vector<Vec3> vel_o_noisy;
    std::vector<TrajectoryPose> traj_o;
    std::vector<TrajectoryPose> traj_e;
    double t_offset = 0.0;
    Rotation3 r_gt;
};

/// Adds velocity noise, rotates into the camera frame with R_E = r_gt^T,
/// dead-reckons both trajectories and shifts the camera timestamps by -t_offset.
SimDataset corrupt_and_offset(const MotionProfile& motion, const SimConfig& cfg);

inline SimDataset simulate(const SimConfig& cfg) { return corrupt_and_offset(generate_motion(cfg), cfg); }

/// Deterministic 64-bit generator for (base seed, stream index).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform double in [0, 1) from the top 53 bits.
double uniform01(std::mt19937_64& rng);

struct ExperimentGroup {
    std::string name;
    SimConfig base;
};

/// Six design-parameter groups per shape (arc radius x rate, polyline turn x segment,
/// finger count 2..5 for Finger).
std::vector<ExperimentGroup> experiment_groups(Shape shape);

/// Trial `index` of a group: t_offset uniform in [-max_offset, max_offset],
/// r_gt uniform over SO(3), seed derived from (base_seed, index).
SimConfig make_trial(const SimConfig& group, std::uint64_t base_seed, int index, double max_offset = 0.3);

struct EventSceneConfig {
    CameraIntrinsics intrinsics;
    /// Camera-frame translation direction and speed (m/s).
    Vec3 direction = Vec3::UnitX();
    double speed = 0.1;
    double duration = 1.0;
    int num_points = 500;
    double depth_min = 1.0;
    double depth_max = 3.0;
    /// Projection step of the crossing search (s).
    double time_step = 1e-4;
    double timestamp_jitter = 0.0;
    /// Uniform random events per second.
    double salt_rate = 0.0;
    std::uint64_t seed = 0;

    static CameraIntrinsics default_intrinsics();
    EventSceneConfig() : intrinsics(default_intrinsics()) {}
};

/// Points spread uniformly over the image with uniform depth.
std::vector<Vec3> random_scene(const EventSceneConfig& cfg);

/// Ideal pixel-crossing event generator for a translating camera.
EventStream generate_event_scene(const EventSceneConfig& cfg, const std::vector<Vec3>& points);

inline EventStream generate_event_scene(const EventSceneConfig& cfg) {
    return generate_event_scene(cfg, random_scene(cfg));
}

}  // namespace evcalib
