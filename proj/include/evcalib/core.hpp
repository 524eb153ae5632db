#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace evcalib {

/// Raised by every solver and parser in the toolkit. The message is the
/// user-facing error string ("insufficient overlap", "degenerate directions"...).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

struct Event {
    double t = 0.0;
    int x = 0;
    int y = 0;
    bool polarity = true;
};

struct EventStream {
    int width = 0;
    int height = 0;
    std::vector<Event> events;

    /// Throws if any event is out of bounds, has a bad timestamp, or is out of order.
    void validate() const;
    bool empty() const { return events.empty(); }
};

/// A 3-vector of unit length (within 1e-9).
class UnitVec3 {
public:
    UnitVec3() : v_(1.0, 0.0, 0.0) {}

    /// Normalizes `v`. Throws on a zero or non-finite vector.
    static UnitVec3 normalized(const Vec3& v);
    /// Wraps an already unit-length vector without renormalizing.
    static UnitVec3 from_unit(const Vec3& v);

    const Vec3& vec() const { return v_; }
    double x() const { return v_.x(); }
    double y() const { return v_.y(); }
    double z() const { return v_.z(); }
    UnitVec3 operator-() const { return from_unit(-v_); }

private:
    explicit UnitVec3(const Vec3& v) : v_(v) {}
    Vec3 v_;
};

struct VelocitySample {
    double t = 0.0;
    UnitVec3 dir;
    std::optional<double> speed;
};

enum class Frame { Body, Camera };

class VelocitySeries {
public:
    VelocitySeries() = default;
    explicit VelocitySeries(Frame frame) : frame_(frame) {}
    /// Throws unless timestamps are strictly increasing and speeds non-negative.
    VelocitySeries(Frame frame, std::vector<VelocitySample> samples);

    /// Appends a sample; its timestamp must exceed the current last one.
    void push_back(const VelocitySample& s);

    Frame frame() const { return frame_; }
    const std::vector<VelocitySample>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    bool empty() const { return samples_.empty(); }
    const VelocitySample& operator[](std::size_t i) const { return samples_[i]; }

    /// Copy with every timestamp shifted by `dt`.
    VelocitySeries shifted(double dt) const;

private:
    Frame frame_ = Frame::Body;
    std::vector<VelocitySample> samples_;
};

/// Proper rotation matrix (orthonormal, det +1 within 1e-9).
class Rotation3 {
public:
    Rotation3() : m_(Mat3::Identity()) {}

    /// Validates orthonormality and determinant; throws Error("invalid rotation").
    static Rotation3 from_matrix(const Mat3& m, double tol = 1e-9);
    /// Projects an arbitrary matrix to the nearest proper rotation via SVD.
    static Rotation3 project(const Mat3& m);
    static Rotation3 identity() { return Rotation3(); }
    static Rotation3 about_axis(const Vec3& axis, double angle_rad);
    static Rotation3 rz(double angle_rad) { return about_axis(Vec3::UnitZ(), angle_rad); }
    /// Z-Y-X Euler composition R = Rz(yaw) Ry(pitch) Rx(roll).
    static Rotation3 from_ypr(double yaw, double pitch, double roll);
    /// Uniformly distributed over SO(3) given three uniform [0,1) draws.
    static Rotation3 from_uniform(double u1, double u2, double u3);

    const Mat3& matrix() const { return m_; }
    Rotation3 transpose() const { return Rotation3(m_.transpose()); }
    Rotation3 operator*(const Rotation3& o) const { return Rotation3(m_ * o.m_); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    UnitVec3 operator*(const UnitVec3& v) const;

    /// Yaw, pitch, roll in radians for the Z-Y-X convention.
    Vec3 ypr() const;
    /// Rotation angle in radians, in [0, pi].
    double angle() const;

    static bool is_valid(const Mat3& m, double tol = 1e-9);

private:
    explicit Rotation3(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

struct TrajectoryPose {
    double t = 0.0;
    Rotation3 rotation;
    Vec3 position = Vec3::Zero();
};

struct InterpolationOptions {
    double max_gap = 0.2;
};

/// Linear blend of the two bracketing directions, renormalized. Returns
/// nullopt outside [t_first, t_last] or across a gap wider than max_gap.
std::optional<UnitVec3> interpolate_direction(const VelocitySeries& series, double t_query,
                                              const InterpolationOptions& opts = {});

/// Geodesic angle between two rotations in degrees.
double rotation_error_deg(const Rotation3& r_gt, const Rotation3& r_est);

/// Angle between two directions in radians.
double angle_between(const Vec3& a, const Vec3& b);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Skew-symmetric cross-product matrix.
Mat3 skew(const Vec3& v);

}  // namespace evcalib
