#include "evcalib/core.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace evcalib {

void EventStream::validate() const {
    if (width <= 0 || height <= 0) throw Error("event stream has empty sensor dimensions");
    double prev = 0.0;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const Event& e = events[i];
        if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height)
            throw Error("event " + std::to_string(i) + " outside the sensor grid");
        if (!std::isfinite(e.t) || e.t < 0.0)
            throw Error("event " + std::to_string(i) + " has an invalid timestamp");
        if (i > 0 && e.t < prev) throw Error("events not sorted by time at index " + std::to_string(i));
        prev = e.t;
    }
}

UnitVec3 UnitVec3::normalized(const Vec3& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw Error("cannot normalize a zero or non-finite vector");
    return UnitVec3(v / n);
}

UnitVec3 UnitVec3::from_unit(const Vec3& v) {
    if (std::abs(v.norm() - 1.0) > 1e-9) throw Error("vector is not unit length");
    return UnitVec3(v);
}

VelocitySeries::VelocitySeries(Frame frame, std::vector<VelocitySample> samples) : frame_(frame) {
    samples_.reserve(samples.size());
    for (const auto& s : samples) push_back(s);
}

void VelocitySeries::push_back(const VelocitySample& s) {
    if (!std::isfinite(s.t)) throw Error("velocity sample with non-finite timestamp");
    if (!samples_.empty() && !(s.t > samples_.back().t))
        throw Error("velocity series timestamps must be strictly increasing");
    if (s.speed && !(*s.speed >= 0.0)) throw Error("velocity sample with negative speed");
    samples_.push_back(s);
}

VelocitySeries VelocitySeries::shifted(double dt) const {
    VelocitySeries out(frame_);
    out.samples_ = samples_;
    for (auto& s : out.samples_) s.t += dt;
    return out;
}

bool Rotation3::is_valid(const Mat3& m, double tol) {
    if (!m.allFinite()) return false;
    if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
    return std::abs(m.determinant() - 1.0) <= tol;
}

Rotation3 Rotation3::from_matrix(const Mat3& m, double tol) {
    if (!is_valid(m, tol)) throw Error("invalid rotation");
    return Rotation3(m);
}

Rotation3 Rotation3::project(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return Rotation3(u * d * v.transpose());
}

Rotation3 Rotation3::about_axis(const Vec3& axis, double angle_rad) {
    return Rotation3(Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix());
}

Rotation3 Rotation3::from_ypr(double yaw, double pitch, double roll) {
    const Mat3 m = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                    Eigen::AngleAxisd(roll, Vec3::UnitX()))
                       .toRotationMatrix();
    return Rotation3(m);
}

Rotation3 Rotation3::from_uniform(double u1, double u2, double u3) {
    // Shoemake's subgroup algorithm.
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    const Eigen::Quaterniond q(b * std::cos(2.0 * kPi * u3), a * std::sin(2.0 * kPi * u2),
                               a * std::cos(2.0 * kPi * u2), b * std::sin(2.0 * kPi * u3));
    return Rotation3(q.normalized().toRotationMatrix());
}

UnitVec3 Rotation3::operator*(const UnitVec3& v) const { return UnitVec3::normalized(m_ * v.vec()); }

Vec3 Rotation3::ypr() const {
    const double pitch = std::asin(std::clamp(-m_(2, 0), -1.0, 1.0));
    const double yaw = std::atan2(m_(1, 0), m_(0, 0));
    const double roll = std::atan2(m_(2, 1), m_(2, 2));
    return {yaw, pitch, roll};
}

double Rotation3::angle() const {
    return std::acos(std::clamp((m_.trace() - 1.0) / 2.0, -1.0, 1.0));
}

std::optional<UnitVec3> interpolate_direction(const VelocitySeries& series, double t_query,
                                              const InterpolationOptions& opts) {
    const auto& s = series.samples();
    if (s.size() < 2 || !(t_query >= s.front().t) || !(t_query <= s.back().t)) return std::nullopt;
    auto hi = std::lower_bound(s.begin(), s.end(), t_query,
                               [](const VelocitySample& a, double t) { return a.t < t; });
    if (hi->t == t_query) return hi->dir;
    auto lo = hi - 1;
    const double span = hi->t - lo->t;
    if (span > opts.max_gap) return std::nullopt;
    const double w = (t_query - lo->t) / span;
    const Vec3 blend = (1.0 - w) * lo->dir.vec() + w * hi->dir.vec();
    if (blend.norm() < 1e-12) return std::nullopt;
    return UnitVec3::normalized(blend);
}

double rotation_error_deg(const Rotation3& r_gt, const Rotation3& r_est) {
    const double c = ((r_gt.matrix().transpose() * r_est.matrix()).trace() - 1.0) / 2.0;
    if (c > 0.5) {
        // Same angle via the chordal distance ||A - B||_F = 2 sqrt(2) sin(theta / 2); acos loses
        // about half the digits near zero.
        const double chord = (r_gt.matrix() - r_est.matrix()).norm();
        return 2.0 * std::asin(std::min(1.0, chord / (2.0 * std::sqrt(2.0)))) * kRadToDeg;
    }
    return std::acos(std::clamp(c, -1.0, 1.0)) * kRadToDeg;
}

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
    return s;
}

}  // namespace evcalib
