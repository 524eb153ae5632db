#include "evcalib/calibration.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace evcalib {
namespace {

struct Motion {
    Mat3 r;
    Vec3 t;
};

std::optional<TrajectoryPose> interpolate_pose(std::span<const TrajectoryPose> traj, double t) {
    if (traj.empty() || t < traj.front().t || t > traj.back().t) return std::nullopt;
    auto it = std::lower_bound(traj.begin(), traj.end(), t,
                               [](const TrajectoryPose& p, double q) { return p.t < q; });
    if (it->t == t) return *it;
    const TrajectoryPose& b = *it;
    const TrajectoryPose& a = *(it - 1);
    const double f = (t - a.t) / (b.t - a.t);
    const Eigen::Quaterniond qa(a.rotation.matrix()), qb(b.rotation.matrix());
    TrajectoryPose out;
    out.t = t;
    out.rotation = Rotation3::project(qa.slerp(f, qb).toRotationMatrix());
    out.position = (1.0 - f) * a.position + f * b.position;
    return out;
}

Motion relative(const TrajectoryPose& a, const TrajectoryPose& b) {
    const Mat3 rat = a.rotation.matrix().transpose();
    return {rat * b.rotation.matrix(), rat * (b.position - a.position)};
}

Mat3 exp_so3(const Vec3& w) {
    const double th = w.norm();
    if (th < 1e-12) return Mat3::Identity() + skew(w);
    return Eigen::AngleAxisd(th, w / th).toRotationMatrix();
}

using Residual = Eigen::Matrix<double, Eigen::Dynamic, 1>;

Residual residuals(const std::vector<Motion>& a, const std::vector<Motion>& b, const Mat3& r, const Vec3& t) {
    Residual out(12 * static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Mat3 dr = a[i].r * r - r * b[i].r;
        const Vec3 dt = a[i].r * t + a[i].t - r * b[i].t - t;
        const auto base = static_cast<Eigen::Index>(12 * i);
        for (int k = 0; k < 9; ++k) out[base + k] = dr(k / 3, k % 3);
        out.segment<3>(base + 9) = dt;
    }
    return out;
}

/// Least-squares translation for a fixed rotation: (R_A - I) t = R t_B - t_A.
Vec3 solve_translation(const std::vector<Motion>& a, const std::vector<Motion>& b, const Mat3& r) {
    Mat3 lhs = Mat3::Zero();
    Vec3 rhs = Vec3::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Mat3 m = a[i].r - Mat3::Identity();
        lhs += m.transpose() * m;
        rhs += m.transpose() * (r * b[i].t - a[i].t);
    }
    return (lhs + 1e-9 * Mat3::Identity()).ldlt().solve(rhs);
}

Mat3 axis_alignment(const std::vector<Motion>& a, const std::vector<Motion>& b) {
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Eigen::AngleAxisd aa(a[i].r), ab(b[i].r);
        h += aa.angle() * ab.angle() * aa.axis() * ab.axis().transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return u * d * v.transpose();
}

}  // namespace

PosePairs associate_trajectories(std::span<const TrajectoryPose> traj_body, std::span<const TrajectoryPose> traj_cam,
                                 double stride) {
    PosePairs out;
    double next = -std::numeric_limits<double>::infinity();
    for (const TrajectoryPose& c : traj_cam) {
        if (c.t < next) continue;
        const auto b = interpolate_pose(traj_body, c.t);
        if (!b) continue;
        out.body.push_back(*b);
        out.cam.push_back(c);
        next = c.t + stride;
    }
    return out;
}

HandEyeResult handeye_baseline(std::span<const TrajectoryPose> traj_body, std::span<const TrajectoryPose> traj_cam,
                               const HandEyeConfig& cfg) {
    if (traj_body.size() != traj_cam.size() || traj_body.size() < 3)
        throw Error("hand-eye needs equal-length pose lists of at least 3 poses");

    std::vector<Motion> a, b;
    double max_angle = 0.0;
    for (std::size_t i = 0; i + 1 < traj_body.size(); ++i) {
        a.push_back(relative(traj_body[i], traj_body[i + 1]));
        b.push_back(relative(traj_cam[i], traj_cam[i + 1]));
        max_angle = std::max(max_angle, Eigen::AngleAxisd(a.back().r).angle());
    }
    if (max_angle < cfg.min_rotation_deg * kDegToRad) throw Error("insufficient rotational excitation");

    Mat3 r = axis_alignment(a, b);
    Vec3 t = solve_translation(a, b, r);
    {
        // Planar motion leaves the rotation about the common axis free; pick it by grid search.
        Vec3 axis = Vec3::Zero();
        for (const Motion& m : a) {
            const Eigen::AngleAxisd aa(m.r);
            const Vec3 ax = aa.axis() * aa.angle();
            axis += ax.dot(axis) < 0.0 ? Vec3(-ax) : ax;
        }
        axis.normalize();
        const Mat3 r0 = r;
        double best = residuals(a, b, r, t).squaredNorm();
        for (int k = 1; k < 36; ++k) {
            const Mat3 rk = Eigen::AngleAxisd(k * 10.0 * kDegToRad, axis).toRotationMatrix() * r0;
            const Vec3 tk = solve_translation(a, b, rk);
            const double cost = residuals(a, b, rk, tk).squaredNorm();
            if (cost < best) {
                best = cost;
                r = rk;
                t = tk;
            }
        }
    }

    HandEyeResult out;
    Residual res = residuals(a, b, r, t);
    double cost = res.squaredNorm();
    double mu = 1e-3;
    const double h = 1e-7;
    for (int it = 0; it < cfg.max_iter; ++it) {
        out.iterations = it + 1;
        Eigen::MatrixXd jac(res.size(), 6);
        for (int k = 0; k < 6; ++k) {
            Vec3 dw = Vec3::Zero(), dt = Vec3::Zero();
            (k < 3 ? dw : dt)[k % 3] = h;
            const Residual plus = residuals(a, b, r * exp_so3(dw), t + dt);
            const Residual minus = residuals(a, b, r * exp_so3(-dw), t - dt);
            jac.col(k) = (plus - minus) / (2.0 * h);
        }
        const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
        const Eigen::Matrix<double, 6, 1> g = jac.transpose() * res;
        bool improved = false;
        Eigen::Matrix<double, 6, 1> step;
        for (int tries = 0; tries < 10 && !improved; ++tries) {
            Eigen::Matrix<double, 6, 6> damped = jtj;
            damped.diagonal() += mu * (jtj.diagonal().array() + 1e-12).matrix();
            step = -damped.ldlt().solve(g);
            const Mat3 rn = r * exp_so3(step.head<3>());
            const Vec3 tn = t + step.tail<3>();
            const Residual rn_res = residuals(a, b, rn, tn);
            const double c = rn_res.squaredNorm();
            if (c < cost) {
                r = Rotation3::project(rn).matrix();
                t = tn;
                res = rn_res;
                cost = c;
                mu = std::max(mu / 3.0, 1e-12);
                improved = true;
            } else {
                mu *= 4.0;
            }
        }
        if (!improved || step.norm() < 1e-12) break;
    }
    out.rotation = Rotation3::project(r);
    out.translation = t;
    out.cost = cost;
    return out;
}

}  // namespace evcalib
