#pragma once

#include "evcalib/core.hpp"

#include <span>
#include <string>
#include <vector>

namespace evcalib {

/// Cross- and auto-covariances of two temporally associated direction sets.
struct CovarianceTriple {
    Mat3 cross = Mat3::Zero();   ///< Sigma_{v_o v_e}
    Mat3 auto_o = Mat3::Zero();  ///< Sigma_{v_o v_o}
    Mat3 auto_e = Mat3::Zero();  ///< Sigma_{v_e v_e}
    double lag = 0.0;
    std::size_t n = 0;
};

struct CorrelationCurve {
    std::vector<double> lags;
    std::vector<double> values;
};

struct ResidualStats {
    double p50 = 0.0;
    double p90 = 0.0;
    double max = 0.0;
};

struct CalibrationReport {
    std::string method = "VC";
    double t_d = 0.0;
    Rotation3 r_oe;
    CorrelationCurve curve;
    std::size_t n_pairs = 0;
    int irls_iterations = 0;
    ResidualStats residual_deg;
};

/// Direction pairs (v_o interpolated at t_j + t_d, v_e(t_j)).
struct AssociatedPairs {
    std::vector<Vec3> v_o;
    std::vector<Vec3> v_e;
    std::size_t size() const { return v_o.size(); }
};

AssociatedPairs associate(const VelocitySeries& v_o, const VelocitySeries& v_e, double t_d,
                          const InterpolationOptions& interp = {});

/// Mean-subtracted covariances with 1/(N-1) normalization. Throws
/// "insufficient overlap" for fewer than three pairs.
CovarianceTriple covariances_of(const AssociatedPairs& pairs, double lag = 0.0);

CovarianceTriple covariances_at_lag(const VelocitySeries& v_o, const VelocitySeries& v_e, double t_d,
                                    const InterpolationOptions& interp = {});

/// sqrt(Tr((A_o + l_o I)^-1 C (A_e + l_e I)^-1 C^T) / 3) clamped to [0, 1].
///
/// `ridge` is relative: l_x = ridge * Tr(A_x) / 3, so the value stays
/// invariant under rotations of either signal. With ridge = 0 a singular
/// auto-covariance throws "singular covariance".
double trace_correlation(const CovarianceTriple& c, double ridge);

/// Per-axis canonical coefficients rho_i for the canonical pairs
/// (e_i, column i of R_oe^T), regularized the same way as trace_correlation.
Vec3 canonical_coefficients(const CovarianceTriple& c, const Rotation3& r_oe, double ridge);

struct TemporalSearchConfig {
    double t_max = 0.5;
    double t_step = 0.005;
    double ridge = 1e-8;
    bool refine = true;
    InterpolationOptions interp;
};

struct TemporalOffset {
    double t_d = 0.0;
    CorrelationCurve curve;
};

/// Grid search of the trace correlation over [-t_max, t_max] with optional
/// parabolic peak refinement. Ties go to the smaller |t_d|.
TemporalOffset find_temporal_offset(const VelocitySeries& v_o, const VelocitySeries& v_e,
                                    const TemporalSearchConfig& cfg = {});

/// Closed-form CCA rotation from (A_e + l I)^-1 C^T. Unstable under planar motion.
Rotation3 rotation_cca_closed_form(const CovarianceTriple& c, double ridge);

struct IrlsConfig {
    double delta = 1e-4;
    int max_iter = 50;
    double tol = 1e-9;
};

struct IrlsResult {
    Rotation3 r_oe;
    std::vector<double> residual_deg;
    ResidualStats stats;
    int iterations = 0;
};

/// Robust registration v_o = R v_e by iteratively reweighted Arun solves
/// with weights 1 / max(delta, |v_o - R v_e|).
IrlsResult rotation_irls(std::span<const Vec3> v_o, std::span<const Vec3> v_e, const IrlsConfig& cfg = {});

ResidualStats summarize_residuals(std::vector<double> residual_deg);

struct CalibrationConfig {
    TemporalSearchConfig temporal;
    IrlsConfig irls;
    /// Registers at t_d = 0 without searching (the variant without temporal alignment).
    bool skip_temporal = false;
};

CalibrationReport calibrate(const VelocitySeries& v_o, const VelocitySeries& v_e, const CalibrationConfig& cfg = {});

/// Searches t_d on the full body series and registers only the `v_o_usable`
/// samples (usually filter_usable of v_o). Steering transitions carry most of
/// the timing signal but break the pure-translation model of the camera side.
CalibrationReport calibrate(const VelocitySeries& v_o, const VelocitySeries& v_o_usable, const VelocitySeries& v_e,
                            const CalibrationConfig& cfg = {});

struct HandEyeConfig {
    int max_iter = 100;
    double min_rotation_deg = 0.5;
};

struct HandEyeResult {
    Rotation3 rotation;
    Vec3 translation = Vec3::Zero();
    int iterations = 0;
    double cost = 0.0;
};

/// Pose pairs sampled every `stride` seconds of the camera trajectory, with
/// the body trajectory interpolated at the camera timestamps.
struct PosePairs {
    std::vector<TrajectoryPose> body;
    std::vector<TrajectoryPose> cam;
};
PosePairs associate_trajectories(std::span<const TrajectoryPose> traj_body, std::span<const TrajectoryPose> traj_cam,
                                 double stride);

/// AX = XB on consecutive relative motions, minimizing sum ||A_i X - X B_i||_F^2
/// by damped Gauss-Newton from an axis-alignment initialization.
HandEyeResult handeye_baseline(std::span<const TrajectoryPose> traj_body, std::span<const TrajectoryPose> traj_cam,
                               const HandEyeConfig& cfg = {});

}  // namespace evcalib
