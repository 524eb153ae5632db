#include "evcalib/calibration.hpp"

#include "evcalib/simd/kernels.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evcalib {
namespace {

struct Columns {
    std::vector<double> x, y, z;
    explicit Columns(const std::vector<Vec3>& v) : x(v.size()), y(v.size()), z(v.size()) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            x[i] = v[i].x();
            y[i] = v[i].y();
            z[i] = v[i].z();
        }
    }
    simd::SoA3 soa() const { return {x.data(), y.data(), z.data()}; }
};

Mat3 moments(const simd::KernelTable& k, simd::SoA3 a, simd::SoA3 b, std::size_t n, const Vec3& ma, const Vec3& mb) {
    double out[9];
    k.centered_moments(a, b, n, ma.data(), mb.data(), out);
    Mat3 m;
    m << out[0], out[1], out[2], out[3], out[4], out[5], out[6], out[7], out[8];
    return m;
}

/// (A + l I)^-1 B with the relative ridge convention.
Mat3 regularized_solve(const Mat3& a, const Mat3& b, double ridge) {
    const double scale = a.trace() / 3.0;
    if (ridge > 0.0) {
        const Mat3 reg = a + ridge * scale * Mat3::Identity();
        return reg.ldlt().solve(b);
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(a);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * std::max(hi, 1e-300))) throw Error("singular covariance");
    return a.ldlt().solve(b);
}

Mat3 arun(const Mat3& h) {
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return u * d * v.transpose();
}

bool all_parallel(std::span<const Vec3> v) {
    const double limit = std::sin(0.5 * kDegToRad);
    const Vec3 ref = v.front().normalized();
    return std::all_of(v.begin(), v.end(), [&](const Vec3& x) { return ref.cross(x.normalized()).norm() < limit; });
}

double percentile(std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double f = pos - static_cast<double>(lo);
    return sorted[lo] + f * (sorted[hi] - sorted[lo]);
}

}  // namespace

AssociatedPairs associate(const VelocitySeries& v_o, const VelocitySeries& v_e, double t_d,
                          const InterpolationOptions& interp) {
    AssociatedPairs out;
    out.v_o.reserve(v_e.size());
    out.v_e.reserve(v_e.size());
    for (const VelocitySample& e : v_e.samples()) {
        const auto o = interpolate_direction(v_o, e.t + t_d, interp);
        if (!o) continue;
        out.v_o.push_back(o->vec());
        out.v_e.push_back(e.dir.vec());
    }
    return out;
}

CovarianceTriple covariances_of(const AssociatedPairs& pairs, double lag) {
    const std::size_t n = pairs.size();
    if (n < 3) throw Error("insufficient overlap");
    const auto& k = simd::active_kernels();
    const Columns o(pairs.v_o), e(pairs.v_e);
    Vec3 mo, me;
    k.sum3(o.soa(), n, mo.data());
    k.sum3(e.soa(), n, me.data());
    mo /= static_cast<double>(n);
    me /= static_cast<double>(n);
    const double norm = 1.0 / static_cast<double>(n - 1);

    CovarianceTriple c;
    c.cross = moments(k, o.soa(), e.soa(), n, mo, me) * norm;
    c.auto_o = moments(k, o.soa(), o.soa(), n, mo, mo) * norm;
    c.auto_e = moments(k, e.soa(), e.soa(), n, me, me) * norm;
    c.lag = lag;
    c.n = n;
    return c;
}

CovarianceTriple covariances_at_lag(const VelocitySeries& v_o, const VelocitySeries& v_e, double t_d,
                                    const InterpolationOptions& interp) {
    return covariances_of(associate(v_o, v_e, t_d, interp), t_d);
}

double trace_correlation(const CovarianceTriple& c, double ridge) {
    if (ridge < 0.0) throw Error("ridge must be non-negative");
    if (!(c.auto_o.trace() > 0.0) || !(c.auto_e.trace() > 0.0)) {
        if (ridge == 0.0) throw Error("singular covariance");
        return 0.0;
    }
    const Mat3 x = regularized_solve(c.auto_o, c.cross, ridge);
    const Mat3 y = regularized_solve(c.auto_e, c.cross.transpose(), ridge);
    const double tr = (x * y).trace();
    return std::clamp(std::sqrt(std::max(tr, 0.0) / 3.0), 0.0, 1.0);
}

Vec3 canonical_coefficients(const CovarianceTriple& c, const Rotation3& r_oe, double ridge) {
    const Mat3 ao = c.auto_o + ridge * (c.auto_o.trace() / 3.0) * Mat3::Identity();
    const Mat3 ae = c.auto_e + ridge * (c.auto_e.trace() / 3.0) * Mat3::Identity();
    const Mat3 rt = r_oe.matrix().transpose();
    Vec3 rho = Vec3::Zero();
    for (int i = 0; i < 3; ++i) {
        const Vec3 s = Vec3::Unit(i);
        const Vec3 r = rt.col(i);
        const double num = s.dot(c.cross * r);
        const double den = std::sqrt(s.dot(ao * s) * r.dot(ae * r));
        rho[i] = den > 0.0 ? num / den : 0.0;
    }
    return rho;
}

TemporalOffset find_temporal_offset(const VelocitySeries& v_o, const VelocitySeries& v_e,
                                    const TemporalSearchConfig& cfg) {
    if (!(cfg.t_step > 0.0)) throw Error("t_step must be positive");
    if (!(cfg.t_max >= 0.0)) throw Error("t_max must be non-negative");
    if (v_o.empty() || v_e.empty()) throw Error("insufficient overlap");

    const long k_max = std::lround(cfg.t_max / cfg.t_step);
    const std::size_t grid = static_cast<std::size_t>(2 * k_max + 1);
    std::vector<double> value(grid, -1.0);
    for (long k = -k_max; k <= k_max; ++k) {
        const double lag = static_cast<double>(k) * cfg.t_step;
        const AssociatedPairs pairs = associate(v_o, v_e, lag, cfg.interp);
        if (pairs.size() < 3) continue;
        value[static_cast<std::size_t>(k + k_max)] = trace_correlation(covariances_of(pairs, lag), cfg.ridge);
    }

    TemporalOffset out;
    for (long k = -k_max; k <= k_max; ++k) {
        const double v = value[static_cast<std::size_t>(k + k_max)];
        if (v < 0.0) continue;
        out.curve.lags.push_back(static_cast<double>(k) * cfg.t_step);
        out.curve.values.push_back(v);
    }
    if (out.curve.lags.empty()) throw Error("no valid lag");

    // Visit 0, -1, +1, -2, +2, ... so that strict improvement keeps the smaller |t_d|.
    long best_k = 0;
    double best = -1.0;
    for (long m = 0; m <= k_max; ++m) {
        for (long k : {-m, m}) {
            const double v = value[static_cast<std::size_t>(k + k_max)];
            if (v > best) {
                best = v;
                best_k = k;
            }
            if (m == 0) break;
        }
    }

    double t_d = static_cast<double>(best_k) * cfg.t_step;
    if (cfg.refine && best_k > -k_max && best_k < k_max) {
        const double ym = value[static_cast<std::size_t>(best_k - 1 + k_max)];
        const double y0 = best;
        const double yp = value[static_cast<std::size_t>(best_k + 1 + k_max)];
        const double denom = ym - 2.0 * y0 + yp;
        if (ym >= 0.0 && yp >= 0.0 && denom < 0.0)
            t_d += std::clamp(0.5 * (ym - yp) / denom, -0.5, 0.5) * cfg.t_step;
    }
    out.t_d = t_d;
    return out;
}

Rotation3 rotation_cca_closed_form(const CovarianceTriple& c, double ridge) {
    const Mat3 m = regularized_solve(c.auto_e, c.cross.transpose(), ridge);
    // m = U S V^T gives R_oe^T = U diag(1, 1, det(U V^T)) V^T.
    return Rotation3::from_matrix(arun(m), 1e-8).transpose();
}

ResidualStats summarize_residuals(std::vector<double> r) {
    std::sort(r.begin(), r.end());
    ResidualStats s;
    if (r.empty()) return s;
    s.p50 = percentile(r, 0.5);
    s.p90 = percentile(r, 0.9);
    s.max = r.back();
    return s;
}

IrlsResult rotation_irls(std::span<const Vec3> v_o, std::span<const Vec3> v_e, const IrlsConfig& cfg) {
    if (v_o.size() != v_e.size()) throw Error("direction sets differ in size");
    if (v_o.size() < 2 || all_parallel(v_o) || all_parallel(v_e)) throw Error("degenerate directions");
    if (cfg.max_iter < 1) throw Error("max_iter must be at least 1");

    const std::size_t n = v_o.size();
    std::vector<double> w(n, 1.0);
    Mat3 r = Mat3::Identity();
    IrlsResult out;
    for (int it = 0; it < cfg.max_iter; ++it) {
        Mat3 h = Mat3::Zero();
        for (std::size_t i = 0; i < n; ++i) h += w[i] * v_o[i] * v_e[i].transpose();
        const Mat3 next = arun(h);
        const double step = it == 0 ? std::numeric_limits<double>::infinity()
                                    : std::acos(std::clamp(((r.transpose() * next).trace() - 1.0) / 2.0, -1.0, 1.0));
        r = next;
        out.iterations = it + 1;
        if (step < cfg.tol) break;
        for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::max(cfg.delta, (v_o[i] - r * v_e[i]).norm());
    }
    out.r_oe = Rotation3::from_matrix(r, 1e-8);
    out.residual_deg.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.residual_deg[i] = angle_between(v_o[i], r * v_e[i]) * kRadToDeg;
    out.stats = summarize_residuals(out.residual_deg);
    return out;
}

CalibrationReport calibrate(const VelocitySeries& v_o, const VelocitySeries& v_e, const CalibrationConfig& cfg) {
    return calibrate(v_o, v_o, v_e, cfg);
}

CalibrationReport calibrate(const VelocitySeries& v_o, const VelocitySeries& v_o_usable, const VelocitySeries& v_e,
                            const CalibrationConfig& cfg) {
    if (v_o.size() < 2 || v_o_usable.size() < 2 || v_e.empty()) throw Error("insufficient overlap");
    CalibrationReport report;
    if (cfg.skip_temporal) {
        report.method = "VC-woTA";
        const AssociatedPairs pairs = associate(v_o, v_e, 0.0, cfg.temporal.interp);
        report.curve.lags = {0.0};
        report.curve.values = {trace_correlation(covariances_of(pairs, 0.0), cfg.temporal.ridge)};
        report.t_d = 0.0;
    } else {
        TemporalOffset off = find_temporal_offset(v_o, v_e, cfg.temporal);
        report.t_d = off.t_d;
        report.curve = std::move(off.curve);
    }
    const AssociatedPairs pairs = associate(v_o_usable, v_e, report.t_d, cfg.temporal.interp);
    if (pairs.size() < 3) throw Error("insufficient overlap");
    IrlsResult irls = rotation_irls(pairs.v_o, pairs.v_e, cfg.irls);
    report.r_oe = irls.r_oe;
    report.n_pairs = pairs.size();
    report.irls_iterations = irls.iterations;
    report.residual_deg = irls.stats;
    return report;
}

}  // namespace evcalib
