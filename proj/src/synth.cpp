#include "evcalib/synth.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evcalib {
namespace {

struct Phase {
    double t0 = 0.0;
    double t1 = 0.0;
    double heading0 = 0.0;
    double rate = 0.0;
    bool reverse = false;
    bool transition = false;
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::vector<Phase> build_phases(const SimConfig& cfg) {
    std::vector<Phase> phases;
    double t = 0.0;
    auto add = [&](double dur, double heading0, double rate, bool reverse, bool transition) {
        phases.push_back({t, t + dur, heading0, rate, reverse, transition});
        t += dur;
    };
    switch (cfg.shape) {
    case Shape::Arc: {
        // Forward along the circle for arc_sweep, then back in reverse for
        // arc_backtrack * arc_sweep, repeatedly; the path never leaves the circle.
        const double fwd = cfg.arc_sweep / cfg.arc_rate;
        const double back = cfg.arc_backtrack * fwd;
        double heading = kPi / 2.0;
        while (t < cfg.duration) {
            add(fwd, heading, cfg.arc_rate, false, false);
            heading += cfg.arc_sweep;
            if (back <= 0.0) continue;
            add(back, heading, -cfg.arc_rate, true, false);
            heading -= cfg.arc_backtrack * cfg.arc_sweep;
        }
        break;
    }
    case Shape::Polyline: {
        const double seg_time = cfg.segment / cfg.speed;
        for (int k = 0; t < cfg.duration; ++k) add(seg_time, k * cfg.turn, 0.0, false, false);
        break;
    }
    case Shape::Finger: {
        const double leg = cfg.finger_length / cfg.speed;
        const double ramp = cfg.finger_spread / cfg.steer_rate;
        for (int k = 0; k < cfg.fingers; ++k) {
            const double heading = k * cfg.finger_spread;
            add(leg, heading, 0.0, false, false);
            add(leg, heading, 0.0, true, false);
            if (k + 1 < cfg.fingers) add(ramp, heading, cfg.steer_rate, false, true);
        }
        break;
    }
    }
    return phases;
}

double total_duration(const SimConfig& cfg, const std::vector<Phase>& phases) {
    return cfg.shape == Shape::Finger ? phases.back().t1 : cfg.duration;
}

}  // namespace

std::string to_string(Shape s) {
    switch (s) {
    case Shape::Arc: return "arc";
    case Shape::Polyline: return "polyline";
    case Shape::Finger: return "finger";
    }
    return "unknown";
}

Shape parse_shape(std::string_view name) {
    if (name == "arc") return Shape::Arc;
    if (name == "polyline") return Shape::Polyline;
    if (name == "finger") return Shape::Finger;
    throw Error("invalid shape: " + std::string(name));
}

void SimConfig::validate() const {
    auto require = [](bool ok, const char* what) {
        if (!ok) throw Error(what);
    };
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(duration > 0.0 && std::isfinite(duration), "duration must be positive");
    require(noise_sigma_o >= 0.0 && noise_sigma_e >= 0.0 && noise_sigma_w >= 0.0, "noise sigmas must be non-negative");
    require(std::isfinite(t_offset), "t_offset must be finite");
    switch (shape) {
    case Shape::Arc:
        require(arc_radius > 0.0 && arc_rate > 0.0, "arc radius and rate must be positive");
        require(arc_sweep > 0.0, "arc sweep must be positive");
        require(arc_backtrack >= 0.0 && arc_backtrack < 1.0, "arc backtrack must be in [0, 1)");
        break;
    case Shape::Polyline:
        require(speed > 0.0 && segment > 0.0, "speed and segment length must be positive");
        break;
    case Shape::Finger:
        require(speed > 0.0 && finger_length > 0.0, "speed and finger length must be positive");
        require(fingers >= 1, "finger count must be at least 1");
        require(finger_spread > 0.0 && steer_rate > 0.0, "finger spread and steer rate must be positive");
        break;
    }
}

MotionProfile generate_motion(const SimConfig& cfg) {
    cfg.validate();
    const std::vector<Phase> phases = build_phases(cfg);
    const double duration = total_duration(cfg, phases);
    const double speed = cfg.effective_speed();
    const auto n = static_cast<std::size_t>(std::floor(duration / cfg.dt + 1e-9)) + 1;
    const double yaw0 = cfg.shape == Shape::Arc ? kPi / 2.0 : 0.0;

    MotionProfile m;
    m.start = cfg.shape == Shape::Arc ? Vec3(cfg.arc_radius, 0.0, 0.0) : Vec3::Zero();
    m.t.reserve(n);
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * cfg.dt;
        // A sample on a phase boundary belongs to the incoming phase.
        while (p + 1 < phases.size() && t > phases[p].t1 + 1e-9) ++p;
        const Phase& ph = phases[p];
        const double heading = ph.heading0 + ph.rate * (std::min(t, ph.t1) - ph.t0);
        const double sign = ph.reverse ? -1.0 : 1.0;
        const bool corner = p + 1 < phases.size() && std::abs(t - ph.t1) <= 1e-9;
        m.t.push_back(t);
        m.velocity.emplace_back(sign * speed * std::cos(heading), sign * speed * std::sin(heading), 0.0);
        m.heading.push_back(heading);
        m.yaw.push_back(heading - yaw0);
        m.reverse.push_back(ph.reverse);
        m.transition.push_back(ph.transition || corner);
    }
    return m;
}

VelocitySeries generate_velocity_profile(const SimConfig& cfg) {
    const MotionProfile m = generate_motion(cfg);
    VelocitySeries out(Frame::Body);
    for (std::size_t i = 0; i < m.size(); ++i)
        out.push_back({m.t[i], UnitVec3::normalized(m.velocity[i]), m.velocity[i].norm()});
    return out;
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(stream + 0x632BE59BD9B4E019ull)));
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

SimDataset corrupt_and_offset(const MotionProfile& motion, const SimConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng = make_rng(cfg.seed, 0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SimDataset d;
    d.motion = motion;
    d.t_offset = cfg.t_offset;
    d.r_gt = cfg.r_gt;
    const Mat3 r_e = cfg.r_gt.matrix().transpose();

    Vec3 p_o = motion.start;
    Vec3 p_e = r_e * motion.start;
    double yaw_noise = 0.0;
    Eigen::Quaterniond cam_noise = Eigen::Quaterniond::Identity();
    Vec3 prev_o = Vec3::Zero(), prev_e = Vec3::Zero();

    for (std::size_t i = 0; i < motion.size(); ++i) {
        const Vec3& v = motion.velocity[i];
        const Vec3 eps_o(cfg.noise_sigma_o * normal(rng), cfg.noise_sigma_o * normal(rng), 0.0);
        Vec3 eps_e;
        for (int k = 0; k < 3; ++k) eps_e[k] = cfg.noise_sigma_e * normal(rng);
        Vec3 eps_w;
        for (int k = 0; k < 3; ++k) eps_w[k] = cfg.noise_sigma_w * cfg.dt * normal(rng);

        const Vec3 v_o = v + eps_o;
        const Vec3 v_e = r_e * v + eps_e;
        const double t = motion.t[i];

        if (i > 0) {
            p_o += prev_o * cfg.dt;
            p_e += prev_e * cfg.dt;
            yaw_noise += eps_w.z();
            const double angle = eps_w.norm();
            if (angle > 0.0) cam_noise = (cam_noise * Eigen::Quaterniond(Eigen::AngleAxisd(angle, eps_w / angle))).normalized();
        }
        prev_o = v_o;
        prev_e = v_e;

        d.v_o_true.push_back({t, UnitVec3::normalized(v), v.norm()});
        d.v_o_noisy.push_back({t, UnitVec3::normalized(v_o), v_o.norm()});
        d.v_e_noisy.push_back({t - cfg.t_offset, UnitVec3::normalized(v_e), std::nullopt});
        d.vel_o_noisy.push_back(v_o);

        const Rotation3 body = Rotation3::rz(motion.yaw[i] + yaw_noise);
        const Mat3 cam_nominal = r_e * Rotation3::rz(motion.yaw[i]).matrix() * r_e.transpose();
        d.traj_o.push_back({t, body, p_o});
        d.traj_e.push_back({t - cfg.t_offset, Rotation3::project(cam_nominal * cam_noise.toRotationMatrix()), p_e});
    }
    return d;
}

std::vector<ExperimentGroup> experiment_groups(Shape shape) {
    std::vector<ExperimentGroup> groups;
    SimConfig base;
    base.shape = shape;
    base.noise_sigma_o = 0.02;
    base.noise_sigma_e = 0.02;
    base.noise_sigma_w = 0.01;
    auto name = [](const char* prefix, double a, const char* mid, double b) {
        std::ostringstream os;
        os << prefix << a << mid << b;
        return os.str();
    };
    switch (shape) {
    case Shape::Arc:
        for (double radius : {5.0, 10.0, 20.0})
            for (double rate : {0.05, 0.1}) {
                SimConfig c = base;
                c.arc_radius = radius;
                c.arc_rate = rate;
                groups.push_back({name("arc_r", radius, "_w", rate), c});
            }
        break;
    case Shape::Polyline:
        for (double turn : {30.0, 60.0, 90.0})
            for (double segment : {5.0, 10.0}) {
                SimConfig c = base;
                c.turn = turn * kDegToRad;
                c.segment = segment;
                c.speed = 2.0;
                groups.push_back({name("polyline_t", turn, "_s", segment), c});
            }
        break;
    case Shape::Finger:
        for (int k = 2; k <= 5; ++k) {
            SimConfig c = base;
            c.fingers = k;
            groups.push_back({"finger_" + std::to_string(k), c});
        }
        break;
    }
    return groups;
}

SimConfig make_trial(const SimConfig& group, std::uint64_t base_seed, int index, double max_offset) {
    std::mt19937_64 rng = make_rng(base_seed, static_cast<std::uint64_t>(index));
    SimConfig c = group;
    c.t_offset = (2.0 * uniform01(rng) - 1.0) * max_offset;
    const double u1 = uniform01(rng), u2 = uniform01(rng), u3 = uniform01(rng);
    c.r_gt = Rotation3::from_uniform(u1, u2, u3);
    c.seed = rng();
    return c;
}

CameraIntrinsics EventSceneConfig::default_intrinsics() {
    CameraIntrinsics k;
    k.fx = k.fy = 500.0;
    k.cx = 319.5;
    k.cy = 239.5;
    k.width = 640;
    k.height = 480;
    return k;
}

std::vector<Vec3> random_scene(const EventSceneConfig& cfg) {
    std::mt19937_64 rng = make_rng(cfg.seed, 1);
    const CameraIntrinsics& k = cfg.intrinsics;
    std::vector<Vec3> points;
    points.reserve(static_cast<std::size_t>(std::max(cfg.num_points, 0)));
    for (int i = 0; i < cfg.num_points; ++i) {
        const double u = uniform01(rng) * k.width;
        const double v = uniform01(rng) * k.height;
        const double z = cfg.depth_min + uniform01(rng) * (cfg.depth_max - cfg.depth_min);
        const Vec2 xn = k.normalize(Vec2(u, v));
        points.emplace_back(xn.x() * z, xn.y() * z, z);
    }
    return points;
}

EventStream generate_event_scene(const EventSceneConfig& cfg, const std::vector<Vec3>& points) {
    const CameraIntrinsics& k = cfg.intrinsics;
    k.validate();
    if (!(cfg.time_step > 0.0)) throw Error("time_step must be positive");
    EventStream out;
    out.width = k.width;
    out.height = k.height;
    const Vec3 motion = cfg.direction.normalized() * cfg.speed;
    if (cfg.speed == 0.0 || cfg.duration <= 0.0) return out;

    const auto steps = static_cast<long>(std::ceil(cfg.duration / cfg.time_step));
    struct Crossing {
        double frac;
        int axis;
        int step;
    };
    std::vector<Crossing> crossings;
    for (const Vec3& p : points) {
        if (p.z() <= 0.0) continue;
        Vec2 prev = k.project(p.head<2>() / p.z());
        long px = static_cast<long>(std::floor(prev.x()));
        long py = static_cast<long>(std::floor(prev.y()));
        double t_prev = 0.0;
        for (long s = 1; s <= steps; ++s) {
            const double t = std::min(static_cast<double>(s) * cfg.time_step, cfg.duration);
            const Vec3 q = p - motion * t;
            if (q.z() <= 1e-6) break;
            const Vec2 cur = k.project(q.head<2>() / q.z());
            crossings.clear();
            for (int axis = 0; axis < 2; ++axis) {
                const double a = prev[axis], b = cur[axis];
                const long fa = static_cast<long>(std::floor(a)), fb = static_cast<long>(std::floor(b));
                if (fa == fb) continue;
                const int dir = fb > fa ? 1 : -1;
                for (long bnd = dir > 0 ? fa + 1 : fa; dir > 0 ? bnd <= fb : bnd > fb; bnd += dir)
                    crossings.push_back({(static_cast<double>(bnd) - a) / (b - a), axis, dir});
            }
            std::sort(crossings.begin(), crossings.end(), [](const Crossing& x, const Crossing& y) {
                return x.frac < y.frac || (x.frac == y.frac && x.axis < y.axis);
            });
            for (const Crossing& c : crossings) {
                (c.axis == 0 ? px : py) += c.step;
                if (px < 0 || py < 0 || px >= k.width || py >= k.height) continue;
                out.events.push_back({t_prev + c.frac * (t - t_prev), static_cast<int>(px), static_cast<int>(py), c.step > 0});
            }
            prev = cur;
            t_prev = t;
        }
    }

    std::mt19937_64 rng = make_rng(cfg.seed, 2);
    if (cfg.timestamp_jitter > 0.0) {
        std::normal_distribution<double> normal(0.0, cfg.timestamp_jitter);
        for (Event& e : out.events) e.t = std::max(0.0, e.t + normal(rng));
    }
    if (cfg.salt_rate > 0.0) {
        std::poisson_distribution<long> count(cfg.salt_rate * cfg.duration);
        const long n = count(rng);
        for (long i = 0; i < n; ++i) {
            Event e;
            e.t = uniform01(rng) * cfg.duration;
            e.x = static_cast<int>(uniform01(rng) * k.width);
            e.y = static_cast<int>(uniform01(rng) * k.height);
            e.polarity = uniform01(rng) < 0.5;
            out.events.push_back(e);
        }
    }
    std::stable_sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    return out;
}

}  // namespace evcalib
