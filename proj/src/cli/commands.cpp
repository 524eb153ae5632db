#include "evcalib/cli.hpp"
#include "evcalib/experiment.hpp"
#include "evcalib/io.hpp"
#include "evcalib/svg.hpp"
#include "evcalib/synth.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <thread>

namespace fs = std::filesystem;

namespace evcalib::cli {
namespace {

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

/// Flags bound to config keys, plus the optional --config file that fills
/// in whatever the command line left unset.
class BoundOptions {
public:
    void add(CLI::App* app, const std::vector<Setting>& settings) {
        for (const Setting& s : settings) {
            CLI::Option* opt = std::visit(
                [&](auto* p) { return app->add_option("--" + s.key, *p, s.help)->capture_default_str(); },
                s.target);
            bound_.push_back({s, opt});
        }
    }

    void add_config(CLI::App* app) { app->add_option("--config", config_, "flat key = value file; flags take precedence"); }

    void load(const std::set<std::string>& known) const {
        if (config_.empty()) return;
        for (const ConfigEntry& e : read_config_file(config_)) {
            const std::string where = config_ + ":" + std::to_string(e.line) + ": ";
            auto it = std::find_if(bound_.begin(), bound_.end(), [&](const Entry& b) { return b.setting.key == e.key; });
            if (it == bound_.end()) {
                if (known.count(e.key)) continue;
                throw ParseError(where + "unknown key '" + e.key + "'");
            }
            if (it->option->count() > 0) continue;
            if (!assign_setting(it->setting, e.value))
                throw ParseError(where + "invalid value '" + e.value + "' for " + e.key);
        }
    }

private:
    struct Entry {
        Setting setting;
        CLI::Option* option;
    };
    std::vector<Entry> bound_;
    std::string config_;
};

/// Every key any command accepts, so one config file can serve all of them.
std::set<std::string> known_keys() {
    RunConfig rc;
    SimArgs sa;
    std::set<std::string> keys{"out", "events", "intrinsics", "odom", "headings", "traj-body",
                               "traj-cam", "baseline", "report", "ground-truth"};
    for (const auto& list : {heading_settings(rc), calibration_settings(rc), simulate_settings(sa)})
        for (const Setting& s : list) keys.insert(s.key);
    return keys;
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw ParseError(std::string("missing --") + flag);
    if (!fs::is_regular_file(path)) throw ParseError(std::string("--") + flag + ": no such file: " + path);
}

void print_rotation(std::ostream& out, const Rotation3& r) {
    out << "R_oe =\n";
    for (int i = 0; i < 3; ++i) {
        out << " ";
        for (int j = 0; j < 3; ++j) out << " " << fmt("% .9f", r.matrix()(i, j));
        out << "\n";
    }
    const Vec3 ypr = r.ypr() * kRadToDeg;
    out << "yaw/pitch/roll (deg) = " << fmt("%.4f", ypr[0]) << " " << fmt("%.4f", ypr[1]) << " "
        << fmt("%.4f", ypr[2]) << "\n";
}

// ---- simulate ---------------------------------------------------------------

SimConfig to_sim_config(const SimArgs& a) {
    SimConfig c;
    c.shape = parse_shape(a.shape);
    c.turn = a.turn_deg * kDegToRad;
    c.segment = a.segment_m;
    c.arc_radius = a.radius;
    c.arc_rate = a.rate;
    c.arc_sweep = a.sweep_deg * kDegToRad;
    c.arc_backtrack = a.backtrack;
    c.fingers = a.fingers;
    c.finger_length = a.finger_length;
    c.finger_spread = a.spread_deg * kDegToRad;
    c.steer_rate = a.steer_rate;
    c.speed = a.speed;
    c.dt = a.dt;
    c.duration = a.duration;
    c.noise_sigma_o = a.noise;
    c.noise_sigma_e = a.noise;
    c.noise_sigma_w = a.noise_w;
    c.t_offset = a.t_offset;
    c.r_gt = Rotation3::from_ypr(a.yaw_deg * kDegToRad, a.pitch_deg * kDegToRad, a.roll_deg * kDegToRad);
    c.seed = a.seed;
    c.validate();
    if (a.events && (a.event_speed <= 0.0 || a.event_duration <= 0.0 || a.event_points < 1))
        throw Error("event scene needs positive speed, duration and point count");
    return c;
}

int cmd_simulate(const SimArgs& a, const std::string& out_dir, std::ostream& out) {
    if (out_dir.empty()) throw ParseError("missing --out");
    SimConfig cfg;
    try {
        cfg = to_sim_config(a);
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    const SimDataset d = simulate(cfg);
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    std::vector<WheelState> odom;
    odom.reserve(d.v_o_noisy.size());
    for (std::size_t i = 0; i < d.v_o_noisy.size(); ++i) {
        const Vec3& v = d.vel_o_noisy[i];
        double steer = std::atan2(v.y(), v.x());
        double speed = v.norm();
        // Reversing wheels keep pointing forward and spin backwards.
        if (d.motion.reverse[i]) {
            steer = wrap_angle(steer + kPi);
            speed = -speed;
        }
        WheelState w;
        w.t = d.v_o_noisy[i].t;
        w.steer.fill(wrap_angle(steer));
        w.speed.fill(speed);
        odom.push_back(w);
    }
    write_odometry_csv(dir / "odom.csv", odom);

    std::vector<HeadingEstimate> headings;
    headings.reserve(d.v_e_noisy.size());
    for (const VelocitySample& s : d.v_e_noisy.samples()) headings.push_back({s.t, s.dir, 0, 1.0});
    write_headings_csv(dir / "headings_gt.csv", headings);
    write_trajectory_csv(dir / "traj_body.csv", d.traj_o);
    write_trajectory_csv(dir / "traj_cam.csv", d.traj_e);

    GroundTruth gt{d.t_offset, d.r_gt, std::nullopt};
    std::size_t n_events = 0;
    if (a.events) {
        EventSceneConfig sc;
        sc.direction = (d.r_gt.transpose() * d.v_o_true[0].dir).vec();
        sc.speed = a.event_speed;
        sc.duration = a.event_duration;
        sc.num_points = a.event_points;
        sc.seed = a.seed;
        const EventStream ev = generate_event_scene(sc);
        write_events_csv(dir / "events.csv", ev.events);
        write_intrinsics(dir / "intrinsics.txt", sc.intrinsics);
        gt.event_direction = sc.direction;
        n_events = ev.events.size();
    }
    write_ground_truth_json(dir / "ground_truth.json", gt);

    out << "shape " << to_string(cfg.shape) << ": " << d.v_o_noisy.size() << " samples over "
        << fmt("%.2f", d.motion.t.back() - d.motion.t.front()) << " s\n";
    out << "t_offset = " << fmt("%.6f", cfg.t_offset) << " s\n";
    const Vec3 ypr = cfg.r_gt.ypr() * kRadToDeg;
    out << "R_oe yaw/pitch/roll (deg) = " << fmt("%.4f", ypr[0]) << " " << fmt("%.4f", ypr[1]) << " "
        << fmt("%.4f", ypr[2]) << "\n";
    if (a.events) out << "events: " << n_events << "\n";
    out << "wrote " << dir.string() << "\n";
    return 0;
}

// ---- headings ---------------------------------------------------------------

int cmd_headings(RunConfig cfg, const std::string& events, const std::string& intrinsics, const std::string& out_path,
                 std::ostream& out) {
    require_file(events, "events");
    require_file(intrinsics, "intrinsics");
    cfg.validate();
    const CameraIntrinsics k = read_intrinsics(intrinsics);
    EventStream stream;
    stream.width = k.width;
    stream.height = k.height;
    stream.events = read_events_csv(events);
    try {
        stream.validate();
    } catch (const Error& e) {
        throw ParseError(events + ": " + e.what());
    }
    if (stream.empty()) throw Error("no heading pairs");

    cfg.heading.ransac.seed = cfg.seed;
    HeadingRunStats stats;
    const auto list = estimate_heading_list(stream, k, cfg.pair_spacing, cfg.heading, &stats);
    out << "pairs succeeded: " << stats.pairs_succeeded << "/" << stats.pairs_attempted << "\n";
    std::map<std::string, int> reasons;
    for (const std::string& f : stats.failures) ++reasons[f];
    for (const auto& [reason, count] : reasons) out << "  failed (" << count << "): " << reason << "\n";
    if (list.empty()) throw Error("no heading pairs");
    write_headings_csv(out_path, list);
    out << "wrote " << out_path << "\n";
    return 0;
}

// ---- calibrate --------------------------------------------------------------

struct CalibrateArgs {
    std::string odom, headings, traj_body, traj_cam, out, baseline = "vc";
    bool no_temporal = false;
};

int cmd_calibrate(RunConfig cfg, const CalibrateArgs& a, std::ostream& out) {
    if (a.out.empty()) throw ParseError("missing --out");
    if (a.baseline != "vc" && a.baseline != "handeye") throw ParseError("--baseline must be vc or handeye");
    cfg.validate();
    const fs::path dir(a.out);

    CalibrationReport report;
    std::optional<Vec3> translation;
    if (a.baseline == "handeye") {
        require_file(a.traj_body, "traj-body");
        require_file(a.traj_cam, "traj-cam");
        const auto body = read_trajectory_csv(a.traj_body);
        const auto cam = read_trajectory_csv(a.traj_cam);
        const PosePairs pairs = associate_trajectories(body, cam, cfg.handeye_stride);
        const HandEyeResult he = handeye_baseline(pairs.body, pairs.cam, cfg.handeye);
        report.method = "hand-eye";
        report.r_oe = he.rotation;
        report.n_pairs = pairs.body.size();
        report.irls_iterations = he.iterations;
        translation = he.translation;
    } else {
        require_file(a.odom, "odom");
        require_file(a.headings, "headings");
        cfg.kinematics.v_min = cfg.filter.v_min;
        const auto log = read_odometry_csv(a.odom);
        const VelocitySeries v_o = odometry_to_series(log, cfg.kinematics);
        const VelocitySeries usable = filter_usable(v_o, cfg.filter);
        VelocitySeries v_e(Frame::Camera);
        for (const HeadingEstimate& h : read_headings_csv(a.headings)) v_e.push_back({h.t_mid, h.dir, std::nullopt});
        cfg.calibration.skip_temporal = a.no_temporal;
        report = calibrate(v_o, usable, v_e, cfg.calibration);
    }

    fs::create_directories(dir);
    write_report_json(dir / "report.json", report, translation ? &*translation : nullptr);
    write_curve_csv(dir / "trace_curve.csv", report.curve);
    write_text(dir / "trace_curve.svg",
               svg_line_plot({{"r", report.curve.lags, report.curve.values}}, "Trace correlation", "lag (s)", "r"));

    out << "method " << report.method << "\n";
    out << "t_d = " << fmt("%.6f", report.t_d) << " s\n";
    print_rotation(out, report.r_oe);
    if (translation)
        out << "t_oe (m) = " << fmt("%.6f", translation->x()) << " " << fmt("%.6f", translation->y()) << " "
            << fmt("%.6f", translation->z()) << "\n";
    out << "pairs " << report.n_pairs << ", iterations " << report.irls_iterations << "\n";
    if (!translation)
        out << "residual (deg) p50 " << fmt("%.4f", report.residual_deg.p50) << " p90 "
            << fmt("%.4f", report.residual_deg.p90) << " max " << fmt("%.4f", report.residual_deg.max) << "\n";
    out << "wrote " << dir.string() << "\n";
    return 0;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
    std::string report, ground_truth, out, batch, sweep;
    int trials = 100;
    std::uint64_t seed = 0;
};

struct Scored {
    std::string group;
    std::string method;
    double rotation_deg;
};

int method_rank(const std::string& m) {
    if (m == "VC") return 0;
    if (m == "VC-woTA") return 1;
    if (m == "hand-eye") return 2;
    return 3;
}

std::vector<BoxStats> aggregate(const std::vector<Scored>& scores) {
    std::map<std::pair<std::string, std::string>, std::vector<double>> by;
    for (const Scored& s : scores) by[{s.group, s.method}].push_back(s.rotation_deg);
    std::vector<BoxStats> boxes;
    for (const auto& [key, values] : by)
        boxes.push_back({key.first, key.second, percentile_of(values, 0.25), percentile_of(values, 0.5),
                         percentile_of(values, 0.75)});
    std::stable_sort(boxes.begin(), boxes.end(), [](const BoxStats& x, const BoxStats& y) {
        if (x.group != y.group) return x.group < y.group;
        if (method_rank(x.method) != method_rank(y.method)) return method_rank(x.method) < method_rank(y.method);
        return x.method < y.method;
    });
    return boxes;
}

void write_boxes(const std::vector<BoxStats>& boxes, const fs::path& csv, std::ostream& out) {
    std::string text = "group,method,p25,p50,p75\n";
    for (const BoxStats& b : boxes)
        text += b.group + "," + b.method + "," + format_double(b.p25) + "," + format_double(b.p50) + "," +
                format_double(b.p75) + "\n";
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    write_text(csv, text);
    fs::path svg = csv;
    svg.replace_extension(".svg");
    write_text(svg, svg_box_plot(boxes, "Rotation error", "deg"));
    for (const BoxStats& b : boxes)
        out << b.group << " " << b.method << ": median " << fmt("%.4f", b.p50) << " deg (IQR " << fmt("%.4f", b.p25)
            << " - " << fmt("%.4f", b.p75) << ")\n";
    out << "wrote " << csv.string() << " and " << svg.string() << "\n";
}

/// Trial directories (holding ground_truth.json) below `root`, grouped by parent directory name.
std::vector<Scored> score_tree(const fs::path& root, unsigned threads) {
    std::vector<fs::path> trials;
    if (fs::is_regular_file(root / "ground_truth.json")) trials.push_back(root);
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_directory() && fs::is_regular_file(entry.path() / "ground_truth.json"))
            trials.push_back(entry.path());
    std::sort(trials.begin(), trials.end());
    if (trials.empty()) throw ParseError("no trial directories with ground_truth.json under " + root.string());

    struct Job {
        std::string group;
        fs::path report;
        fs::path truth;
    };
    std::vector<Job> jobs;
    for (const fs::path& t : trials) {
        const std::string group = t == root ? root.filename().string() : t.parent_path().filename().string();
        std::vector<fs::path> reports;
        for (const auto& entry : fs::directory_iterator(t)) {
            const std::string name = entry.path().filename().string();
            if (entry.is_regular_file() && name.rfind("report", 0) == 0 && entry.path().extension() == ".json")
                reports.push_back(entry.path());
        }
        std::sort(reports.begin(), reports.end());
        for (const fs::path& r : reports) jobs.push_back({group, r, t / "ground_truth.json"});
    }

    std::vector<Scored> scores(jobs.size());
    std::vector<std::exception_ptr> errors(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            try {
                const CalibrationReport rep = read_report_json(jobs[i].report);
                const GroundTruth gt = read_ground_truth_json(jobs[i].truth);
                scores[i] = {jobs[i].group, rep.method, rotation_error_deg(gt.r_oe, rep.r_oe)};
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs.size())));
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return scores;
}

std::vector<Scored> score_sweep(const std::string& shape_name, int trials, std::uint64_t seed, unsigned threads) {
    Shape shape;
    try {
        shape = parse_shape(shape_name);
    } catch (const Error& e) {
        throw ParseError(e.what());
    }
    if (trials < 1) throw ParseError("--trials must be at least 1");
    std::vector<Scored> scores;
    for (const ExperimentGroup& g : experiment_groups(shape)) {
        const auto results = run_group(g.base, seed, trials, {}, threads);
        for (const TrialResult& r : results) {
            scores.push_back({g.name, "VC", r.vc_deg});
            scores.push_back({g.name, "VC-woTA", r.vc_wota_deg});
            scores.push_back({g.name, "hand-eye", r.handeye_deg});
        }
    }
    return scores;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const unsigned threads = default_thread_count();
    if (!a.batch.empty() || !a.sweep.empty()) {
        if (!a.batch.empty() && !a.sweep.empty()) throw ParseError("--batch and --sweep are exclusive");
        if (!a.batch.empty() && !fs::is_directory(a.batch)) throw ParseError("--batch: no such directory: " + a.batch);
        const auto scores = a.batch.empty() ? score_sweep(a.sweep, a.trials, a.seed, threads)
                                            : score_tree(a.batch, threads);
        write_boxes(aggregate(scores), a.out.empty() ? fs::path("batch.csv") : fs::path(a.out), out);
        return 0;
    }

    require_file(a.report, "report");
    require_file(a.ground_truth, "ground-truth");
    const CalibrationReport rep = read_report_json(a.report);
    const GroundTruth gt = read_ground_truth_json(a.ground_truth);
    const double rot = rotation_error_deg(gt.r_oe, rep.r_oe);
    const double td_ms = (rep.t_d - gt.t_offset) * 1000.0;
    const fs::path csv = a.out.empty() ? fs::path(a.report).parent_path() / "eval.csv" : fs::path(a.out);
    write_text(csv, "method,rotation_error_deg,t_d_error_ms\n" + rep.method + "," + format_double(rot) + "," +
                        format_double(td_ms) + "\n");
    out << "rotation error = " << fmt("%.6f", rot) << " deg\n";
    out << "t_d error = " << fmt("%.3f", td_ms) << " ms\n";
    out << "wrote " << csv.string() << "\n";
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Extrinsic rotation and time-offset calibration between wheel odometry and an event camera"};
    app.name(args.empty() ? "evcalib" : fs::path(args.front()).filename().string());
    app.require_subcommand(1);
    const std::set<std::string> known = known_keys();

    SimArgs sim_args;
    std::string sim_out;
    BoundOptions sim_opts;
    CLI::App* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
    sim_opts.add(sim, simulate_settings(sim_args));
    sim_opts.add(sim, {{"out", &sim_out, "output directory"}});
    sim->add_flag("--events", sim_args.events, "also write events.csv and intrinsics.txt");
    sim_opts.add_config(sim);

    RunConfig head_cfg;
    std::string head_events, head_intr, head_out = "headings.csv";
    BoundOptions head_opts;
    CLI::App* head = app.add_subcommand("headings", "estimate camera headings from events");
    head_opts.add(head, {{"events", &head_events, "events.csv"},
                         {"intrinsics", &head_intr, "intrinsics file"},
                         {"out", &head_out, "headings.csv to write"}});
    head_opts.add(head, heading_settings(head_cfg));
    head_opts.add_config(head);

    RunConfig cal_cfg;
    CalibrateArgs cal_args;
    BoundOptions cal_opts;
    CLI::App* cal = app.add_subcommand("calibrate", "estimate t_d and R_oe");
    cal_opts.add(cal, {{"odom", &cal_args.odom, "odom.csv"},
                       {"headings", &cal_args.headings, "headings.csv"},
                       {"traj-body", &cal_args.traj_body, "body trajectory (hand-eye)"},
                       {"traj-cam", &cal_args.traj_cam, "camera trajectory (hand-eye)"},
                       {"baseline", &cal_args.baseline, "vc or handeye"},
                       {"out", &cal_args.out, "output directory"}});
    cal_opts.add(cal, calibration_settings(cal_cfg));
    cal->add_flag("--no-temporal", cal_args.no_temporal, "register at zero lag without the temporal search");
    cal_opts.add_config(cal);

    EvalArgs eval_args;
    CLI::App* ev = app.add_subcommand("eval", "score reports against ground truth");
    ev->add_option("--report", eval_args.report, "report.json");
    ev->add_option("--ground-truth", eval_args.ground_truth, "ground_truth.json");
    ev->add_option("--batch", eval_args.batch, "directory tree of trial directories");
    ev->add_option("--sweep", eval_args.sweep, "run the simulated groups of a shape (arc, polyline, finger)");
    ev->add_option("--trials", eval_args.trials, "trials per group for --sweep")->capture_default_str();
    ev->add_option("--seed", eval_args.seed, "base seed for --sweep")->capture_default_str();
    ev->add_option("--out", eval_args.out, "output CSV");

    std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rest.begin(), rest.end());
    try {
        app.parse(rest);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            sim_opts.load(known);
            try {
                return cmd_simulate(sim_args, sim_out, out);
            } catch (const ParseError&) {
                err << sim->help();
                throw;
            }
        }
        if (head->parsed()) {
            head_opts.load(known);
            return cmd_headings(head_cfg, head_events, head_intr, head_out, out);
        }
        if (cal->parsed()) {
            cal_opts.load(known);
            return cmd_calibrate(cal_cfg, cal_args, out);
        }
        return cmd_eval(eval_args, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace evcalib::cli
