#include "evcalib/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace evcalib {
namespace {

using json = nlohmann::json;

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line) + ": ";
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if constexpr (std::is_floating_point_v<T>) {
        if (res.ec == std::errc() && !std::isfinite(out)) return false;
    }
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

/// Reads a CSV with an exact header; calls `row` with the fields and line number.
template <class F>
void read_csv(const std::filesystem::path& path, std::string_view header, std::size_t columns, F&& row) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            if (line != header) throw ParseError(where(path, lineno) + "expected header '" + std::string(header) + "'");
            have_header = true;
            continue;
        }
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != columns)
            throw ParseError(where(path, lineno) + "expected " + std::to_string(columns) + " fields, got " +
                             std::to_string(fields.size()));
        row(fields, lineno);
    }
    if (!have_header) throw ParseError(where(path, 1) + "missing header");
}

double field_double(std::string_view s, const std::filesystem::path& path, std::size_t lineno) {
    double v = 0.0;
    if (!parse_number(s, v)) throw ParseError(where(path, lineno) + "invalid number '" + std::string(s) + "'");
    return v;
}

long field_int(std::string_view s, const std::filesystem::path& path, std::size_t lineno) {
    long v = 0;
    if (!parse_number(s, v)) throw ParseError(where(path, lineno) + "invalid integer '" + std::string(s) + "'");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw Error("write failed for " + path.string());
}

json rotation_json(const Rotation3& r) {
    json a = json::array();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a.push_back(r.matrix()(i, j));
    return a;
}

Rotation3 rotation_from_json(const json& a, const std::filesystem::path& path) {
    if (!a.is_array() || a.size() != 9) throw ParseError(path.string() + ": R_oe must be an array of 9 numbers");
    Mat3 m;
    for (int k = 0; k < 9; ++k) {
        if (!a[k].is_number()) throw ParseError(path.string() + ": R_oe must be an array of 9 numbers");
        m(k / 3, k % 3) = a[k].get<double>();
    }
    if (!Rotation3::is_valid(m, 1e-6)) throw ParseError("invalid rotation");
    return Rotation3::is_valid(m) ? Rotation3::from_matrix(m) : Rotation3::project(m);
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

const json& require(const json& j, const char* key, const std::filesystem::path& path) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(path.string() + ": schema mismatch: missing '" + key + "'");
    return j.at(key);
}

double require_number(const json& j, const char* key, const std::filesystem::path& path) {
    const json& v = require(j, key, path);
    if (!v.is_number()) throw ParseError(path.string() + ": schema mismatch: '" + key + "' is not a number");
    return v.get<double>();
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out = open_out(path);
    out << text;
    close_out(out, path);
}

std::vector<Event> read_events_csv(const std::filesystem::path& path) {
    std::vector<Event> events;
    read_csv(path, "t,x,y,p", 4, [&](const auto& f, std::size_t ln) {
        Event e;
        e.t = field_double(f[0], path, ln);
        e.x = static_cast<int>(field_int(f[1], path, ln));
        e.y = static_cast<int>(field_int(f[2], path, ln));
        const long p = field_int(f[3], path, ln);
        if (p != 0 && p != 1) throw ParseError(where(path, ln) + "polarity must be 0 or 1");
        e.polarity = p == 1;
        events.push_back(e);
    });
    return events;
}

void write_events_csv(const std::filesystem::path& path, const std::vector<Event>& events) {
    std::ofstream out = open_out(path);
    out << "t,x,y,p\n";
    for (const Event& e : events) out << format_double(e.t) << ',' << e.x << ',' << e.y << ',' << (e.polarity ? 1 : 0) << '\n';
    close_out(out, path);
}

std::vector<WheelState> read_odometry_csv(const std::filesystem::path& path) {
    std::vector<WheelState> rows;
    read_csv(path, "t,steer_fl,steer_fr,steer_rl,steer_rr,speed_fl,speed_fr,speed_rl,speed_rr", 9,
             [&](const auto& f, std::size_t ln) {
                 WheelState w;
                 w.t = field_double(f[0], path, ln);
                 for (int i = 0; i < 4; ++i) {
                     w.steer[i] = field_double(f[1 + i], path, ln);
                     w.speed[i] = field_double(f[5 + i], path, ln);
                 }
                 try {
                     w.validate();
                 } catch (const Error& e) {
                     throw ParseError(where(path, ln) + e.what());
                 }
                 rows.push_back(w);
             });
    return rows;
}

void write_odometry_csv(const std::filesystem::path& path, const std::vector<WheelState>& rows) {
    std::ofstream out = open_out(path);
    out << "t,steer_fl,steer_fr,steer_rl,steer_rr,speed_fl,speed_fr,speed_rl,speed_rr\n";
    for (const WheelState& w : rows) {
        out << format_double(w.t);
        for (double s : w.steer) out << ',' << format_double(s);
        for (double v : w.speed) out << ',' << format_double(v);
        out << '\n';
    }
    close_out(out, path);
}

std::vector<HeadingEstimate> read_headings_csv(const std::filesystem::path& path) {
    std::vector<HeadingEstimate> rows;
    read_csv(path, "t_mid,dx,dy,dz,inliers,inlier_ratio", 6, [&](const auto& f, std::size_t ln) {
        HeadingEstimate h;
        h.t_mid = field_double(f[0], path, ln);
        const Vec3 d(field_double(f[1], path, ln), field_double(f[2], path, ln), field_double(f[3], path, ln));
        if (!(d.norm() > 0.0)) throw ParseError(where(path, ln) + "zero heading direction");
        h.dir = UnitVec3::normalized(d);
        h.inlier_count = static_cast<int>(field_int(f[4], path, ln));
        h.inlier_ratio = field_double(f[5], path, ln);
        rows.push_back(h);
    });
    return rows;
}

void write_headings_csv(const std::filesystem::path& path, const std::vector<HeadingEstimate>& rows) {
    std::ofstream out = open_out(path);
    out << "t_mid,dx,dy,dz,inliers,inlier_ratio\n";
    for (const HeadingEstimate& h : rows)
        out << format_double(h.t_mid) << ',' << format_double(h.dir.x()) << ',' << format_double(h.dir.y()) << ','
            << format_double(h.dir.z()) << ',' << h.inlier_count << ',' << format_double(h.inlier_ratio) << '\n';
    close_out(out, path);
}

CameraIntrinsics read_intrinsics(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    CameraIntrinsics k;
    bool seen[10] = {};
    static const char* keys[10] = {"fx", "fy", "cx", "cy", "k1", "k2", "p1", "p2", "width", "height"};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::string key, value, extra;
        if (!(ls >> key)) continue;
        if (!(ls >> value) || (ls >> extra)) throw ParseError(where(path, lineno) + "expected 'key value'");
        int idx = -1;
        for (int i = 0; i < 10; ++i)
            if (key == keys[i]) idx = i;
        if (idx < 0) throw ParseError(where(path, lineno) + "unknown key '" + key + "'");
        if (idx >= 8) {
            const long v = field_int(value, path, lineno);
            (idx == 8 ? k.width : k.height) = static_cast<int>(v);
        } else {
            const double v = field_double(value, path, lineno);
            switch (idx) {
            case 0: k.fx = v; break;
            case 1: k.fy = v; break;
            case 2: k.cx = v; break;
            case 3: k.cy = v; break;
            default: k.distortion[static_cast<std::size_t>(idx - 4)] = v; break;
            }
        }
        seen[idx] = true;
    }
    for (int i = 0; i < 10; ++i)
        if (!seen[i] && (i < 4 || i >= 8)) throw ParseError(path.string() + ": missing key '" + keys[i] + "'");
    try {
        k.validate();
    } catch (const Error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return k;
}

void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k) {
    std::ostringstream os;
    os << "fx " << format_double(k.fx) << "\nfy " << format_double(k.fy) << "\ncx " << format_double(k.cx) << "\ncy "
       << format_double(k.cy) << "\nk1 " << format_double(k.distortion[0]) << "\nk2 " << format_double(k.distortion[1])
       << "\np1 " << format_double(k.distortion[2]) << "\np2 " << format_double(k.distortion[3]) << "\nwidth "
       << k.width << "\nheight " << k.height << "\n";
    write_text(path, os.str());
}

std::vector<TrajectoryPose> read_trajectory_csv(const std::filesystem::path& path) {
    std::vector<TrajectoryPose> poses;
    read_csv(path, "t,r00,r01,r02,r10,r11,r12,r20,r21,r22,x,y,z", 13, [&](const auto& f, std::size_t ln) {
        TrajectoryPose p;
        p.t = field_double(f[0], path, ln);
        Mat3 m;
        for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = field_double(f[1 + k], path, ln);
        if (!Rotation3::is_valid(m, 1e-6)) throw ParseError(where(path, ln) + "invalid rotation");
        p.rotation = Rotation3::is_valid(m) ? Rotation3::from_matrix(m) : Rotation3::project(m);
        for (int k = 0; k < 3; ++k) p.position[k] = field_double(f[10 + k], path, ln);
        if (!poses.empty() && !(p.t > poses.back().t))
            throw ParseError(where(path, ln) + "timestamps must be strictly increasing");
        poses.push_back(p);
    });
    return poses;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryPose>& poses) {
    std::ofstream out = open_out(path);
    out << "t,r00,r01,r02,r10,r11,r12,r20,r21,r22,x,y,z\n";
    for (const TrajectoryPose& p : poses) {
        out << format_double(p.t);
        for (int k = 0; k < 9; ++k) out << ',' << format_double(p.rotation.matrix()(k / 3, k % 3));
        for (int k = 0; k < 3; ++k) out << ',' << format_double(p.position[k]);
        out << '\n';
    }
    close_out(out, path);
}

void write_curve_csv(const std::filesystem::path& path, const CorrelationCurve& curve) {
    std::ofstream out = open_out(path);
    out << "lag_s,r\n";
    for (std::size_t i = 0; i < curve.lags.size(); ++i)
        out << format_double(curve.lags[i]) << ',' << format_double(curve.values[i]) << '\n';
    close_out(out, path);
}

void write_report_json(const std::filesystem::path& path, const CalibrationReport& report, const Vec3* translation) {
    json j;
    j["method"] = report.method;
    j["t_d_s"] = report.t_d;
    j["R_oe"] = rotation_json(report.r_oe);
    j["trace_curve"] = {{"lag_s", report.curve.lags}, {"r", report.curve.values}};
    j["n_pairs"] = report.n_pairs;
    j["irls_iterations"] = report.irls_iterations;
    j["residual_deg"] = {{"p50", report.residual_deg.p50}, {"p90", report.residual_deg.p90}, {"max", report.residual_deg.max}};
    if (translation) j["t_oe_m"] = {translation->x(), translation->y(), translation->z()};
    write_json(path, j);
}

CalibrationReport read_report_json(const std::filesystem::path& path) {
    const json j = load_json(path);
    CalibrationReport r;
    r.t_d = require_number(j, "t_d_s", path);
    r.r_oe = rotation_from_json(require(j, "R_oe", path), path);
    const json& curve = require(j, "trace_curve", path);
    const json& lags = require(curve, "lag_s", path);
    const json& vals = require(curve, "r", path);
    if (!lags.is_array() || !vals.is_array() || lags.size() != vals.size())
        throw ParseError(path.string() + ": schema mismatch: trace_curve arrays differ");
    try {
        r.curve.lags = lags.get<std::vector<double>>();
        r.curve.values = vals.get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ParseError(path.string() + ": schema mismatch: trace_curve must hold numbers");
    }
    r.n_pairs = static_cast<std::size_t>(require_number(j, "n_pairs", path));
    const json& res = require(j, "residual_deg", path);
    r.residual_deg.p50 = require_number(res, "p50", path);
    r.residual_deg.p90 = require_number(res, "p90", path);
    r.residual_deg.max = require_number(res, "max", path);
    if (j.contains("method") && j["method"].is_string()) r.method = j["method"].get<std::string>();
    if (j.contains("irls_iterations") && j["irls_iterations"].is_number())
        r.irls_iterations = j["irls_iterations"].get<int>();
    return r;
}

void write_ground_truth_json(const std::filesystem::path& path, const GroundTruth& gt) {
    json j;
    j["t_offset_s"] = gt.t_offset;
    j["R_oe"] = rotation_json(gt.r_oe);
    if (gt.event_direction) {
        const Vec3& d = *gt.event_direction;
        j["event_direction"] = {d.x(), d.y(), d.z()};
    }
    write_json(path, j);
}

GroundTruth read_ground_truth_json(const std::filesystem::path& path) {
    const json j = load_json(path);
    GroundTruth gt;
    gt.t_offset = require_number(j, "t_offset_s", path);
    gt.r_oe = rotation_from_json(require(j, "R_oe", path), path);
    if (j.contains("event_direction")) {
        const json& d = j["event_direction"];
        if (!d.is_array() || d.size() != 3 || !d[0].is_number() || !d[1].is_number() || !d[2].is_number())
            throw ParseError(path.string() + ": schema mismatch: event_direction");
        gt.event_direction = Vec3(d[0].get<double>(), d[1].get<double>(), d[2].get<double>());
    }
    return gt;
}

}  // namespace evcalib
