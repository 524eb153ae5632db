#pragma once

#include "evcalib/calibration.hpp"
#include "evcalib/core.hpp"
#include "evcalib/heading.hpp"
#include "evcalib/kinematics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace evcalib {

/// Malformed input files. Messages carry "<file>:<line>: ..." when a line applies.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

std::vector<Event> read_events_csv(const std::filesystem::path& path);
void write_events_csv(const std::filesystem::path& path, const std::vector<Event>& events);

std::vector<WheelState> read_odometry_csv(const std::filesystem::path& path);
void write_odometry_csv(const std::filesystem::path& path, const std::vector<WheelState>& rows);

std::vector<HeadingEstimate> read_headings_csv(const std::filesystem::path& path);
void write_headings_csv(const std::filesystem::path& path, const std::vector<HeadingEstimate>& rows);

/// Whitespace-separated "key value" lines: fx fy cx cy k1 k2 p1 p2 width height.
/// Blank lines and '#' comments are ignored.
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& k);

/// Columns t,r00,r01,r02,r10,r11,r12,r20,r21,r22,x,y,z.
std::vector<TrajectoryPose> read_trajectory_csv(const std::filesystem::path& path);
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<TrajectoryPose>& poses);

void write_curve_csv(const std::filesystem::path& path, const CorrelationCurve& curve);

struct GroundTruth {
    double t_offset = 0.0;
    Rotation3 r_oe;
    /// Camera-frame translation direction of the simulated event scene, if any.
    std::optional<Vec3> event_direction;
};

/// report.json. The optional translation is written for the hand-eye baseline.
void write_report_json(const std::filesystem::path& path, const CalibrationReport& report,
                       const Vec3* translation = nullptr);
/// Throws ParseError on missing fields or a non-orthonormal R_oe ("invalid rotation").
CalibrationReport read_report_json(const std::filesystem::path& path);

void write_ground_truth_json(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth read_ground_truth_json(const std::filesystem::path& path);

/// Writes text with LF line endings, replacing the file.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace evcalib
