#pragma once

#include "evcalib/calibration.hpp"
#include "evcalib/heading.hpp"
#include "evcalib/kinematics.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace evcalib::cli {

/// Tunables shared by the headings and calibrate commands.
struct RunConfig {
    HeadingConfig heading;
    double pair_spacing = 0.03;
    KinematicsConfig kinematics;
    FilterConfig filter;
    CalibrationConfig calibration;
    HandEyeConfig handeye;
    double handeye_stride = 1.0;
    std::uint64_t seed = 0;

    /// Throws ParseError naming the first out-of-range key.
    void validate() const;
};

/// Command-line arguments of `simulate`, in user units (degrees, metres).
struct SimArgs {
    std::string shape = "polyline";
    double turn_deg = 60.0;
    double segment_m = 10.0;
    double radius = 10.0;
    double rate = 0.1;
    double sweep_deg = 90.0;
    double backtrack = 0.5;
    int fingers = 3;
    double finger_length = 10.0;
    double spread_deg = 30.0;
    double steer_rate = 0.5;
    double speed = 1.0;
    double dt = 0.02;
    double duration = 60.0;
    double noise = 0.0;
    double noise_w = 0.0;
    double t_offset = 0.0;
    double yaw_deg = 0.0;
    double pitch_deg = 0.0;
    double roll_deg = 0.0;
    std::uint64_t seed = 0;
    bool events = false;
    double event_speed = 1.0;
    double event_duration = 1.0;
    int event_points = 500;
};

using SettingTarget = std::variant<double*, float*, int*, std::uint64_t*, std::string*>;

/// A config-file key and the field it writes. The same key is the long flag name.
struct Setting {
    std::string key;
    SettingTarget target;
    std::string help;
};

std::vector<Setting> heading_settings(RunConfig& cfg);
std::vector<Setting> calibration_settings(RunConfig& cfg);
std::vector<Setting> simulate_settings(SimArgs& args);

struct ConfigEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

/// Flat "key = value" file; '#' starts a comment. Underscores in keys are
/// read as hyphens. Throws ParseError with the line number on malformed lines.
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

/// Parses `value` into the setting's field. Returns false if it is not a valid number.
/// String fields take the value verbatim.
bool assign_setting(const Setting& s, std::string_view value);

/// Entry point; `args` includes the program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace evcalib::cli
