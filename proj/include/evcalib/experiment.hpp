#pragma once

#include "evcalib/calibration.hpp"
#include "evcalib/synth.hpp"

#include <string>
#include <vector>

namespace evcalib {

struct TrialOptions {
    CalibrationConfig calibration;
    HandEyeConfig handeye;
    /// Seconds between hand-eye pose samples.
    double handeye_stride = 1.0;
    bool run_vc = true;
    bool run_vc_wota = true;
    bool run_handeye = true;
};

/// Rotation errors (degrees) of each method on one simulated dataset. NaN marks a
/// method that was not run or failed.
struct TrialResult {
    double vc_deg = 0.0;
    double vc_wota_deg = 0.0;
    double handeye_deg = 0.0;
    double t_d_error_s = 0.0;
    double t_d = 0.0;
};

TrialResult run_trial(const SimDataset& data, const TrialOptions& opts = {});

/// Runs `trials` seeded trials of a group on up to `threads` workers. Results are
/// indexed by trial, independent of the thread count.
std::vector<TrialResult> run_group(const SimConfig& group, std::uint64_t base_seed, int trials,
                                   const TrialOptions& opts = {}, unsigned threads = 0,
                                   double max_offset = 0.3);

/// Worker count from EVCALIB_THREADS, capped by hardware concurrency.
unsigned default_thread_count();

/// Linear-interpolated percentile of finite values; NaN if none.
double percentile_of(std::vector<double> values, double q);

}  // namespace evcalib
