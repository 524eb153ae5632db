#include "evcalib/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <thread>

namespace evcalib {

TrialResult run_trial(const SimDataset& data, const TrialOptions& opts) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    TrialResult r{nan, nan, nan, nan, nan};
    if (opts.run_vc) {
        try {
            const CalibrationReport rep = calibrate(data.v_o_noisy, data.v_e_noisy, opts.calibration);
            r.vc_deg = rotation_error_deg(data.r_gt, rep.r_oe);
            r.t_d = rep.t_d;
            r.t_d_error_s = rep.t_d - data.t_offset;
        } catch (const Error&) {
        }
    }
    if (opts.run_vc_wota) {
        try {
            CalibrationConfig cfg = opts.calibration;
            cfg.skip_temporal = true;
            const CalibrationReport rep = calibrate(data.v_o_noisy, data.v_e_noisy, cfg);
            r.vc_wota_deg = rotation_error_deg(data.r_gt, rep.r_oe);
        } catch (const Error&) {
        }
    }
    if (opts.run_handeye) {
        try {
            const PosePairs pairs = associate_trajectories(data.traj_o, data.traj_e, opts.handeye_stride);
            const HandEyeResult he = handeye_baseline(pairs.body, pairs.cam, opts.handeye);
            r.handeye_deg = rotation_error_deg(data.r_gt, he.rotation);
        } catch (const Error&) {
        }
    }
    return r;
}

unsigned default_thread_count() {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("EVCALIB_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return n;
}

std::vector<TrialResult> run_group(const SimConfig& group, std::uint64_t base_seed, int trials,
                                   const TrialOptions& opts, unsigned threads, double max_offset) {
    std::vector<TrialResult> out(static_cast<std::size_t>(std::max(trials, 0)));
    if (threads == 0) threads = default_thread_count();
    threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max(trials, 1)));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < trials; i = next++)
            out[static_cast<std::size_t>(i)] = run_trial(simulate(make_trial(group, base_seed, i, max_offset)), opts);
    };
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < threads; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return out;
}

double percentile_of(std::vector<double> values, double q) {
    values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }),
                 values.end());
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace evcalib
