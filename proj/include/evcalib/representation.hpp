#pragma once

#include "evcalib/core.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace evcalib {

/// W x H float image in [0, 1], row-major.
struct SurfaceMap {
    int width = 0;
    int height = 0;
    std::vector<float> values;
    double render_time = 0.0;

    SurfaceMap() = default;
    SurfaceMap(int w, int h, double t) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0f), render_time(t) {}

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Threshold-ordinal surface: latest firing pixel at 255, the surrounding
/// (2k+1)^2 window decremented on every event.
struct TosState {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;
    int halfwidth = 7;
    int decrement = 1;

    TosState() = default;
    TosState(int w, int h, int k, int dec)
        : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0), halfwidth(k), decrement(dec) {}

    std::uint8_t at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

enum class PolarityFilter { Any, OnOnly, OffOnly };

struct RepresentationConfig {
    double tau = 0.03;
    int tos_halfwidth = 7;
    int tos_decrement = 1;
    double ts_threshold = 0.1;
    /// Negative means "255 - 2k".
    int tos_threshold = -1;
    PolarityFilter polarity = PolarityFilter::Any;

    int effective_tos_threshold() const { return tos_threshold >= 0 ? tos_threshold : 255 - 2 * tos_halfwidth; }
    void validate() const;
};

/// Exponentially decayed time surface from all events with t <= t_render.
SurfaceMap render_ts(const EventStream& stream, double t_render, double tau);

/// Applies one event to the TOS in place. Throws for out-of-grid events.
void apply_tos_event(TosState& state, const Event& e);

/// Value-semantics wrapper around apply_tos_event.
TosState update_tos(TosState state, const Event& e);

/// Keeps the TOS value (scaled to [0,1]) where both the time surface and the
/// TOS are above their thresholds.
SurfaceMap render_combined(const SurfaceMap& ts, const TosState& tos, double theta_ts, int theta_tos);

/// Streams events in time order and renders surfaces at increasing times.
/// TOS is updated event by event; the time surface is produced lazily from
/// a last-timestamp map kept in the same pass.
class SurfaceRenderer {
public:
    SurfaceRenderer(const EventStream& stream, const RepresentationConfig& cfg);

    /// Consumes all events with t <= t. Times must not decrease.
    void advance_to(double t);

    SurfaceMap time_surface() const;
    const TosState& tos() const { return tos_; }
    SurfaceMap combined() const;
    double time() const { return now_; }

private:
    bool accepts(const Event& e) const;

    const EventStream& stream_;
    RepresentationConfig cfg_;
    std::size_t next_ = 0;
    double now_;
    std::vector<double> last_;
    TosState tos_;
};

/// Writes a P5 8-bit PGM (values scaled by 255, row-major).
void write_pgm(const SurfaceMap& surface, const std::filesystem::path& path);

}  // namespace evcalib
