#include "evcalib/representation.hpp"

#include "evcalib/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace evcalib {
namespace {

constexpr double kNever = -std::numeric_limits<double>::infinity();

SurfaceMap surface_from_last(const std::vector<double>& last, int w, int h, double t_render, double tau) {
    SurfaceMap out(w, h, t_render);
    for (std::size_t i = 0; i < last.size(); ++i) {
        if (last[i] == kNever) continue;
        out.values[i] = static_cast<float>(std::exp(-(t_render - last[i]) / tau));
    }
    return out;
}

}  // namespace

void RepresentationConfig::validate() const {
    if (!(tau > 0.0)) throw Error("tau must be positive");
    if (tos_halfwidth < 0) throw Error("TOS half-width must be non-negative");
    if (tos_decrement < 0 || tos_decrement > 255) throw Error("TOS decrement must be in [0, 255]");
    if (!(ts_threshold >= 0.0 && ts_threshold < 1.0)) throw Error("TS threshold must be in [0, 1)");
    if (effective_tos_threshold() > 255) throw Error("TOS threshold must be at most 255");
}

SurfaceMap render_ts(const EventStream& stream, double t_render, double tau) {
    if (!(tau > 0.0)) throw Error("tau must be positive");
    if (!stream.events.empty() && t_render < stream.events.front().t)
        throw Error("render time precedes the first event");
    std::vector<double> last(static_cast<std::size_t>(stream.width) * stream.height, kNever);
    for (const Event& e : stream.events) {
        if (e.t > t_render) break;
        last[static_cast<std::size_t>(e.y) * stream.width + e.x] = e.t;
    }
    return surface_from_last(last, stream.width, stream.height, t_render, tau);
}

void apply_tos_event(TosState& state, const Event& e) {
    if (e.x < 0 || e.x >= state.width || e.y < 0 || e.y >= state.height)
        throw Error("event outside the TOS grid");
    const int k = state.halfwidth;
    const int x0 = std::max(0, e.x - k), x1 = std::min(state.width - 1, e.x + k);
    const int y0 = std::max(0, e.y - k), y1 = std::min(state.height - 1, e.y + k);
    for (int y = y0; y <= y1; ++y) {
        std::uint8_t* row = state.values.data() + static_cast<std::size_t>(y) * state.width;
        for (int x = x0; x <= x1; ++x) {
            const int v = static_cast<int>(row[x]) - state.decrement;
            row[x] = static_cast<std::uint8_t>(v < 0 ? 0 : v);
        }
    }
    state.values[static_cast<std::size_t>(e.y) * state.width + e.x] = 255;
}

TosState update_tos(TosState state, const Event& e) {
    apply_tos_event(state, e);
    return state;
}

SurfaceMap render_combined(const SurfaceMap& ts, const TosState& tos, double theta_ts, int theta_tos) {
    if (ts.width != tos.width || ts.height != tos.height) throw Error("surface dimension mismatch");
    SurfaceMap out(ts.width, ts.height, ts.render_time);
    simd::active_kernels().combine_mask(ts.values.data(), tos.values.data(), ts.values.size(),
                                        static_cast<float>(theta_ts), theta_tos, out.values.data());
    return out;
}

SurfaceRenderer::SurfaceRenderer(const EventStream& stream, const RepresentationConfig& cfg)
    : stream_(stream),
      cfg_(cfg),
      now_(kNever),
      last_(static_cast<std::size_t>(stream.width) * stream.height, kNever),
      tos_(stream.width, stream.height, cfg.tos_halfwidth, cfg.tos_decrement) {
    cfg_.validate();
}

bool SurfaceRenderer::accepts(const Event& e) const {
    switch (cfg_.polarity) {
        case PolarityFilter::OnOnly: return e.polarity;
        case PolarityFilter::OffOnly: return !e.polarity;
        case PolarityFilter::Any: break;
    }
    return true;
}

void SurfaceRenderer::advance_to(double t) {
    if (t < now_) throw Error("surface renderer cannot move backwards in time");
    const auto& ev = stream_.events;
    while (next_ < ev.size() && ev[next_].t <= t) {
        const Event& e = ev[next_++];
        if (!accepts(e)) continue;
        apply_tos_event(tos_, e);
        last_[static_cast<std::size_t>(e.y) * stream_.width + e.x] = e.t;
    }
    now_ = t;
}

SurfaceMap SurfaceRenderer::time_surface() const {
    return surface_from_last(last_, stream_.width, stream_.height, now_, cfg_.tau);
}

SurfaceMap SurfaceRenderer::combined() const {
    return render_combined(time_surface(), tos_, cfg_.ts_threshold, cfg_.effective_tos_threshold());
}

void write_pgm(const SurfaceMap& surface, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "P5\n" << surface.width << ' ' << surface.height << "\n255\n";
    std::vector<unsigned char> bytes(surface.values.size());
    std::transform(surface.values.begin(), surface.values.end(), bytes.begin(), [](float v) {
        return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
    });
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace evcalib
