#pragma once

// Analytical model of the accelerator: per-kernel cycle counts, pipelined
// end-to-end frame time, pixel budgets, host bandwidth and area/power.
//
// Frame model for one application profile at N neural field processors:
//
//   Q          = pixels * samples_per_pixel
//   ie_cycles  = ceil(Q / (P * N)) * 2^d * read_latency * ceil(F / word) * ceil(L / E)
//                with E engines per NFP and P = max(1, floor(E / L)) points per NFP
//   mlp_cycles = ceil(Q / N) * layer_transitions
//   t_ngpc     = (ie_cycles + mlp_cycles) / clock
//   t_rest     = frac_rest * baseline / rest_speedup
//   frame      = max(t_ngpc, t_rest) + min(t_ngpc, t_rest) / batches
//
// Batches overlap, so the slower stage sets the steady state and the faster
// one only shows up once as pipeline fill.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ngpc/common.hpp"
#include "ngpc/encoding.hpp"
#include "ngpc/pipelines.hpp"

namespace ngpc::perf {

inline constexpr std::array<std::uint32_t, 4> kDefaultNfpCounts{8, 16, 32, 64};
inline constexpr std::array<double, 4> kFpsTargets{30.0, 60.0, 90.0, 120.0};

struct ArchParams {
    std::uint32_t nfp_count = 8;
    std::uint32_t ie_engines_per_nfp = 16;
    std::uint64_t grid_sram_bytes_per_engine = 1ull << 20;
    std::uint32_t mac_rows = 64;
    std::uint32_t mac_cols = 64;
    double clock_hz = 8e9;
    std::uint32_t sram_read_latency_cycles = 1;
    std::uint32_t sram_word_features = 2;  // features returned by one SRAM read
    double dram_access_ns = 50.0;
    double host_mem_bw_gbps = 936.2;
    double rest_kernel_speedup = 9.94;
    std::uint64_t batch_size = 1ull << 22;  // queries per pipelined batch

    void validate() const {
        if (nfp_count == 0 || ie_engines_per_nfp == 0 || grid_sram_bytes_per_engine == 0 || mac_rows == 0 ||
            mac_cols == 0 || sram_read_latency_cycles == 0 || sram_word_features == 0 || batch_size == 0)
            throw ConfigError("architecture parameters must be positive");
        for (double v : {clock_hz, dram_access_ns, host_mem_bw_gbps, rest_kernel_speedup})
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("architecture parameters must be positive");
    }
};

struct KernelFractions {
    double ie = 0.0;
    double mlp = 0.0;
    double rest = 1.0;

    void validate() const {
        if (!(ie >= 0.0 && mlp >= 0.0 && rest >= 0.0)) throw ConfigError("kernel fractions must be non-negative");
        if (std::abs(ie + mlp + rest - 1.0) > 1e-6) throw ConfigError("kernel fractions must sum to 1");
    }
};

struct AppProfile {
    App app = App::NeRF;
    GridKind encoding = GridKind::Hash;
    KernelFractions fractions;
    double baseline_frame_ms = 0.0;  // host time at the reference frame
    Frame reference_frame{1920, 1080};
    Frame frame{1920, 1080};
    std::uint32_t samples_per_pixel = 1;
    std::uint32_t dims = 3;
    std::uint32_t levels = 16;
    std::uint32_t features = 2;
    std::uint32_t table_size = 1u << 19;
    std::uint32_t mlp_layer_transitions = 5;
    std::uint32_t input_elements = 3;   // per pixel, per network pass
    std::uint32_t output_elements = 3;
    double bytes_per_element = 100.0;
    std::uint32_t network_passes = 1;

    void validate() const {
        fractions.validate();
        if (!(baseline_frame_ms >= 0.0) || !std::isfinite(baseline_frame_ms))
            throw ConfigError("baseline frame time must be non-negative");
        if (reference_frame.pixels() == 0) throw ConfigError("reference frame must be non-empty");
        if (samples_per_pixel == 0 || levels == 0 || features == 0 || network_passes == 0)
            throw ConfigError("profile counts must be positive");
        if (dims < 1 || dims > 3) throw ConfigError("profile dimension must be 1..3");
        if (!(bytes_per_element >= 0.0)) throw ConfigError("bytes per element must be non-negative");
    }

    [[nodiscard]] std::uint64_t queries() const noexcept {
        return static_cast<std::uint64_t>(frame.pixels()) * samples_per_pixel;
    }

    /// Host baseline scaled linearly from the reference frame.
    [[nodiscard]] double baseline_ms() const noexcept {
        return baseline_frame_ms * static_cast<double>(frame.pixels()) / static_cast<double>(reference_frame.pixels());
    }

    [[nodiscard]] AppProfile with_pixels(std::uint64_t pixels) const {
        AppProfile p = *this;
        // A 1-row frame carries an arbitrary pixel count through the model.
        p.frame = {static_cast<std::uint32_t>(std::min<std::uint64_t>(pixels, 0xffffffffu)), pixels == 0 ? 0u : 1u};
        return p;
    }
};

namespace detail {

[[nodiscard]] inline std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) noexcept { return (a + b - 1) / b; }

}  // namespace detail

[[nodiscard]] inline std::uint32_t points_per_nfp(const AppProfile& p, const ArchParams& a) noexcept {
    return std::max<std::uint32_t>(1, a.ie_engines_per_nfp / p.levels);
}

[[nodiscard]] inline std::uint64_t ie_engine_cycles(const AppProfile& p, const ArchParams& a) {
    p.validate();
    a.validate();
    const std::uint64_t q = p.queries();
    if (q == 0) return 0;
    const std::uint64_t rounds = detail::ceil_div(q, static_cast<std::uint64_t>(points_per_nfp(p, a)) * a.nfp_count);
    const std::uint64_t reads = detail::ceil_div(p.features, a.sram_word_features);
    const std::uint64_t passes = detail::ceil_div(p.levels, a.ie_engines_per_nfp);
    return rounds * (1ull << p.dims) * a.sram_read_latency_cycles * reads * passes;
}

[[nodiscard]] inline std::uint64_t mlp_engine_cycles(const AppProfile& p, const ArchParams& a) {
    p.validate();
    a.validate();
    return detail::ceil_div(p.queries(), a.nfp_count) * p.mlp_layer_transitions;
}

/// 1 / sum(f_k / s_k). Infinite kernel speedups are allowed.
[[nodiscard]] inline double amdahl_bound(const KernelFractions& f, double s_ie, double s_mlp, double s_rest) {
    f.validate();
    if (!(s_ie > 0.0 && s_mlp > 0.0 && s_rest > 0.0)) throw DomainError("kernel speedups must be positive");
    const double denom = f.ie / s_ie + f.mlp / s_mlp + f.rest / s_rest;
    return denom == 0.0 ? INFINITY : 1.0 / denom;
}

struct FrameTiming {
    std::uint64_t queries = 0;
    std::uint64_t ie_cycles = 0;
    std::uint64_t mlp_cycles = 0;
    std::uint64_t batches = 1;
    double baseline_ms = 0.0;
    double ngpc_ms = 0.0;
    double rest_ms = 0.0;
    double frame_ms = 0.0;
    double s_ie = 0.0;   // host IE time / accelerator IE time
    double s_mlp = 0.0;  // host MLP time / accelerator MLP time
    double speedup = 0.0;

    /// The accelerator no longer limits the frame.
    [[nodiscard]] bool plateaued() const noexcept { return ngpc_ms <= rest_ms; }
};

[[nodiscard]] inline FrameTiming frame_timing(const AppProfile& p, const ArchParams& a) {
    FrameTiming t;
    t.queries = p.queries();
    t.ie_cycles = ie_engine_cycles(p, a);
    t.mlp_cycles = mlp_engine_cycles(p, a);
    t.batches = std::max<std::uint64_t>(1, detail::ceil_div(t.queries, a.batch_size));
    t.baseline_ms = p.baseline_ms();
    const double ms_per_cycle = 1e3 / a.clock_hz;
    const double ie_ms = static_cast<double>(t.ie_cycles) * ms_per_cycle;
    const double mlp_ms = static_cast<double>(t.mlp_cycles) * ms_per_cycle;
    t.ngpc_ms = ie_ms + mlp_ms;
    t.rest_ms = p.fractions.rest * t.baseline_ms / a.rest_kernel_speedup;
    t.frame_ms = std::max(t.ngpc_ms, t.rest_ms) + std::min(t.ngpc_ms, t.rest_ms) / static_cast<double>(t.batches);
    t.s_ie = ie_ms > 0.0 ? p.fractions.ie * t.baseline_ms / ie_ms : INFINITY;
    t.s_mlp = mlp_ms > 0.0 ? p.fractions.mlp * t.baseline_ms / mlp_ms : INFINITY;
    t.speedup = t.frame_ms > 0.0 ? t.baseline_ms / t.frame_ms : 0.0;
    return t;
}

[[nodiscard]] inline double ngpc_speedup(const AppProfile& p, const ArchParams& a) {
    if (p.frame.pixels() == 0) throw DomainError("speedup of an empty frame is undefined");
    return frame_timing(p, a).speedup;
}

/// Ceiling on the pipelined speedup: the accelerated rest kernels alone.
[[nodiscard]] inline double pipeline_bound(const AppProfile& p, const ArchParams& a) {
    return amdahl_bound(p.fractions, INFINITY, INFINITY, a.rest_kernel_speedup);
}

/// Largest pixel count whose modeled frame time fits 1000/fps ms.
[[nodiscard]] inline std::uint64_t pixels_within_budget(const AppProfile& p, const ArchParams& a, double fps) {
    if (!(fps > 0.0)) throw DomainError("FPS target must be positive");
    const double budget = 1000.0 / fps;
    auto fits = [&](std::uint64_t px) { return frame_timing(p.with_pixels(px), a).frame_ms <= budget; };
    std::uint64_t lo = 0;
    std::uint64_t hi = 1;
    while (fits(hi)) {
        lo = hi;
        if (hi >= 0x80000000ull) return 0xffffffffull;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        (fits(mid) ? lo : hi) = mid;
    }
    return lo;
}

struct Resolution {
    const char* name;
    std::uint32_t width;
    std::uint32_t height;
    [[nodiscard]] std::uint64_t pixels() const noexcept { return static_cast<std::uint64_t>(width) * height; }
};

inline constexpr std::array<Resolution, 6> kResolutions{{
    {"HD", 1280, 720},
    {"FHD", 1920, 1080},
    {"QHD", 2560, 1440},
    {"4K", 3840, 2160},
    {"5K", 5120, 2880},
    {"8K", 7680, 4320},
}};

/// Highest named resolution that fits, or "-" when none does.
[[nodiscard]] inline std::string resolution_class(std::uint64_t pixels) {
    std::string best = "-";
    for (const auto& r : kResolutions)
        if (pixels >= r.pixels()) best = r.name;
    return best;
}

struct Bandwidth {
    double input_gbps = 0.0;
    double output_gbps = 0.0;
    double total_gbps = 0.0;
    double access_ms = 0.0;
};

inline constexpr double kBytesPerGB = 1024.0 * 1024.0 * 1024.0;

/// Host traffic between the GPU and the accelerator at `fps`, and the time
/// the host memory needs to serve one frame of it.
[[nodiscard]] inline Bandwidth bandwidth_model(const AppProfile& p, double fps, double host_mem_bw_gbps = 936.2) {
    if (!(fps > 0.0) || !(host_mem_bw_gbps > 0.0)) throw DomainError("FPS and host bandwidth must be positive");
    const double px_per_s = static_cast<double>(p.frame.pixels()) * fps;
    Bandwidth b;
    b.input_gbps = px_per_s * p.input_elements * p.bytes_per_element / kBytesPerGB;
    b.output_gbps = px_per_s * p.output_elements * p.bytes_per_element / kBytesPerGB;
    b.total_gbps = p.network_passes * (b.input_gbps + b.output_gbps);
    b.access_ms = b.total_gbps / fps / host_mem_bw_gbps * 1e3;
    return b;
}

struct AreaPower {
    double area_pct = 0.0;
    double power_pct = 0.0;
};

struct AreaPowerAnchor {
    std::uint32_t nfp;
    double area_pct;
    double power_pct;
};

inline constexpr std::array<AreaPowerAnchor, 4> kAreaPowerAnchors{{
    {8, 4.52, 2.75},
    {16, 9.04, 5.51},
    {32, 18.01, 11.03},
    {64, 36.18, 22.06},
}};

/// GPU die area and power overhead of N NFPs. Piecewise linear through the
/// anchors; proportional to N outside them.
[[nodiscard]] inline AreaPower area_power(const ArchParams& a) {
    const double n = a.nfp_count;
    const auto& first = kAreaPowerAnchors.front();
    const auto& last = kAreaPowerAnchors.back();
    if (n <= first.nfp) return {first.area_pct * n / first.nfp, first.power_pct * n / first.nfp};
    if (n >= last.nfp) return {last.area_pct * n / last.nfp, last.power_pct * n / last.nfp};
    for (std::size_t i = 1; i < kAreaPowerAnchors.size(); ++i) {
        const auto& lo = kAreaPowerAnchors[i - 1];
        const auto& hi = kAreaPowerAnchors[i];
        if (n <= hi.nfp) {
            const double t = (n - lo.nfp) / static_cast<double>(hi.nfp - lo.nfp);
            return {lo.area_pct + t * (hi.area_pct - lo.area_pct), lo.power_pct + t * (hi.power_pct - lo.power_pct)};
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Reference profiles
// ---------------------------------------------------------------------------

/// Host kernel-time split averaged over the four applications.
[[nodiscard]] inline KernelFractions encoding_average_fractions(GridKind kind) {
    double ie = 0.0, mlp = 0.0;
    switch (kind) {
        case GridKind::Hash: ie = 0.4024, mlp = 0.3212; break;
        case GridKind::Dense: ie = 0.2463, mlp = 0.3537; break;
        case GridKind::Tiled: ie = 0.2415, mlp = 0.3581; break;
    }
    return {ie, mlp, 1.0 - ie - mlp};
}

/// Relative weight of the non-accelerated kernels per application (mean 1).
[[nodiscard]] inline double rest_weight(App app) noexcept {
    switch (app) {
        case App::NeRF: return 0.7;
        case App::NSDF: return 0.5;
        case App::NVR: return 1.9;
        case App::GIA: return 0.9;
    }
    return 1.0;
}

/// Per-application split whose mean over the four applications equals the
/// encoding average; IE and MLP keep their average ratio.
[[nodiscard]] inline KernelFractions app_fractions(App app, GridKind kind) {
    const auto avg = encoding_average_fractions(kind);
    const double rest = rest_weight(app) * avg.rest;
    const double scale = (1.0 - rest) / (avg.ie + avg.mlp);
    return {avg.ie * scale, avg.mlp * scale, 1.0 - avg.ie * scale - avg.mlp * scale};
}

/// Host frame time at 1920x1080 in milliseconds.
[[nodiscard]] inline double baseline_frame_ms(App app, GridKind kind) {
    static constexpr double table[3][4] = {
        // NeRF, NSDF, NVR, GIA
        {231.0, 27.87, 6.32, 2.12},
        {140.0, 17.57, 4.73, 1.48},
        {140.0, 18.88, 5.05, 1.33},
    };
    return table[static_cast<int>(kind)][static_cast<int>(app)];
}

[[nodiscard]] inline std::uint32_t samples_per_pixel(App app) noexcept {
    switch (app) {
        case App::NeRF: return 40;
        case App::NSDF: return 3;
        case App::NVR: return 1;
        case App::GIA: return 1;
    }
    return 1;
}

[[nodiscard]] inline AppProfile default_profile(App app, GridKind kind) {
    const auto pipe = preset_pipeline_config(app, kind);
    AppProfile p;
    p.app = app;
    p.encoding = kind;
    p.fractions = app_fractions(app, kind);
    p.baseline_frame_ms = baseline_frame_ms(app, kind);
    p.samples_per_pixel = samples_per_pixel(app);
    p.dims = pipe.encoding.dims;
    p.levels = pipe.encoding.levels;
    p.features = pipe.encoding.features;
    p.table_size = pipe.encoding.table_size;
    // Layer transitions: NeRF runs a 4-layer density and a 5-layer color net.
    p.mlp_layer_transitions = app == App::NeRF ? (pipe.density_hidden_layers + 1) + (pipe.hidden_layers + 1)
                                               : pipe.hidden_layers + 1;
    p.input_elements = app == App::NeRF ? 6 : 3;
    p.output_elements = app == App::NeRF ? 4 : 3;
    p.network_passes = app == App::NeRF ? 2 : 1;
    return p;
}

[[nodiscard]] inline std::vector<AppProfile> default_profiles() {
    std::vector<AppProfile> out;
    for (GridKind k : {GridKind::Hash, GridKind::Dense, GridKind::Tiled})
        for (App a : kAllApps) out.push_back(default_profile(a, k));
    return out;
}

[[nodiscard]] inline std::vector<ArchParams> default_archs(const ArchParams& base = {}) {
    std::vector<ArchParams> out;
    for (auto n : kDefaultNfpCounts) {
        ArchParams a = base;
        a.nfp_count = n;
        out.push_back(a);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct PerfReport {
    App app = App::NeRF;
    GridKind encoding = GridKind::Hash;
    std::uint32_t nfp = 0;
    FrameTiming timing;
    double amdahl_bound = 0.0;
    std::array<std::uint64_t, kFpsTargets.size()> pixels_within_budget{};
    Bandwidth bandwidth;  // at 60 FPS
    AreaPower area_power;
    bool level_table_fits_sram = true;

    [[nodiscard]] const char* bottleneck() const noexcept { return timing.plateaued() ? "rest" : "ngpc"; }
};

/// Whether one level's table fits an engine's SRAM (half-precision entries).
[[nodiscard]] inline bool level_table_fits_sram(const AppProfile& p, const ArchParams& a) noexcept {
    return static_cast<std::uint64_t>(p.table_size) * p.features * 2 <= a.grid_sram_bytes_per_engine;
}

[[nodiscard]] inline PerfReport evaluate(const AppProfile& p, const ArchParams& a) {
    PerfReport r;
    r.app = p.app;
    r.encoding = p.encoding;
    r.nfp = a.nfp_count;
    r.timing = frame_timing(p, a);
    r.amdahl_bound = pipeline_bound(p, a);
    for (std::size_t i = 0; i < kFpsTargets.size(); ++i) r.pixels_within_budget[i] = pixels_within_budget(p, a, kFpsTargets[i]);
    r.bandwidth = bandwidth_model(p, 60.0, a.host_mem_bw_gbps);
    r.area_power = area_power(a);
    r.level_table_fits_sram = level_table_fits_sram(p, a);
    return r;
}

/// One report per (profile, arch), profile-major, in input order.
[[nodiscard]] inline std::vector<PerfReport> sweep(const std::vector<AppProfile>& profiles,
                                                   const std::vector<ArchParams>& archs, unsigned threads = 1) {
    for (const auto& p : profiles) p.validate();
    for (const auto& a : archs) a.validate();
    std::vector<PerfReport> out(profiles.size() * archs.size());
    parallel_for(out.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) out[i] = evaluate(profiles[i / archs.size()], archs[i % archs.size()]);
    });
    return out;
}

/// Mean end-to-end speedup over the applications of one encoding at one N.
[[nodiscard]] inline double mean_speedup(const std::vector<PerfReport>& rows, GridKind kind, std::uint32_t nfp) {
    double s = 0.0;
    int n = 0;
    for (const auto& r : rows)
        if (r.encoding == kind && r.nfp == nfp) {
            s += r.timing.speedup;
            ++n;
        }
    if (n == 0) throw DomainError("no rows for the requested encoding and NFP count");
    return s / n;
}

}  // namespace ngpc::perf
