#pragma once

// JSON configuration files and CSV/JSON report writers.
//
// Every loader starts from the built-in defaults and overrides only the keys
// present, so partial files are fine. Unknown keys are rejected to catch
// typos.

#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "ngpc/encoding.hpp"
#include "ngpc/perfmodel.hpp"
#include "ngpc/pipelines.hpp"

namespace ngpc::config {

using Json = nlohmann::ordered_json;

namespace detail {

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* what) {
    if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(std::string("unknown key '") + k + "' in " + what);
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

[[nodiscard]] inline std::string read_string(const Json& j, const char* key, std::string fallback) {
    read(j, key, fallback);
    return fallback;
}

[[nodiscard]] inline std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace detail

// --- encoding --------------------------------------------------------------

[[nodiscard]] inline Json to_json(const EncodingConfig& c) {
    return Json{{"kind", to_string(c.kind)},
                {"dims", c.dims},
                {"base_resolution", c.base_resolution},
                {"growth", c.growth},
                {"features", c.features},
                {"table_size", c.table_size},
                {"levels", c.levels},
                {"primes", c.primes},
                {"precision", static_cast<int>(c.precision)}};
}

[[nodiscard]] inline EncodingConfig encoding_from_json(const Json& j, EncodingConfig c = {}) {
    detail::check_keys(j, {"kind", "dims", "base_resolution", "growth", "features", "table_size", "levels", "primes",
                           "precision"},
                       "encoding");
    if (j.contains("kind")) c.kind = grid_kind_from_string(detail::read_string(j, "kind", ""));
    detail::read(j, "dims", c.dims);
    detail::read(j, "base_resolution", c.base_resolution);
    detail::read(j, "growth", c.growth);
    detail::read(j, "features", c.features);
    detail::read(j, "table_size", c.table_size);
    detail::read(j, "levels", c.levels);
    if (j.contains("primes")) {
        detail::read(j, "primes", c.primes);
    } else if (c.primes.size() != c.dims) {
        c.primes.assign(kDefaultPrimes.begin(), kDefaultPrimes.begin() + std::min(c.dims, kMaxDims));
    }
    if (j.contains("precision")) {
        int p = 0;
        detail::read(j, "precision", p);
        if (p != 16 && p != 32) throw ConfigError("precision must be 16 or 32");
        c.precision = p == 16 ? Precision::F16 : Precision::F32;
    }
    c.validate();
    return c;
}

// --- camera ----------------------------------------------------------------

[[nodiscard]] inline Json to_json(const Camera& c) {
    return Json{{"pose", c.pose}, {"focal", c.focal}, {"principal_point", c.principal_point}, {"near", c.near},
                {"far", c.far}};
}

[[nodiscard]] inline Camera camera_from_json(const Json& j) {
    detail::check_keys(j, {"pose", "focal", "principal_point", "near", "far"}, "camera");
    Camera c;
    detail::read(j, "pose", c.pose);
    detail::read(j, "focal", c.focal);
    detail::read(j, "principal_point", c.principal_point);
    detail::read(j, "near", c.near);
    detail::read(j, "far", c.far);
    c.validate();
    return c;
}

/// Camera on the +z side of the unit box looking at its center.
[[nodiscard]] inline Camera default_camera(const Frame& frame) {
    Camera c;
    c.pose = {1, 0, 0, 0.5, 0, 1, 0, 0.5, 0, 0, 1, 2.2};
    c.focal = 1.2 * frame.width;
    c.principal_point = {frame.width / 2.0, frame.height / 2.0};
    c.near = 0.0;
    c.far = 6.0;
    return c;
}

// --- pipeline --------------------------------------------------------------

[[nodiscard]] inline Json to_json(const PipelineConfig& p) {
    return Json{{"app", to_string(p.app)},
                {"encoding", to_json(p.encoding)},
                {"hidden_width", p.hidden_width},
                {"density_hidden_layers", p.density_hidden_layers},
                {"latent_width", p.latent_width},
                {"hidden_layers", p.hidden_layers},
                {"samples_per_ray", p.samples_per_ray},
                {"width", p.frame.width},
                {"height", p.frame.height},
                {"slice_z", p.slice_z},
                {"distance_scale", p.distance_scale}};
}

/// Starts from the preset for (app, encoding kind) and applies overrides.
[[nodiscard]] inline PipelineConfig pipeline_from_json(const Json& j) {
    detail::check_keys(j, {"app", "preset", "encoding", "hidden_width", "density_hidden_layers", "latent_width",
                           "hidden_layers", "samples_per_ray", "width", "height", "slice_z", "distance_scale"},
                       "pipeline");
    const App app = app_from_string(detail::read_string(j, "app", "NeRF"));
    const GridKind preset = grid_kind_from_string(detail::read_string(j, "preset", "MRHG"));
    PipelineConfig p = preset_pipeline_config(app, preset);
    if (j.contains("encoding")) p.encoding = encoding_from_json(j.at("encoding"), p.encoding);
    detail::read(j, "hidden_width", p.hidden_width);
    detail::read(j, "density_hidden_layers", p.density_hidden_layers);
    detail::read(j, "latent_width", p.latent_width);
    detail::read(j, "hidden_layers", p.hidden_layers);
    detail::read(j, "samples_per_ray", p.samples_per_ray);
    detail::read(j, "width", p.frame.width);
    detail::read(j, "height", p.frame.height);
    detail::read(j, "slice_z", p.slice_z);
    detail::read(j, "distance_scale", p.distance_scale);
    p.validate();
    return p;
}

// --- perf model ------------------------------------------------------------

[[nodiscard]] inline Json to_json(const perf::ArchParams& a) {
    return Json{{"nfp_count", a.nfp_count},
                {"ie_engines_per_nfp", a.ie_engines_per_nfp},
                {"grid_sram_bytes_per_engine", a.grid_sram_bytes_per_engine},
                {"mac_rows", a.mac_rows},
                {"mac_cols", a.mac_cols},
                {"clock_hz", a.clock_hz},
                {"sram_read_latency_cycles", a.sram_read_latency_cycles},
                {"sram_word_features", a.sram_word_features},
                {"dram_access_ns", a.dram_access_ns},
                {"host_mem_bw_gbps", a.host_mem_bw_gbps},
                {"rest_kernel_speedup", a.rest_kernel_speedup},
                {"batch_size", a.batch_size}};
}

[[nodiscard]] inline perf::ArchParams arch_from_json(const Json& j, perf::ArchParams a = {}) {
    detail::check_keys(j, {"nfp_count", "ie_engines_per_nfp", "grid_sram_bytes_per_engine", "mac_rows", "mac_cols",
                           "clock_hz", "sram_read_latency_cycles", "sram_word_features", "dram_access_ns",
                           "host_mem_bw_gbps", "rest_kernel_speedup", "batch_size"},
                       "arch");
    detail::read(j, "nfp_count", a.nfp_count);
    detail::read(j, "ie_engines_per_nfp", a.ie_engines_per_nfp);
    detail::read(j, "grid_sram_bytes_per_engine", a.grid_sram_bytes_per_engine);
    detail::read(j, "mac_rows", a.mac_rows);
    detail::read(j, "mac_cols", a.mac_cols);
    detail::read(j, "clock_hz", a.clock_hz);
    detail::read(j, "sram_read_latency_cycles", a.sram_read_latency_cycles);
    detail::read(j, "sram_word_features", a.sram_word_features);
    detail::read(j, "dram_access_ns", a.dram_access_ns);
    detail::read(j, "host_mem_bw_gbps", a.host_mem_bw_gbps);
    detail::read(j, "rest_kernel_speedup", a.rest_kernel_speedup);
    detail::read(j, "batch_size", a.batch_size);
    a.validate();
    return a;
}

[[nodiscard]] inline Json to_json(const perf::AppProfile& p) {
    return Json{{"app", to_string(p.app)},
                {"encoding", encoding_label(p.encoding)},
                {"frac_ie", p.fractions.ie},
                {"frac_mlp", p.fractions.mlp},
                {"frac_rest", p.fractions.rest},
                {"baseline_frame_ms", p.baseline_frame_ms},
                {"reference_width", p.reference_frame.width},
                {"reference_height", p.reference_frame.height},
                {"width", p.frame.width},
                {"height", p.frame.height},
                {"samples_per_pixel", p.samples_per_pixel},
                {"dims", p.dims},
                {"levels", p.levels},
                {"features", p.features},
                {"table_size", p.table_size},
                {"mlp_layer_transitions", p.mlp_layer_transitions},
                {"input_elements", p.input_elements},
                {"output_elements", p.output_elements},
                {"bytes_per_element", p.bytes_per_element},
                {"network_passes", p.network_passes}};
}

/// Starts from the reference profile of (app, encoding) and applies overrides.
[[nodiscard]] inline perf::AppProfile profile_from_json(const Json& j) {
    detail::check_keys(j, {"app", "encoding", "frac_ie", "frac_mlp", "frac_rest", "baseline_frame_ms",
                           "reference_width", "reference_height", "width", "height", "samples_per_pixel", "dims",
                           "levels", "features", "table_size", "mlp_layer_transitions", "input_elements",
                           "output_elements", "bytes_per_element", "network_passes"},
                       "profile");
    auto p = perf::default_profile(app_from_string(detail::read_string(j, "app", "NeRF")),
                                 grid_kind_from_string(detail::read_string(j, "encoding", "MRHG")));
    detail::read(j, "frac_ie", p.fractions.ie);
    detail::read(j, "frac_mlp", p.fractions.mlp);
    detail::read(j, "frac_rest", p.fractions.rest);
    detail::read(j, "baseline_frame_ms", p.baseline_frame_ms);
    detail::read(j, "reference_width", p.reference_frame.width);
    detail::read(j, "reference_height", p.reference_frame.height);
    detail::read(j, "width", p.frame.width);
    detail::read(j, "height", p.frame.height);
    detail::read(j, "samples_per_pixel", p.samples_per_pixel);
    detail::read(j, "dims", p.dims);
    detail::read(j, "levels", p.levels);
    detail::read(j, "features", p.features);
    detail::read(j, "table_size", p.table_size);
    detail::read(j, "mlp_layer_transitions", p.mlp_layer_transitions);
    detail::read(j, "input_elements", p.input_elements);
    detail::read(j, "output_elements", p.output_elements);
    detail::read(j, "bytes_per_element", p.bytes_per_element);
    detail::read(j, "network_passes", p.network_passes);
    p.validate();
    return p;
}

struct SweepConfig {
    perf::ArchParams arch;
    std::vector<std::uint32_t> nfp_counts{perf::kDefaultNfpCounts.begin(), perf::kDefaultNfpCounts.end()};
    std::vector<perf::AppProfile> profiles = perf::default_profiles();

    [[nodiscard]] std::vector<perf::ArchParams> archs() const {
        std::vector<perf::ArchParams> out;
        for (auto n : nfp_counts) {
            auto a = arch;
            a.nfp_count = n;
            out.push_back(a);
        }
        return out;
    }
};

/// {"arch": {...}, "nfp_counts": [...], "profiles": [{...}, ...]}.
/// NFP counts are sorted and deduplicated.
[[nodiscard]] inline SweepConfig sweep_from_json(const Json& j) {
    detail::check_keys(j, {"arch", "nfp_counts", "profiles"}, "sweep config");
    SweepConfig s;
    if (j.contains("arch")) s.arch = arch_from_json(j.at("arch"));
    detail::read(j, "nfp_counts", s.nfp_counts);
    std::sort(s.nfp_counts.begin(), s.nfp_counts.end());
    s.nfp_counts.erase(std::unique(s.nfp_counts.begin(), s.nfp_counts.end()), s.nfp_counts.end());
    if (std::find(s.nfp_counts.begin(), s.nfp_counts.end(), 0u) != s.nfp_counts.end())
        throw ConfigError("NFP counts must be positive");
    if (j.contains("profiles")) {
        s.profiles.clear();
        for (const auto& pj : j.at("profiles")) s.profiles.push_back(profile_from_json(pj));
    }
    return s;
}

[[nodiscard]] inline Json to_json(const SweepConfig& s) {
    Json profiles = Json::array();
    for (const auto& p : s.profiles) profiles.push_back(to_json(p));
    return Json{{"arch", to_json(s.arch)}, {"nfp_counts", s.nfp_counts}, {"profiles", profiles}};
}

// --- reports ---------------------------------------------------------------

inline constexpr const char* kSweepColumns =
    "app,encoding,nfp,queries,ie_cycles,mlp_cycles,ie_speedup,mlp_speedup,speedup,amdahl_bound,baseline_ms,frame_ms,"
    "ngpc_ms,rest_ms,bottleneck,px_30fps,px_60fps,px_90fps,px_120fps,area_pct,power_pct";

/// Writes `# key=value` lines for every entry of a flat JSON object.
inline void write_header(std::ostream& os, const Json& settings) {
    for (const auto& [k, v] : settings.items()) os << "# " << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
}

inline void write_sweep_csv(std::ostream& os, const std::vector<perf::PerfReport>& rows) {
    os << kSweepColumns << '\n';
    for (const auto& r : rows) {
        const auto& t = r.timing;
        os << to_string(r.app) << ',' << encoding_label(r.encoding) << ',' << r.nfp << ',' << t.queries << ','
           << t.ie_cycles << ',' << t.mlp_cycles << ',' << detail::fmt(t.s_ie, 2) << ',' << detail::fmt(t.s_mlp, 2)
           << ',' << detail::fmt(t.speedup) << ',' << detail::fmt(r.amdahl_bound) << ','
           << detail::fmt(t.baseline_ms) << ',' << detail::fmt(t.frame_ms) << ',' << detail::fmt(t.ngpc_ms) << ','
           << detail::fmt(t.rest_ms) << ',' << r.bottleneck();
        for (auto px : r.pixels_within_budget) os << ',' << px;
        os << ',' << detail::fmt(r.area_power.area_pct, 2) << ',' << detail::fmt(r.area_power.power_pct, 2) << '\n';
    }
}

inline void write_bandwidth_csv(std::ostream& os, const std::vector<perf::AppProfile>& profiles, double fps,
                                double host_bw) {
    os << "app,encoding,fps,input_gbps,output_gbps,total_gbps,access_ms\n";
    for (const auto& p : profiles) {
        const auto b = perf::bandwidth_model(p, fps, host_bw);
        os << to_string(p.app) << ',' << encoding_label(p.encoding) << ',' << detail::fmt(fps, 0) << ','
           << detail::fmt(b.input_gbps, 3) << ',' << detail::fmt(b.output_gbps, 3) << ','
           << detail::fmt(b.total_gbps, 3) << ',' << detail::fmt(b.access_ms, 3) << '\n';
    }
}

inline void write_area_power_csv(std::ostream& os, const std::vector<std::uint32_t>& nfp_counts) {
    os << "nfp,area_pct,power_pct\n";
    for (auto n : nfp_counts) {
        perf::ArchParams a;
        a.nfp_count = n;
        const auto ap = perf::area_power(a);
        os << n << ',' << detail::fmt(ap.area_pct, 2) << ',' << detail::fmt(ap.power_pct, 2) << '\n';
    }
}

[[nodiscard]] inline Json report_json(const SweepConfig& cfg, const std::vector<perf::PerfReport>& rows) {
    Json out;
    out["config"] = to_json(cfg);
    Json jr = Json::array();
    for (const auto& r : rows) {
        const auto& t = r.timing;
        Json budget;
        for (std::size_t i = 0; i < perf::kFpsTargets.size(); ++i) {
            const auto key = detail::fmt(perf::kFpsTargets[i], 0);
            budget[key] = {{"pixels", r.pixels_within_budget[i]},
                           {"resolution", perf::resolution_class(r.pixels_within_budget[i])}};
        }
        jr.push_back(Json{{"app", to_string(r.app)},
                          {"encoding", encoding_label(r.encoding)},
                          {"nfp", r.nfp},
                          {"queries", t.queries},
                          {"ie_cycles", t.ie_cycles},
                          {"mlp_cycles", t.mlp_cycles},
                          {"ie_speedup", t.s_ie},
                          {"mlp_speedup", t.s_mlp},
                          {"speedup", t.speedup},
                          {"amdahl_bound", r.amdahl_bound},
                          {"baseline_ms", t.baseline_ms},
                          {"frame_ms", t.frame_ms},
                          {"ngpc_ms", t.ngpc_ms},
                          {"rest_ms", t.rest_ms},
                          {"bottleneck", r.bottleneck()},
                          {"pixels_within_budget", budget},
                          {"bandwidth_60fps",
                           {{"input_gbps", r.bandwidth.input_gbps},
                            {"output_gbps", r.bandwidth.output_gbps},
                            {"total_gbps", r.bandwidth.total_gbps},
                            {"access_ms", r.bandwidth.access_ms}}},
                          {"area_pct", r.area_power.area_pct},
                          {"power_pct", r.area_power.power_pct},
                          {"level_table_fits_sram", r.level_table_fits_sram}});
    }
    out["rows"] = jr;

    Json mean = Json::object();
    for (GridKind k : {GridKind::Hash, GridKind::Dense, GridKind::Tiled}) {
        Json per_n = Json::object();
        for (auto n : cfg.nfp_counts) {
            try {
                per_n[std::to_string(n)] = perf::mean_speedup(rows, k, n);
            } catch (const DomainError&) {
            }
        }
        if (!per_n.empty()) mean[encoding_label(k)] = per_n;
    }
    out["mean_speedup"] = mean;
    return out;
}

}  // namespace ngpc::config
