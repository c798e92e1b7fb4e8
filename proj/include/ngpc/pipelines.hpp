#pragma once

// The four neural graphics applications assembled from a grid encoding and
// bias-free MLPs:
//
//   NeRF  3 -> grid -> density MLP -> 16 latent (channel 0 = log density)
//         latent + 16 view SH -> color MLP -> RGB
//   NSDF  3 -> grid -> MLP -> signed distance
//   NVR   3 -> grid -> MLP -> (log density, RGB)
//   GIA   2 -> grid -> MLP -> RGB
//
// Volumetric apps (NeRF, NVR) march camera rays through the unit box and
// composite samples with emission-absorption quadrature. NSDF renders an
// axis-aligned distance slice; GIA queries one point per pixel.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ngpc/common.hpp"
#include "ngpc/encoding.hpp"
#include "ngpc/image.hpp"
#include "ngpc/mlp.hpp"

namespace ngpc {

enum class App : std::uint8_t { NeRF = 0, NSDF = 1, NVR = 2, GIA = 3 };

inline constexpr std::array<App, 4> kAllApps{App::NeRF, App::NSDF, App::NVR, App::GIA};

[[nodiscard]] inline std::string to_string(App a) {
    switch (a) {
        case App::NeRF: return "NeRF";
        case App::NSDF: return "NSDF";
        case App::NVR: return "NVR";
        case App::GIA: return "GIA";
    }
    return "?";
}

[[nodiscard]] inline App app_from_string(const std::string& s) {
    for (App a : kAllApps)
        if (to_string(a) == s) return a;
    throw ConfigError("unknown application: " + s);
}

using Vec3 = std::array<float, 3>;

// ---------------------------------------------------------------------------
// Cameras and rays
// ---------------------------------------------------------------------------

struct Frame {
    std::uint32_t width = 64;
    std::uint32_t height = 64;

    [[nodiscard]] std::size_t pixels() const noexcept { return static_cast<std::size_t>(width) * height; }
    bool operator==(const Frame&) const = default;
};

/// Pinhole camera. `pose` is the 3x4 row-major camera-to-world matrix
/// [R | t]; the camera looks down its local -z axis with +y up.
struct Camera {
    std::array<double, 12> pose{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
    double focal = 1.0;
    std::array<double, 2> principal_point{0.5, 0.5};
    double near = 0.0;
    double far = 1e4;

    void validate() const {
        if (!(focal > 0.0) || !std::isfinite(focal)) throw ConfigError("focal length must be positive");
        if (!(near >= 0.0 && near < far)) throw ConfigError("camera needs 0 <= near < far");
        for (double v : pose)
            if (!std::isfinite(v)) throw ConfigError("camera pose is not finite");
        // Rotation block must be orthonormal with determinant +1.
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double dot = 0.0;
                for (int k = 0; k < 3; ++k) dot += pose[4 * k + i] * pose[4 * k + j];
                if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-6) throw ConfigError("camera rotation is degenerate");
            }
        const auto r = [this](int i, int j) { return pose[4 * i + j]; };
        const double det = r(0, 0) * (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1)) -
                           r(0, 1) * (r(1, 0) * r(2, 2) - r(1, 2) * r(2, 0)) +
                           r(0, 2) * (r(1, 0) * r(2, 1) - r(1, 1) * r(2, 0));
        if (det < 0.0) throw ConfigError("camera rotation is a reflection");
    }
};

struct Ray {
    Vec3 origin{};
    Vec3 direction{0, 0, -1};
    float t_near = 0.0f;
    float t_far = 1.0f;
};

struct SamplePoint {
    Vec3 position{};
    Vec3 view_dir{};
    float t = 0.0f;
    float delta = 0.0f;
};

/// One ray per pixel through the pixel center, row-major from the top-left.
[[nodiscard]] inline std::vector<Ray> generate_rays(const Camera& camera, const Frame& frame) {
    camera.validate();
    if (frame.width == 0 || frame.height == 0) throw ConfigError("frame must be non-empty");
    std::vector<Ray> rays;
    rays.reserve(frame.pixels());
    const auto& p = camera.pose;
    for (std::uint32_t y = 0; y < frame.height; ++y) {
        for (std::uint32_t x = 0; x < frame.width; ++x) {
            const double dx = (x + 0.5 - camera.principal_point[0]) / camera.focal;
            const double dy = -(y + 0.5 - camera.principal_point[1]) / camera.focal;
            const double dz = -1.0;
            double w[3];
            for (int i = 0; i < 3; ++i) w[i] = p[4 * i] * dx + p[4 * i + 1] * dy + p[4 * i + 2] * dz;
            const double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
            Ray r;
            for (int i = 0; i < 3; ++i) {
                r.origin[i] = static_cast<float>(p[4 * i + 3]);
                r.direction[i] = static_cast<float>(w[i] / n);
            }
            r.t_near = static_cast<float>(camera.near);
            r.t_far = static_cast<float>(camera.far);
            rays.push_back(r);
        }
    }
    return rays;
}

/// Restricts the ray's interval to the unit box. Returns false on a miss.
[[nodiscard]] inline bool clip_to_unit_box(Ray& ray) noexcept {
    float t0 = ray.t_near;
    float t1 = ray.t_far;
    for (int i = 0; i < 3; ++i) {
        const float o = ray.origin[i];
        const float d = ray.direction[i];
        if (d == 0.0f) {
            if (o < 0.0f || o > 1.0f) return false;
            continue;
        }
        float ta = (0.0f - o) / d;
        float tb = (1.0f - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
    }
    if (!(t0 < t1)) return false;
    ray.t_near = t0;
    ray.t_far = t1;
    return true;
}

/// `n` stratified samples over [t_near, t_far]: one per equal-width bin, at
/// the bin midpoint, or at a uniformly jittered offset when `jitter` is set.
/// Each sample's delta is the bin width, so deltas sum to the interval.
[[nodiscard]] inline std::vector<SamplePoint> sample_ray(const Ray& ray, std::uint32_t n, Rng* jitter = nullptr) {
    if (n == 0) throw ConfigError("need at least one sample per ray");
    if (!(ray.t_near < ray.t_far)) throw DomainError("ray interval is empty");
    std::vector<SamplePoint> out(n);
    const float span = ray.t_far - ray.t_near;
    const float bin = span / static_cast<float>(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const float u = jitter ? jitter->uniform() : 0.5f;
        auto& s = out[i];
        s.t = ray.t_near + (static_cast<float>(i) + u) * bin;
        s.delta = bin;
        s.view_dir = ray.direction;
        for (int k = 0; k < 3; ++k) s.position[k] = ray.origin[k] + s.t * ray.direction[k];
    }
    return out;
}

/// Real spherical harmonics up to degree 3 (16 values) of a unit direction,
/// ordered by l*l + l + m, including the Condon-Shortley phase.
[[nodiscard]] inline std::array<float, 16> view_direction_encoding(const Vec3& dir) {
    const double x = dir[0], y = dir[1], z = dir[2];
    const double xx = x * x, yy = y * y, zz = z * z;
    std::array<double, 16> v{
        0.28209479177387814,
        -0.48860251190291987 * y,
        0.48860251190291987 * z,
        -0.48860251190291987 * x,
        1.0925484305920792 * x * y,
        -1.0925484305920792 * y * z,
        0.94617469575755997 * zz - 0.31539156525251999,
        -1.0925484305920792 * x * z,
        0.54627421529603959 * (xx - yy),
        0.59004358992664352 * y * (-3.0 * xx + yy),
        2.8906114426405538 * x * y * z,
        0.45704579946446572 * y * (1.0 - 5.0 * zz),
        0.3731763325901154 * z * (5.0 * zz - 3.0),
        0.45704579946446572 * x * (1.0 - 5.0 * zz),
        1.4453057213202769 * z * (xx - yy),
        0.59004358992664352 * x * (-xx + 3.0 * yy),
    };
    std::array<float, 16> out{};
    for (std::size_t i = 0; i < 16; ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

struct CompositeResult {
    Vec3 rgb{};
    float weight_sum = 0.0f;    // sum_i T_i alpha_i (opacity)
    float transmittance = 1.0f; // transmittance left after the last sample
};

/// Emission-absorption quadrature: alpha_i = 1 - exp(-sigma_i delta_i),
/// T_i = prod_{j<i} (1 - alpha_j), C = sum_i T_i alpha_i c_i.
[[nodiscard]] inline CompositeResult composite_ray(std::span<const SamplePoint> samples,
                                                   std::span<const float> sigmas, std::span<const Vec3> colors) {
    if (samples.size() != sigmas.size() || samples.size() != colors.size())
        throw ConfigError("composite: samples, densities and colors differ in length");
    CompositeResult r;
    float trans = 1.0f;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].delta > 0.0f)) throw DomainError("sample segment length must be positive");
        if (!(sigmas[i] >= 0.0f)) throw DomainError("density must be non-negative");
        const float alpha = 1.0f - std::exp(-sigmas[i] * samples[i].delta);
        const float w = trans * alpha;
        for (int c = 0; c < 3; ++c) r.rgb[c] += w * colors[i][c];
        r.weight_sum += w;
        trans *= 1.0f - alpha;
    }
    r.transmittance = trans;
    return r;
}

// ---------------------------------------------------------------------------
// Pipelines
// ---------------------------------------------------------------------------

struct PipelineConfig {
    App app = App::NeRF;
    EncodingConfig encoding;
    std::uint32_t hidden_width = 64;
    std::uint32_t density_hidden_layers = 3;  // NeRF density network
    std::uint32_t latent_width = 16;          // NeRF density output, channel 0 is log density
    std::uint32_t hidden_layers = 4;          // NeRF color network, and the single network of the others
    std::uint32_t samples_per_ray = 8;
    Frame frame;
    float slice_z = 0.5f;         // NSDF slice plane
    float distance_scale = 4.0f;  // NSDF slice intensity = 0.5 + scale * distance, clamped

    static constexpr std::uint32_t kViewEncodingWidth = 16;

    [[nodiscard]] std::uint32_t input_dims() const noexcept { return app == App::GIA ? 2 : 3; }

    [[nodiscard]] std::uint32_t output_channels() const noexcept {
        switch (app) {
            case App::NeRF: return 3;
            case App::NSDF: return 1;
            case App::NVR: return 4;
            case App::GIA: return 3;
        }
        return 0;
    }

    /// Widths of the network fed by the encoding.
    [[nodiscard]] std::vector<std::uint32_t> primary_widths() const {
        if (app == App::NeRF)
            return MlpModel::shape(encoding.output_width(), density_hidden_layers, latent_width, hidden_width);
        return MlpModel::shape(encoding.output_width(), hidden_layers, output_channels(), hidden_width);
    }

    [[nodiscard]] std::vector<std::uint32_t> color_widths() const {
        return MlpModel::shape(latent_width + kViewEncodingWidth, hidden_layers, 3, hidden_width);
    }

    [[nodiscard]] Activation primary_output_activation() const noexcept {
        return app == App::GIA ? Activation::Sigmoid : Activation::None;
    }

    void validate() const {
        encoding.validate();
        if (encoding.dims != input_dims())
            throw ConfigError(to_string(app) + " expects a " + std::to_string(input_dims()) + "-D encoding");
        if (samples_per_ray == 0) throw ConfigError("samples_per_ray must be positive");
        if (app == App::NeRF && latent_width < 1) throw ConfigError("NeRF latent must hold the density channel");
        if (frame.width == 0 || frame.height == 0) throw ConfigError("frame must be non-empty");
    }
};

/// Table-of-parameters presets for one application and encoding type.
[[nodiscard]] inline PipelineConfig preset_pipeline_config(App app, GridKind kind) {
    PipelineConfig c;
    c.app = app;
    const std::uint32_t dims = app == App::GIA ? 2 : 3;
    const std::uint32_t table = app == App::GIA ? (1u << 24) : (1u << 19);
    switch (kind) {
        case GridKind::Hash: {
            double growth = 1.51572;
            if (app == App::NSDF) growth = 1.38191;
            if (app == App::NVR) growth = 1.275;
            if (app == App::GIA) growth = 1.25992;
            c.encoding = EncodingConfig::make(kind, dims, 16, growth, 2, table, 16);
            break;
        }
        case GridKind::Dense: c.encoding = EncodingConfig::make(kind, dims, 16, 1.405, 2, table, 8); break;
        case GridKind::Tiled: c.encoding = EncodingConfig::make(kind, dims, 128, 1.0, 8, table, 2); break;
    }
    return c;
}

struct Pipeline {
    PipelineConfig config;
    FeatureTable table;
    MlpModel primary;
    std::optional<MlpModel> color;  // NeRF only

    Pipeline(PipelineConfig cfg, FeatureTable t, MlpModel p, std::optional<MlpModel> c = std::nullopt)
        : config(std::move(cfg)), table(std::move(t)), primary(std::move(p)), color(std::move(c)) {
        config.validate();
        if (!(table.config() == config.encoding)) throw ConfigError("table does not match the pipeline encoding");
        if (primary.widths() != config.primary_widths()) throw ConfigError("primary network has the wrong shape");
        if (config.app == App::NeRF) {
            if (!color || color->widths() != config.color_widths())
                throw ConfigError("NeRF color network missing or mis-shaped");
        } else if (color) {
            throw ConfigError("only NeRF has a color network");
        }
    }

    /// Randomly initialized: table in +-1e-4, weights Xavier-uniform.
    static Pipeline create(PipelineConfig cfg, std::uint64_t seed) {
        cfg.validate();
        auto table = FeatureTable::random(cfg.encoding, splitmix64(seed ^ 0x7461626cull));
        auto primary = MlpModel::xavier(cfg.primary_widths(), splitmix64(seed ^ 0x6d6c7031ull),
                                        cfg.primary_output_activation());
        std::optional<MlpModel> color;
        if (cfg.app == App::NeRF)
            color = MlpModel::xavier(cfg.color_widths(), splitmix64(seed ^ 0x6d6c7032ull), Activation::Sigmoid);
        return Pipeline(std::move(cfg), std::move(table), std::move(primary), std::move(color));
    }

    /// All parameters zero.
    static Pipeline zeros(PipelineConfig cfg) {
        cfg.validate();
        FeatureTable table(cfg.encoding);
        MlpModel primary(cfg.primary_widths(), cfg.primary_output_activation());
        std::optional<MlpModel> color;
        if (cfg.app == App::NeRF) color.emplace(cfg.color_widths(), Activation::Sigmoid);
        return Pipeline(std::move(cfg), std::move(table), std::move(primary), std::move(color));
    }
};

struct RadianceSample {
    float sigma = 0.0f;
    Vec3 rgb{};
};

namespace detail {

[[nodiscard]] inline Vec3 clamp_unit(const Vec3& p) noexcept {
    return {std::clamp(p[0], 0.0f, 1.0f), std::clamp(p[1], 0.0f, 1.0f), std::clamp(p[2], 0.0f, 1.0f)};
}

[[nodiscard]] inline float sigmoid(float z) noexcept { return 1.0f / (1.0f + std::exp(-z)); }

}  // namespace detail

/// NeRF field query: sigma = exp(latent[0]) from position only;
/// rgb = sigmoid(color MLP(latent, SH(view))).
[[nodiscard]] inline RadianceSample query_nerf(const Pipeline& pipe, const SamplePoint& sample) {
    if (pipe.config.app != App::NeRF) throw ConfigError("query_nerf needs a NeRF pipeline");
    const Vec3 pos = detail::clamp_unit(sample.position);
    const auto features = encode_point(std::span<const float>(pos), pipe.table);
    const auto latent = mlp_forward(pipe.primary, features);
    std::vector<float> color_in(latent.begin(), latent.end());
    const auto sh = view_direction_encoding(sample.view_dir);
    color_in.insert(color_in.end(), sh.begin(), sh.end());
    const auto rgb = mlp_forward(*pipe.color, color_in);
    return {std::exp(latent[0]), {rgb[0], rgb[1], rgb[2]}};
}

/// NVR field query: (log density, rgb logits) from one network.
[[nodiscard]] inline RadianceSample query_nvr(const Pipeline& pipe, const SamplePoint& sample) {
    if (pipe.config.app != App::NVR) throw ConfigError("query_nvr needs an NVR pipeline");
    const Vec3 pos = detail::clamp_unit(sample.position);
    const auto out = mlp_forward(pipe.primary, encode_point(std::span<const float>(pos), pipe.table));
    return {std::exp(out[0]), {detail::sigmoid(out[1]), detail::sigmoid(out[2]), detail::sigmoid(out[3])}};
}

[[nodiscard]] inline float query_nsdf(const Pipeline& pipe, const Vec3& position) {
    if (pipe.config.app != App::NSDF) throw ConfigError("query_nsdf needs an NSDF pipeline");
    return mlp_forward(pipe.primary, encode_point(std::span<const float>(position), pipe.table))[0];
}

[[nodiscard]] inline Vec3 query_gia(const Pipeline& pipe, std::array<float, 2> uv) {
    if (pipe.config.app != App::GIA) throw ConfigError("query_gia needs a GIA pipeline");
    const auto out = mlp_forward(pipe.primary, encode_point(std::span<const float>(uv), pipe.table));
    return {out[0], out[1], out[2]};
}

struct RenderOptions {
    std::uint64_t seed = 0;
    bool jitter = true;  // stratified jitter of ray samples, seeded per pixel
    unsigned threads = 1;
};

/// Color of one camera ray through a volumetric pipeline (black on a miss).
[[nodiscard]] inline Vec3 render_ray(const Pipeline& pipe, Ray ray, Rng* jitter) {
    if (!clip_to_unit_box(ray)) return {0.0f, 0.0f, 0.0f};
    const auto samples = sample_ray(ray, pipe.config.samples_per_ray, jitter);
    std::vector<float> sigmas(samples.size());
    std::vector<Vec3> colors(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto q = pipe.config.app == App::NeRF ? query_nerf(pipe, samples[i]) : query_nvr(pipe, samples[i]);
        sigmas[i] = q.sigma;
        colors[i] = q.rgb;
    }
    return composite_ray(samples, sigmas, colors).rgb;
}

/// Renders the pipeline's frame. Pixels are independent; each pixel's jitter
/// stream is derived from (seed, pixel index), so the image does not depend
/// on the thread count.
[[nodiscard]] inline Image render_frame(const Pipeline& pipe, const Camera& camera, const RenderOptions& opt = {}) {
    const Frame& frame = pipe.config.frame;
    Image img(frame.width, frame.height);
    std::vector<Ray> rays;
    if (pipe.config.app == App::NeRF || pipe.config.app == App::NVR) rays = generate_rays(camera, frame);

    parallel_for(frame.pixels(), opt.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto x = static_cast<std::uint32_t>(i % frame.width);
            const auto y = static_cast<std::uint32_t>(i / frame.width);
            const float u = (static_cast<float>(x) + 0.5f) / static_cast<float>(frame.width);
            const float v = (static_cast<float>(y) + 0.5f) / static_cast<float>(frame.height);
            Vec3 rgb{};
            switch (pipe.config.app) {
                case App::NeRF:
                case App::NVR: {
                    Rng rng(splitmix64(opt.seed ^ splitmix64(i)));
                    rgb = render_ray(pipe, rays[i], opt.jitter ? &rng : nullptr);
                    break;
                }
                case App::NSDF: {
                    const float d = query_nsdf(pipe, {u, v, pipe.config.slice_z});
                    const float g = std::clamp(0.5f + pipe.config.distance_scale * d, 0.0f, 1.0f);
                    rgb = {g, g, g};
                    break;
                }
                case App::GIA: rgb = query_gia(pipe, {u, v}); break;
            }
            float* px = img.pixel(x, y);
            px[0] = rgb[0];
            px[1] = rgb[1];
            px[2] = rgb[2];
        }
    });
    return img;
}

// ---------------------------------------------------------------------------
// GIA training
// ---------------------------------------------------------------------------

struct GiaTrainOptions {
    EncodingConfig encoding = EncodingConfig::make(GridKind::Hash, 2, 16, 1.25992, 2, 1u << 14, 16);
    std::uint32_t hidden_layers = 4;
    std::uint32_t hidden_width = 64;
    std::uint32_t steps = 2000;
    float learning_rate = 1.0f;        // MLP weights
    float table_learning_rate = 1000.0f;  // feature table entries
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

struct GiaTrainResult {
    Pipeline pipeline;
    std::vector<double> psnr;  // PSNR of the prediction at the start of each step
    double final_psnr = 0.0;
};

/// Fits a GIA pipeline to `target` with full-batch gradient descent on the
/// per-pixel squared error summed over channels and averaged over pixels.
/// Pixel centers map to ((x + 0.5) / w, (y + 0.5) / h).
[[nodiscard]] inline GiaTrainResult train_gia(const Image& target, const GiaTrainOptions& opt) {
    if (target.width == 0 || target.height == 0) throw ConfigError("GIA target image is empty");
    if (target.rgb.size() != target.pixel_count() * 3) throw ConfigError("GIA target image is malformed");

    PipelineConfig cfg;
    cfg.app = App::GIA;
    cfg.encoding = opt.encoding;
    cfg.hidden_layers = opt.hidden_layers;
    cfg.hidden_width = opt.hidden_width;
    cfg.frame = {target.width, target.height};
    auto pipe = Pipeline::create(cfg, opt.seed);

    const std::size_t n = target.pixel_count();
    std::vector<float> coords(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        coords[2 * i] = (static_cast<float>(i % target.width) + 0.5f) / static_cast<float>(target.width);
        coords[2 * i + 1] = (static_cast<float>(i / target.width) + 0.5f) / static_cast<float>(target.height);
    }

    const std::size_t width = cfg.encoding.output_width();
    const unsigned threads = opt.threads == 0 ? default_thread_count() : opt.threads;
    const std::size_t chunks = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    const float inv_n = 1.0f / static_cast<float>(n);

    struct ChunkState {
        MlpGradients mlp;
        std::vector<float> table;
        double sq_error = 0.0;
    };

    GiaTrainResult result{std::move(pipe), {}, 0.0};
    auto& model = result.pipeline;
    result.psnr.reserve(opt.steps);
    std::vector<ChunkState> partial(chunks);

    for (std::uint32_t step = 0; step < opt.steps; ++step) {
        parallel_for(chunks, static_cast<unsigned>(chunks), [&](std::size_t cb, std::size_t ce) {
            for (std::size_t c = cb; c < ce; ++c) {
                auto& st = partial[c];
                st.mlp = MlpGradients::zeros_like(model.primary);
                st.table.assign(model.table.data().size(), 0.0f);
                st.sq_error = 0.0;
                MlpTrace trace;
                std::vector<float> features(width);
                std::array<float, 3> up{};
                for (std::size_t i = n * c / chunks; i < n * (c + 1) / chunks; ++i) {
                    const std::span<const float> uv(coords.data() + 2 * i, 2);
                    encode_point_into(uv, model.table, std::span<float>(features));
                    mlp_forward_trace(model.primary, features, trace);
                    const auto& pred = trace.post.back();
                    for (int k = 0; k < 3; ++k) {
                        const float err = pred[k] - target.rgb[i * 3 + k];
                        st.sq_error += static_cast<double>(err) * err;
                        up[k] = 2.0f * err * inv_n;
                    }
                    mlp_backward_accumulate(model.primary, trace, up, st.mlp);
                    accumulate_encode_gradient(uv, model.table, st.mlp.input, std::span<float>(st.table));
                }
            }
        });

        double sq = 0.0;
        for (std::size_t c = 1; c < chunks; ++c) {
            partial[0].mlp += partial[c].mlp;
            for (std::size_t j = 0; j < partial[0].table.size(); ++j) partial[0].table[j] += partial[c].table[j];
        }
        for (const auto& st : partial) sq += st.sq_error;
        result.psnr.push_back(psnr_from_mse(sq / static_cast<double>(n * 3)));
        sgd_step(model.primary, partial[0].mlp, opt.learning_rate);
        sgd_step(model.table, std::span<const float>(partial[0].table), opt.table_learning_rate);
    }

    const Image recon = render_frame(model, Camera{}, {.seed = 0, .jitter = false, .threads = opt.threads});
    result.final_psnr = psnr_from_mse(mse(recon, target));
    return result;
}

}  // namespace ngpc
