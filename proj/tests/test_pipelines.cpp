#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <vector>

#include "catch_amalgamated.hpp"
#include "ngpc/pipelines.hpp"
#include "ngpc/testing/oracles.hpp"

using namespace ngpc;

namespace {

Camera tilted_camera() {
    // Rotation about y by 30 degrees, then about x by -20 degrees.
    const double a = std::numbers::pi / 6, b = -std::numbers::pi / 9;
    const double ry[3][3] = {{std::cos(a), 0, std::sin(a)}, {0, 1, 0}, {-std::sin(a), 0, std::cos(a)}};
    const double rx[3][3] = {{1, 0, 0}, {0, std::cos(b), -std::sin(b)}, {0, std::sin(b), std::cos(b)}};
    Camera c;
    const double t[3] = {1.4, 0.9, 1.8};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0;
            for (int k = 0; k < 3; ++k) s += ry[i][k] * rx[k][j];
            c.pose[4 * i + j] = s;
        }
        c.pose[4 * i + 3] = t[i];
    }
    c.focal = 9.5;
    c.principal_point = {4.2, 3.7};
    c.near = 0.1;
    c.far = 10.0;
    return c;
}

PipelineConfig small_config(App app) {
    PipelineConfig c = preset_pipeline_config(app, GridKind::Hash);
    c.encoding.table_size = 1u << 12;
    c.encoding.levels = 4;
    c.frame = {6, 5};
    c.samples_per_ray = 6;
    return c;
}

Camera box_camera(const Frame& f) {
    Camera c;
    c.pose = {1, 0, 0, 0.5, 0, 1, 0, 0.5, 0, 0, 1, 2.0};
    c.focal = 1.5 * f.width;
    c.principal_point = {f.width / 2.0, f.height / 2.0};
    c.far = 5.0;
    return c;
}

}  // namespace

TEST_CASE("camera rays pass through pixel centers", "[pipelines][camera]") {
    const auto cam = tilted_camera();
    const Frame frame{8, 8};
    const auto rays = generate_rays(cam, frame);
    REQUIRE(rays.size() == 64);
    const auto& p = cam.pose;
    for (std::uint32_t y = 0; y < 8; ++y) {
        for (std::uint32_t x = 0; x < 8; ++x) {
            const auto& r = rays[y * 8 + x];
            double len = 0;
            for (int i = 0; i < 3; ++i) len += double(r.direction[i]) * r.direction[i];
            REQUIRE(len == Catch::Approx(1.0).margin(1e-6));
            // Project a point on the ray back through the inverse pose.
            double q[3], c[3] = {0, 0, 0};
            for (int i = 0; i < 3; ++i) q[i] = r.origin[i] + 3.0 * r.direction[i] - p[4 * i + 3];
            for (int j = 0; j < 3; ++j)
                for (int i = 0; i < 3; ++i) c[j] += p[4 * i + j] * q[i];
            REQUIRE(c[2] < 0);
            const double u = cam.focal * c[0] / -c[2] + cam.principal_point[0];
            const double v = -cam.focal * c[1] / -c[2] + cam.principal_point[1];
            REQUIRE(u == Catch::Approx(x + 0.5).margin(1e-4));
            REQUIRE(v == Catch::Approx(y + 0.5).margin(1e-4));
            REQUIRE(r.origin[0] == Catch::Approx(1.4));
            REQUIRE(r.t_near == Catch::Approx(0.1));
        }
    }
}

TEST_CASE("degenerate cameras are rejected", "[pipelines][camera]") {
    Camera c;
    c.pose[0] = 2.0;  // scaled axis
    CHECK_THROWS_AS(generate_rays(c, {4, 4}), ConfigError);
    c = Camera{};
    c.pose[0] = -1.0;  // reflection
    CHECK_THROWS_AS(generate_rays(c, {4, 4}), ConfigError);
    c = Camera{};
    c.focal = 0.0;
    CHECK_THROWS_AS(generate_rays(c, {4, 4}), ConfigError);
    c = Camera{};
    c.near = 3.0;
    c.far = 2.0;
    CHECK_THROWS_AS(generate_rays(c, {4, 4}), ConfigError);
    CHECK_THROWS_AS(generate_rays(Camera{}, {0, 4}), ConfigError);
}

TEST_CASE("unit-box clipping", "[pipelines][camera]") {
    Ray r{{0.5f, 0.5f, 2.0f}, {0, 0, -1}, 0.0f, 10.0f};
    REQUIRE(clip_to_unit_box(r));
    CHECK(r.t_near == Catch::Approx(1.0f));
    CHECK(r.t_far == Catch::Approx(2.0f));
    Ray miss{{2.0f, 0.5f, 2.0f}, {0, 0, -1}, 0.0f, 10.0f};
    CHECK_FALSE(clip_to_unit_box(miss));
    Ray inside{{0.5f, 0.5f, 0.5f}, {1, 0, 0}, 0.0f, 10.0f};
    REQUIRE(clip_to_unit_box(inside));
    CHECK(inside.t_near == 0.0f);
    CHECK(inside.t_far == Catch::Approx(0.5f));
}

TEST_CASE("stratified samples", "[pipelines][sampling]") {
    const Ray r{{0, 0, 0}, {1, 0, 0}, 1.0f, 3.0f};
    const auto mid = sample_ray(r, 4);
    const float expect[4] = {1.25f, 1.75f, 2.25f, 2.75f};
    float total = 0;
    for (int i = 0; i < 4; ++i) {
        CHECK(mid[i].t == Catch::Approx(expect[i]));
        CHECK(mid[i].delta == Catch::Approx(0.5f));
        CHECK(mid[i].position[0] == Catch::Approx(expect[i]));
        total += mid[i].delta;
    }
    CHECK(total == Catch::Approx(2.0f));

    // Independent restatement: bin i covers [1 + i/4 * 2, ...) and draws one uniform.
    Rng a(17), b(17);
    const auto jit = sample_ray(r, 8, &a);
    for (int i = 0; i < 8; ++i) {
        const double lo = 1.0 + 2.0 * i / 8.0;
        const double t = lo + b.uniform() * 0.25;
        CHECK(jit[i].t == Catch::Approx(t).margin(1e-6));
        CHECK(jit[i].t >= lo - 1e-6);
        CHECK(jit[i].t <= lo + 0.25 + 1e-6);
    }
    CHECK_THROWS_AS(sample_ray(r, 0), ConfigError);
    CHECK_THROWS_AS(sample_ray(Ray{{0, 0, 0}, {1, 0, 0}, 2.0f, 2.0f}, 4), DomainError);
}

TEST_CASE("view encoding along +z", "[pipelines][sh]") {
    const auto sh = view_direction_encoding({0.0f, 0.0f, 1.0f});
    // Only m = 0 terms survive: sqrt((2l+1)/(4 pi)) for l = 0..3.
    for (int i = 0; i < 16; ++i) {
        double expected = 0.0;
        for (int l = 0; l <= 3; ++l)
            if (i == l * l + l) expected = std::sqrt((2 * l + 1) / (4 * std::numbers::pi));
        CHECK(sh[i] == Catch::Approx(expected).margin(1e-6));
    }
    CHECK(sh[0] == Catch::Approx(0.28209479).margin(1e-7));
    CHECK(sh[2] == Catch::Approx(0.48860251).margin(1e-7));
    CHECK(sh[6] == Catch::Approx(0.63078313).margin(1e-7));
    CHECK(sh[12] == Catch::Approx(0.74635267).margin(1e-7));
}

TEST_CASE("view encoding parity and oracle", "[pipelines][sh]") {
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        Vec3 d{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const float n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
        if (n < 1e-3f) continue;
        for (auto& v : d) v /= n;
        const auto a = view_direction_encoding(d);
        const auto b = view_direction_encoding({-d[0], -d[1], -d[2]});
        const auto o = testing::oracle_sh(d);
        for (int l = 0; l <= 3; ++l)
            for (int m = -l; m <= l; ++m) {
                const int k = l * l + l + m;
                REQUIRE(b[k] == Catch::Approx(l % 2 ? -a[k] : a[k]).margin(1e-6));
                REQUIRE(a[k] == Catch::Approx(o[k]).margin(1e-5));
            }
    }
}

TEST_CASE("compositing", "[pipelines][composite]") {
    std::vector<SamplePoint> s(3);
    for (auto& p : s) p.delta = 0.5f;
    const std::vector<Vec3> c{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    SECTION("empty space is black") {
        const std::vector<float> sigma{0, 0, 0};
        const auto r = composite_ray(s, sigma, c);
        CHECK(r.rgb == Vec3{0, 0, 0});
        CHECK(r.transmittance == 1.0f);
    }
    SECTION("an opaque first sample hides the rest") {
        const std::vector<float> sigma{std::numeric_limits<float>::infinity(), 5, 5};
        const auto r = composite_ray(s, sigma, c);
        CHECK(r.rgb == Vec3{1, 0, 0});
        CHECK(r.weight_sum == 1.0f);
    }
    SECTION("single sample closed form") {
        const std::vector<SamplePoint> one(1, s[0]);
        const std::vector<float> sigma{2.0f};
        const std::vector<Vec3> col{{0.2f, 0.4f, 0.8f}};
        const auto r = composite_ray(one, sigma, col);
        const double a = 1 - std::exp(-1.0);
        CHECK(r.rgb[0] == Catch::Approx(0.2 * a));
        CHECK(r.rgb[2] == Catch::Approx(0.8 * a));
    }
    SECTION("matches the product-form oracle") {
        Rng rng(4);
        for (int i = 0; i < 200; ++i) {
            const std::size_t n = 1 + rng.below(20);
            std::vector<SamplePoint> ss(n);
            std::vector<float> sig(n);
            std::vector<Vec3> col(n);
            std::vector<double> sd(n), dd(n);
            std::vector<std::array<double, 3>> cd(n);
            for (std::size_t k = 0; k < n; ++k) {
                ss[k].delta = dd[k] = rng.uniform(0.01f, 0.3f);
                sd[k] = sig[k] = rng.uniform(0.0f, 20.0f);
                for (int ch = 0; ch < 3; ++ch) cd[k][ch] = col[k][ch] = rng.uniform();
            }
            const auto r = composite_ray(ss, sig, col);
            const auto o = testing::oracle_composite(sd, dd, cd);
            REQUIRE(r.weight_sum <= 1.0f + 1e-6f);
            for (int ch = 0; ch < 3; ++ch) REQUIRE(r.rgb[ch] == Catch::Approx(o[ch]).margin(1e-5));
        }
    }
    SECTION("invalid inputs") {
        const std::vector<float> neg{-1, 0, 0};
        CHECK_THROWS_AS(composite_ray(s, neg, c), DomainError);
        const std::vector<float> shortv{0, 0};
        CHECK_THROWS_AS(composite_ray(s, shortv, c), ConfigError);
    }
}

TEST_CASE("pipeline presets", "[pipelines]") {
    for (App app : kAllApps) {
        for (GridKind k : {GridKind::Hash, GridKind::Dense, GridKind::Tiled}) {
            const auto c = preset_pipeline_config(app, k);
            CHECK(c.encoding.dims == (app == App::GIA ? 2u : 3u));
            CHECK(c.primary_widths().front() == c.encoding.output_width());
        }
    }
    const auto nerf = preset_pipeline_config(App::NeRF, GridKind::Hash);
    CHECK(nerf.encoding.output_width() == 32);
    CHECK(nerf.primary_widths() == std::vector<std::uint32_t>{32, 64, 64, 64, 16});
    CHECK(nerf.color_widths() == std::vector<std::uint32_t>{32, 64, 64, 64, 64, 3});
    CHECK(preset_pipeline_config(App::NeRF, GridKind::Tiled).encoding.output_width() == 16);
    CHECK(preset_pipeline_config(App::GIA, GridKind::Hash).encoding.table_size == (1u << 24));
    // The 3-D multi-resolution dense preset needs more rows than T holds.
    CHECK_THROWS_AS(preset_pipeline_config(App::NSDF, GridKind::Dense).validate(), ConfigError);
    CHECK_NOTHROW(preset_pipeline_config(App::GIA, GridKind::Dense).validate());
}

TEST_CASE("pipeline shape checks", "[pipelines]") {
    auto cfg = small_config(App::NSDF);
    auto good = Pipeline::zeros(cfg);
    CHECK_FALSE(good.color.has_value());
    CHECK_THROWS_AS(Pipeline(cfg, good.table, MlpModel({3, 1})), ConfigError);
    auto gia = small_config(App::GIA);
    gia.encoding.dims = 3;
    gia.encoding.primes = {1u, 2654435761u, 805459861u};
    CHECK_THROWS_AS(Pipeline::zeros(gia), ConfigError);
}

TEST_CASE("a 1x1 frame equals compositing its one ray", "[pipelines][render]") {
    for (App app : {App::NeRF, App::NVR}) {
        auto cfg = small_config(app);
        cfg.frame = {1, 1};
        const auto pipe = Pipeline::create(cfg, 3);
        const auto cam = box_camera(cfg.frame);
        const auto img = render_frame(pipe, cam, {.seed = 1, .jitter = false});

        auto ray = generate_rays(cam, cfg.frame)[0];
        REQUIRE(clip_to_unit_box(ray));
        const auto samples = sample_ray(ray, cfg.samples_per_ray);
        std::vector<float> sig;
        std::vector<Vec3> col;
        for (const auto& s : samples) {
            const auto q = app == App::NeRF ? query_nerf(pipe, s) : query_nvr(pipe, s);
            REQUIRE(q.sigma > 0.0f);
            sig.push_back(q.sigma);
            col.push_back(q.rgb);
        }
        const auto ref = composite_ray(samples, sig, col);
        CHECK(img.rgb[0] == ref.rgb[0]);
        CHECK(img.rgb[1] == ref.rgb[1]);
        CHECK(img.rgb[2] == ref.rgb[2]);
    }
}

TEST_CASE("rendering is deterministic and thread independent", "[pipelines][render]") {
    auto cfg = small_config(App::NeRF);
    const auto pipe = Pipeline::create(cfg, 7);
    const auto cam = box_camera(cfg.frame);
    const auto a = render_frame(pipe, cam, {.seed = 5, .threads = 1});
    const auto b = render_frame(pipe, cam, {.seed = 5, .threads = 1});
    const auto c = render_frame(pipe, cam, {.seed = 5, .threads = 3});
    const auto d = render_frame(pipe, cam, {.seed = 6, .threads = 1});
    CHECK(a.rgb == b.rgb);
    CHECK(a.rgb == c.rgb);
    CHECK(a.rgb != d.rgb);
    for (float v : a.rgb) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
    }
}

TEST_CASE("rays that miss the box render black", "[pipelines][render]") {
    auto cfg = small_config(App::NVR);
    const auto pipe = Pipeline::create(cfg, 1);
    Camera away = box_camera(cfg.frame);
    away.pose[11] = -3.0;  // behind the box, looking away from it
    const auto img = render_frame(pipe, away);
    for (float v : img.rgb) CHECK(v == 0.0f);
}

TEST_CASE("zero-initialized NSDF and GIA images are flat gray", "[pipelines][render]") {
    for (App app : {App::NSDF, App::GIA}) {
        const auto pipe = Pipeline::zeros(small_config(app));
        const auto img = render_frame(pipe, Camera{});
        for (float v : img.rgb) CHECK(v == 0.5f);
    }
}

TEST_CASE("GIA training lowers the error", "[pipelines][train]") {
    Image target(8, 8);
    for (std::uint32_t y = 0; y < 8; ++y)
        for (std::uint32_t x = 0; x < 8; ++x) {
            float* px = target.pixel(x, y);
            px[0] = x / 7.0f;
            px[1] = y / 7.0f;
            px[2] = (x + y) % 2 ? 1.0f : 0.0f;
        }
    GiaTrainOptions opt;
    opt.encoding = EncodingConfig::make(GridKind::Hash, 2, 4, 1.5, 2, 1u << 10, 4);
    opt.hidden_layers = 1;
    opt.steps = 300;
    opt.seed = 3;
    const auto r = train_gia(target, opt);
    REQUIRE(r.psnr.size() == 300);
    CHECK(r.final_psnr > r.psnr.front() + 10.0);
    CHECK(r.pipeline.table.all_finite());

    // Large table steps oscillate, so compare halves of the curve.
    const auto half = r.psnr.begin() + 150;
    const double early = std::accumulate(r.psnr.begin(), half, 0.0) / 150;
    const double late = std::accumulate(half, r.psnr.end(), 0.0) / 150;
    CHECK(late > early);

    const auto again = train_gia(target, opt);
    CHECK(again.psnr == r.psnr);
    CHECK(again.pipeline.table == r.pipeline.table);
}

TEST_CASE("GIA training rejects an empty image", "[pipelines][train]") {
    CHECK_THROWS_AS(train_gia(Image{}, GiaTrainOptions{}), ConfigError);
}
