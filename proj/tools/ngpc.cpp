// ngpc: command-line driver for the encodings, pipelines and performance model.
//
//   ngpc encode      --config enc.json --points pts.txt --out features.bin
//   ngpc render      --config pipe.json [--camera cam.json] --out frame.ppm
//   ngpc train-gia   (--image target.ppm | --noise 32) --out recon.ppm
//   ngpc perf-sweep  [--config sweep.json | --paper-defaults] --out reports/
//   ngpc verify      [--level fast|full] [--checkpoint f] [--table f]

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ngpc/config_io.hpp"
#include "ngpc/encoding.hpp"
#include "ngpc/image.hpp"
#include "ngpc/mlp.hpp"
#include "ngpc/perfmodel.hpp"
#include "ngpc/pipelines.hpp"
#include "ngpc/testing/verify.hpp"

namespace fs = std::filesystem;
using ngpc::config::Json;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool no_timestamp = false;

    [[nodiscard]] unsigned thread_count() const { return threads == 0 ? ngpc::default_thread_count() : threads; }
};

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ngpc::ConfigError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ngpc::ConfigError(path + ": " + e.what());
    }
}

std::ofstream open_out(const fs::path& path, bool binary = false) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    return os;
}

std::string timestamp() {
    const std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Feature dump: "NGFEAT01", u32 width, u64 count, f32 features, checksum.
void write_features(std::ostream& os, std::uint32_t width, std::span<const float> features) {
    ngpc::io::Writer w;
    w.bytes("NGFEAT01");
    w.u(width);
    w.u(static_cast<std::uint64_t>(width == 0 ? 0 : features.size() / width));
    w.f32s(features);
    w.finish(os);
}

/// Whitespace-separated coordinates, one point per line; '#' starts a comment.
std::vector<float> read_points(const std::string& path, std::uint32_t dims) {
    std::ifstream in(path);
    if (!in) throw ngpc::ConfigError("cannot open " + path);
    std::vector<float> pts;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        std::istringstream ss(line);
        std::vector<float> row;
        float v;
        while (ss >> v) row.push_back(v);
        if (!ss.eof()) throw ngpc::ConfigError(path + ":" + std::to_string(lineno) + ": not a number");
        if (row.empty()) continue;
        if (row.size() != dims)
            throw ngpc::ConfigError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(dims) +
                                    " coordinates");
        pts.insert(pts.end(), row.begin(), row.end());
    }
    return pts;
}

int cmd_encode(const Common& c, const std::string& points, const std::string& table_path) {
    ngpc::FeatureTable table = [&] {
        if (!table_path.empty()) {
            std::ifstream in(table_path, std::ios::binary);
            if (!in) throw ngpc::ConfigError("cannot open " + table_path);
            return ngpc::read_table<float>(in);
        }
        const auto cfg = c.config.empty() ? ngpc::EncodingConfig{} : ngpc::config::encoding_from_json(load_json(c.config));
        return ngpc::FeatureTable::random(cfg, c.seed, 1.0f);
    }();
    const auto pts = read_points(points, table.config().dims);
    const auto features = ngpc::encode_batch(std::span<const float>(pts), table, c.thread_count());
    auto os = open_out(c.out, true);
    write_features(os, table.config().output_width(), features);
    std::cerr << "encoded " << pts.size() / table.config().dims << " points\n";
    return 0;
}

int cmd_render(const Common& c, const std::string& camera_path, const std::string& planar, bool no_jitter) {
    auto cfg = c.config.empty() ? ngpc::preset_pipeline_config(ngpc::App::NeRF, ngpc::GridKind::Hash)
                                : ngpc::config::pipeline_from_json(load_json(c.config));
    const auto camera = camera_path.empty() ? ngpc::config::default_camera(cfg.frame)
                                            : ngpc::config::camera_from_json(load_json(camera_path));
    const auto pipe = ngpc::Pipeline::create(cfg, c.seed);
    const auto img = ngpc::render_frame(pipe, camera, {.seed = c.seed, .jitter = !no_jitter, .threads = c.thread_count()});
    {
        auto os = open_out(c.out, true);
        ngpc::write_ppm(os, img);
    }
    if (!planar.empty()) {
        auto os = open_out(planar, true);
        ngpc::write_planar(os, img);
    }
    return 0;
}

ngpc::Image noise_image(std::uint32_t size, std::uint64_t seed) {
    ngpc::Image img(size, size);
    ngpc::Rng rng(ngpc::splitmix64(seed ^ 0x6e6f697365ull));
    for (auto& v : img.rgb) v = rng.uniform();
    return img;
}

int cmd_train_gia(const Common& c, const std::string& image, std::uint32_t noise, const std::string& log,
                  const std::string& save_table, const std::string& save_checkpoint) {
    ngpc::GiaTrainOptions opt;
    opt.seed = c.seed;
    opt.threads = c.thread_count();
    if (!c.config.empty()) {
        const auto j = load_json(c.config);
        ngpc::config::detail::check_keys(
            j, {"encoding", "hidden_layers", "hidden_width", "steps", "learning_rate", "table_learning_rate"},
            "train-gia config");
        if (j.contains("encoding")) opt.encoding = ngpc::config::encoding_from_json(j.at("encoding"), opt.encoding);
        ngpc::config::detail::read(j, "hidden_layers", opt.hidden_layers);
        ngpc::config::detail::read(j, "hidden_width", opt.hidden_width);
        ngpc::config::detail::read(j, "steps", opt.steps);
        ngpc::config::detail::read(j, "learning_rate", opt.learning_rate);
        ngpc::config::detail::read(j, "table_learning_rate", opt.table_learning_rate);
    }
    ngpc::Image target;
    if (!image.empty()) {
        std::ifstream in(image, std::ios::binary);
        if (!in) throw ngpc::ConfigError("cannot open " + image);
        target = ngpc::read_ppm(in);
    } else {
        target = noise_image(noise, c.seed);
    }
    const auto result = ngpc::train_gia(target, opt);
    const auto recon = ngpc::render_frame(result.pipeline, ngpc::Camera{}, {.threads = opt.threads});
    {
        auto os = open_out(c.out, true);
        ngpc::write_ppm(os, recon);
    }
    if (!log.empty()) {
        auto os = open_out(log);
        os << "step,psnr_db\n";
        char buf[64];
        for (std::size_t i = 0; i < result.psnr.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%zu,%.4f\n", i, result.psnr[i]);
            os << buf;
        }
    }
    if (!save_table.empty()) {
        auto os = open_out(save_table, true);
        ngpc::write_table(os, result.pipeline.table);
    }
    if (!save_checkpoint.empty()) {
        auto os = open_out(save_checkpoint, true);
        ngpc::write_checkpoint(os, result.pipeline.primary);
    }
    std::printf("final PSNR %.3f dB after %u steps\n", result.final_psnr, opt.steps);
    return 0;
}

int cmd_perf_sweep(const Common& c, bool use_defaults) {
    ngpc::config::SweepConfig cfg;
    if (!c.config.empty()) cfg = ngpc::config::sweep_from_json(load_json(c.config));
    if (use_defaults) {
        cfg.profiles = ngpc::perf::default_profiles();
        cfg.nfp_counts.assign(ngpc::perf::kDefaultNfpCounts.begin(), ngpc::perf::kDefaultNfpCounts.end());
    }
    const auto rows = ngpc::perf::sweep(cfg.profiles, cfg.archs(), c.thread_count());

    Json settings = ngpc::config::to_json(cfg.arch);
    settings.erase("nfp_count");
    std::string counts;
    for (auto n : cfg.nfp_counts) counts += (counts.empty() ? "" : ";") + std::to_string(n);
    settings["nfp_counts"] = counts;
    settings["profiles"] = cfg.profiles.size();
    if (!c.no_timestamp) settings["generated"] = timestamp();

    const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    fs::create_directories(dir);
    {
        auto os = open_out(dir / "sweep.csv");
        ngpc::config::write_header(os, settings);
        ngpc::config::write_sweep_csv(os, rows);
    }
    {
        auto os = open_out(dir / "bandwidth.csv");
        ngpc::config::write_header(os, settings);
        ngpc::config::write_bandwidth_csv(os, cfg.profiles, 60.0, cfg.arch.host_mem_bw_gbps);
    }
    {
        auto os = open_out(dir / "area_power.csv");
        ngpc::config::write_header(os, settings);
        ngpc::config::write_area_power_csv(os, cfg.nfp_counts);
    }
    {
        auto report = ngpc::config::report_json(cfg, rows);
        if (!c.no_timestamp) report["generated"] = settings["generated"];
        auto os = open_out(dir / "report.json");
        os << report.dump(2) << '\n';
    }

    std::printf("%-5s", "enc");
    for (auto n : cfg.nfp_counts) std::printf("  N=%-6u", n);
    std::printf("\n");
    for (auto k : {ngpc::GridKind::Hash, ngpc::GridKind::Dense, ngpc::GridKind::Tiled}) {
        bool any = false;
        std::string line = ngpc::encoding_label(k);
        line.resize(5, ' ');
        for (auto n : cfg.nfp_counts) {
            try {
                char buf[32];
                std::snprintf(buf, sizeof buf, "  %7.2fx", ngpc::perf::mean_speedup(rows, k, n));
                line += buf;
                any = true;
            } catch (const ngpc::DomainError&) {
                line += "        -";
            }
        }
        if (any) std::printf("%s\n", line.c_str());
    }
    return 0;
}

int cmd_verify(const Common& c, const std::string& level, const std::string& checkpoint, const std::string& table) {
    if (level != "fast" && level != "full") throw ngpc::ConfigError("level must be fast or full");
    ngpc::testing::VerifySuite suite(level == "fast" ? ngpc::testing::VerifyLevel::Fast
                                                     : ngpc::testing::VerifyLevel::Full,
                                     c.seed);
    int failures = suite.run(std::cout);
    const auto check_file = [&](const std::string& path, const char* what, auto&& reader) {
        if (path.empty()) return;
        try {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw std::runtime_error("cannot open " + path);
            reader(in);
            std::cout << "PASS " << what << "-integrity  (" << path << ")\n";
        } catch (const std::exception& e) {
            ++failures;
            std::cout << "FAIL " << what << "-integrity  (" << path << ": " << e.what() << ")\n";
        }
    };
    check_file(checkpoint, "checkpoint", [](std::istream& in) { (void)ngpc::read_checkpoint(in); });
    check_file(table, "table", [](std::istream& in) { (void)ngpc::read_any_table(in); });
    std::cout << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
    return failures == 0 ? 0 : 1;
}

void add_common(CLI::App* sub, Common& c, bool with_timestamp = false) {
    sub->add_option("--config", c.config, "JSON configuration file");
    sub->add_option("--out", c.out, "output path");
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--threads", c.threads, "worker threads (0: NGPC_THREADS or all cores)");
    if (with_timestamp) sub->add_flag("--no-timestamp", c.no_timestamp, "omit the generation timestamp");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural graphics kernels and accelerator performance model"};
    app.require_subcommand(1);
    Common common;

    auto* enc = app.add_subcommand("encode", "encode a points file with a grid encoding");
    add_common(enc, common);
    std::string points, table_in;
    enc->add_option("--points", points, "text file, one point per line")->required();
    enc->add_option("--table", table_in, "feature table file (default: random from --seed)");
    enc->get_option("--out")->required();

    auto* render = app.add_subcommand("render", "render one frame of a randomly initialized pipeline");
    add_common(render, common);
    std::string camera, planar;
    bool no_jitter = false;
    render->add_option("--camera", camera, "camera JSON");
    render->add_option("--planar", planar, "also write a planar float dump");
    render->add_flag("--no-jitter", no_jitter, "sample ray bins at their midpoints");
    render->get_option("--out")->required();

    auto* gia = app.add_subcommand("train-gia", "fit a 2-D image with a grid encoding and an MLP");
    add_common(gia, common);
    std::string image, log, save_table, save_ckpt;
    std::uint32_t noise = 32;
    gia->add_option("--image", image, "target PPM (default: seeded noise)");
    gia->add_option("--noise", noise, "side of the seeded noise target");
    gia->add_option("--log", log, "CSV of PSNR per step");
    gia->add_option("--save-table", save_table, "write the trained feature table");
    gia->add_option("--save-checkpoint", save_ckpt, "write the trained MLP");
    gia->get_option("--out")->required();

    auto* sweep = app.add_subcommand("perf-sweep", "run the accelerator model over profiles and NFP counts");
    add_common(sweep, common, true);
    bool use_defaults = false;
    sweep->add_flag("--paper-defaults", use_defaults, "all 12 application x encoding presets, N = 8/16/32/64");

    auto* verify = app.add_subcommand("verify", "compare kernels against reference implementations");
    add_common(verify, common);
    std::string level = "fast", ckpt_in, table_check;
    verify->add_option("--level", level, "fast or full");
    verify->add_option("--checkpoint", ckpt_in, "check an MLP checkpoint file");
    verify->add_option("--table", table_check, "check a feature table file");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*enc) return cmd_encode(common, points, table_in);
        if (*render) return cmd_render(common, camera, planar, no_jitter);
        if (*gia) return cmd_train_gia(common, image, noise, log, save_table, save_ckpt);
        if (*sweep) return cmd_perf_sweep(common, use_defaults);
        if (*verify) return cmd_verify(common, level, ckpt_in, table_check);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
