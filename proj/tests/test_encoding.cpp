#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "catch_amalgamated.hpp"
#include "ngpc/encoding.hpp"
#include "ngpc/testing/oracles.hpp"
#include "ngpc/testing/verify.hpp"

using namespace ngpc;
using ngpc::testing::oracle_encode;

namespace {

std::span<const float> sp(const std::vector<float>& v) { return {v.data(), v.size()}; }

}  // namespace

TEST_CASE("hash of a fixed vertex", "[encoding][hash]") {
    // Computed with 64-bit integer arithmetic outside the library.
    const std::array<std::uint32_t, 3> v{17, 42, 99};
    CHECK(hash_index(v, kDefaultPrimes, 1u << 19) == 403844u);
    CHECK(hash_index(v, kDefaultPrimes, 1u << 19) ==
          testing::oracle_hash(v, kDefaultPrimes, 1u << 19));
}

TEST_CASE("hash rejects a table size that is not a power of two", "[encoding][hash]") {
    const std::array<std::uint32_t, 3> v{1, 2, 3};
    CHECK_THROWS_AS(hash_index(v, kDefaultPrimes, 3), ConfigError);
    CHECK_THROWS_AS(hash_index(v, kDefaultPrimes, 0), ConfigError);
}

TEST_CASE("hash agrees with the 64-bit oracle", "[encoding][hash]") {
    Rng rng(11);
    for (int i = 0; i < 20000; ++i) {
        const std::array<std::uint32_t, 3> v{rng.next_u32(), rng.next_u32(), rng.next_u32()};
        const std::array<std::uint32_t, 3> p{1u, rng.next_u32() | 1u, rng.next_u32() | 1u};
        const std::uint32_t t = 1u << (1 + rng.below(31));
        REQUIRE(hash_index(v, p, t) == testing::oracle_hash(v, p, t));
    }
}

TEST_CASE("dense linearization", "[encoding][dense]") {
    const std::array<std::uint32_t, 3> v3{1, 2, 3};
    CHECK(dense_index(v3, 4, 128) == 86u);
    const std::array<std::uint32_t, 2> v2{4, 4};
    CHECK(dense_index(v2, 4, 32) == 24u);
    // 5^3 = 125 vertices do not fit 64 rows.
    CHECK_THROWS_AS(dense_index(v3, 4, 64), ConfigError);
    // Tiled grids wrap instead.
    CHECK(dense_index(v3, 4, 64, GridKind::Tiled) == 86u % 64u);
    const std::array<std::uint32_t, 2> outside{5, 0};
    CHECK_THROWS_AS(dense_index(outside, 4, 32), DomainError);
}

TEST_CASE("level resolutions", "[encoding]") {
    const auto c = EncodingConfig::make(GridKind::Hash, 3, 16, 1.51572, 2, 1u << 19, 16);
    CHECK(grid_scale(c, 0) == 16u);
    CHECK(grid_scale(c, 4) == 84u);
    CHECK_THROWS_AS(grid_scale(c, 16), std::out_of_range);
    for (std::uint32_t l = 1; l < 16; ++l) CHECK(grid_scale(c, l) >= grid_scale(c, l - 1));
    const auto flat = EncodingConfig::make(GridKind::Tiled, 3, 128, 1.0, 8, 1u << 19, 2);
    CHECK(grid_scale(flat, 0) == 128u);
    CHECK(grid_scale(flat, 1) == 128u);
}

TEST_CASE("bilinear corner weights", "[encoding][interp]") {
    const std::vector<float> p{0.3f, 0.7f};
    const auto cs = corner_set(sp(p), 8);
    REQUIRE(cs.count == 4);
    CHECK(cs.coords[0][0] == 2);
    CHECK(cs.coords[0][1] == 5);
    CHECK(cs.coords[3][0] == 3);
    CHECK(cs.coords[3][1] == 6);
    // Hat-function basis evaluated in double: (1-0.4)(1-0.6), 0.4(1-0.6), (1-0.4)0.6, 0.4*0.6.
    const double expected[4] = {0.24, 0.16, 0.36, 0.24};
    float sum = 0.0f;
    for (int k = 0; k < 4; ++k) {
        CHECK(cs.weights[k] == Catch::Approx(expected[k]).margin(1e-6));
        sum += cs.weights[k];
    }
    CHECK(sum == Catch::Approx(1.0f).margin(1e-6));
}

TEST_CASE("corner weights form a partition of unity", "[encoding][interp]") {
    Rng rng(3);
    for (int i = 0; i < 2000; ++i) {
        const auto p = testing::random_point(rng, 3);
        const auto cs = corner_set(sp(p), 1 + static_cast<std::uint32_t>(rng.below(300)));
        double s = 0.0;
        for (std::uint32_t k = 0; k < cs.count; ++k) {
            REQUIRE(cs.weights[k] >= 0.0f);
            s += cs.weights[k];
        }
        REQUIRE(s == Catch::Approx(1.0).margin(1e-5));
    }
}

TEST_CASE("positions outside the unit box are rejected", "[encoding]") {
    const auto table = FeatureTable::random(EncodingConfig::make(GridKind::Hash, 2, 4, 2.0, 2, 64, 2), 1);
    CHECK_THROWS_AS(encode_point(sp({1.5f, 0.5f}), table), DomainError);
    CHECK_THROWS_AS(encode_point(sp({-0.01f, 0.5f}), table), DomainError);
    CHECK_THROWS_AS(encode_point(sp({NAN, 0.5f}), table), DomainError);
    CHECK_THROWS_AS(encode_point(sp({0.5f, 0.5f, 0.5f}), table), ConfigError);
}

TEST_CASE("config validation", "[encoding]") {
    auto c = EncodingConfig::make(GridKind::Hash, 3, 16, 1.5, 2, 1u << 10, 4);
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.table_size = 1000;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.primes = {1u, 3u};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.primes = {1u, 3u, 3u};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.primes = {1u, 4u, 3u};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.dims = 4;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.growth = 0.9;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    // A dense grid whose finest level exceeds T is refused up front.
    CHECK_THROWS_AS(FeatureTable(EncodingConfig::make(GridKind::Dense, 3, 16, 1.405, 2, 1u << 12, 2)), ConfigError);
}

TEST_CASE("encode matches the brute-force oracle bit for bit", "[encoding][oracle]") {
    Rng rng(2024);
    for (int t = 0; t < 40; ++t) {
        const auto cfg = testing::random_encoding_config(rng);
        const auto table = FeatureTable::random(cfg, rng.next_u64(), 1.0f);
        for (int i = 0; i < 50; ++i) {
            const auto p = testing::random_point(rng, cfg.dims);
            REQUIRE(encode_point(sp(p), table) == oracle_encode(table, sp(p)));
        }
    }
}

TEST_CASE("encode on the far boundary uses the last vertex", "[encoding][interp]") {
    const auto cfg = EncodingConfig::make(GridKind::Dense, 2, 4, 1.0, 1, 32, 1);
    FeatureTable table(cfg);
    for (std::uint32_t r = 0; r < 25; ++r) table.set(0, r, 0, static_cast<float>(r));
    // Vertex (4, 4) is row 24; vertex (4, 2) is row 14.
    CHECK(encode_point(sp({1.0f, 1.0f}), table)[0] == 24.0f);
    CHECK(encode_point(sp({1.0f, 0.5f}), table)[0] == 14.0f);
    CHECK(encode_point(sp({0.0f, 0.0f}), table)[0] == 0.0f);
}

TEST_CASE("a grid reproduces a function that is linear on each cell", "[encoding][interp]") {
    // f(x, y) = 2x - y sampled on vertices is reproduced exactly by bilinear blending.
    const std::uint32_t res = 8;
    const auto cfg = EncodingConfig::make(GridKind::Dense, 2, res, 1.0, 1, 128, 1);
    FeatureTable table(cfg);
    for (std::uint32_t y = 0; y <= res; ++y)
        for (std::uint32_t x = 0; x <= res; ++x)
            table.set(0, y * (res + 1) + x, 0, 2.0f * x / res - static_cast<float>(y) / res);
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const std::vector<float> p{rng.uniform(), rng.uniform()};
        CHECK(encode_point(sp(p), table)[0] == Catch::Approx(2.0 * p[0] - p[1]).margin(1e-5));
    }
}

TEST_CASE("encode output layout and batch equivalence", "[encoding]") {
    const auto cfg = EncodingConfig::make(GridKind::Hash, 3, 16, 1.5, 4, 1u << 12, 5);
    const auto table = FeatureTable::random(cfg, 9, 1.0f);
    Rng rng(4);
    std::vector<float> pts;
    for (int i = 0; i < 257; ++i)
        for (int d = 0; d < 3; ++d) pts.push_back(rng.uniform());
    const auto single = encode_batch(sp(pts), table, 1);
    const auto multi = encode_batch(sp(pts), table, 4);
    REQUIRE(single.size() == 257u * 20u);
    CHECK(single == multi);
    for (int i = 0; i < 257; ++i) {
        const auto one = encode_point(std::span<const float>(pts.data() + 3 * i, 3), table);
        REQUIRE(std::equal(one.begin(), one.end(), single.begin() + 20 * i));
    }
    CHECK(encode_batch(std::span<const float>(), table).empty());
}

TEST_CASE("batch errors name the offending element", "[encoding]") {
    const auto table = FeatureTable::random(EncodingConfig::make(GridKind::Hash, 2, 4, 2.0, 1, 64, 2), 1);
    const std::vector<float> pts{0.1f, 0.2f, 0.3f, 0.4f, 2.0f, 0.5f, 0.2f, 0.2f};
    try {
        (void)encode_batch(sp(pts), table, 1);
        FAIL("expected a BatchError");
    } catch (const BatchError& e) {
        CHECK(e.index() == 2);
    }
    CHECK_THROWS_AS(encode_batch(sp({0.1f, 0.2f, 0.3f}), table), ConfigError);
}

TEST_CASE("encode backward matches finite differences", "[encoding][gradient]") {
    Rng rng(77);
    for (int i = 0; i < 100; ++i) {
        const auto cfg = testing::random_encoding_config(rng);
        const auto table = FeatureTable::random(cfg, rng.next_u64(), 1.0f);
        const auto p = testing::random_point(rng, cfg.dims);
        std::vector<float> up(cfg.output_width());
        for (auto& v : up) v = rng.uniform(-1.0f, 1.0f);
        const auto grad = encode_backward(sp(p), table, up);
        auto values = testing::table_values(table);
        std::vector<double> analytic, numeric;
        for (const auto& [key, g] : grad.rows) {
            for (std::uint32_t f = 0; f < cfg.features; ++f) {
                const std::size_t idx = table.offset(key.first, key.second) + f;
                const double h = 1e-3, v0 = values[idx];
                auto loss = [&](double v) {
                    values[idx] = v;
                    const auto e = testing::oracle_encode_double(cfg, values, sp(p));
                    double s = 0.0;
                    for (std::size_t k = 0; k < e.size(); ++k) s += up[k] * e[k];
                    return s;
                };
                numeric.push_back((loss(v0 + h) - loss(v0 - h)) / (2 * h));
                values[idx] = v0;
                analytic.push_back(g[f]);
            }
        }
        REQUIRE(testing::relative_error(analytic, numeric) <= 1e-4);
    }
}

TEST_CASE("colliding corners accumulate their gradients", "[encoding][gradient]") {
    // T = 1: every vertex maps to row 0, so the gradient is the weight sum.
    const auto cfg = EncodingConfig::make(GridKind::Hash, 2, 4, 1.0, 1, 1, 1);
    const auto table = FeatureTable::random(cfg, 1);
    const std::vector<float> up{2.0f};
    const auto g = encode_backward(sp({0.37f, 0.81f}), table, up);
    REQUIRE(g.rows.size() == 1);
    CHECK(g.at(0, 0, 0) == Catch::Approx(2.0f).margin(1e-6));
}

TEST_CASE("dense gradient buffer agrees with sparse gradient", "[encoding][gradient]") {
    const auto cfg = EncodingConfig::make(GridKind::Hash, 3, 8, 1.7, 2, 1u << 8, 3);
    const auto table = FeatureTable::random(cfg, 3);
    const std::vector<float> p{0.2f, 0.9f, 0.55f};
    const std::vector<float> up{1, -2, 3, -4, 5, -6};
    std::vector<float> dense(table.data().size(), 0.0f);
    accumulate_encode_gradient(sp(p), table, up, std::span<float>(dense));
    const auto sparse = encode_backward(sp(p), table, up);
    for (std::uint32_t l = 0; l < cfg.levels; ++l)
        for (std::uint32_t r = 0; r < cfg.table_size; ++r)
            for (std::uint32_t f = 0; f < cfg.features; ++f)
                REQUIRE(dense[table.offset(l, r) + f] == Catch::Approx(sparse.at(l, r, f)).margin(1e-6));
}

TEST_CASE("table files round trip and detect corruption", "[encoding][io]") {
    const auto cfg = EncodingConfig::make(GridKind::Tiled, 3, 12, 1.2, 3, 1u << 9, 2);
    const auto table = FeatureTable::random(cfg, 5, 1.0f);
    std::stringstream ss;
    write_table(ss, table);
    std::string blob = ss.str();
    {
        std::istringstream in(blob);
        CHECK(read_table<float>(in) == table);
    }
    {
        std::istringstream in(blob);
        CHECK_THROWS_AS(read_table<Half>(in), io::FormatError);
    }
    blob[blob.size() / 2] ^= 0x10;
    std::istringstream in(blob);
    CHECK_THROWS_AS(read_table<float>(in), io::FormatError);
}

TEST_CASE("half-precision tables", "[encoding][half]") {
    const auto cfg = EncodingConfig::make(GridKind::Hash, 2, 4, 1.5, 2, 1u << 8, 3);
    const auto t32 = FeatureTable::random(cfg, 8, 1.0f);
    HalfFeatureTable t16(cfg);
    for (std::size_t i = 0; i < t32.data().size(); ++i) t16.data()[i] = Half(t32.data()[i]);
    CHECK(t16.config().precision == Precision::F16);

    const std::vector<float> p{0.42f, 0.13f};
    const auto a = encode_point(sp(p), t32);
    const auto b = encode_point(sp(p), t16);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == Catch::Approx(a[i]).margin(2e-3));
    CHECK(b == oracle_encode(t16, sp(p)));

    std::stringstream ss;
    write_table(ss, t16);
    auto any = read_any_table(ss);
    REQUIRE(std::holds_alternative<HalfFeatureTable>(any));
    CHECK(std::get<HalfFeatureTable>(any) == t16);
}

TEST_CASE("random tables respect the init scale", "[encoding]") {
    const auto t = FeatureTable::random(EncodingConfig::make(GridKind::Hash, 3, 16, 1.5, 2, 1u << 10, 4), 1);
    for (float v : t.data()) REQUIRE(std::abs(v) <= 1e-4f);
    CHECK(t.all_finite());
    const auto u = FeatureTable::random(t.config(), 1);
    CHECK(u == t);
}
