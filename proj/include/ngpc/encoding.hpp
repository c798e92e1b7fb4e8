#pragma once

// Multi-resolution parametric grid encodings: hashgrid (MRHG), densegrid
// (MRDG) and tiled low-resolution densegrid (LRDG).
//
// A d-dimensional position in [0,1]^d is scaled to each level's vertex
// resolution, the 2^d surrounding vertices are mapped to table rows (by
// spatial hash or row-major linearization) and their F-wide feature vectors
// are d-linearly blended. Level outputs are concatenated, level 0 first.
//
// All float arithmetic follows one fixed order (corner weights multiply in
// dimension order, corners accumulate in bitmask order) so results are
// reproducible bit-for-bit when FMA contraction is disabled.

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "ngpc/binary_io.hpp"
#include "ngpc/common.hpp"
#include "ngpc/half.hpp"

namespace ngpc {

enum class GridKind : std::uint8_t { Hash = 0, Dense = 1, Tiled = 2 };
enum class Precision : std::uint8_t { F16 = 16, F32 = 32 };

inline constexpr std::uint32_t kMaxDims = 3;
inline constexpr std::uint32_t kMaxCorners = 1u << kMaxDims;
inline constexpr std::array<std::uint32_t, kMaxDims> kDefaultPrimes{1u, 2654435761u, 805459861u};

[[nodiscard]] inline std::string to_string(GridKind k) {
    switch (k) {
        case GridKind::Hash: return "HashGrid";
        case GridKind::Dense: return "DenseGrid";
        case GridKind::Tiled: return "TiledGrid";
    }
    return "?";
}

[[nodiscard]] inline GridKind grid_kind_from_string(const std::string& s) {
    if (s == "HashGrid" || s == "hash" || s == "MRHG") return GridKind::Hash;
    if (s == "DenseGrid" || s == "dense" || s == "MRDG") return GridKind::Dense;
    if (s == "TiledGrid" || s == "tiled" || s == "LRDG") return GridKind::Tiled;
    throw ConfigError("unknown grid kind: " + s);
}

/// Short encoding label (MRHG / MRDG / LRDG).
[[nodiscard]] inline std::string encoding_label(GridKind k) {
    switch (k) {
        case GridKind::Hash: return "MRHG";
        case GridKind::Dense: return "MRDG";
        case GridKind::Tiled: return "LRDG";
    }
    return "?";
}

struct EncodingConfig {
    GridKind kind = GridKind::Hash;
    std::uint32_t dims = 3;
    std::uint32_t base_resolution = 16;
    double growth = 1.51572;
    std::uint32_t features = 2;
    std::uint32_t table_size = 1u << 19;
    std::uint32_t levels = 16;
    std::vector<std::uint32_t> primes{kDefaultPrimes.begin(), kDefaultPrimes.end()};
    Precision precision = Precision::F32;

    /// Builds a config with the default hashing constants for `dims`.
    static EncodingConfig make(GridKind kind, std::uint32_t dims, std::uint32_t base_resolution, double growth,
                               std::uint32_t features, std::uint32_t table_size, std::uint32_t levels) {
        EncodingConfig c;
        c.kind = kind;
        c.dims = dims;
        c.base_resolution = base_resolution;
        c.growth = growth;
        c.features = features;
        c.table_size = table_size;
        c.levels = levels;
        c.primes.assign(kDefaultPrimes.begin(), kDefaultPrimes.begin() + std::min(dims, kMaxDims));
        return c;
    }

    [[nodiscard]] std::uint32_t output_width() const noexcept { return levels * features; }

    void validate() const;

    bool operator==(const EncodingConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Index arithmetic
// ---------------------------------------------------------------------------

/// Vertex resolution of `level`: floor(Nmin * b^level).
[[nodiscard]] inline std::uint32_t grid_scale(const EncodingConfig& config, std::uint32_t level) {
    if (level >= config.levels)
        throw std::out_of_range("level " + std::to_string(level) + " outside [0, " +
                                std::to_string(config.levels) + ")");
    const double scale = static_cast<double>(config.base_resolution) *
                         std::pow(config.growth, static_cast<double>(level));
    return static_cast<std::uint32_t>(std::floor(scale));
}

namespace detail {

[[nodiscard]] inline std::uint32_t hash_unchecked(std::span<const std::uint32_t> coords,
                                                  std::span<const std::uint32_t> primes,
                                                  std::uint32_t table_size) noexcept {
    std::uint32_t h = 0;
    for (std::size_t i = 0; i < coords.size(); ++i) h ^= coords[i] * primes[i];
    return h & (table_size - 1u);
}

[[nodiscard]] inline std::uint64_t dense_linear(std::span<const std::uint32_t> coords,
                                                std::uint32_t resolution) noexcept {
    const std::uint64_t stride = static_cast<std::uint64_t>(resolution) + 1;
    std::uint64_t idx = 0;
    std::uint64_t mul = 1;
    for (std::uint32_t c : coords) {
        idx += c * mul;
        mul *= stride;
    }
    return idx;
}

[[nodiscard]] inline std::uint64_t dense_capacity(std::uint32_t dims, std::uint32_t resolution) noexcept {
    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < dims; ++i) n *= static_cast<std::uint64_t>(resolution) + 1;
    return n;
}

}  // namespace detail

/// Spatial hash: (XOR_i coords_i * primes_i) AND (T - 1), in wrapping 32-bit
/// arithmetic.
[[nodiscard]] inline std::uint32_t hash_index(std::span<const std::uint32_t> coords,
                                              std::span<const std::uint32_t> primes, std::uint32_t table_size) {
    if (!is_power_of_two(table_size)) throw ConfigError("table size must be a power of two");
    if (coords.size() != primes.size()) throw ConfigError("hash: coords and primes differ in length");
    return detail::hash_unchecked(coords, primes, table_size);
}

/// Row-major vertex index with stride (resolution + 1), dimension 0 fastest.
/// Dense grids must fit the table; tiled grids wrap with AND (T - 1).
[[nodiscard]] inline std::uint32_t dense_index(std::span<const std::uint32_t> coords, std::uint32_t resolution,
                                               std::uint32_t table_size, GridKind kind = GridKind::Dense) {
    if (!is_power_of_two(table_size)) throw ConfigError("table size must be a power of two");
    for (std::uint32_t c : coords)
        if (c > resolution) throw DomainError("vertex coordinate exceeds resolution");
    if (kind == GridKind::Dense) {
        if (detail::dense_capacity(static_cast<std::uint32_t>(coords.size()), resolution) > table_size)
            throw ConfigError("dense grid of resolution " + std::to_string(resolution) +
                              " does not fit a table of " + std::to_string(table_size) + " entries");
        return static_cast<std::uint32_t>(detail::dense_linear(coords, resolution));
    }
    return static_cast<std::uint32_t>(detail::dense_linear(coords, resolution) & (table_size - 1u));
}

inline void EncodingConfig::validate() const {
    if (dims < 2 || dims > kMaxDims) throw ConfigError("input dimension must be 2 or 3");
    if (base_resolution < 1) throw ConfigError("base resolution must be >= 1");
    if (!(growth >= 1.0) || !std::isfinite(growth)) throw ConfigError("growth factor must be finite and >= 1");
    if (features < 1) throw ConfigError("features per entry must be >= 1");
    if (levels < 1) throw ConfigError("level count must be >= 1");
    if (!is_power_of_two(table_size)) throw ConfigError("table size must be a power of two");
    if (primes.size() != dims) throw ConfigError("need exactly one hashing constant per input dimension");
    if (primes.front() != 1u) throw ConfigError("first hashing constant must be 1");
    for (std::size_t i = 0; i < primes.size(); ++i) {
        if ((primes[i] & 1u) == 0) throw ConfigError("hashing constants must be odd");
        for (std::size_t j = 0; j < i; ++j)
            if (primes[i] == primes[j]) throw ConfigError("hashing constants must be distinct");
    }
    if (kind == GridKind::Dense) {
        for (std::uint32_t l = 0; l < levels; ++l)
            if (detail::dense_capacity(dims, grid_scale(*this, l)) > table_size)
                throw ConfigError("dense level " + std::to_string(l) + " exceeds table size");
    }
}

// ---------------------------------------------------------------------------
// Interpolation
// ---------------------------------------------------------------------------

struct CornerSet {
    std::uint32_t count = 0;  // 2^d
    std::array<std::array<std::uint32_t, kMaxDims>, kMaxCorners> coords{};
    std::array<float, kMaxCorners> weights{};
};

namespace detail {

struct CellPosition {
    std::array<std::uint32_t, kMaxDims> base{};
    std::array<float, kMaxDims> frac{};
};

/// Scales a unit-box position to `resolution` and splits it into the cell's
/// lower vertex and fractional offsets. A component sitting on the far
/// boundary is assigned to the last cell with offset 1, so the upper corner
/// stays inside [0, resolution].
[[nodiscard]] inline CellPosition locate(std::span<const float> position, std::uint32_t resolution) noexcept {
    CellPosition cell;
    const float scale = static_cast<float>(resolution);
    for (std::size_t i = 0; i < position.size(); ++i) {
        const float p = position[i] * scale;
        const float fl = std::floor(p);
        auto base = static_cast<std::uint32_t>(fl);
        float frac = p - fl;
        if (base >= resolution) {
            base = resolution - 1;
            frac = 1.0f;
        }
        cell.base[i] = base;
        cell.frac[i] = frac;
    }
    return cell;
}

[[nodiscard]] inline float corner_weight(const CellPosition& cell, std::uint32_t dims, std::uint32_t corner) noexcept {
    float w = 1.0f;
    for (std::uint32_t i = 0; i < dims; ++i) w *= ((corner >> i) & 1u) ? cell.frac[i] : 1.0f - cell.frac[i];
    return w;
}

inline void check_position(std::span<const float> position) {
    for (float p : position)
        if (!(p >= 0.0f && p <= 1.0f)) throw DomainError("position component outside [0, 1]");
}

}  // namespace detail

/// The 2^d cell corners around `position` (in [0,1]^d) at `resolution`, with
/// d-linear weights. Corner k takes the upper vertex in dimension i when bit
/// i of k is set.
[[nodiscard]] inline CornerSet corner_set(std::span<const float> position, std::uint32_t resolution) {
    if (position.empty() || position.size() > kMaxDims) throw ConfigError("position must have 1..3 components");
    if (resolution < 1) throw ConfigError("resolution must be >= 1");
    detail::check_position(position);
    const auto dims = static_cast<std::uint32_t>(position.size());
    const auto cell = detail::locate(position, resolution);
    CornerSet cs;
    cs.count = 1u << dims;
    for (std::uint32_t c = 0; c < cs.count; ++c) {
        for (std::uint32_t i = 0; i < dims; ++i) cs.coords[c][i] = cell.base[i] + ((c >> i) & 1u);
        cs.weights[c] = detail::corner_weight(cell, dims, c);
    }
    return cs;
}

// ---------------------------------------------------------------------------
// Feature tables
// ---------------------------------------------------------------------------

template <typename Scalar>
inline constexpr Precision precision_of = std::is_same_v<Scalar, Half> ? Precision::F16 : Precision::F32;

/// L level tables of T rows, each row F features; stored level-major.
template <typename Scalar = float>
class BasicFeatureTable {
    static_assert(std::is_same_v<Scalar, float> || std::is_same_v<Scalar, Half>);

public:
    using scalar_type = Scalar;

    explicit BasicFeatureTable(EncodingConfig config) : config_(std::move(config)) {
        config_.precision = precision_of<Scalar>;
        config_.validate();
        data_.assign(static_cast<std::size_t>(config_.levels) * config_.table_size * config_.features, Scalar{});
        cache_resolutions();
    }

    /// Entries drawn uniformly from [-scale, scale).
    static BasicFeatureTable random(EncodingConfig config, std::uint64_t seed, float scale = 1e-4f) {
        BasicFeatureTable t(std::move(config));
        Rng rng(seed);
        for (auto& v : t.data_) v = Scalar(rng.uniform(-scale, scale));
        return t;
    }

    [[nodiscard]] const EncodingConfig& config() const noexcept { return config_; }
    [[nodiscard]] std::uint32_t resolution(std::uint32_t level) const { return resolutions_.at(level); }

    [[nodiscard]] std::size_t offset(std::uint32_t level, std::uint32_t entry) const noexcept {
        return (static_cast<std::size_t>(level) * config_.table_size + entry) * config_.features;
    }

    [[nodiscard]] std::span<const Scalar> entry(std::uint32_t level, std::uint32_t entry) const noexcept {
        return {data_.data() + offset(level, entry), config_.features};
    }
    [[nodiscard]] std::span<Scalar> entry(std::uint32_t level, std::uint32_t entry) noexcept {
        return {data_.data() + offset(level, entry), config_.features};
    }

    [[nodiscard]] float value(std::uint32_t level, std::uint32_t row, std::uint32_t feature) const noexcept {
        return static_cast<float>(data_[offset(level, row) + feature]);
    }
    void set(std::uint32_t level, std::uint32_t row, std::uint32_t feature, float v) noexcept {
        data_[offset(level, row) + feature] = Scalar(v);
    }

    [[nodiscard]] std::span<const Scalar> data() const noexcept { return data_; }
    [[nodiscard]] std::span<Scalar> data() noexcept { return data_; }

    [[nodiscard]] bool all_finite() const noexcept {
        for (const auto& v : data_)
            if (!std::isfinite(static_cast<float>(v))) return false;
        return true;
    }

    bool operator==(const BasicFeatureTable& other) const {
        if (!(config_ == other.config_) || data_.size() != other.data_.size()) return false;
        for (std::size_t i = 0; i < data_.size(); ++i)
            if (bits(data_[i]) != bits(other.data_[i])) return false;
        return true;
    }

private:
    static std::uint32_t bits(float v) noexcept { return std::bit_cast<std::uint32_t>(v); }
    static std::uint32_t bits(Half v) noexcept { return v.bits; }

    void cache_resolutions() {
        resolutions_.resize(config_.levels);
        for (std::uint32_t l = 0; l < config_.levels; ++l) resolutions_[l] = grid_scale(config_, l);
    }

    EncodingConfig config_;
    std::vector<std::uint32_t> resolutions_;
    std::vector<Scalar> data_;
};

using FeatureTable = BasicFeatureTable<float>;
using HalfFeatureTable = BasicFeatureTable<Half>;

/// L*F features, level 0 first, each level's F features contiguous.
using EncodedFeature = std::vector<float>;

namespace detail {

template <typename Scalar>
[[nodiscard]] inline std::uint32_t corner_row(const BasicFeatureTable<Scalar>& table, const CellPosition& cell,
                                              std::uint32_t resolution, std::uint32_t corner) noexcept {
    const auto& cfg = table.config();
    std::array<std::uint32_t, kMaxDims> v{};
    for (std::uint32_t i = 0; i < cfg.dims; ++i) v[i] = cell.base[i] + ((corner >> i) & 1u);
    const std::span<const std::uint32_t> coords(v.data(), cfg.dims);
    if (cfg.kind == GridKind::Hash) return hash_unchecked(coords, cfg.primes, cfg.table_size);
    // Dense capacity was checked at table construction.
    return static_cast<std::uint32_t>(dense_linear(coords, resolution) & (cfg.table_size - 1u));
}

}  // namespace detail

/// Encodes one position into `out` (length L*F). Writes directly into the
/// caller's buffer, e.g. an MLP input row.
template <typename Scalar>
void encode_point_into(std::span<const float> position, const BasicFeatureTable<Scalar>& table,
                       std::span<float> out) {
    const auto& cfg = table.config();
    if (position.size() != cfg.dims) throw ConfigError("position dimension does not match encoding");
    if (out.size() != cfg.output_width()) throw ConfigError("output buffer has wrong width");
    detail::check_position(position);

    const std::uint32_t corners = 1u << cfg.dims;
    const std::uint32_t nf = cfg.features;
    for (std::uint32_t l = 0; l < cfg.levels; ++l) {
        const std::uint32_t res = table.resolution(l);
        const auto cell = detail::locate(position, res);
        float* acc = out.data() + static_cast<std::size_t>(l) * nf;
        for (std::uint32_t f = 0; f < nf; ++f) acc[f] = 0.0f;
        for (std::uint32_t c = 0; c < corners; ++c) {
            const float w = detail::corner_weight(cell, cfg.dims, c);
            const auto row = table.entry(l, detail::corner_row(table, cell, res, c));
            for (std::uint32_t f = 0; f < nf; ++f) acc[f] = acc[f] + w * static_cast<float>(row[f]);
        }
    }
}

template <typename Scalar>
[[nodiscard]] EncodedFeature encode_point(std::span<const float> position, const BasicFeatureTable<Scalar>& table) {
    EncodedFeature out(table.config().output_width());
    encode_point_into(position, table, std::span<float>(out));
    return out;
}

/// Encodes `positions` (packed, d floats per point). Returns packed L*F
/// features per point, in input order. A failing point aborts the batch with
/// a BatchError naming the lowest failing index.
template <typename Scalar>
[[nodiscard]] std::vector<float> encode_batch(std::span<const float> positions, const BasicFeatureTable<Scalar>& table,
                                              unsigned threads = 1) {
    const auto& cfg = table.config();
    if (positions.size() % cfg.dims != 0) throw ConfigError("packed positions are not a multiple of d");
    const std::size_t n = positions.size() / cfg.dims;
    const std::size_t width = cfg.output_width();
    std::vector<float> out(n * width);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                encode_point_into(positions.subspan(i * cfg.dims, cfg.dims), table,
                                  std::span<float>(out).subspan(i * width, width));
            } catch (const std::exception& e) {
                throw BatchError(i, e.what());
            }
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

/// Gradient w.r.t. the table, keyed by (level, row). Rows that several
/// corners hash to accumulate additively.
struct TableGradient {
    std::uint32_t features = 0;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<float>> rows;

    [[nodiscard]] float at(std::uint32_t level, std::uint32_t row, std::uint32_t feature) const {
        auto it = rows.find({level, row});
        return it == rows.end() ? 0.0f : it->second[feature];
    }
};

/// Adds d(loss)/d(table) for one position into a dense gradient buffer laid
/// out like the table's storage.
template <typename Scalar>
void accumulate_encode_gradient(std::span<const float> position, const BasicFeatureTable<Scalar>& table,
                                std::span<const float> upstream, std::span<float> dense_grad) {
    const auto& cfg = table.config();
    if (position.size() != cfg.dims) throw ConfigError("position dimension does not match encoding");
    if (upstream.size() != cfg.output_width()) throw ConfigError("upstream gradient has wrong width");
    if (dense_grad.size() != table.data().size()) throw ConfigError("gradient buffer has wrong size");
    detail::check_position(position);

    const std::uint32_t corners = 1u << cfg.dims;
    for (std::uint32_t l = 0; l < cfg.levels; ++l) {
        const std::uint32_t res = table.resolution(l);
        const auto cell = detail::locate(position, res);
        const float* up = upstream.data() + static_cast<std::size_t>(l) * cfg.features;
        for (std::uint32_t c = 0; c < corners; ++c) {
            const float w = detail::corner_weight(cell, cfg.dims, c);
            float* g = dense_grad.data() + table.offset(l, detail::corner_row(table, cell, res, c));
            for (std::uint32_t f = 0; f < cfg.features; ++f) g[f] += w * up[f];
        }
    }
}

template <typename Scalar>
[[nodiscard]] TableGradient encode_backward(std::span<const float> position, const BasicFeatureTable<Scalar>& table,
                                            std::span<const float> upstream) {
    const auto& cfg = table.config();
    if (position.size() != cfg.dims) throw ConfigError("position dimension does not match encoding");
    if (upstream.size() != cfg.output_width()) throw ConfigError("upstream gradient has wrong width");
    detail::check_position(position);

    TableGradient grad;
    grad.features = cfg.features;
    const std::uint32_t corners = 1u << cfg.dims;
    for (std::uint32_t l = 0; l < cfg.levels; ++l) {
        const std::uint32_t res = table.resolution(l);
        const auto cell = detail::locate(position, res);
        for (std::uint32_t c = 0; c < corners; ++c) {
            const float w = detail::corner_weight(cell, cfg.dims, c);
            auto& g = grad.rows[{l, detail::corner_row(table, cell, res, c)}];
            g.resize(cfg.features, 0.0f);
            for (std::uint32_t f = 0; f < cfg.features; ++f) g[f] += w * upstream[l * cfg.features + f];
        }
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Serialization
//
//   "NGFTBL01"            magic
//   u8  kind, u8 d, u8 precision bits, u8 reserved
//   u32 Nmin, f64 b, u32 F, u32 T, u32 L
//   u32 primes[d]
//   payload: L*T*F values, level-major (f32 or binary16 bits)
//   u64 FNV-1a checksum
// ---------------------------------------------------------------------------

namespace detail {

inline void write_encoding_header(io::Writer& w, const EncodingConfig& c) {
    w.u(static_cast<std::uint8_t>(c.kind));
    w.u(static_cast<std::uint8_t>(c.dims));
    w.u(static_cast<std::uint8_t>(c.precision));
    w.u(std::uint8_t{0});
    w.u(c.base_resolution);
    w.f64(c.growth);
    w.u(c.features);
    w.u(c.table_size);
    w.u(c.levels);
    for (std::uint32_t p : c.primes) w.u(p);
}

inline EncodingConfig read_encoding_header(io::Reader& r) {
    EncodingConfig c;
    const auto kind = r.u<std::uint8_t>();
    if (kind > 2) throw io::FormatError("unknown grid kind");
    c.kind = static_cast<GridKind>(kind);
    c.dims = r.u<std::uint8_t>();
    const auto prec = r.u<std::uint8_t>();
    if (prec != 16 && prec != 32) throw io::FormatError("unknown precision");
    c.precision = static_cast<Precision>(prec);
    (void)r.u<std::uint8_t>();
    c.base_resolution = r.u<std::uint32_t>();
    c.growth = r.f64();
    c.features = r.u<std::uint32_t>();
    c.table_size = r.u<std::uint32_t>();
    c.levels = r.u<std::uint32_t>();
    if (c.dims > kMaxDims) throw io::FormatError("bad dimension");
    c.primes.resize(c.dims);
    for (auto& p : c.primes) p = r.u<std::uint32_t>();
    return c;
}

template <typename Scalar>
BasicFeatureTable<Scalar> read_payload(io::Reader& r, EncodingConfig c) {
    BasicFeatureTable<Scalar> t(std::move(c));
    const std::size_t width = std::is_same_v<Scalar, Half> ? 2 : 4;
    if (r.remaining() != t.data().size() * width) throw io::FormatError("payload size mismatch");
    for (auto& v : t.data()) {
        if constexpr (std::is_same_v<Scalar, Half>)
            v = Half::from_bits(r.u<std::uint16_t>());
        else
            v = r.f32();
    }
    r.done();
    return t;
}

}  // namespace detail

template <typename Scalar>
void write_table(std::ostream& os, const BasicFeatureTable<Scalar>& table) {
    io::Writer w;
    w.bytes("NGFTBL01");
    detail::write_encoding_header(w, table.config());
    for (const auto& v : table.data()) {
        if constexpr (std::is_same_v<Scalar, Half>)
            w.u(v.bits);
        else
            w.f32(v);
    }
    w.finish(os);
}

using AnyFeatureTable = std::variant<FeatureTable, HalfFeatureTable>;

[[nodiscard]] inline AnyFeatureTable read_any_table(std::istream& is) {
    io::Reader r(is);
    r.expect("NGFTBL01");
    auto cfg = detail::read_encoding_header(r);
    if (cfg.precision == Precision::F16) return detail::read_payload<Half>(r, std::move(cfg));
    return detail::read_payload<float>(r, std::move(cfg));
}

template <typename Scalar = float>
[[nodiscard]] BasicFeatureTable<Scalar> read_table(std::istream& is) {
    auto any = read_any_table(is);
    if (auto* t = std::get_if<BasicFeatureTable<Scalar>>(&any)) return std::move(*t);
    throw io::FormatError("table precision does not match the requested type");
}

}  // namespace ngpc
