#include "itera/hwmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace itera {

std::string to_string(EngineMode mode) {
    switch (mode) {
        case EngineMode::dense: return "dense";
        case EngineMode::single_svd: return "single_svd";
        case EngineMode::cascade_svd: return "cascade_svd";
    }
    return "?";
}

std::string to_string(RateMode mode) {
    return mode == RateMode::paper_literal ? "paper_literal" : "corrected";
}

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

uint64_t ceil_div128(unsigned __int128 a, unsigned __int128 b) {
    return static_cast<uint64_t>((a + b - 1) / b);
}

void check_tile(const TileConfig& cfg, const LayerShape& shape) {
    if (cfg.m_t < 1 || cfg.n_t < 1 || cfg.k_f < 1)
        throw std::invalid_argument("tile config factors must be >= 1");
    if (cfg.k_f > shape.k) throw std::invalid_argument("K_f exceeds K");
}

}  // namespace

int PlatformSpec::f_packing_for(int weight_wl) const {
    auto it = packing.find(weight_wl);
    return it == packing.end() ? 1 : it->second;
}

PlatformSpec zcu111_preset() {
    PlatformSpec p;
    p.name = "zcu111";
    p.dsp_total = 4272;
    p.bram18_total = 1080;
    p.bandwidth_bits_per_cycle = 4096.0;  // free parameter, generous default
    p.clock_mhz = 200.0;
    p.packing = {{8, 1}, {6, 2}, {5, 2}, {4, 2}};
    return p;
}

PlatformSpec load_platform_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_platform_json: cannot open " + path);
    nlohmann::json j;
    is >> j;
    PlatformSpec p;
    p.name = j.value("name", "unnamed");
    p.dsp_total = j.at("dsp_total").get<uint64_t>();
    p.bram18_total = j.at("bram18_total").get<uint64_t>();
    if (j.at("bandwidth_bits_per_cycle").is_string())
        p.bandwidth_bits_per_cycle = std::numeric_limits<double>::infinity();
    else {
        p.bandwidth_bits_per_cycle = j.at("bandwidth_bits_per_cycle").get<double>();
        if (p.bandwidth_bits_per_cycle <= 0.0)
            p.bandwidth_bits_per_cycle = std::numeric_limits<double>::infinity();
    }
    p.clock_mhz = j.at("clock_mhz").get<double>();
    if (j.contains("packing"))
        for (auto& [k, v] : j.at("packing").items()) p.packing[std::stoi(k)] = v.get<int>();
    return p;
}

void save_platform_json(const PlatformSpec& p, const std::string& path) {
    nlohmann::json j;
    j["name"] = p.name;
    j["dsp_total"] = p.dsp_total;
    j["bram18_total"] = p.bram18_total;
    if (std::isinf(p.bandwidth_bits_per_cycle))
        j["bandwidth_bits_per_cycle"] = "inf";
    else
        j["bandwidth_bits_per_cycle"] = p.bandwidth_bits_per_cycle;
    j["clock_mhz"] = p.clock_mhz;
    nlohmann::json packing = nlohmann::json::object();
    for (auto& [k, v] : p.packing) packing[std::to_string(k)] = v;
    j["packing"] = packing;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_platform_json: cannot open " + path);
    os << j.dump(2) << '\n';
}

LayerShape padded_shape(const TileConfig& cfg, const LayerShape& shape) {
    LayerShape p = shape;
    p.m = ceil_div(shape.m, cfg.m_t) * cfg.m_t;
    p.n = ceil_div(shape.n, cfg.n_t) * cfg.n_t;
    return p;
}

PortRates tile_rates(const TileConfig& cfg, const LayerShape& shape, RateMode mode) {
    check_tile(cfg, shape);
    const double kc = static_cast<double>(ceil_div(shape.k, cfg.k_f));
    PortRates r;
    r.lhs = static_cast<double>(cfg.m_t) * static_cast<double>(shape.k) /
            (kc * static_cast<double>(shape.n));
    if (mode == RateMode::corrected) r.lhs *= static_cast<double>(cfg.n_t);
    r.rhs = static_cast<double>(cfg.n_t * cfg.k_f);
    r.out = static_cast<double>(cfg.m_t * cfg.n_t) / kc;
    return r;
}

PortWorkloads tile_workloads(const TileConfig& cfg, const LayerShape& shape) {
    check_tile(cfg, shape);
    const LayerShape p = padded_shape(cfg, shape);
    PortWorkloads w;
    w.lhs = static_cast<uint64_t>(p.m) * p.k;
    w.rhs = static_cast<uint64_t>(p.m / cfg.m_t) * p.k * p.n;
    w.out = static_cast<uint64_t>(p.m) * p.n;
    return w;
}

uint64_t tile_latency(const TileConfig& cfg, const LayerShape& shape, RateMode mode,
                      bool lhs_on_chip) {
    check_tile(cfg, shape);
    const LayerShape p = padded_shape(cfg, shape);
    const uint64_t kc = ceil_div(p.k, cfg.k_f);
    const PortWorkloads w = tile_workloads(cfg, shape);

    // Exact integer port times: t = ceil(w / rate) with rational rates.
    unsigned __int128 lhs_den = static_cast<unsigned __int128>(cfg.m_t) * p.k;
    if (mode == RateMode::corrected) lhs_den *= cfg.n_t;
    const uint64_t t_lhs =
        ceil_div128(static_cast<unsigned __int128>(w.lhs) * kc * p.n, lhs_den);
    const uint64_t t_rhs = ceil_div128(w.rhs, static_cast<unsigned __int128>(cfg.n_t) * cfg.k_f);
    const uint64_t t_out =
        ceil_div128(static_cast<unsigned __int128>(w.out) * kc,
                    static_cast<unsigned __int128>(cfg.m_t) * cfg.n_t);

    uint64_t lat = std::max(t_rhs, t_out);
    if (!lhs_on_chip) lat = std::max(lat, t_lhs);
    return lat;
}

uint64_t dsp_usage(const TileConfig& cfg, int f_packing) {
    if (f_packing < 1) throw std::invalid_argument("dsp_usage: f_packing must be >= 1");
    return static_cast<uint64_t>(cfg.m_t) * cfg.n_t *
           ceil_div(cfg.k_f, static_cast<uint64_t>(f_packing));
}

uint64_t bram18(uint64_t depth, uint64_t width_bits) {
    if (depth < 1 || width_bits < 1) throw std::invalid_argument("bram18: depth/width must be >= 1");
    static constexpr uint64_t aspects[6][2] = {
        {16384, 1}, {8192, 2}, {4096, 4}, {2048, 9}, {1024, 18}, {512, 36}};
    uint64_t best = UINT64_MAX;
    for (const auto& a : aspects)
        best = std::min(best, ceil_div(width_bits, a[1]) * ceil_div(depth, a[0]));
    return best;
}

uint64_t bram_usage(const TileConfig& cfg, const LayerShape& shape, int bits_lhs, int bits_rhs,
                    int f_packing) {
    const uint64_t depth = ceil_div(shape.k, cfg.k_f);
    const uint64_t pe_banks = ceil_div(cfg.k_f, static_cast<uint64_t>(f_packing));
    const uint64_t pe_lhs = pe_banks * bram18(depth, static_cast<uint64_t>(bits_lhs));
    const uint64_t pe_rhs = pe_banks * bram18(depth, static_cast<uint64_t>(bits_rhs));
    return cfg.m_t * pe_lhs + cfg.n_t * pe_rhs;
}

double bandwidth(const TileConfig& cfg, const LayerShape& shape, const PortBits& bits,
                 RateMode mode) {
    const PortWorkloads w = tile_workloads(cfg, shape);
    const uint64_t lat = tile_latency(cfg, shape, mode);
    if (lat == 0) return 0.0;
    const double total_bits = static_cast<double>(w.lhs) * bits.lhs +
                              static_cast<double>(w.rhs) * bits.rhs +
                              static_cast<double>(w.out) * bits.out;
    return total_bits / static_cast<double>(lat);
}

EnginePerf dense_engine(const TileConfig& cfg, const LayerShape& shape, const PortBits& bits,
                        int f_packing, RateMode mode) {
    EnginePerf perf;
    perf.cycles = tile_latency(cfg, shape, mode);
    perf.stage1_cycles = perf.cycles;
    perf.resources.dsp = dsp_usage(cfg, f_packing);
    perf.resources.bram18 = bram_usage(cfg, shape, bits.lhs, bits.rhs, f_packing);
    perf.resources.bandwidth_bits_per_cycle = bandwidth(cfg, shape, bits, mode);
    return perf;
}

EnginePerf single_svd_engine(const TileConfig& cfg, const LayerShape& shape, std::size_t rank,
                             const PortBits& bits, int f_packing, RateMode mode) {
    if (rank < 1) throw std::invalid_argument("single_svd_engine: rank must be >= 1");
    const LayerShape s1{shape.m, shape.k, rank};
    const LayerShape s2{shape.m, rank, shape.n};
    check_tile(cfg, s1);
    check_tile(cfg, s2);

    EnginePerf perf;
    perf.stage1_cycles = tile_latency(cfg, s1, mode);
    perf.stage2_cycles = tile_latency(cfg, s2, mode, /*lhs_on_chip=*/true);
    perf.cycles = perf.stage1_cycles + perf.stage2_cycles;

    perf.resources.dsp = dsp_usage(cfg, f_packing);
    const LayerShape depth_shape{shape.m, std::max(shape.k, rank), shape.n};
    perf.resources.bram18 = bram_usage(cfg, depth_shape, bits.lhs, bits.rhs, f_packing);
    // M_t x rank intermediate, banked K_f-ways for stage-2 parallel access.
    perf.resources.bram18 += cfg.m_t * cfg.k_f *
                             bram18(ceil_div(rank, cfg.k_f), static_cast<uint64_t>(bits.lhs));

    const PortWorkloads w1 = tile_workloads(cfg, s1);
    const PortWorkloads w2 = tile_workloads(cfg, s2);
    const double total_bits = static_cast<double>(w1.lhs) * bits.lhs +
                              static_cast<double>(w1.rhs + w2.rhs) * bits.rhs +
                              static_cast<double>(w2.out) * bits.out;
    perf.resources.bandwidth_bits_per_cycle = total_bits / static_cast<double>(perf.cycles);
    return perf;
}

EnginePerf cascade_svd_engine(const TileConfig& stage1, const TileConfig& stage2,
                              const LayerShape& shape, std::size_t rank, const PortBits& bits,
                              int f_packing, RateMode mode) {
    if (rank < 1) throw std::invalid_argument("cascade_svd_engine: rank must be >= 1");
    if (stage1.m_t != stage2.m_t)
        throw std::invalid_argument("cascade_svd_engine: stages must share M_t");
    const LayerShape s1{shape.m, shape.k, rank};
    const LayerShape s2{shape.m, rank, shape.n};
    check_tile(stage1, s1);
    check_tile(stage2, s2);

    EnginePerf perf;
    perf.stage1_cycles = tile_latency(stage1, s1, mode);
    perf.stage2_cycles = tile_latency(stage2, s2, mode, /*lhs_on_chip=*/true);
    const uint64_t m_tiles = ceil_div(shape.m, stage1.m_t);
    const uint64_t fill = ceil_div(perf.stage1_cycles, m_tiles);
    perf.cycles = std::max(perf.stage1_cycles, perf.stage2_cycles) + fill;

    perf.resources.dsp = dsp_usage(stage1, f_packing) + dsp_usage(stage2, f_packing);
    perf.resources.bram18 = bram_usage(stage1, s1, bits.lhs, bits.rhs, f_packing) +
                            bram_usage(stage2, s2, bits.lhs, bits.rhs, f_packing);
    perf.resources.bram18 += stage1.m_t * stage2.k_f *
                             bram18(ceil_div(rank, stage2.k_f), static_cast<uint64_t>(bits.lhs));

    const PortWorkloads w1 = tile_workloads(stage1, s1);
    const PortWorkloads w2 = tile_workloads(stage2, s2);
    const double total_bits = static_cast<double>(w1.lhs) * bits.lhs +
                              static_cast<double>(w1.rhs + w2.rhs) * bits.rhs +
                              static_cast<double>(w2.out) * bits.out;
    perf.resources.bandwidth_bits_per_cycle = total_bits / static_cast<double>(perf.cycles);
    return perf;
}

EnginePerf engine_perf(const EngineConfig& cfg, const LayerShape& shape, const PortBits& bits,
                       int f_packing, RateMode mode) {
    switch (cfg.mode) {
        case EngineMode::dense:
            return dense_engine(cfg.stage1, shape, bits, f_packing, mode);
        case EngineMode::single_svd:
            if (cfg.stage1.m_t != cfg.stage2.m_t || cfg.stage1.n_t != cfg.stage2.n_t ||
                cfg.stage1.k_f != cfg.stage2.k_f)
                throw std::invalid_argument("single_svd engine requires stage1 == stage2");
            return single_svd_engine(cfg.stage1, shape, cfg.rank, bits, f_packing, mode);
        case EngineMode::cascade_svd:
            return cascade_svd_engine(cfg.stage1, cfg.stage2, shape, cfg.rank, bits, f_packing,
                                      mode);
    }
    throw std::logic_error("engine_perf: unknown mode");
}

namespace {
// Padded loop-nest MAC count for one tile workload.
double padded_macs(const TileConfig& cfg, const LayerShape& shape) {
    const LayerShape p = padded_shape(cfg, shape);
    return static_cast<double>(p.m) * p.n *
           static_cast<double>(ceil_div(p.k, cfg.k_f) * cfg.k_f);
}
}  // namespace

double occupancy(const EngineConfig& cfg, const LayerShape& shape) {
    if (cfg.mode == EngineMode::dense) {
        const double useful = static_cast<double>(shape.m) * shape.k * shape.n;
        return useful / padded_macs(cfg.stage1, shape);
    }
    const LayerShape s1{shape.m, shape.k, cfg.rank};
    const LayerShape s2{shape.m, cfg.rank, shape.n};
    const TileConfig& t2 = cfg.mode == EngineMode::single_svd ? cfg.stage1 : cfg.stage2;
    const double useful = static_cast<double>(shape.m) * cfg.rank * (shape.k + shape.n);
    return useful / (padded_macs(cfg.stage1, s1) + padded_macs(t2, s2));
}

}  // namespace itera
