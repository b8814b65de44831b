#ifndef ITERA_HWMODEL_HPP
#define ITERA_HWMODEL_HPP

#include <cstdint>
#include <map>
#include <string>

#include "itera/matrix.hpp"

namespace itera {

enum class RateMode { paper_literal, corrected };
enum class EngineMode { dense, single_svd, cascade_svd };

std::string to_string(EngineMode mode);
std::string to_string(RateMode mode);

// Spatial tile: M_t x N_t PEs, each a pipelined dot product with parallel
// factor K_f.
struct TileConfig {
    std::size_t m_t = 1;
    std::size_t n_t = 1;
    std::size_t k_f = 1;
};

struct EngineConfig {
    EngineMode mode = EngineMode::dense;
    TileConfig stage1;
    TileConfig stage2;        // ignored for dense; must equal stage1 for single
    std::size_t rank = 0;     // ignored for dense
};

struct PortRates {
    double lhs = 0.0;  // words/cycle
    double rhs = 0.0;
    double out = 0.0;
};

struct PortWorkloads {
    uint64_t lhs = 0;  // words
    uint64_t rhs = 0;
    uint64_t out = 0;
};

struct PortBits {
    int lhs = 8;  // activations
    int rhs = 8;  // weights
    int out = 8;  // requantized output, feeds the next layer
};

struct PlatformSpec {
    std::string name = "generic";
    uint64_t dsp_total = 0;
    uint64_t bram18_total = 0;
    double bandwidth_bits_per_cycle = 0.0;  // may be +inf
    double clock_mhz = 0.0;
    std::map<int, int> packing;  // weight_wl -> f_packing

    int f_packing_for(int weight_wl) const;
};

PlatformSpec zcu111_preset();
PlatformSpec load_platform_json(const std::string& path);
void save_platform_json(const PlatformSpec& p, const std::string& path);

struct ResourceEstimate {
    uint64_t dsp = 0;
    uint64_t bram18 = 0;
    double bandwidth_bits_per_cycle = 0.0;
};

struct EnginePerf {
    uint64_t cycles = 0;
    uint64_t stage1_cycles = 0;
    uint64_t stage2_cycles = 0;
    ResourceEstimate resources;
};

// M, N padded up to tile multiples; K untouched (K_f handled by ceil).
LayerShape padded_shape(const TileConfig& cfg, const LayerShape& shape);

PortRates tile_rates(const TileConfig& cfg, const LayerShape& shape, RateMode mode);
PortWorkloads tile_workloads(const TileConfig& cfg, const LayerShape& shape);

// max over the three port times, exact integer ceiling. lhs_on_chip drops
// the LHS port from the max (data already buffered on chip).
uint64_t tile_latency(const TileConfig& cfg, const LayerShape& shape, RateMode mode,
                      bool lhs_on_chip = false);

uint64_t dsp_usage(const TileConfig& cfg, int f_packing);

// BRAM18K units for one buffer array, minimized over the fixed aspect ratios.
uint64_t bram18(uint64_t depth, uint64_t width_bits);

uint64_t bram_usage(const TileConfig& cfg, const LayerShape& shape, int bits_lhs, int bits_rhs,
                    int f_packing);

// Average off-chip bits/cycle for full throughput.
double bandwidth(const TileConfig& cfg, const LayerShape& shape, const PortBits& bits,
                 RateMode mode);

EnginePerf dense_engine(const TileConfig& cfg, const LayerShape& shape, const PortBits& bits,
                        int f_packing, RateMode mode);

// One tile reused temporally: X*W1 then (X*W1)*W2 with a shared config; the
// M_t x rank intermediate stays on chip, so stage-2 LHS is free of the channel.
EnginePerf single_svd_engine(const TileConfig& cfg, const LayerShape& shape, std::size_t rank,
                             const PortBits& bits, int f_packing, RateMode mode);

// Two tiles pipelined: steady state max(L1, L2) plus one intermediate-tile
// fill of L1 / ceil(M/M_t).
EnginePerf cascade_svd_engine(const TileConfig& stage1, const TileConfig& stage2,
                              const LayerShape& shape, std::size_t rank, const PortBits& bits,
                              int f_packing, RateMode mode);

EnginePerf engine_perf(const EngineConfig& cfg, const LayerShape& shape, const PortBits& bits,
                       int f_packing, RateMode mode);

// Useful MACs over padded MACs for the engine's loop nest.
double occupancy(const EngineConfig& cfg, const LayerShape& shape);

}  // namespace itera

#endif
