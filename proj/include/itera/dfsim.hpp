#ifndef ITERA_DFSIM_HPP
#define ITERA_DFSIM_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "itera/hwmodel.hpp"

namespace itera {

enum class Overlap { double_buffered, sequential };

std::string to_string(Overlap o);

// Configuration rejected before simulation; names the violated constraint.
class InfeasibleConfig : public std::runtime_error {
public:
    explicit InfeasibleConfig(const std::string& what) : std::runtime_error(what) {}
};

struct TracePhase {
    uint64_t phase = 0;
    double start_cycle = 0.0;
    double end_cycle = 0.0;
    std::string port;  // LHS / RHS / OUT / COMPUTE
    uint64_t words = 0;
    double stalls = 0.0;
};

struct SimResult {
    uint64_t cycles = 0;
    uint64_t lhs_words = 0;
    uint64_t rhs_words = 0;
    uint64_t out_words = 0;
    double channel_stall_cycles = 0.0;
    double occupancy = 0.0;  // useful MACs / (cycles * peak MACs per cycle)
    std::vector<TracePhase> trace;
};

struct SimOptions {
    Overlap overlap = Overlap::double_buffered;
    bool collect_trace = false;
    bool check_feasibility = true;
};

// Cycle-approximate walk of the tiled loop nest with one shared off-chip
// channel limited to platform.bandwidth_bits_per_cycle.
SimResult simulate(const EngineConfig& engine, const LayerShape& shape,
                   const PlatformSpec& platform, const PortBits& bits, const SimOptions& opts);

void save_trace_csv(const SimResult& result, const std::string& path);

}  // namespace itera

#endif
