#include "itera/dfsim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace itera {

std::string to_string(Overlap o) {
    return o == Overlap::double_buffered ? "double_buffered" : "sequential";
}

namespace {

uint64_t ceil_div(uint64_t a, uint64_t b) { return (a + b - 1) / b; }

// Shared off-chip channel plus the compute timeline of one (or two) spatial
// tiles, advanced phase by phase.
struct SimCtx {
    double bw = 0.0;
    bool infinite = false;
    Overlap overlap = Overlap::double_buffered;
    bool collect = false;

    double ch = 0.0;    // channel busy-until
    double comp = 0.0;  // compute busy-until
    double stalls = 0.0;
    uint64_t phase = 0;
    SimResult* res = nullptr;

    double dur(uint64_t words, int bits) const {
        if (infinite) return 0.0;
        return static_cast<double>(words) * bits / bw;
    }

    void record(const char* port, double start, double end, uint64_t words, double stall) {
        if (collect) res->trace.push_back({phase, start, end, port, words, stall});
    }

    // Enqueue an off-chip transfer; returns its completion time.
    double transfer(const char* port, uint64_t words, int bits) {
        const double start = ch;
        ch += dur(words, bits);
        record(port, start, ch, words, 0.0);
        return ch;
    }

    // Run a compute burst that needs `ready` data; in sequential mode nothing
    // overlaps, so compute also waits for the channel to go idle.
    void burst(double cycles, double ready) {
        if (overlap == Overlap::sequential) ready = std::max(ready, ch);
        const double start = std::max(comp, ready);
        stalls += start - comp;
        record("COMPUTE", start, start + cycles, 0, start - comp);
        comp = start + cycles;
        if (overlap == Overlap::sequential) ch = std::max(ch, comp);
    }

    void drain(uint64_t words, int bits) {
        if (overlap == Overlap::sequential) ch = std::max(ch, comp);
        transfer("OUT", words, bits);
        if (overlap == Overlap::sequential) comp = std::max(comp, ch);
    }
};

void feasibility_check(const EngineConfig& engine, const LayerShape& shape,
                       const PlatformSpec& platform, const PortBits& bits) {
    const int fp = platform.f_packing_for(bits.rhs);
    const EnginePerf perf = engine_perf(engine, shape, bits, fp, RateMode::corrected);
    if (perf.resources.dsp > platform.dsp_total)
        throw InfeasibleConfig("DSP: config needs " + std::to_string(perf.resources.dsp) +
                               " of " + std::to_string(platform.dsp_total));
    if (perf.resources.bram18 > platform.bram18_total)
        throw InfeasibleConfig("BRAM18K: config needs " + std::to_string(perf.resources.bram18) +
                               " of " + std::to_string(platform.bram18_total));
}

}  // namespace

SimResult simulate(const EngineConfig& engine, const LayerShape& shape,
                   const PlatformSpec& platform, const PortBits& bits, const SimOptions& opts) {
    if (opts.check_feasibility) feasibility_check(engine, shape, platform, bits);

    SimResult res;
    SimCtx ctx;
    ctx.bw = platform.bandwidth_bits_per_cycle;
    ctx.infinite = std::isinf(ctx.bw);
    ctx.overlap = opts.overlap;
    ctx.collect = opts.collect_trace;
    ctx.res = &res;

    double useful_macs = 0.0;
    double peak_macs = 0.0;

    if (engine.mode == EngineMode::dense) {
        const TileConfig& t = engine.stage1;
        const LayerShape p = padded_shape(t, shape);
        const uint64_t m_tiles = p.m / t.m_t;
        const uint64_t n_tiles = p.n / t.n_t;
        const uint64_t kc = ceil_div(p.k, t.k_f);

        for (uint64_t i = 0; i < m_tiles; ++i) {
            ctx.transfer("LHS", t.m_t * p.k, bits.lhs);
            res.lhs_words += t.m_t * p.k;
            for (uint64_t j = 0; j < n_tiles; ++j) {
                const double ready = ctx.transfer("RHS", t.n_t * p.k, bits.rhs);
                res.rhs_words += t.n_t * p.k;
                ctx.burst(static_cast<double>(kc), ready);
                ctx.drain(t.m_t * t.n_t, bits.out);
                res.out_words += t.m_t * t.n_t;
                ++ctx.phase;
            }
        }
        useful_macs = static_cast<double>(shape.m) * shape.k * shape.n;
        peak_macs = static_cast<double>(t.m_t) * t.n_t * t.k_f;
    } else if (engine.mode == EngineMode::single_svd) {
        const TileConfig& t = engine.stage1;
        const LayerShape s1 = padded_shape(t, {shape.m, shape.k, engine.rank});
        const LayerShape s2 = padded_shape(t, {shape.m, engine.rank, shape.n});
        const uint64_t m_tiles = s1.m / t.m_t;
        const uint64_t r_tiles = s1.n / t.n_t;
        const uint64_t n_tiles = s2.n / t.n_t;
        const uint64_t kc1 = ceil_div(s1.k, t.k_f);
        const uint64_t kc2 = ceil_div(s2.k, t.k_f);

        for (uint64_t i = 0; i < m_tiles; ++i) {
            ctx.transfer("LHS", t.m_t * s1.k, bits.lhs);
            res.lhs_words += t.m_t * s1.k;
            // X * W1: output tile stays on chip.
            for (uint64_t j = 0; j < r_tiles; ++j) {
                const double ready = ctx.transfer("RHS", t.n_t * s1.k, bits.rhs);
                res.rhs_words += t.n_t * s1.k;
                ctx.burst(static_cast<double>(kc1), ready);
                ++ctx.phase;
            }
            // (X W1) * W2: LHS read from the intermediate buffer.
            for (uint64_t j = 0; j < n_tiles; ++j) {
                const double ready = ctx.transfer("RHS", t.n_t * s2.k, bits.rhs);
                res.rhs_words += t.n_t * s2.k;
                ctx.burst(static_cast<double>(kc2), ready);
                ctx.drain(t.m_t * t.n_t, bits.out);
                res.out_words += t.m_t * t.n_t;
                ++ctx.phase;
            }
        }
        useful_macs = static_cast<double>(shape.m) * engine.rank * (shape.k + shape.n);
        peak_macs = static_cast<double>(t.m_t) * t.n_t * t.k_f;
    } else {
        // Cascade: per-M-tile pipeline with an intermediate-tile handshake.
        const TileConfig& t1 = engine.stage1;
        const TileConfig& t2 = engine.stage2;
        const LayerShape s1 = padded_shape(t1, {shape.m, shape.k, engine.rank});
        const LayerShape s2 = padded_shape(t2, {shape.m, engine.rank, shape.n});
        const uint64_t m_tiles = s1.m / t1.m_t;
        const uint64_t r_tiles = s1.n / t1.n_t;
        const uint64_t n_tiles = s2.n / t2.n_t;
        const uint64_t kc1 = ceil_div(s1.k, t1.k_f);
        const uint64_t kc2 = ceil_div(s2.k, t2.k_f);
        const double l1_tile = static_cast<double>(r_tiles * kc1);
        const double l2_tile = static_cast<double>(n_tiles * kc2);

        double s1_end = 0.0, s2_end = 0.0;
        for (uint64_t i = 0; i < m_tiles; ++i) {
            ctx.transfer("LHS", t1.m_t * s1.k, bits.lhs);
            res.lhs_words += t1.m_t * s1.k;
            double ready1 = ctx.transfer("RHS", r_tiles * t1.n_t * s1.k, bits.rhs);
            res.rhs_words += r_tiles * t1.n_t * s1.k;
            if (ctx.overlap == Overlap::sequential) ready1 = std::max(ready1, ctx.ch);
            const double start1 = std::max(s1_end, ready1);
            ctx.record("COMPUTE", start1, start1 + l1_tile, 0, start1 - s1_end);
            s1_end = start1 + l1_tile;

            double ready2 = ctx.transfer("RHS", n_tiles * t2.n_t * s2.k, bits.rhs);
            res.rhs_words += n_tiles * t2.n_t * s2.k;
            if (ctx.overlap == Overlap::sequential) ready2 = std::max(ready2, s1_end);
            const double start2 = std::max({s2_end, s1_end, ready2});
            ctx.stalls += start2 - s2_end;
            ctx.record("COMPUTE", start2, start2 + l2_tile, 0, start2 - s2_end);
            s2_end = start2 + l2_tile;

            if (ctx.overlap == Overlap::sequential) ctx.ch = std::max(ctx.ch, s2_end);
            ctx.transfer("OUT", t2.m_t * s2.n, bits.out);
            res.out_words += t2.m_t * s2.n;
            ++ctx.phase;
        }
        ctx.comp = s2_end;
        useful_macs = static_cast<double>(shape.m) * engine.rank * (shape.k + shape.n);
        peak_macs = static_cast<double>(t1.m_t) * t1.n_t * t1.k_f +
                    static_cast<double>(t2.m_t) * t2.n_t * t2.k_f;
    }

    res.cycles = static_cast<uint64_t>(std::ceil(std::max(ctx.comp, ctx.ch)));
    res.channel_stall_cycles = ctx.stalls;
    res.occupancy =
        res.cycles > 0 ? useful_macs / (static_cast<double>(res.cycles) * peak_macs) : 0.0;
    return res;
}

void save_trace_csv(const SimResult& result, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_trace_csv: cannot open " + path);
    os << "phase,start_cycle,end_cycle,port,words,stalls\n";
    os.precision(17);
    for (const auto& t : result.trace)
        os << t.phase << ',' << t.start_cycle << ',' << t.end_cycle << ',' << t.port << ','
           << t.words << ',' << t.stalls << '\n';
}

}  // namespace itera
