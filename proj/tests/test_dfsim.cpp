#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <limits>

#include "itera/dfsim.hpp"

using namespace itera;

namespace {

PlatformSpec unconstrained_platform(double bw = std::numeric_limits<double>::infinity()) {
    PlatformSpec p;
    p.name = "test";
    p.dsp_total = 1ull << 40;
    p.bram18_total = 1ull << 40;
    p.bandwidth_bits_per_cycle = bw;
    p.clock_mhz = 200.0;
    return p;
}

EngineConfig dense_cfg(std::size_t mt, std::size_t nt, std::size_t kf) {
    EngineConfig e;
    e.mode = EngineMode::dense;
    e.stage1 = {mt, nt, kf};
    e.stage2 = e.stage1;
    return e;
}

}  // namespace

TEST_CASE("unit-rate loop nest, sequential") {
    const auto res = simulate(dense_cfg(1, 1, 1), {4, 4, 4}, unconstrained_platform(),
                              {8, 8, 8}, {Overlap::sequential, false, false});
    CHECK(res.cycles == 64);  // loads are instantaneous on an infinite channel
    CHECK(res.lhs_words == 16);
    CHECK(res.rhs_words == 4ull * 4 * 4);  // ceil(M/M_t) * K * N
    CHECK(res.out_words == 16);
}

TEST_CASE("double-buffered infinite bandwidth equals corrected analytical latency") {
    const auto res = simulate(dense_cfg(8, 8, 8), {512, 512, 512}, unconstrained_platform(),
                              {8, 8, 8}, {Overlap::double_buffered, false, false});
    CHECK(res.cycles == 262144);
    CHECK(res.occupancy == doctest::Approx(1.0));
    CHECK(res.channel_stall_cycles == 0.0);
}

TEST_CASE("word conservation matches tile_workloads on divisible dims") {
    const EngineConfig e = dense_cfg(4, 8, 4);
    const LayerShape s{64, 128, 256};
    const auto w = tile_workloads(e.stage1, s);
    const auto res = simulate(e, s, unconstrained_platform(), {8, 8, 8},
                              {Overlap::double_buffered, false, false});
    CHECK(res.lhs_words == w.lhs);
    CHECK(res.rhs_words == w.rhs);
    CHECK(res.out_words == w.out);
}

TEST_CASE("halving the channel doubles cycles in the memory-bound regime") {
    const EngineConfig e = dense_cfg(8, 8, 8);
    const LayerShape s{512, 512, 512};
    const PortBits bits{8, 8, 8};
    const double required = bandwidth(e.stage1, s, bits, RateMode::corrected);

    const auto compute_bound = simulate(e, s, unconstrained_platform(), bits,
                                        {Overlap::double_buffered, false, false});
    const auto mem_bound = simulate(e, s, unconstrained_platform(required / 2.0), bits,
                                    {Overlap::double_buffered, false, false});
    const double ratio = static_cast<double>(mem_bound.cycles) /
                         static_cast<double>(compute_bound.cycles);
    CHECK(ratio == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("bandwidth saturation: cycles scale as required/given within 2%") {
    const EngineConfig e = dense_cfg(8, 8, 8);
    const LayerShape s{256, 256, 256};
    const PortBits bits{8, 6, 8};
    const double required = bandwidth(e.stage1, s, bits, RateMode::corrected);
    const auto base = simulate(e, s, unconstrained_platform(), bits,
                               {Overlap::double_buffered, false, false});
    for (double frac : {0.25, 0.5, 0.8}) {
        const auto res = simulate(e, s, unconstrained_platform(required * frac), bits,
                                  {Overlap::double_buffered, false, false});
        const double expected = static_cast<double>(base.cycles) / frac;
        CHECK(static_cast<double>(res.cycles) == doctest::Approx(expected).epsilon(0.02));
    }
}

TEST_CASE("sequential is never faster than double-buffered") {
    const EngineConfig e = dense_cfg(4, 4, 4);
    const LayerShape s{64, 64, 64};
    const PlatformSpec p = unconstrained_platform(128.0);
    const auto db = simulate(e, s, p, {8, 8, 8}, {Overlap::double_buffered, false, false});
    const auto seq = simulate(e, s, p, {8, 8, 8}, {Overlap::sequential, false, false});
    CHECK(seq.cycles >= db.cycles);
}

TEST_CASE("single SVD engine matches analytical sum of stages") {
    EngineConfig e;
    e.mode = EngineMode::single_svd;
    e.stage1 = e.stage2 = {8, 8, 8};
    e.rank = 128;
    const LayerShape s{512, 512, 512};
    const auto res = simulate(e, s, unconstrained_platform(), {8, 4, 8},
                              {Overlap::double_buffered, false, false});
    const EnginePerf perf = single_svd_engine(e.stage1, s, 128, {8, 4, 8}, 2, RateMode::corrected);
    CHECK(res.cycles == perf.cycles);
}

TEST_CASE("cascade engine within one tile-phase of the analytical model") {
    EngineConfig e;
    e.mode = EngineMode::cascade_svd;
    e.stage1 = {8, 8, 8};
    e.stage2 = {8, 8, 8};
    e.rank = 128;
    const LayerShape s{512, 512, 512};
    const auto res = simulate(e, s, unconstrained_platform(), {8, 4, 8},
                              {Overlap::double_buffered, false, false});
    const EnginePerf perf =
        cascade_svd_engine(e.stage1, e.stage2, s, 128, {8, 4, 8}, 2, RateMode::corrected);
    const uint64_t phase = tile_latency(e.stage1, {512, 512, 128}, RateMode::corrected) / 64;
    CHECK(std::llabs(static_cast<long long>(res.cycles) - static_cast<long long>(perf.cycles)) <=
          static_cast<long long>(phase));
    // within 1% on this balanced config
    CHECK(static_cast<double>(res.cycles) ==
          doctest::Approx(static_cast<double>(perf.cycles)).epsilon(0.01));
}

TEST_CASE("infeasible config rejected with the violated constraint") {
    PlatformSpec tiny = unconstrained_platform();
    tiny.dsp_total = 4;
    CHECK_THROWS_AS(simulate(dense_cfg(8, 8, 8), {64, 64, 64}, tiny, {8, 8, 8},
                             {Overlap::double_buffered, false, true}),
                    InfeasibleConfig);
    try {
        simulate(dense_cfg(8, 8, 8), {64, 64, 64}, tiny, {8, 8, 8},
                 {Overlap::double_buffered, false, true});
    } catch (const InfeasibleConfig& e) {
        CHECK(std::string(e.what()).find("DSP") != std::string::npos);
    }
}

TEST_CASE("trace export") {
    const auto res = simulate(dense_cfg(2, 2, 2), {4, 4, 4}, unconstrained_platform(64.0),
                              {8, 8, 8}, {Overlap::double_buffered, true, false});
    CHECK_FALSE(res.trace.empty());
    save_trace_csv(res, "dfsim_trace_test.csv");
    std::remove("dfsim_trace_test.csv");
}

TEST_CASE("occupancy below 1 with padding") {
    const auto res = simulate(dense_cfg(8, 8, 8), {60, 64, 60}, unconstrained_platform(),
                              {8, 8, 8}, {Overlap::double_buffered, false, false});
    CHECK(res.occupancy < 1.0);
    CHECK(res.occupancy > 0.0);
}
