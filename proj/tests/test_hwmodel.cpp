#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>

#include "itera/hwmodel.hpp"

using namespace itera;

TEST_CASE("PE-level rates, paper-literal") {
    const TileConfig pe{1, 1, 8};
    const LayerShape s{512, 512, 512};
    const PortRates r = tile_rates(pe, s, RateMode::paper_literal);
    CHECK(r.lhs == doctest::Approx(1.0 / 64.0));
    CHECK(r.rhs == doctest::Approx(8.0));
    CHECK(r.out == doctest::Approx(1.0 / 64.0));
}

TEST_CASE("single-beat dot product rate") {
    const TileConfig pe{1, 1, 16};
    const LayerShape s{4, 16, 4};
    CHECK(tile_rates(pe, s, RateMode::paper_literal).out == doctest::Approx(1.0));
}

TEST_CASE("corrected LHS rate reaches 1.0 on the derived example") {
    const TileConfig t{8, 8, 8};
    const LayerShape s{512, 512, 512};
    CHECK(tile_rates(t, s, RateMode::corrected).lhs == doctest::Approx(1.0));
}

TEST_CASE("tile workloads direct arithmetic") {
    const TileConfig t{8, 8, 8};
    const LayerShape s{512, 512, 512};
    const PortWorkloads w = tile_workloads(t, s);
    CHECK(w.lhs == 262144);
    CHECK(w.rhs == 16777216);
    CHECK(w.out == 262144);
}

TEST_CASE("single LHS tile when M == M_t") {
    const TileConfig t{16, 4, 4};
    const LayerShape s{16, 32, 64};
    CHECK(tile_workloads(t, s).rhs == 32ull * 64);
}

TEST_CASE("padding on non-divisible M") {
    const TileConfig t{8, 1, 1};
    const LayerShape s{100, 16, 8};
    const PortWorkloads w = tile_workloads(t, s);
    CHECK(w.lhs == 104ull * 16);   // padded M' = 104
    CHECK(w.rhs == 13ull * 16 * 8);  // ceil(100/8) = 13 tiles
}

TEST_CASE("tile latency examples") {
    const LayerShape s{512, 512, 512};
    CHECK(tile_latency({8, 8, 8}, s, RateMode::corrected) == 262144);
    CHECK(tile_latency({8, 8, 8}, s, RateMode::paper_literal) == 2097152);
    CHECK(tile_latency({1, 1, 1}, {4, 4, 4}, RateMode::corrected) == 64);
}

TEST_CASE("balanced-config identity under corrected rates") {
    for (std::size_t mt : {2, 4, 8})
        for (std::size_t nt : {2, 4, 8})
            for (std::size_t kf : {4, 8}) {
                const LayerShape s{64, 128, 256};
                const uint64_t expect = (64 / mt) * (256 / nt) * (128 / kf);
                CHECK(tile_latency({mt, nt, kf}, s, RateMode::corrected) == expect);
            }
}

TEST_CASE("latency monotone non-increasing in each tiling factor") {
    const LayerShape s{128, 128, 128};
    uint64_t prev = UINT64_MAX;
    for (std::size_t mt : {1, 2, 4, 8, 16}) {
        const uint64_t lat = tile_latency({mt, 4, 4}, s, RateMode::corrected);
        CHECK(lat <= prev);
        prev = lat;
    }
    prev = UINT64_MAX;
    for (std::size_t kf : {1, 2, 4, 8, 16}) {
        const uint64_t lat = tile_latency({4, 4, kf}, s, RateMode::corrected);
        CHECK(lat <= prev);
        prev = lat;
    }
}

TEST_CASE("dsp usage") {
    CHECK(dsp_usage({8, 8, 8}, 2) == 256);
    CHECK(dsp_usage({3, 5, 7}, 1) == 3 * 5 * 7);
    CHECK(dsp_usage({1, 1, 7}, 2) == 4);  // ceil(7/2)
}

TEST_CASE("bram18 aspect-ratio minimum") {
    CHECK(bram18(64, 8) == 1);
    CHECK(bram18(4096, 8) == 2);
    CHECK(bram18(1, 1) == 1);
    CHECK(bram18(16384, 1) == 1);
    CHECK(bram18(16384, 36) == 32);  // 16384/512 = 32 at the widest aspect
}

TEST_CASE("bram usage formula") {
    const TileConfig t{8, 8, 8};
    const LayerShape s{512, 512, 512};
    CHECK(bram_usage(t, s, 8, 8, 2) == 64);
    CHECK(bram_usage({1, 1, 1}, {4, 4, 4}, 8, 8, 1) == 2);
    // K == K_f: depth-1 buffers still cost one BRAM per bank
    CHECK(bram_usage({1, 1, 4}, {4, 4, 4}, 8, 8, 1) >= 2);
}

TEST_CASE("bandwidth derived example: 272 bits/cycle") {
    const TileConfig t{8, 8, 8};
    const LayerShape s{512, 512, 512};
    const PortBits bits{8, 4, 8};
    CHECK(bandwidth(t, s, bits, RateMode::corrected) == doctest::Approx(272.0));
}

TEST_CASE("bandwidth linear in per-port bits") {
    const TileConfig t{4, 4, 4};
    const LayerShape s{64, 64, 64};
    const PortBits b1{8, 4, 8};
    const PortBits b2{8, 8, 8};
    const PortWorkloads w = tile_workloads(t, s);
    const double lat = static_cast<double>(tile_latency(t, s, RateMode::corrected));
    const double diff = bandwidth(t, s, b2, RateMode::corrected) -
                        bandwidth(t, s, b1, RateMode::corrected);
    CHECK(diff == doctest::Approx(static_cast<double>(w.rhs) * 4.0 / lat));
}

TEST_CASE("single engine degenerate full rank doubles dense latency") {
    const TileConfig t{8, 8, 8};
    const LayerShape s{512, 512, 512};
    const PortBits bits{8, 4, 8};
    const EnginePerf dense = dense_engine(t, s, bits, 2, RateMode::corrected);
    const EnginePerf single = single_svd_engine(t, s, 512, bits, 2, RateMode::corrected);
    CHECK(single.cycles == 2 * dense.cycles);
}

TEST_CASE("single engine stage split on the 512/128 example") {
    const TileConfig t{8, 8, 8};
    const LayerShape s{512, 512, 512};
    const PortBits bits{8, 4, 8};
    const EnginePerf p = single_svd_engine(t, s, 128, bits, 2, RateMode::corrected);
    CHECK(p.stage1_cycles == 65536);  // (512/8)(128/8)(512/8)
    // stage 2 (512,128,512): balanced trip count with LHS on-chip
    CHECK(p.stage2_cycles == (512 / 8) * (512 / 8) * (128 / 8));
    CHECK(p.cycles == p.stage1_cycles + p.stage2_cycles);
}

TEST_CASE("single engine rank-1 is RHS-dominated in stage 1") {
    // K_f = 1 so stage 2 (K = rank = 1) stays valid
    const TileConfig t{8, 1, 1};
    const LayerShape s{512, 512, 512};
    const PortBits bits{8, 4, 8};
    const EnginePerf p = single_svd_engine(t, s, 1, bits, 1, RateMode::corrected);
    const PortWorkloads w1 = tile_workloads(t, {512, 512, 1});
    CHECK(p.stage1_cycles >= w1.rhs / (t.n_t * t.k_f));
}

TEST_CASE("cascade engine balanced latency formula") {
    const TileConfig t1{8, 8, 8};
    const TileConfig t2{8, 8, 8};
    const LayerShape s{512, 512, 512};
    const PortBits bits{8, 4, 8};
    const EnginePerf p = cascade_svd_engine(t1, t2, s, 128, bits, 2, RateMode::corrected);
    const uint64_t l1 = tile_latency(t1, {512, 512, 128}, RateMode::corrected);
    const uint64_t l2 = tile_latency(t2, {512, 128, 512}, RateMode::corrected, true);
    CHECK(p.cycles == std::max(l1, l2) + (l1 + 63) / 64);
}

TEST_CASE("cascade requires matching M_t and rank >= 1") {
    const LayerShape s{64, 64, 64};
    const PortBits bits{8, 8, 8};
    CHECK_THROWS_AS(cascade_svd_engine({8, 4, 4}, {4, 4, 4}, s, 8, bits, 1, RateMode::corrected),
                    std::invalid_argument);
    CHECK_THROWS_AS(cascade_svd_engine({4, 4, 4}, {4, 4, 4}, s, 0, bits, 1, RateMode::corrected),
                    std::invalid_argument);
}

TEST_CASE("resource monotonicity in tile factors") {
    const LayerShape s{128, 128, 128};
    uint64_t prev_dsp = 0, prev_bram = 0;
    for (std::size_t mt : {1, 2, 4, 8}) {
        const TileConfig t{mt, 4, 4};
        CHECK(dsp_usage(t, 1) >= prev_dsp);
        CHECK(bram_usage(t, s, 8, 8, 1) >= prev_bram);
        prev_dsp = dsp_usage(t, 1);
        prev_bram = bram_usage(t, s, 8, 8, 1);
    }
}

TEST_CASE("zcu111 preset and platform json round trip") {
    const PlatformSpec p = zcu111_preset();
    CHECK(p.dsp_total == 4272);
    CHECK(p.bram18_total == 1080);
    CHECK(p.clock_mhz == doctest::Approx(200.0));
    CHECK(p.f_packing_for(4) == 2);
    CHECK(p.f_packing_for(8) == 1);
    CHECK(p.f_packing_for(12) == 1);  // not in the table -> conservative 1

    save_platform_json(p, "platform_test.json");
    const PlatformSpec back = load_platform_json("platform_test.json");
    CHECK(back.dsp_total == p.dsp_total);
    CHECK(back.bram18_total == p.bram18_total);
    CHECK(back.packing == p.packing);
    std::remove("platform_test.json");
}

TEST_CASE("occupancy is 1 for divisible dims and < 1 with padding") {
    EngineConfig dense;
    dense.stage1 = {8, 8, 8};
    CHECK(occupancy(dense, {64, 64, 64}) == doctest::Approx(1.0));
    CHECK(occupancy(dense, {60, 64, 60}) < 1.0);
}
