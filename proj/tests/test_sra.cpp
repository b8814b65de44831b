#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "itera/sra.hpp"

using namespace itera;

namespace {

class FnEvaluator : public AccuracyEvaluator {
public:
    explicit FnEvaluator(std::function<double(const std::vector<std::size_t>&)> fn)
        : fn_(std::move(fn)) {}
    double evaluate(const std::vector<std::size_t>& ranks) override { return fn_(ranks); }

private:
    std::function<double(const std::vector<std::size_t>&)> fn_;
};

std::vector<std::size_t> caps_of(std::size_t layers, std::size_t cap) {
    return std::vector<std::size_t>(layers, cap);
}

}  // namespace

TEST_CASE("init_allocation even split and remainder rule") {
    CHECK(init_allocation(2, 16, caps_of(2, 64)).ranks == std::vector<std::size_t>{8, 8});
    CHECK(init_allocation(3, 16, caps_of(3, 64)).ranks == std::vector<std::size_t>{6, 5, 5});
}

TEST_CASE("init_allocation cap redistribution") {
    const auto a = init_allocation(4, 40, {8, 32, 32, 32});
    CHECK(a.ranks == std::vector<std::size_t>{8, 11, 11, 10});
    CHECK(a.budget == 40);
}

TEST_CASE("init_allocation infeasible budgets rejected") {
    CHECK_THROWS_AS(init_allocation(4, 3, caps_of(4, 8)), std::invalid_argument);
    CHECK_THROWS_AS(init_allocation(2, 100, caps_of(2, 8)), std::invalid_argument);
}

TEST_CASE("sensitivity on constant and linear evaluators") {
    FnEvaluator constant([](const auto&) { return 1.0; });
    RankAllocation alloc{{8, 8}, 16};
    const auto caps = caps_of(2, 64);
    CHECK(sensitivity(constant, alloc, 0, 1, caps).value == 0.0);
    CHECK(sensitivity(constant, alloc, 1, 1, caps).value == 0.0);

    FnEvaluator linear([](const std::vector<std::size_t>& r) {
        return 0.5 * static_cast<double>(r[0]) - 2.0 * static_cast<double>(r[1]);
    });
    CHECK(sensitivity(linear, alloc, 0, 2, caps).value == doctest::Approx(0.5));
    CHECK(sensitivity(linear, alloc, 1, 2, caps).value == doctest::Approx(-2.0));
}

TEST_CASE("sensitivity on quadratic evaluator, hand oracle") {
    // A = -sum (r_i - t_i)^2, t = [10, 6]
    FnEvaluator quad([](const std::vector<std::size_t>& r) {
        const double d0 = static_cast<double>(r[0]) - 10.0;
        const double d1 = static_cast<double>(r[1]) - 6.0;
        return -(d0 * d0 + d1 * d1);
    });
    RankAllocation alloc{{8, 8}, 16};
    const auto caps = caps_of(2, 64);
    CHECK(sensitivity(quad, alloc, 0, 1, caps).value == doctest::Approx(4.0));
    CHECK(sensitivity(quad, alloc, 1, 1, caps).value == doctest::Approx(-4.0));
}

TEST_CASE("sensitivity clipping") {
    FnEvaluator linear([](const std::vector<std::size_t>& r) { return double(r[0]); });
    RankAllocation alloc{{1, 15}, 16};
    // layer 0 at r_min: no feasible +- perturbation
    const auto s = sensitivity(linear, alloc, 0, 2, caps_of(2, 16), 1);
    CHECK(s.clipped);
    CHECK(s.value == 0.0);
    // layer 1 near cap: delta shrunk to 1
    const auto s1 = sensitivity(linear, alloc, 1, 4, caps_of(2, 16), 1);
    CHECK_FALSE(s1.clipped);
    CHECK(s1.used_delta == 1);
}

TEST_CASE("delta_decay") {
    CHECK(delta_decay(8, 0.5, 2) == 4);
    CHECK(delta_decay(8, 0.5, 0) == 8);
    CHECK(delta_decay(4, 1.0, 100) == 1);
}

TEST_CASE("sra_step moves max/min pair") {
    FnEvaluator linear([](const std::vector<std::size_t>& r) {
        return 0.1 * static_cast<double>(r[0]) - 0.2 * static_cast<double>(r[1]);
    });
    RankAllocation alloc{{8, 8}, 16};
    const auto step = sra_step(linear, alloc, 2, caps_of(2, 64));
    CHECK_FALSE(step.stalled);
    CHECK(step.alloc.ranks == std::vector<std::size_t>{10, 6});
}

TEST_CASE("sra_step stalls when all sensitivities equal") {
    FnEvaluator constant([](const auto&) { return 3.0; });
    RankAllocation alloc{{8, 8}, 16};
    const auto step = sra_step(constant, alloc, 2, caps_of(2, 64));
    CHECK(step.stalled);
    CHECK(step.alloc.ranks == alloc.ranks);
}

TEST_CASE("repeated steps converge to quadratic optimum [10,6]") {
    FnEvaluator quad([](const std::vector<std::size_t>& r) {
        const double d0 = static_cast<double>(r[0]) - 10.0;
        const double d1 = static_cast<double>(r[1]) - 6.0;
        return -(d0 * d0 + d1 * d1);
    });
    RankAllocation alloc{{8, 8}, 16};
    const auto caps = caps_of(2, 64);
    for (int i = 0; i < 10; ++i) {
        const auto step = sra_step(quad, alloc, 1, caps);
        if (step.stalled) break;
        alloc = step.alloc;
    }
    CHECK(alloc.ranks == std::vector<std::size_t>{10, 6});
}

TEST_CASE("run_sra constant evaluator returns initial allocation") {
    FnEvaluator constant([](const auto&) { return 1.0; });
    SRAParams params;
    params.delta0 = 2;
    params.patience = 3;
    params.max_iters = 20;
    const auto res = run_sra(constant, 3, 16, caps_of(3, 64), params);
    CHECK(res.best.ranks == std::vector<std::size_t>{6, 5, 5});
}

TEST_CASE("run_sra budget conserved at every trace row") {
    FnEvaluator quad([](const std::vector<std::size_t>& r) {
        const double d0 = static_cast<double>(r[0]) - 12.0;
        const double d1 = static_cast<double>(r[1]) - 3.0;
        const double d2 = static_cast<double>(r[2]) - 9.0;
        return -(2 * d0 * d0 + d1 * d1 + 0.5 * d2 * d2);
    });
    SRAParams params;
    params.delta0 = 4;
    params.max_iters = 40;
    const auto res = run_sra(quad, 3, 24, caps_of(3, 64), params);
    for (const auto& row : res.trace) {
        std::size_t sum = 0;
        for (auto r : row.ranks) sum += r;
        CHECK(sum == 24);
    }
}

TEST_CASE("run_sra best-so-far score is monotone") {
    FnEvaluator quad([](const std::vector<std::size_t>& r) {
        const double d0 = static_cast<double>(r[0]) - 14.0;
        const double d1 = static_cast<double>(r[1]) - 2.0;
        return -(d0 * d0 + 3 * d1 * d1);
    });
    SRAParams params;
    params.delta0 = 4;
    const auto res = run_sra(quad, 2, 16, caps_of(2, 64), params);
    double best = -1e300;
    for (const auto& row : res.trace) {
        best = std::max(best, row.score);
        CHECK(best <= res.best_score + 1e-12);
    }
    CHECK(res.best_score == doctest::Approx(best));
}

TEST_CASE("run_sra matches exhaustive optimum on separable concave 2-layer") {
    auto curve = [](double r, double a) { return a * std::log1p(r); };
    auto score = [&](const std::vector<std::size_t>& r) {
        return curve(static_cast<double>(r[0]), 3.0) + curve(static_cast<double>(r[1]), 1.0);
    };
    FnEvaluator eval(score);
    const std::size_t budget = 24;
    const auto caps = caps_of(2, 20);

    double brute_best = -1e300;
    for (std::size_t r0 = 1; r0 <= 20; ++r0) {
        const std::size_t r1 = budget - r0;
        if (r1 < 1 || r1 > 20) continue;
        brute_best = std::max(brute_best, score({r0, r1}));
    }

    SRAParams params;
    params.delta0 = 4;
    params.alpha = 0.5;
    params.max_iters = 60;
    params.patience = 12;
    const auto res = run_sra(eval, 2, budget, caps, params);
    // within one delta-granularity step of the optimum
    const double step_gap = std::abs(score({res.best.ranks[0] + 1, res.best.ranks[1] - 1}) -
                                     res.best_score);
    CHECK(res.best_score >= brute_best - step_gap - 1e-9);
}

TEST_CASE("run_sra beats uniform split on heterogeneous 4-layer model") {
    auto score = [](const std::vector<std::size_t>& r) {
        const double slopes[4] = {4.0, 2.0, 1.0, 0.5};
        double s = 0.0;
        for (int i = 0; i < 4; ++i) s += slopes[i] * std::log1p(static_cast<double>(r[i]));
        return s;
    };
    FnEvaluator eval(score);
    SRAParams params;
    params.delta0 = 4;
    params.max_iters = 80;
    params.patience = 16;
    const auto res = run_sra(eval, 4, 64, caps_of(4, 48), params);
    CHECK(res.best_score >= score({16, 16, 16, 16}) - 1e-12);
}

TEST_CASE("evaluator call cost model visible through probe counters") {
    std::size_t calls = 0;
    FnEvaluator counted([&calls](const std::vector<std::size_t>& r) {
        ++calls;
        return -std::pow(static_cast<double>(r[0]) - 10.0, 2.0);
    });
    SRAParams params;
    params.delta0 = 1;
    params.max_iters = 5;
    params.patience = 100;
    const auto res = run_sra(counted, 2, 16, caps_of(2, 64), params);
    // probes per iteration: 1 objective + 2L sensitivity evaluations
    CHECK(res.evaluator_probes >= res.trace.size() * (1 + 2 * 2));
    // caching means strictly fewer real calls than probes
    CHECK(res.evaluator_misses <= res.evaluator_probes);
    CHECK(calls == res.evaluator_misses);
}

TEST_CASE("trace csv and allocation json round trip") {
    FnEvaluator constant([](const auto&) { return 0.0; });
    SRAParams params;
    params.delta0 = 2;
    params.patience = 2;
    const auto res = run_sra(constant, 2, 10, caps_of(2, 16), params);
    save_trace_csv(res, "sra_trace_test.csv");
    save_allocation_json(res.best, "sra_alloc_test.json");
    const auto back = load_allocation_json("sra_alloc_test.json");
    CHECK(back.ranks == res.best.ranks);
    CHECK(back.budget == res.best.budget);
    std::remove("sra_trace_test.csv");
    std::remove("sra_alloc_test.json");
}

TEST_CASE("reconstruction proxy evaluator improves with rank") {
    std::vector<Matrix> ws;
    {
        std::mt19937_64 rng(77);
        std::normal_distribution<double> dist;
        Matrix w(12, 12);
        for (double& v : w.data()) v = dist(rng);
        ws.push_back(w);
    }
    ReconstructionProxyEvaluator eval(ws, 8);
    CHECK(eval.evaluate({8}) >= eval.evaluate({2}));
}

TEST_CASE("synthetic task evaluator deterministic and rank-sensitive") {
    SyntheticTaskEvaluator eval(123, 6);
    SyntheticTaskEvaluator eval2(123, 6);
    const std::vector<std::size_t> alloc = {8, 8, 4};
    CHECK(eval.evaluate(alloc) == eval2.evaluate(alloc));
    const std::size_t full = eval.max_rank();
    CHECK(eval.evaluate({full, full, full}) >= eval.evaluate({1, 1, 1}));
}
