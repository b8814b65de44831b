#include "itera/dse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

#include "itera/decomp.hpp"
#include "itera/quant.hpp"

namespace itera {

std::vector<std::size_t> ModelSpec::rank_caps() const {
    std::vector<std::size_t> caps;
    caps.reserve(layers.size());
    for (const auto& l : layers) caps.push_back(std::min(l.weight.rows(), l.weight.cols()));
    return caps;
}

ModelSpec make_toy_model(uint64_t seed, std::size_t layers, std::size_t dim, std::size_t batch) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    ModelSpec model;
    model.batch = batch;
    for (std::size_t l = 0; l < layers; ++l) {
        Matrix w(dim, dim);
        for (double& v : w.data()) v = dist(rng);
        model.layers.push_back({"layer" + std::to_string(l), std::move(w)});
    }
    return model;
}

std::string to_string(CompressionMethod m) {
    switch (m) {
        case CompressionMethod::dense_quant: return "dense_quant";
        case CompressionMethod::svd_baseline_uniform: return "svd_baseline";
        case CompressionMethod::iterative_sra: return "iterative_sra";
    }
    return "?";
}

double compression_ratio(const ModelSpec& model, int wl, const RankAllocation& ranks,
                         bool dense) {
    double fp32_bits = 0.0, compressed_bits = 0.0;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const double k = static_cast<double>(model.layers[i].weight.rows());
        const double n = static_cast<double>(model.layers[i].weight.cols());
        fp32_bits += k * n * 32.0;
        if (dense) {
            compressed_bits += k * n * wl;
        } else {
            const double r = static_cast<double>(ranks.ranks.at(i));
            compressed_bits += (k * r + r * n) * wl + 2.0 * r * 16.0;  // 16-bit scales
        }
    }
    return fp32_bits / compressed_bits;
}

uint64_t nops(const ModelSpec& model, const RankAllocation& ranks, bool dense) {
    uint64_t total = 0;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const uint64_t k = model.layers[i].weight.rows();
        const uint64_t n = model.layers[i].weight.cols();
        if (dense)
            total += model.batch * k * n;
        else
            total += model.batch * ranks.ranks.at(i) * (k + n);
    }
    return total;
}

namespace {

// Vector-wise (per-column) quantization proxy score for a dense point.
double dense_quant_accuracy(const ModelSpec& model, int wl) {
    double total = 0.0;
    for (const auto& layer : model.layers) {
        const Matrix& w = layer.weight;
        Matrix wq(w.rows(), w.cols());
        for (std::size_t c = 0; c < w.cols(); ++c) {
            const auto dq = dequantize(quantize_vector(w.col(c), wl));
            for (std::size_t r = 0; r < w.rows(); ++r) wq(r, c) = dq[r];
        }
        const double wn = frobenius_norm(w);
        total += wn > 0.0 ? frobenius_norm(sub(w, wq)) / wn : 0.0;
    }
    return -total;
}

double svd_baseline_accuracy(const ModelSpec& model, const RankAllocation& ranks, int wl) {
    double total = 0.0;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const Matrix& w = model.layers[i].weight;
        const auto d = svd_baseline(w, ranks.ranks[i], wl);
        const double wn = frobenius_norm(w);
        total += wn > 0.0 ? d.residual_norms.back() / wn : 0.0;
    }
    return -total;
}

}  // namespace

std::vector<CompressionPoint> compress_sweep(const ModelSpec& model, const SweepParams& params) {
    const auto caps = model.rank_caps();
    std::vector<CompressionPoint> points;

    for (int wl : params.wls) {
        {
            CompressionPoint p;
            p.method = CompressionMethod::dense_quant;
            p.weight_wl = wl;
            p.act_wl = params.act_wl;
            p.accuracy = dense_quant_accuracy(model, wl);
            p.compression_ratio = compression_ratio(model, wl, p.ranks, /*dense=*/true);
            p.nops = nops(model, p.ranks, /*dense=*/true);
            points.push_back(std::move(p));
        }
        for (std::size_t budget : params.budgets) {
            try {
                ReconstructionProxyEvaluator eval(
                    [&] {
                        std::vector<Matrix> ws;
                        for (const auto& l : model.layers) ws.push_back(l.weight);
                        return ws;
                    }(),
                    wl);
                const SRAResult sra = run_sra(eval, model.layer_count(), budget, caps, params.sra);

                CompressionPoint p;
                p.method = CompressionMethod::iterative_sra;
                p.weight_wl = wl;
                p.act_wl = params.act_wl;
                p.ranks = sra.best;
                p.accuracy = sra.best_score;
                p.compression_ratio = compression_ratio(model, wl, p.ranks, false);
                p.nops = nops(model, p.ranks, false);
                points.push_back(std::move(p));

                CompressionPoint b;
                b.method = CompressionMethod::svd_baseline_uniform;
                b.weight_wl = wl;
                b.act_wl = params.act_wl;
                b.ranks = init_allocation(model.layer_count(), budget, caps);
                b.accuracy = svd_baseline_accuracy(model, b.ranks, wl);
                b.compression_ratio = compression_ratio(model, wl, b.ranks, false);
                b.nops = nops(model, b.ranks, false);
                points.push_back(std::move(b));
            } catch (const std::exception&) {
                // Infeasible (wl, budget) combination; sweep continues.
            }
        }
    }
    return points;
}

double axis_ratio(const CompressionPoint& p) { return p.compression_ratio; }
double axis_nops(const CompressionPoint& p) { return static_cast<double>(p.nops); }

std::vector<CompressionPoint> pareto_extract(std::vector<CompressionPoint> points,
                                             double (*x_axis)(const CompressionPoint&)) {
    if (points.empty()) return points;
    std::stable_sort(points.begin(), points.end(),
                     [&](const CompressionPoint& a, const CompressionPoint& b) {
                         const double xa = x_axis(a), xb = x_axis(b);
                         if (xa != xb) return xa < xb;
                         return a.accuracy > b.accuracy;
                     });
    std::vector<CompressionPoint> front;
    double best_acc = -std::numeric_limits<double>::infinity();
    double last_x = std::numeric_limits<double>::quiet_NaN();
    for (auto& p : points) {
        const double x = x_axis(p);
        if (x == last_x) continue;  // only the best accuracy at each x
        if (p.accuracy > best_acc) {
            best_acc = p.accuracy;
            last_x = x;
            front.push_back(std::move(p));
        }
    }
    return front;
}

std::vector<EngineCandidate> engine_grid(EngineMode mode) {
    static constexpr std::size_t tiles[] = {1, 2, 4, 8, 16, 32, 64};
    static constexpr std::size_t kfs[] = {1, 2, 4, 8, 16, 32};
    std::vector<EngineCandidate> grid;
    if (mode == EngineMode::dense || mode == EngineMode::single_svd) {
        for (std::size_t mt : tiles)
            for (std::size_t nt : tiles)
                for (std::size_t kf : kfs) {
                    EngineCandidate c;
                    c.mode = mode;
                    c.stage1 = {mt, nt, kf};
                    c.stage2 = c.stage1;
                    grid.push_back(c);
                }
    } else {
        for (std::size_t mt : tiles)
            for (std::size_t rt : tiles)
                for (std::size_t nt : tiles)
                    for (std::size_t kf : kfs) {
                        EngineCandidate c;
                        c.mode = mode;
                        c.stage1 = {mt, rt, kf};
                        c.stage2 = {mt, nt, kf};
                        grid.push_back(c);
                    }
    }
    return grid;
}

namespace {

EngineConfig to_engine(const EngineCandidate& c, std::size_t rank) {
    EngineConfig e;
    e.mode = c.mode;
    e.stage1 = c.stage1;
    e.stage2 = c.stage2;
    e.rank = rank;
    return e;
}

std::size_t layer_rank(const CompressionPoint& point, std::size_t layer) {
    return point.ranks.ranks.empty() ? 0 : point.ranks.ranks.at(layer);
}

PortBits point_bits(const CompressionPoint& point) {
    return {point.act_wl, point.weight_wl, point.act_wl};
}

// Model latency with the channel share applied when aggregate demand
// exceeds the platform channel.
uint64_t effective_latency(const EnginePerf& perf, const PlatformSpec& platform) {
    const double bw = platform.bandwidth_bits_per_cycle;
    if (std::isinf(bw) || perf.resources.bandwidth_bits_per_cycle <= bw) return perf.cycles;
    return static_cast<uint64_t>(std::ceil(static_cast<double>(perf.cycles) *
                                           perf.resources.bandwidth_bits_per_cycle / bw));
}

}  // namespace

std::vector<EngineCandidate> prune_design_space(const PlatformSpec& platform,
                                                const std::vector<EngineCandidate>& candidates,
                                                const ModelSpec& model,
                                                const CompressionPoint& point,
                                                RateMode rate_mode) {
    const PortBits bits = point_bits(point);
    const int fp = platform.f_packing_for(point.weight_wl);
    std::vector<EngineCandidate> feasible;
    for (const auto& c : candidates) {
        bool ok = true;
        for (std::size_t i = 0; i < model.layer_count() && ok; ++i) {
            try {
                const EnginePerf perf =
                    engine_perf(to_engine(c, layer_rank(point, i)), model.shape(i), bits, fp,
                                rate_mode);
                ok = perf.resources.dsp <= platform.dsp_total &&
                     perf.resources.bram18 <= platform.bram18_total;
            } catch (const std::invalid_argument&) {
                ok = false;  // e.g. K_f > K for this layer
            }
        }
        if (ok) feasible.push_back(c);
    }
    return feasible;
}

std::size_t thread_cap() {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ITERA_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = std::min(n, static_cast<std::size_t>(v));
    }
    return n;
}

namespace {

// Deterministic parallel map: results land at fixed indices.
template <typename F>
void parallel_for(std::size_t count, F&& fn) {
    const std::size_t threads = std::min(thread_cap(), std::max<std::size_t>(1, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < count; i += threads) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace

ExploreResult explore_hw(const CompressionPoint& point, const ModelSpec& model,
                         const PlatformSpec& platform, RateMode rate_mode) {
    const bool dense = point.method == CompressionMethod::dense_quant;
    std::vector<EngineCandidate> candidates;
    if (dense) {
        candidates = engine_grid(EngineMode::dense);
    } else {
        candidates = engine_grid(EngineMode::single_svd);
        const auto cascade = engine_grid(EngineMode::cascade_svd);
        candidates.insert(candidates.end(), cascade.begin(), cascade.end());
    }

    const auto feasible = prune_design_space(platform, candidates, model, point, rate_mode);
    ExploreResult result;
    if (feasible.empty()) {
        result.failure = "no feasible engine: DSP<=" + std::to_string(platform.dsp_total) +
                         " and BRAM18K<=" + std::to_string(platform.bram18_total) +
                         " exclude the entire grid";
        return result;
    }

    const PortBits bits = point_bits(point);
    const int fp = platform.f_packing_for(point.weight_wl);
    std::vector<uint64_t> totals(feasible.size(), UINT64_MAX);
    parallel_for(feasible.size(), [&](std::size_t idx) {
        uint64_t total = 0;
        for (std::size_t i = 0; i < model.layer_count(); ++i) {
            const EnginePerf perf = engine_perf(to_engine(feasible[idx], layer_rank(point, i)),
                                                model.shape(i), bits, fp, rate_mode);
            total += effective_latency(perf, platform);
        }
        totals[idx] = total;
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < feasible.size(); ++i)
        if (totals[i] < totals[best]) best = i;

    // dfsim cross-check on the chosen config.
    uint64_t sim_total = 0;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        SimOptions opts;
        opts.overlap = Overlap::double_buffered;
        opts.check_feasibility = false;  // already pruned
        sim_total += simulate(to_engine(feasible[best], layer_rank(point, i)), model.shape(i),
                              platform, bits, opts)
                         .cycles;
    }

    DesignPoint dp;
    dp.compression = point;
    dp.engine = to_engine(feasible[best], 0);
    dp.total_latency_cycles = totals[best];
    dp.sim_latency_cycles = sim_total;
    dp.latency_ms = platform.clock_mhz > 0.0
                        ? static_cast<double>(totals[best]) / (platform.clock_mhz * 1e3)
                        : 0.0;
    for (std::size_t i = 0; i < model.layer_count(); ++i) {
        const EngineConfig e = to_engine(feasible[best], layer_rank(point, i));
        const EnginePerf perf = engine_perf(e, model.shape(i), bits, fp, rate_mode);
        dp.resources.dsp = std::max(dp.resources.dsp, perf.resources.dsp);
        dp.resources.bram18 = std::max(dp.resources.bram18, perf.resources.bram18);
        dp.resources.bandwidth_bits_per_cycle = std::max(
            dp.resources.bandwidth_bits_per_cycle, perf.resources.bandwidth_bits_per_cycle);
        dp.layer_occupancy.push_back(occupancy(e, model.shape(i)));
    }
    result.point = std::move(dp);
    result.found = true;
    return result;
}

namespace {

void write_model_front_csv(const std::vector<CompressionPoint>& front, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "method,wl,budget,accuracy,compression_ratio,nops\n";
    os.precision(17);
    for (const auto& p : front)
        os << to_string(p.method) << ',' << p.weight_wl << ',' << p.ranks.budget << ','
           << p.accuracy << ',' << p.compression_ratio << ',' << p.nops << '\n';
}

void write_hw_front_csv(const std::vector<DesignPoint>& points, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "accuracy,latency_cycles,latency_ms,wl,budget,engine_mode,M_t,N_t,R_t,K_f,dsp,bram,"
          "bandwidth,method\n";
    os.precision(17);
    for (const auto& d : points) {
        const std::size_t r_t =
            d.engine.mode == EngineMode::cascade_svd ? d.engine.stage1.n_t : d.engine.stage2.n_t;
        const std::size_t n_t =
            d.engine.mode == EngineMode::cascade_svd ? d.engine.stage2.n_t : d.engine.stage1.n_t;
        os << d.compression.accuracy << ',' << d.total_latency_cycles << ',' << d.latency_ms
           << ',' << d.compression.weight_wl << ',' << d.compression.ranks.budget << ','
           << to_string(d.engine.mode) << ',' << d.engine.stage1.m_t << ',' << n_t << ',' << r_t
           << ',' << d.engine.stage1.k_f << ',' << d.resources.dsp << ',' << d.resources.bram18
           << ',' << d.resources.bandwidth_bits_per_cycle << ',' << to_string(d.compression.method)
           << '\n';
    }
}

void write_occupancy_csv(const std::vector<DesignPoint>& points, const ModelSpec& model,
                         const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "design_point,layer,occupancy\n";
    os.precision(17);
    for (std::size_t d = 0; d < points.size(); ++d)
        for (std::size_t l = 0; l < points[d].layer_occupancy.size(); ++l)
            os << d << ',' << model.layers[l].name << ',' << points[d].layer_occupancy[l] << '\n';
}

}  // namespace

PipelineResult run_pipeline(const ModelSpec& model, const PlatformSpec& platform,
                            const SweepParams& params, RateMode rate_mode,
                            const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    PipelineResult result;
    result.sweep = compress_sweep(model, params);
    result.front_ratio = pareto_extract(result.sweep, axis_ratio);
    result.front_nops = pareto_extract(result.sweep, axis_nops);

    // Union of both fronts, deduplicated, in deterministic order.
    std::vector<CompressionPoint> to_explore = result.front_ratio;
    for (const auto& p : result.front_nops) {
        const bool dup = std::any_of(to_explore.begin(), to_explore.end(),
                                     [&](const CompressionPoint& q) {
                                         return q.method == p.method &&
                                                q.weight_wl == p.weight_wl &&
                                                q.ranks.ranks == p.ranks.ranks;
                                     });
        if (!dup) to_explore.push_back(p);
    }

    std::vector<DesignPoint> explored;
    for (const auto& p : to_explore) {
        const ExploreResult r = explore_hw(p, model, platform, rate_mode);
        if (r.found) explored.push_back(r.point);
    }

    // Final accuracy-latency front: drop dominated design points.
    for (std::size_t i = 0; i < explored.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < explored.size() && !dominated; ++j) {
            if (i == j) continue;
            const bool leq = explored[j].total_latency_cycles <= explored[i].total_latency_cycles &&
                             explored[j].compression.accuracy >= explored[i].compression.accuracy;
            const bool strict =
                explored[j].total_latency_cycles < explored[i].total_latency_cycles ||
                explored[j].compression.accuracy > explored[i].compression.accuracy;
            dominated = leq && strict;
        }
        if (!dominated) result.design_points.push_back(explored[i]);
    }
    std::stable_sort(result.design_points.begin(), result.design_points.end(),
                     [](const DesignPoint& a, const DesignPoint& b) {
                         return a.total_latency_cycles < b.total_latency_cycles;
                     });

    write_model_front_csv(result.front_ratio, out_dir + "/model_front_ratio.csv");
    write_model_front_csv(result.front_nops, out_dir + "/model_front_nops.csv");
    write_hw_front_csv(result.design_points, out_dir + "/hw_front.csv");
    write_occupancy_csv(result.design_points, model, out_dir + "/occupancy.csv");
    return result;
}

}  // namespace itera
