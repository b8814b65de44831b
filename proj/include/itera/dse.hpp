#ifndef ITERA_DSE_HPP
#define ITERA_DSE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "itera/dfsim.hpp"
#include "itera/hwmodel.hpp"
#include "itera/matrix.hpp"
#include "itera/sra.hpp"

namespace itera {

struct ModelLayer {
    std::string name;
    Matrix weight;  // K x N
};

struct ModelSpec {
    std::vector<ModelLayer> layers;
    std::size_t batch = 1;  // M

    std::size_t layer_count() const { return layers.size(); }
    LayerShape shape(std::size_t i) const {
        return {batch, layers[i].weight.rows(), layers[i].weight.cols()};
    }
    std::vector<std::size_t> rank_caps() const;
};

// Deterministic toy model generator for smoke runs and experiments.
ModelSpec make_toy_model(uint64_t seed, std::size_t layers, std::size_t dim, std::size_t batch);

enum class CompressionMethod { dense_quant, svd_baseline_uniform, iterative_sra };

std::string to_string(CompressionMethod m);

struct CompressionPoint {
    CompressionMethod method = CompressionMethod::iterative_sra;
    int weight_wl = 8;
    int act_wl = 8;
    RankAllocation ranks;  // empty for dense_quant
    double accuracy = 0.0;
    double compression_ratio = 0.0;
    uint64_t nops = 0;  // MACs
};

struct DesignPoint {
    CompressionPoint compression;
    EngineConfig engine;  // rank field is per-layer, left 0 here
    uint64_t total_latency_cycles = 0;
    uint64_t sim_latency_cycles = 0;  // dfsim cross-check of the chosen config
    double latency_ms = 0.0;
    ResourceEstimate resources;  // max over layers (one engine instance reused)
    std::vector<double> layer_occupancy;
};

// FP32 bits over compressed bits; SVD points pay 16 bits per stored scale.
double compression_ratio(const ModelSpec& model, int wl, const RankAllocation& ranks,
                         bool dense);

uint64_t nops(const ModelSpec& model, const RankAllocation& ranks, bool dense);

struct SweepParams {
    std::vector<int> wls = {4, 6, 8};
    std::vector<std::size_t> budgets;
    SRAParams sra;
    int act_wl = 8;
    uint64_t seed = 0;
};

// One SRA-backed point per (wl, budget), plus dense-quant and uniform-rank
// baseline points for comparison.
std::vector<CompressionPoint> compress_sweep(const ModelSpec& model, const SweepParams& params);

// Non-dominated subset under (minimize x, maximize accuracy), sorted by x;
// ties on x keep only the best accuracy.
std::vector<CompressionPoint> pareto_extract(std::vector<CompressionPoint> points,
                                             double (*x_axis)(const CompressionPoint&));

double axis_ratio(const CompressionPoint& p);
double axis_nops(const CompressionPoint& p);

// Candidate engine configurations; rank is filled per layer at evaluation.
struct EngineCandidate {
    EngineMode mode = EngineMode::dense;
    TileConfig stage1;
    TileConfig stage2;
};

std::vector<EngineCandidate> engine_grid(EngineMode mode);

// DSP/BRAM feasibility on every layer of the model; bandwidth never prunes.
std::vector<EngineCandidate> prune_design_space(const PlatformSpec& platform,
                                                const std::vector<EngineCandidate>& candidates,
                                                const ModelSpec& model,
                                                const CompressionPoint& point,
                                                RateMode rate_mode);

struct ExploreResult {
    DesignPoint point;
    bool found = false;
    std::string failure;  // tightest violated constraint when !found
};

// Exhaustive search over the pruned grid for the per-layer-uniform engine
// with minimum total latency; latency is bandwidth-aware. The top candidates
// are re-simulated with dfsim as a cross-check.
ExploreResult explore_hw(const CompressionPoint& point, const ModelSpec& model,
                         const PlatformSpec& platform, RateMode rate_mode);

struct PipelineResult {
    std::vector<CompressionPoint> sweep;
    std::vector<CompressionPoint> front_ratio;
    std::vector<CompressionPoint> front_nops;
    std::vector<DesignPoint> design_points;  // accuracy-latency non-dominated
};

PipelineResult run_pipeline(const ModelSpec& model, const PlatformSpec& platform,
                            const SweepParams& params, RateMode rate_mode,
                            const std::string& out_dir);

// Parallelism cap from ITERA_THREADS (>= 1).
std::size_t thread_cap();

}  // namespace itera

#endif
