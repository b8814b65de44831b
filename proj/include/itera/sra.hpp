#ifndef ITERA_SRA_HPP
#define ITERA_SRA_HPP

#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "itera/matrix.hpp"

namespace itera {

// Per-layer rank vector under a fixed total budget (sum r_i == budget).
struct RankAllocation {
    std::vector<std::size_t> ranks;
    std::size_t budget = 0;
};

struct SRAParams {
    std::size_t delta0 = 4;   // initial perturbation, >= 1
    double alpha = 0.5;       // decay constant, > 0
    std::size_t max_iters = 64;
    std::size_t patience = 8;
    std::size_t r_min = 1;
};

// Accuracy functional over an allocation; higher is better. Must be
// deterministic for a fixed allocation.
class AccuracyEvaluator {
public:
    virtual ~AccuracyEvaluator() = default;
    virtual double evaluate(const std::vector<std::size_t>& ranks) = 0;
    virtual bool concurrent_safe() const { return false; }
};

// Wraps an evaluator with allocation-keyed memoization; the finite-difference
// probes revisit allocations constantly.
class CachingEvaluator : public AccuracyEvaluator {
public:
    explicit CachingEvaluator(AccuracyEvaluator& inner) : inner_(inner) {}
    double evaluate(const std::vector<std::size_t>& ranks) override;
    bool concurrent_safe() const override { return false; }
    std::size_t probe_count() const { return probes_; }
    std::size_t miss_count() const { return misses_; }

private:
    AccuracyEvaluator& inner_;
    std::map<std::vector<std::size_t>, double> cache_;
    std::size_t probes_ = 0;
    std::size_t misses_ = 0;
};

struct SensitivityResult {
    double value = 0.0;
    bool clipped = false;          // no feasible perturbation at all
    std::size_t used_delta = 0;    // possibly shrunk below the requested delta
};

struct StepResult {
    RankAllocation alloc;
    bool stalled = false;
};

struct SRATraceRow {
    std::size_t iteration = 0;
    std::size_t delta = 0;
    double score = 0.0;
    std::vector<std::size_t> ranks;
};

struct SRAResult {
    RankAllocation best;
    double best_score = 0.0;
    std::vector<SRATraceRow> trace;
    std::size_t evaluator_probes = 0;  // probes through the cache
    std::size_t evaluator_misses = 0;  // actual evaluator invocations
};

// Even split, remainder to the lowest-indexed layers, overflow beyond a
// layer cap redistributed to uncapped layers in index order.
RankAllocation init_allocation(std::size_t layers, std::size_t budget,
                               const std::vector<std::size_t>& caps, std::size_t r_min = 1);

// Central finite difference (A+ - A-) / (2*delta) at ranks[i] +- delta.
SensitivityResult sensitivity(AccuracyEvaluator& eval, const RankAllocation& alloc,
                              std::size_t layer, std::size_t delta,
                              const std::vector<std::size_t>& caps, std::size_t r_min = 1);

// round-half-away-from-zero of delta0 / (1 + alpha*n), floored at 1.
std::size_t delta_decay(std::size_t delta0, double alpha, std::size_t n);

// Move delta ranks from the least to the most sensitive layer; ties break to
// the lowest layer index; an infeasible or self-move stalls (no change).
StepResult sra_step(AccuracyEvaluator& eval, const RankAllocation& alloc, std::size_t delta,
                    const std::vector<std::size_t>& caps, std::size_t r_min = 1);

SRAResult run_sra(AccuracyEvaluator& eval, std::size_t layers, std::size_t budget,
                  const std::vector<std::size_t>& caps, const SRAParams& params);

void save_trace_csv(const SRAResult& result, const std::string& path);
void save_allocation_json(const RankAllocation& alloc, const std::string& path);
RankAllocation load_allocation_json(const std::string& path);

// A = -sum_i ||W_i - reconstruct(d_i)||_F / ||W_i||_F with iterative
// decomposition at each layer's current rank.
class ReconstructionProxyEvaluator : public AccuracyEvaluator {
public:
    ReconstructionProxyEvaluator(std::vector<Matrix> layer_weights, int weight_wl);
    double evaluate(const std::vector<std::size_t>& ranks) override;
    bool concurrent_safe() const override { return false; }

private:
    std::vector<Matrix> weights_;
    int weight_wl_;
    std::vector<std::map<std::size_t, double>> per_layer_error_;  // rank -> rel error
};

// Seeded 3-layer tanh classifier scored on a seeded calibration set;
// layers are compressed per-allocation before the forward pass.
class SyntheticTaskEvaluator : public AccuracyEvaluator {
public:
    SyntheticTaskEvaluator(uint64_t seed, int weight_wl, std::size_t dim = 16,
                           std::size_t classes = 4, std::size_t samples = 64);
    double evaluate(const std::vector<std::size_t>& ranks) override;
    bool concurrent_safe() const override { return false; }
    std::size_t layer_count() const { return weights_.size(); }
    std::size_t max_rank() const;

private:
    std::vector<Matrix> weights_;
    Matrix calib_;
    std::vector<std::size_t> labels_;
    int weight_wl_;
};

}  // namespace itera

#endif
