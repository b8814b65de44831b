#include "itera/sra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "itera/decomp.hpp"

namespace itera {

double CachingEvaluator::evaluate(const std::vector<std::size_t>& ranks) {
    ++probes_;
    auto it = cache_.find(ranks);
    if (it != cache_.end()) return it->second;
    ++misses_;
    const double a = inner_.evaluate(ranks);
    cache_.emplace(ranks, a);
    return a;
}

RankAllocation init_allocation(std::size_t layers, std::size_t budget,
                               const std::vector<std::size_t>& caps, std::size_t r_min) {
    if (layers == 0) throw std::invalid_argument("init_allocation: zero layers");
    if (caps.size() != layers) throw std::invalid_argument("init_allocation: caps size != layers");
    if (budget < layers * r_min)
        throw std::invalid_argument("init_allocation: budget below L * r_min");
    std::size_t cap_sum = 0;
    for (std::size_t c : caps) {
        if (c < r_min) throw std::invalid_argument("init_allocation: cap below r_min");
        cap_sum += c;
    }
    if (budget > cap_sum)
        throw std::invalid_argument("init_allocation: budget exceeds sum of layer caps");

    RankAllocation alloc;
    alloc.budget = budget;
    alloc.ranks.assign(layers, budget / layers);
    for (std::size_t i = 0; i < budget % layers; ++i) ++alloc.ranks[i];

    // Clamp to caps, then hand overflow one unit at a time to layers still
    // below their cap, cycling in index order.
    std::size_t overflow = 0;
    for (std::size_t i = 0; i < layers; ++i) {
        if (alloc.ranks[i] > caps[i]) {
            overflow += alloc.ranks[i] - caps[i];
            alloc.ranks[i] = caps[i];
        }
    }
    while (overflow > 0) {
        bool placed = false;
        for (std::size_t i = 0; i < layers && overflow > 0; ++i) {
            if (alloc.ranks[i] < caps[i]) {
                ++alloc.ranks[i];
                --overflow;
                placed = true;
            }
        }
        if (!placed) throw std::logic_error("init_allocation: redistribution failed");
    }
    return alloc;
}

SensitivityResult sensitivity(AccuracyEvaluator& eval, const RankAllocation& alloc,
                              std::size_t layer, std::size_t delta,
                              const std::vector<std::size_t>& caps, std::size_t r_min) {
    const std::size_t r = alloc.ranks.at(layer);
    const std::size_t room_up = caps.at(layer) > r ? caps[layer] - r : 0;
    const std::size_t room_down = r > r_min ? r - r_min : 0;
    const std::size_t d = std::min({delta, room_up, room_down});

    SensitivityResult out;
    if (d == 0) {
        out.clipped = true;
        return out;
    }
    out.used_delta = d;

    std::vector<std::size_t> up = alloc.ranks, down = alloc.ranks;
    up[layer] += d;
    down[layer] -= d;
    out.value = (eval.evaluate(up) - eval.evaluate(down)) / (2.0 * static_cast<double>(d));
    return out;
}

std::size_t delta_decay(std::size_t delta0, double alpha, std::size_t n) {
    const double raw = static_cast<double>(delta0) / (1.0 + alpha * static_cast<double>(n));
    const long long r = std::llround(raw);  // half away from zero
    return static_cast<std::size_t>(std::max(1ll, r));
}

StepResult sra_step(AccuracyEvaluator& eval, const RankAllocation& alloc, std::size_t delta,
                    const std::vector<std::size_t>& caps, std::size_t r_min) {
    const std::size_t layers = alloc.ranks.size();
    std::vector<double> s(layers, 0.0);
    for (std::size_t i = 0; i < layers; ++i)
        s[i] = sensitivity(eval, alloc, i, delta, caps, r_min).value;

    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 1; i < layers; ++i) {
        if (s[i] > s[imax]) imax = i;
        if (s[i] < s[imin]) imin = i;
    }

    StepResult res{alloc, false};
    if (imax == imin) {
        res.stalled = true;
        return res;
    }
    const std::size_t room_up = caps[imax] - alloc.ranks[imax];
    const std::size_t room_down = alloc.ranks[imin] - r_min;
    const std::size_t moved = std::min({delta, room_up, room_down});
    if (moved == 0) {
        res.stalled = true;
        return res;
    }
    res.alloc.ranks[imax] += moved;
    res.alloc.ranks[imin] -= moved;
    return res;
}

SRAResult run_sra(AccuracyEvaluator& eval, std::size_t layers, std::size_t budget,
                  const std::vector<std::size_t>& caps, const SRAParams& params) {
    if (params.delta0 < 1) throw std::invalid_argument("run_sra: delta0 must be >= 1");
    if (params.alpha <= 0.0) throw std::invalid_argument("run_sra: alpha must be > 0");

    CachingEvaluator cached(eval);
    RankAllocation alloc = init_allocation(layers, budget, caps, params.r_min);

    SRAResult result;
    result.best = alloc;
    result.best_score = cached.evaluate(alloc.ranks);
    std::size_t since_improvement = 0;

    for (std::size_t n = 0; n < params.max_iters; ++n) {
        const std::size_t delta = delta_decay(params.delta0, params.alpha, n);
        const double score = cached.evaluate(alloc.ranks);
        if (score > result.best_score) {
            result.best_score = score;
            result.best = alloc;
            since_improvement = 0;
        } else {
            ++since_improvement;
        }
        result.trace.push_back({n, delta, score, alloc.ranks});

        if (since_improvement >= params.patience) break;

        const StepResult step = sra_step(cached, alloc, delta, caps, params.r_min);
        if (step.stalled && delta == 1) break;
        alloc = step.alloc;
    }

    result.evaluator_probes = cached.probe_count();
    result.evaluator_misses = cached.miss_count();
    return result;
}

void save_trace_csv(const SRAResult& result, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_trace_csv: cannot open " + path);
    os << "iteration,delta,score";
    const std::size_t layers = result.trace.empty() ? 0 : result.trace.front().ranks.size();
    for (std::size_t i = 0; i < layers; ++i) os << ",r_" << (i + 1);
    os << '\n';
    os.precision(17);
    for (const auto& row : result.trace) {
        os << row.iteration << ',' << row.delta << ',' << row.score;
        for (std::size_t r : row.ranks) os << ',' << r;
        os << '\n';
    }
}

void save_allocation_json(const RankAllocation& alloc, const std::string& path) {
    nlohmann::json j;
    j["budget"] = alloc.budget;
    j["ranks"] = alloc.ranks;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_allocation_json: cannot open " + path);
    os << j.dump(2) << '\n';
}

RankAllocation load_allocation_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_allocation_json: cannot open " + path);
    nlohmann::json j;
    is >> j;
    RankAllocation a;
    a.budget = j.at("budget").get<std::size_t>();
    a.ranks = j.at("ranks").get<std::vector<std::size_t>>();
    return a;
}

ReconstructionProxyEvaluator::ReconstructionProxyEvaluator(std::vector<Matrix> layer_weights,
                                                           int weight_wl)
    : weights_(std::move(layer_weights)), weight_wl_(weight_wl),
      per_layer_error_(weights_.size()) {}

double ReconstructionProxyEvaluator::evaluate(const std::vector<std::size_t>& ranks) {
    if (ranks.size() != weights_.size())
        throw std::invalid_argument("ReconstructionProxyEvaluator: rank count != layer count");
    double total = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        auto it = per_layer_error_[i].find(ranks[i]);
        if (it == per_layer_error_[i].end()) {
            const auto d = iterative_decompose(weights_[i], ranks[i], weight_wl_);
            const double wn = frobenius_norm(weights_[i]);
            const double rel = wn > 0.0 ? d.residual_norms.back() / wn : 0.0;
            it = per_layer_error_[i].emplace(ranks[i], rel).first;
        }
        total += it->second;
    }
    return -total;
}

namespace {
Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, double sd = 1.0) {
    std::normal_distribution<double> dist(0.0, sd);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

Matrix tanh_elem(const Matrix& m) {
    Matrix out = m;
    for (double& v : out.data()) v = std::tanh(v);
    return out;
}
}  // namespace

SyntheticTaskEvaluator::SyntheticTaskEvaluator(uint64_t seed, int weight_wl, std::size_t dim,
                                               std::size_t classes, std::size_t samples)
    : weight_wl_(weight_wl) {
    std::mt19937_64 rng(seed);
    weights_.push_back(random_matrix(rng, dim, dim, 1.0 / std::sqrt(static_cast<double>(dim))));
    weights_.push_back(random_matrix(rng, dim, dim, 1.0 / std::sqrt(static_cast<double>(dim))));
    weights_.push_back(random_matrix(rng, dim, classes, 1.0 / std::sqrt(static_cast<double>(dim))));
    calib_ = random_matrix(rng, samples, dim);

    // Reference labels from the uncompressed network.
    Matrix h = calib_;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        h = matmul(h, weights_[l]);
        if (l + 1 < weights_.size()) h = tanh_elem(h);
    }
    labels_.resize(samples);
    for (std::size_t s = 0; s < samples; ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (h(s, c) > h(s, best)) best = c;
        labels_[s] = best;
    }
}

std::size_t SyntheticTaskEvaluator::max_rank() const {
    std::size_t m = SIZE_MAX;
    for (const auto& w : weights_) m = std::min(m, std::min(w.rows(), w.cols()));
    return m;
}

double SyntheticTaskEvaluator::evaluate(const std::vector<std::size_t>& ranks) {
    if (ranks.size() != weights_.size())
        throw std::invalid_argument("SyntheticTaskEvaluator: rank count != layer count");
    Matrix h = calib_;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        const auto d = iterative_decompose(weights_[l], ranks[l], weight_wl_);
        h = matmul(h, reconstruct(d));
        if (l + 1 < weights_.size()) h = tanh_elem(h);
    }
    std::size_t hits = 0;
    const std::size_t classes = weights_.back().cols();
    for (std::size_t s = 0; s < h.rows(); ++s) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < classes; ++c)
            if (h(s, c) > h(s, best)) best = c;
        if (best == labels_[s]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(h.rows());
}

}  // namespace itera
