#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <string>
#include <vector>

#include "itera/decomp.hpp"
#include "itera/dfsim.hpp"
#include "itera/dse.hpp"
#include "itera/hwmodel.hpp"
#include "itera/matrix.hpp"
#include "itera/sra.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace itera;

namespace {

constexpr const char* kVersion = "0.1.0";

// FNV-1a over the full command line: stable across runs and platforms.
std::string config_hash(int argc, char** argv) {
    uint64_t h = 1469598103934665603ull;
    for (int i = 0; i < argc; ++i)
        for (const char* p = argv[i]; *p; ++p) {
            h ^= static_cast<uint8_t>(*p);
            h *= 1099511628211ull;
        }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_manifest(const std::string& out_dir, const std::string& command, uint64_t seed,
                    const std::string& hash, const json& config) {
    json m;
    m["command"] = command;
    m["seed"] = seed;
    m["version"] = kVersion;
    m["config_hash"] = hash;
    m["config"] = config;
    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/manifest.json");
    os << m.dump(2) << '\n';
}

std::vector<Matrix> load_model_dir(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string ext = entry.path().extension().string();
        if (ext == ".itmx" || ext == ".csv") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw std::runtime_error("no .itmx/.csv layer files in " + dir);
    std::vector<Matrix> layers;
    for (const auto& p : paths) layers.push_back(read_matrix(p));
    return layers;
}

RateMode parse_rate_mode(const std::string& s) {
    if (s == "paper-literal") return RateMode::paper_literal;
    if (s == "corrected") return RateMode::corrected;
    throw CLI::ValidationError("--rate-mode", "must be paper-literal or corrected");
}

EngineMode parse_engine_mode(const std::string& s) {
    if (s == "dense") return EngineMode::dense;
    if (s == "single-svd") return EngineMode::single_svd;
    if (s == "cascade-svd") return EngineMode::cascade_svd;
    throw CLI::ValidationError("--mode", "must be dense, single-svd or cascade-svd");
}

PlatformSpec load_platform(const std::string& path) {
    if (path.empty()) return zcu111_preset();
    return load_platform_json(path);
}

struct EngineArgs {
    std::string mode = "dense";
    std::size_t m = 512, k = 512, n = 512, rank = 0;
    std::size_t m_t = 8, n_t = 8, r_t = 8, k_f = 8;
    int weight_wl = 8, act_wl = 8;

    void attach(CLI::App* cmd) {
        cmd->add_option("--mode", mode, "dense | single-svd | cascade-svd");
        cmd->add_option("--m", m, "batch rows M");
        cmd->add_option("--k", k, "input dim K");
        cmd->add_option("--n", n, "output dim N");
        cmd->add_option("--rank", rank, "decomposition rank (SVD modes)");
        cmd->add_option("--mt", m_t, "tile rows M_t");
        cmd->add_option("--nt", n_t, "tile cols N_t");
        cmd->add_option("--rt", r_t, "cascade stage-1 cols R_t");
        cmd->add_option("--kf", k_f, "PE parallel factor K_f");
        cmd->add_option("--weight-wl", weight_wl, "weight word length");
        cmd->add_option("--act-wl", act_wl, "activation word length");
    }

    EngineConfig engine() const {
        EngineConfig e;
        e.mode = parse_engine_mode(mode);
        e.rank = rank;
        if (e.mode == EngineMode::cascade_svd) {
            e.stage1 = {m_t, r_t, k_f};
            e.stage2 = {m_t, n_t, k_f};
        } else {
            e.stage1 = {m_t, n_t, k_f};
            e.stage2 = e.stage1;
        }
        return e;
    }
    LayerShape shape() const { return {m, k, n}; }
    PortBits bits() const { return {act_wl, weight_wl, act_wl}; }
};

int run(int argc, char** argv) {
    CLI::App app{"iterative tensor decomposition and FPGA design-space exploration"};
    app.require_subcommand(1);
    const std::string hash = config_hash(argc, argv);

    // decompose ---------------------------------------------------------
    auto* decompose = app.add_subcommand("decompose", "factorize a weight matrix");
    std::string dec_weights, dec_out = "decompose_out";
    std::size_t dec_rank = 8;
    int dec_wl = 8;
    uint64_t dec_seed = 0;
    decompose->add_option("--weights", dec_weights, "weight matrix (.itmx/.csv)")->required();
    decompose->add_option("--rank", dec_rank, "target rank");
    decompose->add_option("--wl", dec_wl, "weight word length");
    decompose->add_option("--seed", dec_seed, "run seed (recorded)")->required();
    decompose->add_option("--out", dec_out, "output directory");

    // sra ---------------------------------------------------------------
    auto* sra = app.add_subcommand("sra", "allocate ranks across layers");
    std::string sra_model, sra_out = "sra_out";
    std::size_t sra_budget = 0;
    int sra_wl = 8;
    uint64_t sra_seed = 0;
    SRAParams sra_params;
    sra->add_option("--model", sra_model, "directory of layer matrices")->required();
    sra->add_option("--budget", sra_budget, "total rank budget")->required();
    sra->add_option("--wl", sra_wl, "weight word length");
    sra->add_option("--seed", sra_seed, "run seed (recorded)")->required();
    sra->add_option("--delta0", sra_params.delta0, "initial perturbation");
    sra->add_option("--alpha", sra_params.alpha, "delta decay constant");
    sra->add_option("--max-iters", sra_params.max_iters, "iteration cap");
    sra->add_option("--patience", sra_params.patience, "no-improvement stop");
    sra->add_option("--out", sra_out, "output directory");

    // hwmodel -------------------------------------------------------------
    auto* hwmodel = app.add_subcommand("hwmodel", "analytical rates/latency/resources");
    EngineArgs hw_args;
    hw_args.attach(hwmodel);
    std::string hw_platform, hw_rate = "corrected", hw_out = "hwmodel_out";
    uint64_t hw_seed = 0;
    hwmodel->add_option("--platform", hw_platform, "platform JSON (default: ZCU111)");
    hwmodel->add_option("--rate-mode", hw_rate, "paper-literal | corrected");
    hwmodel->add_option("--seed", hw_seed, "run seed (recorded)")->required();
    hwmodel->add_option("--out", hw_out, "output directory");

    // simulate ------------------------------------------------------------
    auto* simulate_cmd = app.add_subcommand("simulate", "cycle-approximate dataflow run");
    EngineArgs sim_args;
    sim_args.attach(simulate_cmd);
    std::string sim_platform, sim_overlap = "double-buffered", sim_out = "simulate_out";
    bool sim_trace = false;
    uint64_t sim_seed = 0;
    simulate_cmd->add_option("--platform", sim_platform, "platform JSON (default: ZCU111)");
    simulate_cmd->add_option("--overlap", sim_overlap, "double-buffered | sequential");
    simulate_cmd->add_flag("--trace", sim_trace, "emit per-phase trace CSV");
    simulate_cmd->add_option("--seed", sim_seed, "run seed (recorded)")->required();
    simulate_cmd->add_option("--out", sim_out, "output directory");

    // dse -----------------------------------------------------------------
    auto* dse = app.add_subcommand("dse", "full compression + hardware sweep");
    std::string dse_model, dse_config, dse_platform, dse_rate = "corrected",
                dse_out = "dse_out";
    uint64_t dse_seed = 0;
    std::size_t toy_layers = 2, toy_dim = 16, batch = 16;
    dse->add_option("--model", dse_model, "directory of layer matrices (default: toy model)");
    dse->add_option("--config", dse_config, "sweep config JSON");
    dse->add_option("--platform", dse_platform, "platform JSON (default: ZCU111)");
    dse->add_option("--rate-mode", dse_rate, "paper-literal | corrected");
    dse->add_option("--seed", dse_seed, "run seed")->required();
    dse->add_option("--toy-layers", toy_layers, "toy model layer count");
    dse->add_option("--toy-dim", toy_dim, "toy model square dimension");
    dse->add_option("--batch", batch, "batch rows M");
    dse->add_option("--out", dse_out, "output directory");

    // report ----------------------------------------------------------------
    auto* report = app.add_subcommand("report", "merge hw_front.csv files");
    std::vector<std::string> rep_in;
    std::string rep_out = "report_out";
    uint64_t rep_seed = 0;
    report->add_option("--in", rep_in, "dse output directories")->required();
    report->add_option("--seed", rep_seed, "run seed (recorded)")->required();
    report->add_option("--out", rep_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    }

    if (decompose->parsed()) {
        const Matrix w = read_matrix(dec_weights);
        const auto d = iterative_decompose(w, dec_rank, dec_wl);
        save_decomposition(d, dec_out + "/factors");
        write_manifest(dec_out, "decompose", dec_seed, hash,
                       {{"weights", dec_weights}, {"rank", dec_rank}, {"wl", dec_wl}});
        std::cout << "final residual " << d.residual_norms.back() << " after rank " << d.rank
                  << '\n';
    } else if (sra->parsed()) {
        const auto layers = load_model_dir(sra_model);
        std::vector<std::size_t> caps;
        for (const auto& w : layers) caps.push_back(std::min(w.rows(), w.cols()));
        ReconstructionProxyEvaluator eval(layers, sra_wl);
        const auto res = run_sra(eval, layers.size(), sra_budget, caps, sra_params);
        fs::create_directories(sra_out);
        save_allocation_json(res.best, sra_out + "/allocation.json");
        save_trace_csv(res, sra_out + "/trace.csv");
        write_manifest(sra_out, "sra", sra_seed, hash,
                       {{"model", sra_model},
                        {"budget", sra_budget},
                        {"wl", sra_wl},
                        {"delta0", sra_params.delta0},
                        {"alpha", sra_params.alpha},
                        {"max_iters", sra_params.max_iters},
                        {"patience", sra_params.patience}});
        std::cout << "best score " << res.best_score << '\n';
    } else if (hwmodel->parsed()) {
        const PlatformSpec platform = load_platform(hw_platform);
        const RateMode mode = parse_rate_mode(hw_rate);
        const int fp = platform.f_packing_for(hw_args.weight_wl);
        const EnginePerf perf =
            engine_perf(hw_args.engine(), hw_args.shape(), hw_args.bits(), fp, mode);
        json out;
        out["cycles"] = perf.cycles;
        out["stage1_cycles"] = perf.stage1_cycles;
        out["stage2_cycles"] = perf.stage2_cycles;
        out["latency_ms"] =
            platform.clock_mhz > 0 ? double(perf.cycles) / (platform.clock_mhz * 1e3) : 0.0;
        out["dsp"] = perf.resources.dsp;
        out["bram18"] = perf.resources.bram18;
        out["bandwidth_bits_per_cycle"] = perf.resources.bandwidth_bits_per_cycle;
        out["dsp_total"] = platform.dsp_total;
        out["bram18_total"] = platform.bram18_total;
        out["occupancy"] = occupancy(hw_args.engine(), hw_args.shape());
        fs::create_directories(hw_out);
        std::ofstream os(hw_out + "/hwmodel.json");
        os << out.dump(2) << '\n';
        write_manifest(hw_out, "hwmodel", hw_seed, hash,
                       {{"rate_mode", hw_rate}, {"mode", hw_args.mode}});
        std::cout << out.dump(2) << '\n';
    } else if (simulate_cmd->parsed()) {
        const PlatformSpec platform = load_platform(sim_platform);
        SimOptions opts;
        if (sim_overlap == "double-buffered")
            opts.overlap = Overlap::double_buffered;
        else if (sim_overlap == "sequential")
            opts.overlap = Overlap::sequential;
        else
            throw CLI::ValidationError("--overlap", "must be double-buffered or sequential");
        opts.collect_trace = sim_trace;
        const auto res =
            simulate(sim_args.engine(), sim_args.shape(), platform, sim_args.bits(), opts);
        fs::create_directories(sim_out);
        {
            std::ofstream os(sim_out + "/sim.csv");
            os << "cycles,lhs_words,rhs_words,out_words,channel_stall_cycles,occupancy\n";
            os.precision(17);
            os << res.cycles << ',' << res.lhs_words << ',' << res.rhs_words << ','
               << res.out_words << ',' << res.channel_stall_cycles << ',' << res.occupancy
               << '\n';
        }
        if (sim_trace) save_trace_csv(res, sim_out + "/trace.csv");
        write_manifest(sim_out, "simulate", sim_seed, hash,
                       {{"overlap", sim_overlap}, {"mode", sim_args.mode}});
        std::cout << "cycles " << res.cycles << " occupancy " << res.occupancy << '\n';
    } else if (dse->parsed()) {
        ModelSpec model;
        if (dse_model.empty()) {
            model = make_toy_model(dse_seed, toy_layers, toy_dim, batch);
        } else {
            model.batch = batch;
            std::size_t idx = 0;
            for (auto& w : load_model_dir(dse_model))
                model.layers.push_back({"layer" + std::to_string(idx++), std::move(w)});
        }
        SweepParams params;
        params.seed = dse_seed;
        if (!dse_config.empty()) {
            std::ifstream is(dse_config);
            if (!is) throw CLI::ValidationError("--config", "cannot open " + dse_config);
            json cfg = json::parse(is);
            for (auto& [key, value] : cfg.items()) {
                if (key == "wls")
                    params.wls = value.get<std::vector<int>>();
                else if (key == "budgets")
                    params.budgets = value.get<std::vector<std::size_t>>();
                else if (key == "act_wl")
                    params.act_wl = value.get<int>();
                else if (key == "delta0")
                    params.sra.delta0 = value.get<std::size_t>();
                else if (key == "alpha")
                    params.sra.alpha = value.get<double>();
                else if (key == "max_iters")
                    params.sra.max_iters = value.get<std::size_t>();
                else if (key == "patience")
                    params.sra.patience = value.get<std::size_t>();
                else
                    throw CLI::ValidationError("--config", "unknown key: " + key);
            }
        }
        if (params.budgets.empty()) {
            std::size_t cap = SIZE_MAX;
            for (const auto& c : model.rank_caps()) cap = std::min(cap, c);
            params.budgets = {model.layer_count() * cap / 4, model.layer_count() * cap / 2};
        }
        const PlatformSpec platform = load_platform(dse_platform);
        const auto res =
            run_pipeline(model, platform, params, parse_rate_mode(dse_rate), dse_out);
        write_manifest(dse_out, "dse", dse_seed, hash,
                       {{"model", dse_model.empty() ? "toy" : dse_model},
                        {"config", dse_config},
                        {"rate_mode", dse_rate},
                        {"wls", params.wls},
                        {"budgets", params.budgets}});
        std::cout << res.sweep.size() << " sweep points, " << res.design_points.size()
                  << " design points -> " << dse_out << '\n';
    } else if (report->parsed()) {
        fs::create_directories(rep_out);
        std::ofstream os(rep_out + "/merged_summary.csv");
        bool header_written = false;
        for (const auto& dir : rep_in) {
            std::ifstream is(dir + "/hw_front.csv");
            if (!is) throw CLI::ValidationError("--in", "missing hw_front.csv in " + dir);
            std::string line;
            bool first = true;
            while (std::getline(is, line)) {
                if (first) {
                    if (!header_written) {
                        os << "source," << line << '\n';
                        header_written = true;
                    }
                    first = false;
                    continue;
                }
                if (!line.empty()) os << dir << ',' << line << '\n';
            }
        }
        write_manifest(rep_out, "report", rep_seed, hash, {{"inputs", rep_in}});
        std::cout << "merged summary -> " << rep_out << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
