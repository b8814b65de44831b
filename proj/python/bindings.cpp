#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <limits>

#include "itera/decomp.hpp"
#include "itera/dfsim.hpp"
#include "itera/dse.hpp"
#include "itera/hwmodel.hpp"
#include "itera/matrix.hpp"
#include "itera/quant.hpp"
#include "itera/sra.hpp"

namespace py = pybind11;
using namespace itera;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
    Matrix m(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + a.size(), m.data().begin());
    return m;
}

py::array_t<double> to_array(const Matrix& m) {
    py::array_t<double> a({m.rows(), m.cols()});
    std::copy(m.data().begin(), m.data().end(), a.mutable_data());
    return a;
}

}  // namespace

PYBIND11_MODULE(_itera, mod) {
    mod.doc() = "iterative tensor decomposition and FPGA design-space exploration";

    py::class_<QuantizedVector>(mod, "QuantizedVector")
        .def_readonly("codes", &QuantizedVector::codes)
        .def_readonly("scale", &QuantizedVector::scale)
        .def_readonly("wl", &QuantizedVector::wl);

    mod.def("quantize_vector", &quantize_vector, py::arg("values"), py::arg("wl"));
    mod.def("dequantize", &dequantize, py::arg("q"));

    py::class_<QuantizedDecomposition>(mod, "QuantizedDecomposition")
        .def_readonly("rank", &QuantizedDecomposition::rank)
        .def_readonly("weight_wl", &QuantizedDecomposition::weight_wl)
        .def_readonly("residual_norms", &QuantizedDecomposition::residual_norms)
        .def_readonly("early_exhausted", &QuantizedDecomposition::early_exhausted);

    mod.def(
        "iterative_decompose",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           std::size_t rank, int wl) { return iterative_decompose(to_matrix(w), rank, wl); },
        py::arg("w"), py::arg("rank"), py::arg("wl"));
    mod.def(
        "svd_baseline",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& w,
           std::size_t rank, int wl) { return svd_baseline(to_matrix(w), rank, wl); },
        py::arg("w"), py::arg("rank"), py::arg("wl"));
    mod.def("reconstruct",
            [](const QuantizedDecomposition& d) { return to_array(reconstruct(d)); },
            py::arg("d"));
    mod.def(
        "forward",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
           const QuantizedDecomposition& d, int act_wl) {
            return to_array(forward(to_matrix(x), d, act_wl));
        },
        py::arg("x"), py::arg("d"), py::arg("act_wl") = 8);

    py::class_<RankAllocation>(mod, "RankAllocation")
        .def_readonly("ranks", &RankAllocation::ranks)
        .def_readonly("budget", &RankAllocation::budget);

    py::class_<SRAResult>(mod, "SRAResult")
        .def_readonly("best", &SRAResult::best)
        .def_readonly("best_score", &SRAResult::best_score)
        .def_readonly("evaluator_probes", &SRAResult::evaluator_probes)
        .def_readonly("evaluator_misses", &SRAResult::evaluator_misses);

    mod.def(
        "run_sra",
        [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>&
               weights,
           std::size_t budget, int wl, std::size_t delta0, double alpha, std::size_t max_iters,
           std::size_t patience) {
            std::vector<Matrix> ws;
            std::vector<std::size_t> caps;
            for (const auto& w : weights) {
                ws.push_back(to_matrix(w));
                caps.push_back(std::min(ws.back().rows(), ws.back().cols()));
            }
            ReconstructionProxyEvaluator eval(ws, wl);
            SRAParams params;
            params.delta0 = delta0;
            params.alpha = alpha;
            params.max_iters = max_iters;
            params.patience = patience;
            return run_sra(eval, ws.size(), budget, caps, params);
        },
        py::arg("weights"), py::arg("budget"), py::arg("wl") = 8, py::arg("delta0") = 4,
        py::arg("alpha") = 0.5, py::arg("max_iters") = 64, py::arg("patience") = 8);

    py::enum_<RateMode>(mod, "RateMode")
        .value("paper_literal", RateMode::paper_literal)
        .value("corrected", RateMode::corrected);
    py::enum_<EngineMode>(mod, "EngineMode")
        .value("dense", EngineMode::dense)
        .value("single_svd", EngineMode::single_svd)
        .value("cascade_svd", EngineMode::cascade_svd);

    py::class_<TileConfig>(mod, "TileConfig")
        .def(py::init([](std::size_t m_t, std::size_t n_t, std::size_t k_f) {
                 return TileConfig{m_t, n_t, k_f};
             }),
             py::arg("m_t"), py::arg("n_t"), py::arg("k_f"))
        .def_readwrite("m_t", &TileConfig::m_t)
        .def_readwrite("n_t", &TileConfig::n_t)
        .def_readwrite("k_f", &TileConfig::k_f);

    py::class_<LayerShape>(mod, "LayerShape")
        .def(py::init([](std::size_t m, std::size_t k, std::size_t n) {
                 return LayerShape{m, k, n};
             }),
             py::arg("m"), py::arg("k"), py::arg("n"));

    py::class_<ResourceEstimate>(mod, "ResourceEstimate")
        .def_readonly("dsp", &ResourceEstimate::dsp)
        .def_readonly("bram18", &ResourceEstimate::bram18)
        .def_readonly("bandwidth_bits_per_cycle", &ResourceEstimate::bandwidth_bits_per_cycle);

    py::class_<EnginePerf>(mod, "EnginePerf")
        .def_readonly("cycles", &EnginePerf::cycles)
        .def_readonly("stage1_cycles", &EnginePerf::stage1_cycles)
        .def_readonly("stage2_cycles", &EnginePerf::stage2_cycles)
        .def_readonly("resources", &EnginePerf::resources);

    mod.def(
        "tile_latency",
        [](const TileConfig& t, const LayerShape& s, RateMode mode, bool lhs_on_chip) {
            return tile_latency(t, s, mode, lhs_on_chip);
        },
        py::arg("tile"), py::arg("shape"), py::arg("mode") = RateMode::corrected,
        py::arg("lhs_on_chip") = false);
    mod.def(
        "dense_engine",
        [](const TileConfig& t, const LayerShape& s, int act_wl, int weight_wl, int f_packing,
           RateMode mode) {
            return dense_engine(t, s, {act_wl, weight_wl, act_wl}, f_packing, mode);
        },
        py::arg("tile"), py::arg("shape"), py::arg("act_wl") = 8, py::arg("weight_wl") = 8,
        py::arg("f_packing") = 1, py::arg("mode") = RateMode::corrected);
    mod.def(
        "single_svd_engine",
        [](const TileConfig& t, const LayerShape& s, std::size_t rank, int act_wl, int weight_wl,
           int f_packing, RateMode mode) {
            return single_svd_engine(t, s, rank, {act_wl, weight_wl, act_wl}, f_packing, mode);
        },
        py::arg("tile"), py::arg("shape"), py::arg("rank"), py::arg("act_wl") = 8,
        py::arg("weight_wl") = 8, py::arg("f_packing") = 1,
        py::arg("mode") = RateMode::corrected);

    py::class_<SimResult>(mod, "SimResult")
        .def_readonly("cycles", &SimResult::cycles)
        .def_readonly("lhs_words", &SimResult::lhs_words)
        .def_readonly("rhs_words", &SimResult::rhs_words)
        .def_readonly("out_words", &SimResult::out_words)
        .def_readonly("channel_stall_cycles", &SimResult::channel_stall_cycles)
        .def_readonly("occupancy", &SimResult::occupancy);

    mod.def(
        "simulate",
        [](EngineMode mode, const TileConfig& stage1, const TileConfig& stage2,
           const LayerShape& shape, std::size_t rank, double bandwidth_bits_per_cycle,
           int act_wl, int weight_wl, bool sequential) {
            EngineConfig e;
            e.mode = mode;
            e.stage1 = stage1;
            e.stage2 = stage2;
            e.rank = rank;
            PlatformSpec p;
            p.dsp_total = ~0ull;
            p.bram18_total = ~0ull;
            p.bandwidth_bits_per_cycle = bandwidth_bits_per_cycle;
            p.clock_mhz = 200.0;
            SimOptions opts;
            opts.overlap = sequential ? Overlap::sequential : Overlap::double_buffered;
            opts.check_feasibility = false;
            return simulate(e, shape, p, {act_wl, weight_wl, act_wl}, opts);
        },
        py::arg("mode"), py::arg("stage1"), py::arg("stage2"), py::arg("shape"),
        py::arg("rank") = 0,
        py::arg("bandwidth_bits_per_cycle") = std::numeric_limits<double>::infinity(),
        py::arg("act_wl") = 8, py::arg("weight_wl") = 8, py::arg("sequential") = false);

    mod.def(
        "run_pipeline",
        [](uint64_t seed, std::size_t layers, std::size_t dim, std::size_t batch,
           const std::vector<int>& wls, const std::vector<std::size_t>& budgets,
           const std::string& out_dir) {
            const ModelSpec model = make_toy_model(seed, layers, dim, batch);
            SweepParams params;
            params.wls = wls;
            params.budgets = budgets;
            params.seed = seed;
            PlatformSpec platform = zcu111_preset();
            platform.bandwidth_bits_per_cycle = 4096.0;
            const auto res =
                run_pipeline(model, platform, params, RateMode::corrected, out_dir);
            return py::make_tuple(res.sweep.size(), res.design_points.size());
        },
        py::arg("seed"), py::arg("layers"), py::arg("dim"), py::arg("batch"), py::arg("wls"),
        py::arg("budgets"), py::arg("out_dir"));
}
