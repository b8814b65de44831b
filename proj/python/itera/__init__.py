from ._itera import (
    EngineMode,
    EnginePerf,
    LayerShape,
    QuantizedDecomposition,
    QuantizedVector,
    RankAllocation,
    RateMode,
    ResourceEstimate,
    SimResult,
    SRAResult,
    TileConfig,
    dense_engine,
    dequantize,
    forward,
    iterative_decompose,
    quantize_vector,
    reconstruct,
    run_pipeline,
    run_sra,
    simulate,
    single_svd_engine,
    svd_baseline,
    tile_latency,
)

__all__ = [
    "EngineMode",
    "EnginePerf",
    "LayerShape",
    "QuantizedDecomposition",
    "QuantizedVector",
    "RankAllocation",
    "RateMode",
    "ResourceEstimate",
    "SimResult",
    "SRAResult",
    "TileConfig",
    "dense_engine",
    "dequantize",
    "forward",
    "iterative_decompose",
    "quantize_vector",
    "reconstruct",
    "run_pipeline",
    "run_sra",
    "simulate",
    "single_svd_engine",
    "svd_baseline",
    "tile_latency",
]
