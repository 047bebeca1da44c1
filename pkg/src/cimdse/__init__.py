"""Analytical decode-phase simulator and design-space explorer for tiled
compute-in-memory accelerators running decoder-only small language models."""

from .arch import (
    HwConfig,
    TechCalibration,
    chip_area,
    enumerate_space_size,
    load_calibration,
    load_hw_config,
    pe_tile_capacity,
    validate,
)
from .dse import (
    FULL_SPACE,
    REDUCED_1K,
    GaSettings,
    SearchSpace,
    cost,
    exhaustive_search,
    pareto_front,
    poly_mutation,
    run_ga,
    sbx_crossover,
    scalar_cost,
)
from .errors import ConfigError, HwValidationError, SpaceTooLargeError
from .mapper import (
    StagePlan,
    pipeline_latency,
    plan_attention,
    plan_ffn,
    plan_linear,
    plan_projection,
    plan_stage,
)
from .simcore import Metrics, price_plan, roofline_bound, simulate_decode
from .workload import (
    ModelConfig,
    Stage,
    StageWorkload,
    TokenSetting,
    decode_stage_workloads,
    kv_cache_write_bytes,
    load_model_config,
)

__version__ = "0.1.0"
