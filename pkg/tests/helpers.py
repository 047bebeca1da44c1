"""Shared fixtures: unit calibration, small hardware points, bundled paths."""

from __future__ import annotations

import random

from cimdse.arch import (
    AccumulatorCal,
    AdderTreeCal,
    BufferCal,
    BusCal,
    DramCal,
    HwConfig,
    PeCal,
    TechCalibration,
    UnitCal,
)
from cimdse.configsutil import calibration_path, hw_path, model_path
from cimdse.workload import AUX_UNITS, load_model_config

TOY = load_model_config(model_path("toy"))
LLAMA_3B = load_model_config(model_path("llama3.2-3b"))


def unit_calibration(**overrides) -> TechCalibration:
    """Every coefficient set to one: cycles, pJ, mm2, 1 byte/cycle DRAM."""
    cal = TechCalibration(
        clock_hz=1e9,
        pe=PeCal(1, 1.0, 1.0, 1.0),
        adder_tree=AdderTreeCal(1, 1.0, 1.0),
        accumulator=AccumulatorCal(1.0, 1.0),
        cluster_buffer=BufferCal(1.0, 1.0, 1, 1.0),
        global_buffer=BufferCal(1.0, 1.0, 1, 1.0),
        dram=DramCal(1e9, 1.0, 1.0),
        bus=BusCal(1.0, 1),
        units={u: UnitCal(1, 1.0, 1.0) for u in AUX_UNITS},
        tech_node_nm=65,
        provenance="unit test calibration",
    )
    if overrides:
        from dataclasses import replace
        cal = replace(cal, **overrides)
    return cal


def tiny_hw(precision="int8", **overrides) -> HwConfig:
    params = dict(
        c_v=1, c_h=2, t_v_act=2, t_h_act=2, m_mult=2, p_side=2,
        bus_inter_cluster=1024, bus_inter_tile=1024, bus_intra_tile=1024,
        precision=precision,
    )
    params.update(overrides)
    return HwConfig(**params)


def reference_hw(precision="int8") -> HwConfig:
    return HwConfig(
        c_v=2, c_h=3, t_v_act=4, t_h_act=2, m_mult=1, p_side=2,
        bus_inter_cluster=4096, bus_inter_tile=4096, bus_intra_tile=4096,
        precision=precision,
    )


def random_small_hw(rng: random.Random, precision=None) -> HwConfig:
    """Small structural-only config (allowed outside the DSE ranges)."""
    return HwConfig(
        c_v=rng.randint(1, 2),
        c_h=rng.randint(1, 2),
        t_v_act=rng.randint(1, 3),
        t_h_act=rng.randint(1, 3),
        m_mult=rng.randint(1, 3),
        p_side=rng.randint(1, 2),
        bus_inter_cluster=rng.choice((512, 1024, 2048, 4096)),
        bus_inter_tile=rng.choice((512, 1024, 2048, 4096)),
        bus_intra_tile=rng.choice((512, 1024, 2048, 4096)),
        precision=precision or rng.choice(("int4", "int8")),
    )


def random_dse_hw(rng: random.Random, precision=None) -> HwConfig:
    """Config drawn from the full search-space ranges."""
    return HwConfig(
        c_v=rng.randint(1, 5),
        c_h=rng.randint(1, 5),
        t_v_act=rng.randint(2, 8),
        t_h_act=rng.randint(2, 8),
        m_mult=rng.randint(1, 8),
        p_side=rng.choice((2, 3, 4, 5, 6)),
        bus_inter_cluster=rng.choice((512, 1024, 2048, 4096)),
        bus_inter_tile=rng.choice((512, 1024, 2048, 4096)),
        bus_intra_tile=rng.choice((512, 1024, 2048, 4096)),
        precision=precision or rng.choice(("int4", "int8")),
    )


__all__ = [
    "TOY", "LLAMA_3B", "unit_calibration", "tiny_hw", "reference_hw",
    "random_small_hw", "random_dse_hw", "calibration_path", "hw_path",
    "model_path",
]
