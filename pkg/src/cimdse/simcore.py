"""Prices stage plans with a technology calibration and rolls up metrics.

Cycle accounting is all-integer so independent schedulers reproduce it
exactly. Energy is accumulated as math.fsum over the multiset of atomic
picojoule terms (one fsum per stage instance, one over instances, one over
stages), which is order-independent and therefore bit-reproducible by an
event-driven re-aggregation of the same terms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .arch import HwConfig, TechCalibration, chip_area, validate
from .errors import HwValidationError
from .mapper import (
    PartitionStep,
    StagePlan,
    ffn_pair_tile_cols,
    merge_pair_steps,
    pipeline_latency,
    plan_stage,
)
from .workload import (
    STAGE_ORDER,
    ModelConfig,
    Stage,
    StageWorkload,
    TokenSetting,
    bits_per_elem,
    decode_stage_workloads,
    elem_bytes,
)


def fixed_latency_cycles(cal: TechCalibration) -> int:
    return math.ceil(cal.dram.fixed_latency_ns * 1e-9 * cal.clock_hz)


def dram_cycles(n_bytes: int, cal: TechCalibration) -> int:
    if n_bytes == 0:
        return 0
    return math.ceil(n_bytes / (cal.dram.bandwidth_bytes_per_s / cal.clock_hz))


def transfer_cycles(n_bytes: int, par_clusters: int, h: HwConfig, cal: TechCalibration) -> int:
    """Cycles to stream one burst: DRAM (plus one fixed-latency charge per
    burst) against the slowest bus leg. The inter-cluster trunk carries the
    whole burst; the per-cluster legs carry only that cluster's slice."""
    per_cluster = math.ceil(n_bytes / max(par_clusters, 1))
    beat = cal.bus.cycles_per_beat
    return max(
        dram_cycles(n_bytes, cal) + fixed_latency_cycles(cal),
        math.ceil(n_bytes * 8 / h.bus_inter_cluster) * beat,
        math.ceil(per_cluster * 8 / h.bus_inter_tile) * beat,
        math.ceil(per_cluster * 8 / h.bus_intra_tile) * beat,
    )


def step_compute_cycles(step: PartitionStep, h: HwConfig, cal: TechCalibration) -> int:
    """Bit-serial GEMV passes plus reduction tree plus block-attached units."""
    cycles = step.gemv_passes * bits_per_elem(h.precision) * cal.pe.cycles_per_input_bit
    cycles += step.tree_levels * cal.adder_tree.cycles_per_level
    for unit, elems in step.aux:
        cycles += elems * cal.units[unit].cycles_per_element
    return cycles


def step_energy_atoms(step: PartitionStep, h: HwConfig, cal: TechCalibration) -> list[float]:
    """Atomic pJ terms of one step. Phantom (padding) MACs are never charged;
    weight bytes are charged once into the macros and once through each of
    the three bus legs, DRAM, and the global-buffer staging."""
    atoms = [
        step.macs * cal.pe.energy_pj_per_mac,
        step.dram_bytes * cal.pe.weight_write_energy_pj_per_byte,
        step.tree_adds * cal.adder_tree.energy_pj_per_add,
        step.acc_ops * cal.accumulator.energy_pj_per_acc,
        step.dram_bytes * cal.dram.energy_pj_per_byte,
        step.dram_bytes * 8 * cal.bus.energy_pj_per_bit * 3,
        step.dram_bytes * (cal.global_buffer.write_pj_per_byte + cal.global_buffer.read_pj_per_byte),
        elem_bytes(step.in_elems, h.precision) * step.par_clusters * cal.cluster_buffer.read_pj_per_byte,
        step.out_elems * step.par_clusters * cal.cluster_buffer.write_pj_per_byte,
    ]
    for unit, elems in step.aux:
        atoms.append(elems * cal.units[unit].energy_pj_per_element)
    return atoms


def _aux_cycles(aux, cal: TechCalibration) -> int:
    return sum(elems * cal.units[unit].cycles_per_element for unit, elems in aux)


def _aux_atoms(aux, cal: TechCalibration) -> list[float]:
    return [elems * cal.units[unit].energy_pj_per_element for unit, elems in aux]


def _writeback_atoms(n_bytes: int, cal: TechCalibration) -> list[float]:
    return [
        n_bytes * cal.dram.energy_pj_per_byte,
        n_bytes * 8 * cal.bus.energy_pj_per_bit * 3,
        n_bytes * cal.global_buffer.write_pj_per_byte,
    ]


@dataclass(frozen=True)
class PricedPlan:
    """A plan with cycle fields filled plus its stage totals."""

    plan: StagePlan
    cycles: int
    energy_pj: float
    pre_cycles: int
    pipeline_cycles: int
    post_cycles: int
    energy_atoms: tuple[float, ...]
    dram_bytes: int


def fill_step_cycles(plan: StagePlan, h: HwConfig, cal: TechCalibration) -> StagePlan:
    steps = tuple(
        replace(
            s,
            compute_cycles=step_compute_cycles(s, h, cal),
            transfer_cycles=transfer_cycles(s.dram_bytes, s.par_clusters, h, cal),
        )
        for s in plan.steps
    )
    return replace(plan, steps=steps)


def price_plan(plan: StagePlan, cal: TechCalibration, h: HwConfig) -> PricedPlan:
    """Stage totals: prologue + streamed pipeline + epilogue (including any
    KV write-back burst), and the flat list of energy atoms."""
    filled = fill_step_cycles(plan, h, cal)
    pre = _aux_cycles(plan.pre_aux, cal) + cal.cluster_buffer.cycles_per_access
    post = _aux_cycles(plan.post_aux, cal) + cal.global_buffer.cycles_per_access
    if plan.dram_bytes_out:
        post += transfer_cycles(plan.dram_bytes_out, 1, h, cal)
    pipe = pipeline_latency(filled)
    atoms: list[float] = []
    for s in filled.steps:
        atoms.extend(step_energy_atoms(s, h, cal))
    atoms.extend(_aux_atoms(plan.pre_aux, cal))
    atoms.extend(_aux_atoms(plan.post_aux, cal))
    if plan.dram_bytes_out:
        atoms.extend(_writeback_atoms(plan.dram_bytes_out, cal))
    total_bytes = sum(s.dram_bytes for s in plan.steps) + plan.dram_bytes_out
    return PricedPlan(
        plan=filled,
        cycles=pre + pipe + post,
        energy_pj=math.fsum(atoms),
        pre_cycles=pre,
        pipeline_cycles=pipe,
        post_cycles=post,
        energy_atoms=tuple(atoms),
        dram_bytes=total_bytes,
    )


def price_ffn_pair(
    up: StagePlan, gate: StagePlan, cal: TechCalibration, h: HwConfig
) -> tuple[PricedPlan, PricedPlan]:
    """Price the concurrently-executing up/gate pair.

    Their lockstep partitions share the DMA link and compute on separate
    fabric halves (serially on a shared single-column fabric); the merged
    pipeline latency is split evenly between the two stage reports, with
    the odd cycle going to up.
    """
    up_f = fill_step_cycles(up, h, cal)
    gate_f = fill_step_cycles(gate, h, cal)
    _, serial = ffn_pair_tile_cols(h)
    merged = merge_pair_steps(up_f, gate_f, serial)
    pipe = pipeline_latency(replace(up_f, steps=tuple(merged)))

    priced = []
    for plan_f, raw, share in ((up_f, up, pipe - pipe // 2), (gate_f, gate, pipe // 2)):
        pre = _aux_cycles(raw.pre_aux, cal) + cal.cluster_buffer.cycles_per_access
        post = _aux_cycles(raw.post_aux, cal) + cal.global_buffer.cycles_per_access
        atoms: list[float] = []
        for s in plan_f.steps:
            atoms.extend(step_energy_atoms(s, h, cal))
        atoms.extend(_aux_atoms(raw.pre_aux, cal))
        atoms.extend(_aux_atoms(raw.post_aux, cal))
        priced.append(PricedPlan(
            plan=plan_f,
            cycles=pre + share + post,
            energy_pj=math.fsum(atoms),
            pre_cycles=pre,
            pipeline_cycles=share,
            post_cycles=post,
            energy_atoms=tuple(atoms),
            dram_bytes=sum(s.dram_bytes for s in plan_f.steps),
        ))
    return priced[0], priced[1]


@dataclass(frozen=True)
class StageMetrics:
    cycles: int
    energy_pj: float
    dram_bytes: int


@dataclass(frozen=True)
class Metrics:
    latency_s: float
    energy_j: float
    area_mm2: float
    per_stage: dict
    throughput_tok_s: float
    efficiency_tok_j: float
    total_cycles: int

    def to_dict(self) -> dict:
        return {
            "latency_s": self.latency_s,
            "energy_j": self.energy_j,
            "area_mm2": self.area_mm2,
            "throughput_tok_s": self.throughput_tok_s,
            "efficiency_tok_j": self.efficiency_tok_j,
            "total_cycles": self.total_cycles,
            "per_stage": {
                stage.value: {
                    "cycles": sm.cycles,
                    "energy_pj": sm.energy_pj,
                    "dram_bytes": sm.dram_bytes,
                }
                for stage, sm in self.per_stage.items()
            },
        }


_ATTENTION = (Stage.ATTENTION_QK, Stage.ATTENTION_SV)


def build_plans(
    m: ModelConfig, h: HwConfig, t: TokenSetting, token_index: int
) -> dict[Stage, StagePlan]:
    """All nine stage plans for one decode step of one layer."""
    s_len = t.prefill_tokens + token_index
    plans = {}
    for w in decode_stage_workloads(m, token_index, t, h.precision):
        plans[w.stage] = plan_stage(w, h, m, s_len)
    return plans


def _price_all(
    m: ModelConfig, h: HwConfig, cal: TechCalibration, t: TokenSetting, token_index: int
) -> dict[Stage, PricedPlan]:
    plans = build_plans(m, h, t, token_index)
    priced = {
        stage: price_plan(plan, cal, h)
        for stage, plan in plans.items()
        if stage not in (Stage.FFN_UP, Stage.FFN_GATE)
    }
    up, gate = price_ffn_pair(plans[Stage.FFN_UP], plans[Stage.FFN_GATE], cal, h)
    priced[Stage.FFN_UP] = up
    priced[Stage.FFN_GATE] = gate
    return priced


def simulate_decode(
    m: ModelConfig, h: HwConfig, cal: TechCalibration, t: TokenSetting
) -> Metrics:
    """Walk every decode step through every layer and aggregate metrics.

    All layers of a step are identical, so each stage is priced once per
    step and weighted by num_layers; only the attention stages change with
    the step (the attended length grows by one per generated token).
    """
    violations = validate(h, dse_mode=False)
    if violations:
        raise HwValidationError(violations)
    layers = m.num_layers

    base = _price_all(m, h, cal, t, 1)
    fixed = {stage: pr for stage, pr in base.items() if stage not in _ATTENTION}

    cycles = {stage: 0 for stage in STAGE_ORDER}
    nbytes = {stage: 0 for stage in STAGE_ORDER}
    instance_energy: dict[Stage, list[tuple[float, int]]] = {stage: [] for stage in STAGE_ORDER}

    for stage, pr in fixed.items():
        cycles[stage] = pr.cycles * layers * t.decode_tokens
        nbytes[stage] = pr.dram_bytes * layers * t.decode_tokens
        instance_energy[stage].append((pr.energy_pj, layers * t.decode_tokens))

    for token_index in range(1, t.decode_tokens + 1):
        priced = base if token_index == 1 else None
        for stage in _ATTENTION:
            if priced is None:
                s_len = t.prefill_tokens + token_index
                w = _attention_workload(m, token_index, t, h.precision, stage)
                pr = price_plan(plan_stage(w, h, m, s_len), cal, h)
            else:
                pr = priced[stage]
            cycles[stage] += pr.cycles * layers
            nbytes[stage] += pr.dram_bytes * layers
            instance_energy[stage].append((pr.energy_pj, layers))

    per_stage = {}
    stage_pj = []
    for stage in STAGE_ORDER:
        pj = math.fsum(
            e for e, count in instance_energy[stage] for _ in range(count)
        )
        stage_pj.append(pj)
        per_stage[stage] = StageMetrics(cycles[stage], pj, nbytes[stage])

    total_cycles = sum(cycles.values())
    latency_s = total_cycles / cal.clock_hz
    energy_j = math.fsum(stage_pj) * 1e-12
    return Metrics(
        latency_s=latency_s,
        energy_j=energy_j,
        area_mm2=chip_area(h, cal),
        per_stage=per_stage,
        throughput_tok_s=t.decode_tokens / latency_s,
        efficiency_tok_j=t.decode_tokens / energy_j,
        total_cycles=total_cycles,
    )


def _attention_workload(
    m: ModelConfig, token_index: int, t: TokenSetting, precision: str, stage: Stage
) -> StageWorkload:
    for w in decode_stage_workloads(m, token_index, t, precision):
        if w.stage == stage:
            return w
    raise AssertionError(stage)


def roofline_bound(
    m: ModelConfig, h: HwConfig, cal: TechCalibration, t: TokenSetting
) -> float:
    """Hard latency lower bound: every DRAM byte moved, at full bandwidth."""
    total = 0
    for token_index in range(1, t.decode_tokens + 1):
        step = sum(
            w.dram_bytes_in + w.dram_bytes_out
            for w in decode_stage_workloads(m, token_index, t, h.precision)
        )
        total += step * m.num_layers
    return total / cal.dram.bandwidth_bytes_per_s
