"""Partition planning: how each stage's matrix spreads over the tile fabric.

Weight matrices are cut into partitions no larger than the active-tile
capacity and streamed from DRAM one partition at a time; with spare tiles
(m_mult >= 2) the next partition prefetches while the current one computes,
otherwise transfer and compute serialize. Heads map to clusters and cycle
through rounds when there are more heads than clusters. The KV cache streams
in blocks of b = 16*P*t_v_act rows per KV head, with the active tile columns
split between key and value processing (odd remainder to keys).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .arch import MACRO_ROWS, HwConfig, macro_cols
from .workload import ModelConfig, Stage, StageWorkload, elem_bytes


def _clog2(n: int) -> int:
    return 0 if n <= 1 else math.ceil(math.log2(n))


def _splits(total: int, cap: int) -> list[int]:
    """Chunk sizes covering `total` with chunks of at most `cap`."""
    if total <= 0:
        return []
    chunks = [cap] * (total // cap)
    if total % cap:
        chunks.append(total % cap)
    return chunks


@dataclass(frozen=True)
class PartitionStep:
    """One pipeline step: a streamed sub-block and the work done on it.

    rows/cols describe the streamed block with head-parallel slices
    concatenated along cols, so rows*cols summed over a plan reconstructs
    the stage's full weight (or KV) element count. dram_bytes is the total
    DMA traffic of the step; compute runs in parallel across par_clusters
    clusters. macs are actual (unpadded) multiply-accumulates. Cycle fields
    are filled in by pricing.
    """

    rows: int
    cols: int
    dram_bytes: int
    macs: int
    gemv_passes: int
    tree_levels: int
    tree_adds: int
    acc_ops: int
    in_elems: int     # input-vector elements read per cluster
    out_elems: int    # output elements written per cluster
    par_clusters: int
    aux: tuple[tuple[str, int], ...] = ()
    compute_cycles: int = 0
    transfer_cycles: int = 0


@dataclass(frozen=True)
class Reduction:
    tile_tree_levels: int
    cluster_tree_levels: int
    chip_tree_levels: int
    accumulator_ops: int


@dataclass(frozen=True)
class StagePlan:
    stage: Stage
    steps: tuple[PartitionStep, ...]
    overlap: str  # "double_buffered" | "serialized"
    parallel_clusters: int
    rounds: int
    reduction: Reduction
    pre_aux: tuple[tuple[str, int], ...] = ()
    post_aux: tuple[tuple[str, int], ...] = ()
    dram_bytes_out: int = 0

    def to_dict(self) -> dict:
        return {
            "stage": self.stage.value,
            "overlap": self.overlap,
            "parallel_clusters": self.parallel_clusters,
            "rounds": self.rounds,
            "reduction": vars(self.reduction).copy(),
            "pre_aux": [list(a) for a in self.pre_aux],
            "post_aux": [list(a) for a in self.post_aux],
            "dram_bytes_out": self.dram_bytes_out,
            "partitions": [
                {
                    "rows": s.rows, "cols": s.cols, "dram_bytes": s.dram_bytes,
                    "macs": s.macs, "compute_cycles": s.compute_cycles,
                    "transfer_cycles": s.transfer_cycles,
                }
                for s in self.steps
            ],
        }


def _overlap_mode(h: HwConfig) -> str:
    return "double_buffered" if h.m_mult >= 2 else "serialized"


def _tree_levels(r_rows: int, h: HwConfig, chip_wide: bool) -> tuple[int, int, int]:
    """(tile, cluster, chip) adder-tree levels reducing a block of r_rows rows."""
    segs = math.ceil(r_rows / MACRO_ROWS)
    per_tile = min(segs, h.p_side)
    tiles_v = math.ceil(segs / h.p_side)
    tile_lv = _clog2(per_tile)
    cluster_lv = _clog2(min(tiles_v, h.t_v_act))
    chip_lv = _clog2(math.ceil(tiles_v / h.t_v_act)) if chip_wide else 0
    return tile_lv, cluster_lv, chip_lv


def _segs(r_rows: int) -> int:
    return math.ceil(r_rows / MACRO_ROWS)


def _split_aux(stage: Stage, aux_ops) -> tuple[tuple, tuple]:
    """Prologue/epilogue placement of a stage's attached operators.

    The input norm on projection_q runs before its GEMVs; every other
    operator applies to stage outputs. Softmax never lands here: it is
    charged per KV block inside the attention plan.
    """
    pre = tuple((u, e) for u, e in aux_ops if u == "norm" and stage == Stage.PROJECTION_Q)
    post = tuple((u, e) for u, e in aux_ops if (u, e) not in pre and u != "softmax")
    return pre, post


def _head_rounds(heads: int, h: HwConfig) -> tuple[int, int]:
    par = min(heads, h.n_clusters)
    return par, math.ceil(heads / par)


def plan_projection(w: StageWorkload, h: HwConfig, m: ModelConfig) -> StagePlan:
    """Per-head (d_model x d_h) slices, one head per cluster, in rounds."""
    assert w.stage in (Stage.PROJECTION_Q, Stage.PROJECTION_K, Stage.PROJECTION_V)
    heads = m.num_heads if w.stage == Stage.PROJECTION_Q else m.num_kv_heads
    par, rounds = _head_rounds(heads, h)
    rows_cap = MACRO_ROWS * h.p_side * h.t_v_act
    cols_cap = macro_cols(h.precision) * h.p_side * h.t_h_act
    row_chunks = _splits(m.d_model, rows_cap)
    col_chunks = _splits(m.head_dim, cols_cap)

    steps = []
    total_acc = 0
    for ridx in range(rounds):
        hr = heads - par * (rounds - 1) if ridx == rounds - 1 else par
        for i, r in enumerate(row_chunks):
            for c in col_chunks:
                tile_lv, cluster_lv, chip_lv = _tree_levels(r, h, chip_wide=False)
                acc = c * hr if i > 0 else 0
                total_acc += acc
                steps.append(PartitionStep(
                    rows=r, cols=c * hr,
                    dram_bytes=elem_bytes(r * c * hr, h.precision),
                    macs=r * c * hr,
                    gemv_passes=1,
                    tree_levels=tile_lv + cluster_lv + chip_lv,
                    tree_adds=(_segs(r) - 1) * c * hr,
                    acc_ops=acc,
                    in_elems=r,
                    out_elems=c * hr,
                    par_clusters=hr,
                ))
    tile_lv, cluster_lv, chip_lv = _tree_levels(row_chunks[0], h, chip_wide=False)
    pre, post = _split_aux(w.stage, w.aux_ops)
    return StagePlan(
        stage=w.stage, steps=tuple(steps), overlap=_overlap_mode(h),
        parallel_clusters=par, rounds=rounds,
        reduction=Reduction(tile_lv, cluster_lv, chip_lv, total_acc),
        pre_aux=pre, post_aux=post, dram_bytes_out=w.dram_bytes_out,
    )


def attention_block_rows(h: HwConfig, s_len: int) -> list[int]:
    """KV block row counts: blocks of b = 16*P*t_v_act rows covering S."""
    return _splits(s_len, MACRO_ROWS * h.p_side * h.t_v_act)


def _kv_tile_split(h: HwConfig) -> tuple[int, int]:
    """Active tile columns given to key vs value processing.

    Odd remainder goes to keys; a single-column fabric is time-shared.
    """
    if h.t_h_act < 2:
        return 1, 1
    key = math.ceil(h.t_h_act / 2)
    return key, h.t_h_act - key


def plan_attention(w: StageWorkload, h: HwConfig, m: ModelConfig, s_len: int) -> StagePlan:
    """One plan per attention side (scores or output), blocked over the cache.

    Each cluster owns one KV head and runs its g grouped queries against
    every streamed block before the next block arrives, so per-block compute
    scales with g while transfer does not.
    """
    assert w.stage in (Stage.ATTENTION_QK, Stage.ATTENTION_SV)
    assert s_len >= 1
    g = m.gqa_group
    d_h = m.head_dim
    par, rounds = _head_rounds(m.num_kv_heads, h)
    key_t_h, value_t_h = _kv_tile_split(h)
    rows_cap = MACRO_ROWS * h.p_side * h.t_v_act
    blocks = attention_block_rows(h, s_len)

    steps = []
    total_acc = 0
    for ridx in range(rounds):
        hr = m.num_kv_heads - par * (rounds - 1) if ridx == rounds - 1 else par
        for bidx, b_rows in enumerate(blocks):
            if w.stage == Stage.ATTENTION_QK:
                # Transposed key block (d_h x b_rows) held in the key tiles.
                sub_rows = _splits(d_h, rows_cap)
                sub_cols = _splits(b_rows, macro_cols(h.precision) * h.p_side * key_t_h)
                adds = sum((_segs(r) - 1) for r in sub_rows) * b_rows
                levels = sum(sum(_tree_levels(r, h, False)) for r in sub_rows) * len(sub_cols)
                acc = (len(sub_rows) - 1) * b_rows * g * hr
                aux = (("softmax", g * b_rows * hr),)
                in_elems, out_elems = g * d_h, g * b_rows
            else:
                # Value block (b_rows x d_h) held in the value tiles.
                sub_rows = [b_rows]
                sub_cols = _splits(d_h, macro_cols(h.precision) * h.p_side * value_t_h)
                adds = (_segs(b_rows) - 1) * d_h
                levels = sum(_tree_levels(b_rows, h, False)) * len(sub_cols)
                acc = g * d_h * hr if bidx > 0 else 0  # merge block outputs
                aux = ()
                in_elems, out_elems = g * b_rows, g * d_h
            total_acc += acc
            steps.append(PartitionStep(
                rows=b_rows, cols=d_h * hr,
                dram_bytes=elem_bytes(b_rows * d_h * hr, h.precision),
                macs=g * b_rows * d_h * hr,
                gemv_passes=g * len(sub_rows) * len(sub_cols),
                tree_levels=g * levels,
                tree_adds=g * adds * hr,
                acc_ops=acc,
                in_elems=in_elems,
                out_elems=out_elems,
                par_clusters=hr,
                aux=aux,
            ))
    ref_rows = d_h if w.stage == Stage.ATTENTION_QK else blocks[0]
    tile_lv, cluster_lv, chip_lv = _tree_levels(min(ref_rows, rows_cap), h, False)
    pre, post = _split_aux(w.stage, w.aux_ops)
    return StagePlan(
        stage=w.stage, steps=tuple(steps), overlap=_overlap_mode(h),
        parallel_clusters=par, rounds=rounds,
        reduction=Reduction(tile_lv, cluster_lv, chip_lv, total_acc),
        pre_aux=pre, post_aux=post, dram_bytes_out=w.dram_bytes_out,
    )


def _plan_full_fabric(w: StageWorkload, h: HwConfig, tile_cols: int) -> StagePlan:
    """Partition a matrix over the whole chip treated as one fabric."""
    rows_cap = MACRO_ROWS * h.p_side * h.t_v_act * h.c_v
    cols_cap = macro_cols(h.precision) * h.p_side * tile_cols
    row_chunks = _splits(w.gemv_rows, rows_cap)
    col_chunks = _splits(w.gemv_cols, cols_cap)

    steps = []
    total_acc = 0
    for i, r in enumerate(row_chunks):
        for c in col_chunks:
            tile_lv, cluster_lv, chip_lv = _tree_levels(r, h, chip_wide=True)
            acc = c if i > 0 else 0
            total_acc += acc
            steps.append(PartitionStep(
                rows=r, cols=c,
                dram_bytes=elem_bytes(r * c, h.precision),
                macs=r * c,
                gemv_passes=1,
                tree_levels=tile_lv + cluster_lv + chip_lv,
                tree_adds=(_segs(r) - 1) * c,
                acc_ops=acc,
                in_elems=r,
                out_elems=c,
                par_clusters=h.n_clusters,
            ))
    tile_lv, cluster_lv, chip_lv = _tree_levels(row_chunks[0], h, chip_wide=True)
    pre, post = _split_aux(w.stage, w.aux_ops)
    return StagePlan(
        stage=w.stage, steps=tuple(steps), overlap=_overlap_mode(h),
        parallel_clusters=h.n_clusters, rounds=1,
        reduction=Reduction(tile_lv, cluster_lv, chip_lv, total_acc),
        pre_aux=pre, post_aux=post, dram_bytes_out=w.dram_bytes_out,
    )


def plan_linear(w: StageWorkload, h: HwConfig, m: ModelConfig) -> StagePlan:
    assert w.stage == Stage.LINEAR
    return _plan_full_fabric(w, h, h.c_h * h.t_h_act)


def ffn_pair_tile_cols(h: HwConfig) -> tuple[int, bool]:
    """(tile columns per FFN half, shared) - up and gate each get half the
    chip's tile columns so their partition lists pair one-to-one; a
    single-column chip is shared and the pair serializes."""
    total = h.c_h * h.t_h_act
    if total < 2:
        return total, True
    return total // 2, False


def plan_ffn(w: StageWorkload, h: HwConfig, m: ModelConfig) -> StagePlan:
    assert w.stage in (Stage.FFN_UP, Stage.FFN_GATE, Stage.FFN_DOWN)
    if w.stage == Stage.FFN_DOWN:
        return _plan_full_fabric(w, h, h.c_h * h.t_h_act)
    half_cols, _ = ffn_pair_tile_cols(h)
    return _plan_full_fabric(w, h, half_cols)


def plan_stage(w: StageWorkload, h: HwConfig, m: ModelConfig, s_len: int | None = None) -> StagePlan:
    if w.stage in (Stage.PROJECTION_Q, Stage.PROJECTION_K, Stage.PROJECTION_V):
        return plan_projection(w, h, m)
    if w.stage in (Stage.ATTENTION_QK, Stage.ATTENTION_SV):
        if s_len is None:
            raise ValueError("attention planning needs the sequence length")
        return plan_attention(w, h, m, s_len)
    if w.stage == Stage.LINEAR:
        return plan_linear(w, h, m)
    return plan_ffn(w, h, m)


def pipeline_latency(plan: StagePlan) -> int:
    """Cycles to stream and compute all partitions of a priced plan.

    Double buffering overlaps the next transfer with the current compute
    (one partition of lookahead); serialized mode alternates strictly.
    """
    if not plan.steps:
        raise ValueError("empty plan")
    t = [s.transfer_cycles for s in plan.steps]
    c = [s.compute_cycles for s in plan.steps]
    if plan.overlap == "serialized":
        return sum(t) + sum(c)
    total = t[0]
    for k in range(len(t)):
        nxt = t[k + 1] if k + 1 < len(t) else 0
        total += max(c[k], nxt)
    return total


def merge_pair_steps(a: StagePlan, b: StagePlan, serial: bool) -> list[PartitionStep]:
    """Zip two lockstep plans into shared pipeline steps.

    Transfers share the DMA link (bytes add); compute overlaps on the two
    fabric halves unless `serial` (single-column fabric time-shares).
    """
    assert len(a.steps) == len(b.steps)
    merged = []
    for sa, sb in zip(a.steps, b.steps):
        compute = sa.compute_cycles + sb.compute_cycles if serial else max(
            sa.compute_cycles, sb.compute_cycles)
        merged.append(replace(
            sa,
            cols=sa.cols + sb.cols,
            dram_bytes=sa.dram_bytes + sb.dram_bytes,
            macs=sa.macs + sb.macs,
            transfer_cycles=sa.transfer_cycles + sb.transfer_cycles,
            compute_cycles=compute,
        ))
    return merged
