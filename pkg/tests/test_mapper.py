import math
import random
from dataclasses import replace

import pytest

from cimdse.mapper import (
    PartitionStep,
    Reduction,
    StagePlan,
    attention_block_rows,
    pipeline_latency,
    plan_attention,
    plan_ffn,
    plan_linear,
    plan_projection,
    plan_stage,
)
from cimdse.workload import Stage, TokenSetting, decode_stage_workloads

from des_oracle import des_pipeline_latency
from helpers import LLAMA_3B, TOY, random_small_hw, reference_hw, tiny_hw


def workloads(model, token_index=1, prefill=0, decode=4, precision="int8"):
    ws = decode_stage_workloads(model, token_index, TokenSetting(prefill, decode), precision)
    return {w.stage: w for w in ws}


def make_plan(steps, overlap="double_buffered"):
    return StagePlan(Stage.LINEAR, tuple(steps), overlap, 1, 1, Reduction(0, 0, 0, 0))


def make_step(transfer, compute):
    return PartitionStep(rows=1, cols=1, dram_bytes=0, macs=0, gemv_passes=0,
                         tree_levels=0, tree_adds=0, acc_ops=0, in_elems=0,
                         out_elems=0, par_clusters=1,
                         compute_cycles=compute, transfer_cycles=transfer)


class TestProjectionPlanning:
    def test_toy_heads_fit_clusters(self):
        ws = workloads(TOY)
        plan = plan_projection(ws[Stage.PROJECTION_Q], tiny_hw(), TOY)
        assert plan.parallel_clusters == 2
        assert plan.rounds == 1

    def test_llama_q_rounds_on_reference(self):
        # 24 query heads over 6 clusters: frozen from head-round enumeration.
        ws = workloads(LLAMA_3B)
        plan = plan_projection(ws[Stage.PROJECTION_Q], reference_hw(), LLAMA_3B)
        assert plan.parallel_clusters == 6
        assert plan.rounds == 4

    def test_kv_heads_use_kv_count(self):
        ws = workloads(LLAMA_3B)
        plan = plan_projection(ws[Stage.PROJECTION_K], reference_hw(), LLAMA_3B)
        assert plan.rounds == math.ceil(8 / 6)

    def test_weight_conservation(self):
        for h in (tiny_hw(), reference_hw(), reference_hw("int4")):
            for stage in (Stage.PROJECTION_Q, Stage.PROJECTION_K, Stage.PROJECTION_V):
                w = workloads(LLAMA_3B, precision=h.precision)[stage]
                plan = plan_projection(w, h, LLAMA_3B)
                assert sum(s.rows * s.cols for s in plan.steps) == w.gemv_rows * w.gemv_cols

    def test_overlap_follows_spare_tiles(self):
        ws = workloads(TOY)
        assert plan_projection(ws[Stage.PROJECTION_Q], tiny_hw(m_mult=2), TOY).overlap \
            == "double_buffered"
        assert plan_projection(ws[Stage.PROJECTION_Q], tiny_hw(m_mult=1), TOY).overlap \
            == "serialized"

    def test_fabric_growth_never_adds_partitions(self):
        w = workloads(LLAMA_3B)[Stage.PROJECTION_Q]
        base = tiny_hw()
        n_base = len(plan_projection(w, base, LLAMA_3B).steps)
        for key in ("t_v_act", "t_h_act"):
            grown = replace(base, **{key: getattr(base, key) + 1})
            assert len(plan_projection(w, grown, LLAMA_3B).steps) <= n_base


class TestAttentionPlanning:
    def test_single_token_single_block(self):
        for h in (tiny_hw(), reference_hw()):
            w = workloads(TOY, token_index=1, prefill=0)[Stage.ATTENTION_QK]
            plan = plan_attention(w, h, TOY, 1)
            assert len(plan.steps) == plan.rounds  # one block per head round
            per_head = plan.steps[0].dram_bytes // plan.steps[0].par_clusters
            assert per_head == 16  # d_h=16 elements at one byte each

    def test_block_rows_conserve_sequence(self):
        h = tiny_hw(p_side=2, t_v_act=2, t_h_act=2)
        blocks = attention_block_rows(h, 100)
        assert blocks == [64, 36]  # b = 16*2*2, frozen from block enumeration
        assert sum(blocks) == 100

    def test_kv_element_conservation(self):
        rng = random.Random(3)
        for _ in range(10):
            h = random_small_hw(rng)
            s_len = rng.randint(1, 300)
            for stage in (Stage.ATTENTION_QK, Stage.ATTENTION_SV):
                w = workloads(LLAMA_3B, precision=h.precision)[stage]
                plan = plan_attention(w, h, LLAMA_3B, s_len)
                total = sum(s.rows * s.cols for s in plan.steps)
                assert total == s_len * LLAMA_3B.head_dim * LLAMA_3B.num_kv_heads

    def test_gqa_reuse_scales_compute_not_transfer(self):
        # Same KV geometry, three query heads per KV head vs one.
        m3 = replace(LLAMA_3B, num_heads=24, num_kv_heads=8)   # g = 3
        m1 = replace(LLAMA_3B, num_heads=8, num_kv_heads=8)    # g = 1
        h = reference_hw()
        w3 = workloads(m3)[Stage.ATTENTION_QK]
        w1 = workloads(m1)[Stage.ATTENTION_QK]
        p3 = plan_attention(w3, h, m3, 64)
        p1 = plan_attention(w1, h, m1, 64)
        for s3, s1 in zip(p3.steps, p1.steps):
            assert s3.dram_bytes == s1.dram_bytes
            assert s3.gemv_passes == 3 * s1.gemv_passes
            assert s3.tree_levels == 3 * s1.tree_levels
            assert s3.macs == 3 * s1.macs

    def test_softmax_attached_blockwise(self):
        h = reference_hw()
        w = workloads(LLAMA_3B, prefill=100)[Stage.ATTENTION_QK]
        plan = plan_attention(w, h, LLAMA_3B, 101)
        softmax_total = sum(e for s in plan.steps for u, e in s.aux if u == "softmax")
        assert softmax_total == LLAMA_3B.num_heads * 101  # H * S


class TestLinearAndFfnPlanning:
    def test_toy_linear_single_partition(self):
        h = tiny_hw()  # chip capacity 64 rows x 32 cols at int8 >= 32x32
        w = workloads(TOY)[Stage.LINEAR]
        plan = plan_linear(w, h, TOY)
        assert len(plan.steps) == 1
        assert plan.steps[0].rows == 32 and plan.steps[0].cols == 32

    def test_halved_fabric_doubles_partitions(self):
        w = workloads(LLAMA_3B)[Stage.LINEAR]
        wide = tiny_hw(t_h_act=4)
        narrow = tiny_hw(t_h_act=2)
        n_wide = len(plan_linear(w, wide, LLAMA_3B).steps)
        n_narrow = len(plan_linear(w, narrow, LLAMA_3B).steps)
        assert n_narrow == 2 * n_wide

    def test_ffn_pair_interleaves_identically(self):
        h = reference_hw()
        ws = workloads(LLAMA_3B)
        up = plan_ffn(ws[Stage.FFN_UP], h, LLAMA_3B)
        gate = plan_ffn(ws[Stage.FFN_GATE], h, LLAMA_3B)
        assert len(up.steps) == len(gate.steps)
        for su, sg in zip(up.steps, gate.steps):
            assert (su.rows, su.cols) == (sg.rows, sg.cols)
        total = sum(s.rows * s.cols for s in up.steps + gate.steps)
        assert total == 2 * LLAMA_3B.d_model * LLAMA_3B.d_ff

    def test_ffn_down_conserves(self):
        h = reference_hw("int4")
        w = workloads(LLAMA_3B, precision="int4")[Stage.FFN_DOWN]
        plan = plan_ffn(w, h, LLAMA_3B)
        assert sum(s.rows * s.cols for s in plan.steps) == LLAMA_3B.d_ff * LLAMA_3B.d_model

    def test_chip_level_reduction_populated(self):
        h = reference_hw()  # c_v = 2, so chip trees merge two cluster rows
        w = workloads(LLAMA_3B)[Stage.LINEAR]
        plan = plan_linear(w, h, LLAMA_3B)
        assert plan.reduction.chip_tree_levels >= 1


class TestPipelineLatency:
    def test_double_buffered_example(self):
        plan = make_plan([make_step(15, 10)] * 3)
        assert pipeline_latency(plan) == 55

    def test_serialized_example(self):
        plan = make_plan([make_step(15, 10)] * 3, overlap="serialized")
        assert pipeline_latency(plan) == 75

    def test_single_partition_no_overlap_possible(self):
        for overlap in ("double_buffered", "serialized"):
            plan = make_plan([make_step(7, 3)], overlap=overlap)
            assert pipeline_latency(plan) == 10

    def test_empty_plan_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            pipeline_latency(make_plan([]))

    def test_double_buffered_never_slower(self):
        rng = random.Random(11)
        for _ in range(300):
            steps = [make_step(rng.randint(0, 50), rng.randint(0, 50))
                     for _ in range(rng.randint(1, 12))]
            db = pipeline_latency(make_plan(steps))
            ser = pipeline_latency(make_plan(steps, overlap="serialized"))
            assert db <= ser

    def test_matches_event_driven_oracle(self):
        rng = random.Random(5)
        for _ in range(500):
            steps = [make_step(rng.randint(0, 100), rng.randint(0, 100))
                     for _ in range(rng.randint(1, 16))]
            for overlap in ("double_buffered", "serialized"):
                plan = make_plan(steps, overlap=overlap)
                want = des_pipeline_latency(
                    [s.transfer_cycles for s in steps],
                    [s.compute_cycles for s in steps], overlap)
                assert pipeline_latency(plan) == want


def test_plan_stage_dispatch_and_dump():
    h = tiny_hw()
    t = TokenSetting(0, 1)
    for w in decode_stage_workloads(TOY, 1, t, "int8"):
        plan = plan_stage(w, h, TOY, s_len=1)
        assert plan.stage == w.stage
        d = plan.to_dict()
        assert d["stage"] == w.stage.value
        assert len(d["partitions"]) == len(plan.steps)


def test_attention_requires_sequence_length():
    w = workloads(TOY)[Stage.ATTENTION_QK]
    with pytest.raises(ValueError, match="sequence length"):
        plan_stage(w, tiny_hw(), TOY)
