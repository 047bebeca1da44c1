"""Decoder-only SLM workload description.

Turns a model architecture into the per-layer, per-token GEMV shapes,
auxiliary-operator element counts, and DRAM traffic of one decoding step.
Everything here is pure shape arithmetic; no tensors are ever touched.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import ConfigError


class Stage(str, Enum):
    PROJECTION_Q = "projection_q"
    PROJECTION_K = "projection_k"
    PROJECTION_V = "projection_v"
    ATTENTION_QK = "attention_qk"
    ATTENTION_SV = "attention_sv"
    LINEAR = "linear"
    FFN_UP = "ffn_up"
    FFN_GATE = "ffn_gate"
    FFN_DOWN = "ffn_down"


STAGE_ORDER: tuple[Stage, ...] = tuple(Stage)

# Dedicated hardware units that execute the non-GEMV operators.
AUX_UNITS = ("softmax", "norm", "quant", "transpose", "activation", "eltwise_mul")

PRECISIONS = ("int4", "int8")
_BITS = {"int4": 4, "int8": 8}


def bits_per_elem(precision: str) -> int:
    if precision not in _BITS:
        raise ConfigError(f"unknown precision {precision!r}, expected one of {PRECISIONS}")
    return _BITS[precision]


def elem_bytes(elements: int, precision: str) -> int:
    """Bytes occupied by `elements` packed values (int4 packs two per byte)."""
    return (elements * bits_per_elem(precision) + 7) // 8


@dataclass(frozen=True)
class ModelConfig:
    """Architecture parameters of a decoder-only model.

    num_heads * head_dim need not equal d_model; some models decouple them,
    so head_dim is stored explicitly.
    """

    name: str
    num_layers: int
    d_model: int
    num_heads: int
    num_kv_heads: int
    head_dim: int
    d_ff: int
    activation: str = "silu"
    norm: str = "rmsnorm"

    def __post_init__(self):
        for key in ("num_layers", "d_model", "num_heads", "num_kv_heads", "head_dim", "d_ff"):
            value = getattr(self, key)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{key} must be a positive integer, got {value!r}")
        if self.num_heads % self.num_kv_heads != 0:
            raise ConfigError(
                f"GQA divisibility violated: num_heads={self.num_heads} is not a "
                f"multiple of num_kv_heads={self.num_kv_heads}"
            )
        if self.activation not in ("silu", "gelu"):
            raise ConfigError(f"activation must be 'silu' or 'gelu', got {self.activation!r}")
        if self.norm not in ("rmsnorm", "layernorm"):
            raise ConfigError(f"norm must be 'rmsnorm' or 'layernorm', got {self.norm!r}")

    @property
    def gqa_group(self) -> int:
        """Query heads sharing one KV head."""
        return self.num_heads // self.num_kv_heads


@dataclass(frozen=True)
class TokenSetting:
    """Prefill / decode token counts for one run. Batch is fixed at 1."""

    prefill_tokens: int
    decode_tokens: int
    batch: int = 1

    def __post_init__(self):
        if self.prefill_tokens < 0:
            raise ConfigError("prefill_tokens must be >= 0")
        if self.decode_tokens < 1:
            raise ConfigError("decode_tokens must be >= 1")
        if self.batch != 1:
            raise ConfigError("batch is fixed at 1")


@dataclass(frozen=True)
class StageWorkload:
    """One decode stage of one layer: a GEMV plus its attached operators.

    gemv_rows is the input dimension, gemv_cols the output dimension.
    For the attention stages the shape is per query-head GEMV and the
    operand streams from the KV cache (weight_resident=False).
    """

    stage: Stage
    gemv_rows: int
    gemv_cols: int
    weight_resident: bool
    aux_ops: tuple[tuple[str, int], ...] = field(default_factory=tuple)
    dram_bytes_in: int = 0
    dram_bytes_out: int = 0


_MODEL_KEYS = (
    "name", "num_layers", "d_model", "num_heads", "num_kv_heads",
    "head_dim", "d_ff", "activation", "norm",
)


def load_model_config(path: str | Path) -> ModelConfig:
    """Load and validate a model config JSON file."""
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise exc
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    unknown = sorted(set(data) - set(_MODEL_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown key {unknown[0]!r}")
    missing = [k for k in _MODEL_KEYS if k not in data]
    if missing:
        raise ConfigError(f"{path}: missing key {missing[0]!r}")
    return ModelConfig(**data)


def decode_stage_workloads(
    m: ModelConfig, token_index: int, t: TokenSetting, precision: str
) -> list[StageWorkload]:
    """Stage workloads for one decode step of one layer, in dataflow order.

    token_index is 1-based; the attended sequence length is
    S = prefill_tokens + token_index (the current token's KV is written
    during projection and attended to in the same step).
    """
    if not 1 <= token_index <= t.decode_tokens:
        raise ValueError(
            f"token_index {token_index} out of range 1..{t.decode_tokens}"
        )
    s_len = t.prefill_tokens + token_index
    d, h, h_kv, d_h, d_ff = m.d_model, m.num_heads, m.num_kv_heads, m.head_dim, m.d_ff

    def wbytes(rows: int, cols: int) -> int:
        return elem_bytes(rows * cols, precision)

    kv_vec_bytes = elem_bytes(h_kv * d_h, precision)  # one K or V vector, all KV heads
    kv_stream_bytes = elem_bytes(h_kv * s_len * d_h, precision)  # one side of the cache

    return [
        StageWorkload(
            Stage.PROJECTION_Q, d, h * d_h, True,
            aux_ops=(("norm", d), ("quant", h * d_h)),
            dram_bytes_in=wbytes(d, h * d_h),
        ),
        StageWorkload(
            Stage.PROJECTION_K, d, h_kv * d_h, True,
            aux_ops=(("quant", h_kv * d_h), ("transpose", h_kv * d_h)),
            dram_bytes_in=wbytes(d, h_kv * d_h),
            dram_bytes_out=kv_vec_bytes,
        ),
        StageWorkload(
            Stage.PROJECTION_V, d, h_kv * d_h, True,
            aux_ops=(("quant", h_kv * d_h), ("transpose", h_kv * d_h)),
            dram_bytes_in=wbytes(d, h_kv * d_h),
            dram_bytes_out=kv_vec_bytes,
        ),
        StageWorkload(
            Stage.ATTENTION_QK, d_h, s_len, False,
            aux_ops=(("softmax", h * s_len),),
            dram_bytes_in=kv_stream_bytes,
        ),
        StageWorkload(
            Stage.ATTENTION_SV, s_len, d_h, False,
            aux_ops=(("quant", h * d_h),),
            dram_bytes_in=kv_stream_bytes,
        ),
        StageWorkload(
            Stage.LINEAR, h * d_h, d, True,
            aux_ops=(("norm", d), ("eltwise_mul", d)),  # post-norm + residual add
            dram_bytes_in=wbytes(h * d_h, d),
        ),
        StageWorkload(
            Stage.FFN_UP, d, d_ff, True,
            dram_bytes_in=wbytes(d, d_ff),
        ),
        StageWorkload(
            Stage.FFN_GATE, d, d_ff, True,
            aux_ops=(("activation", d_ff), ("eltwise_mul", d_ff)),
            dram_bytes_in=wbytes(d, d_ff),
        ),
        StageWorkload(
            Stage.FFN_DOWN, d_ff, d, True,
            aux_ops=(("eltwise_mul", d),),  # residual add
            dram_bytes_in=wbytes(d_ff, d),
        ),
    ]


def kv_cache_write_bytes(m: ModelConfig, precision: str) -> int:
    """DRAM bytes appended to the KV cache per generated token, all layers."""
    return m.num_layers * 2 * elem_bytes(m.num_kv_heads * m.head_dim, precision)
