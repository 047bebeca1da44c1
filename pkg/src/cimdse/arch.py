"""Hardware design points and the technology calibration that prices them.

A design point is a tiled hierarchy: a (c_v x c_h) grid of clusters, each
holding t_total tiles of which an active (t_v_act x t_h_act) sub-grid
computes while the spare tiles (m_mult >= 2) prefetch the next weight
partition. Every tile is a (P x P) array of 16x16 bit-serial in-memory
macros. All latency/energy/area coefficients come from a calibration file
standing in for external circuit characterization.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

MACRO_ROWS = 16          # weight rows per macro
MACRO_COL_SLICES = 16    # 4-bit column slices per macro

# Search ranges used when validating in DSE mode.
DSE_CLUSTER_RANGE = (1, 5)
DSE_ACTIVE_TILE_RANGE = (2, 8)
DSE_MULTIPLIER_RANGE = (1, 8)
DSE_PE_GRID_OPTIONS = (4, 9, 16, 25, 36)   # P^2
DSE_BUS_OPTIONS = (512, 1024, 2048, 4096)  # bits


def macro_cols(precision: str) -> int:
    """Weights per macro row: int4 uses one column slice, int8 pairs two."""
    if precision == "int4":
        return MACRO_COL_SLICES
    if precision == "int8":
        return MACRO_COL_SLICES // 2
    raise ConfigError(f"unknown precision {precision!r}")


@dataclass(frozen=True)
class HwConfig:
    c_v: int
    c_h: int
    t_v_act: int
    t_h_act: int
    m_mult: int | float
    p_side: int
    bus_inter_cluster: int
    bus_inter_tile: int
    bus_intra_tile: int
    precision: str = "int8"

    @property
    def n_clusters(self) -> int:
        return self.c_v * self.c_h

    @property
    def t_active(self) -> int:
        return self.t_v_act * self.t_h_act

    @property
    def t_total(self) -> int:
        return int(round(self.m_mult * self.t_active))

    @property
    def pe_per_tile(self) -> int:
        return self.p_side * self.p_side


def validate(h: HwConfig, dse_mode: bool = False) -> list[str]:
    """Return every violated constraint (empty list means the point is valid).

    dse_mode additionally enforces the search-space ranges; without it only
    structural invariants are checked, so deliberately tiny test configs pass.
    """
    v: list[str] = []
    for key in ("c_v", "c_h", "t_v_act", "t_h_act", "p_side",
                "bus_inter_cluster", "bus_inter_tile", "bus_intra_tile"):
        value = getattr(h, key)
        if not isinstance(value, int) or value < 1:
            v.append(f"{key} must be a positive integer, got {value!r}")
    if isinstance(h.m_mult, float) and not h.m_mult.is_integer():
        v.append(f"non-integral m_mult: t_total is not a multiple of the active grid ({h.m_mult})")
    elif h.m_mult < 1:
        v.append(f"m_mult must be >= 1, got {h.m_mult!r}")
    if h.precision not in ("int4", "int8"):
        v.append(f"precision must be int4 or int8, got {h.precision!r}")

    if dse_mode and not v:
        lo, hi = DSE_CLUSTER_RANGE
        for key in ("c_v", "c_h"):
            value = getattr(h, key)
            if not lo <= value <= hi:
                v.append(f"{key}={value} outside {lo}..{hi}")
        lo, hi = DSE_ACTIVE_TILE_RANGE
        for key in ("t_v_act", "t_h_act"):
            value = getattr(h, key)
            if value < lo:
                v.append(f"{key} below {lo}")
            elif value > hi:
                v.append(f"{key} above {hi}")
        lo, hi = DSE_MULTIPLIER_RANGE
        if not lo <= h.m_mult <= hi:
            v.append(f"m_mult={h.m_mult} outside {lo}..{hi}")
        if h.pe_per_tile not in DSE_PE_GRID_OPTIONS:
            v.append(f"P^2={h.pe_per_tile} not in {DSE_PE_GRID_OPTIONS}")
        for key in ("bus_inter_cluster", "bus_inter_tile", "bus_intra_tile"):
            value = getattr(h, key)
            if value not in DSE_BUS_OPTIONS:
                v.append(f"{key}={value} not in {DSE_BUS_OPTIONS}")
    return v


def enumerate_space_size(space=None) -> int:
    """Number of design points in the (possibly restricted) search space."""
    if space is None:
        from .dse import FULL_SPACE
        space = FULL_SPACE
    return space.size()


def pe_tile_capacity(h: HwConfig) -> tuple[int, int]:
    """(rows, cols) of weights one tile holds at the config's precision."""
    return MACRO_ROWS * h.p_side, macro_cols(h.precision) * h.p_side


@dataclass(frozen=True)
class PeCal:
    cycles_per_input_bit: int
    energy_pj_per_mac: float
    area_mm2: float
    weight_write_energy_pj_per_byte: float


@dataclass(frozen=True)
class AdderTreeCal:
    cycles_per_level: int
    energy_pj_per_add: float
    area_mm2_per_input: float


@dataclass(frozen=True)
class AccumulatorCal:
    energy_pj_per_acc: float
    area_mm2: float


@dataclass(frozen=True)
class BufferCal:
    read_pj_per_byte: float
    write_pj_per_byte: float
    cycles_per_access: int
    area_mm2: float


@dataclass(frozen=True)
class DramCal:
    bandwidth_bytes_per_s: float
    energy_pj_per_byte: float
    fixed_latency_ns: float


@dataclass(frozen=True)
class BusCal:
    energy_pj_per_bit: float
    cycles_per_beat: int = 1


@dataclass(frozen=True)
class UnitCal:
    cycles_per_element: int
    energy_pj_per_element: float
    area_mm2: float


@dataclass(frozen=True)
class TechCalibration:
    clock_hz: float
    pe: PeCal
    adder_tree: AdderTreeCal
    accumulator: AccumulatorCal
    cluster_buffer: BufferCal
    global_buffer: BufferCal
    dram: DramCal
    bus: BusCal
    units: dict  # unit name -> UnitCal, keys = workload.AUX_UNITS
    tech_node_nm: int = 65
    provenance: str = ""


_CAL_SECTIONS = {
    "pe": PeCal,
    "adder_tree": AdderTreeCal,
    "accumulator": AccumulatorCal,
    "cluster_buffer": BufferCal,
    "global_buffer": BufferCal,
    "dram": DramCal,
    "bus": BusCal,
}

_UNIT_NAMES = ("softmax", "norm", "quant", "transpose", "activation", "eltwise_mul")


def _build_section(cls, data: dict, where: str):
    fields = cls.__dataclass_fields__
    for key in data:
        if key not in fields:
            raise ConfigError(f"calibration {where}: unknown key {key!r}")
    for key in fields:
        if key not in data:
            raise ConfigError(f"calibration {where}: missing key {key!r}")
        if not isinstance(data[key], (int, float)) or data[key] <= 0:
            raise ConfigError(f"calibration {where}.{key}: must be a positive number")
    return cls(**data)


def load_calibration(path: str | Path) -> TechCalibration:
    """Load a calibration JSON file, checking every coefficient is present and positive."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    for key in ("tech_node_nm", "provenance", "clock_hz", "units"):
        if key not in data:
            raise ConfigError(f"{path}: missing key {key!r}")
    sections = {}
    for name, cls in _CAL_SECTIONS.items():
        if name not in data:
            raise ConfigError(f"{path}: missing section {name!r}")
        sections[name] = _build_section(cls, data[name], name)
    units = {}
    for unit in _UNIT_NAMES:
        if unit not in data["units"]:
            raise ConfigError(f"{path}: missing unit {unit!r}")
        units[unit] = _build_section(UnitCal, data["units"][unit], f"units.{unit}")
    if data["clock_hz"] <= 0:
        raise ConfigError(f"{path}: clock_hz must be positive")
    return TechCalibration(
        clock_hz=float(data["clock_hz"]),
        units=units,
        tech_node_nm=int(data["tech_node_nm"]),
        provenance=str(data["provenance"]),
        **sections,
    )


def chip_area(h: HwConfig, cal: TechCalibration) -> float:
    """Chip area in mm2: every instantiated component times its calibrated area.

    Instance counts: one adder tree per tile (P^2 inputs), one per cluster
    (t_total inputs), one chip-level tree (n_clusters inputs); accumulators
    one per cluster plus one chip-level; one functional-unit set per cluster.
    """
    n_clusters = h.n_clusters
    n_tiles = n_clusters * h.t_total
    n_macros = n_tiles * h.pe_per_tile
    area = n_macros * cal.pe.area_mm2
    area += n_tiles * h.pe_per_tile * cal.adder_tree.area_mm2_per_input
    area += n_clusters * h.t_total * cal.adder_tree.area_mm2_per_input
    area += n_clusters * cal.adder_tree.area_mm2_per_input
    area += (n_clusters + 1) * cal.accumulator.area_mm2
    area += n_clusters * cal.cluster_buffer.area_mm2
    area += cal.global_buffer.area_mm2
    area += n_clusters * sum(u.area_mm2 for u in cal.units.values())
    return area


_HW_KEYS = (
    "c_v", "c_h", "t_v_act", "t_h_act", "m_mult", "t_total", "p_side",
    "bus_inter_cluster", "bus_inter_tile", "bus_intra_tile", "precision",
)


def load_hw_config(path: str | Path, precision: str | None = None) -> HwConfig:
    """Load a hardware config JSON file.

    Either m_mult or t_total may be given; a t_total that is not a multiple
    of the active grid yields a config that validate() rejects.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    unknown = sorted(set(data) - set(_HW_KEYS))
    if unknown:
        raise ConfigError(f"{path}: unknown key {unknown[0]!r}")
    for key in ("c_v", "c_h", "t_v_act", "t_h_act", "p_side"):
        if key not in data:
            raise ConfigError(f"{path}: missing key {key!r}")
    if "m_mult" in data and "t_total" in data:
        raise ConfigError(f"{path}: give either 'm_mult' or 't_total', not both")
    if "t_total" in data:
        t_active = data["t_v_act"] * data["t_h_act"]
        raw = data.pop("t_total") / t_active
        data["m_mult"] = int(raw) if float(raw).is_integer() else raw
    elif "m_mult" not in data:
        data["m_mult"] = 1
    for key in ("bus_inter_cluster", "bus_inter_tile", "bus_intra_tile"):
        data.setdefault(key, 4096)
    if precision is not None:
        data["precision"] = precision
    data.setdefault("precision", "int8")
    return HwConfig(**data)
