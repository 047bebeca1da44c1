"""Design-space exploration: scalarized cost, GA search, exhaustive oracle.

Genomes are 9-gene index vectors into per-gene option lists, so simulated
binary crossover and polynomial mutation operate on a bounded integer
lattice and every rounded/clamped child decodes to a valid design point.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .arch import (
    DSE_ACTIVE_TILE_RANGE,
    DSE_BUS_OPTIONS,
    DSE_CLUSTER_RANGE,
    DSE_MULTIPLIER_RANGE,
    DSE_PE_GRID_OPTIONS,
    HwConfig,
)
from .errors import SpaceTooLargeError
from .simcore import Metrics, simulate_decode
from .workload import ModelConfig, TokenSetting

GENE_NAMES = (
    "c_v", "c_h", "t_v_act", "t_h_act", "m_mult", "p_side",
    "bus_inter_cluster", "bus_inter_tile", "bus_intra_tile",
)

_P_SIDES = tuple(int(math.isqrt(p2)) for p2 in DSE_PE_GRID_OPTIONS)


@dataclass(frozen=True)
class SearchSpace:
    """Per-gene option lists; the full space is the paper-scale default."""

    c_v: tuple = tuple(range(DSE_CLUSTER_RANGE[0], DSE_CLUSTER_RANGE[1] + 1))
    c_h: tuple = tuple(range(DSE_CLUSTER_RANGE[0], DSE_CLUSTER_RANGE[1] + 1))
    t_v_act: tuple = tuple(range(DSE_ACTIVE_TILE_RANGE[0], DSE_ACTIVE_TILE_RANGE[1] + 1))
    t_h_act: tuple = tuple(range(DSE_ACTIVE_TILE_RANGE[0], DSE_ACTIVE_TILE_RANGE[1] + 1))
    m_mult: tuple = tuple(range(DSE_MULTIPLIER_RANGE[0], DSE_MULTIPLIER_RANGE[1] + 1))
    p_side: tuple = _P_SIDES
    bus_inter_cluster: tuple = DSE_BUS_OPTIONS
    bus_inter_tile: tuple = DSE_BUS_OPTIONS
    bus_intra_tile: tuple = DSE_BUS_OPTIONS

    def options(self) -> tuple[tuple, ...]:
        return tuple(getattr(self, name) for name in GENE_NAMES)

    def size(self) -> int:
        return math.prod(len(opts) for opts in self.options())

    def decode(self, genome: tuple[int, ...], precision: str) -> HwConfig:
        values = {
            name: opts[idx]
            for name, opts, idx in zip(GENE_NAMES, self.options(), genome)
        }
        return HwConfig(precision=precision, **values)

    def random_genome(self, rng: random.Random) -> tuple[int, ...]:
        return tuple(rng.randrange(len(opts)) for opts in self.options())

    def genomes(self):
        """Every genome in lexicographic order."""
        counts = [len(opts) for opts in self.options()]
        genome = [0] * len(counts)
        while True:
            yield tuple(genome)
            for pos in reversed(range(len(counts))):
                genome[pos] += 1
                if genome[pos] < counts[pos]:
                    break
                genome[pos] = 0
            else:
                return

    @staticmethod
    def from_dict(data: dict) -> "SearchSpace":
        unknown = sorted(set(data) - set(GENE_NAMES))
        if unknown:
            raise ValueError(f"unknown gene {unknown[0]!r}")
        return SearchSpace(**{k: tuple(v) for k, v in data.items()})


FULL_SPACE = SearchSpace()

# 1,024-point restriction used by the search-quality tests: two options for
# every structural gene, intra-tile bus pinned, the other two buses free.
REDUCED_1K = SearchSpace(
    c_v=(1, 2), c_h=(1, 2), t_v_act=(2, 3), t_h_act=(2, 3),
    m_mult=(1, 2), p_side=(2, 3),
    bus_inter_cluster=DSE_BUS_OPTIONS, bus_inter_tile=DSE_BUS_OPTIONS,
    bus_intra_tile=(4096,),
)

SPACE_PRESETS = {"full": FULL_SPACE, "reduced-1k": REDUCED_1K}


def scalar_cost(latency_s: float, energy_j: float, alpha: float) -> float:
    """Geometric trade-off latency^alpha * energy^(1-alpha)."""
    if latency_s <= 0 or energy_j <= 0:
        raise ValueError("latency and energy must be positive")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must be within [0, 1]")
    return latency_s ** alpha * energy_j ** (1 - alpha)


def cost(metrics: Metrics, alpha: float) -> float:
    return scalar_cost(metrics.latency_s, metrics.energy_j, alpha)


@dataclass(frozen=True)
class GaSettings:
    generations: int = 50
    population: int = 20
    crossover_prob: float = 1.0
    eta_crossover: float = 3.0
    eta_mutation: float = 3.0
    mutation_prob: float = 0.2  # per gene
    seed: int = 0
    alpha: float = 0.5

    def __post_init__(self):
        if self.population < 2 or self.population % 2:
            raise ValueError("population must be even and >= 2")
        if not 0 <= self.alpha <= 1:
            raise ValueError("alpha must be within [0, 1]")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")


def _sbx_gene(x1: int, x2: int, lo: int, hi: int, eta: float, u: float) -> tuple[float, float]:
    if x1 == x2 or hi == lo:
        return float(x1), float(x2)
    if u <= 0.5:
        beta = (2 * u) ** (1 / (eta + 1))
    else:
        beta = (1 / (2 * (1 - u))) ** (1 / (eta + 1))
    # signed form: beta = 1 returns each child onto its own parent
    c1 = 0.5 * ((x1 + x2) - beta * (x2 - x1))
    c2 = 0.5 * ((x1 + x2) + beta * (x2 - x1))
    return c1, c2


def _clamp_round(value: float, hi: int) -> int:
    return min(hi, max(0, round(value)))


def sbx_crossover(
    parent_a: tuple[int, ...],
    parent_b: tuple[int, ...],
    eta_c: float,
    rng: random.Random,
    space: SearchSpace = FULL_SPACE,
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Simulated binary crossover on the gene index lattice.

    Each gene recombines with probability 0.5 (the conventional SBX gate);
    real-valued children are rounded to the nearest index and clamped, so
    they always decode to valid design points. A uniform draw of 0.5 gives
    beta = 1, i.e. children identical to their parents.
    """
    child_a, child_b = [], []
    for x1, x2, opts in zip(parent_a, parent_b, space.options()):
        hi = len(opts) - 1
        if rng.random() <= 0.5:
            c1, c2 = _sbx_gene(x1, x2, 0, hi, eta_c, rng.random())
        else:
            c1, c2 = float(x1), float(x2)
        child_a.append(_clamp_round(c1, hi))
        child_b.append(_clamp_round(c2, hi))
    return tuple(child_a), tuple(child_b)


def poly_mutation(
    genome: tuple[int, ...],
    eta: float,
    rng: random.Random,
    space: SearchSpace = FULL_SPACE,
    prob: float | None = None,
) -> tuple[int, ...]:
    """Polynomial mutation on the gene index lattice.

    A uniform draw of 0.5 gives delta = 0, leaving the gene unchanged.
    """
    if prob is None:
        prob = 1 / len(genome)
    out = []
    for x, opts in zip(genome, space.options()):
        hi = len(opts) - 1
        if hi == 0 or rng.random() >= prob:
            out.append(x)
            continue
        u = rng.random()
        if u < 0.5:
            delta = (2 * u) ** (1 / (eta + 1)) - 1
        else:
            delta = 1 - (2 * (1 - u)) ** (1 / (eta + 1))
        out.append(_clamp_round(x + delta * hi, hi))
    return tuple(out)


@dataclass
class EvalRecord:
    generation: int
    genome: tuple[int, ...]
    hw: HwConfig
    metrics: Metrics
    cost: float


@dataclass
class GaResult:
    best_hw: HwConfig
    best_metrics: Metrics
    best_cost: float
    best_genome: tuple[int, ...]
    history: list[EvalRecord] = field(default_factory=list)
    best_per_generation: list[float] = field(default_factory=list)


def _sort_key(record_cost: float, metrics: Metrics, genome: tuple[int, ...]):
    # Deterministic ranking: cost, then smaller area, then lexicographic genome.
    return (record_cost, metrics.area_mm2, genome)


class _Evaluator:
    """Memoizing fitness evaluator; the RNG never enters here, so results
    are seed-deterministic regardless of evaluation order or parallelism."""

    def __init__(self, m, cal, t, alpha, precision, space, jobs=1):
        self.m, self.cal, self.t = m, cal, t
        self.alpha, self.precision, self.space = alpha, precision, space
        self.jobs = max(1, jobs)
        self.cache: dict[tuple[int, ...], tuple[HwConfig, Metrics, float]] = {}

    def _evaluate_one(self, genome):
        hw = self.space.decode(genome, self.precision)
        try:
            metrics = simulate_decode(self.m, hw, self.cal, self.t)
        except Exception as exc:
            raise RuntimeError(f"simulation failed for genome {genome}: {exc}") from exc
        return hw, metrics, cost(metrics, self.alpha)

    def evaluate(self, genomes):
        missing = [g for g in dict.fromkeys(genomes) if g not in self.cache]
        if self.jobs > 1 and len(missing) > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=self.jobs) as pool:
                results = list(pool.map(self._evaluate_one, missing))
            for g, res in zip(missing, results):
                self.cache[g] = res
        else:
            for g in missing:
                self.cache[g] = self._evaluate_one(g)
        return [self.cache[g] for g in genomes]


def _tournament(rng, pop, keys):
    i = rng.randrange(len(pop))
    j = rng.randrange(len(pop))
    return pop[i] if keys[i] <= keys[j] else pop[j]


def run_ga(
    m: ModelConfig,
    cal,
    t: TokenSetting,
    settings: GaSettings,
    space: SearchSpace = FULL_SPACE,
    precision: str = "int8",
    jobs: int = 1,
) -> GaResult:
    """Elitist generational GA over the design space, deterministic per seed.

    Binary tournament selection, SBX (crossover probability per settings) and
    polynomial mutation on gene indices; the single best-ever individual
    replaces the worst child each generation, so best-so-far cost never rises.
    """
    rng = random.Random(settings.seed)
    ev = _Evaluator(m, cal, t, settings.alpha, precision, space, jobs)
    result = GaResult(None, None, math.inf, None)

    def record(gen, genomes):
        evals = ev.evaluate(genomes)
        for genome, (hw, metrics, c) in zip(genomes, evals):
            result.history.append(EvalRecord(gen, genome, hw, metrics, c))
        return evals

    def update_best(genomes, evals):
        for genome, (hw, metrics, c) in zip(genomes, evals):
            key = _sort_key(c, metrics, genome)
            if result.best_genome is None or key < _sort_key(
                result.best_cost, result.best_metrics, result.best_genome
            ):
                result.best_hw, result.best_metrics = hw, metrics
                result.best_cost, result.best_genome = c, genome

    pop = [space.random_genome(rng) for _ in range(settings.population)]
    evals = record(0, pop)
    update_best(pop, evals)
    result.best_per_generation.append(result.best_cost)

    for gen in range(1, settings.generations + 1):
        keys = [_sort_key(c, metr, g) for g, (hw, metr, c) in zip(pop, evals)]
        children = []
        while len(children) < settings.population:
            pa = _tournament(rng, pop, keys)
            pb = _tournament(rng, pop, keys)
            if rng.random() <= settings.crossover_prob:
                ca, cb = sbx_crossover(pa, pb, settings.eta_crossover, rng, space)
            else:
                ca, cb = pa, pb
            ca = poly_mutation(ca, settings.eta_mutation, rng, space, settings.mutation_prob)
            cb = poly_mutation(cb, settings.eta_mutation, rng, space, settings.mutation_prob)
            children.extend([ca, cb])
        children = children[: settings.population]
        child_evals = record(gen, children)
        update_best(children, child_evals)

        # Single-individual elitism: re-insert the best-ever genome over the
        # worst child so selection never loses it.
        if result.best_genome not in children:
            child_keys = [
                _sort_key(c, metr, g) for g, (hw, metr, c) in zip(children, child_evals)
            ]
            worst = max(range(len(children)), key=lambda i: child_keys[i])
            children[worst] = result.best_genome
            child_evals[worst] = ev.cache[result.best_genome]
        pop, evals = children, child_evals
        result.best_per_generation.append(result.best_cost)

    return result


MAX_EXHAUSTIVE_POINTS = 100_000


def exhaustive_search(
    space: SearchSpace,
    m: ModelConfig,
    cal,
    t: TokenSetting,
    alpha: float,
    precision: str = "int8",
    jobs: int = 1,
) -> list[EvalRecord]:
    """Evaluate every point of a restricted space, ranked best-first."""
    size = space.size()
    if size > MAX_EXHAUSTIVE_POINTS:
        raise SpaceTooLargeError(
            f"space has {size} points, exhaustive limit is {MAX_EXHAUSTIVE_POINTS}"
        )
    ev = _Evaluator(m, cal, t, alpha, precision, space, jobs)
    genomes = list(space.genomes())
    evals = ev.evaluate(genomes)
    records = [
        EvalRecord(0, genome, hw, metrics, c)
        for genome, (hw, metrics, c) in zip(genomes, evals)
    ]
    records.sort(key=lambda r: _sort_key(r.cost, r.metrics, r.genome))
    return records


def pareto_front(evals: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """All points not dominated in (latency, energy); input order preserved."""
    if not evals:
        raise ValueError("empty candidate set")
    front = []
    for i, (li, ei) in enumerate(evals):
        dominated = any(
            (lj <= li and ej <= ei) and (lj < li or ej < ei)
            for j, (lj, ej) in enumerate(evals)
            if j != i
        )
        if not dominated:
            front.append((li, ei))
    return front
