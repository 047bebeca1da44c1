"""Command-line front end: single simulations, DSE runs, sweeps, benchmarks.

Every command writes a run manifest next to its outputs so any result file
can be regenerated from the recorded inputs. Output schemas are documented
in docs/formats.md and contain no timestamps, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .arch import enumerate_space_size, load_calibration, load_hw_config, validate
from .configsutil import bundled_models, resolve
from .dse import (
    SPACE_PRESETS,
    EvalRecord,
    GaSettings,
    SearchSpace,
    exhaustive_search,
    run_ga,
)
from .errors import ConfigError, HwValidationError, SpaceTooLargeError
from .simcore import build_plans, simulate_decode
from .workload import TokenSetting, load_model_config

HISTORY_COLUMNS = (
    "generation", "c_v", "c_h", "t_v_act", "t_h_act", "m_mult", "p_side",
    "bus_inter_cluster", "bus_inter_tile", "bus_intra_tile",
    "latency_s", "energy_j", "area_mm2", "cost",
)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, data) -> None:
    with open(path, "w") as f:
        json.dump(data, f, indent=2)
        f.write("\n")


def _manifest(args: argparse.Namespace, outputs: list[str]) -> dict:
    skip = {"func"}
    recorded = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {
        "command": args.command,
        "args": recorded,
        "outputs": outputs,
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _finish(args, out_dir: Path, outputs: list[str]) -> None:
    _write_json(out_dir / "manifest.json", _manifest(args, outputs))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_inputs(args):
    model = load_model_config(resolve(args.model, "model"))
    cal = load_calibration(resolve(args.calib, "calibration"))
    hw = load_hw_config(resolve(args.hw, "hw"), precision=args.precision)
    violations = validate(hw, dse_mode=False)
    if violations:
        raise HwValidationError(violations)
    return model, cal, hw


def _space(args) -> SearchSpace:
    name = getattr(args, "space", "full")
    if name in SPACE_PRESETS:
        return SPACE_PRESETS[name]
    with open(name) as f:
        return SearchSpace.from_dict(json.load(f))


def _history_rows(records: list[EvalRecord]):
    for r in records:
        hw = r.hw
        yield (
            r.generation, hw.c_v, hw.c_h, hw.t_v_act, hw.t_h_act, hw.m_mult,
            hw.p_side, hw.bus_inter_cluster, hw.bus_inter_tile, hw.bus_intra_tile,
            repr(r.metrics.latency_s), repr(r.metrics.energy_j),
            repr(r.metrics.area_mm2), repr(r.cost),
        )


def _best_payload(hw, metrics, cost_value) -> dict:
    return {
        "hw": {
            "c_v": hw.c_v, "c_h": hw.c_h, "t_v_act": hw.t_v_act,
            "t_h_act": hw.t_h_act, "m_mult": hw.m_mult, "p_side": hw.p_side,
            "bus_inter_cluster": hw.bus_inter_cluster,
            "bus_inter_tile": hw.bus_inter_tile,
            "bus_intra_tile": hw.bus_intra_tile,
            "precision": hw.precision,
        },
        "metrics": metrics.to_dict(),
        "cost": cost_value,
    }


def cmd_simulate(args) -> int:
    model, cal, hw = _load_inputs(args)
    tokens = TokenSetting(args.prefill, args.decode)
    metrics = simulate_decode(model, hw, cal, tokens)
    out = _out_dir(args)
    outputs = []
    if args.format == "json":
        _write_json(out / "metrics.json", metrics.to_dict())
        outputs.append("metrics.json")
    per_stage_rows = [
        (stage.value, sm.cycles, repr(sm.cycles / cal.clock_hz),
         repr(sm.energy_pj), sm.dram_bytes)
        for stage, sm in metrics.per_stage.items()
    ]
    _write_csv(out / "per_stage.csv",
               ("stage", "cycles", "time_s", "energy_pj", "dram_bytes"),
               per_stage_rows)
    outputs.append("per_stage.csv")
    if args.dump_plans:
        plans = build_plans(model, hw, tokens, 1)
        _write_json(out / "plans.json",
                    {stage.value: plan.to_dict() for stage, plan in plans.items()})
        outputs.append("plans.json")
    _finish(args, out, outputs)
    return 0


def cmd_dse(args) -> int:
    model = load_model_config(resolve(args.model, "model"))
    cal = load_calibration(resolve(args.calib, "calibration"))
    tokens = TokenSetting(args.prefill, args.decode)
    settings = GaSettings(
        generations=args.generations, population=args.population,
        seed=args.seed, alpha=args.alpha,
    )
    result = run_ga(model, cal, tokens, settings, _space(args),
                    precision=args.precision, jobs=args.jobs)
    out = _out_dir(args)
    _write_json(out / "best.json",
                _best_payload(result.best_hw, result.best_metrics, result.best_cost))
    _write_csv(out / "history.csv", HISTORY_COLUMNS, _history_rows(result.history))
    _finish(args, out, ["best.json", "history.csv"])
    return 0


def cmd_exhaustive(args) -> int:
    model = load_model_config(resolve(args.model, "model"))
    cal = load_calibration(resolve(args.calib, "calibration"))
    tokens = TokenSetting(args.prefill, args.decode)
    records = exhaustive_search(_space(args), model, cal, tokens, args.alpha,
                                precision=args.precision, jobs=args.jobs)
    out = _out_dir(args)
    _write_csv(out / "ranking.csv", HISTORY_COLUMNS, _history_rows(records))
    _write_json(out / "best.json",
                _best_payload(records[0].hw, records[0].metrics, records[0].cost))
    _finish(args, out, ["ranking.csv", "best.json"])
    return 0


def cmd_sweep_alpha(args) -> int:
    model = load_model_config(resolve(args.model, "model"))
    cal = load_calibration(resolve(args.calib, "calibration"))
    tokens = TokenSetting(args.prefill, args.decode)
    space = _space(args)
    alphas = [float(a) for a in args.alphas.split(",")]
    rows = []
    for alpha in alphas:
        for rep in range(args.repeats):
            if args.search == "ga":
                settings = GaSettings(
                    generations=args.generations, population=args.population,
                    seed=args.seed + rep, alpha=alpha,
                )
                result = run_ga(model, cal, tokens, settings, space,
                                precision=args.precision, jobs=args.jobs)
                best_metrics, best_cost = result.best_metrics, result.best_cost
            else:
                ranked = exhaustive_search(space, model, cal, tokens, alpha,
                                           precision=args.precision, jobs=args.jobs)
                best_metrics, best_cost = ranked[0].metrics, ranked[0].cost
            rows.append((repr(alpha), rep, repr(best_metrics.latency_s),
                         repr(best_metrics.energy_j), repr(best_cost)))
    out = _out_dir(args)
    _write_csv(out / "sweep_alpha.csv",
               ("alpha", "run", "latency_s", "energy_j", "cost"), rows)
    _finish(args, out, ["sweep_alpha.csv"])
    return 0


def cmd_sweep_tokens(args) -> int:
    model, cal, hw = _load_inputs(args)
    prefills = [int(x) for x in args.prefill_grid.split(",")]
    decodes = [int(x) for x in args.decode_grid.split(",")]
    rows = []
    for p in prefills:
        for d in decodes:
            metrics = simulate_decode(model, hw, cal, TokenSetting(p, d))
            rows.append((p, d, repr(metrics.latency_s), repr(metrics.energy_j),
                         repr(metrics.latency_s * metrics.energy_j)))
    out = _out_dir(args)
    _write_csv(out / "sweep_tokens.csv",
               ("prefill", "decode", "latency_s", "energy_j", "energy_latency_product"),
               rows)
    _finish(args, out, ["sweep_tokens.csv"])
    return 0


def cmd_bench(args) -> int:
    cal = load_calibration(resolve(args.calib, "calibration"))
    if args.models:
        model_files = sorted(Path(args.models).glob("*.json"))
    else:
        model_files = bundled_models()
    tokens = TokenSetting(args.prefill, args.decode)
    rows = []
    for mf in model_files:
        model = load_model_config(mf)
        for precision in ("int4", "int8"):
            hw = load_hw_config(resolve(args.hw, "hw"), precision=precision)
            metrics = simulate_decode(model, hw, cal, tokens)
            rows.append((model.name, precision, repr(metrics.throughput_tok_s),
                         repr(metrics.efficiency_tok_j), repr(metrics.area_mm2)))
    out = _out_dir(args)
    _write_csv(out / "bench.csv",
               ("model", "precision", "throughput_tok_s", "efficiency_tok_j", "area_mm2"),
               rows)
    _finish(args, out, ["bench.csv"])
    return 0


def cmd_enumerate(args) -> int:
    size = enumerate_space_size(_space(args))
    print(size)
    if args.out:
        out = _out_dir(args)
        _write_json(out / "space.json", {"space": args.space, "size": size})
        _finish(args, out, ["space.json"])
    return 0


def _add_common(p, hw=True, need_out=True):
    p.add_argument("--model", required=True, help="model config path or bundled name")
    p.add_argument("--calib", required=True, help="calibration path or bundled name")
    if hw:
        p.add_argument("--hw", required=True, help="hardware config path or bundled name")
    p.add_argument("--precision", choices=("int4", "int8"), default="int8")
    p.add_argument("--prefill", type=int, default=128)
    p.add_argument("--decode", type=int, default=128)
    if need_out:
        p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="json")


def _add_search(p):
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--space", default="full",
                   help="space preset (full, reduced-1k) or JSON file of gene options")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cimdse",
        description="Analytical decode simulator and design-space explorer "
                    "for tiled compute-in-memory accelerators.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one model on one design point")
    _add_common(p)
    p.add_argument("--dump-plans", action="store_true",
                   help="also write the stage partition plans as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dse", help="genetic-algorithm search for the best design point")
    _add_common(p, hw=False)
    _add_search(p)
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--population", type=int, default=20)
    p.set_defaults(func=cmd_dse)

    p = sub.add_parser("exhaustive", help="rank every point of a restricted space")
    _add_common(p, hw=False)
    _add_search(p)
    p.set_defaults(func=cmd_exhaustive)

    p = sub.add_parser("sweep-alpha", help="best design per trade-off weight")
    _add_common(p, hw=False)
    _add_search(p)
    p.add_argument("--alphas", default="0,0.25,0.5,0.75,1")
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--search", choices=("ga", "exhaustive"), default="ga")
    p.add_argument("--generations", type=int, default=50)
    p.add_argument("--population", type=int, default=20)
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("sweep-tokens", help="energy-latency product over token grids")
    _add_common(p)
    p.add_argument("--prefill-grid", default="64,128,256,512")
    p.add_argument("--decode-grid", default="64,128,256,512")
    p.set_defaults(func=cmd_sweep_tokens)

    p = sub.add_parser("bench", help="throughput/efficiency/area across models")
    p.add_argument("--models", default=None,
                   help="directory of model configs (default: bundled models)")
    p.add_argument("--hw", required=True)
    p.add_argument("--calib", required=True)
    p.add_argument("--prefill", type=int, default=128)
    p.add_argument("--decode", type=int, default=128)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("enumerate", help="count design points in a space")
    p.add_argument("--space", default="full")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_enumerate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, HwValidationError, SpaceTooLargeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
