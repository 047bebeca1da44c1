"""Access to the JSON configs bundled with the package."""

from __future__ import annotations

from importlib import resources
from pathlib import Path


def _config_root() -> Path:
    return Path(resources.files("cimdse") / "configs")


def model_path(name: str) -> Path:
    """Path of a bundled model config, e.g. 'llama3.2-3b' or 'toy'."""
    return _config_root() / "models" / f"{name}.json"


def calibration_path(name: str) -> Path:
    """Path of a bundled calibration, e.g. 'default-65nm' or 'fitted-65nm'."""
    return _config_root() / "calibrations" / f"{name}.json"


def hw_path(name: str) -> Path:
    """Path of a bundled hardware config, e.g. 'reference-2x3' or 'tiny'."""
    return _config_root() / "hw" / f"{name}.json"


def bundled_models() -> list[Path]:
    """Every bundled model config except the toy fixture."""
    root = _config_root() / "models"
    return sorted(p for p in root.glob("*.json") if p.stem != "toy")


def resolve(path_or_name: str, kind: str) -> Path:
    """Interpret a CLI argument as a filesystem path, else a bundled name."""
    p = Path(path_or_name)
    if p.exists():
        return p
    lookup = {"model": model_path, "calibration": calibration_path, "hw": hw_path}
    candidate = lookup[kind](path_or_name)
    if candidate.exists():
        return candidate
    raise FileNotFoundError(f"no such file and no bundled {kind} named {path_or_name!r}")
