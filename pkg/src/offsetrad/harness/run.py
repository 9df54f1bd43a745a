"""Result persistence: CSV tables, JSON summaries and the run manifest."""
from __future__ import annotations

import csv
import json
import math
import platform
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from .config import config_hash, experiments_from, load_config, validate
from .experiments import ExperimentResult, run_experiment


def _plain(v):
    """Convert numpy scalars/arrays to JSON-friendly Python values."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    return v


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def write_table(path: str | Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else
                        int(v) if isinstance(v, (bool, np.bool_)) else v for v in r])


def write_result(out_dir: str | Path, res: ExperimentResult) -> tuple[Path, Path]:
    out = Path(out_dir)
    csv_path = out / f"{res.name}.csv"
    json_path = out / f"{res.name}.json"
    write_table(csv_path, res.columns, res.rows)
    write_json(json_path, {"name": res.name, "kind": res.kind, "columns": list(res.columns),
                           "summary": res.summary})
    return csv_path, json_path


def versions() -> dict:
    try:
        own = metadata.version("offsetrad")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"offsetrad": own, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _prepare(out_dir: str | Path) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output path {out} is not writable: {exc}") from None
    return out


def run_config(config: dict, out_dir: str | Path | None = None) -> Path:
    """Run every experiment of an already-parsed config.

    Output is a pure function of the config: no timestamps are written, so
    rerunning an identical config reproduces every file byte for byte.
    """
    validate(config)
    target = out_dir or config.get("output") or "results"
    out = _prepare(target)
    entries = []
    for cfg in experiments_from(config):
        res = run_experiment(cfg)
        csv_path, json_path = write_result(out, res)
        entries.append({"name": res.name, "kind": res.kind, "csv": csv_path.name,
                        "json": json_path.name})
    manifest = {
        "seed": config["seed"],
        "config_sha256": config_hash(config),
        "config": config,
        "versions": versions(),
        "experiments": entries,
    }
    write_json(out / "manifest.json", manifest)
    return out


def run(config_path: str | Path, out_dir: str | Path | None = None) -> Path:
    """Load, validate and run a JSON config; returns the results directory."""
    return run_config(load_config(config_path), out_dir)
