"""Variation batches: a worker pool, per-run CSV files, one manifest.

Runs are independent; workers share nothing but read-only inputs. The
manifest lists every variation in expansion order with its fully resolved
parameters, so results stay interpretable without the original document.
Outputs are byte-identical for any worker count.
"""
from __future__ import annotations

import dataclasses
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path

from . import __version__, kernel
from .configfile import ConfigDocument, Variation, expand_variations
from .errors import ZonesimError
from .output import write_output_csv
from .simulate import resolve_weather_path, run_simulation
from .weather import incident_table, load_weather

MANIFEST_NAME = "manifest.json"


@lru_cache(maxsize=8)
def _weather_cached(path: str):
    return load_weather(path)


@lru_cache(maxsize=8)
def _table_cached(path: str, albedo: float):
    return incident_table(_weather_cached(path), albedo=albedo)


def _parameters(variation: Variation) -> dict:
    params = {"building": dataclasses.asdict(variation.building)}
    try:
        from .building import build_model_params
        params["derived"] = \
            build_model_params(variation.building).to_manifest_dict()
    except ZonesimError:
        # Keep the entry for failed runs even when derivation is the
        # failure; the config half still documents the attempt.
        params["derived"] = None
    return params


def _entry(variation: Variation, doc: ConfigDocument, status: str,
           duration_s: float, error: str | None = None) -> dict:
    entry = {
        "label": variation.label,
        "status": status,
        "varied": dict(variation.varied),
        "parameters": _parameters(variation),
        "weather_file": variation.building.weather_path,
        "seed": doc.simulation.seed,
        "output_file": f"{variation.label}.csv",
        "duration_s": round(duration_s, 3),
        "version": __version__,
    }
    if error is not None:
        entry["error"] = error
    return entry


def run_one(doc: ConfigDocument, variation: Variation, out_dir,
            backend: str | None = None) -> dict:
    """Simulate one variation and write its CSV; returns a manifest entry."""
    started = time.perf_counter()
    sim = doc.simulation
    building = variation.building
    try:
        weather = None
        table = None
        if building.weather_path:
            wpath = resolve_weather_path(str(building.weather_path))
            weather = _weather_cached(wpath)
            table = _table_cached(wpath, sim.ground_albedo)
        result = run_simulation(
            building, sim=sim, control=doc.control, weather=weather,
            table=table, backend=backend, label=variation.label)
        write_output_csv(Path(out_dir) / f"{variation.label}.csv",
                         result.trace, sim.output_columns)
    except Exception as exc:
        return _entry(variation, doc, "failed",
                      time.perf_counter() - started, error=str(exc))
    return _entry(variation, doc, "ok", time.perf_counter() - started)


def _worker(args) -> tuple:
    index, doc, variation, out_dir, backend = args
    return index, run_one(doc, variation, out_dir, backend=backend)


def run_batch(doc: ConfigDocument, out_dir, jobs: int = 1,
              skip_existing: bool = False,
              backend: str | None = None) -> dict:
    """Run every variation of a document; returns the manifest mapping.

    The manifest is also written to ``out_dir/manifest.json``. Failed runs
    are recorded with their error text; callers should treat a nonzero
    ``n_failed`` as a failed batch.
    """
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    variations = expand_variations(doc)
    entries: list = [None] * len(variations)
    pending = []
    for i, var in enumerate(variations):
        if skip_existing and (out_path / f"{var.label}.csv").exists():
            entries[i] = _entry(var, doc, "skipped", 0.0)
        else:
            pending.append(i)

    if jobs <= 1 or len(pending) <= 1:
        for i in pending:
            entries[i] = run_one(doc, variations[i], out_path,
                                 backend=backend)
    else:
        # Compile before forking so children inherit the jitted kernel.
        if (backend or kernel.default_backend()) == "numba":
            kernel.warm_up()
        tasks = [(i, doc, variations[i], out_path, backend) for i in pending]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for index, entry in pool.map(_worker, tasks):
                entries[index] = entry

    n_failed = sum(1 for e in entries if e["status"] == "failed")
    manifest = {
        "config": doc.source,
        "mode": doc.mode,
        "n_runs": len(entries),
        "n_failed": n_failed,
        "version": __version__,
        "runs": entries,
    }
    tmp = out_path / (MANIFEST_NAME + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, out_path / MANIFEST_NAME)
    return manifest
