"""Command line interface.

Usage errors exit with status 2 (argparse convention); configuration and
run failures print one diagnostic line to stderr and exit with status 1.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import __version__
from .errors import ZonesimError
from .kernel import BACKENDS
from .output import write_output_csv
from .weather import HOURS_PER_YEAR, load_weather


def _add_backend(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=BACKENDS, default=None,
                        help="integration backend (default: environment)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zonesim",
        description="Single-zone thermal simulation and dataset generation.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one configuration")
    p.add_argument("config")
    p.add_argument("--label", default=None,
                   help="pick one variation of a multi-run document")
    p.add_argument("--out", default=None, help="output CSV path")
    _add_backend(p)

    p = sub.add_parser("batch", help="run a variation study")
    p.add_argument("config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--skip-existing", action="store_true")
    _add_backend(p)

    p = sub.add_parser("gen-profiles",
                       help="expand [profiles] to a profile CSV")
    p.add_argument("config")
    p.add_argument("--out", required=True)

    p = sub.add_parser("inspect-weather", help="print site and annual stats")
    p.add_argument("path")

    sub.add_parser("validate", help="run the built-in sanity checks")

    p = sub.add_parser("bench", help="time the integration backends")
    p.add_argument("--days", type=int, default=30)
    return parser


def _cmd_simulate(args) -> int:
    from .configfile import expand_variations, load_config
    from .simulate import run_simulation

    doc = load_config(args.config)
    variations = expand_variations(doc)
    if args.label is not None:
        picked = [v for v in variations if v.label == args.label]
        if not picked:
            raise ZonesimError(f"no variation labeled {args.label}; have "
                               f"{', '.join(v.label for v in variations)}")
        var = picked[0]
    elif len(variations) == 1:
        var = variations[0]
    else:
        raise ZonesimError(
            f"{doc.source} expands to {len(variations)} variations; "
            f"use 'zonesim batch' or pick one with --label")
    started = time.perf_counter()
    result = run_simulation(var.building, sim=doc.simulation,
                            control=doc.control, backend=args.backend,
                            label=var.label)
    elapsed = time.perf_counter() - started
    out = args.out if args.out else f"{var.label}.csv"
    write_output_csv(out, result.trace, doc.simulation.output_columns)
    s = result.summary
    print(f"{var.label}: {result.n_steps} steps in {elapsed:.2f} s "
          f"({result.backend})")
    print(f"  heating {s['heating_kwh']:.1f} kWh, "
          f"cooling {s['cooling_kwh']:.1f} kWh")
    print(f"  air temperature p10/p50/p90 "
          f"{s['t_air_p10_c']:.2f}/{s['t_air_p50_c']:.2f}/{s['t_air_p90_c']:.2f} "
          f"degC")
    print(f"  energy residual {result.residual_cumulative_rel:.2e} "
          f"(max step {result.residual_max_step_rel:.2e})")
    print(f"  wrote {out}")
    return 0


def _cmd_batch(args) -> int:
    from .batch import run_batch
    from .configfile import load_config

    doc = load_config(args.config)
    manifest = run_batch(doc, args.out, jobs=args.jobs,
                         skip_existing=args.skip_existing,
                         backend=args.backend)
    counts = {}
    for entry in manifest["runs"]:
        counts[entry["status"]] = counts.get(entry["status"], 0) + 1
    detail = ", ".join(f"{v} {k}" for k, v in sorted(counts.items()))
    print(f"{manifest['n_runs']} runs: {detail}; manifest in {args.out}")
    for entry in manifest["runs"]:
        if entry["status"] == "failed":
            print(f"  {entry['label']}: {entry['error']}", file=sys.stderr)
    return 1 if manifest["n_failed"] else 0


def _cmd_gen_profiles(args) -> int:
    from .configfile import load_config
    from .profiles import expand_occupancy, window_schedule, write_profile_csv

    doc = load_config(args.config)
    if doc.profiles is None:
        raise ZonesimError(f"{doc.source} has no [profiles] section")
    spec = doc.profiles
    persons, appliances, sleeping = expand_occupancy(spec.day_profiles,
                                                     spec.calendar)
    gains = persons * spec.gain_per_person_w + appliances
    window = window_schedule(persons, sleeping, rules=spec.window,
                             seed=spec.seed)
    write_profile_csv(args.out, gains, window)
    occupied = float((persons > 0).mean())
    print(f"wrote {args.out}: {gains.shape[0]} slots, "
          f"occupied {100.0 * occupied:.1f}% of the year, "
          f"{int(window.sum())} window-open slots")
    return 0


def _cmd_inspect_weather(args) -> int:
    series = load_weather(args.path)
    site = series.site
    ghi = series.ghi_wm2.sum() / 1000.0
    print(f"site: {site.name}")
    print(f"  latitude {site.latitude:.4f}, longitude {site.longitude:.4f}, "
          f"UTC{site.timezone:+.1f}, elevation {site.elevation:.0f} m")
    print(f"  records: {HOURS_PER_YEAR} hourly ({series.source})")
    print(f"  drybulb degC: mean {series.drybulb_c.mean():.2f}, "
          f"min {series.drybulb_c.min():.1f}, max {series.drybulb_c.max():.1f}")
    print(f"  global horizontal {ghi:.0f} kWh/m2a, "
          f"direct normal {series.dni_wm2.sum() / 1000.0:.0f} kWh/m2a, "
          f"diffuse {series.dhi_wm2.sum() / 1000.0:.0f} kWh/m2a")
    return 0


def _cmd_validate(_args) -> int:
    from .selfcheck import run_self_checks

    return 0 if run_self_checks() else 1


def _cmd_bench(args) -> int:
    import dataclasses

    from . import bundled_weather_path
    from .building import BuildingConfig
    from .kernel import NUMBA_AVAILABLE, warm_up
    from .simulate import SimulationSettings, execute, prepare_run

    if args.days < 1:
        raise ZonesimError("--days must be >= 1")
    cfg = dataclasses.replace(BuildingConfig(),
                              weather_path=bundled_weather_path())
    sim = SimulationSettings(stop_s=args.days * 86400)
    prep = prepare_run(cfg, sim=sim)
    timings = {}
    backends = ("numba", "numpy") if NUMBA_AVAILABLE else ("numpy",)
    if NUMBA_AVAILABLE:
        warm_up()
    results = {}
    for name in backends:
        started = time.perf_counter()
        results[name] = execute(prep, backend=name)
        timings[name] = time.perf_counter() - started
    for name in backends:
        rate = prep.n_steps / timings[name]
        print(f"{name:>6}: {timings[name]:8.3f} s for {prep.n_steps} steps "
              f"({rate:,.0f} steps/s, {1e6 * timings[name] / prep.n_steps:.2f} "
              f"us/step)")
    if len(backends) == 2:
        gap = float(np.max(np.abs(results["numba"].trace["t_air_c"]
                                  - results["numpy"].trace["t_air_c"])))
        print(f"speedup {timings['numpy'] / timings['numba']:.1f}x, "
              f"max air-temperature gap {gap:.2e} K")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "batch": _cmd_batch,
    "gen-profiles": _cmd_gen_profiles,
    "inspect-weather": _cmd_inspect_weather,
    "validate": _cmd_validate,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ZonesimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
