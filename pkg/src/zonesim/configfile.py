"""Configuration documents: one TOML file describing a whole study.

Sections: ``[simulation]``, ``[building]``, ``[control]``, ``[paths]``,
``[variation]``, ``[profiles]``. Building keys accept a scalar, an
explicit list of values, or an inclusive range ``{min, max, step}``; path
keys accept a scalar or a list. Multi-valued keys expand to a variation
set, either as a cartesian product (row-major, document key order) or
element-wise (``zip``). Labels are ``sr{i}`` or ``sr{i}_{letters}`` where
each letter encodes the value's position within that key's sorted value
list, so a label decodes back to exact parameter values.
"""
from __future__ import annotations

import dataclasses
import itertools
import os
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:  # tomli is the same parser, backported
    import tomli as tomllib

from .building import BuildingConfig, config_from_dict
from .control import CONTROLLER_KINDS, ControllerConfig
from .errors import InvalidConfigError
from .output import AVAILABLE_COLUMNS
from .profiles import (
    DAY_KINDS, GAIN_PER_PERSON_W, Calendar, DayProfile, Segment, WindowRules,
)
from .simulate import DEFAULT_OUTPUT_COLUMNS, SimulationSettings
from .weather import SECONDS_PER_YEAR

_SECTIONS = ("simulation", "building", "control", "paths", "variation",
             "profiles")
_PATH_KEYS = {"weather": "weather_path",
              "internal_gains": "internal_gain_path",
              "window_opening": "window_opening_path"}
_BUILDING_KEYS = frozenset(BuildingConfig.__dataclass_fields__)
_MODES = ("cartesian", "zip")
_LABEL_SCHEMES = ("ordinal_letters", "index")


@dataclass(frozen=True)
class ProfilesSpec:
    """Occupancy templates plus calendar, parsed from ``[profiles]``."""

    day_profiles: dict
    calendar: Calendar
    window: WindowRules
    gain_per_person_w: float = GAIN_PER_PERSON_W
    seed: int | None = None


@dataclass(frozen=True)
class ConfigDocument:
    simulation: SimulationSettings
    control: ControllerConfig
    base: dict                  # single-valued building params, field names
    multi: tuple                # ((doc_key, field_name, values), ...) in order
    mode: str = "cartesian"
    label_scheme: str = "ordinal_letters"
    profiles: ProfilesSpec | None = None
    source: str = "<config>"

    @property
    def n_variations(self) -> int:
        if not self.multi:
            return 1
        if self.mode == "zip":
            return len(self.multi[0][2])
        n = 1
        for _, _, values in self.multi:
            n *= len(values)
        return n


@dataclass(frozen=True)
class Variation:
    label: str
    building: BuildingConfig
    varied: dict                # doc_key -> value chosen for this run


def _err(section: str, key: str, msg: str) -> InvalidConfigError:
    where = f"[{section}] {key}" if key else f"[{section}]"
    return InvalidConfigError(f"{where}: {msg}")


def _int(section: str, block: dict, key: str, default: int) -> int:
    v = block.pop(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise _err(section, key, f"expected an integer, got {v!r}")
    return v


def _num(section: str, block: dict, key: str, default: float) -> float:
    v = block.pop(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(section, key, f"expected a number, got {v!r}")
    return float(v)


def _reject_unknown(section: str, block: dict) -> None:
    if block:
        key = next(iter(block))
        raise _err(section, key, f"unknown key {key}")


def _parse_simulation(block: dict) -> SimulationSettings:
    block = dict(block)
    start = _int("simulation", block, "start", 0)
    stop = _int("simulation", block, "stop", SECONDS_PER_YEAR)
    dt = _int("simulation", block, "dt", 60)
    out_int = _int("simulation", block, "output_interval", 300)
    albedo = _num("simulation", block, "ground_albedo", 0.2)
    seed = _int("simulation", block, "seed", 0)
    cols = block.pop("output_columns", list(DEFAULT_OUTPUT_COLUMNS))
    if not isinstance(cols, list) or not all(isinstance(c, str) for c in cols):
        raise _err("simulation", "output_columns",
                   "expected a list of column names")
    for c in cols:
        if c not in AVAILABLE_COLUMNS:
            raise _err("simulation", "output_columns",
                       f"unknown column {c}")
    _reject_unknown("simulation", block)
    settings = SimulationSettings(
        start_s=start, stop_s=stop, dt_s=dt, output_interval_s=out_int,
        output_columns=tuple(cols), ground_albedo=albedo, seed=seed)
    settings.validate()
    return settings


def _parse_control(block: dict, dt_s: int) -> ControllerConfig:
    block = dict(block)
    kind = block.pop("kind", "internal_p")
    if kind not in CONTROLLER_KINDS:
        raise _err("control", "kind",
                   f"unknown controller kind {kind!r}; pick one of "
                   f"{', '.join(CONTROLLER_KINDS)}")
    upd = _int("control", block, "update_interval", dt_s)
    band = _num("control", block, "proportional_band", 2.0)
    hyst = _num("control", block, "hysteresis", 0.5)
    window = block.pop("day_window", [6.0, 22.0])
    if not isinstance(window, list) or len(window) != 2:
        raise _err("control", "day_window", "expected [start_h, end_h]")
    controls = block.pop("controls", ["heating", "cooling", "window"])
    if not isinstance(controls, list):
        raise _err("control", "controls", "expected a list")
    external = block.pop("external", None)
    if external is not None and not isinstance(external, str):
        raise _err("control", "external", "expected 'module:attribute'")
    _reject_unknown("control", block)
    return ControllerConfig(
        kind=kind, day_window_h=(float(window[0]), float(window[1])),
        proportional_band_k=band, hysteresis_k=hyst, update_interval_s=upd,
        controls=tuple(controls), external_ref=external)


def _expand_range(section: str, key: str, spec: dict) -> tuple:
    extra = set(spec) - {"min", "max", "step"}
    if extra or not {"min", "max", "step"} <= set(spec):
        raise _err(section, key, "a range needs exactly min, max, step")
    mn, mx, st = (float(spec[k]) for k in ("min", "max", "step"))
    if st <= 0.0:
        raise _err(section, key, "range step must be > 0")
    if mx < mn:
        raise _err(section, key, "range max must be >= min")
    n = int((mx - mn) / st + 1e-9) + 1
    # 10-decimal rounding keeps 0.1 + 2*0.2 reading back as 0.5
    return tuple(round(mn + i * st, 10) for i in range(n))


def _is_distribution_value(value: list) -> bool:
    return all(isinstance(v, (int, float)) and not isinstance(v, bool)
               for v in value)


def _parse_building(block: dict, base: dict, multi: list) -> None:
    for key, value in block.items():
        if key not in _BUILDING_KEYS:
            raise _err("building", key, f"unknown key {key}")
        if key in _PATH_KEYS.values():
            raise _err("building", key, "belongs in [paths]")
        if isinstance(value, dict):
            multi.append((key, key, _expand_range("building", key, value)))
        elif isinstance(value, list):
            if key.endswith("_distribution") and _is_distribution_value(value):
                base[key] = value
            else:
                if not value:
                    raise _err("building", key, "value list is empty")
                multi.append((key, key, tuple(
                    tuple(v) if isinstance(v, list) else v for v in value)))
        else:
            base[key] = value


def _parse_paths(block: dict, base: dict, multi: list) -> None:
    for key, value in block.items():
        if key not in _PATH_KEYS:
            raise _err("paths", key, f"unknown key {key}")
        field = _PATH_KEYS[key]
        if isinstance(value, str):
            base[field] = value
        elif isinstance(value, list) and value and \
                all(isinstance(v, str) for v in value):
            multi.append((key, field, tuple(value)))
        else:
            raise _err("paths", key, "expected a path or a list of paths")


def _parse_variation(block: dict) -> tuple:
    block = dict(block)
    mode = block.pop("mode", "cartesian")
    if mode not in _MODES:
        raise _err("variation", "mode", f"expected one of {_MODES}, "
                   f"got {mode!r}")
    scheme = block.pop("label_scheme", "ordinal_letters")
    if scheme not in _LABEL_SCHEMES:
        raise _err("variation", "label_scheme",
                   f"expected one of {_LABEL_SCHEMES}, got {scheme!r}")
    _reject_unknown("variation", block)
    return mode, scheme


def _parse_segments(kind: str, rows) -> DayProfile:
    if not isinstance(rows, list):
        raise _err("profiles", kind, "expected an array of segment tables")
    segments = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict):
            raise _err("profiles", kind, f"segment {i + 1} is not a table")
        row = dict(row)
        seg = Segment(
            start_min=_int("profiles", row, "start_min", 0),
            end_min=_int("profiles", row, "end_min", 0),
            persons=_num("profiles", row, "persons", 0.0),
            appliance_w=_num("profiles", row, "appliance_w", 0.0),
            sleeping=bool(row.pop("sleeping", False)))
        _reject_unknown("profiles", row)
        segments.append(seg)
    return DayProfile(kind=kind, segments=tuple(segments))


def _parse_profiles(block: dict) -> ProfilesSpec:
    block = dict(block)
    gain = _num("profiles", block, "gain_per_person_w", GAIN_PER_PERSON_W)
    jan1 = _int("profiles", block, "jan1_weekday", 0)
    seed = block.pop("seed", None)
    if seed is not None and (isinstance(seed, bool)
                             or not isinstance(seed, int)):
        raise _err("profiles", "seed", f"expected an integer, got {seed!r}")
    holidays = block.pop("holidays", [])
    if not isinstance(holidays, list):
        raise _err("profiles", "holidays", "expected a list of [month, day]")
    dates = []
    for item in holidays:
        if not (isinstance(item, list) and len(item) == 2):
            raise _err("profiles", "holidays",
                       f"expected [month, day] pairs, got {item!r}")
        dates.append((int(item[0]), int(item[1])))
    win = dict(block.pop("window", {}))
    rules = WindowRules(
        airing_minutes=_int("profiles", win, "airing_minutes", 10),
        awareness_minutes=tuple(
            int(m) for m in win.pop("awareness_minutes", [420, 1140])),
        stochastic=bool(win.pop("stochastic", False)),
        jitter_minutes=_int("profiles", win, "jitter_minutes", 30))
    _reject_unknown("profiles", win)
    day_profiles = {}
    for kind in DAY_KINDS:
        if kind in block:
            day_profiles[kind] = _parse_segments(kind, block.pop(kind))
    _reject_unknown("profiles", block)
    calendar = Calendar(jan1_weekday=jan1, holidays=tuple(dates))
    calendar.validate()
    for prof in day_profiles.values():
        prof.validate()
    return ProfilesSpec(day_profiles=day_profiles, calendar=calendar,
                        window=rules, gain_per_person_w=gain, seed=seed)


def parse_config(text: str, source: str = "<config>") -> ConfigDocument:
    """Parse and validate one configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise InvalidConfigError(f"{source}: not valid TOML: {exc}") from None
    for section in doc:
        if section not in _SECTIONS:
            raise InvalidConfigError(f"{source}: unknown section [{section}]")
        if not isinstance(doc[section], dict):
            raise InvalidConfigError(f"{source}: [{section}] must be a table")

    sim = _parse_simulation(doc.get("simulation", {}))
    control = _parse_control(doc.get("control", {}), sim.dt_s)
    base: dict = {}
    multi: list = []
    # Walk sections in document order so multi-valued keys expand in the
    # order they were written, whichever section they sit in.
    for section, block in doc.items():
        if section == "building":
            _parse_building(block, base, multi)
        elif section == "paths":
            _parse_paths(block, base, multi)
    mode, scheme = _parse_variation(doc.get("variation", {}))
    if mode == "zip" and multi:
        lengths = {key: len(values) for key, _, values in multi}
        if len(set(lengths.values())) > 1:
            detail = ", ".join(f"{k} has {n}" for k, n in lengths.items())
            raise InvalidConfigError(
                f"[variation] zip mode requires equal list lengths; {detail}")
    profiles = _parse_profiles(doc["profiles"]) if "profiles" in doc else None
    cfg = ConfigDocument(simulation=sim, control=control, base=base,
                         multi=tuple(multi), mode=mode, label_scheme=scheme,
                         profiles=profiles, source=source)
    # Surface bad scalar values now rather than at run time; every
    # variation overrides a validated base, so checking base plus each
    # variation covers the whole grid at expansion.
    expand_variations(cfg)
    return cfg


def _resolve_path(value: str, base_dir) -> str:
    if value == "bundled" or os.path.isabs(value):
        return value
    return os.path.normpath(os.path.join(base_dir, value))


def load_config(path) -> ConfigDocument:
    """Read, parse, and anchor relative input paths at the file's folder."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InvalidConfigError(f"cannot read config {path}: {exc}") from None
    doc = parse_config(text, source=str(path))
    base_dir = os.path.dirname(os.path.abspath(path))
    path_fields = set(_PATH_KEYS.values())
    base = {key: _resolve_path(v, base_dir) if key in path_fields else v
            for key, v in doc.base.items()}
    multi = tuple(
        (doc_key, field, tuple(_resolve_path(v, base_dir) for v in values)
         if field in path_fields else values)
        for doc_key, field, values in doc.multi)
    return dataclasses.replace(doc, base=base, multi=multi)


def _letters(index: int) -> str:
    """0 -> a, 25 -> z, 26 -> aa; keys rarely need more than one letter."""
    out = ""
    index += 1
    while index > 0:
        index, rem = divmod(index - 1, 26)
        out = chr(ord("a") + rem) + out
    return out


def _sorted_positions(values: tuple) -> dict:
    try:
        order = sorted(set(values))
    except TypeError:
        raise InvalidConfigError(
            "variation values for one key must share a type") from None
    return {v: i for i, v in enumerate(order)}


def expand_variations(doc: ConfigDocument) -> tuple:
    """Expand a document to its ordered, labeled variation set."""
    if not doc.multi:
        combos = [()]
    elif doc.mode == "zip":
        combos = list(zip(*(values for _, _, values in doc.multi)))
    else:
        combos = list(itertools.product(*(values for _, _, values
                                          in doc.multi)))
    positions = [_sorted_positions(values) for _, _, values in doc.multi]
    variations = []
    seen = set()
    for i, combo in enumerate(combos, start=1):
        label = f"sr{i}"
        if doc.label_scheme == "ordinal_letters" and combo:
            letters = "".join(_letters(positions[j][v])
                              for j, v in enumerate(combo))
            label = f"sr{i}_{letters}"
        if label in seen:
            raise InvalidConfigError(f"label collision: {label}")
        seen.add(label)
        resolved = dict(doc.base)
        varied = {}
        for (doc_key, field, _), value in zip(doc.multi, combo):
            resolved[field] = list(value) if isinstance(value, tuple) and \
                field.endswith("_distribution") else value
            varied[doc_key] = value
        try:
            building = config_from_dict(resolved)
        except InvalidConfigError as exc:
            raise InvalidConfigError(f"{doc.source}: {label}: {exc}") from None
        variations.append(Variation(label=label, building=building,
                                    varied=varied))
    return tuple(variations)
