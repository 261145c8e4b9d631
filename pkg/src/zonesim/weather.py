"""Weather ingestion, solar position, and per-surface incident irradiance.

Hourly records are anchored at the start of their hour: record k covers
[k h, k+1 h). Dry-bulb temperature is interpolated linearly between record
anchors, irradiance is held piecewise-constant over each hour so that
annual insolation integrals are preserved exactly. The sun position for a
record is evaluated at the record's midpoint.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .building import ORIENTATIONS, SURFACES, SURFACE_AZIMUTH
from .errors import WeatherFormatError

HOURS_PER_YEAR = 8760
SECONDS_PER_YEAR = HOURS_PER_YEAR * 3600
MISSING_DRYBULB = 99.9
MISSING_RADIATION = 9999.0
DEFAULT_ALBEDO = 0.2

# 1-based EPW data columns, part of the format contract.
_COL_DRYBULB = 7
_COL_GHI = 14
_COL_DNI = 15
_COL_DHI = 16


@dataclass(frozen=True)
class Site:
    name: str
    latitude: float        # deg, north positive
    longitude: float       # deg, east positive
    timezone: float        # h offset from UTC, east positive
    elevation: float       # m


@dataclass(frozen=True)
class WeatherSeries:
    """One non-leap year of hourly weather, immutable once parsed."""

    site: Site
    drybulb_c: np.ndarray
    ghi_wm2: np.ndarray
    dni_wm2: np.ndarray
    dhi_wm2: np.ndarray
    source: str


def parse_epw(data, source: str = "<epw>") -> WeatherSeries:
    """Parse EPW text (str or bytes) into a WeatherSeries.

    Header line 1 must start with LOCATION; counting that token as field
    1, fields 7/8/9/10 are latitude, longitude, timezone, and elevation.
    Eight header lines precede exactly 8760 data rows. Missing-value
    sentinels (99.9 dry-bulb, 9999 radiation) are filled by linear
    interpolation between neighbors, held at the edges.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8", errors="replace")
    lines = data.splitlines()
    if not lines or not lines[0].upper().startswith("LOCATION"):
        raise WeatherFormatError("missing LOCATION header line")
    loc = lines[0].split(",")
    if len(loc) < 10:
        raise WeatherFormatError("LOCATION header has too few fields")
    try:
        site = Site(name=loc[1].strip(), latitude=float(loc[6]),
                    longitude=float(loc[7]), timezone=float(loc[8]),
                    elevation=float(loc[9]))
    except ValueError:
        raise WeatherFormatError("LOCATION header fields 7-10 must be numeric")
    if not -90.0 <= site.latitude <= 90.0:
        raise WeatherFormatError(f"latitude {site.latitude} outside [-90, 90]")

    rows = [ln for ln in lines[8:] if ln.strip()]
    if len(rows) != HOURS_PER_YEAR:
        raise WeatherFormatError(
            f"expected {HOURS_PER_YEAR} records, found {len(rows)}")
    cols = (_COL_DRYBULB, _COL_GHI, _COL_DNI, _COL_DHI)
    out = np.empty((HOURS_PER_YEAR, 4))
    for r, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) < _COL_DHI:
            raise WeatherFormatError(f"row {r + 1}: only {len(parts)} columns")
        for c, col in enumerate(cols):
            try:
                out[r, c] = float(parts[col - 1])
            except ValueError:
                raise WeatherFormatError(
                    f"row {r + 1}, column {col}: "
                    f"cannot parse '{parts[col - 1]}'")
    drybulb = _fill_missing(out[:, 0], out[:, 0] == MISSING_DRYBULB, "dry-bulb")
    ghi = _fill_missing(out[:, 1], out[:, 1] == MISSING_RADIATION, "GHI")
    dni = _fill_missing(out[:, 2], out[:, 2] == MISSING_RADIATION, "DNI")
    dhi = _fill_missing(out[:, 3], out[:, 3] == MISSING_RADIATION, "DHI")
    return WeatherSeries(site=site, drybulb_c=drybulb,
                         ghi_wm2=np.maximum(ghi, 0.0),
                         dni_wm2=np.maximum(dni, 0.0),
                         dhi_wm2=np.maximum(dhi, 0.0), source=source)


def _fill_missing(values: np.ndarray, missing: np.ndarray,
                  label: str) -> np.ndarray:
    values = values.astype(np.float64, copy=True)
    if not missing.any():
        return values
    if missing.all():
        raise WeatherFormatError(f"all {label} values are missing")
    idx = np.arange(values.size)
    values[missing] = np.interp(idx[missing], idx[~missing], values[~missing])
    return values


def parse_weather_csv(text: str, source: str = "<csv>") -> WeatherSeries:
    """Parse the simple synthetic-fixture format.

    Three header lines: ``site,<name>``, ``coords,<lat>,<lon>,<tz>,<elev>``,
    then the column header ``time_h,temp_c,ghi,dni,dhi``, followed by 8760
    data rows.
    """
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 3 or not lines[0].startswith("site,"):
        raise WeatherFormatError("missing 'site,' header line")
    name = lines[0].split(",", 1)[1].strip()
    coords = lines[1].split(",")
    if coords[0] != "coords" or len(coords) != 5:
        raise WeatherFormatError("second line must be 'coords,lat,lon,tz,elev'")
    try:
        site = Site(name, *(float(v) for v in coords[1:]))
    except ValueError:
        raise WeatherFormatError("coords line fields must be numeric")
    if lines[2].strip() != "time_h,temp_c,ghi,dni,dhi":
        raise WeatherFormatError(
            "third line must be the header 'time_h,temp_c,ghi,dni,dhi'")
    rows = lines[3:]
    if len(rows) != HOURS_PER_YEAR:
        raise WeatherFormatError(
            f"expected {HOURS_PER_YEAR} records, found {len(rows)}")
    data = np.empty((HOURS_PER_YEAR, 4))
    for r, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) != 5:
            raise WeatherFormatError(f"row {r + 1}: expected 5 columns")
        try:
            data[r] = [float(p) for p in parts[1:]]
        except ValueError:
            raise WeatherFormatError(f"row {r + 1}: non-numeric value")
    return WeatherSeries(site=site, drybulb_c=data[:, 0],
                         ghi_wm2=np.maximum(data[:, 1], 0.0),
                         dni_wm2=np.maximum(data[:, 2], 0.0),
                         dhi_wm2=np.maximum(data[:, 3], 0.0), source=source)


def load_weather(path) -> WeatherSeries:
    """Load a weather file, picking the parser from the file extension."""
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".epw":
        return parse_epw(text, source=p.name)
    return parse_weather_csv(text, source=p.name)


def solar_position(site: Site, t_s: float) -> tuple:
    """Sun altitude and azimuth (degrees, azimuth clockwise from north).

    ``t_s`` counts seconds from Jan 1 00:00 local standard time of a
    non-leap year. Declination follows Cooper, the equation of time
    follows Spencer, and the hour angle corrects local standard time by
    longitude and zone meridian.
    """
    day = int(t_s // 86400) % 365
    n = day + 1
    minute_local = (t_s % 86400) / 60.0
    b = 2.0 * math.pi * (n - 1) / 365.0
    eot = 229.18 * (0.000075 + 0.001868 * math.cos(b) - 0.032077 * math.sin(b)
                    - 0.014615 * math.cos(2 * b) - 0.04089 * math.sin(2 * b))
    minute_solar = minute_local + 4.0 * (site.longitude - 15.0 * site.timezone) \
        + eot
    omega = math.radians((minute_solar / 60.0 - 12.0) * 15.0)
    decl = math.radians(23.45) * math.sin(2.0 * math.pi * (284 + n) / 365.0)
    lat = math.radians(site.latitude)
    sin_alt = (math.sin(lat) * math.sin(decl)
               + math.cos(lat) * math.cos(decl) * math.cos(omega))
    alt = math.degrees(math.asin(min(max(sin_alt, -1.0), 1.0)))
    az_south = math.atan2(
        math.sin(omega),
        math.cos(omega) * math.sin(lat) - math.tan(decl) * math.cos(lat))
    az = (180.0 + math.degrees(az_south)) % 360.0
    return alt, az


def incident_irradiance(record, sun, surface: str,
                        albedo: float = DEFAULT_ALBEDO) -> float:
    """Total irradiance on one surface for one record, in W/m2.

    ``record`` is (GHI, DNI, DHI); ``sun`` is (altitude, azimuth) from
    solar_position at the record midpoint. Vertical facades see half the
    isotropic sky diffuse plus half the ground-reflected global; the roof
    is horizontal with the full sky view and no ground term.
    """
    ghi, dni, dhi = (float(v) for v in record)
    alt, az = sun
    if surface == "roof":
        direct = dni * max(0.0, math.sin(math.radians(alt))) if alt > 0 else 0.0
        return direct + dhi
    if surface not in ORIENTATIONS:
        raise ValueError(f"unknown surface '{surface}'")
    gamma = SURFACE_AZIMUTH[surface]
    direct = 0.0
    if alt > 0.0:
        cos_inc = math.cos(math.radians(alt)) * math.cos(math.radians(az - gamma))
        direct = dni * max(0.0, cos_inc)
    return direct + 0.5 * dhi + 0.5 * albedo * ghi


@dataclass(frozen=True)
class IncidentTable:
    """Hourly incident irradiance per surface, resolved once per run."""

    albedo: float
    total_wm2: np.ndarray     # (8760, 5) in SURFACES order
    direct_wm2: np.ndarray    # (8760, 5) beam share only
    diffuse_wm2: np.ndarray   # (8760,) horizontal diffuse as published


def incident_table(series: WeatherSeries,
                   albedo: float = DEFAULT_ALBEDO) -> IncidentTable:
    """Vectorized incident_irradiance over the whole year."""
    t_mid = (np.arange(HOURS_PER_YEAR) + 0.5) * 3600.0
    n = (t_mid // 86400).astype(np.int64) + 1
    minute_local = (t_mid % 86400) / 60.0
    b = 2.0 * np.pi * (n - 1) / 365.0
    eot = 229.18 * (0.000075 + 0.001868 * np.cos(b) - 0.032077 * np.sin(b)
                    - 0.014615 * np.cos(2 * b) - 0.04089 * np.sin(2 * b))
    minute_solar = minute_local + 4.0 * (
        series.site.longitude - 15.0 * series.site.timezone) + eot
    omega = np.radians((minute_solar / 60.0 - 12.0) * 15.0)
    decl = np.radians(23.45) * np.sin(2.0 * np.pi * (284 + n) / 365.0)
    lat = math.radians(series.site.latitude)
    sin_alt = (math.sin(lat) * np.sin(decl)
               + math.cos(lat) * np.cos(decl) * np.cos(omega))
    alt = np.degrees(np.arcsin(np.clip(sin_alt, -1.0, 1.0)))
    az = (180.0 + np.degrees(np.arctan2(
        np.sin(omega),
        np.cos(omega) * math.sin(lat) - np.tan(decl) * math.cos(lat)))) % 360.0

    up = alt > 0.0
    total = np.zeros((HOURS_PER_YEAR, len(SURFACES)))
    direct = np.zeros_like(total)
    for i, o in enumerate(ORIENTATIONS):
        cos_inc = np.cos(np.radians(alt)) * np.cos(np.radians(az
                                                             - SURFACE_AZIMUTH[o]))
        direct[:, i] = np.where(up, series.dni_wm2 * np.maximum(cos_inc, 0.0),
                                0.0)
        total[:, i] = direct[:, i] + 0.5 * series.dhi_wm2 \
            + 0.5 * albedo * series.ghi_wm2
    roof = len(SURFACES) - 1
    direct[:, roof] = np.where(
        up, series.dni_wm2 * np.maximum(np.sin(np.radians(alt)), 0.0), 0.0)
    total[:, roof] = direct[:, roof] + series.dhi_wm2
    return IncidentTable(albedo=albedo, total_wm2=total, direct_wm2=direct,
                         diffuse_wm2=series.dhi_wm2.copy())


def drybulb_nodes(series: WeatherSeries) -> np.ndarray:
    """Record anchors extended by one held value for year-end interpolation."""
    return np.append(series.drybulb_c, series.drybulb_c[-1])


def interpolate_drybulb(series: WeatherSeries, t_s: float) -> float:
    if not 0.0 <= t_s <= SECONDS_PER_YEAR:
        raise ValueError(f"time {t_s} s outside the weather year")
    hour = min(int(t_s // 3600), HOURS_PER_YEAR - 1)
    frac = (t_s - hour * 3600.0) / 3600.0
    nodes = series.drybulb_c
    upper = nodes[hour + 1] if hour + 1 < HOURS_PER_YEAR else nodes[hour]
    return float(nodes[hour] * (1.0 - frac) + upper * frac)


def sample(series: WeatherSeries, t_s: float, table: IncidentTable):
    """Step inputs fragment at time t: interpolated dry-bulb, hourly incident.

    Returns a StepInputs with zero commands, ready for the caller to
    overwrite gains and control values.
    """
    from .network import StepInputs

    t_out = interpolate_drybulb(series, t_s)
    hour = min(int(t_s // 3600), HOURS_PER_YEAR - 1)
    return StepInputs(t_out_c=t_out, incident_wm2=table.total_wm2[hour])
