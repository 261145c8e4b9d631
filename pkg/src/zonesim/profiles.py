"""Yearly internal-gain and window-opening schedules.

A year is built from four day templates (workday, saturday, sunday,
holiday) and a calendar that maps each of the 365 days to a template,
with holidays overriding the weekday. Series run at 5-minute resolution,
105120 slots per year.

The window rule is a deliberately simple placeholder for occupant airing
behavior: a short opening event at fixed awareness times whenever the
dwelling is occupied and nobody is asleep, optionally jittered by a
seeded offset. It is isolated here so a richer behavioral model can
replace it without touching the simulation.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, ProfileFormatError

SLOT_S = 300
SLOTS_PER_DAY = 86400 // SLOT_S          # 288
DAYS_PER_YEAR = 365
SLOTS_PER_YEAR = DAYS_PER_YEAR * SLOTS_PER_DAY
DAY_KINDS = ("workday", "saturday", "sunday", "holiday")
GAIN_PER_PERSON_W = 70.0                 # sensible, seated adult
PROFILE_HEADER = "time_s,internal_gains_w,window_open"
_DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
_WEEKDAY_NAMES = ("monday", "tuesday", "wednesday", "thursday", "friday",
                  "saturday", "sunday")


@dataclass(frozen=True)
class Segment:
    """One block of a day template, [start, end) in minutes of day."""

    start_min: int
    end_min: int
    persons: float = 0.0
    appliance_w: float = 0.0
    sleeping: bool = False


@dataclass(frozen=True)
class DayProfile:
    kind: str
    segments: tuple

    def validate(self) -> None:
        if self.kind not in DAY_KINDS:
            raise InvalidConfigError(f"unknown day kind '{self.kind}'")
        prev_end = 0
        for seg in self.segments:
            if not (0 <= seg.start_min < seg.end_min <= 1440):
                raise InvalidConfigError(
                    f"{self.kind}: segment {seg.start_min}-{seg.end_min} "
                    "must lie within [0, 1440) with start < end")
            if seg.start_min < prev_end:
                raise InvalidConfigError(
                    f"{self.kind}: segments overlap at minute {seg.start_min}")
            if seg.persons < 0 or seg.appliance_w < 0:
                raise InvalidConfigError(
                    f"{self.kind}: persons and appliance gains must be >= 0")
            prev_end = seg.end_min


@dataclass(frozen=True)
class Calendar:
    jan1_weekday: int = 0                # 0 = Monday
    holidays: tuple = ()                 # (month, day) pairs

    def validate(self) -> None:
        if not 0 <= self.jan1_weekday <= 6:
            raise InvalidConfigError("jan1_weekday must lie in 0..6")
        for month, day in self.holidays:
            if not 1 <= month <= 12 or not 1 <= day <= _DAYS_IN_MONTH[month - 1]:
                raise InvalidConfigError(f"invalid holiday date {month}-{day}")


@dataclass(frozen=True)
class WindowRules:
    airing_minutes: int = 10
    awareness_minutes: tuple = (7 * 60, 19 * 60)   # minutes of day
    stochastic: bool = False
    jitter_minutes: int = 30


def weekday_name(index: int) -> str:
    return _WEEKDAY_NAMES[index]


def parse_weekday(name: str) -> int:
    try:
        return _WEEKDAY_NAMES.index(name.strip().lower())
    except ValueError:
        raise InvalidConfigError(f"unknown weekday '{name}'")


def day_kind_for(calendar: Calendar, day_of_year: int) -> str:
    """Template kind for one day, holiday overriding the weekday."""
    month, day = _month_day(day_of_year)
    if (month, day) in set(calendar.holidays):
        return "holiday"
    weekday = (calendar.jan1_weekday + day_of_year) % 7
    if weekday == 5:
        return "saturday"
    if weekday == 6:
        return "sunday"
    return "workday"


def _month_day(day_of_year: int) -> tuple:
    d = day_of_year
    for m, length in enumerate(_DAYS_IN_MONTH, start=1):
        if d < length:
            return m, d + 1
        d -= length
    raise ValueError(f"day_of_year {day_of_year} out of range")


def _day_slots(profile: DayProfile) -> tuple:
    persons = np.zeros(SLOTS_PER_DAY)
    appliances = np.zeros(SLOTS_PER_DAY)
    sleeping = np.zeros(SLOTS_PER_DAY, dtype=bool)
    for seg in profile.segments:
        a = seg.start_min * 60 // SLOT_S
        b = -(-seg.end_min * 60 // SLOT_S)        # ceil to full slots
        persons[a:b] = seg.persons
        appliances[a:b] = seg.appliance_w
        sleeping[a:b] = seg.sleeping
    return persons, appliances, sleeping


def expand_occupancy(day_profiles: dict, calendar: Calendar) -> tuple:
    """Yearly (persons, appliance_w, sleeping) arrays at 5-min resolution."""
    calendar.validate()
    missing = [k for k in DAY_KINDS if k not in day_profiles]
    if missing:
        raise InvalidConfigError(f"missing day profile(s): {', '.join(missing)}")
    per_kind = {}
    for kind, prof in day_profiles.items():
        prof.validate()
        per_kind[kind] = _day_slots(prof)
    persons = np.empty(SLOTS_PER_YEAR)
    appliances = np.empty(SLOTS_PER_YEAR)
    sleeping = np.empty(SLOTS_PER_YEAR, dtype=bool)
    for d in range(DAYS_PER_YEAR):
        p, a, s = per_kind[day_kind_for(calendar, d)]
        sl = slice(d * SLOTS_PER_DAY, (d + 1) * SLOTS_PER_DAY)
        persons[sl] = p
        appliances[sl] = a
        sleeping[sl] = s
    return persons, appliances, sleeping


def expand_year(day_profiles: dict, calendar: Calendar,
                gain_per_person_w: float = GAIN_PER_PERSON_W) -> np.ndarray:
    """Internal-gains series in W: persons times per-person load plus
    appliance gains, per 5-minute slot."""
    persons, appliances, _ = expand_occupancy(day_profiles, calendar)
    return persons * gain_per_person_w + appliances


def window_schedule(persons: np.ndarray, sleeping: np.ndarray,
                    rules: WindowRules = WindowRules(),
                    seed: int | None = None) -> np.ndarray:
    """0/1 airing series from occupancy and the awareness rule.

    An event of ``airing_minutes`` starts at each awareness time of each
    day when that slot is occupied and awake. Stochastic mode shifts each
    event start by a seeded uniform offset in plus/minus
    ``jitter_minutes``. Whatever the event placement, the schedule stays
    closed over unoccupied or sleeping slots.
    """
    if persons.shape[0] != SLOTS_PER_YEAR or sleeping.shape[0] != SLOTS_PER_YEAR:
        raise InvalidConfigError("occupancy series must cover the full year")
    rng = np.random.default_rng(seed) if rules.stochastic else None
    open_slots = np.zeros(SLOTS_PER_YEAR, dtype=np.int8)
    event_slots = max(1, -(-rules.airing_minutes * 60 // SLOT_S))
    for d in range(DAYS_PER_YEAR):
        base = d * SLOTS_PER_DAY
        for minute in rules.awareness_minutes:
            slot = base + minute * 60 // SLOT_S
            if rng is not None:
                offset = int(rng.integers(-rules.jitter_minutes,
                                          rules.jitter_minutes + 1))
                slot += offset * 60 // SLOT_S
            slot = min(max(slot, base), base + SLOTS_PER_DAY - 1)
            if persons[slot] > 0 and not sleeping[slot]:
                end = min(slot + event_slots, base + SLOTS_PER_DAY)
                open_slots[slot:end] = 1
    awake_occupied = (persons > 0) & ~sleeping
    open_slots[~awake_occupied] = 0
    return open_slots


def write_profile_csv(path, gains_w: np.ndarray,
                      window_open: np.ndarray) -> None:
    """Write the profile CSV; floats use repr so reads are lossless."""
    if gains_w.shape != window_open.shape:
        raise InvalidConfigError("gains and window series must align")
    buf = io.StringIO()
    buf.write(PROFILE_HEADER + "\n")
    for i in range(gains_w.shape[0]):
        buf.write(f"{i * SLOT_S},{float(gains_w[i])!r},{int(window_open[i])}\n")
    Path(path).write_text(buf.getvalue())


def read_profile_csv(path) -> tuple:
    """Read (gains_w, window_open) arrays; header and times are strict."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != PROFILE_HEADER:
        raise ProfileFormatError(f"expected header '{PROFILE_HEADER}'")
    rows = [ln for ln in lines[1:] if ln.strip()]
    gains = np.empty(len(rows))
    window = np.empty(len(rows), dtype=np.int8)
    prev_t = -1
    for i, line in enumerate(rows):
        parts = line.split(",")
        if len(parts) != 3:
            raise ProfileFormatError(f"row {i + 1}: expected 3 columns")
        try:
            t = int(parts[0])
            gains[i] = float(parts[1])
            window[i] = int(parts[2])
        except ValueError:
            raise ProfileFormatError(f"row {i + 1}: non-numeric value")
        if t != (prev_t + SLOT_S if prev_t >= 0 else 0):
            raise ProfileFormatError(
                f"row {i + 1}: time {t} breaks the {SLOT_S} s grid")
        prev_t = t
        if gains[i] < 0 or window[i] not in (0, 1):
            raise ProfileFormatError(
                f"row {i + 1}: gains must be >= 0 and window_open 0 or 1")
    return gains, window
