"""Heating controllers and the external-controller contract.

Built-in controllers drive heating only: a proportional controller with
night setback and a two-point controller with hysteresis. Controller
evaluation frequency is decoupled from the integration step; commands are
held between update instants. External controllers are in-process objects
implementing ``on_update`` and may drive heating, cooling, and the window.
"""
from __future__ import annotations

import importlib
from dataclasses import dataclass

from .errors import InvalidConfigError

CONTROLLER_KINDS = ("internal_p", "two_point", "external", "none")


@dataclass(frozen=True)
class ControllerConfig:
    kind: str = "internal_p"
    day_setpoint: float = 22.0           # degC, inside the day window
    night_setpoint: float = 18.0         # degC, outside it
    day_window_h: tuple = (6.0, 22.0)    # hours of day [start, end)
    proportional_band_k: float = 2.0
    hysteresis_k: float = 0.5
    update_interval_s: int = 60          # multiple of the simulation dt
    controls: tuple = ("heating", "cooling", "window")
    external_ref: str | None = None      # "package.module:attribute"

    def validate(self, dt_s: int | None = None,
                 have_instance: bool = False) -> None:
        if self.kind not in CONTROLLER_KINDS:
            raise InvalidConfigError(f"unknown controller kind '{self.kind}'")
        if self.proportional_band_k <= 0.0:
            raise InvalidConfigError("proportional_band_k must be > 0")
        if self.hysteresis_k < 0.0:
            raise InvalidConfigError("hysteresis_k must be >= 0")
        start, end = self.day_window_h
        if not (0.0 <= start <= 24.0 and 0.0 <= end <= 24.0 and start <= end):
            raise InvalidConfigError("day_window_h must satisfy 0 <= start "
                                     "<= end <= 24")
        if self.update_interval_s <= 0:
            raise InvalidConfigError("update_interval_s must be > 0")
        if dt_s is not None and self.update_interval_s % dt_s != 0:
            raise InvalidConfigError(
                f"update_interval_s {self.update_interval_s} must be a "
                f"multiple of dt {dt_s} s")
        unknown = set(self.controls) - {"heating", "cooling", "window"}
        if unknown:
            raise InvalidConfigError(
                f"unknown control channel(s): {', '.join(sorted(unknown))}")
        if self.kind == "external" and not self.external_ref \
                and not have_instance:
            raise InvalidConfigError(
                "external controller requires external_ref or an instance")


@dataclass(frozen=True)
class ControlCommand:
    u_heat: float = 0.0
    u_cool: float = 0.0
    window_open: float | None = None     # None leaves the profile in charge

    def clamped(self) -> "ControlCommand":
        clip = lambda v: min(max(float(v), 0.0), 1.0)
        window = None if self.window_open is None else clip(self.window_open)
        return ControlCommand(clip(self.u_heat), clip(self.u_cool), window)


def setpoint_at(config: ControllerConfig, time_s: float) -> float:
    """Active setpoint for a clock time, day setpoint inside the window."""
    hour = (time_s % 86400.0) / 3600.0
    start, end = config.day_window_h
    if start <= hour < end:
        return config.day_setpoint
    return config.night_setpoint


def internal_p(config: ControllerConfig, t_air_c: float,
               time_s: float) -> ControlCommand:
    """Proportional heater: full power one band below setpoint, off above."""
    setp = setpoint_at(config, time_s)
    u = (setp - t_air_c) / config.proportional_band_k
    return ControlCommand(u_heat=min(max(u, 0.0), 1.0), u_cool=0.0)


def two_point(config: ControllerConfig, t_air_c: float, time_s: float,
              previous: ControlCommand) -> ControlCommand:
    """Hysteresis heater: switches at setpoint +- hysteresis, holds between."""
    setp = setpoint_at(config, time_s)
    if t_air_c < setp - config.hysteresis_k:
        u = 1.0
    elif t_air_c > setp + config.hysteresis_k:
        u = 0.0
    else:
        u = min(max(previous.u_heat, 0.0), 1.0)
    return ControlCommand(u_heat=u, u_cool=0.0)


class InternalController:
    """Stateful wrapper that runs a built-in rule via the external contract."""

    def __init__(self, config: ControllerConfig):
        config.validate()
        self.config = config
        self.last = ControlCommand()

    def on_update(self, observation: dict) -> ControlCommand:
        t_air = observation["t_air_c"]
        time_s = observation["time_s"]
        if self.config.kind == "two_point":
            cmd = two_point(self.config, t_air, time_s, self.last)
        else:
            cmd = internal_p(self.config, t_air, time_s)
        self.last = cmd
        return cmd


def as_command(value) -> ControlCommand:
    """Normalize an external controller's return value and clamp it."""
    if isinstance(value, ControlCommand):
        return value.clamped()
    if isinstance(value, dict):
        unknown = set(value) - {"u_heat", "u_cool", "window_open"}
        if unknown:
            raise InvalidConfigError(
                f"unknown command field(s): {', '.join(sorted(unknown))}")
        return ControlCommand(
            u_heat=value.get("u_heat", 0.0), u_cool=value.get("u_cool", 0.0),
            window_open=value.get("window_open")).clamped()
    raise InvalidConfigError(
        f"controller must return ControlCommand or dict, got {type(value)!r}")


def resolve_external(ref: str):
    """Import an external controller from a 'module:attribute' reference.

    The attribute may be an instance or a zero-argument callable returning
    one; the resolved object must expose ``on_update``.
    """
    if ":" not in ref:
        raise InvalidConfigError(
            f"external_ref '{ref}' must look like 'package.module:attribute'")
    mod_name, attr = ref.split(":", 1)
    try:
        mod = importlib.import_module(mod_name)
        obj = getattr(mod, attr)
    except (ImportError, AttributeError) as exc:
        raise InvalidConfigError(f"cannot resolve external_ref '{ref}': {exc}")
    if callable(obj) and not hasattr(obj, "on_update"):
        obj = obj()
    if not hasattr(obj, "on_update"):
        raise InvalidConfigError(
            f"external controller '{ref}' lacks an on_update method")
    return obj
