"""Single-run orchestration: prepare inputs, integrate, assemble the trace.

A run takes a BuildingConfig plus simulation and controller settings,
warm-starts from the steady state of the first instant, and advances the
fast kernel over the horizon. For external controllers the horizon is
chunked at the controller update interval; built-in controllers run as a
single kernel call with the control law evaluated inside the loop.

``run_reference`` replays the same prepared inputs through the readable
per-step path in :mod:`zonesim.network` and exists to pin the kernel down
in tests and benchmarks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace as dc_replace
from functools import lru_cache

import numpy as np

from . import kernel
from .building import (
    CP_AIR, DISCHARGE_COEFF, GRAVITY, RHO_AIR, BuildingConfig, ModelParams,
    R_SE, SURFACES, build_model_params,
)
from .control import (
    ControlCommand, ControllerConfig, InternalController, as_command,
    internal_p, resolve_external, setpoint_at, two_point,
)
from .errors import BatchRunError, InvalidConfigError, ProfileFormatError
from .network import (
    EnergyLedger, StepInputs, ThermalNetwork, ZoneState, annual_energy,
    assemble_network, steady_state, step,
)
from .profiles import SLOT_S, SLOTS_PER_YEAR, read_profile_csv
from .weather import (
    DEFAULT_ALBEDO, HOURS_PER_YEAR, SECONDS_PER_YEAR, IncidentTable,
    WeatherSeries, drybulb_nodes, incident_table, load_weather,
)

DEFAULT_OUTPUT_COLUMNS = (
    "time_s", "t_air_c", "t_out_c", "q_heat_w", "u_heat", "window_open",
    "gains_w", "sol_dir_s_wm2", "sol_dif_wm2",
)

BUNDLED_WEATHER_REF = "bundled"


def resolve_weather_path(path: str) -> str:
    """Map the ``bundled`` shorthand to the packaged weather file."""
    if path == BUNDLED_WEATHER_REF:
        from . import bundled_weather_path
        return bundled_weather_path()
    return path


@dataclass(frozen=True)
class SimulationSettings:
    start_s: int = 0
    stop_s: int = SECONDS_PER_YEAR
    dt_s: int = 60
    output_interval_s: int = 300
    output_columns: tuple = DEFAULT_OUTPUT_COLUMNS
    ground_albedo: float = DEFAULT_ALBEDO
    seed: int = 0

    def validate(self) -> None:
        for key in ("start_s", "stop_s", "dt_s", "output_interval_s"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool):
                raise InvalidConfigError(f"{key}: must be an integer, got {v!r}")
        if self.dt_s <= 0:
            raise InvalidConfigError("dt_s: must be > 0")
        if not 0 <= self.start_s < self.stop_s:
            raise InvalidConfigError("start_s/stop_s: need 0 <= start < stop")
        if self.stop_s > SECONDS_PER_YEAR:
            raise InvalidConfigError(
                f"stop_s: horizon ends at the weather year ({SECONDS_PER_YEAR} s)")
        if self.output_interval_s % self.dt_s != 0:
            raise InvalidConfigError(
                "output_interval_s: must be a multiple of dt_s")
        if (self.stop_s - self.start_s) % self.output_interval_s != 0:
            raise InvalidConfigError(
                "stop_s: horizon must be a whole number of output intervals")
        if not 0.0 <= self.ground_albedo <= 1.0:
            raise InvalidConfigError("ground_albedo: must lie in [0, 1]")


@dataclass
class PreparedRun:
    """Everything a backend needs, resolved once per run."""

    label: str
    building: BuildingConfig
    params: ModelParams
    net: ThermalNetwork
    series: WeatherSeries
    table: IncidentTable
    sim: SimulationSettings
    control: ControllerConfig
    external: object | None

    n: int = 0
    n_steps: int = 0
    out_every: int = 0
    upd_every: int = 0
    ctrl_kind: int = kernel.CTRL_HELD

    t0: np.ndarray = field(default=None)       # warm-start temperatures
    a_base: np.ndarray = field(default=None)
    m_inv: np.ndarray = field(default=None)
    cdt: np.ndarray = field(default=None)
    gout: np.ndarray = field(default=None)
    g_ground: np.ndarray = field(default=None)
    liftq_h: np.ndarray = field(default=None)
    sola_h: np.ndarray = field(default=None)
    qsolt_h: np.ndarray = field(default=None)
    tout_h: np.ndarray = field(default=None)
    gains_5m: np.ndarray = field(default=None)
    win_5m: np.ndarray = field(default=None)
    k_wair: float = 0.0
    day_start_s: int = 0
    day_end_s: int = 0


@dataclass
class RunResult:
    label: str
    trace: dict
    ledger: EnergyLedger
    summary: dict
    residual_max_step_rel: float
    residual_cumulative_rel: float
    final_temperatures: np.ndarray
    params: ModelParams
    backend: str
    n_steps: int


def controller_from_building(building: BuildingConfig,
                             base: ControllerConfig | None = None,
                             dt_s: int = 60) -> ControllerConfig:
    """Fill controller setpoints from the building's room setpoints."""
    cfg = base if base is not None else ControllerConfig()
    kind = cfg.kind
    if not building.useInternalController and kind in ("internal_p",
                                                       "two_point"):
        kind = "none"
    return dc_replace(
        cfg, kind=kind,
        day_setpoint=building.roomTempUpperSetpoint,
        night_setpoint=building.roomTempLowerSetpoint,
        update_interval_s=cfg.update_interval_s or dt_s)


@lru_cache(maxsize=16)
def _read_profile_cached(path: str) -> tuple:
    # Batches reread the same profile for every variation; treat the
    # returned arrays as read-only.
    return read_profile_csv(path)


def _load_profiles(building: BuildingConfig, stop_s: int) -> tuple:
    gains = np.zeros(SLOTS_PER_YEAR)
    window = np.zeros(SLOTS_PER_YEAR)
    needed = -(-stop_s // SLOT_S)
    if building.internal_gain_path:
        g, _ = _read_profile_cached(str(building.internal_gain_path))
        if g.shape[0] < needed:
            raise ProfileFormatError(
                f"internal_gain_path: profile shorter than horizon "
                f"({g.shape[0]} of {needed} slots)")
        gains[:g.shape[0]] = g[:SLOTS_PER_YEAR]
    if building.window_opening_path:
        _, w = _read_profile_cached(str(building.window_opening_path))
        if w.shape[0] < needed:
            raise ProfileFormatError(
                f"window_opening_path: profile shorter than horizon "
                f"({w.shape[0]} of {needed} slots)")
        window[:w.shape[0]] = w[:SLOTS_PER_YEAR]
    return gains, window


_CTRL_CODE = {"internal_p": kernel.CTRL_INTERNAL_P,
              "two_point": kernel.CTRL_TWO_POINT,
              "none": kernel.CTRL_HELD,
              "external": kernel.CTRL_HELD}


def prepare_run(building: BuildingConfig, sim: SimulationSettings | None = None,
                control: ControllerConfig | None = None,
                weather: WeatherSeries | None = None,
                table: IncidentTable | None = None,
                gains_5m: np.ndarray | None = None,
                window_5m: np.ndarray | None = None,
                controller: object | None = None,
                label: str = "run") -> PreparedRun:
    """Resolve parameters, inputs, and linear algebra for one run."""
    sim = sim if sim is not None else SimulationSettings()
    sim.validate()
    if control is None:
        control = controller_from_building(building, dt_s=sim.dt_s)
    control.validate(dt_s=sim.dt_s, have_instance=controller is not None)
    if weather is None:
        if not building.weather_path:
            raise InvalidConfigError("weather_path: required to run")
        weather = load_weather(resolve_weather_path(building.weather_path))
    params = build_model_params(building)
    net = assemble_network(params)
    if table is None or table.albedo != sim.ground_albedo:
        table = incident_table(weather, albedo=sim.ground_albedo)
    if gains_5m is None or window_5m is None:
        g, w = _load_profiles(building, sim.stop_s)
        gains_5m = gains_5m if gains_5m is not None else g
        window_5m = window_5m if window_5m is not None else w

    external = controller
    if control.kind == "external" and external is None:
        external = resolve_external(control.external_ref)

    prep = PreparedRun(
        label=label, building=building, params=params, net=net,
        series=weather, table=table, sim=sim, control=control,
        external=external)
    prep.n = net.n_nodes
    prep.n_steps = (sim.stop_s - sim.start_s) // sim.dt_s
    if (sim.stop_s - sim.start_s) % sim.dt_s != 0:
        raise InvalidConfigError("stop_s: horizon must be a whole number of "
                                 "dt steps")
    prep.out_every = sim.output_interval_s // sim.dt_s
    prep.upd_every = max(control.update_interval_s // sim.dt_s, 1)
    prep.ctrl_kind = _CTRL_CODE[control.kind]
    prep.day_start_s = int(round(control.day_window_h[0] * 3600))
    prep.day_end_s = int(round(control.day_window_h[1] * 3600))

    n = prep.n
    cdt = net.capacity / float(sim.dt_s)
    k_base = np.zeros((n, n))
    for i, j, g in net.edges:
        k_base[i, i] += g
        k_base[j, j] += g
        k_base[i, j] -= g
        k_base[j, i] -= g
    gout = np.zeros(n)
    g_ground = np.zeros(n)
    liftq_h = np.zeros((HOURS_PER_YEAR, n))
    alpha = net.solar_absorptance
    for node, channel, g in net.boundary_links:
        k_base[node, node] += g
        if channel == "ground":
            g_ground[node] += g
        elif channel == "outdoor":
            gout[node] += g
        else:
            surf = SURFACES.index(channel.split(":", 1)[1])
            gout[node] += g
            liftq_h[:, node] += g * alpha * table.total_wm2[:, surf] * R_SE
    prep.a_base = np.diag(cdt) + k_base
    prep.m_inv = np.linalg.inv(prep.a_base)
    prep.cdt = cdt
    prep.gout = gout
    prep.g_ground = g_ground
    prep.liftq_h = liftq_h
    prep.sola_h = liftq_h.sum(axis=1)
    prep.qsolt_h = table.total_wm2[:, :4] @ net.transmit_coeff[:4]
    prep.tout_h = drybulb_nodes(weather)
    prep.gains_5m = np.asarray(gains_5m, dtype=np.float64)
    prep.win_5m = np.asarray(window_5m, dtype=np.float64)
    if prep.gains_5m.shape[0] != SLOTS_PER_YEAR or \
            prep.win_5m.shape[0] != SLOTS_PER_YEAR:
        raise InvalidConfigError("profile series must cover the full year")
    if net.openable_window_area > 0.0 and net.openable_window_height > 0.0:
        prep.k_wair = (RHO_AIR * CP_AIR * (DISCHARGE_COEFF / 3.0)
                       * net.openable_window_area
                       * math.sqrt(GRAVITY * net.openable_window_height))
    prep.t0 = _warm_start(prep)
    return prep


def _inputs_at(prep: PreparedRun, t_s: int, u_heat: float = 0.0,
               u_cool: float = 0.0,
               window_override: float = -1.0) -> StepInputs:
    hour = min(t_s // 3600, HOURS_PER_YEAR - 1)
    slot = min(t_s // SLOT_S, SLOTS_PER_YEAR - 1)
    frac = (t_s - hour * 3600) / 3600.0
    t_out = prep.tout_h[hour] * (1.0 - frac) + prep.tout_h[hour + 1] * frac
    wfrac = window_override if window_override >= 0.0 else prep.win_5m[slot]
    return StepInputs(
        t_out_c=float(t_out), incident_wm2=prep.table.total_wm2[hour],
        gains_w=float(prep.gains_5m[slot]), u_heat=u_heat, u_cool=u_cool,
        window_open=float(wfrac))


def _warm_start(prep: PreparedRun) -> np.ndarray:
    state = steady_state(prep.net, _inputs_at(prep, prep.sim.start_s))
    return np.array(state.temperatures, dtype=np.float64)


def _result_from(prep: PreparedRun, acc: np.ndarray, out: dict,
                 temperatures: np.ndarray, backend: str) -> RunResult:
    ledger = EnergyLedger(*acc[:9])
    times = out["time_s"]
    trace = dict(out)
    hours = np.minimum(times // 3600, HOURS_PER_YEAR - 1).astype(np.int64)
    slots = np.minimum(times // SLOT_S, SLOTS_PER_YEAR - 1).astype(np.int64)
    frac = (times - hours * 3600) / 3600.0
    upper = np.minimum(hours + 1, HOURS_PER_YEAR)
    trace["t_out_c"] = (prep.tout_h[hours] * (1.0 - frac)
                        + prep.tout_h[upper] * frac)
    trace["q_heat_w"] = trace["u_heat"] * prep.net.q_heat_max
    trace["q_cool_w"] = trace["u_cool"] * prep.net.q_cool_max
    trace["gains_w"] = prep.gains_5m[slots]
    for i, surf in enumerate("swne"):
        trace[f"sol_dir_{surf}_wm2"] = prep.table.direct_wm2[hours, i]
    trace["sol_dir_roof_wm2"] = prep.table.direct_wm2[hours, 4]
    trace["sol_dif_wm2"] = prep.table.diffuse_wm2[hours]
    d_t = np.abs(trace["t_air_c"] - trace["t_out_c"])
    t_mean_k = 0.5 * (trace["t_air_c"] + trace["t_out_c"]) + 273.15
    g_wair = np.where(
        (trace["window_open"] > 0.0) & (d_t > 0.0) & (prep.k_wair > 0.0),
        trace["window_open"] * prep.k_wair * np.sqrt(
            np.where(d_t > 0.0, d_t, 1.0) / t_mean_k), 0.0)
    g_total = prep.net.g_vent_const + g_wair
    trace["ach_effective"] = g_total * 3600.0 / (RHO_AIR * CP_AIR
                                                 * prep.net.volume)
    summary = annual_energy(ledger, trace["t_air_c"])
    gross = acc[kernel.ACC_GROSS]
    return RunResult(
        label=prep.label, trace=trace, ledger=ledger, summary=summary,
        residual_max_step_rel=float(acc[kernel.ACC_MAX_REL]),
        residual_cumulative_rel=float(
            abs(acc[kernel.ACC_RESID]) / (gross if gross > 1.0 else 1.0)),
        final_temperatures=temperatures.copy(), params=prep.params,
        backend=backend, n_steps=prep.n_steps)


def execute(prep: PreparedRun, backend: str | None = None) -> RunResult:
    """Integrate a prepared run with the fast kernel."""
    span = kernel.get_span(backend)
    backend_name = backend if backend is not None else kernel.default_backend()
    n_out = prep.n_steps // prep.out_every + 1
    out_tair = np.empty(n_out)
    out_uh = np.empty(n_out)
    out_uc = np.empty(n_out)
    out_w = np.empty(n_out)
    acc = np.zeros(kernel.ACC_SLOTS)
    temps = prep.t0.copy()
    ctrl_state = np.zeros(2)
    mcol0 = prep.m_inv[:, 0].copy()
    m00 = float(prep.m_inv[0, 0])
    common = dict(
        m_inv=prep.m_inv, a_base=prep.a_base, mcol0=mcol0, m00=m00,
        cdt=prep.cdt, inj_heat=prep.net.inj_heat, inj_cool=prep.net.inj_cool,
        inj_gain=prep.net.inj_gain, inj_solar=prep.net.inj_solar,
        gout=prep.gout, sum_gout=float(prep.gout.sum()),
        liftq_h=prep.liftq_h, sola_h=prep.sola_h,
        g_ground=prep.g_ground, sum_gground=float(prep.g_ground.sum()),
        t_ground=prep.net.ground_temperature,
        g_vent=prep.net.g_vent_const, k_wair=prep.k_wair,
        tout_h=prep.tout_h, qsolt_h=prep.qsolt_h,
        gains_5m=prep.gains_5m, win_5m=prep.win_5m,
        day_set=prep.control.day_setpoint, night_set=prep.control.night_setpoint,
        band=prep.control.proportional_band_k, hyst=prep.control.hysteresis_k,
        day_start_s=prep.day_start_s, day_end_s=prep.day_end_s,
        upd_every=prep.upd_every,
        q_heat_max=prep.net.q_heat_max, q_cool_max=prep.net.q_cool_max,
        out_every=prep.out_every)

    def call(k0, nsteps, ctrl_kind, win_override):
        span(temps, k0, nsteps, prep.sim.start_s, prep.sim.dt_s,
             common["m_inv"], common["a_base"], common["mcol0"], common["m00"],
             common["cdt"], common["inj_heat"], common["inj_cool"],
             common["inj_gain"], common["inj_solar"],
             common["gout"], common["sum_gout"], common["liftq_h"],
             common["sola_h"], common["g_ground"], common["sum_gground"],
             common["t_ground"], common["g_vent"], common["k_wair"],
             common["tout_h"], common["qsolt_h"], common["gains_5m"],
             common["win_5m"], ctrl_kind, common["day_set"],
             common["night_set"], common["band"], common["hyst"],
             common["day_start_s"], common["day_end_s"], common["upd_every"],
             ctrl_state, win_override, common["q_heat_max"],
             common["q_cool_max"], common["out_every"],
             out_tair, out_uh, out_uc, out_w, acc)

    if prep.external is None:
        call(0, prep.n_steps, prep.ctrl_kind, -1.0)
    else:
        _run_external(prep, call, ctrl_state, temps, out_uh, out_uc)

    times = prep.sim.start_s + np.arange(n_out, dtype=np.int64) \
        * prep.sim.output_interval_s
    out = {"time_s": times, "t_air_c": out_tair, "u_heat": out_uh,
           "u_cool": out_uc, "window_open": out_w}
    return _result_from(prep, acc, out, temps, backend_name)


def _apply_controls(prep: PreparedRun, cmd: ControlCommand) -> tuple:
    u_h = cmd.u_heat if "heating" in prep.control.controls else 0.0
    u_c = cmd.u_cool if "cooling" in prep.control.controls else 0.0
    win = cmd.window_open if "window" in prep.control.controls else None
    return u_h, u_c, (-1.0 if win is None else float(win))


def _observation(prep: PreparedRun, t_s: int, t_air: float,
                 last: ControlCommand) -> dict:
    hour = min(t_s // 3600, HOURS_PER_YEAR - 1)
    inp = _inputs_at(prep, t_s)
    return {"time_s": t_s, "t_air_c": float(t_air), "t_out_c": inp.t_out_c,
            "incident_wm2": prep.table.total_wm2[hour].copy(),
            "last_command": last}


def _run_external(prep: PreparedRun, call, ctrl_state: np.ndarray,
                  temps: np.ndarray, out_uh: np.ndarray,
                  out_uc: np.ndarray) -> None:
    last = ControlCommand()
    k = 0
    while k < prep.n_steps:
        t_s = prep.sim.start_s + k * prep.sim.dt_s
        try:
            cmd = as_command(prep.external.on_update(
                _observation(prep, t_s, float(temps[0]), last)))
        except Exception as exc:
            raise BatchRunError(prep.label, f"external controller failed "
                                f"at t={t_s} s: {exc}") from exc
        last = cmd
        u_h, u_c, win = _apply_controls(prep, cmd)
        ctrl_state[0] = u_h
        ctrl_state[1] = u_c
        chunk = min(prep.upd_every, prep.n_steps - k)
        call(k, chunk, kernel.CTRL_HELD, win)
        k += chunk
    if prep.n_steps % prep.upd_every == 0:
        # Mirror the built-in path: a fresh command is recorded at the
        # horizon end when it lands on an update instant.
        t_s = prep.sim.stop_s
        try:
            cmd = as_command(prep.external.on_update(
                _observation(prep, t_s, float(temps[0]), last)))
        except Exception as exc:
            raise BatchRunError(prep.label, f"external controller failed "
                                f"at t={t_s} s: {exc}") from exc
        u_h, u_c, _ = _apply_controls(prep, cmd)
        out_uh[-1] = u_h
        out_uc[-1] = u_c


def run_simulation(building: BuildingConfig,
                   sim: SimulationSettings | None = None,
                   control: ControllerConfig | None = None,
                   weather: WeatherSeries | None = None,
                   table: IncidentTable | None = None,
                   gains_5m: np.ndarray | None = None,
                   window_5m: np.ndarray | None = None,
                   controller: object | None = None,
                   backend: str | None = None,
                   label: str = "run") -> RunResult:
    """Prepare and execute one run; the main entry point."""
    prep = prepare_run(building, sim=sim, control=control, weather=weather,
                       table=table, gains_5m=gains_5m, window_5m=window_5m,
                       controller=controller, label=label)
    return execute(prep, backend=backend)


def run_reference(prep: PreparedRun) -> RunResult:
    """Replay a prepared run step by step through the readable path.

    Dense solve per step, Python control law, identical input sampling.
    Slow; meant for validation over short horizons.
    """
    sim = prep.sim
    n_out = prep.n_steps // prep.out_every + 1
    out_tair = np.empty(n_out)
    out_uh = np.empty(n_out)
    out_uc = np.empty(n_out)
    out_w = np.empty(n_out)
    acc = np.zeros(kernel.ACC_SLOTS)
    state = ZoneState(prep.t0.copy(), float(sim.start_s))
    cmd = ControlCommand()
    external = prep.external
    if external is None and prep.control.kind in ("internal_p", "two_point"):
        internal = InternalController(prep.control)
    else:
        internal = None
    total = EnergyLedger()
    for k in range(prep.n_steps + 1):
        t_s = sim.start_s + k * sim.dt_s
        if k % prep.upd_every == 0:
            if internal is not None:
                cmd = internal.on_update(
                    {"time_s": t_s, "t_air_c": state.t_air})
            elif external is not None:
                cmd = as_command(external.on_update(
                    _observation(prep, t_s, state.t_air, cmd)))
        u_h, u_c, win = (cmd.u_heat, cmd.u_cool, -1.0)
        if external is not None:
            u_h, u_c, win = _apply_controls(prep, cmd)
        inp = _inputs_at(prep, t_s, u_heat=u_h, u_cool=u_c,
                         window_override=win)
        if k % prep.out_every == 0:
            j = k // prep.out_every
            out_tair[j] = state.t_air
            out_uh[j] = u_h
            out_uc[j] = u_c
            out_w[j] = inp.window_open
        if k == prep.n_steps:
            break
        state, ledger = step(prep.net, state, inp, float(sim.dt_s))
        total = total + ledger
        rel = abs(ledger.residual_j()) / max(ledger.gross_j(), 1.0)
        acc[kernel.ACC_MAX_REL] = max(acc[kernel.ACC_MAX_REL], rel)
        acc[kernel.ACC_RESID] += ledger.residual_j()
        acc[kernel.ACC_GROSS] += ledger.gross_j()
    acc[:9] = total._astuple()
    times = sim.start_s + np.arange(n_out, dtype=np.int64) \
        * sim.output_interval_s
    out = {"time_s": times, "t_air_c": out_tair, "u_heat": out_uh,
           "u_cool": out_uc, "window_open": out_w}
    return _result_from(prep, acc, out, state.temperatures, "reference")
