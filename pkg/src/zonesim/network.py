"""Zone thermal network: assembly, implicit stepping, energy bookkeeping.

The zone is one well-mixed air node plus a three-capacity chain per opaque
component. Chains for exterior components end on a sol-air boundary, the
floor chain ends on the constant ground temperature, and the internal-mass
chain closes back onto the air node on both sides. Windows are massless
conductances between air and outdoor air; ventilation and stack-driven
window exchange are time-varying conductances on the same pair.

Time integration is backward Euler on

    (C/dt + K(t)) T(t+dt) = (C/dt) T(t) + q(t+dt)

with K symmetric positive semi-definite plus boundary terms on the
diagonal, which keeps the step unconditionally stable. An exact discrete
energy ledger falls out of the same equation: summing rows gives

    sum_i C_i (T+_i - T_i) / dt = sources + sum_b g_b (T_b - T+_node)

so every step can be balanced to solver precision.

This module is the readable reference path; `kernel` replays the same
arithmetic over a year at speed and is tested against `step` directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .building import (
    CP_AIR, DISCHARGE_COEFF, GRAVITY, ORIENTATIONS, R_SE, RHO_AIR, SURFACES,
    ModelParams,
)
from .errors import AssemblyError, SolverError

J_PER_KWH = 3.6e6


@dataclass(frozen=True)
class ThermalNetwork:
    """Assembled node system, ready to step.

    ``edges`` couple interior nodes pairwise; ``boundary_links`` couple a
    node to a named boundary channel with a static conductance. Channels
    are ``outdoor``, ``ground``, or ``sol_air:<surface>`` where surface is
    one of south/west/north/east/roof.
    """

    node_labels: tuple
    capacity: np.ndarray          # J/K per node, all > 0
    edges: tuple                  # (i, j, conductance W/K)
    boundary_links: tuple         # (node, channel, conductance W/K)
    inj_heat: np.ndarray          # unit deposition vectors, each sums to 1
    inj_cool: np.ndarray
    inj_gain: np.ndarray
    inj_solar: np.ndarray
    transmit_coeff: np.ndarray    # (5,) effective transparent m2 per surface
    g_window_total: float         # W/K, glazing path air to outdoor
    g_vent_const: float           # W/K at the configured air change rate
    vent_coeff: float             # W/K per 1/h of air change, recovery applied
    volume: float
    openable_window_area: float
    openable_window_height: float
    ground_temperature: float
    solar_absorptance: float
    q_heat_max: float
    q_cool_max: float

    AIR = 0

    @property
    def n_nodes(self) -> int:
        return self.capacity.shape[0]


@dataclass(frozen=True)
class ZoneState:
    """Node temperatures in degC plus the model clock in seconds."""

    temperatures: np.ndarray
    clock_s: float

    @property
    def t_air(self) -> float:
        return float(self.temperatures[ThermalNetwork.AIR])


@dataclass(frozen=True)
class StepInputs:
    """Boundary conditions and commands held constant over one step."""

    t_out_c: float
    incident_wm2: np.ndarray      # (5,) total irradiance on S, W, N, E, roof
    gains_w: float = 0.0
    u_heat: float = 0.0
    u_cool: float = 0.0
    window_open: float = 0.0      # fraction of the openable window area
    ach_override: float | None = None


@dataclass(frozen=True)
class EnergyLedger:
    """Per-interval energy accounting in joules.

    Losses are net flows from the zone toward the respective boundary and
    may be negative when the boundary feeds the zone.
    """

    heating_j: float = 0.0
    cooling_j: float = 0.0
    solar_transmitted_j: float = 0.0
    solar_absorbed_j: float = 0.0
    internal_gains_j: float = 0.0
    envelope_loss_j: float = 0.0
    ventilation_loss_j: float = 0.0
    window_airflow_loss_j: float = 0.0
    storage_change_j: float = 0.0

    def residual_j(self) -> float:
        return (self.heating_j - self.cooling_j + self.solar_transmitted_j
                + self.solar_absorbed_j + self.internal_gains_j
                - self.envelope_loss_j - self.ventilation_loss_j
                - self.window_airflow_loss_j - self.storage_change_j)

    def gross_j(self) -> float:
        return (abs(self.heating_j) + abs(self.cooling_j)
                + abs(self.solar_transmitted_j) + abs(self.solar_absorbed_j)
                + abs(self.internal_gains_j) + abs(self.envelope_loss_j)
                + abs(self.ventilation_loss_j) + abs(self.window_airflow_loss_j)
                + abs(self.storage_change_j))

    def __add__(self, other: "EnergyLedger") -> "EnergyLedger":
        return EnergyLedger(*(a + b for a, b in
                              zip(self._astuple(), other._astuple())))

    def _astuple(self) -> tuple:
        return (self.heating_j, self.cooling_j, self.solar_transmitted_j,
                self.solar_absorbed_j, self.internal_gains_j,
                self.envelope_loss_j, self.ventilation_loss_j,
                self.window_airflow_loss_j, self.storage_change_j)


def assemble_network(params: ModelParams) -> ThermalNetwork:
    """Number the nodes and wire every conductance of the zone model.

    Node 0 is the air node; each chain contributes three nodes in chain
    order. Raises AssemblyError for non-positive capacities or resistance
    segments, which would make the implicit step ill-posed.
    """
    labels = ["air"]
    caps = [params.air_capacity]
    edges = []
    links = []
    for ch in params.chains:
        base = len(labels)
        labels += [f"{ch.name}:{k}" for k in (1, 2, 3)]
        for k, c in enumerate(ch.capacities):
            if not c > 0.0:
                raise AssemblyError(
                    f"{ch.name}: node {k + 1} capacity must be > 0, got {c}")
            caps.append(c)
        for k, r in enumerate(ch.resistances):
            if not r > 0.0 or not math.isfinite(r):
                raise AssemblyError(
                    f"{ch.name}: resistance segment {k} must be positive "
                    f"and finite, got {r}")
        r = ch.resistances
        edges.append((ThermalNetwork.AIR, base, 1.0 / r[0]))
        edges.append((base, base + 1, 1.0 / r[1]))
        edges.append((base + 1, base + 2, 1.0 / r[2]))
        if ch.boundary == "air":
            edges.append((base + 2, ThermalNetwork.AIR, 1.0 / r[3]))
        else:
            links.append((base + 2, ch.boundary, 1.0 / r[3]))
    if caps[0] <= 0.0:
        raise AssemblyError("air node capacity must be > 0")
    g_win = params.g_window_total
    if g_win > 0.0:
        links.append((ThermalNetwork.AIR, "outdoor", g_win))

    capacity = np.array(caps, dtype=np.float64)
    n = capacity.shape[0]
    # Radiant shares land on the inner surface node of each chain,
    # weighted by component area; convective shares go to the air.
    surf_w = np.zeros(n)
    for ch, base in zip(params.chains,
                        range(1, 1 + 3 * len(params.chains), 3)):
        surf_w[base] = ch.area
    if surf_w.sum() <= 0.0:
        raise AssemblyError("no interior surfaces to receive radiant gains")
    surf_w /= surf_w.sum()
    air_vec = np.zeros(n)
    air_vec[ThermalNetwork.AIR] = 1.0
    f_heat = params.config.heatingConvectiveFraction
    f_gain = params.config.internalGainsConvectiveFraction
    inj_heat = f_heat * air_vec + (1.0 - f_heat) * surf_w
    inj_gain = f_gain * air_vec + (1.0 - f_gain) * surf_w
    inj_cool = air_vec.copy()          # cooling acts on the air
    inj_solar = surf_w.copy()          # transmitted solar lands on surfaces

    transmit = np.zeros(len(SURFACES))
    for i, o in enumerate(ORIENTATIONS):
        transmit[i] = params.transmit_coeff[o]

    openable_area = params.config.openable_window_area
    if params.geometry.total_window_area <= 0.0:
        openable_area = 0.0            # nothing to open
    vent_coeff = RHO_AIR * CP_AIR * (params.geometry.volume / 3600.0)
    vent_coeff *= 1.0 - params.config.heatRecoveryRate
    net = ThermalNetwork(
        node_labels=tuple(labels), capacity=capacity, edges=tuple(edges),
        boundary_links=tuple(links), inj_heat=inj_heat, inj_cool=inj_cool,
        inj_gain=inj_gain, inj_solar=inj_solar, transmit_coeff=transmit,
        g_window_total=g_win, g_vent_const=params.g_vent_const,
        vent_coeff=vent_coeff, volume=params.geometry.volume,
        openable_window_area=openable_area,
        openable_window_height=params.config.openable_window_height,
        ground_temperature=params.config.ground_temperature,
        solar_absorptance=params.config.solar_absorptance_opaque,
        q_heat_max=params.q_heat_max, q_cool_max=params.q_cool_max)
    _check_connected(net)
    return net


def _check_connected(net: ThermalNetwork) -> None:
    # Every node must reach a boundary channel, otherwise steady state is
    # undefined and the year integral drifts on an isolated island.
    n = net.n_nodes
    adj = [[] for _ in range(n)]
    for i, j, _ in net.edges:
        adj[i].append(j)
        adj[j].append(i)
    seeds = {node for node, _, _ in net.boundary_links}
    if not seeds:
        raise SolverError("network has no boundary link; steady state undefined")
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        i = stack.pop()
        for j in adj[i]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    missing = [net.node_labels[i] for i in range(n) if i not in seen]
    if missing:
        raise SolverError(
            f"node(s) not coupled to any boundary: {', '.join(missing)}")


def window_airflow(t_in_c: float, t_out_c: float, area_m2: float,
                   height_m: float, open_fraction: float) -> float:
    """Stack-driven volume flow through a partly opened window in m3/s.

    Single-sided buoyancy exchange: one third of the opening acts as inlet
    and outlet pair with discharge coefficient 0.6, driven by the
    density difference over the opening height. Zero temperature
    difference or a closed window yields zero flow.
    """
    if area_m2 < 0.0 or height_m < 0.0:
        raise ValueError("window area and height must be >= 0")
    if open_fraction <= 0.0 or area_m2 == 0.0 or height_m == 0.0:
        return 0.0
    d_t = abs(t_in_c - t_out_c)
    if d_t == 0.0:
        return 0.0
    t_mean_k = 0.5 * (t_in_c + t_out_c) + 273.15
    speed = math.sqrt(GRAVITY * height_m * d_t / t_mean_k)
    return open_fraction * (DISCHARGE_COEFF / 3.0) * area_m2 * speed


def _channel_temperature(channel: str, inputs: StepInputs,
                         net: ThermalNetwork) -> float:
    if channel == "outdoor":
        return inputs.t_out_c
    if channel == "ground":
        return net.ground_temperature
    if channel.startswith("sol_air:"):
        surf = channel.split(":", 1)[1]
        irr = float(inputs.incident_wm2[SURFACES.index(surf)])
        return inputs.t_out_c + net.solar_absorptance * irr * R_SE
    raise AssemblyError(f"unknown boundary channel '{channel}'")


def _variable_conductances(net: ThermalNetwork, t_air: float,
                           inputs: StepInputs) -> tuple:
    g_vent = net.g_vent_const
    if inputs.ach_override is not None:
        g_vent = net.vent_coeff * inputs.ach_override
    open_frac = min(max(inputs.window_open, 0.0), 1.0)
    flow = window_airflow(t_air, inputs.t_out_c, net.openable_window_area,
                          net.openable_window_height, open_frac)
    return g_vent, RHO_AIR * CP_AIR * flow


def _system(net: ThermalNetwork, inputs: StepInputs, g_vent: float,
            g_wair: float) -> tuple:
    """Dense conductance matrix and source vector for one instant."""
    n = net.n_nodes
    k = np.zeros((n, n))
    for i, j, g in net.edges:
        k[i, i] += g
        k[j, j] += g
        k[i, j] -= g
        k[j, i] -= g
    q = np.zeros(n)
    for node, channel, g in net.boundary_links:
        k[node, node] += g
        q[node] += g * _channel_temperature(channel, inputs, net)
    a = ThermalNetwork.AIR
    k[a, a] += g_vent + g_wair
    q[a] += (g_vent + g_wair) * inputs.t_out_c

    u_h = min(max(inputs.u_heat, 0.0), 1.0)
    u_c = min(max(inputs.u_cool, 0.0), 1.0)
    q_solt = float(np.dot(net.transmit_coeff, inputs.incident_wm2))
    q += u_h * net.q_heat_max * net.inj_heat
    q -= u_c * net.q_cool_max * net.inj_cool
    q += inputs.gains_w * net.inj_gain
    q += q_solt * net.inj_solar
    return k, q, u_h * net.q_heat_max, u_c * net.q_cool_max, q_solt


def _check_inputs(inputs: StepInputs) -> None:
    vals = [inputs.t_out_c, inputs.gains_w, inputs.u_heat, inputs.u_cool,
            inputs.window_open]
    if inputs.ach_override is not None:
        vals.append(inputs.ach_override)
    if not all(math.isfinite(v) for v in vals) or \
            not np.isfinite(inputs.incident_wm2).all():
        raise SolverError("non-finite step input")


def step(net: ThermalNetwork, state: ZoneState, inputs: StepInputs,
         dt_s: float) -> tuple:
    """Advance one backward-Euler step; returns (new state, ledger).

    The stack-exchange conductance uses the pre-step air temperature, all
    other couplings are implicit. The returned ledger closes exactly up to
    solver round-off.
    """
    if dt_s <= 0.0:
        raise ValueError("dt_s must be > 0")
    _check_inputs(inputs)
    t_old = state.temperatures
    g_vent, g_wair = _variable_conductances(net, float(t_old[net.AIR]), inputs)
    k, q, q_heat, q_cool, q_solt = _system(net, inputs, g_vent, g_wair)
    cdt = net.capacity / dt_s
    a = np.diag(cdt) + k
    b = cdt * t_old + q
    try:
        t_new = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"implicit step is singular: {exc}") from None

    ledger = _make_ledger(net, inputs, t_old, t_new, g_vent, g_wair,
                          q_heat, q_cool, q_solt, dt_s)
    return ZoneState(t_new, state.clock_s + dt_s), ledger


def _make_ledger(net: ThermalNetwork, inputs: StepInputs, t_old, t_new,
                 g_vent: float, g_wair: float, q_heat: float, q_cool: float,
                 q_solt: float, dt_s: float) -> EnergyLedger:
    a = ThermalNetwork.AIR
    env = 0.0
    sola = 0.0
    for node, channel, g in net.boundary_links:
        t_b = _channel_temperature(channel, inputs, net)
        if channel.startswith("sol_air:"):
            # Split the sol-air flux into plain envelope loss against the
            # outdoor air and the absorbed-solar credit on the surface.
            env += g * (t_new[node] - inputs.t_out_c)
            sola += g * (t_b - inputs.t_out_c)
        elif channel == "ground":
            env += g * (t_new[node] - net.ground_temperature)
        else:
            env += g * (t_new[node] - inputs.t_out_c)
    vent = g_vent * (t_new[a] - inputs.t_out_c)
    wair = g_wair * (t_new[a] - inputs.t_out_c)
    storage = float(np.dot(net.capacity / dt_s, t_new - t_old)) * dt_s
    return EnergyLedger(
        heating_j=q_heat * dt_s, cooling_j=q_cool * dt_s,
        solar_transmitted_j=q_solt * dt_s, solar_absorbed_j=sola * dt_s,
        internal_gains_j=inputs.gains_w * dt_s,
        envelope_loss_j=env * dt_s, ventilation_loss_j=vent * dt_s,
        window_airflow_loss_j=wair * dt_s, storage_change_j=storage)


def steady_state(net: ThermalNetwork, inputs: StepInputs,
                 max_iter: int = 50, tol_k: float = 1e-10) -> ZoneState:
    """Solve K T = q for the stationary temperature field.

    The stack-exchange conductance depends on the unknown air temperature,
    so the solve iterates on it; with the window closed a single solve is
    exact. Raises SolverError when the system is singular or the iteration
    does not settle.
    """
    _check_inputs(inputs)
    t_air = inputs.t_out_c
    t = None
    for _ in range(max_iter):
        g_vent, g_wair = _variable_conductances(net, t_air, inputs)
        k, q, *_ = _system(net, inputs, g_vent, g_wair)
        try:
            t = np.linalg.solve(k, q)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"steady state is singular: {exc}") from None
        if abs(t[net.AIR] - t_air) <= tol_k:
            return ZoneState(t, 0.0)
        t_air = float(t[net.AIR])
    raise SolverError("steady-state iteration did not converge")


def annual_energy(ledgers, air_temps_c, percentiles=(10, 50, 90)) -> dict:
    """Aggregate ledgers to kWh and percentile air temperatures.

    ``ledgers`` is a single EnergyLedger or an iterable of them.
    Percentiles use the nearest-rank definition on the sorted trace.
    """
    if isinstance(ledgers, EnergyLedger):
        total = ledgers
    else:
        ledgers = list(ledgers)
        if not ledgers:
            raise ValueError("no ledgers to aggregate")
        total = ledgers[0]
        for led in ledgers[1:]:
            total = total + led
    temps = np.asarray(air_temps_c, dtype=np.float64)
    if temps.size == 0:
        raise ValueError("no air temperatures to aggregate")
    ordered = np.sort(temps)
    out = {
        "heating_kwh": total.heating_j / J_PER_KWH,
        "cooling_kwh": total.cooling_j / J_PER_KWH,
        "solar_transmitted_kwh": total.solar_transmitted_j / J_PER_KWH,
        "solar_absorbed_kwh": total.solar_absorbed_j / J_PER_KWH,
        "internal_gains_kwh": total.internal_gains_j / J_PER_KWH,
        "envelope_loss_kwh": total.envelope_loss_j / J_PER_KWH,
        "ventilation_loss_kwh": total.ventilation_loss_j / J_PER_KWH,
        "window_airflow_loss_kwh": total.window_airflow_loss_j / J_PER_KWH,
        "storage_change_kwh": total.storage_change_j / J_PER_KWH,
    }
    for p in percentiles:
        rank = max(int(math.ceil(p / 100.0 * ordered.size)) - 1, 0)
        out[f"t_air_p{p}_c"] = float(ordered[rank])
    return out
