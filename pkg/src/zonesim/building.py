"""Building parameter conversion.

Turns the user-facing building description (outer dimensions, window
fractions, U-values, areal heat capacities) into the fully resolved
physical parameter set of the zone model: surface areas and air volume,
one three-node R-C chain per opaque component, window and ventilation
conductances, and auto-sized heating and cooling powers.

Sign and unit conventions: temperatures in degC, conductances in W/K,
resistances in K/W unless a variable name says otherwise, capacities in
J/K, areas in m2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import InvalidConfigError

RHO_AIR = 1.204          # kg/m3, dry air around 20 degC
CP_AIR = 1005.0          # J/(kg K)
R_SI = 0.13              # m2K/W, interior surface film
R_SE = 0.04              # m2K/W, exterior surface film (walls, roof)
R_COND_MIN = 1e-9        # m2K/W, floor for the conductive layer budget
GRAVITY = 9.81           # m/s2
DISCHARGE_COEFF = 0.6    # single-sided window opening

# Facade order used everywhere arrays are indexed by orientation.
ORIENTATIONS = ("south", "west", "north", "east")
SURFACES = ORIENTATIONS + ("roof",)

# Facade azimuths measured clockwise from north.
SURFACE_AZIMUTH = {"south": 180.0, "west": 270.0, "north": 0.0, "east": 90.0}

UNIFORM_C = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
UNIFORM_R = (0.25, 0.25, 0.25, 0.25)


@dataclass(frozen=True)
class BuildingConfig:
    """Complete user-facing description of one building variant.

    Field names double as configuration-file keys, so they follow the
    external naming contract rather than Python style.
    """

    zone_length: float = 10.0            # m, south/north facade length
    zone_width: float = 8.0              # m, west/east facade length
    n_floors: int = 2
    floor_height: float = 2.5            # m, per floor

    fAWin_south: float = 0.14            # window fraction per facade
    fAWin_west: float = 0.14
    fAWin_north: float = 0.14
    fAWin_east: float = 0.14
    fATransToAWindow: float = 0.9        # transparent share of window area
    fARoofToAFloor: float = 1.2          # roof area per footprint area
    fAInt: float = 2.0                   # internal mass area per gross wall area

    UExt: float = 0.7                    # W/m2K
    UIntWall: float = 2.0
    UFloor: float = 0.5
    URoof: float = 0.3
    UWin: float = 1.3
    gWin: float = 0.6                    # solar energy transmittance

    heatCapacity_wall: float = 250e3     # J/(m2 K)
    heatCapacity_intWall: float = 150e3
    heatCapacity_floor: float = 400e3
    heatCapacity_roof: float = 200e3
    heatCapacity_furniture_per_m2: float = 20e3  # J/(m2 K) of floor area

    heatRecoveryRate: float = 0.0        # fraction of ventilation loss recovered
    airChangeRate: float = 0.5           # 1/h

    roomTempLowerSetpoint: float = 18.0  # degC, outside the day window
    roomTempUpperSetpoint: float = 22.0  # degC, inside the day window
    useInternalController: bool = True

    extWall_C_distribution: tuple = UNIFORM_C
    intWall_C_distribution: tuple = UNIFORM_C
    floor_C_distribution: tuple = UNIFORM_C
    roof_C_distribution: tuple = UNIFORM_C
    extWall_R_distribution: tuple = UNIFORM_R
    intWall_R_distribution: tuple = UNIFORM_R
    floor_R_distribution: tuple = UNIFORM_R
    roof_R_distribution: tuple = UNIFORM_R

    internalGainsConvectiveFraction: float = 0.5
    heatingConvectiveFraction: float = 0.5

    # Optional input series; None falls back to zero gains / closed windows
    # or, for weather, requires an explicit path at run time.
    weather_path: str | None = None
    internal_gain_path: str | None = None
    window_opening_path: str | None = None

    ground_temperature: float = 10.0     # degC, constant slab boundary
    solar_absorptance_opaque: float = 0.6  # opaque exterior surfaces
    design_outdoor_temperature: float = -12.0  # degC, heating sizing point
    heating_safety_factor: float = 1.3
    cooling_power_per_floor_area: float = 40.0  # W/m2 of heated floor area

    openable_window_area: float = 1.5    # m2, effective opening for airing
    openable_window_height: float = 1.2  # m, stack height of that opening

    # Explicit sizing overrides; None means derive from the envelope.
    q_heat_max: float | None = None
    q_cool_max: float | None = None

    def validate(self) -> None:
        """Raise InvalidConfigError naming the first offending parameter."""
        _require(self.zone_length > 0, "zone_length", "must be > 0")
        _require(self.zone_width > 0, "zone_width", "must be > 0")
        _require(self.floor_height > 0, "floor_height", "must be > 0")
        _require(
            isinstance(self.n_floors, int) and not isinstance(self.n_floors, bool)
            and self.n_floors >= 1,
            "n_floors", "must be an integer >= 1",
        )
        for o in ORIENTATIONS:
            key = f"fAWin_{o}"
            v = getattr(self, key)
            _require(0.0 <= v < 1.0, key, "must lie in [0, 1)")
        _require(0.0 < self.fATransToAWindow <= 1.0, "fATransToAWindow",
                 "must lie in (0, 1]")
        _require(self.fARoofToAFloor >= 1.0, "fARoofToAFloor", "must be >= 1")
        _require(self.fAInt >= 0.0, "fAInt", "must be >= 0")
        for key in ("UExt", "UIntWall", "UFloor", "URoof", "UWin"):
            _require(getattr(self, key) > 0.0, key, "must be > 0")
        _require(0.0 <= self.gWin <= 1.0, "gWin", "must lie in [0, 1]")
        for key in ("heatCapacity_wall", "heatCapacity_intWall",
                    "heatCapacity_floor", "heatCapacity_roof"):
            _require(getattr(self, key) > 0.0, key, "must be > 0")
        _require(self.heatCapacity_furniture_per_m2 >= 0.0, "heatCapacity_furniture_per_m2",
                 "must be >= 0")
        _require(0.0 <= self.heatRecoveryRate <= 1.0, "heatRecoveryRate",
                 "must lie in [0, 1]")
        _require(self.airChangeRate >= 0.0, "airChangeRate", "must be >= 0")
        _require(self.roomTempLowerSetpoint <= self.roomTempUpperSetpoint,
                 "roomTempLowerSetpoint", "must not exceed roomTempUpperSetpoint")
        for key in ("extWall_C_distribution", "intWall_C_distribution",
                    "floor_C_distribution", "roof_C_distribution"):
            _check_distribution(key, getattr(self, key), 3)
        for key in ("extWall_R_distribution", "intWall_R_distribution",
                    "floor_R_distribution", "roof_R_distribution"):
            _check_distribution(key, getattr(self, key), 4)
        for key in ("internalGainsConvectiveFraction", "heatingConvectiveFraction"):
            _require(0.0 <= getattr(self, key) <= 1.0, key, "must lie in [0, 1]")
        _require(math.isfinite(self.ground_temperature), "ground_temperature",
                 "must be finite")
        _require(0.0 <= self.solar_absorptance_opaque <= 1.0, "solar_absorptance_opaque",
                 "must lie in [0, 1]")
        _require(self.heating_safety_factor >= 1.0, "heating_safety_factor",
                 "must be >= 1")
        _require(self.cooling_power_per_floor_area >= 0.0,
                 "cooling_power_per_floor_area", "must be >= 0")
        _require(self.openable_window_area >= 0.0, "openable_window_area",
                 "must be >= 0")
        _require(self.openable_window_height >= 0.0, "openable_window_height",
                 "must be >= 0")
        if self.q_heat_max is not None:
            _require(self.q_heat_max > 0.0, "q_heat_max", "override must be > 0")
        if self.q_cool_max is not None:
            _require(self.q_cool_max >= 0.0, "q_cool_max", "override must be >= 0")


def _require(cond: bool, key: str, what: str) -> None:
    if not cond:
        raise InvalidConfigError(f"{key}: {what}")


def _check_distribution(key: str, dist, length: int) -> None:
    try:
        values = tuple(float(v) for v in dist)
    except (TypeError, ValueError):
        raise InvalidConfigError(f"{key}: must be a sequence of {length} numbers")
    _require(len(values) == length, key, f"must have exactly {length} entries")
    _require(all(v >= 0.0 for v in values), key, "entries must be >= 0")
    _require(abs(sum(values) - 1.0) <= 1e-9, key, "entries must sum to 1")


@dataclass(frozen=True)
class Geometry:
    """Areas and volume derived from the outer dimensions."""

    volume: float                 # m3, heated air volume
    area_floor: float             # m2, footprint in ground contact
    area_roof: float              # m2
    facade_gross: dict            # m2 per orientation, including windows
    area_window: dict             # m2 per orientation
    area_wall_net: dict           # m2 per orientation, opaque share
    area_wall_gross: float        # m2, sum of facades
    area_internal_mass: float     # m2, both-sided internal wall area
    area_ceilings: float          # m2, intermediate slabs between storeys

    @property
    def total_window_area(self) -> float:
        return sum(self.area_window.values())


def derive_geometry(config: BuildingConfig) -> Geometry:
    """Resolve all model areas and the air volume from the outer dimensions.

    South and north facades span ``zone_length``, west and east span
    ``zone_width``. Window areas are facade fractions, the roof scales the
    footprint by ``fARoofToAFloor``, and internal mass area is a multiple of
    the gross wall area. Intermediate ceilings exist between storeys only.
    """
    c = config
    h_total = c.floor_height * c.n_floors
    facade = {
        "south": h_total * c.zone_length,
        "north": h_total * c.zone_length,
        "west": h_total * c.zone_width,
        "east": h_total * c.zone_width,
    }
    window = {o: facade[o] * getattr(c, f"fAWin_{o}") for o in ORIENTATIONS}
    net = {o: facade[o] - window[o] for o in ORIENTATIONS}
    for o in ORIENTATIONS:
        if net[o] < 0.0:
            raise InvalidConfigError(f"fAWin_{o}: window area exceeds the facade")
    footprint = c.zone_length * c.zone_width
    gross = sum(facade.values())
    return Geometry(
        volume=footprint * h_total,
        area_floor=footprint,
        area_roof=footprint * c.fARoofToAFloor,
        facade_gross=facade,
        area_window=window,
        area_wall_net=net,
        area_wall_gross=gross,
        area_internal_mass=c.fAInt * gross,
        area_ceilings=footprint * (c.n_floors - 1),
    )


def derive_max_heating_power(config: BuildingConfig, geometry: Geometry) -> float:
    """Size the heater from the envelope at the design outdoor temperature.

    Steady-state loss of every exterior path at the day setpoint, floor
    losses taken against the constant ground temperature, ventilation
    credited with heat recovery, all scaled by the safety factor.
    """
    c = config
    dt_out = c.roomTempUpperSetpoint - c.design_outdoor_temperature
    if dt_out <= 0.0:
        raise InvalidConfigError(
            "design_outdoor_temperature: must lie below roomTempUpperSetpoint")
    ua = c.UExt * sum(geometry.area_wall_net.values())
    ua += c.URoof * geometry.area_roof
    ua += c.UWin * geometry.total_window_area
    vent = RHO_AIR * CP_AIR * (c.airChangeRate * geometry.volume / 3600.0)
    vent *= 1.0 - c.heatRecoveryRate
    loss = (ua + vent) * dt_out
    loss += c.UFloor * geometry.area_floor * (
        c.roomTempUpperSetpoint - c.ground_temperature)
    power = c.heating_safety_factor * loss
    if power <= 0.0:
        raise InvalidConfigError(
            "q_heat_max: envelope sizing yields a non-positive heating power")
    return power


def derive_max_cooling_power(config: BuildingConfig, geometry: Geometry) -> float:
    """Cooling capacity as a flat rate per heated floor area."""
    return config.cooling_power_per_floor_area * geometry.area_floor * config.n_floors


@dataclass(frozen=True)
class RcChain:
    """One opaque component as a three-capacity chain.

    ``resistances`` holds the four edge resistances in K/W from the air
    node outward: air to node 1 (including the interior film), the two
    interior segments, and node 3 to the boundary (including the exterior
    film where one exists). ``boundary`` names the far-side condition:
    ``sol_air:<surface>``, ``ground``, or ``air`` for internal mass that
    closes back onto the zone air.
    """

    name: str
    area: float
    capacities: tuple
    resistances: tuple
    boundary: str


@dataclass(frozen=True)
class ModelParams:
    """Fully resolved physical parameters of one zone model."""

    config: BuildingConfig
    geometry: Geometry
    chains: tuple
    window_conductance: dict      # W/K per orientation, massless glazing path
    transmit_coeff: dict          # m2, effective transparent area times gWin
    g_vent_const: float           # W/K, infiltration at the configured rate
    q_heat_max: float             # W
    q_cool_max: float             # W

    @property
    def g_window_total(self) -> float:
        return sum(self.window_conductance.values())

    @property
    def air_capacity(self) -> float:
        return RHO_AIR * CP_AIR * self.geometry.volume

    def to_manifest_dict(self) -> dict:
        """Flatten every derived quantity for the run manifest."""
        g = self.geometry
        return {
            "volume_m3": g.volume,
            "area_floor_m2": g.area_floor,
            "area_roof_m2": g.area_roof,
            "area_wall_gross_m2": g.area_wall_gross,
            "area_wall_net_m2": dict(g.area_wall_net),
            "area_window_m2": dict(g.area_window),
            "area_internal_mass_m2": g.area_internal_mass,
            "area_ceilings_m2": g.area_ceilings,
            "air_capacity_j_per_k": self.air_capacity,
            "window_conductance_w_per_k": dict(self.window_conductance),
            "transmit_coeff_m2": dict(self.transmit_coeff),
            "g_vent_const_w_per_k": self.g_vent_const,
            "q_heat_max_w": self.q_heat_max,
            "q_cool_max_w": self.q_cool_max,
            "chains": [
                {
                    "name": ch.name,
                    "area_m2": ch.area,
                    "capacities_j_per_k": list(ch.capacities),
                    "resistances_k_per_w": list(ch.resistances),
                    "boundary": ch.boundary,
                }
                for ch in self.chains
            ],
        }


def _conductive_resistance(name: str, u_value: float, area: float) -> float:
    # Budget left for the solid layer once both surface films are peeled off.
    r_layer = 1.0 / u_value - R_SI - R_SE
    if r_layer <= 0.0:
        raise InvalidConfigError(
            f"{name}: U-value {u_value} leaves no conductive layer "
            "(1/U <= R_si + R_se)")
    return max(r_layer, R_COND_MIN) / area


def _chain(name: str, area: float, u_value: float, capacity_areal: float,
           c_dist, r_dist, film_in: float, film_out: float, boundary: str,
           extra_capacity: float = 0.0) -> RcChain:
    r_cond = _conductive_resistance(name, u_value, area)
    total_c = capacity_areal * area + extra_capacity
    caps = tuple(w * total_c for w in c_dist)
    res = (
        film_in + r_dist[0] * r_cond,
        r_dist[1] * r_cond,
        r_dist[2] * r_cond,
        r_dist[3] * r_cond + film_out,
    )
    return RcChain(name=name, area=area, capacities=caps, resistances=res,
                   boundary=boundary)


def build_model_params(config: BuildingConfig) -> ModelParams:
    """Validate the configuration and resolve every model parameter.

    Chains are emitted in a fixed order (four walls south, west, north,
    east, then roof, floor, internal mass) so that downstream node
    numbering is reproducible. Furniture and intermediate-ceiling mass are
    folded into the internal-mass chain capacity.
    """
    config.validate()
    geometry = derive_geometry(config)
    c = config
    chains = []
    for o in ORIENTATIONS:
        chains.append(_chain(
            f"wall_{o}", geometry.area_wall_net[o], c.UExt, c.heatCapacity_wall,
            c.extWall_C_distribution, c.extWall_R_distribution,
            R_SI / geometry.area_wall_net[o], R_SE / geometry.area_wall_net[o],
            f"sol_air:{o}"))
    chains.append(_chain(
        "roof", geometry.area_roof, c.URoof, c.heatCapacity_roof,
        c.roof_C_distribution, c.roof_R_distribution,
        R_SI / geometry.area_roof, R_SE / geometry.area_roof, "sol_air:roof"))
    # Slab in ground contact: interior film only, the far side is held at
    # the constant ground temperature with no exterior air film.
    chains.append(_chain(
        "floor", geometry.area_floor, c.UFloor, c.heatCapacity_floor,
        c.floor_C_distribution, c.floor_R_distribution,
        R_SI / geometry.area_floor, 0.0, "ground"))
    extra = c.heatCapacity_furniture_per_m2 * geometry.area_floor * c.n_floors
    extra += c.heatCapacity_intWall * geometry.area_ceilings
    a_int = geometry.area_internal_mass
    if a_int > 0.0:
        # Both chain ends face the zone, each across half the surface area.
        film = R_SI / (a_int / 2.0)
        chains.append(_chain(
            "internal_mass", a_int, c.UIntWall, c.heatCapacity_intWall,
            c.intWall_C_distribution, c.intWall_R_distribution,
            film, film, "air", extra_capacity=extra))
    elif extra > 0.0:
        raise InvalidConfigError(
            "fAInt: must be > 0 to carry furniture and ceiling capacity")

    window_g = {o: c.UWin * geometry.area_window[o] for o in ORIENTATIONS}
    transmit = {o: geometry.area_window[o] * c.fATransToAWindow * c.gWin
                for o in ORIENTATIONS}
    g_vent = RHO_AIR * CP_AIR * (c.airChangeRate * geometry.volume / 3600.0)
    g_vent *= 1.0 - c.heatRecoveryRate

    q_heat = c.q_heat_max if c.q_heat_max is not None else \
        derive_max_heating_power(c, geometry)
    q_cool = c.q_cool_max if c.q_cool_max is not None else \
        derive_max_cooling_power(c, geometry)
    return ModelParams(
        config=config, geometry=geometry, chains=tuple(chains),
        window_conductance=window_g, transmit_coeff=transmit,
        g_vent_const=g_vent, q_heat_max=q_heat, q_cool_max=q_cool)


def config_from_dict(values: dict) -> BuildingConfig:
    """Build a validated BuildingConfig from a flat mapping of keys.

    Unknown keys raise InvalidConfigError so that configuration typos fail
    loudly instead of silently keeping a default.
    """
    known = {f.name for f in fields(BuildingConfig)}
    unknown = set(values) - known
    if unknown:
        raise InvalidConfigError(
            f"unknown building parameter(s): {', '.join(sorted(unknown))}")
    coerced = dict(values)
    for key, v in coerced.items():
        if key.endswith("_distribution"):
            coerced[key] = tuple(float(x) for x in v)
    cfg = BuildingConfig(**coerced)
    cfg.validate()
    return cfg
