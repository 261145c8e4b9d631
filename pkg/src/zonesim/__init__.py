"""Single-zone thermal building simulation and dataset generation.

A lumped-parameter zone model (one air node, layered constructions,
solar-aware boundaries) integrated implicitly at fixed step, driven by
EPW weather and occupant profiles, with batch variation studies that
write CSV traces plus a machine-readable manifest.
"""
from importlib import resources

__version__ = "0.1.0"

from .building import (
    BuildingConfig, Geometry, ModelParams, build_model_params,
    config_from_dict, derive_geometry, derive_max_cooling_power,
    derive_max_heating_power,
)
from .configfile import (
    ConfigDocument, ProfilesSpec, Variation, expand_variations, load_config,
    parse_config,
)
from .control import ControlCommand, ControllerConfig, InternalController
from .errors import (
    AssemblyError, BatchRunError, InvalidConfigError, ProfileFormatError,
    SolverError, UnknownColumnError, WeatherFormatError, ZonesimError,
)
from .network import (
    EnergyLedger, StepInputs, ThermalNetwork, ZoneState, annual_energy,
    assemble_network, steady_state, step, window_airflow,
)
from .output import AVAILABLE_COLUMNS, write_output_csv
from .profiles import (
    Calendar, DayProfile, Segment, WindowRules, expand_occupancy,
    expand_year, read_profile_csv, window_schedule, write_profile_csv,
)
from .simulate import (
    RunResult, SimulationSettings, prepare_run, run_reference,
    run_simulation,
)
from .weather import (
    Site, WeatherSeries, incident_irradiance, incident_table, load_weather,
    parse_epw, parse_weather_csv, solar_position,
)

BUNDLED_WEATHER = "munich_synthetic.epw"


def bundled_weather_path() -> str:
    """Filesystem path of the packaged reference weather year."""
    ref = resources.files(__name__) / "data" / "weather" / BUNDLED_WEATHER
    return str(ref)
