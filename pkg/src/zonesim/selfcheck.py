"""Built-in sanity checks behind ``zonesim validate``.

Each check compares the engine against an independent expectation: hand
geometry, an equilibrium invariant, exact energy bookkeeping, and
cross-backend agreement. They run in seconds and need no input files
beyond the packaged weather year.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from . import bundled_weather_path
from .building import BuildingConfig, build_model_params, derive_geometry
from .kernel import NUMBA_AVAILABLE
from .network import StepInputs, assemble_network, steady_state
from .simulate import SimulationSettings, run_simulation


def check_geometry() -> None:
    geo = derive_geometry(BuildingConfig())
    assert abs(geo.volume - 400.0) < 1e-9, geo.volume
    assert abs(geo.area_window["south"] - 7.0) < 1e-9, geo.area_window
    assert abs(geo.area_floor - 80.0) < 1e-9, geo.area_floor
    assert abs(geo.area_roof - 96.0) < 1e-9, geo.area_roof


def check_equilibrium() -> None:
    # Every boundary at 12 degC, nothing injected: the whole network must
    # settle at exactly 12 degC.
    cfg = dataclasses.replace(BuildingConfig(), ground_temperature=12.0)
    net = assemble_network(build_model_params(cfg))
    state = steady_state(net, StepInputs(
        t_out_c=12.0, incident_wm2=np.zeros(5), gains_w=0.0,
        u_heat=0.0, u_cool=0.0, window_open=0.0))
    assert np.max(np.abs(state.temperatures - 12.0)) < 1e-9


def _day_run(backend: str | None):
    cfg = dataclasses.replace(BuildingConfig(),
                              weather_path=bundled_weather_path())
    sim = SimulationSettings(stop_s=86400, output_interval_s=900)
    return run_simulation(cfg, sim=sim, backend=backend)


def check_energy_closure() -> None:
    result = _day_run(None)
    assert result.residual_max_step_rel < 1e-9, result.residual_max_step_rel
    assert result.residual_cumulative_rel < 1e-6, result.residual_cumulative_rel
    t_air = result.trace["t_air_c"]
    assert (t_air > -30.0).all() and (t_air < 60.0).all()


def check_backend_agreement() -> None:
    if not NUMBA_AVAILABLE:
        return
    fast = _day_run("numba")
    plain = _day_run("numpy")
    gap = np.max(np.abs(fast.trace["t_air_c"] - plain.trace["t_air_c"]))
    assert gap <= 1e-9, gap


CHECKS = (
    ("geometry", check_geometry),
    ("equilibrium", check_equilibrium),
    ("energy closure", check_energy_closure),
    ("backend agreement", check_backend_agreement),
)


def run_self_checks(echo=print) -> bool:
    ok = True
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:
            ok = False
            echo(f"FAIL {name}: {exc!r}")
        else:
            echo(f"ok   {name}")
    return ok
