"""Shared fixtures.

The desk-scale trajectories (M=1500, t_max=2e4, 1e7 RK4 steps) take several
minutes each, so they are computed once per parameter set and cached as .npz
under tests/.trajectory_cache/. Delete that directory to force a recompute
after changing the integrator.
"""

import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from floquet_fano import presets
from floquet_fano.evolution import EvolutionConfig, SurvivalSeries, evolve
from floquet_fano.model import ModelConfig

CACHE_DIR = Path(__file__).parent / ".trajectory_cache"


def _cache_key(config: ModelConfig, evo: EvolutionConfig) -> str:
    payload = json.dumps({
        "e0": config.e0, "beta": config.beta, "eA": config.eA, "eB": config.eB,
        "gA": config.gA, "gB": config.gB, "omega": config.omega,
        "alpha": config.alpha,
        "M": evo.M, "w": evo.w, "gamma0": evo.gamma0, "p": evo.cap_exponent,
        "dt": evo.dt, "t_max": evo.t_max, "stride": evo.sample_stride,
        "initial": evo.initial,
    }, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def cached_evolve(config: ModelConfig, evo: EvolutionConfig) -> SurvivalSeries:
    CACHE_DIR.mkdir(exist_ok=True)
    path = CACHE_DIR / f"{_cache_key(config, evo)}.npz"
    if path.exists():
        data = np.load(path)
        return SurvivalSeries(times=data["times"], p_survival=data["p_survival"],
                              norm=data["norm"], strobe_mask=data["strobe_mask"],
                              initial=evo.initial, model=config, evolution=evo)
    series = evolve(config, evo)
    np.savez_compressed(path, times=series.times, p_survival=series.p_survival,
                        norm=series.norm, strobe_mask=series.strobe_mask)
    return series


@pytest.fixture(scope="session")
def fig3_series_B() -> SurvivalSeries:
    """P_B(t) at omega=2.3025, chi=1.081978, desk scale."""
    return cached_evolve(presets.fig3_config(), EvolutionConfig.desk(initial="B"))


@pytest.fixture(scope="session")
def fig3_series_A() -> SurvivalSeries:
    """P_A(t) at omega=2.3025, chi=1.081978, desk scale."""
    return cached_evolve(presets.fig3_config(), EvolutionConfig.desk(initial="A"))


@pytest.fixture(scope="session")
def fig4b_series_B() -> SurvivalSeries:
    """P_B(t) at omega=2.2, chi=2.404826 (J0 zero), desk scale."""
    return cached_evolve(presets.fig4b_config(), EvolutionConfig.desk(initial="B"))


@pytest.fixture(scope="session")
def fig4b_series_A() -> SurvivalSeries:
    """P_A(t) at omega=2.2, chi=2.404826; A decays fast, so a short run suffices."""
    return cached_evolve(presets.fig4b_config(),
                         EvolutionConfig.desk(initial="A", t_max=2500.0))
