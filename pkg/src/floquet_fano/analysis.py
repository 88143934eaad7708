"""Decay-rate extraction, pole-vs-time comparison, and parameter sweeps."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .dispersion import DispersionVariant, Pole, converge_truncation
from .errors import DegenerateGridError, FloquetFanoError, InsufficientDataError
from .evolution import EvolutionConfig, SurvivalSeries, evolve
from .model import ModelConfig, classify_levels
from .selfenergy import bessel_j

MIN_FIT_POINTS = 10
P_FLOOR = 1e-12


class FitMethod(enum.Enum):
    STROBOSCOPIC = "stroboscopic"
    ENVELOPE = "envelope"


@dataclass(frozen=True)
class DecayFit:
    gamma_fit: float
    window: tuple[float, float]
    r_squared: float
    n_points: int
    method: FitMethod
    decaying: bool          # False when the slope is positive beyond noise


def default_window(series: SurvivalSeries) -> tuple[float, float]:
    """Skip the early non-exponential transient: fit over [0.1*t_end, t_end]."""
    t_end = float(series.times[-1])
    return (0.1 * t_end, t_end)


def fit_decay(series: SurvivalSeries, window: tuple[float, float] | None = None,
              method: FitMethod = FitMethod.STROBOSCOPIC) -> DecayFit:
    """Least-squares line through (t, ln P); gamma_fit = -slope/2."""
    if window is None:
        window = default_window(series)
    t_lo, t_hi = window
    mask = (series.times >= t_lo) & (series.times <= t_hi) & (series.p_survival > P_FLOOR)
    if method is FitMethod.STROBOSCOPIC:
        mask &= series.strobe_mask
    t = series.times[mask]
    p = series.p_survival[mask]
    if len(t) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"only {len(t)} usable samples in window {window} (need {MIN_FIT_POINTS})")

    log_p = np.log(p)
    slope, intercept = np.polyfit(t, log_p, 1)
    predicted = slope * t + intercept
    ss_res = float(np.sum((log_p - predicted) ** 2))
    ss_tot = float(np.sum((log_p - np.mean(log_p)) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    # standard error of the slope, for the non-decaying significance call
    dof = max(len(t) - 2, 1)
    t_var = float(np.sum((t - np.mean(t)) ** 2))
    slope_se = math.sqrt(ss_res / dof / t_var) if t_var > 0 else 0.0
    non_decaying = slope > 0 and slope > 2.0 * slope_se

    return DecayFit(gamma_fit=float(-slope / 2.0), window=(float(t_lo), float(t_hi)),
                    r_squared=float(r_squared), n_points=int(len(t)),
                    method=method, decaying=not non_decaying)


@dataclass(frozen=True)
class PoleTimeComparison:
    gamma_pole: float
    fit: DecayFit
    max_envelope_deviation: float
    rate_discrepancy: float | None   # None when gamma_pole is below resolution


def compare_pole_vs_time(pole: Pole, series: SurvivalSeries,
                         window: tuple[float, float] | None = None) -> PoleTimeComparison:
    """Compare the pole envelope P(0) e^{-2 gamma t} against stroboscopic samples."""
    gamma = pole.gamma
    strobe_t = series.times[series.strobe_mask]
    strobe_p = series.p_survival[series.strobe_mask]
    envelope = strobe_p[0] * np.exp(-2.0 * gamma * strobe_t)
    max_dev = float(np.max(np.abs(strobe_p - envelope)))
    fit = fit_decay(series, window=window, method=FitMethod.STROBOSCOPIC)
    discrepancy = abs(fit.gamma_fit / gamma - 1.0) if gamma > 1e-12 else None
    return PoleTimeComparison(gamma_pole=gamma, fit=fit,
                              max_envelope_deviation=max_dev,
                              rate_discrepancy=discrepancy)


class SweepAxis(enum.Enum):
    OMEGA = "omega"
    CHI = "chi"


@dataclass
class SweepRow:
    omega: float
    chi: float
    gamma_pole: float | None
    pole_re: float | None
    gamma_fit: float | None
    r_squared: float | None
    replica_flag_A: bool | None
    replica_flag_B: bool | None
    status: str


def _config_at(base: ModelConfig, axis: SweepAxis, value: float) -> ModelConfig:
    if axis is SweepAxis.OMEGA:
        # keep chi fixed while omega moves (alpha follows)
        return ModelConfig(base.e0, base.beta, base.eA, base.eB, base.gA,
                           base.gB, value, base.chi * value)
    return ModelConfig(base.e0, base.beta, base.eA, base.eB, base.gA,
                       base.gB, base.omega, value * base.omega)


def sweep_point(base: ModelConfig, axis: SweepAxis, value: float, *,
                variant: DispersionVariant = DispersionVariant.SCALAR_B0_EXACT,
                with_evolution: bool = False,
                evo: EvolutionConfig | None = None) -> SweepRow:
    config = _config_at(base, axis, value)
    row = SweepRow(omega=config.omega, chi=config.chi, gamma_pole=None,
                   pole_re=None, gamma_fit=None, r_squared=None,
                   replica_flag_A=None, replica_flag_B=None, status="ok")
    try:
        trunc, pole = converge_truncation(variant, config)
        row.gamma_pole = pole.gamma
        row.pole_re = pole.z.real
        reports = classify_levels(config, trunc.N)
        row.replica_flag_A = reports["A"].in_any_replica
        row.replica_flag_B = reports["B"].in_any_replica
    except FloquetFanoError as exc:
        row.status = f"pole-error: {exc}"
        return row

    if with_evolution:
        try:
            series = evolve(config, evo if evo is not None
                            else EvolutionConfig.desk(initial="B"))
            fit = fit_decay(series)
            row.gamma_fit = fit.gamma_fit
            row.r_squared = fit.r_squared
        except FloquetFanoError as exc:
            row.status = f"evolution-error: {exc}"
    return row


def sweep(axis: SweepAxis, grid, base: ModelConfig, *,
          variant: DispersionVariant = DispersionVariant.SCALAR_B0_EXACT,
          with_evolution: bool = False,
          evo: EvolutionConfig | None = None,
          jobs: int = 1) -> list[SweepRow]:
    """Pole (and optionally time-domain) results over a parameter grid.

    Per-point failures are recorded in the row status; the sweep continues.
    Rows come back sorted on the sweep key regardless of worker order.
    """
    values = [float(v) for v in grid]
    if not values:
        raise DegenerateGridError("empty sweep grid")

    if jobs > 1 and len(values) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(
                _sweep_point_star,
                [(base, axis, v, variant, with_evolution, evo) for v in values]))
    else:
        rows = [sweep_point(base, axis, v, variant=variant,
                            with_evolution=with_evolution, evo=evo)
                for v in values]
    key = (lambda r: r.omega) if axis is SweepAxis.OMEGA else (lambda r: r.chi)
    return sorted(rows, key=key)


def _sweep_point_star(args):
    base, axis, value, variant, with_evolution, evo = args
    return sweep_point(base, axis, value, variant=variant,
                       with_evolution=with_evolution, evo=evo)


def write_sweep_csv(rows: list[SweepRow], path) -> None:
    def fmt(x):
        return f"{x:.12e}" if x is not None else ""

    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("omega,chi,gamma_pole,pole_re,gamma_fit,r_squared,"
                 "replica_flag_B,replica_flag_A,status\r\n")
        for row in rows:
            flag_b = "" if row.replica_flag_B is None else str(int(row.replica_flag_B))
            flag_a = "" if row.replica_flag_A is None else str(int(row.replica_flag_A))
            fh.write(f"{fmt(row.omega)},{fmt(row.chi)},{fmt(row.gamma_pole)},"
                     f"{fmt(row.pole_re)},{fmt(row.gamma_fit)},{fmt(row.r_squared)},"
                     f"{flag_b},{flag_a},{row.status}\r\n")


@dataclass(frozen=True)
class ScalingReport:
    chi_values: tuple[float, ...]
    ratios: tuple[float, ...]          # gamma_B / (J0^2 J1^2) per chi
    ratio_spread: float                # max/min - 1
    g_values: tuple[float, ...]
    g_gammas: tuple[float, ...]
    coupling_slope: float              # log-log slope of gamma_B vs g


def scaling_audit(chi_grid, base: ModelConfig, *,
                  g_values=(0.05, 0.025, 0.0125),
                  variant: DispersionVariant = DispersionVariant.SCALAR_B0_EXACT) -> ScalingReport:
    """Audit gamma_B ~ g^6 J0^2(chi) J1^2(chi) against converged poles."""
    chis = [float(c) for c in chi_grid]
    if len(chis) < 2:
        raise DegenerateGridError("need at least two chi points")

    ratios = []
    for chi in chis:
        weight = bessel_j(0, chi) ** 2 * bessel_j(1, chi) ** 2
        if weight < 1e-10:
            raise DegenerateGridError(f"chi={chi} too close to a Bessel zero")
        config = ModelConfig(base.e0, base.beta, base.eA, base.eB, base.gA,
                             base.gB, base.omega, chi * base.omega)
        _, pole = converge_truncation(variant, config)
        ratios.append(pole.gamma / weight)
    spread = max(ratios) / min(ratios) - 1.0

    gammas = []
    for g in g_values:
        config = ModelConfig(base.e0, base.beta, base.eA, base.eB, g, g,
                             base.omega, base.alpha)
        _, pole = converge_truncation(variant, config)
        gammas.append(pole.gamma)
    if any(g <= 0 for g in gammas):
        raise DegenerateGridError("vanishing gamma_B in the coupling scan; "
                                  "the remote channel is closed at this omega")
    slope = float(np.polyfit(np.log(g_values), np.log(gammas), 1)[0])

    return ScalingReport(chi_values=tuple(chis), ratios=tuple(ratios),
                         ratio_spread=float(spread), g_values=tuple(g_values),
                         g_gammas=tuple(gammas), coupling_slope=slope)
