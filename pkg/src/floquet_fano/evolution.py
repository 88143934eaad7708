"""Time-domain integration of the driven chain with absorbing boundaries.

The single-excitation wavefunction (dA, dB, c_{-M..M}) is advanced by
classical RK4 under the equations of motion

    i dA' = (eA + alpha cos wt) dA + gA c0
    i dB' = eB dB + gB c0
    i cm' = (e0 - i gamma_m) cm - (beta/2)(c_{m+1} + c_{m-1})
            + (gA dA + gB dB) delta_{m,0}

with hard-wall closure c_{+-(M+1)} = 0 and a polynomial complex absorbing
potential gamma_m ramped over the outer w sites. The hot inner loop is
JIT-compiled with numba; `rhs` and `rk4_step` expose the same arithmetic as
plain numpy for unit-level checks.

Samples are recorded on a uniform stride and additionally at the exact
stroboscopic times t = n*T (the step size is locally subdivided so every
sample time is hit exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigError, NonFiniteStateError
from .model import ModelConfig

MAX_STORED_SAMPLES = 200_000
RK4_STABILITY_LIMIT = 2.5


@dataclass(frozen=True)
class EvolutionConfig:
    M: int
    w: int
    gamma0: float = 0.6
    cap_exponent: float = 2.0
    dt: float = 2e-3
    t_max: float = 2e4
    sample_stride: int = 0     # 0: auto-pick so that <= MAX_STORED_SAMPLES
    initial: str = "B"

    def __post_init__(self):
        if self.w >= self.M:
            raise ConfigError(f"CAP width w={self.w} must be < M={self.M}")
        if self.dt <= 0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if self.t_max < self.dt:
            raise ConfigError(f"t_max={self.t_max} must be >= dt={self.dt}")
        if self.gamma0 < 0:
            raise ConfigError(f"gamma0 must be >= 0, got {self.gamma0}")
        if self.cap_exponent <= 0:
            raise ConfigError(f"CAP exponent must be > 0, got {self.cap_exponent}")
        if self.initial not in ("A", "B"):
            raise ConfigError(f"initial must be 'A' or 'B', got {self.initial!r}")

    @classmethod
    def desk(cls, initial: str = "B", **overrides) -> "EvolutionConfig":
        params = dict(M=1500, w=900, gamma0=0.6, cap_exponent=2.0,
                      dt=2e-3, t_max=2e4, initial=initial)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def paper(cls, initial: str = "B", **overrides) -> "EvolutionConfig":
        params = dict(M=5000, w=3000, gamma0=0.6, cap_exponent=2.0,
                      dt=1e-3, t_max=2e4, initial=initial)
        params.update(overrides)
        return cls(**params)

    def resolved_stride(self) -> int:
        if self.sample_stride > 0:
            return self.sample_stride
        n_steps = int(math.ceil(self.t_max / self.dt))
        return max(1, int(math.ceil(n_steps / (MAX_STORED_SAMPLES / 2))))

    def stability_advisory(self, config: ModelConfig) -> bool:
        """RK4 step-size heuristic: flag dt * (local energy bound) > 2.5."""
        bound = max(abs(config.eA) + abs(config.alpha), abs(config.eB),
                    abs(config.e0) + config.beta + self.gamma0)
        bound += config.gA + config.gB
        return self.dt * bound > RK4_STABILITY_LIMIT


@dataclass(frozen=True)
class CapProfile:
    gamma_m: np.ndarray    # indexed by site m in [-M, M]


def build_cap(evo: EvolutionConfig) -> CapProfile:
    m = np.arange(-evo.M, evo.M + 1)
    ramp = (np.abs(m) - (evo.M - evo.w)) / evo.w
    gamma = np.where(np.abs(m) <= evo.M - evo.w, 0.0,
                     evo.gamma0 * np.maximum(ramp, 0.0) ** evo.cap_exponent)
    return CapProfile(gamma_m=gamma)


@dataclass
class WavefunctionState:
    dA: complex
    dB: complex
    c: np.ndarray
    t: float

    def norm_sq(self) -> float:
        return abs(self.dA) ** 2 + abs(self.dB) ** 2 + float(np.sum(np.abs(self.c) ** 2))


def initial_state(evo: EvolutionConfig) -> WavefunctionState:
    c = np.zeros(2 * evo.M + 1, dtype=np.complex128)
    dA = 1.0 + 0j if evo.initial == "A" else 0j
    dB = 1.0 + 0j if evo.initial == "B" else 0j
    return WavefunctionState(dA=dA, dB=dB, c=c, t=0.0)


def rhs(state: WavefunctionState, t: float, config: ModelConfig,
        evo: EvolutionConfig, cap: CapProfile) -> WavefunctionState:
    """Time derivative of the state (returned with t set to the input time)."""
    c = state.c
    center = evo.M
    eps_a = config.eA + config.alpha * math.cos(config.omega * t)
    d_dA = -1j * (eps_a * state.dA + config.gA * c[center])
    d_dB = -1j * (config.eB * state.dB + config.gB * c[center])

    hop = np.zeros_like(c)
    hop[:-1] += c[1:]
    hop[1:] += c[:-1]
    d_c = -1j * ((config.e0 - 1j * cap.gamma_m) * c - 0.5 * config.beta * hop)
    d_c[center] += -1j * (config.gA * state.dA + config.gB * state.dB)
    return WavefunctionState(dA=d_dA, dB=d_dB, c=d_c, t=t)


def rk4_step(state: WavefunctionState, t: float, dt: float, config: ModelConfig,
             evo: EvolutionConfig, cap: CapProfile) -> WavefunctionState:
    """One classical fourth-order Runge-Kutta step of size dt."""
    def shifted(base, deriv, factor):
        return WavefunctionState(dA=base.dA + factor * deriv.dA,
                                 dB=base.dB + factor * deriv.dB,
                                 c=base.c + factor * deriv.c,
                                 t=base.t)

    k1 = rhs(state, t, config, evo, cap)
    k2 = rhs(shifted(state, k1, 0.5 * dt), t + 0.5 * dt, config, evo, cap)
    k3 = rhs(shifted(state, k2, 0.5 * dt), t + 0.5 * dt, config, evo, cap)
    k4 = rhs(shifted(state, k3, dt), t + dt, config, evo, cap)
    return WavefunctionState(
        dA=state.dA + (dt / 6.0) * (k1.dA + 2 * k2.dA + 2 * k3.dA + k4.dA),
        dB=state.dB + (dt / 6.0) * (k1.dB + 2 * k2.dB + 2 * k3.dB + k4.dB),
        c=state.c + (dt / 6.0) * (k1.c + 2 * k2.c + 2 * k3.c + k4.c),
        t=t + dt,
    )


@njit(cache=True, fastmath=True)
def _rhs_kernel(y, t, out, eA, eB, gA, gB, beta, alpha, omega, diagc):
    n = y.shape[0]
    i0 = 2 + (n - 3) // 2
    out[0] = -1j * ((eA + alpha * np.cos(omega * t)) * y[0] + gA * y[i0])
    out[1] = -1j * (eB * y[1] + gB * y[i0])
    half = 0.5 * beta
    out[2] = -1j * (diagc[0] * y[2] - half * y[3])
    for j in range(3, n - 1):
        out[j] = -1j * (diagc[j - 2] * y[j] - half * (y[j - 1] + y[j + 1]))
    out[n - 1] = -1j * (diagc[n - 3] * y[n - 1] - half * y[n - 2])
    out[i0] += -1j * (gA * y[0] + gB * y[1])


# no fastmath here: the non-finite detection relies on IEEE NaN/inf
# semantics that fastmath licenses the compiler to assume away
@njit(cache=True)
def _integrate(y, times, dt_max, eA, eB, gA, gB, beta, alpha, omega, diagc,
               level_index, p_out, norm_out):
    n = y.shape[0]
    k1 = np.zeros(n, dtype=np.complex128)
    k2 = np.zeros(n, dtype=np.complex128)
    k3 = np.zeros(n, dtype=np.complex128)
    k4 = np.zeros(n, dtype=np.complex128)
    yt = np.zeros(n, dtype=np.complex128)

    p_out[0] = abs(y[level_index]) ** 2
    acc = 0.0
    for j in range(n):
        acc += y[j].real ** 2 + y[j].imag ** 2
    norm_out[0] = acc

    for s in range(1, times.shape[0]):
        t0 = times[s - 1]
        t1 = times[s]
        nsteps = int(np.ceil((t1 - t0) / dt_max - 1e-12))
        if nsteps < 1:
            nsteps = 1
        dt = (t1 - t0) / nsteps
        t = t0
        for _ in range(nsteps):
            _rhs_kernel(y, t, k1, eA, eB, gA, gB, beta, alpha, omega, diagc)
            for j in range(n):
                yt[j] = y[j] + 0.5 * dt * k1[j]
            _rhs_kernel(yt, t + 0.5 * dt, k2, eA, eB, gA, gB, beta, alpha, omega, diagc)
            for j in range(n):
                yt[j] = y[j] + 0.5 * dt * k2[j]
            _rhs_kernel(yt, t + 0.5 * dt, k3, eA, eB, gA, gB, beta, alpha, omega, diagc)
            for j in range(n):
                yt[j] = y[j] + dt * k3[j]
            _rhs_kernel(yt, t + dt, k4, eA, eB, gA, gB, beta, alpha, omega, diagc)
            for j in range(n):
                y[j] = y[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            t += dt

        p_out[s] = abs(y[level_index]) ** 2
        acc = 0.0
        for j in range(n):
            acc += y[j].real ** 2 + y[j].imag ** 2
        norm_out[s] = acc
        if not np.isfinite(acc):
            return s
    return -1


@dataclass
class SurvivalSeries:
    times: np.ndarray
    p_survival: np.ndarray
    norm: np.ndarray
    strobe_mask: np.ndarray
    initial: str
    model: ModelConfig
    evolution: EvolutionConfig

    @property
    def pA(self) -> np.ndarray | None:
        return self.p_survival if self.initial == "A" else None

    @property
    def pB(self) -> np.ndarray | None:
        return self.p_survival if self.initial == "B" else None

    def at_time(self, t: float) -> float:
        idx = int(np.argmin(np.abs(self.times - t)))
        return float(self.p_survival[idx])


def sample_schedule(evo: EvolutionConfig, omega: float) -> tuple[np.ndarray, np.ndarray]:
    """Union of uniform-stride and stroboscopic (t = n*T) sample times."""
    stride = evo.resolved_stride()
    coarse = stride * evo.dt
    uniform = np.arange(0, int(math.floor(evo.t_max / coarse + 1e-9)) + 1) * coarse
    period = 2.0 * math.pi / omega
    strobes = np.arange(0, int(math.floor(evo.t_max / period + 1e-9)) + 1) * period

    merged = np.concatenate([uniform, strobes])
    order = np.argsort(merged, kind="stable")
    merged = merged[order]
    is_strobe = np.concatenate([np.zeros(len(uniform), dtype=bool),
                                np.ones(len(strobes), dtype=bool)])[order]

    tol = 1e-9 * max(1.0, evo.t_max)
    keep_times = [merged[0]]
    keep_strobe = [is_strobe[0]]
    for t, s in zip(merged[1:], is_strobe[1:]):
        if t - keep_times[-1] < tol:
            keep_strobe[-1] = keep_strobe[-1] or s
        else:
            keep_times.append(t)
            keep_strobe.append(s)
    return np.array(keep_times), np.array(keep_strobe)


def evolve(config: ModelConfig, evo: EvolutionConfig) -> SurvivalSeries:
    """Integrate from |d_X> at t=0 and record survival probability and norm."""
    cap = build_cap(evo)
    times, strobe_mask = sample_schedule(evo, config.omega)

    n = 2 * evo.M + 3
    y = np.zeros(n, dtype=np.complex128)
    level_index = 0 if evo.initial == "A" else 1
    y[level_index] = 1.0
    diagc = (config.e0 - 1j * cap.gamma_m).astype(np.complex128)

    p_out = np.empty(len(times))
    norm_out = np.empty(len(times))
    bad = _integrate(y, times, evo.dt, config.eA, config.eB, config.gA,
                     config.gB, config.beta, config.alpha, config.omega,
                     diagc, level_index, p_out, norm_out)

    series = SurvivalSeries(times=times, p_survival=p_out, norm=norm_out,
                            strobe_mask=strobe_mask, initial=evo.initial,
                            model=config, evolution=evo)
    if bad >= 0:
        truncated = SurvivalSeries(times=times[:bad], p_survival=p_out[:bad],
                                   norm=norm_out[:bad], strobe_mask=strobe_mask[:bad],
                                   initial=evo.initial, model=config, evolution=evo)
        raise NonFiniteStateError(
            f"non-finite amplitudes at t={times[bad]:g}",
            last_good_time=float(times[bad - 1]) if bad > 0 else None,
            partial=truncated)
    return series


def write_series_csv(series: SurvivalSeries, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("t,p_survival,norm\r\n")
        for t, p, nrm in zip(series.times, series.p_survival, series.norm):
            fh.write(f"{t:.12e},{p:.12e},{nrm:.12e}\r\n")


def series_metadata(series: SurvivalSeries, code_version: str) -> dict:
    model = series.model
    evo = series.evolution
    return {
        "code_version": code_version,
        "initial": series.initial,
        "model": {
            "e0": model.e0, "beta": model.beta, "eA": model.eA, "eB": model.eB,
            "gA": model.gA, "gB": model.gB, "omega": model.omega,
            "alpha": model.alpha, "chi": model.chi,
        },
        "evolution": {
            "M": evo.M, "w": evo.w, "gamma0": evo.gamma0,
            "p": evo.cap_exponent, "dt": evo.dt, "t_max": evo.t_max,
            "stride": evo.resolved_stride(),
        },
        "samples": int(len(series.times)),
        "stroboscopic_samples": int(np.sum(series.strobe_mask)),
    }
