"""Dispersion functions for the complex quasienergy poles and their roots.

Variants, from exact to most reduced:
  * DETERMINANT_A / DETERMINANT_B - determinant of the full (2N+1)^2 ladder
    matrix eta_X(z), with the other ladder eliminated exactly through its
    Green matrix G_Y = Delta_Y^{-1}.
  * SCALAR_A0 - channel-diagonal scalar for the driven level,
    z - eA - gA^2 sum_nu J_nu^2 zeta^(nu)(z).
  * SCALAR_B0_EXACT - projection onto the n=0 undriven component with the
    channel-diagonal driven-ladder propagator Delta_A^(n)(z).
  * SCALAR_B0_EXPANDED - weak-coupling expansion of the same, keeping terms
    through order gA^4 gB^2.

Roots are found by damped Newton iteration with central-difference
derivatives, with a Muller fallback on stagnation. The per-channel Riemann
sheet map is re-evaluated at every iterate and held fixed within it.
"""

from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .errors import (
    BranchPointError,
    LadderPoleProximityError,
    NoConvergenceError,
    NoTruncationConvergenceError,
    SheetFlipLivelockError,
    SingularDeltaAError,
    SingularGYMatrixError,
)
from .greens import Sheet, sheet_map
from .model import ModelConfig
from .selfenergy import (
    FloquetTruncation,
    KernelPair,
    _zeta_values,
    kernel_block,
    xi_AA_diag,
    xi_AA_matrix,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 200
DEFAULT_GUARD = 1e-10
STEP_TOL = 1e-12
COND_LIMIT = 1e14


class DispersionVariant(enum.Enum):
    DETERMINANT_A = "DeterminantA"
    DETERMINANT_B = "DeterminantB"
    SCALAR_A0 = "ScalarA0"
    SCALAR_B0_EXACT = "ScalarB0Exact"
    SCALAR_B0_EXPANDED = "ScalarB0Expanded"


@dataclass(frozen=True)
class Pole:
    z: complex
    variant: DispersionVariant
    truncation: FloquetTruncation
    sheetmap: dict[int, Sheet]
    residual: float
    iterations: int

    @property
    def gamma(self) -> float:
        return -self.z.imag

    def sheetmap_record(self) -> dict[str, str]:
        return {str(n): sheet.value for n, sheet in sorted(self.sheetmap.items())}


def _level_energy(config: ModelConfig, level: str) -> float:
    return config.eA if level == "A" else config.eB


def delta_A(n: int, z: complex, config: ModelConfig, trunc: FloquetTruncation,
            sheets: dict[int, Sheet] | None = None) -> complex:
    """Scalar driven-ladder inverse propagator
    Delta_A^(n)(z) = z - eA - n*omega - gA^2 xi_AA^(n)(z)."""
    return (z - config.eA - n * config.omega
            - config.gA**2 * xi_AA_diag(n, z, config, trunc, sheets))


def eta_matrix(level: str, z: complex, config: ModelConfig,
               trunc: FloquetTruncation,
               sheets: dict[int, Sheet] | None = None) -> np.ndarray:
    """Full ladder matrix eta_X^(n,n')(z) with the other ladder eliminated."""
    if level not in ("A", "B"):
        raise ValueError(f"level must be 'A' or 'B', got {level!r}")
    other = "B" if level == "A" else "A"
    ns = trunc.channels()
    if sheets is None:
        sheets = sheet_map(z, trunc.nu_channels(), config)

    g_x = config.gA if level == "A" else config.gB
    g_y = config.gB if level == "A" else config.gA
    e_x = _level_energy(config, level)
    e_y = _level_energy(config, other)

    zetas = _zeta_values(z, config, ns, sheets)
    if level == "A":
        xi_xx = xi_AA_matrix(z, config, trunc, sheets)
        xi_yy = np.diag(zetas)
        xi_xy = kernel_block(KernelPair.AB, z, config, trunc, sheets).matrix
        xi_yx = kernel_block(KernelPair.BA, z, config, trunc, sheets).matrix
    else:
        xi_xx = np.diag(zetas)
        xi_yy = xi_AA_matrix(z, config, trunc, sheets)
        xi_xy = kernel_block(KernelPair.BA, z, config, trunc, sheets).matrix
        xi_yx = kernel_block(KernelPair.AB, z, config, trunc, sheets).matrix

    delta_y = np.diag((z - e_y - ns * config.omega).astype(complex)) - g_y**2 * xi_yy
    if np.linalg.cond(delta_y) > COND_LIMIT:
        raise SingularGYMatrixError(
            f"Delta_{other} numerically singular at z={z} (cond > {COND_LIMIT:g})")
    g_y_matrix = np.linalg.inv(delta_y)

    eta = (np.diag((z - e_x - ns * config.omega).astype(complex))
           - g_x**2 * xi_xx
           - g_x**2 * g_y**2 * (xi_xy @ g_y_matrix @ xi_yx))
    return eta


def eta_det(level: str, z: complex, config: ModelConfig,
            trunc: FloquetTruncation,
            sheets: dict[int, Sheet] | None = None, *,
            skip_center_norm: bool = False) -> complex:
    """Determinant of eta_matrix, normalized by the free diagonal product.

    With skip_center_norm the n=0 free factor is left out of the
    normalization, which keeps the bare root z = e_X visible in the
    decoupled limit; root finding uses that form.
    """
    ns = trunc.channels()
    e_x = _level_energy(config, level)
    eta = eta_matrix(level, z, config, trunc, sheets)
    free = (z - e_x - ns * config.omega).astype(complex)
    if skip_center_norm:
        free[trunc.N] = 1.0
    return complex(np.linalg.det(eta / free[:, None]))


def eta_tilde_A0(z: complex, config: ModelConfig, trunc: FloquetTruncation,
                 sheets: dict[int, Sheet] | None = None) -> complex:
    """Scalar driven-level dispersion z - eA - gA^2 sum_nu J_nu^2 zeta^(nu)(z)."""
    nus = trunc.nu_channels()
    zetas = _zeta_values(z, config, nus, sheets)
    weights = jv(nus, config.chi) ** 2
    return z - config.eA - config.gA**2 * complex(np.sum(weights * zetas))


def eta_tilde_B0_exact(z: complex, config: ModelConfig,
                       trunc: FloquetTruncation,
                       sheets: dict[int, Sheet] | None = None, *,
                       guard: float = DEFAULT_GUARD) -> complex:
    """Projected undriven-level dispersion with the full scalar ladder
    propagators 1/Delta_A^(n)(z)."""
    if sheets is None:
        sheets = sheet_map(z, trunc.nu_channels(), config)
    nus = trunc.nu_channels()
    zetas = _zeta_values(z, config, nus, sheets)
    zeta0_val = zetas[trunc.Nnu]
    chi = config.chi
    ga2 = config.gA**2

    ladder_sum = 0j
    for n in trunc.channels():
        xi_n = complex(np.sum(jv(n - nus, chi) ** 2 * zetas))
        d_n = z - config.eA - n * config.omega - ga2 * xi_n
        if abs(d_n) < guard:
            raise SingularDeltaAError(f"Delta_A^({n})(z) within guard at z={z}")
        ladder_sum += jv(n, chi) ** 2 / d_n

    return (z - config.eB - config.gB**2 * zeta0_val
            - ga2 * config.gB**2 * zeta0_val**2 * ladder_sum)


def eta_tilde_B0_expanded(z: complex, config: ModelConfig,
                          trunc: FloquetTruncation,
                          sheets: dict[int, Sheet] | None = None, *,
                          guard: float = DEFAULT_GUARD) -> complex:
    """Weak-coupling form of eta_tilde_B0 keeping terms through gA^4 gB^2."""
    if sheets is None:
        sheets = sheet_map(z, trunc.nu_channels(), config)
    nus = trunc.nu_channels()
    zetas = _zeta_values(z, config, nus, sheets)
    zeta0_val = zetas[trunc.Nnu]
    chi = config.chi

    first = 0j
    second = 0j
    for n in trunc.channels():
        bare = z - config.eA - n * config.omega
        if abs(bare) < guard:
            raise LadderPoleProximityError(
                f"bare ladder denominator for n={n} within guard at z={z}")
        jn2 = jv(n, chi) ** 2
        first += jn2 / bare
        second += jn2 / bare**2 * complex(np.sum(jv(n - nus, chi) ** 2 * zetas))

    return (z - config.eB - config.gB**2 * zeta0_val
            - config.gA**2 * config.gB**2 * zeta0_val**2 * first
            - config.gA**4 * config.gB**2 * zeta0_val**2 * second)


def dispersion_value(variant: DispersionVariant, z: complex,
                     config: ModelConfig, trunc: FloquetTruncation,
                     sheets: dict[int, Sheet] | None = None, *,
                     guard: float = DEFAULT_GUARD,
                     root_form: bool = False) -> complex:
    if variant is DispersionVariant.SCALAR_A0:
        return eta_tilde_A0(z, config, trunc, sheets)
    if variant is DispersionVariant.SCALAR_B0_EXACT:
        return eta_tilde_B0_exact(z, config, trunc, sheets, guard=guard)
    if variant is DispersionVariant.SCALAR_B0_EXPANDED:
        return eta_tilde_B0_expanded(z, config, trunc, sheets, guard=guard)
    level = "A" if variant is DispersionVariant.DETERMINANT_A else "B"
    return eta_det(level, z, config, trunc, sheets, skip_center_norm=root_form)


def default_seed(variant: DispersionVariant, config: ModelConfig) -> complex:
    if variant in (DispersionVariant.SCALAR_A0, DispersionVariant.DETERMINANT_A):
        return complex(config.eA)
    return complex(config.eB)


def _muller_step(points: list[tuple[complex, complex]]) -> complex:
    """One Muller update from the three most recent (z, f) pairs."""
    (z2, f2), (z1, f1), (z0, f0) = points[-3:]
    q = (z0 - z1) / (z1 - z2)
    a = q * f0 - q * (1 + q) * f1 + q**2 * f2
    b = (2 * q + 1) * f0 - (1 + q) ** 2 * f1 + q**2 * f2
    c = (1 + q) * f0
    disc = cmath.sqrt(b**2 - 4 * a * c)
    denom = b + disc if abs(b + disc) > abs(b - disc) else b - disc
    if denom == 0:
        raise ZeroDivisionError("degenerate Muller step")
    return z0 - (z0 - z1) * (2 * c / denom)


def find_pole(variant: DispersionVariant, seed: complex | None,
              config: ModelConfig, trunc: FloquetTruncation, *,
              tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
              guard: float = DEFAULT_GUARD) -> Pole:
    """Locate the complex root connected to the seed (default: bare energy)."""
    z = complex(seed) if seed is not None else default_seed(variant, config)
    nu_channels = trunc.nu_channels()

    def f(zz: complex, sheets: dict[int, Sheet]) -> complex:
        return dispersion_value(variant, zz, config, trunc, sheets,
                                guard=guard, root_form=True)

    trace: list[tuple[complex, float]] = []
    history: list[tuple[complex, complex]] = []
    sheet_keys: list[frozenset] = []
    residuals: list[float] = []

    nudges = 0
    for iteration in range(1, max_iter + 1):
        sheets = sheet_map(z, nu_channels, config)
        try:
            fz = f(z, sheets)
        except BranchPointError:
            # the iterate put some channel argument on a band edge (the bare
            # seed does this whenever e_X - n*omega hits e0 +- beta exactly);
            # dodge it with a small downward displacement
            if nudges >= 5:
                raise
            nudges += 1
            z = z - 1e-8j * (1.0 + abs(z))
            continue
        key = frozenset(n for n, s in sheets.items() if s is Sheet.SECOND)
        sheet_keys.append(key)
        trace.append((z, abs(fz)))
        history.append((z, fz))
        residuals.append(abs(fz))

        # livelock: the sheet map keeps flipping while the residual stalls
        if (len(sheet_keys) >= 8 and len(set(sheet_keys[-8:])) == 2
                and sheet_keys[-1] != sheet_keys[-2]
                and residuals[-1] > 0.5 * residuals[-8]):
            raise SheetFlipLivelockError(
                f"sheet map oscillation at z={z}", trace=trace)

        h = 1e-7 * max(1.0, abs(z))
        df = (f(z + h, sheets) - f(z - h, sheets)) / (2.0 * h)
        if df == 0:
            raise NoConvergenceError(f"zero derivative at z={z}", trace=trace)
        dz = -fz / df

        if abs(fz) < tol and abs(dz) < STEP_TOL:
            return Pole(z=z, variant=variant, truncation=trunc,
                        sheetmap=sheets, residual=abs(fz), iterations=iteration)

        step = dz
        damping = 1.0
        while damping > 1.0 / 64.0 and abs(f(z + damping * step, sheets)) > abs(fz):
            damping *= 0.5
        if damping <= 1.0 / 64.0 and len(history) >= 3:
            # stagnation: fall back to a Muller step through recent iterates
            try:
                z_new = _muller_step(history)
            except ZeroDivisionError:
                z_new = z + damping * step
            z = z_new
        else:
            z = z + damping * step

    raise NoConvergenceError(
        f"no convergence after {max_iter} iterations (variant={variant.value})",
        trace=trace)


def converge_truncation(variant: DispersionVariant, config: ModelConfig, *,
                        seed: complex | None = None, tol: float = 1e-10,
                        pole_tol: float = DEFAULT_TOL,
                        max_n: int = 25,
                        guard: float = DEFAULT_GUARD) -> tuple[FloquetTruncation, Pole]:
    """Increase the channel cutoff until the pole stabilizes to |dz| < tol."""
    previous: Pole | None = None
    for n in range(0, max_n + 1):
        trunc = FloquetTruncation.auto(n, config.chi)
        pole = find_pole(variant, seed, config, trunc,
                         tol=pole_tol, guard=guard)
        if previous is not None and abs(pole.z - previous.z) < tol:
            return trunc, pole
        previous = pole
    raise NoTruncationConvergenceError(
        f"pole not converged by N={max_n} (variant={variant.value})")
