"""Lattice Green's functions of the tight-binding chain.

The closed form zeta0(z) = 1/(sqrt(z-e0-beta)*sqrt(z-e0+beta)) (principal
square roots) has its branch cut exactly on the band [e0-beta, e0+beta],
decays like 1/(z-e0) at infinity, and reproduces the retarded limit
-i/sqrt(beta^2-(E-e0)^2) on the upper rim of the cut. The second Riemann
sheet is the continuation through the cut, which for a square-root branch
is minus the same closed form. A dense-trapezoid quadrature of the defining
momentum integral serves as an independent oracle (upper half-plane only).
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .errors import BranchPointError, NonConvergentQuadratureError, OutsideBandError
from .model import ModelConfig

BRANCH_GUARD = 1e-14


class Sheet(enum.Enum):
    PHYSICAL = "physical"
    SECOND = "second"


def dos(epsilon: float, config: ModelConfig) -> float:
    """Density of states 1/sqrt(beta^2 - (eps-e0)^2) inside the open band."""
    u = epsilon - config.e0
    if abs(u) >= config.beta:
        raise OutsideBandError(f"epsilon={epsilon} outside open band ({config.band})")
    return 1.0 / math.sqrt(config.beta**2 - u**2)


def zeta0(z: complex, sheet: Sheet = Sheet.PHYSICAL, *, config: ModelConfig,
          guard: float = BRANCH_GUARD) -> complex:
    """Channel-0 Green's function at complex energy z on the requested sheet."""
    u = complex(z) - config.e0
    b = config.beta
    if abs(u * u - b * b) < guard:
        raise BranchPointError(f"z={z} within guard {guard} of a branch point")
    value = 1.0 / (np.sqrt(u - b) * np.sqrt(u + b))
    return -value if sheet is Sheet.SECOND else value


def zeta_n(n: int, z: complex, sheet: Sheet = Sheet.PHYSICAL, *,
           config: ModelConfig, guard: float = BRANCH_GUARD) -> complex:
    """Channel-n Green's function: zeta0 evaluated at z - n*omega."""
    return zeta0(z - n * config.omega, sheet, config=config, guard=guard)


def second_sheet_channel(z: complex, n: int, config: ModelConfig) -> bool:
    """Sheet rule for pole searches: continue channel n through the cut iff
    the shifted argument lies inside the static band and Im z < 0."""
    return (abs(z.real - n * config.omega - config.e0) < config.beta
            and z.imag < 0.0)


def sheet_map(z: complex, channels, config: ModelConfig) -> dict[int, Sheet]:
    """Per-channel sheet choices at iterate z for the given channel indices."""
    return {int(n): (Sheet.SECOND if second_sheet_channel(z, int(n), config)
                     else Sheet.PHYSICAL)
            for n in channels}


def zeta0_quadrature(z: complex, config: ModelConfig, *, tol: float = 1e-10,
                     max_points: int = 2**22) -> complex:
    """Trapezoid quadrature of the defining k-integral; oracle for zeta0.

    Valid only in the upper half-plane (the raw integral is the physical-sheet
    function there). Points are doubled until two successive refinements agree
    to tol; for a periodic analytic integrand the trapezoid rule converges
    geometrically, so the last refinement gap is a sound error estimate.
    """
    z = complex(z)
    if not z.imag > 0.0:
        raise ValueError("quadrature oracle requires Im z > 0")

    def estimate(npts: int) -> complex:
        k = -math.pi + (2.0 * math.pi / npts) * np.arange(npts)
        integrand = 1.0 / (z - (config.e0 - config.beta * np.cos(k)))
        return complex(np.mean(integrand))

    npts = 1024
    prev = estimate(npts)
    while npts < max_points:
        npts *= 2
        cur = estimate(npts)
        if abs(cur - prev) < tol:
            return cur
        prev = cur
    raise NonConvergentQuadratureError(
        f"no convergence to {tol} within {max_points} points at z={z}")
