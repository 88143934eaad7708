"""Bessel drive weights and coupling-independent self-energy kernels.

The driven level enters through the Bessel weights J_{n-nu}(chi); the
kernels combine them with the channel Green's functions zeta^(n)(z):

    xi_AA[n,n'] = sum_nu J_{n-nu} J_{n'-nu} zeta^(nu)(z)
    xi_BB[n,n'] = zeta^(n)(z) delta_{nn'}
    xi_AB[n,n'] = J_{n-n'} zeta^(n')(z)
    xi_BA[n,n'] = J_{n'-n} zeta^(n)(z)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .greens import Sheet, sheet_map, zeta_n
from .model import ModelConfig

BESSEL_CLOSURE_TAIL = 1e-12


def bessel_j(n: int, chi: float) -> float:
    """Bessel function of the first kind J_n(chi)."""
    return float(jv(n, chi))


@dataclass(frozen=True)
class FloquetTruncation:
    """Symmetric channel cutoffs: ladder channels n in [-N, N], internal
    Green's-function sums nu in [-Nnu, Nnu]."""
    N: int
    Nnu: int

    def __post_init__(self):
        if self.N < 0 or self.Nnu < self.N:
            raise ValueError(f"need 0 <= N <= Nnu, got N={self.N}, Nnu={self.Nnu}")

    @classmethod
    def auto(cls, N: int, chi: float, tail: float = BESSEL_CLOSURE_TAIL) -> "FloquetTruncation":
        """Pick the smallest Nnu >= N with Bessel closure sum_|nu|<=Nnu J_nu^2
        within `tail` of 1."""
        nnu = N
        while 1.0 - bessel_closure(nnu, chi) >= tail:
            nnu += 1
            if nnu > 200:
                raise ValueError(f"Bessel closure not reached by Nnu=200 at chi={chi}")
        return cls(N=N, Nnu=nnu)

    def channels(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def nu_channels(self) -> np.ndarray:
        return np.arange(-self.Nnu, self.Nnu + 1)


def bessel_closure(nnu: int, chi: float) -> float:
    """sum_{|nu| <= nnu} J_nu^2(chi); equals 1 in the untruncated limit."""
    nu = np.arange(-nnu, nnu + 1)
    return float(np.sum(jv(nu, chi) ** 2))


def _zeta_values(z: complex, config: ModelConfig, channels: np.ndarray,
                 sheets: dict[int, Sheet] | None, zeta_fn=None) -> np.ndarray:
    if zeta_fn is None:
        zeta_fn = lambda n, zz, sh: zeta_n(n, zz, sh, config=config)
    if sheets is None:
        sheets = sheet_map(z, channels, config)
    return np.array([zeta_fn(int(n), z, sheets.get(int(n), Sheet.PHYSICAL))
                     for n in channels])


def xi_AA(n: int, n_prime: int, z: complex, config: ModelConfig,
          trunc: FloquetTruncation, sheets: dict[int, Sheet] | None = None,
          zeta_fn=None) -> complex:
    """Driven-ladder kernel entry sum_nu J_{n-nu} J_{n'-nu} zeta^(nu)(z)."""
    nus = trunc.nu_channels()
    zetas = _zeta_values(z, config, nus, sheets, zeta_fn)
    chi = config.chi
    return complex(np.sum(jv(n - nus, chi) * jv(n_prime - nus, chi) * zetas))


def xi_AA_diag(n: int, z: complex, config: ModelConfig,
               trunc: FloquetTruncation, sheets: dict[int, Sheet] | None = None,
               zeta_fn=None) -> complex:
    """Channel-diagonal kernel sum_nu J_{n-nu}^2 zeta^(nu)(z); equals xi_AA(n, n)."""
    return xi_AA(n, n, z, config, trunc, sheets, zeta_fn)


def xi_AA_matrix(z: complex, config: ModelConfig, trunc: FloquetTruncation,
                 sheets: dict[int, Sheet] | None = None, zeta_fn=None) -> np.ndarray:
    """Full (2N+1)^2 driven-ladder kernel, assembled as W diag(zeta) W^T with
    the Bessel weight matrix W[n, nu] = J_{n-nu}(chi)."""
    ns = trunc.channels()
    nus = trunc.nu_channels()
    zetas = _zeta_values(z, config, nus, sheets, zeta_fn)
    W = jv(ns[:, None] - nus[None, :], config.chi)
    return (W * zetas[None, :]) @ W.T


class KernelPair(enum.Enum):
    AA = "AA"
    BB = "BB"
    AB = "AB"
    BA = "BA"


@dataclass(frozen=True)
class KernelBlock:
    pair: KernelPair
    matrix: np.ndarray
    z: complex
    sheetmap: dict[int, Sheet]


def kernel_block(pair: KernelPair, z: complex, config: ModelConfig,
                 trunc: FloquetTruncation,
                 sheets: dict[int, Sheet] | None = None) -> KernelBlock:
    """Assemble the requested coupling-independent kernel block."""
    ns = trunc.channels()
    if sheets is None:
        sheets = sheet_map(z, trunc.nu_channels(), config)
    if pair is KernelPair.AA:
        matrix = xi_AA_matrix(z, config, trunc, sheets)
        return KernelBlock(pair, matrix, complex(z), sheets)

    zetas = _zeta_values(z, config, ns, sheets)
    if pair is KernelPair.BB:
        matrix = np.diag(zetas)
    elif pair is KernelPair.AB:
        matrix = jv(ns[:, None] - ns[None, :], config.chi) * zetas[None, :]
    else:  # BA
        matrix = jv(ns[None, :] - ns[:, None], config.chi) * zetas[:, None]
    return KernelBlock(pair, matrix, complex(z), sheets)
