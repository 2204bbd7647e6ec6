"""
Traveling-wave reduction of CGL3/CGL5 and its residual operators.

The reduced real system for the squared modulus ``M`` and the reduced phase
gradient ``psi`` reads::

    M''/(2M) - M'^2/(4M^2) - csi M'/(2M) - psi^2 + e_r M^2 + d_r M + g_i = 0
    psi' + psi M'/M - csi psi + e_i M^2 + d_i M - g_r = 0

Residual operators work on explicit jets (derivatives supplied by the
caller); nothing here differentiates numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import ZeroDispersion, ZeroModulus

__all__ = [
    "PhysicalParams",
    "CglParams",
    "StatePoint",
    "reduce_params",
    "residual_system",
    "residual_order3",
    "psi_from_jet",
    "dlog_amplitude",
    "flip_q_invariance",
    "flip_csi_invariance",
]

_ZERO_MODULUS = 1e-300


@dataclass(frozen=True)
class PhysicalParams:
    """Coefficients of ``i A_t + p A_xx + q|A|^2 A + r|A|^4 A - i gamma A = 0``
    together with the wave speed ``c`` and frequency ``omega``."""

    p: complex = 1.0
    q: complex = 0.0
    r: complex = 0.0
    gamma: float = 0.0
    c: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class CglParams:
    e_r: float = 0.0
    e_i: float = 0.0
    d_r: float = 0.0
    d_i: float = 0.0
    g_r: float = 0.0
    g_i: float = 0.0
    csi: float = 0.0
    s_r: float | None = None
    s_i: float | None = None

    @property
    def is_cgl5(self) -> bool:
        return self.e_i != 0 or self.e_r != 0

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class StatePoint:
    """Jet of ``(M, psi)`` at one point: M up to third order, psi up to first."""

    M: complex
    M1: complex = 0.0
    M2: complex = 0.0
    M3: complex = 0.0
    psi: complex = 0.0
    psi1: complex = 0.0


def reduce_params(phys: PhysicalParams) -> CglParams:
    """Map the PDE coefficients to the seven reduced real parameters."""
    p = complex(phys.p)
    if p == 0:
        raise ZeroDispersion("p = 0: the equation has no dispersion term")
    e = complex(phys.r) / p
    d = complex(phys.q) / p
    s = 1 / p
    s_r, s_i = s.real, -s.imag
    c = phys.c
    g = (phys.gamma + 1j * phys.omega) / p + (c**2 * s_r / 4) * (2 * s_i + 1j * s_r)
    return CglParams(
        e_r=e.real, e_i=e.imag, d_r=d.real, d_i=d.imag,
        g_r=g.real, g_i=g.imag, csi=c * s_i, s_r=s_r, s_i=s_i,
    )


def _check_modulus(jet: StatePoint):
    if np.any(np.abs(jet.M) < _ZERO_MODULUS):
        raise ZeroModulus("M vanishes at this jet")


def residual_system(params: CglParams, jet: StatePoint):
    """Left-hand sides ``(R1, R2)`` of the reduced two-component system."""
    _check_modulus(jet)
    P = params
    M, M1, M2 = jet.M, jet.M1, jet.M2
    psi, psi1 = jet.psi, jet.psi1
    r1 = (M2 / (2 * M) - M1**2 / (4 * M**2) - P.csi * M1 / (2 * M)
          - psi**2 + P.e_r * M**2 + P.d_r * M + P.g_i)
    r2 = psi1 + psi * M1 / M - P.csi * psi + P.e_i * M**2 + P.d_i * M - P.g_r
    return r1, r2


def residual_system_scale(params: CglParams, jet: StatePoint) -> float:
    """Magnitude of the largest constituent term of each residual line."""
    P = params
    M, M1, M2 = jet.M, jet.M1, jet.M2
    t1 = (M2 / (2 * M), M1**2 / (4 * M**2), P.csi * M1 / (2 * M), jet.psi**2,
          P.e_r * M**2, P.d_r * M, P.g_i)
    t2 = (jet.psi1, jet.psi * M1 / M, P.csi * jet.psi, P.e_i * M**2, P.d_i * M, P.g_r)
    return _largest(t1), _largest(t2)


def _largest(terms):
    """Elementwise ``max(1, |t|)`` over a tuple of scalars or arrays."""
    out = np.asarray(1.0)
    for t in terms:
        out = np.maximum(out, np.abs(t))
    return float(out) if out.ndim == 0 else out


def _g_and_derivative(P: CglParams, jet: StatePoint):
    M, M1, M2, M3 = jet.M, jet.M1, jet.M2, jet.M3
    G = (0.5 * M * M2 - 0.25 * M1**2 - 0.5 * P.csi * M * M1
         + P.e_r * M**4 + P.d_r * M**3 + P.g_i * M**2)
    G1 = (0.5 * M * M3 - 0.5 * P.csi * (M1**2 + M * M2)
          + 4 * P.e_r * M**3 * M1 + 3 * P.d_r * M**2 * M1 + 2 * P.g_i * M * M1)
    return G, G1


def residual_order3(params: CglParams, jet: StatePoint):
    """Residual of the third-order, second-degree ODE obtained by eliminating psi."""
    _check_modulus(jet)
    P = params
    M = jet.M
    G, G1 = _g_and_derivative(P, jet)
    h = P.e_i * M**2 + P.d_i * M - P.g_r
    return (G1 - 2 * P.csi * G) ** 2 - 4 * G * M**2 * h**2


def residual_order3_scale(params: CglParams, jet: StatePoint) -> float:
    P = params
    M = jet.M
    G, G1 = _g_and_derivative(P, jet)
    h = P.e_i * M**2 + P.d_i * M - P.g_r
    return _largest((G1**2, (2 * P.csi * G) ** 2, 4 * G * M**2 * h**2))


def psi_from_jet(params: CglParams, jet: StatePoint):
    """``(psi, psi^2)`` reconstructed from an M-jet alone.

    ``psi = (2 csi G - G') / (2 M^2 (e_i M^2 + d_i M - g_r))`` and ``psi^2 = G/M^2``.
    """
    _check_modulus(jet)
    P = params
    M = jet.M
    G, G1 = _g_and_derivative(P, jet)
    h = P.e_i * M**2 + P.d_i * M - P.g_r
    return (2 * P.csi * G - G1) / (2 * M**2 * h), G / M**2


def dlog_amplitude(jet: StatePoint, conjugate: bool = False):
    """``M'/(2M) + i psi``; with ``conjugate=True`` the other branch ``M'/(2M) - i psi``."""
    _check_modulus(jet)
    s = -1j if conjugate else 1j
    return jet.M1 / (2 * jet.M) + s * jet.psi


def flip_q_invariance(jet: StatePoint) -> StatePoint:
    """``M -> -M`` (a symmetry when q = 0)."""
    return StatePoint(-jet.M, -jet.M1, -jet.M2, -jet.M3, jet.psi, jet.psi1)


def flip_csi_invariance(jet: StatePoint) -> StatePoint:
    """``(psi, xi) -> (-psi, -xi)`` (a symmetry when csi = 0)."""
    return StatePoint(jet.M, -jet.M1, jet.M2, -jet.M3, -jet.psi, jet.psi1)
