"""
Landen (period-halving) transformation between two Weierstrass lattices.

Given the lattice ``L = 2w Z + 2w' Z`` and the half-period ``h`` at which
``P(h) = e1``, the finer lattice ``L + h Z`` has one period halved.  Its
Weierstrass function (invariants ``G2, G3``) is related to the coarse one by::

    P_G(x)     = P(x) + P(x - h) - e1
               = P(x) - (g2 - 12 e1^2) / (4 (P(x) - e1))
    zeta_G(x)  = zeta(x) + zeta(x - h) + e1 x + zeta(h)
    sigma_G(x) = exp(e1 x^2 / 2 - zeta(h) x) sigma(x) sigma(x + h) / sigma(h)

The upper invariants are computed from the halved periods; the polynomial
relations between ``(g2, g3)`` and ``(G2, G3)`` serve only as checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import (EllipticInvariants, eval_sigma, eval_wp, eval_zeta,
                       invariants_from_periods)
from .errors import NotARoot

__all__ = [
    "LandenPair",
    "landen_descend",
    "landen_relations",
    "landen_wp_identity",
    "landen_wp_sum_identity",
    "landen_zeta_sigma_identity",
]

_ROOT_TOL = 1e-12


@dataclass(frozen=True)
class LandenPair:
    """Coarse lattice ``lower``, fine lattice ``upper`` and the halving data."""

    lower: EllipticInvariants
    upper: EllipticInvariants
    e1: complex
    h: complex
    other: complex

    @property
    def E1(self) -> complex:
        """Upper root attached to the unhalved half-period; equals ``-2 e1``."""
        return complex(eval_wp(self.upper, self.other).p)

    @property
    def upper_other_roots(self) -> tuple[complex, complex]:
        roots = list(self.upper.roots)
        roots.pop(int(np.argmin([abs(r - self.E1) for r in roots])))
        return roots[0], roots[1]

    @property
    def lower_other_roots(self) -> tuple[complex, complex]:
        roots = list(self.lower.roots)
        roots.pop(int(np.argmin([abs(r - self.e1) for r in roots])))
        return roots[0], roots[1]


def landen_descend(lower: EllipticInvariants, e1: complex) -> LandenPair:
    """Halve the period attached to the root ``e1`` of ``4t^3 - g2 t - g3``."""
    e1 = complex(e1)
    g2, g3 = lower.g2, lower.g3
    scale = max(1.0, abs(g2), abs(g3))
    if abs(4 * e1**3 - g2 * e1 - g3) > _ROOT_TOL * scale * max(1.0, abs(e1)) ** 3:
        raise NotARoot(f"{e1} is not a root of 4t^3 - ({g2})t - ({g3})")
    w, wp = lower.omega, lower.omega_prime
    candidates = ((w, wp), (w + wp, wp), (wp, w))
    i = int(np.argmin([abs(r - e1) for r in lower.roots]))
    h, other = candidates[i]
    upper = invariants_from_periods(h / 2, other)
    return LandenPair(lower=lower, upper=upper, e1=lower.roots[i], h=h, other=other)


def landen_relations(pair: LandenPair) -> dict:
    """Residuals of the four algebraic relations between the two lattices.

    Each residual is divided by the magnitude of its largest term.
    """
    g2, g3 = pair.lower.g2, pair.lower.g3
    G2, G3 = pair.upper.g2, pair.upper.g3
    e1 = pair.e1
    e2, e3 = pair.lower_other_roots
    E2, E3 = pair.upper_other_roots

    def rel(terms):
        return abs(sum(terms)) / max(1.0, max(abs(t) for t in terms))

    return {
        "E1": rel([pair.E1, 2 * e1]),
        "E2_E3": rel([(E2 - E3) ** 2, -36 * e1**2, 4 * (e2 - e3) ** 2]),
        "bilinear": rel([-32 * g2 * g3, 22 * g3 * G2, 11 * g2 * G3, -G2 * G3]),
        "cubic": rel([196 * g2**3, 49 * g2**2 * G2, -7260 * g3**2, 660 * g3 * G3,
                      -15 * G3**2]),
    }


def _scaled(lhs, rhs):
    return np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))


def landen_wp_identity(pair: LandenPair, x):
    """Scaled residual of ``P_G(x) = P(x) - (g2 - 12 e1^2)/(4 (P(x) - e1))``."""
    up = eval_wp(pair.upper, x).p
    lo = eval_wp(pair.lower, x).p
    rhs = lo - (pair.lower.g2 - 12 * pair.e1**2) / (4 * (lo - pair.e1))
    return _scaled(up, rhs)


def landen_wp_sum_identity(pair: LandenPair, x):
    """Scaled residual of ``P_G(x) = P(x) + P(x - h) - P(h)``."""
    up = eval_wp(pair.upper, x).p
    rhs = eval_wp(pair.lower, x).p + eval_wp(pair.lower, np.asarray(x) - pair.h).p - pair.e1
    return _scaled(up, rhs)


def landen_zeta_sigma_identity(pair: LandenPair, x):
    """Scaled residuals ``(zeta, sigma)`` of the zeta- and sigma-level identities."""
    lo, h, e1 = pair.lower, pair.h, pair.e1
    x = np.asarray(x, dtype=complex)
    zh = eval_zeta(lo, h)
    z_up = eval_zeta(pair.upper, x)
    z_rhs = eval_zeta(lo, x) + eval_zeta(lo, x - h) + e1 * x + zh
    s_up = eval_sigma(pair.upper, x)
    s_rhs = (np.exp(e1 * x**2 / 2 - zh * x) * eval_sigma(lo, x) * eval_sigma(lo, x + h)
             / eval_sigma(lo, h))
    return _scaled(z_up, z_rhs), _scaled(s_up, s_rhs)
