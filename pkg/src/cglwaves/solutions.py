"""
Closed-form elliptic solution of the CGL5 traveling-wave system.

The solution lives on the parameter slice::

    csi^2 = 48 ex,  g_r = 36 ey,  g_i = -3 csi^2 / 16,  e_r = d_r = d_i = 0,

and is given in three interchangeable representations:

* rational in ``P, P'`` (``M`` on the lattice ``g2, g3``; ``psi`` and
  ``dlogA`` on the Landen-halved lattice ``G2, G3``);
* sums of Weierstrass zeta functions over the pole affixes;
* products of Hermite simple elements or sigma quotients.

The common origin ``xi0 = 0`` is the zero of ``M`` at the lattice points.
Derivatives of the rational forms are obtained exactly from the Weierstrass
equation through truncated Taylor jets; nothing is differentiated
numerically except in the explicit finite-difference check of
``eval_A_product``.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import (EllipticInvariants, eval_sigma, eval_wp, eval_zeta,
                       periods_from_invariants)
from .errors import (BranchCut, CsiZeroRestriction, InversionFailure,
                     NearLatticePoint, NearPole)
from .landen import LandenPair, landen_descend
from .model import CglParams, StatePoint

__all__ = [
    "EllipticSliceParams",
    "PoleAffixSet",
    "AmplitudePath",
    "amplitude_anchor",
    "real_line_segment",
    "real_period",
    "pole_spacing",
    "m_residues",
    "lower_invariants",
    "upper_invariants",
    "eval_M_wp",
    "eval_psi_wp",
    "eval_psi_csi0",
    "csi0_origin",
    "eval_dlogA_wp",
    "pole_affixes",
    "affix_relations",
    "eval_M_zeta_sum",
    "eval_simple_pole_sums",
    "eval_dlogA_zeta_sum",
    "hermite_element",
    "eval_A_product",
    "dlogA_finite_difference",
    "eval_M_product",
    "eval_M_sigma_product",
    "zeta_bridge_residual",
    "count_poles",
    "sample_points",
]

SQRT3 = math.sqrt(3.0)
_NEAR_POLE = 1e-7


# ---------------------------------------------------------------- parameters

@dataclass(frozen=True)
class EllipticSliceParams:
    """Point ``(ex, ey, e_i)`` of the elliptic slice and the branch ``j = +-i``.

    ``ex = 0`` is allowed and means ``csi = 0``; only the representations
    that do not divide by ``ex`` are then available.
    """

    ex: float
    ey: float
    e_i: float
    j: complex = 1j
    csi_sign: int = 1

    def __post_init__(self):
        if self.ex < 0:
            raise ValueError("ex must be non-negative (csi^2 = 48 ex)")
        if self.e_i == 0:
            raise ValueError("e_i must be nonzero")
        if abs(complex(self.j) ** 2 + 1) > 1e-14:
            raise ValueError("j must be +i or -i")
        if self.csi_sign not in (1, -1):
            raise ValueError("csi_sign must be +1 or -1")

    @property
    def csi(self) -> float:
        return self.csi_sign * math.sqrt(48.0 * self.ex)

    @property
    def g_r(self) -> float:
        return 36.0 * self.ey

    @property
    def g_i(self) -> float:
        return -3.0 * self.csi**2 / 16.0

    @property
    def b(self) -> complex:
        """The recurring combination ``3 ex + 4 j ey``."""
        return 3 * self.ex + 4 * self.j * self.ey

    @property
    def params(self) -> CglParams:
        return CglParams(e_i=self.e_i, g_r=self.g_r, g_i=self.g_i, csi=self.csi)

    @property
    def N0_squared(self) -> complex:
        return -324 * self.j / (self.e_i * self.b)

    @property
    def lower_g(self) -> tuple[float, float]:
        ex, ey = self.ex, self.ey
        return -24 * (ex**2 + 2 * ey**2), 4 * (7 * ex**2 + 12 * ey**2) * ex

    @property
    def upper_g(self) -> tuple[float, float]:
        ex, ey = self.ex, self.ey
        return 12 * (13 * ex**2 + 16 * ey**2), 8 * (35 * ex**2 + 48 * ey**2) * ex

    def conjugate_branch(self) -> "EllipticSliceParams":
        return EllipticSliceParams(self.ex, self.ey, self.e_i, -self.j, self.csi_sign)

    def _require_csi(self, what: str):
        if self.ex == 0:
            raise CsiZeroRestriction(f"{what} needs csi != 0")


@functools.lru_cache(maxsize=256)
def lower_invariants(s: EllipticSliceParams) -> EllipticInvariants:
    return periods_from_invariants(*s.lower_g)


@functools.lru_cache(maxsize=256)
def landen_pair(s: EllipticSliceParams) -> LandenPair:
    return landen_descend(lower_invariants(s), s.ex)


def upper_invariants(s: EllipticSliceParams) -> EllipticInvariants:
    return landen_pair(s).upper


# ---------------------------------------------------------------- jets

_ORDER = 4  # value plus three derivatives


def _tmul(a, b):
    return [sum(a[k] * b[n - k] for k in range(n + 1)) for n in range(_ORDER)]


def _tdiv(a, b):
    out = []
    for n in range(_ORDER):
        s = a[n] - sum(out[k] * b[n - k] for k in range(n))
        out.append(s / b[0])
    return out


def _tadd(*terms):
    return [sum(t[n] for t in terms) for n in range(_ORDER)]


def _tscale(c, a):
    return [c * x for x in a]


def _tconst(c, like):
    z = np.zeros_like(like)
    return [c + z] + [z] * (_ORDER - 1)


def _tpoly(coeffs, x):
    """Polynomial ``sum coeffs[k] x^k`` of a Taylor jet (Horner)."""
    out = _tconst(coeffs[-1], x[0])
    for c in reversed(coeffs[:-1]):
        out = _tmul(out, x)
        out[0] = out[0] + c
    return out


def _wp_jets(inv: EllipticInvariants, xi):
    """Taylor jets (coefficients of t^n) of P(xi + t) and P'(xi + t)."""
    w = eval_wp(inv, xi)
    p, pp = np.asarray(w.p), np.asarray(w.p_prime)
    p2 = 6 * p**2 - inv.g2 / 2
    p3 = 12 * p * pp
    p4 = 12 * pp**2 + 12 * p * p2
    p5 = 36 * pp * p2 + 12 * p * p3
    P = [p, pp, p2 / 2, p3 / 6]
    Pp = [pp, p2, p3 / 2, p4 / 6]
    return P, Pp, p5


def _jet_values(t):
    return t[0], t[1], 2 * t[2], 6 * t[3]


def _check_pole(den, num):
    if np.any(np.abs(den) <= _NEAR_POLE * np.maximum(1.0, np.abs(num))):
        raise NearPole("evaluation point is at a pole")


def _out(x, like):
    return complex(x) if np.ndim(like) == 0 else x


# ---------------------------------------------------------------- rational forms

def _eval_M_rational(s: EllipticSliceParams, xi, n0):
    inv = lower_invariants(s)
    P, Pp, _ = _wp_jets(inv, xi)
    num_c, d1_c, p2_c = _m_rational_parts(s, n0)
    num = _tpoly(num_c, P)
    den = _tadd(_tpoly(d1_c, P), _tmul(_tpoly(p2_c, P), Pp))
    _check_pole(den[0], num[0])
    return _jet_values(_tdiv(num, den))


@functools.lru_cache(maxsize=256)
def _n0(s: EllipticSliceParams) -> complex:
    """Normalization of the rational form of ``M``.

    ``N0^2`` is fixed; the sign is chosen so that the rational form agrees
    with the zeta-sum form (principal branches), whose residues are the
    leading Laurent coefficients.  Without pole affixes (csi = 0) the
    principal root is used.
    """
    n0 = cmath.sqrt(s.N0_squared)
    if s.ex == 0:
        return n0
    z = sample_points(s, 1, seed=11)[0]
    m_rat = _eval_M_rational(s, z, n0)[0]
    m_sum = eval_M_zeta_sum(s, z)
    return n0 if abs(m_rat - m_sum) <= abs(m_rat + m_sum) else -n0


def _m_rational_parts(s: EllipticSliceParams, n0):
    ex, ey, j, b = s.ex, s.ey, s.j, s.b
    q2 = [4 * ex * (3 * ex**2 + 5 * ey**2), 4 * (3 * ex**2 + 4 * ey**2), 3 * ex]
    lin = [-ex, 1]
    num = np.polymul(np.polymul([8 * n0 * b], lin[::-1]), q2[::-1])[::-1]
    d_quad = [-8 * ex**2 - 12 * ey**2, -2 * ex, 1]
    d1 = np.polymul(np.polymul([24 * b], lin[::-1]), d_quad[::-1])[::-1]
    p2 = [4 * ex**2 - 4 * j * ex * ey + 12 * ey**2, 4 * (ex + j * ey), 1]
    return list(num), list(d1), [3 * s.csi * c for c in p2]


def eval_M_wp(s: EllipticSliceParams, xi) -> StatePoint:
    """``M`` as a rational function of ``P(xi; g2, g3)`` and its derivative.

    ``M = 8 N0 b (P - ex) Q(P) / (24 b (P - ex)(P^2 - 2 ex P - 8 ex^2 - 12 ey^2)
    + 3 csi P2(P) P')`` with ``b = 3 ex + 4 j ey``; returns the jet
    ``(M, M', M'', M''')``.
    """
    m = _eval_M_rational(s, xi, _n0(s))
    return StatePoint(*(_out(v, xi) for v in m))


def _psi_parts(s: EllipticSliceParams):
    ex, ey, j, csi = s.ex, s.ey, s.j, s.csi
    b = s.b
    const = -j * csi * (9 * ex - 4 * j * ey) / (24 * ex)
    bracket = np.polyadd(
        np.polymul([3 * ex + 2 * j * ey], [9 * ex - 4 * j * ey, 2 * (-9 * ex - 44 * j * ey) * ex, 0]),
        [-945 * ex**4 - 1434 * j * ex**3 * ey - 1192 * ey**2 * ex**2
         - 1440 * j * ey**3 * ex - 384 * ey**4])
    P2 = list((-j * csi * b * bracket)[::-1])
    Q2 = list((9 * j * ex * np.array(
        [ex, ex * (22 * ex + 24 * j * ey),
         121 * ex**3 + 48 * ex * ey**2 + 192 * j * ex**2 * ey + 128 * j * ey**3]))[::-1])
    R = np.polymul([12 * ex * 3 * ex, 12 * ex * (15 * ex**2 + 16 * ey**2)],
                   [1, 4 * ex, 4 * ex**2 + 3 * b**2])
    return const, P2, Q2, list(R[::-1])


def eval_psi_wp(s: EllipticSliceParams, xi):
    """``(psi, psi')`` as a rational function of ``P(xi; G2, G3)`` (requires csi != 0)."""
    s._require_csi("the rational form of psi")
    inv = upper_invariants(s)
    P, Pp, _ = _wp_jets(inv, xi)
    const, p2, q2, r = _psi_parts(s)
    num = _tadd(_tpoly(p2, P), _tmul(_tpoly(q2, P), Pp))
    den = _tpoly(r, P)
    _check_pole(den[0], num[0])
    val = _tdiv(num, den)
    return _out(val[0] + const, xi), _out(val[1], xi)


def _csi0_lattice(ey: float, form: str) -> EllipticInvariants:
    if form == "wp":
        return periods_from_invariants(192 * ey**2, 0)
    if form == "sqrt":
        return periods_from_invariants(-768 * ey**2, 0)
    raise ValueError(f"unknown form {form!r}")


def csi0_origin(ey: float, form: str = "wp") -> complex:
    """Origin of the csi = 0 psi forms relative to the origin of ``M``.

    ``form='wp'``: the quarter period ``d`` with ``P(d) = -4 i sqrt3 ey`` and
    ``P'(d) = (ey + i |ey|) sqrt(768 sqrt3 |ey|)``; ``form='sqrt'``: the half
    period where ``P(.; -768 ey^2, 0)`` vanishes.
    """
    if ey == 0:
        raise ValueError("ey = 0 gives a degenerate lattice")
    inv = _csi0_lattice(ey, form)
    if form == "wp":
        pp = (ey + 1j * abs(ey)) * math.sqrt(768 * SQRT3 * abs(ey))
        return invert_wp(inv, -4j * SQRT3 * ey, pp)
    halves = (inv.omega, inv.omega_prime, inv.omega + inv.omega_prime)
    return complex(min(halves, key=lambda h: abs(complex(eval_wp(inv, h).p))))


def eval_psi_csi0(ey: float, xi, form: str = "wp", shifted: bool = True):
    """``psi`` on the csi = 0 slice (``ex = 0``).

    ``form='wp'``: ``sqrt(6 i sqrt3 ey) (1 + 8 i sqrt3 ey / (P(u; 192 ey^2, 0) - 4 i sqrt3 ey))``;
    ``form='sqrt'``: ``(sqrt3/2) sqrt(P(u; -768 ey^2, 0))`` with the principal
    root, so it matches up to sign on each branch-consistent domain.  With
    ``shifted=True``, ``u = xi - csi0_origin(ey, form)`` so that ``xi`` shares
    the origin of ``M``; otherwise ``u = xi``.
    """
    inv = _csi0_lattice(ey, form)
    u = np.asarray(xi, dtype=complex)
    if shifted:
        u = u - csi0_origin(ey, form)
    p = eval_wp(inv, u).p
    if form == "wp":
        a = 4j * SQRT3 * ey
        val = np.sqrt(6j * SQRT3 * ey) * (1 + 2 * a / (p - a))
    else:
        val = SQRT3 / 2 * np.sqrt(np.asarray(p, dtype=complex))
    return _out(val, xi)


def eval_dlogA_wp(s: EllipticSliceParams, xi):
    """``(dlogA, dlogA')`` as a rational function of ``P(xi; G2, G3)``.

    The imaginary unit is the one of the ``j`` branch: ``j = +i`` gives
    ``M'/(2M) + i psi``, ``j = -i`` the conjugate-amplitude branch
    ``M'/(2M) - i psi``.
    """
    inv = upper_invariants(s)
    P, Pp, _ = _wp_jets(inv, xi)
    ex, csi, b = s.ex, s.csi, s.b
    num = _tadd(_tconst(6 * csi * b**2, P[0]),
                _tmul(_tpoly([2 * ex + 3 * b, 1], P), Pp))
    den = _tscale(2, _tpoly([4 * ex**2 + 3 * b**2, 4 * ex, 1], P))
    _check_pole(den[0], num[0])
    val = _tdiv(num, den)
    return _out(csi / 2 - val[0], xi), _out(-val[1], xi)


# ---------------------------------------------------------------- affixes

@dataclass(frozen=True)
class PoleAffixSet:
    """Pole affixes of ``M`` (lattice g) and of ``psi`` (lattice G)."""

    r_aux: complex
    M_poles: tuple            # ((P, P', xi) for k = 1..4)
    psi_real_pole: complex
    psi_real_pole_values: tuple
    psi_complex_poles: tuple  # (xi_{j,0}, xi_{j,1})
    psi_complex_poles_conj: tuple  # (xi_{-j,0}, xi_{-j,1})
    psi_complex_values: tuple = field(default=(), repr=False)

    def to_dict(self) -> dict:
        def c(z):
            return [float(complex(z).real), float(complex(z).imag)]
        return {
            "r_aux": c(self.r_aux),
            "M_poles": [{"k": k + 1, "wp": c(p), "wp_prime": c(pp), "xi": c(x)}
                        for k, (p, pp, x) in enumerate(self.M_poles)],
            "psi_real_pole": c(self.psi_real_pole),
            "psi_complex_poles": [c(x) for x in self.psi_complex_poles],
            "psi_complex_poles_conj": [c(x) for x in self.psi_complex_poles_conj],
        }


def _cell_grid(inv: EllipticInvariants, n: int = 64):
    g = (np.arange(n) + 0.5) / n - 0.5
    return (g[:, None] * 2 * inv.omega + g[None, :] * 2 * inv.omega_prime).ravel()


def invert_wp(inv: EllipticInvariants, p: complex, pp: complex, tol: float = 1e-9) -> complex:
    """Affix ``z`` in the cell with ``P(z) = p`` and ``P'(z) = pp``."""
    scale = max(1.0, abs(p), abs(pp) ** (2 / 3))
    if abs(pp) < 1e-12 * scale ** 1.5:
        halves = (inv.omega, inv.omega_prime, inv.omega + inv.omega_prime)
        z = min(halves, key=lambda h: abs(complex(eval_wp(inv, h).p) - p))
        if abs(complex(eval_wp(inv, z).p) - p) > tol * scale:
            raise InversionFailure(f"P' = 0 but {p} is not a root")
        return complex(z)
    grid = _cell_grid(inv)
    grid = grid[inv.lattice_distance(grid) > 1e-3 * abs(inv.omega)]
    vals = eval_wp(inv, grid)
    z = complex(grid[np.argmin(np.abs(vals.p - p) + np.abs(vals.p_prime - pp))])
    for _ in range(60):
        w = eval_wp(inv, z)
        if w.p_prime == 0:
            break
        step = (w.p - p) / w.p_prime
        z -= step
        if abs(step) < 1e-16 * max(1.0, abs(z)):
            break
    w = eval_wp(inv, z)
    if abs(w.p_prime + pp) < abs(w.p_prime - pp):
        z = -z
        w = eval_wp(inv, z)
    if abs(w.p - p) > tol * scale or abs(w.p_prime - pp) > tol * scale ** 1.5:
        raise InversionFailure(f"could not invert P at ({p}, {pp})")
    r, _, _ = inv.reduce(z)
    return complex(r)


def _M_pole_values(s: EllipticSliceParams, r: complex):
    ex, j, csi = s.ex, s.j, s.csi
    out = []
    for k in (1, 2, 3, 4):
        p = (-3 + 3 * (j**k + SQRT3 * j ** (1 - k)) * r + (-1) ** k * r**2) * ex / 6
        pp = (9 * j**k + 3 * ((-1) ** (1 + k) - j * SQRT3) * r + j ** (2 - k) * r**2) * ex * csi * r / 36
        out.append((p, pp))
    return out


def _psi_complex_values(s: EllipticSliceParams, j: complex):
    ex, ey, csi = s.ex, s.ey, s.csi
    b = 3 * ex + 4 * j * ey
    return [(-2 * ex + (-1) ** k * j * SQRT3 * b, (3 - (-1) ** k * j * SQRT3) * csi * b / 2)
            for k in (0, 1)]


def _psi_real_values(s: EllipticSliceParams):
    ex, ey, j, csi = s.ex, s.ey, s.j, s.csi
    return (-5 * ex - 16 * ey**2 / (3 * ex),
            -2 * j * csi * ey * (9 * ex**2 + 16 * ey**2) / (9 * ex**2))


@functools.lru_cache(maxsize=256)
def pole_affixes(s: EllipticSliceParams) -> PoleAffixSet:
    """Resolve every pole affix by inverting ``P`` at its prescribed ``(P, P')`` pair."""
    s._require_csi("the pole affixes")
    lo, up = lower_invariants(s), upper_invariants(s)
    r = cmath.sqrt(3 * s.j * SQRT3 * s.b / s.ex)
    m_poles = tuple((p, pp, invert_wp(lo, p, pp)) for p, pp in _M_pole_values(s, r))
    real_vals = _psi_real_values(s)
    cvals = _psi_complex_values(s, s.j)
    cvals_conj = _psi_complex_values(s, -s.j)
    return PoleAffixSet(
        r_aux=r,
        M_poles=m_poles,
        psi_real_pole=invert_wp(up, *real_vals),
        psi_real_pole_values=real_vals,
        psi_complex_poles=tuple(invert_wp(up, *v) for v in cvals),
        psi_complex_poles_conj=tuple(invert_wp(up, *v) for v in cvals_conj),
        psi_complex_values=tuple(cvals),
    )


def _lattice_residual(inv: EllipticInvariants, z) -> float:
    return float(inv.lattice_distance(z)) / abs(inv.omega)


def affix_relations(s: EllipticSliceParams) -> dict:
    """Residuals of the relations among the affixes of the psi poles.

    Each entry is a scaled residual; the last two measure the distance of a
    combination to the lattice (fine lattice for psi, coarse for the Landen
    images of the M poles).
    """
    a = pole_affixes(s)
    up = upper_invariants(s)
    ex, ey, j, csi = s.ex, s.ey, s.j, s.csi
    x0, x1 = a.psi_complex_poles
    xr = a.psi_real_pole

    def wp_res(z, p, pp):
        w = eval_wp(up, z)
        sc = max(1.0, abs(p), abs(pp))
        return max(abs(w.p - p), abs(w.p_prime - pp)) / sc

    out = {
        "half_period": wp_res(x0 + x1 - xr, -2 * ex, 0.0),
        "sum": wp_res(x0 + x1, 7 * ex, -6 * j * csi * ey),
        "difference": wp_res(x0 - x1, -5 * ex, -2 * SQRT3 * csi * ey),
    }
    y0, y1 = a.psi_complex_poles_conj
    out["period"] = max(_lattice_residual(up, x0 - y0 - xr), _lattice_residual(up, x1 - y1 - xr),
                        _lattice_residual(up, xr + pole_affixes(s.conjugate_branch()).psi_real_pole))
    # the M poles sit over the psi complex poles of the finer lattice
    m = [z for _, _, z in a.M_poles]
    out["landen_images"] = max(
        min(_lattice_residual(up, m[1] - x0), _lattice_residual(up, m[1] + x0)),
        min(_lattice_residual(up, m[3] - x0), _lattice_residual(up, m[3] + x0)),
        min(_lattice_residual(up, m[0] - x1), _lattice_residual(up, m[0] + x1)),
        min(_lattice_residual(up, m[2] - x1), _lattice_residual(up, m[2] + x1)),
    )
    return out


# ---------------------------------------------------------------- zeta sums

def _m_prefactor(s: EllipticSliceParams) -> complex:
    return 3 ** 0.25 / cmath.sqrt(-s.e_i)


def m_residues(s: EllipticSliceParams) -> list[complex]:
    """Residues of ``M`` at its four poles per cell, ``c j^(k-1)``."""
    c = _m_prefactor(s)
    return [c * s.j**k for k in range(4)]


def eval_M_zeta_sum(s: EllipticSliceParams, xi):
    """``M = c sum_k j^(k-1) (zeta(xi - xi_k) + zeta(xi_k))``, ``c = 3^(1/4)/sqrt(-e_i)``."""
    a = pole_affixes(s)
    inv = lower_invariants(s)
    xi = np.asarray(xi, dtype=complex)
    total = 0
    for res, (_, _, z) in zip(m_residues(s), a.M_poles):
        _guard(inv, xi - z)
        total = total + res * (eval_zeta(inv, xi - z) + eval_zeta(inv, z))
    return _out(total, xi)


def _guard(inv, z):
    try:
        inv.reduce(z)
        if np.any(inv.lattice_distance(z) < _NEAR_POLE * abs(inv.omega)):
            raise NearPole("evaluation point is at a pole")
    except NearLatticePoint as exc:  # pragma: no cover - defensive
        raise NearPole(str(exc)) from exc


def _zsum(inv, xi, z):
    _guard(inv, xi - z)
    return eval_zeta(inv, xi - z) + eval_zeta(inv, z)


def eval_dlogA_zeta_sum(s: EllipticSliceParams, xi):
    """Zeta-sum form of ``d/dxi log(A exp(i omega t - i c s_r xi/2))`` (valid for every csi).

    ``csi/2 + zeta(xi) + l (zeta(xi - x0) + zeta(x0)) + conj(l) (zeta(xi - x1) + zeta(x1))``
    with ``l = (-1 + j sqrt3)/2`` and ``x0, x1`` the complex psi poles of the
    ``j`` branch; ``j = -i`` gives the conjugate amplitude.
    """
    up = upper_invariants(s)
    xi = np.asarray(xi, dtype=complex)
    x0, x1 = _complex_affixes(s)
    lam = (-1 + s.j * SQRT3) / 2
    _guard(up, xi)
    val = (s.csi / 2 + eval_zeta(up, xi) + lam * _zsum(up, xi, x0)
           + np.conj(lam) * _zsum(up, xi, x1))
    return _out(val, xi)


def _complex_affixes(s: EllipticSliceParams):
    """Affixes ``xi_{j,0}, xi_{j,1}``; available also when csi = 0."""
    if s.ex == 0:
        up = upper_invariants(s)
        return tuple(invert_wp(up, *v) for v in _psi_complex_values(s, s.j))
    return pole_affixes(s).psi_complex_poles


def eval_simple_pole_sums(s: EllipticSliceParams, xi):
    """Zeta-sum forms of ``(dlogA, psi, M'/M)`` on the finer lattice (csi != 0)."""
    s._require_csi("the zeta-sum forms of psi and M'/M")
    up = upper_invariants(s)
    a = pole_affixes(s)
    xi = np.asarray(xi, dtype=complex)
    ex, ey, j, csi = s.ex, s.ey, s.j, s.csi
    x0, x1 = a.psi_complex_poles
    xr = a.psi_real_pole
    zr, z0, z1 = _zsum(up, xi, xr), _zsum(up, xi, x0), _zsum(up, xi, x1)
    _guard(up, xi)
    z = eval_zeta(up, xi)
    psi = (-j * (9 * ex - 4 * j * ey) / (24 * ex) * csi + j / 2 * (zr - z)
           + SQRT3 / 2 * (z0 - z1))
    dlogm = s.b / (12 * ex) * csi + zr + z - (z0 + z1)
    return eval_dlogA_zeta_sum(s, xi), _out(psi, xi), _out(dlogm, xi)


# ---------------------------------------------------------------- products

def hermite_element(inv: EllipticInvariants, q: complex, k: complex, xi):
    """``E(xi, q, k) = sigma(xi + q) / (sigma(xi) sigma(q)) exp((k - zeta(q)) xi)``."""
    if inv.lattice_distance(q) < 1e-8 * abs(inv.omega):
        raise NearLatticePoint("q lies on the lattice")
    xi = np.asarray(xi, dtype=complex)
    if np.any(inv.lattice_distance(xi) < 1e-8 * abs(inv.omega)):
        raise NearLatticePoint("xi lies on the lattice")
    val = (eval_sigma(inv, xi + q) / (eval_sigma(inv, xi) * eval_sigma(inv, q))
           * np.exp((k - eval_zeta(inv, q)) * xi))
    return _out(val, xi)


def _log_hermite(inv, a, xi):
    """Principal-branch pieces of ``log E(xi, -a, 0)`` (before unwrapping)."""
    return np.log(hermite_element(inv, -a, 0, xi))


def _m_pole_residue(s: EllipticSliceParams, z: complex) -> complex:
    """Residue of ``M`` at an affix of the finer lattice (matched by lattice class)."""
    lo = lower_invariants(s)
    a = pole_affixes(s)
    for res, (_, _, w) in zip(m_residues(s), a.M_poles):
        if lo.lattice_distance(z - w) < 1e-6 * abs(lo.omega):
            return res
    raise InversionFailure("affix is not a pole of M on the coarse lattice")


def _k1(s: EllipticSliceParams) -> complex:
    """Constant of the Hermite-product form fixed by the residue at ``xi_{j,0}``."""
    up = upper_invariants(s)
    a = pole_affixes(s)
    x0, x1 = a.psi_complex_poles
    xr = a.psi_real_pole
    res = _m_pole_residue(s, x0)
    # E(xi,-q,0) ~ -chi exp(zeta(q) q)/sigma(q)^2 near xi = q
    def e_at_zero(q):
        return -cmath.exp(complex(eval_zeta(up, q)) * q) / complex(eval_sigma(up, q)) ** 2
    rate = s.b / (12 * s.ex) * s.csi
    rest = (cmath.exp(rate * x0) * complex(hermite_element(up, -xr, 0, x0))
            / complex(hermite_element(up, -x1, 0, x0)))
    return res * e_at_zero(x0) / rest


def eval_M_product(s: EllipticSliceParams, xi):
    """``M = K1 exp(b csi xi/(12 ex)) E(xi,-xi_j,0) / (E(xi,-xi_{j,0},0) E(xi,-xi_{j,1},0))``."""
    s._require_csi("the Hermite-product form of M")
    up = upper_invariants(s)
    a = pole_affixes(s)
    x0, x1 = a.psi_complex_poles
    xr = a.psi_real_pole
    xi = np.asarray(xi, dtype=complex)
    _guard(up, xi - x0)
    _guard(up, xi - x1)
    rate = s.b / (12 * s.ex) * s.csi
    val = (_k1(s) * np.exp(rate * xi) * hermite_element(up, -xr, 0, xi)
           / (hermite_element(up, -x0, 0, xi) * hermite_element(up, -x1, 0, xi)))
    return _out(val, xi)


def eval_M_sigma_product(s: EllipticSliceParams, xi):
    """Sigma-quotient form ``-K1 exp(-H1 xi) sigma(xi - xi_j) sigma(xi) sigma(x0) sigma(x1)
    / (sigma(xi - x0) sigma(xi - x1) sigma(xi_j))`` with ``H1 = zeta(x0 + x1 - xi_j)``."""
    up = upper_invariants(s)
    a = pole_affixes(s)
    x0, x1 = a.psi_complex_poles
    xr = a.psi_real_pole
    xi = np.asarray(xi, dtype=complex)
    _guard(up, xi - x0)
    _guard(up, xi - x1)
    H1 = complex(eval_zeta(up, x0 + x1 - xr))
    sg = functools.partial(eval_sigma, up)
    val = (-_k1(s) * np.exp(-H1 * xi) * sg(xi - xr) * sg(xi) / (sg(xi - x0) * sg(xi - x1))
           * complex(sg(x0)) * complex(sg(x1)) / complex(sg(xr)))
    return _out(val, xi)


def zeta_bridge_residual(s: EllipticSliceParams) -> float:
    """Residual of ``zeta(x0)+zeta(x1)-zeta(xj) = zeta(x0+x1-xj) + csi/4 + j csi ey/(3 ex)``."""
    up = upper_invariants(s)
    a = pole_affixes(s)
    x0, x1 = a.psi_complex_poles
    xr = a.psi_real_pole
    z = functools.partial(eval_zeta, up)
    lhs = z(x0) + z(x1) - z(xr)
    rhs = z(x0 + x1 - xr) + s.csi / 4 + s.j * s.csi * s.ey / (3 * s.ex)
    return abs(lhs - rhs) / max(1.0, abs(lhs))


# ---------------------------------------------------------------- amplitude

@dataclass
class AmplitudePath:
    """Amplitude sampled along a path with continuously tracked branches."""

    xi: np.ndarray
    A: np.ndarray
    log_A: np.ndarray
    K0: complex


def real_period(inv: EllipticInvariants) -> float:
    """Smallest positive real period of a lattice symmetric under conjugation."""
    w, wp = 2 * inv.omega, 2 * inv.omega_prime
    tol = 1e-10 * abs(w)
    cands = [abs(v.real) for v in (w, wp, w + wp, w - wp) if abs(v.imag) < tol and abs(v) > tol]
    if not cands:
        raise BranchCut("the lattice has no real period")
    return min(cands)


def amplitude_anchor(s: EllipticSliceParams) -> tuple[complex, complex]:
    """Pole of ``M`` with real positive residue and that residue.

    ``M`` is real and positive on the horizontal line through this pole; the
    next pole on that line lies one real period to the right.
    """
    a = pole_affixes(s)
    for res, (_, _, z) in zip(m_residues(s), a.M_poles):
        if abs(res.imag) < 1e-12 * abs(res) and res.real > 0:
            return z, res
    raise BranchCut("no pole of M has a real positive residue")  # pragma: no cover


def pole_spacing(s: EllipticSliceParams) -> float:
    """Distance from the anchor pole to the next pole of ``M`` on its real line.

    On a rhombic lattice the negative-residue pole sits half a real period
    away, and ``M`` is positive only in between.
    """
    a, _ = amplitude_anchor(s)
    lo = lower_invariants(s)
    T = real_period(lo)
    poles = [z for _, _, z in pole_affixes(s).M_poles]
    for d in (T / 2, T):
        if min(float(lo.lattice_distance(a + d - z)) for z in poles) < 1e-8 * T:
            return d
    return T  # pragma: no cover


def real_line_segment(s: EllipticSliceParams, n: int, margin: float = 0.02) -> np.ndarray:
    """``n`` points of the real line of ``M`` strictly between two consecutive poles,
    where ``M > 0``."""
    a, _ = amplitude_anchor(s)
    return a + pole_spacing(s) * np.linspace(margin, 1 - margin, n)


def _tracked_logs(s: EllipticSliceParams, path):
    """Continuous ``log E(xi, -x_k, 0)`` for the two complex poles along ``path``."""
    up = upper_invariants(s)
    out = []
    for x in _complex_affixes(s):
        e = hermite_element(up, -x, 0, path)
        step = np.abs(np.diff(np.angle(e)))
        if np.any((step > 2.5) & (step < 2 * np.pi - 2.5)):
            raise BranchCut("path passes too close to a branch point; sample it more densely")
        out.append(np.log(np.abs(e)) + 1j * np.unwrap(np.angle(e)))
    return out


def _nearest_lattice(inv: EllipticInvariants, z: complex) -> tuple[int, int]:
    """Indices ``(m, n)`` of the lattice point ``2 m omega + 2 n omega'`` nearest to ``z``."""
    _, m0, n0 = inv.reduce(z)
    w1, w3 = 2 * inv.omega, 2 * inv.omega_prime
    cands = [(int(m0) + dm, int(n0) + dn) for dm in (-1, 0, 1) for dn in (-1, 0, 1)]
    return min(cands, key=lambda mn: abs(z - mn[0] * w1 - mn[1] * w3))


def _hermite_slope(inv: EllipticInvariants, x: complex, a: complex) -> complex:
    """``lim E(xi, -x, 0)/(xi - a)`` as ``xi -> a`` when ``a - x`` is a lattice point.

    Uses ``sigma(u + L) = (-1)^(m+n+mn) exp(eta_L (u + L/2)) sigma(u)``.
    """
    m, n = _nearest_lattice(inv, a - x)
    L = 2 * m * inv.omega + 2 * n * inv.omega_prime
    eta_l = 2 * m * inv.eta1 + 2 * n * inv.eta_prime
    sign = -1 if (m + n + m * n) % 2 else 1
    return (sign * cmath.exp(eta_l * L / 2 + complex(eval_zeta(inv, x)) * a)
            / (complex(eval_sigma(inv, a)) * complex(eval_sigma(inv, -x))))


def _anchor_modulus(s: EllipticSliceParams, delta: float, logs_at_anchor) -> float:
    """``|K0|`` from ``|A|^2 chi -> residue`` as ``chi -> 0+`` along the real line.

    ``logs_at_anchor`` are the tracked logarithms of the two Hermite factors at
    ``a + delta``; they select the branch of the exact limits at ``a``.
    """
    up = upper_invariants(s)
    a, res = amplitude_anchor(s)
    x = _complex_affixes(s)
    lam = (-1 + s.j * SQRT3) / 2
    lams = (lam, np.conj(lam))
    near = int(np.argmin([up.lattice_distance(a - xk) for xk in x]))
    log_c = s.csi / 2 * a
    for k in (0, 1):
        if k == near:
            exact = cmath.log(_hermite_slope(up, x[k], a))
            tracked = logs_at_anchor[k] - math.log(delta)
        else:
            exact = cmath.log(complex(hermite_element(up, -x[k], 0, a)))
            tracked = logs_at_anchor[k]
        exact += 2j * math.pi * round(((tracked - exact) / (2j * math.pi)).real)
        log_c += lams[k] * exact
    return math.sqrt(abs(res)) * math.exp(-log_c.real)


def eval_A_product(s: EllipticSliceParams, path, t: float = 0.0, omega: float = 0.0,
                   c_sr: float = 0.0, K0: complex | None = None, n_link: int = 400) -> AmplitudePath:
    """``A = K0 exp(-i omega t + i c s_r xi/2 + csi xi/2) E(xi,-x0,0)^l E(xi,-x1,0)^conj(l)``.

    ``l = (-1 + j sqrt3)/2`` and ``x0, x1`` are the complex psi poles of the
    ``j`` branch (``j = i`` for ``A``, ``j = -i`` for its conjugate).  Complex
    powers are continued along a straight link from an anchor just right of
    the positive-residue pole of ``M`` on its real line, then along ``path``.
    Unless given, ``K0`` is real positive with ``|A|^2 (xi - a) -> res`` as
    ``xi -> a+`` along the real line.
    """
    path = np.asarray(path, dtype=complex)
    a, _ = amplitude_anchor(s)
    T = real_period(lower_invariants(s))
    delta = 1e-3 * T
    link = a + delta + (path[0] - a - delta) * np.linspace(0, 1, n_link)
    full = np.concatenate([link, path])
    logs = _tracked_logs(s, full)
    lam = (-1 + s.j * SQRT3) / 2
    log_a = s.csi / 2 * full + lam * logs[0] + np.conj(lam) * logs[1]
    if K0 is None:
        K0 = _anchor_modulus(s, delta, (logs[0][0], logs[1][0]))
    log_a = log_a[n_link:] + np.log(complex(K0)) - 1j * omega * t + 1j * c_sr * path / 2
    return AmplitudePath(xi=path, A=np.exp(log_a), log_A=log_a, K0=complex(K0))


_FD8 = (1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280)


def dlogA_finite_difference(s: EllipticSliceParams, xi, h: float | None = None):
    """Eighth-order central difference of ``log(A exp(i omega t - i c s_r xi/2))``.

    The product form is differenced directly: each Hermite factor enters
    through ``log(E(xi + m h)/E(xi))``, which stays on one branch for small
    ``h``, so the result is independent of the global winding.
    """
    up = upper_invariants(s)
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    if h is None:
        h = 1e-3 * abs(up.omega)
    lam = (-1 + s.j * SQRT3) / 2
    out = np.full(xi.shape, s.csi / 2, dtype=complex)
    for x, weight in zip(_complex_affixes(s), (lam, np.conj(lam))):
        centre = hermite_element(up, -x, 0, xi)
        acc = 0
        for m, c in zip(range(-4, 5), _FD8):
            if c:
                acc = acc + c * np.log(hermite_element(up, -x, 0, xi + m * h) / centre)
        out = out + weight * acc / h
    return out


# ---------------------------------------------------------------- utilities

def count_poles(s: EllipticSliceParams, grid: int = 8, n: int = 400) -> tuple[int, int]:
    """``(poles, zeros)`` of ``M`` in one cell by the argument principle.

    Over a whole cell the winding of an elliptic function vanishes, so the
    cell is split into ``grid x grid`` shifted sub-rectangles; the winding of
    ``1/M`` around each one is (poles - zeros) inside it.
    """
    inv = lower_invariants(s)
    w1, w3 = 2 * inv.omega / grid, 2 * inv.omega_prime / grid
    origin = -inv.omega - inv.omega_prime + 0.0123 * w1 + 0.0234 * w3
    t = (np.arange(n) + 0.5) / n
    poles = zeros = 0
    for a in range(grid):
        for c in range(grid):
            corner = origin + a * w1 + c * w3
            total = 0
            for start, d in ((corner, w1), (corner + w1, w3), (corner + w1 + w3, -w1),
                             (corner + w3, -w3)):
                jet = eval_M_wp(s, start + t * d)
                total += np.sum(-jet.M1 / jet.M) * d / n
            wind = int(round((total / (2j * math.pi)).real))
            poles += max(wind, 0)
            zeros += max(-wind, 0)
    return poles, zeros


def sample_points(s: EllipticSliceParams, n: int, seed: int = 0, lattice: str = "lower",
                  min_distance: float = 0.05) -> np.ndarray:
    """``n`` deterministic points in the cell away from every pole and zero."""
    inv = lower_invariants(s) if lattice == "lower" else upper_invariants(s)
    lo = lower_invariants(s)
    avoid = [0.0]
    if s.ex > 0:
        a = pole_affixes(s)
        avoid += [z for _, _, z in a.M_poles]
        avoid += [a.psi_real_pole, *a.psi_complex_poles, *a.psi_complex_poles_conj]
    rng = np.random.default_rng(seed)
    out = []
    scale = min_distance * abs(lo.omega)
    while len(out) < n:
        u, v = rng.uniform(-0.5, 0.5, 2)
        z = u * 2 * inv.omega + v * 2 * inv.omega_prime
        if all(float(lo.lattice_distance(z - q)) > scale and
               float(upper_invariants(s).lattice_distance(z - q)) > scale for q in avoid):
            out.append(z)
    return np.array(out)
