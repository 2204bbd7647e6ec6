"""
Formal Laurent expansions of ``(M, psi)`` at movable singularities.

The expansions are built on the polynomial form of the reduced system in
``M`` and ``P = psi M``::

    E1 = 2 M M'' - M'^2 - 2 csi M M' - 4 P^2 + 4 e_r M^4 + 4 d_r M^3 + 4 g_i M^2
    E2 = P' - csi P + e_i M^3 + d_i M^2 - g_r M

With ``M = chi^p sum m_k chi^k`` and ``P = chi^(p-1) sum P_k chi^k`` the
pair ``(m_n, P_n)`` enters both equations linearly at relative order ``n``,
so each order is a 2x2 linear solve.  Its determinant vanishes exactly at
the Fuchs indices.

Three branches are handled:

* CGL5 poles: ``p = -1``, four series (two alpha roots, two signs of m0);
* CGL3 poles: ``p = -2``, two series;
* zeros of M (``p = 1``), with free constants ``arb0`` and ``arb1``.

All arithmetic is done in mpmath at the working precision of the caller
(default 50 digits).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import mpmath
from mpmath import mp, mpc, mpf

from .errors import (DegenerateLeading, InvalidFreeConstant, InsufficientTerms,
                     ResonantIndex)
from .model import CglParams

__all__ = [
    "LeadingBehavior",
    "LaurentFamily",
    "leading_orders",
    "expand_pole_family",
    "expand_zero_family",
    "series_substitute_residual",
    "fuchs_determinant",
    "default_terms",
    "series_mul",
    "series_div",
    "series_deriv",
    "to_records",
]

DEFAULT_DPS = 50


def default_terms(m: int = 4) -> int:
    """Slightly more than ``(m+1)^2`` terms."""
    return -(-((m + 1) ** 2 * 5) // 4)


@dataclass(frozen=True)
class LeadingBehavior:
    equation: str
    alpha: mpf
    A0_power: mpc
    m0: mpc
    leading_exponent: int
    fuchs_indices: tuple


@dataclass
class LaurentFamily:
    """One movable-singularity branch of ``(M, psi)``.

    ``coefficients_M[k]`` multiplies ``chi^(valuation_M + k)``;
    ``coefficients_psi[k]`` multiplies ``chi^(k - 1)``.
    """

    kind: str
    equation: str
    branch: dict
    valuation_M: int
    coefficients_M: list
    coefficients_P: list
    coefficients_psi: list
    arbitrary_constants: tuple = ()
    order: int = 0
    lead: LeadingBehavior | None = field(default=None, repr=False)

    @property
    def m0(self):
        return self.coefficients_M[0]

    def inverse_M(self) -> tuple[int, list]:
        """Series of ``1/M`` as ``(valuation, coefficients)``."""
        one = [mpc(1)] + [mpc(0)] * (len(self.coefficients_M) - 1)
        return -self.valuation_M, series_div(one, self.coefficients_M)


# ---- series helpers (coefficient lists, valuation carried by the caller) ----

def _conv_at(a, b, k):
    if k < 0:
        return mpc(0)
    lo = max(0, k - len(b) + 1)
    hi = min(k, len(a) - 1)
    return mpmath.fsum(a[i] * b[k - i] for i in range(lo, hi + 1))


def series_mul(a: Sequence, b: Sequence, n: int | None = None) -> list:
    n = min(len(a), len(b)) if n is None else n
    return [_conv_at(a, b, k) for k in range(n)]


def series_div(a: Sequence, b: Sequence) -> list:
    """Coefficients of ``a/b`` when both start at the same offset (``b[0] != 0``)."""
    n = min(len(a), len(b))
    out = []
    for k in range(n):
        s = a[k] - mpmath.fsum(out[i] * b[k - i] for i in range(k))
        out.append(s / b[0])
    return out


def series_deriv(a: Sequence, valuation: int) -> list:
    """Derivative; result has valuation ``valuation - 1``."""
    return [(valuation + k) * c for k, c in enumerate(a)]


def to_records(coeffs: Sequence, valuation: int) -> list[dict]:
    """JSON-ready ``{power, re, im}`` records at full working precision."""
    return [{"power": valuation + k, "re": mpmath.nstr(mpc(c).real, mp.dps, min_fixed=-mp.inf, max_fixed=mp.inf),
             "im": mpmath.nstr(mpc(c).imag, mp.dps, min_fixed=-mp.inf, max_fixed=mp.inf)}
            for k, c in enumerate(coeffs)]


# ---- the order-by-order solver ----

class _Recursion:
    """Incremental evaluation of E1, E2 at relative order n."""

    def __init__(self, params: CglParams, p: int):
        P = params
        self.p = p
        self.csi = mpf(P.csi)
        self.c1 = {"e_r": 4 * mpf(P.e_r), "d_r": 4 * mpf(P.d_r), "g_i": 4 * mpf(P.g_i)}
        self.c2 = {"e_i": mpf(P.e_i), "d_i": mpf(P.d_i), "g_r": -mpf(P.g_r)}
        # offsets relative to the leading exponents 2p-2 (E1) and p-2 (E2)
        self.o1 = {"e_r": 2 * p + 2, "d_r": p + 2, "g_i": 2}
        self.o2 = {"e_i": 2 * p + 2, "d_i": p + 2, "g_r": 2}
        for name, off in list(self.o1.items()):
            if off < 0 and self.c1[name] != 0:
                raise DegenerateLeading(f"{name} dominates the assumed balance")
        for name, off in list(self.o2.items()):
            if off < 0 and self.c2[name] != 0:
                raise DegenerateLeading(f"{name} dominates the assumed balance")
        self.m: list = []
        self.P: list = []
        self.M2: list = []
        self.M3: list = []
        self.M4: list = []

    def _set(self, n, mn, Pn):
        del self.m[n:], self.P[n:], self.M2[n:], self.M3[n:], self.M4[n:]
        self.m.append(mpc(mn))
        self.P.append(mpc(Pn))
        self.M2.append(_conv_at(self.m, self.m, n))
        self.M3.append(_conv_at(self.M2, self.m, n))
        self.M4.append(_conv_at(self.M2, self.M2, n))

    def equations(self, n):
        p = self.p
        m, P = self.m, self.P
        dm = [(p + k) * c for k, c in enumerate(m)]
        ddm = [(p + k) * (p + k - 1) * c for k, c in enumerate(m)]
        dP = (p - 1 + n) * P[n]
        powers = {"e_r": self.M4, "d_r": self.M3, "g_i": self.M2}
        e1 = (2 * _conv_at(m, ddm, n) - _conv_at(dm, dm, n)
              - 2 * self.csi * _conv_at(m, dm, n - 1) - 4 * _conv_at(P, P, n))
        for name, coef in self.c1.items():
            k = n - self.o1[name]
            if coef and k >= 0:
                e1 += coef * powers[name][k]
        powers2 = {"e_i": self.M3, "d_i": self.M2, "g_r": self.m}
        e2 = dP - (self.csi * P[n - 1] if n >= 1 else 0)
        for name, coef in self.c2.items():
            k = n - self.o2[name]
            if coef and k >= 0:
                e2 += coef * powers2[name][k]
        return mpc(e1), mpc(e2)

    def jacobian(self, n):
        """Order-``n`` equations are affine in ``(m_n, P_n)``; the probe step
        scales with the residual so fast-growing series keep full precision."""
        self._set(n, 0, 0)
        r = self.equations(n)
        t = max(mpf(1), abs(r[0]), abs(r[1]))
        self._set(n, t, 0)
        a = self.equations(n)
        self._set(n, 0, t)
        b = self.equations(n)
        J = (((a[0] - r[0]) / t, (b[0] - r[0]) / t), ((a[1] - r[1]) / t, (b[1] - r[1]) / t))
        return J, r

    def solve_order(self, n):
        J, r = self.jacobian(n)
        det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
        size = abs(J[0][0] * J[1][1]) + abs(J[0][1] * J[1][0])
        if abs(det) <= mpf(10) ** (-(mp.dps // 2)) * max(size, mpf(1)):
            raise ResonantIndex(n)
        mn = (-r[0] * J[1][1] + r[1] * J[0][1]) / det
        Pn = (-r[1] * J[0][0] + r[0] * J[1][0]) / det
        self._set(n, mn, Pn)


def _alpha_roots(params: CglParams, equation: str):
    if equation == "cgl5":
        a, b, c = 4 * mpf(params.e_i), -8 * mpf(params.e_r), -3 * mpf(params.e_i)
    else:
        a, b, c = mpf(params.d_i), -3 * mpf(params.d_r), -2 * mpf(params.d_i)
    if a == 0:
        raise DegenerateLeading(f"{equation}: vanishing imaginary nonlinearity")
    disc = b * b - 4 * a * c
    sq = mpmath.sqrt(disc)
    roots = [(-b + sq) / (2 * a), (-b - sq) / (2 * a)]
    if abs(roots[0] - roots[1]) == 0 and roots[0] == 0:
        raise DegenerateLeading("alpha quadratic has a double root at 0")
    return roots


def leading_orders(params: CglParams, equation: str = "cgl5") -> list[LeadingBehavior]:
    """Leading behaviours of the pole families: 4 for CGL5, 2 for CGL3."""
    equation = equation.lower()
    out = []
    for alpha in _alpha_roots(params, equation):
        if equation == "cgl5":
            a0pow = 2 * alpha / mpf(params.e_i)  # A0^4 = m0^2
            rad = mpmath.sqrt(1 - 32 * alpha**2)
            idx = (-1, 0, (5 + rad) / 2, (5 - rad) / 2)
            for s in (1, -1):
                m0 = s * mpmath.sqrt(mpc(a0pow))
                out.append(LeadingBehavior("cgl5", alpha, mpc(a0pow), mpc(m0), -1, idx))
        elif equation == "cgl3":
            a0pow = 3 * alpha / mpf(params.d_i)  # A0^2 = m0
            rad = mpmath.sqrt(1 - 24 * alpha**2)
            idx = (-1, 0, (7 + rad) / 2, (7 - rad) / 2)
            out.append(LeadingBehavior("cgl3", alpha, mpc(a0pow), mpc(a0pow), -2, idx))
        else:
            raise ValueError(f"unknown equation {equation!r}")
    return out


def _finish(rec: _Recursion, kind, equation, branch, n_terms, consts=(), lead=None):
    psi = series_div(rec.P, rec.m)
    return LaurentFamily(
        kind=kind, equation=equation, branch=branch, valuation_M=rec.p,
        coefficients_M=list(rec.m), coefficients_P=list(rec.P),
        coefficients_psi=psi, arbitrary_constants=consts, order=n_terms, lead=lead,
    )


def expand_pole_family(params: CglParams, lead: LeadingBehavior, n_terms: int) -> LaurentFamily:
    """Pole-family series of ``(M, psi)`` through ``n_terms`` coefficients."""
    if n_terms < 2:
        raise InsufficientTerms("need at least two terms")
    p = lead.leading_exponent
    rec = _Recursion(params, p)
    rec._set(0, lead.m0, 0)
    _, e2 = rec.equations(0)
    rec._set(0, lead.m0, -e2 / (p - 1))
    e1, _ = rec.equations(0)
    if abs(e1) > mpf(10) ** (-(mp.dps - 10)) * max(1, abs(lead.m0) ** 2):
        raise DegenerateLeading("m0 does not balance the leading order")
    for n in range(1, n_terms):
        rec.solve_order(n)
    branch = {"alpha": lead.alpha, "m0": lead.m0}
    return _finish(rec, "pole", lead.equation, branch, n_terms, lead=lead)


def expand_zero_family(params: CglParams, j: complex, arb0: complex, arb1: complex,
                       n_terms: int) -> LaurentFamily:
    """Series at a simple zero of M (simple pole of psi with residue ``j/2``).

    ``1/M = (1/arb0) chi^-1 [1 + arb1 chi + ...]``.
    """
    j = mpc(j)
    if abs(j * j + 1) > mpf(10) ** (-(mp.dps - 5)):
        raise InvalidFreeConstant("j must be +i or -i")
    arb0, arb1 = mpc(arb0), mpc(arb1)
    if arb0 == 0:
        raise InvalidFreeConstant("arb0 must be nonzero")
    if params.csi == 0 and arb1 != 0:
        raise InvalidFreeConstant("arb1 must vanish when csi = 0")
    if n_terms < 2:
        raise InsufficientTerms("need at least two terms")
    rec = _Recursion(params, 1)
    rec._set(0, arb0, j * arb0 / 2)
    rec._set(1, -arb0 * arb1, 0)
    _, e2 = rec.equations(1)
    rec._set(1, -arb0 * arb1, -e2)
    for n in range(2, n_terms):
        rec.solve_order(n)
    branch = {"j": j}
    return _finish(rec, "zero", "cgl5" if params.is_cgl5 else "cgl3", branch, n_terms,
                   consts=(arb0, arb1))


def fuchs_determinant(params: CglParams, lead: LeadingBehavior, n) -> mpc:
    """Determinant of the order-``n`` linear system, a polynomial in ``n``.

    Only the leading coefficients ``m0, P0`` enter, so ``n`` may be any
    complex number.  Its roots are the Fuchs indices other than 0; the index 0
    belongs to the phase of the amplitude, which the ``(M, psi)`` system
    does not see.
    """
    p = lead.leading_exponent
    m0 = lead.m0
    P0 = _lead_P0(params, lead)
    n = mpmath.mpmathify(n)
    J11 = 2 * m0 * ((p + n) * (p + n - 1) + p * (p - 1)) - 2 * p * (p + n) * m0
    J12 = -8 * P0
    J21 = 0
    J22 = p - 1 + n
    if p == -1:
        J11 += 16 * mpf(params.e_r) * m0**3
        J21 = 3 * mpf(params.e_i) * m0**2
    elif p == -2:
        J11 += 12 * mpf(params.d_r) * m0**2
        J21 = 2 * mpf(params.d_i) * m0
    return J11 * J22 - J12 * J21


def _lead_P0(params, lead):
    p = lead.leading_exponent
    m0 = lead.m0
    if p == -1:
        return -mpf(params.e_i) * m0**3 / (p - 1)
    return -mpf(params.d_i) * m0**2 / (p - 1)


def _scaled_sum(terms) -> mpf:
    """``|sum|`` relative to the largest term (at least 1)."""
    return abs(mpmath.fsum(terms)) / max(1, max(abs(t) for t in terms))


def series_substitute_residual(params: CglParams, fam: LaurentFamily) -> mpf:
    """Largest scaled coefficient of both lines of the reduced system after substitution.

    Each order is divided by its largest constituent term (at least 1), so
    near-resonant families with fast-growing coefficients are judged fairly.

    Independent of the recursion: full series products of ``M`` and ``psi``.
    Only orders fully determined by the truncated series are inspected.
    """
    P = params
    p = fam.valuation_M
    n = len(fam.coefficients_M)
    m = fam.coefficients_M
    psi = fam.coefficients_psi
    dm = series_deriv(m, p)
    ddm = series_deriv(dm, p - 1)
    dpsi = series_deriv(psi, -1)
    # first line times 4 M^2: 2 M M'' - M'^2 - 2 csi M M' - 4 psi^2 M^2 + 4(...)M^2
    MM = series_mul(m, m, n)
    psiM = series_mul(psi, m, n)
    a = series_mul(m, ddm, n)
    b = series_mul(dm, dm, n)
    c = series_mul(m, dm, n)
    d = series_mul(psiM, psiM, n)
    M4 = series_mul(MM, MM, n)
    M3 = series_mul(MM, m, n)
    base = 2 * p - 2
    line1 = [mpc(0)] * n
    for k in range(n):
        terms = [2 * a[k], -b[k], -4 * d[k]]
        if k >= 1:
            terms.append(-2 * mpf(P.csi) * c[k - 1])
        for coef, arr, val in ((4 * mpf(P.e_r), M4, 4 * p), (4 * mpf(P.d_r), M3, 3 * p),
                               (4 * mpf(P.g_i), MM, 2 * p)):
            idx = k + base - val
            if coef and 0 <= idx < n:
                terms.append(coef * arr[idx])
        line1[k] = _scaled_sum(terms)
    # second line times M: psi' M + psi M' - csi psi M + e_i M^3 + d_i M^2 - g_r M
    e = series_mul(dpsi, m, n)
    f = series_mul(psi, dm, n)
    base2 = p - 2
    line2 = [mpc(0)] * n
    for k in range(n):
        terms = [e[k], f[k]]
        if k >= 1:
            terms.append(-mpf(P.csi) * psiM[k - 1])
        for coef, arr, val in ((mpf(P.e_i), M3, 3 * p), (mpf(P.d_i), MM, 2 * p),
                               (-mpf(P.g_r), m, p)):
            idx = k + base2 - val
            if coef and 0 <= idx < n:
                terms.append(coef * arr[idx])
        line2[k] = _scaled_sum(terms)
    return max(max(abs(v) for v in line1), max(abs(v) for v in line2))
