"""
Subequation fitting.

Every solution of the reduced system that is elliptic or degenerate elliptic
obeys a first-order algebraic ODE::

    F(u, u') = sum_{k=0..m} sum_{j=0..2m-2k} a[j,k] u^j u'^k = 0,  a[0,m] = 1.

Requiring every Laurent family to satisfy ``F = 0`` order by order gives an
overdetermined linear system for the ``a[j,k]``, solved here through a
rank-revealing SVD in extended precision.  A trivial null space (nullity 0)
is a legitimate outcome: no such subequation exists for that parameter point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import mpmath
from mpmath import mp, mpc, mpf

from .errors import InsufficientTerms
from .laurent import (LaurentFamily, expand_pole_family, leading_orders,
                      series_deriv, series_mul)
from .model import CglParams

__all__ = [
    "SubequationAnsatz",
    "FitReport",
    "ansatz_indices",
    "build_linear_system",
    "solve_nullspace",
    "fit_subequation",
    "subequation_residual",
    "reference_f4",
    "f4_monomials",
    "default_j_max",
    "reference_psi_subequation",
    "reference_dlog_subequation",
]

log = logging.getLogger(__name__)

RANK_THRESHOLD = mpf("1e-30")


def ansatz_indices(m: int) -> list[tuple[int, int]]:
    """Index set ``{(j, k): 0 <= k <= m, 0 <= j <= 2m - 2k}``."""
    return [(j, k) for k in range(m + 1) for j in range(2 * m - 2 * k + 1)]


def default_j_max(m: int) -> int:
    return (m + 1) ** 2 + 4


@dataclass
class SubequationAnsatz:
    """Coefficients ``a[(j, k)]`` of ``F(u, u')``, normalized so ``a[(0, m)] = 1``."""

    m: int
    coefficients: dict

    def __post_init__(self):
        extra = set(self.coefficients) - set(ansatz_indices(self.m))
        if extra:
            raise ValueError(f"indices outside the ansatz: {sorted(extra)}")

    def __call__(self, u, up):
        return sum(c * u**j * up**k for (j, k), c in self.coefficients.items())

    def scale(self, u, up) -> float:
        """Largest monomial magnitude, the natural yardstick for residuals."""
        return max(1.0, max(abs(complex(c * u**j * up**k))
                            for (j, k), c in self.coefficients.items()))

    def cleared(self, factor) -> dict:
        return {key: c * factor for key, c in self.coefficients.items()}


@dataclass
class FitReport:
    rank: int
    nullity: int
    solution: SubequationAnsatz | None
    singular_values: list
    residual_of_fit: mpf
    n_rows: int = 0
    n_columns: int = 0
    null_basis: list = field(default_factory=list, repr=False)


def build_linear_system(families: list[LaurentFamily], m: int, j_max: int):
    """Rows ``F_j = 0`` for ``j = 0..j_max`` of every family; columns follow ``ansatz_indices(m)``."""
    cols = ansatz_indices(m)
    rows = []
    for fam in families:
        p = fam.valuation_M
        need = j_max + m * (1 - p) + 1
        if len(fam.coefficients_M) < need:
            raise InsufficientTerms(
                f"family has {len(fam.coefficients_M)} terms, needs {need}")
        n = len(fam.coefficients_M)
        u = list(fam.coefficients_M)
        du = series_deriv(u, p)
        upow = [[mpc(1)] + [mpc(0)] * (n - 1)]
        for _ in range(2 * m):
            upow.append(series_mul(upow[-1], u, n))
        dpow = [[mpc(1)] + [mpc(0)] * (n - 1)]
        for _ in range(m):
            dpow.append(series_mul(dpow[-1], du, n))
        mono = {}
        for (j, k) in cols:
            mono[(j, k)] = (j * p + k * (p - 1), series_mul(upow[j], dpow[k], n))
        lead = min(v for v, _ in mono.values())
        for order in range(j_max + 1):
            row = []
            for key in cols:
                val, arr = mono[key]
                idx = lead + order - val
                row.append(arr[idx] if 0 <= idx < n else mpc(0))
            rows.append(row)
    return mpmath.matrix(rows)


def solve_nullspace(system, threshold=RANK_THRESHOLD) -> FitReport:
    """Rank and normalized null vector of ``system`` (rows are scaled to unit norm)."""
    A = system.copy()
    nrows, ncols = A.rows, A.cols
    for i in range(nrows):
        nrm = mpmath.sqrt(mpmath.fsum(abs(A[i, c]) ** 2 for c in range(ncols)))
        if nrm:
            for c in range(ncols):
                A[i, c] /= nrm
    if nrows < ncols:
        pad = mpmath.matrix(ncols - nrows, ncols)
        rows = [[A[i, c] for c in range(ncols)] for i in range(nrows)]
        rows += [[pad[i, c] for c in range(ncols)] for i in range(ncols - nrows)]
        A = mpmath.matrix(rows)
    U, S, V = mpmath.svd_c(A, full_matrices=False, compute_uv=True)
    sv = sorted((S[i] for i in range(len(S))), reverse=True)
    smax = sv[0] if sv else mpf(0)
    rank = sum(1 for s in sv if s > threshold * smax)
    nullity = ncols - rank
    # rows of V (i.e. V^H columns) with small singular values span the null space
    order = sorted(range(len(S)), key=lambda i: S[i])
    basis = [[V[i, c].conjugate() for c in range(ncols)] for i in order[:nullity]]
    resid = order and S[order[0]] / smax
    return FitReport(rank=rank, nullity=nullity, solution=None, singular_values=sv,
                     residual_of_fit=resid, n_rows=nrows, n_columns=ncols,
                     null_basis=basis)


def _normalize(vec, m):
    cols = ansatz_indices(m)
    lead = vec[cols.index((0, m))]
    if abs(lead) < mpf(10) ** (-(mp.dps // 2)):
        return None
    return SubequationAnsatz(m, {key: v / lead for key, v in zip(cols, vec)})


def fit_subequation(params: CglParams, equation: str = "cgl5", m: int = 4,
                    j_max: int | None = None, families: list[LaurentFamily] | None = None,
                    subset=None) -> FitReport:
    """Leading orders, Laurent families, linear system, null space.

    ``subset`` selects which pole families to impose (indices into
    ``leading_orders``); all of them by default.
    """
    if j_max is None:
        j_max = default_j_max(m)
    if families is None:
        leads = leading_orders(params, equation)
        if subset is not None:
            leads = [leads[i] for i in subset]
        p = leads[0].leading_exponent
        n_terms = j_max + m * (1 - p) + 1
        families = [expand_pole_family(params, L, n_terms) for L in leads]
    A = build_linear_system(families, m, j_max)
    report = solve_nullspace(A)
    if report.nullity == 1:
        report.solution = _normalize(report.null_basis[0], m)
    log.debug("fit m=%d: rank %d nullity %d", m, report.rank, report.nullity)
    return report


def subequation_residual(ansatz, u, up) -> float:
    """``|F(u, u')|`` for a numeric jet."""
    return abs(complex(ansatz(u, up)))


def f4_monomials(ex, ey, e_i, csi) -> dict:
    """Expanded coefficients of the fourth-degree subequation of the elliptic slice.

    Normalized so the ``M'^4`` coefficient is 1.  Arithmetic follows the type
    of the inputs (Fraction, mpf or float).
    """
    return {
        (0, 4): 1,
        (1, 3): -2 * csi,
        (2, 2): 72 * ex,
        (0, 2): -864 * ex * ey / e_i,
        (0, 0): (2**4 * 3**8 * ex**4 + 648 * 288 * ex**2 * ey**2) / e_i**2,
        (2, 0): 648 * 24 * ex**2 * ey / e_i + 48**3 * ey**3 / (3 * e_i),
        (4, 0): -648 * ex**2 - 48**2 * ey**2,
        (6, 0): 48 * ey * e_i,
        (8, 0): -e_i**2 / 3,
    }


def reference_f4(ex, ey, e_i, csi=None) -> SubequationAnsatz:
    if csi is None:
        csi = mpmath.sqrt(48 * mpf(ex))
    coeffs = {key: 0 for key in ansatz_indices(4)}
    coeffs.update(f4_monomials(ex, ey, e_i, csi))
    return SubequationAnsatz(4, coeffs)


# ---- polynomials in (u, u') as {(j, k): coefficient} ----

def _padd(*polys) -> dict:
    out: dict = {}
    for poly in polys:
        for key, c in poly.items():
            out[key] = out.get(key, 0) + c
    return out


def _pmul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (j1, k1), c1 in a.items():
        for (j2, k2), c2 in b.items():
            key = (j1 + j2, k1 + k2)
            out[key] = out.get(key, 0) + c1 * c2
    return out


def _pscale(c, a: dict) -> dict:
    return {key: c * v for key, v in a.items()}


def _as_ansatz(poly: dict, m: int) -> SubequationAnsatz:
    lead = poly[(0, m)]
    coeffs = {key: 0 for key in ansatz_indices(m)}
    coeffs.update({key: v / lead for key, v in poly.items() if v != 0 or key == (0, m)})
    return SubequationAnsatz(m, coeffs)


def reference_psi_subequation(ex, ey, csi) -> SubequationAnsatz:
    """Fourth-degree subequation ``F(psi, psi') = 0`` of the elliptic slice (csi != 0)."""
    if csi == 0:
        raise ValueError("the normalization divides by csi")
    deg2 = {(0, 0): -csi * (27 * ex**2 - 324 * ey**2), (1, 0): 1440 * ex * ey,
            (2, 0): 27 * csi * ex, (3, 0): 16 * ey, (4, 0): csi / 3}
    deg0 = {(8, 0): -csi / 3, (7, 0): -32 * ey / 3, (6, 0): -26 * csi * ex,
            (5, 0): -1632 * ex * ey, (4, 0): -csi * (477 * ex**2 + 552 * ey**2),
            (3, 0): -288 * ey * (165 * ex**2 + 4 * ey**2),
            (2, 0): csi * ex * (2106 * ex**2 - 31320 * ey**2),
            (1, 0): 2**7 * 3**6 * (ex**2 - 4 * ey**2) * ex * ey,
            (0, 0): 243 * csi * (-9 * ex**4 + 56 * ex**2 * ey**2 - 144 * ey**4)}
    poly = _padd({(0, 4): csi},
                 _pmul({(0, 3): -4 * csi}, {(1, 0): csi, (0, 0): 24 * ey}),
                 _pmul({(0, 2): 8}, deg2),
                 _pscale(16, deg0))
    return _as_ansatz(poly, 4)


def reference_dlog_subequation(ey, csi, unit=1j) -> SubequationAnsatz:
    """Third-degree subequation ``F(D, D') = 0`` of ``D = M'/(2M) + unit psi``.

    ``(2D' + csi D + 24 unit ey)(D' - csi D - 24 unit ey)^2
    + 2^-11 (16 (4 D^3 - 3 csi D^2) - 9 (csi^2 + 64 unit ey)(4 D + csi))^2 = 0``.
    """
    k = 24 * unit * ey
    first = {(0, 1): 2, (1, 0): csi, (0, 0): k}
    lin = {(0, 1): 1, (1, 0): -csi, (0, 0): -k}
    c = 9 * (csi**2 + 64 * unit * ey)
    inner = {(3, 0): 64, (2, 0): -48 * csi, (1, 0): -4 * c, (0, 0): -c * csi}
    poly = _padd(_pmul(first, _pmul(lin, lin)), _pscale(mpf(2) ** -11 if isinstance(csi, mpf)
                                                        else 2.0**-11, _pmul(inner, inner)))
    return _as_ansatz(poly, 3)
