"""
Weierstrass elliptic functions for complex invariants.

The lattice is obtained from the invariants ``(g2, g3)`` through the roots of
``4 t^3 - g2 t - g3`` and the complex arithmetic-geometric mean of their
differences.  The basis is then reduced so that ``tau = omega'/omega`` lies in
the fundamental domain of the modular group, which keeps the nome small
(``|q| <= exp(-pi sqrt(3)/2)``) and makes a handful of theta terms enough for
double precision everywhere in the cell.

All evaluators accept scalars or numpy arrays.

Conventions
-----------
* ``omega``, ``omega_prime`` are half-periods with ``Im(omega'/omega) > 0``.
* ``roots = (e1, e2, e3) = (P(omega), P(omega + omega'), P(omega'))``.
* ``eta1 = zeta(omega)``, ``eta_prime = zeta(omega')``, with Legendre's
  relation ``eta1 omega' - eta_prime omega = i pi / 2``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateArguments, DegenerateLattice, NearLatticePoint

__all__ = [
    "EllipticInvariants",
    "WpValue",
    "periods_from_invariants",
    "invariants_from_periods",
    "eval_wp",
    "eval_zeta",
    "eval_sigma",
    "check_addition",
    "lattice_reduce",
    "half_period_for_root",
]

_N_THETA = 10
_NEAR_LATTICE = 1e-8
_DEGENERATE_REL = 1e-12


def _agm(a: complex, b: complex, tol: float = 1e-17) -> complex:
    """Optimal complex AGM: keep ``|a_n - b_n| <= |a_n + b_n|`` at each step."""
    for _ in range(200):
        a1 = 0.5 * (a + b)
        b1 = cmath.sqrt(a * b)
        if abs(a1 - b1) > abs(a1 + b1):
            b1 = -b1
        a, b = a1, b1
        if abs(a - b) <= tol * abs(a):
            break
    return 0.5 * (a + b)


def _sqrt_pair(x: complex, y: complex) -> tuple[complex, complex]:
    # square roots continued along the straight segment from x to y
    a = cmath.sqrt(x)
    b = cmath.sqrt(y)
    if (b / a).real < 0:
        b = -b
    return a, b


def _half_period_between(ea: complex, eb: complex, ec: complex) -> complex:
    """Integral of dt/sqrt(4(t-e1)(t-e2)(t-e3)) from ea to eb (up to sign)."""
    a, b = _sqrt_pair(ea - ec, eb - ec)
    return 1j * math.pi / (2.0 * _agm(a, b))


def _polish_root(t: complex, g2: complex, g3: complex) -> complex:
    for _ in range(4):
        f = 4 * t**3 - g2 * t - g3
        df = 12 * t**2 - g2
        if df == 0:
            break
        t = t - f / df
    return t


def lattice_reduce(w1: complex, w3: complex) -> tuple[complex, complex]:
    """Reduce a half-period basis so that ``tau = w3/w1`` is in the fundamental domain."""
    if (w3 / w1).imag < 0:
        w3 = -w3
    for _ in range(200):
        tau = w3 / w1
        n = round(tau.real)
        if n:
            w3 = w3 - n * w1
            tau = w3 / w1
        if abs(tau) < 1.0 - 1e-14:
            w1, w3 = w3, -w1
            continue
        break
    return w1, w3


def _theta_coeffs(q: complex):
    n = np.arange(_N_THETA)
    odd = 2 * n + 1
    # q^((n+1/2)^2) and q^(n^2) for n >= 1 (q = exp(i pi tau))
    log_q = cmath.log(q)
    qh = np.exp(log_q * (n + 0.5) ** 2)
    qf = np.exp(log_q * (n + 1.0) ** 2)
    return odd, qh, qf


def _thetas(v, q: complex):
    """theta1..theta4 at v and theta1'(v); v may be an array."""
    odd, qh, qf = _theta_coeffs(q)
    even = 2 * (np.arange(_N_THETA) + 1)
    sign = (-1.0) ** np.arange(_N_THETA)
    v = np.asarray(v, dtype=complex)[..., None]
    t1 = 2 * np.sum(sign * qh * np.sin(odd * v), axis=-1)
    t1p = 2 * np.sum(sign * qh * odd * np.cos(odd * v), axis=-1)
    t2 = 2 * np.sum(qh * np.cos(odd * v), axis=-1)
    c = np.cos(even * v)
    t3 = 1 + 2 * np.sum(qf * c, axis=-1)
    t4 = 1 - 2 * np.sum(sign * qf * c, axis=-1)
    return t1, t1p, t2, t3, t4


def _theta_constants(q: complex):
    odd, qh, qf = _theta_coeffs(q)
    sign = (-1.0) ** np.arange(_N_THETA)
    t2 = complex(2 * np.sum(qh))
    t3 = complex(1 + 2 * np.sum(qf))
    t4 = complex(1 - 2 * np.sum(sign * qf))
    t1p = complex(2 * np.sum(sign * qh * odd))
    t1ppp = complex(-2 * np.sum(sign * qh * odd**3))
    return t1p, t1ppp, t2, t3, t4


@dataclass(frozen=True)
class EllipticInvariants:
    """Invariants, roots, reduced half-periods and quasi-periods of one lattice."""

    g2: complex
    g3: complex
    roots: tuple[complex, complex, complex]
    omega: complex
    omega_prime: complex
    eta1: complex
    eta_prime: complex
    q: complex
    discriminant: complex
    _theta0: tuple = field(repr=False, compare=False, default=())

    @property
    def half_periods(self) -> tuple[complex, complex]:
        return self.omega, self.omega_prime

    @property
    def tau(self) -> complex:
        return self.omega_prime / self.omega

    @property
    def periods(self) -> tuple[complex, complex]:
        return 2 * self.omega, 2 * self.omega_prime

    def reduce(self, z):
        """Split ``z`` into ``(r, m, n)`` with ``z = r + 2 m omega + 2 n omega'``
        and ``r`` in the cell centred at the origin."""
        z = np.asarray(z, dtype=complex)
        w1, w3 = 2 * self.omega, 2 * self.omega_prime
        det = (w1.conjugate() * w3).imag
        # real coordinates of z in the basis (w1, w3)
        a = (z.conjugate() * w3).imag / det
        b = (w1.conjugate() * z).imag / det
        m = np.round(a)
        n = np.round(b)
        return z - m * w1 - n * w3, m, n

    def lattice_distance(self, z):
        """Distance from ``z`` to the nearest lattice point."""
        r, _, _ = self.reduce(z)
        best = np.abs(r)
        w1, w3 = 2 * self.omega, 2 * self.omega_prime
        for dm in (-1, 0, 1):
            for dn in (-1, 0, 1):
                best = np.minimum(best, np.abs(r - dm * w1 - dn * w3))
        return best

    def lattice_points(self, radius: int = 1):
        w1, w3 = 2 * self.omega, 2 * self.omega_prime
        return [m * w1 + n * w3 for m in range(-radius, radius + 1)
                for n in range(-radius, radius + 1)]


@dataclass(frozen=True)
class WpValue:
    p: complex
    p_prime: complex
    p_second: complex


def _assemble(g2: complex, g3: complex, w1: complex, w3: complex) -> EllipticInvariants:
    w1, w3 = lattice_reduce(w1, w3)
    tau = w3 / w1
    q = cmath.exp(1j * math.pi * tau)
    t1p, t1ppp, t2, t3, t4 = _theta_constants(q)
    k = (math.pi / (2 * w1)) ** 2
    e1 = k * (t3**4 + t4**4) / 3
    e2 = k * (t2**4 - t4**4) / 3
    e3 = -k * (t2**4 + t3**4) / 3
    eta1 = -(math.pi**2) / (12 * w1) * t1ppp / t1p
    eta3 = (eta1 * w3 - 0.5j * math.pi) / w1
    if g2 is None:
        g2 = 2 * (e1**2 + e2**2 + e3**2)
        g3 = 4 * e1 * e2 * e3
    return EllipticInvariants(
        g2=complex(g2), g3=complex(g3), roots=(e1, e2, e3),
        omega=w1, omega_prime=w3, eta1=eta1, eta_prime=eta3, q=q,
        discriminant=complex(g2) ** 3 - 27 * complex(g3) ** 2,
        _theta0=(t1p, t2, t3, t4),
    )


def periods_from_invariants(g2: complex, g3: complex) -> EllipticInvariants:
    """Build the lattice whose Weierstrass function has invariants ``g2, g3``.

    Raises DegenerateLattice when ``|g2^3 - 27 g3^2|`` is below
    ``1e-12 * max(1, |g2|^3, |g3|^2)``.
    """
    g2 = complex(g2)
    g3 = complex(g3)
    disc = g2**3 - 27 * g3**2
    if abs(disc) < _DEGENERATE_REL * max(1.0, abs(g2) ** 3, abs(g3) ** 2):
        raise DegenerateLattice(f"discriminant {disc} vanishes for g2={g2}, g3={g3}")
    r = [_polish_root(complex(t), g2, g3) for t in np.roots([4, 0, -g2, -g3])]
    e1, e2, e3 = r
    # loops around [e1,e2] and [e2,e3] form a homology basis
    wa = _half_period_between(e1, e2, e3)
    wb = _half_period_between(e2, e3, e1)
    inv = _assemble(g2, g3, wa, wb)
    # theta-constant roots label the polished roots by half-period
    labelled = []
    pool = list(r)
    for target in inv.roots:
        i = min(range(len(pool)), key=lambda k: abs(pool[k] - target))
        labelled.append(pool.pop(i))
    scale = max(1.0, abs(g2), abs(g3)) ** (1 / 3)
    if max(abs(a - b) for a, b in zip(labelled, inv.roots)) > 1e-6 * scale:
        raise DegenerateLattice("period computation did not reproduce the invariants")
    return EllipticInvariants(
        g2=g2, g3=g3, roots=tuple(labelled), omega=inv.omega,
        omega_prime=inv.omega_prime, eta1=inv.eta1, eta_prime=inv.eta_prime,
        q=inv.q, discriminant=disc, _theta0=inv._theta0,
    )


def invariants_from_periods(omega: complex, omega_prime: complex) -> EllipticInvariants:
    """Lattice generated by ``2 omega`` and ``2 omega'``; invariants from theta constants."""
    if abs((omega_prime / omega).imag) < 1e-14:
        raise DegenerateLattice("half-periods are collinear")
    return _assemble(None, None, complex(omega), complex(omega_prime))


def half_period_for_root(inv: EllipticInvariants, root: complex) -> complex:
    """Representative half-period ``h`` (one of omega, omega+omega', omega') with P(h) = root."""
    cands = (inv.omega, inv.omega + inv.omega_prime, inv.omega_prime)
    i = min(range(3), key=lambda k: abs(inv.roots[k] - root))
    return cands[i]


def _check_off_lattice(inv: EllipticInvariants, r):
    if np.any(np.abs(r) < _NEAR_LATTICE * abs(inv.omega)):
        raise NearLatticePoint("argument lies on the period lattice")


def _scalar_or_array(x, like):
    return complex(x) if np.ndim(like) == 0 else x


def eval_wp(inv: EllipticInvariants, z) -> WpValue:
    """P(z), P'(z) and P''(z) = 6 P^2 - g2/2."""
    r, _, _ = inv.reduce(z)
    _check_off_lattice(inv, r)
    w = inv.omega
    v = math.pi * r / (2 * w)
    t1, _, t2, t3, t4 = _thetas(v, inv.q)
    _, c2, c3, c4 = inv._theta0
    k = math.pi / (2 * w)
    p = inv.roots[0] + (k * c3 * c4 * t2 / t1) ** 2
    pp = -2 * k**3 * (c2 * c3 * c4) ** 2 * t2 * t3 * t4 / t1**3
    ps = 6 * p**2 - inv.g2 / 2
    return WpValue(_scalar_or_array(p, z), _scalar_or_array(pp, z),
                   _scalar_or_array(ps, z))


def eval_zeta(inv: EllipticInvariants, z):
    """Weierstrass zeta, quasi-periodic: zeta(z + 2 omega) = zeta(z) + 2 eta1."""
    r, m, n = inv.reduce(z)
    _check_off_lattice(inv, r)
    w = inv.omega
    v = math.pi * r / (2 * w)
    t1, t1p, _, _, _ = _thetas(v, inv.q)
    val = inv.eta1 * r / w + (math.pi / (2 * w)) * t1p / t1
    val = val + 2 * m * inv.eta1 + 2 * n * inv.eta_prime
    return _scalar_or_array(val, z)


def _log_sigma_reduced(inv, r):
    w = inv.omega
    v = math.pi * r / (2 * w)
    t1, _, _, _, _ = _thetas(v, inv.q)
    c1p = inv._theta0[0]
    return inv.eta1 * r**2 / (2 * w), (2 * w / math.pi) * t1 / c1p


def eval_sigma(inv: EllipticInvariants, z):
    """Weierstrass sigma (entire, odd, sigma'(0) = 1)."""
    r, m, n = inv.reduce(z)
    expo, base = _log_sigma_reduced(inv, r)
    shift = m * inv.omega + n * inv.omega_prime
    eta = 2 * m * inv.eta1 + 2 * n * inv.eta_prime
    sign = (-1.0) ** ((m + n + m * n) % 2)
    val = sign * base * np.exp(expo + eta * (r + shift))
    return _scalar_or_array(val, z)


def check_addition(inv: EllipticInvariants, x1: complex, x2: complex) -> float:
    """Residual of the addition theorem at ``(x1, x2)``."""
    a = eval_wp(inv, x1)
    b = eval_wp(inv, x2)
    s = eval_wp(inv, x1 + x2)
    diff = a.p - b.p
    if abs(diff) < 1e-10 * max(1.0, abs(a.p)):
        raise DegenerateArguments("P(x1) = P(x2); use the duplication formula")
    rhs = 0.25 * ((a.p_prime - b.p_prime) / diff) ** 2
    return abs(s.p + a.p + b.p - rhs)
