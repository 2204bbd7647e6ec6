import numpy as np
import pytest

from cglwaves.elliptic import periods_from_invariants
from cglwaves.solutions import EllipticSliceParams

# (g2, g3) pairs: the slice lattice at (ex, ey) = (1, 1), a rectangular one,
# a rhombic one and a genuinely complex one.
INVARIANTS = [(-72.0, 76.0), (4.0, 1.0), (4.0, -6.0), (1 + 2j, 0.5 - 1j)]

SLICES = [(1.0, 1.0, 2.0), (0.5, -2.0, -3.0), (2.0, 0.7, 1.0)]


def lattice_sum_oracle(g2, g3, z, n_box=60):
    """Truncated lattice sums for P, zeta and sigma with the missing tail of
    the two leading Eisenstein series restored from ``G4 = g2/60`` and
    ``G6 = g3/140``.  Needs the periods only to enumerate the lattice."""
    inv = periods_from_invariants(g2, g3)
    m, n = np.meshgrid(np.arange(-n_box, n_box + 1), np.arange(-n_box, n_box + 1))
    w = (2 * m * inv.omega + 2 * n * inv.omega_prime).ravel()
    w = w[w != 0]
    tail4 = g2 / 60 - np.sum(w**-4.0)
    tail6 = g3 / 140 - np.sum(w**-6.0)
    z = np.atleast_1d(np.asarray(z, dtype=complex))[:, None]
    p = 1 / z[:, 0] ** 2 + np.sum(1 / (z - w) ** 2 - 1 / w**2, axis=1)
    zeta = 1 / z[:, 0] + np.sum(1 / (z - w) + 1 / w + z / w**2, axis=1)
    u = z / w
    log_sigma = np.log(z[:, 0]) + np.sum(np.log1p(-u) + u + u**2 / 2, axis=1)
    z = z[:, 0]
    p += 3 * z**2 * tail4 + 5 * z**4 * tail6
    zeta -= z**3 * tail4 + z**5 * tail6
    log_sigma -= z**4 / 4 * tail4 + z**6 / 6 * tail6
    return p, zeta, np.exp(log_sigma)


def cell_grid(inv, n=10):
    t = (np.arange(n) + 0.5) / n
    return (t[:, None] * 2 * inv.omega + t[None, :] * 2 * inv.omega_prime).ravel()


def rel_err(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


@pytest.fixture(params=SLICES, ids=lambda v: "ex{}_ey{}_ei{}".format(*v))
def slice_point(request):
    return EllipticSliceParams(*request.param)


@pytest.fixture
def canonical_slice():
    return EllipticSliceParams(1.0, 1.0, 2.0)
