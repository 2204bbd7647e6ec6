"""Acceptance criteria, one test each; every test prints a single verdict line."""

import time

import mpmath
import numpy as np
import pytest
from conftest import cell_grid, lattice_sum_oracle, rel_err
from mpmath import mp, mpc, mpf

from cglwaves.elliptic import eval_sigma, eval_wp, eval_zeta, periods_from_invariants
from cglwaves.landen import (landen_descend, landen_relations, landen_wp_identity,
                             landen_wp_sum_identity, landen_zeta_sigma_identity)
from cglwaves.laurent import (expand_pole_family, expand_zero_family, fuchs_determinant,
                              leading_orders, series_substitute_residual)
from cglwaves.model import (CglParams, StatePoint, residual_order3, residual_order3_scale,
                            residual_system, residual_system_scale)
from cglwaves.solutions import (EllipticSliceParams, count_poles, eval_A_product,
                                eval_dlogA_wp, eval_M_product, eval_M_sigma_product,
                                eval_M_wp, eval_M_zeta_sum, eval_psi_wp,
                                eval_simple_pole_sums, landen_pair, real_line_segment,
                                sample_points)
from cglwaves.subequation import (fit_subequation, reference_dlog_subequation, reference_f4,
                                  reference_psi_subequation)
from cglwaves.verify import verify_slice, verify_subequation_pipeline


@pytest.fixture
def verdict(capsys):
    def report(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return report


def _cleared_quartic(ex, ey, e_i, csi, last_prefactor):
    """The slice quartic multiplied by e_i^2, expanded from its factored form.

    Polynomials are dicts ``{(power of M, power of M'): coefficient}``.
    """
    def mul(a, b):
        out = {}
        for (j1, k1), c1 in a.items():
            for (j2, k2), c2 in b.items():
                out[(j1 + j2, k1 + k2)] = out.get((j1 + j2, k1 + k2), 0) + c1 * c2
        return out

    def add(*ps):
        out = {}
        for p in ps:
            for key, c in p.items():
                out[key] = out.get(key, 0) + c
        return out

    cube = {(0, 0): 1}
    for _ in range(3):
        cube = mul(cube, {(2, 0): e_i, (0, 0): -48 * ey})
    poly = add(
        {(0, 4): 1, (1, 3): -2 * csi},
        mul({(0, 2): 72 * ex / e_i}, {(2, 0): e_i, (0, 0): -12 * ey}),
        {(0, 0): mpf(2) ** 4 * 3**8 * ex**4 / e_i**2},
        mul({(0, 0): 648 * ex**2 / e_i**2},
            {(0, 0): 288 * ey**2, (2, 0): 24 * e_i * ey, (4, 0): -e_i**2}),
        mul({(2, 0): -1 / (last_prefactor * e_i)}, cube),
    )
    return {key: c * e_i**2 for key, c in poly.items() if c != 0}


def test_criterion_1_subequation_recovery(verdict):
    with mp.workdps(60):
        ex, ey, e_i = mpf(1), mpf(1), mpf(2)
        csi = mpmath.sqrt(48 * ex)
        P = CglParams(e_i=e_i, g_r=36 * ey, g_i=-3 * csi**2 / 16, csi=csi)
        start = time.perf_counter()
        report = fit_subequation(P, m=4)
        elapsed = time.perf_counter() - start
        want = _cleared_quartic(ex, ey, e_i, csi, 3)
        got = {key: c * e_i**2 for key, c in report.solution.coefficients.items()}
        err = max(abs(got.get(key, 0) - want.get(key, 0)) / max(abs(want.get(key, 0)), 1e-300)
                  if want.get(key, 0) != 0 else abs(got.get(key, 0))
                  for key in set(got) | set(want))
        other = _cleared_quartic(ex, ey, e_i, csi, 81)
        off = sorted(k for k in other if abs(other[k] - want.get(k, 0)) > 1e-20 * abs(other[k]))
    ok = report.nullity == 1 and err < 1e-8 and elapsed < 60
    verdict(1, ok, f"nullity={report.nullity} max_rel={float(err):.1e} time={elapsed:.1f}s "
                   f"(1/(3 e_i) last-term prefactor; 1/(81 e_i) would differ at {off})")


def test_criterion_2_off_slice_negative_control(verdict):
    rng = np.random.default_rng(2024)
    nullities = []
    with mp.workdps(30):
        while len(nullities) < 10:
            v = rng.uniform(-2, 2, 7)
            if abs(v[1]) < 0.2:
                continue
            P = CglParams(*[mpf(float(x)) for x in v])
            nullities.append(fit_subequation(P, m=4).nullity)
    verdict(2, all(n == 0 for n in nullities), f"nullities={nullities}")


def _draws(n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        v = rng.uniform(-2, 2, 7)
        yield (CglParams(*[mpf(float(x)) for x in v]),
               mpc(*rng.normal(size=2)), mpc(*rng.normal(size=2)))


def _rel(a, b):
    return abs(a - b) / max(1, abs(b))


def test_criterion_3_laurent_fidelity(verdict):
    head, deep = mpf(0), mpf(0)
    with mp.workdps(50):
        for P, a0, a1 in _draws(20, seed=3):
            csi, ei, dr, di, gr, gi = P.csi, P.e_i, P.d_r, P.d_i, P.g_r, P.g_i
            for lead in leading_orders(P, "cgl5"):
                m0 = lead.m0
                fam = expand_pole_family(P, lead, 6)
                den = 4 * (1 + ei**2 * m0**4)
                head = max(head,
                           _rel(fam.coefficients_M[1],
                                m0 * (csi / 4 + (2 * dr * m0 - 2 * ei * di * m0**3) / den)),
                           _rel(fam.coefficients_psi[0], ei * m0**2 / 2),
                           _rel(fam.coefficients_psi[1], ei * m0**2 / 8 * csi + m0 * (
                               4 * di + 5 * ei * dr * m0**2 - ei**2 * di * m0**4) / den))
            P3 = CglParams(d_r=dr, d_i=di, g_r=gr, g_i=gi, csi=csi)
            for lead in leading_orders(P3, "cgl3"):
                m0 = lead.m0
                fam = expand_pole_family(P3, lead, 6)
                head = max(head, _rel(fam.coefficients_M[1], m0 * csi / 3),
                           _rel(fam.coefficients_psi[0], di * m0 / 3),
                           _rel(fam.coefficients_psi[1], di * m0 * csi / 18))
            for j in (mpc(0, 1), mpc(0, -1)):
                fam = expand_zero_family(P, j, a0, a1, 6)
                _, inv = fam.inverse_M()
                c2 = a1**2 + csi * a1 + csi**2 / 3 - j * gr / 3 + 2 * gi / 3
                braces = ((gr + j * gi) * csi + 3 * j * csi**3 / 4 - (3 * di - j * dr) * a0 / 4
                          + (11 * j * csi**2 + 4 * gr + 4 * j * gi) * a1 / 4
                          + 3 * j * csi * a1**2 + j * a1**3)
                psi = fam.coefficients_psi
                head = max(head, _rel(inv[1] * a0, a1), _rel(inv[2] * a0, c2),
                           _rel(psi[0], j / 2), _rel(psi[1], j / 2 * (csi + a1)),
                           _rel(psi[2], j / 2 * (a1**2 + 2 * csi * a1 + 2 * gi / 3
                                                 - 4 * j * gr / 3 + 5 * csi**2 / 6)),
                           _rel(psi[3], braces / 2))
            fams = [(P, expand_pole_family(P, L, 24)) for L in leading_orders(P, "cgl5")]
            fams += [(P3, expand_pole_family(P3, L, 24)) for L in leading_orders(P3, "cgl3")]
            fams += [(P, expand_zero_family(P, j, a0, a1, 24)) for j in (1j, -1j)]
            deep = max([deep] + [series_substitute_residual(Q, f) for Q, f in fams])
    ok = head < 1e-12 and deep < 1e-25
    verdict(3, ok, f"closed-form heads max_rel={float(head):.1e}, "
                   f"substitution residual={float(deep):.1e} (zero family uses the "
                   f"csi^2/3 term and the braces/2 grouping)")


def _scaled(F, u, up):
    return max(abs(complex(F(a, b))) / F.scale(a, b) for a, b in zip(u, up))


def test_criterion_4_ode_residuals(verdict):
    s = EllipticSliceParams(1.0, 1.0, 2.0)
    start = time.perf_counter()
    z = sample_points(s, 100, seed=0)
    mj = eval_M_wp(s, z)
    psi, psi1 = eval_psi_wp(s, z)
    dl, dl1 = eval_dlogA_wp(s, z)
    jet = StatePoint(mj.M, mj.M1, mj.M2, mj.M3, psi, psi1)
    r1, r2 = residual_system(s.params, jet)
    s1, s2 = residual_system_scale(s.params, jet)
    res = {
        "system": float(max(np.max(np.abs(r1) / s1), np.max(np.abs(r2) / s2))),
        "order3": float(np.max(np.abs(residual_order3(s.params, jet))
                               / residual_order3_scale(s.params, jet))),
        "F4": _scaled(reference_f4(s.ex, s.ey, s.e_i, s.csi), mj.M, mj.M1),
        "psi_subeq": _scaled(reference_psi_subequation(s.ex, s.ey, s.csi), psi, psi1),
        "dlogA_subeq": _scaled(reference_dlog_subequation(s.ey, s.csi, s.j), dl, dl1),
    }
    elapsed = time.perf_counter() - start
    ok = max(res.values()) < 1e-8 and elapsed < 10 and len(z) >= 100
    verdict(4, ok, " ".join(f"{k}={v:.1e}" for k, v in res.items()) + f" time={elapsed:.2f}s")


def test_criterion_5_representation_equivalence(verdict):
    worst = 0.0
    for ex in (0.5, 1.0, 2.0):
        for ey in (-2.0, 0.7, 1.5):
            for e_i in (2.0, -3.0):
                s = EllipticSliceParams(ex, ey, e_i, 1j if e_i > 0 else -1j)
                z = sample_points(s, 100, seed=5)
                m = eval_M_wp(s, z).M
                worst = max(worst, rel_err(eval_M_zeta_sum(s, z), m),
                            rel_err(eval_M_product(s, z), m),
                            rel_err(eval_M_sigma_product(s, z), m))
                zu = sample_points(s, 100, seed=6, lattice="upper")
                d_sum, p_sum, _ = eval_simple_pole_sums(s, zu)
                worst = max(worst, rel_err(d_sum, eval_dlogA_wp(s, zu)[0]),
                            rel_err(p_sum, eval_psi_wp(s, zu)[0]))
    verdict(5, worst < 1e-9, f"max_rel={worst:.1e} over 18 slice points x 100 samples")


def test_criterion_6_landen_suite(verdict):
    def bilinear(g2, g3, G2, G3):
        return -32 * g2 * g3 + 22 * g3 * G2 + 11 * g2 * G3 - G2 * G3

    def cubic(g2, g3, G2, G3):
        return 196 * g2**3 + 49 * g2**2 * G2 - 7260 * g3**2 + 660 * g3 * G3 - 15 * G3**2

    integers = bilinear(-72, 76, 348, 664) == 0 and cubic(-72, 76, 348, 664) == 0
    pair = landen_descend(periods_from_invariants(-72.0, 76.0), 1.0)
    computed = max(abs(pair.upper.g2 - 348) / 348, abs(pair.upper.g3 - 664) / 664)
    rel = max(landen_relations(pair).values())
    e_rule = abs(pair.E1 + 2 * pair.e1)

    def identities(p, seed):
        lo = p.lower
        rng = np.random.default_rng(seed)
        u = rng.uniform(-0.5, 0.5, (200, 2))
        z = u[:, 0] * 2 * lo.omega + u[:, 1] * 2 * lo.omega_prime
        far = 1e-2 * abs(lo.omega)
        z = z[(lo.lattice_distance(z) > far) & (lo.lattice_distance(z - p.h) > far)
              & (lo.lattice_distance(z + p.h) > far)][:50]
        zr, sr = landen_zeta_sigma_identity(p, z)
        return float(max(np.max(landen_wp_identity(p, z)), np.max(landen_wp_sum_identity(p, z)),
                         np.max(zr), np.max(sr)))

    ident = identities(pair, 1)
    rng = np.random.default_rng(6)
    sweep_rel, sweep_ident = 0.0, 0.0
    for k in range(100):
        ex, ey = rng.uniform(0.1, 3), rng.uniform(-3, 3)
        p = landen_pair(EllipticSliceParams(ex, ey, 2.0))
        sweep_rel = max(sweep_rel, max(landen_relations(p).values()), abs(p.E1 + 2 * p.e1))
        sweep_ident = max(sweep_ident, identities(p, k))
    ok = (integers and computed < 1e-10 and rel < 1e-12 and e_rule < 1e-12 and ident < 1e-8
          and sweep_rel < 1e-12 and sweep_ident < 1e-8)
    verdict(6, ok, f"integers={integers} relations={rel:.1e} E1+2e1={e_rule:.1e} "
                   f"identities={ident:.1e} sweep relations={sweep_rel:.1e} "
                   f"sweep identities={sweep_ident:.1e}")


def test_criterion_7_amplitude_consistency(verdict):
    worst_mod, worst_dlog = 0.0, 0.0
    omega, t, c_sr = 0.7, 1.3, 0.4
    stencil = (1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280)
    for args in [(1.0, 1.0, 2.0), (0.5, -2.0, -3.0, -1j), (2.0, 0.7, 1.0)]:
        s = EllipticSliceParams(*args)
        # poles of M on the real line are half a real period apart
        seg = real_line_segment(s, 400)
        amp = eval_A_product(s, seg)
        worst_mod = max(worst_mod, rel_err(np.abs(amp.A) ** 2, eval_M_product(s, seg).real),
                        rel_err(np.abs(amp.A) ** 2, eval_M_wp(s, seg).M.real))
        h = 1e-3 * abs(seg[-1] - seg[0])
        pts = seg[5:-5:8]
        logs = {m: eval_A_product(s, pts + m * h, t=t, omega=omega, c_sr=c_sr).log_A
                + 1j * omega * t - 1j * c_sr * (pts + m * h) / 2 for m in range(-4, 5)}
        fd = sum(c * logs[m] for m, c in zip(range(-4, 5), stencil)) / h
        worst_dlog = max(worst_dlog, rel_err(fd, eval_dlogA_wp(s, pts)[0]))
    ok = worst_mod < 1e-8 and worst_dlog < 1e-8
    verdict(7, ok, f"|A|^2 vs M max_rel={worst_mod:.1e}, dlog max_rel={worst_dlog:.1e} "
                   f"(pole-free real segment of half a real period)")


def test_criterion_8_structural_counts(verdict):
    counts = [count_poles(EllipticSliceParams(*a)) for a in
              [(1.0, 1.0, 2.0), (0.5, -2.0, -3.0, -1j), (2.0, 0.7, 1.0)]]
    fuchs = mpf(0)
    with mp.workdps(40):
        P = CglParams(e_r=mpf("0.2"), e_i=mpf("1.3"), d_r=mpf("-0.4"), d_i=mpf("0.6"),
                      g_r=mpf("0.9"), g_i=mpf("-0.3"), csi=mpf("0.5"))
        n5 = leading_orders(P, "cgl5")
        P3 = CglParams(d_r=P.d_r, d_i=P.d_i, g_r=P.g_r, g_i=P.g_i, csi=P.csi)
        n3 = leading_orders(P3, "cgl3")
        fams5 = [expand_pole_family(P, L, 8) for L in n5]
        fams3 = [expand_pole_family(P3, L, 8) for L in n3]
        # the closed-form indices must match the reported ones and be roots of
        # the linearized recursion determinant of the engine
        for Q, leads, base, k in ((P, n5, 5, 32), (P3, n3, 7, 24)):
            for L in leads:
                r = mpmath.sqrt(1 - k * L.alpha**2)
                want = (-1, 0, (base + r) / 2, (base - r) / 2)
                fuchs = max([fuchs] + [abs(a - b) for a, b in zip(L.fuchs_indices, want)])
                for n in (-1, *want[2:]):
                    scale = abs(fuchs_determinant(Q, L, n + 10))
                    fuchs = max(fuchs, abs(fuchs_determinant(Q, L, n)) / scale)
    ok = (all(c[0] == 4 for c in counts) and len(fams5) == 4 and len(fams3) == 2
          and fuchs < 1e-12)
    verdict(8, ok, f"poles per cell={[c[0] for c in counts]} families={len(fams5)}/{len(fams3)} "
                   f"fuchs max_err={float(fuchs):.1e}")


def test_criterion_9_elliptic_core(verdict):
    worst, ode = 0.0, 0.0
    for g2, g3 in [(-72, 76), (4, 1), (4, -6), (1 + 2j, 0.5 - 1j)]:
        inv = periods_from_invariants(g2, g3)
        z = cell_grid(inv, 10)
        p, zeta, sigma = lattice_sum_oracle(g2, g3, z)
        worst = max(worst, rel_err(eval_wp(inv, z).p, p), rel_err(eval_zeta(inv, z), zeta),
                    float(np.max(np.abs(eval_sigma(inv, z) - sigma) / np.abs(sigma))))
        w = eval_wp(inv, z)
        scale = np.maximum(1.0, np.maximum(np.abs(w.p_prime) ** 2, np.abs(4 * w.p**3)))
        ode = max(ode, float(np.max(np.abs(w.p_prime**2 - (4 * w.p**3 - g2 * w.p - g3)) / scale)))
    start = time.perf_counter()
    with mp.workdps(30):
        slice_params = CglParams(e_i=mpf(2), g_r=mpf(36), g_i=mpf(-9), csi=mpmath.sqrt(48))
        suite = verify_slice(EllipticSliceParams(1.0, 1.0, 2.0), n_samples=100)
        suite.extend(verify_subequation_pipeline([slice_params]))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-8 and ode < 1e-10 and suite.overall and elapsed < 300
    verdict(9, ok, f"lattice-sum max_rel={worst:.1e} ODE={ode:.1e} "
                   f"verification suite {'PASS' if suite.overall else 'FAIL'} in {elapsed:.1f}s")
