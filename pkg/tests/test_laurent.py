import mpmath
import numpy as np
import pytest
from mpmath import mp, mpc, mpf

from cglwaves.errors import (DegenerateLeading, InsufficientTerms,
                             InvalidFreeConstant)
from cglwaves.laurent import (expand_pole_family, expand_zero_family,
                              fuchs_determinant, leading_orders, series_deriv,
                              series_div, series_mul,
                              series_substitute_residual, to_records)
from cglwaves.model import CglParams


def _draws(n=20, seed=3):
    rng = np.random.default_rng(seed)
    for _ in range(n):
        v = rng.uniform(-2, 2, 7)
        a0, a1 = mpc(*rng.normal(size=2)), mpc(*rng.normal(size=2))
        yield CglParams(*[mpf(float(x)) for x in v]), a0, a1


def _rel(a, b):
    return abs(a - b) / max(1, abs(b))


def test_cgl5_pole_family_heads_match_closed_forms():
    with mp.workdps(50):
        for P, _, _ in _draws():
            csi, ei, dr, di = P.csi, P.e_i, P.d_r, P.d_i
            for lead in leading_orders(P, "cgl5"):
                fam = expand_pole_family(P, lead, 6)
                m0 = lead.m0
                assert fam.coefficients_M[0] == m0
                c1 = m0 * (csi / 4 + (2 * dr * m0 - 2 * ei * di * m0**3) / (4 * (1 + ei**2 * m0**4)))
                assert _rel(fam.coefficients_M[1], c1) < 1e-12
                assert _rel(fam.coefficients_psi[0], ei * m0**2 / 2) < 1e-12
                p1 = (ei * m0**2 / 8 * csi
                      + m0 * (4 * di + 5 * ei * dr * m0**2 - ei**2 * di * m0**4) / (4 * (1 + ei**2 * m0**4)))
                assert _rel(fam.coefficients_psi[1], p1) < 1e-12


def test_cgl3_pole_family_heads_match_closed_forms():
    with mp.workdps(50):
        for P5, _, _ in _draws():
            P = CglParams(d_r=P5.d_r, d_i=P5.d_i, g_r=P5.g_r, g_i=P5.g_i, csi=P5.csi)
            for lead in leading_orders(P, "cgl3"):
                fam = expand_pole_family(P, lead, 6)
                m0 = lead.m0
                assert fam.valuation_M == -2
                assert _rel(fam.coefficients_M[1], m0 * P.csi / 3) < 1e-12
                assert _rel(fam.coefficients_psi[0], P.d_i * m0 / 3) < 1e-12
                assert _rel(fam.coefficients_psi[1], P.d_i * m0 / 3 * P.csi / 6) < 1e-12


@pytest.mark.parametrize("j", [1j, -1j])
def test_zero_family_heads_match_closed_forms(j):
    j = mpc(j)
    with mp.workdps(50):
        for P, a0, a1 in _draws():
            csi, gr, gi, dr, di = P.csi, P.g_r, P.g_i, P.d_r, P.d_i
            fam = expand_zero_family(P, j, a0, a1, 6)
            val, inv = fam.inverse_M()
            assert val == -1
            # 1/M = (1/a0) chi^-1 [1 + a1 chi + c2 chi^2 + ...]; c2 carries csi^2/3,
            # confirmed at the zeros of the closed-form elliptic solution
            c2 = a1**2 + csi * a1 + csi**2 / 3 - j * gr / 3 + 2 * gi / 3
            for got, want in zip(inv, (1, a1, c2)):
                assert _rel(got * a0, want) < 1e-12
            psi = fam.coefficients_psi
            assert _rel(psi[0], j / 2) < 1e-12
            assert _rel(psi[1], j / 2 * (csi + a1)) < 1e-12
            assert _rel(psi[2], j / 2 * (a1**2 + 2 * csi * a1 + 2 * gi / 3 - 4 * j * gr / 3
                                         + 5 * csi**2 / 6)) < 1e-12
            # the braced chi^2 term stands outside the (j/2)[...] bracket
            braces = ((gr + j * gi) * csi + 3 * j * csi**3 / 4 - (3 * di - j * dr) * a0 / 4
                      + (11 * j * csi**2 + 4 * gr + 4 * j * gi) * a1 / 4
                      + 3 * j * csi * a1**2 + j * a1**3)
            assert _rel(psi[3], braces / 2) < 1e-12


def test_deep_coefficients_satisfy_the_system_by_substitution():
    with mp.workdps(50):
        for P, a0, a1 in _draws(seed=11):
            fams = [expand_pole_family(P, L, 24) for L in leading_orders(P, "cgl5")]
            P3 = CglParams(d_r=P.d_r, d_i=P.d_i, g_r=P.g_r, g_i=P.g_i, csi=P.csi)
            fams += [expand_pole_family(P3, L, 24) for L in leading_orders(P3, "cgl3")]
            fams += [expand_zero_family(P, j, a0, a1, 24) for j in (1j, -1j)]
            for fam in fams:
                assert series_substitute_residual(P3 if fam.equation == "cgl3" else P, fam) < 1e-25


def test_substitution_detects_a_corrupted_coefficient():
    with mp.workdps(50):
        P = CglParams(e_r=0.2, e_i=1.3, d_r=-0.4, d_i=0.6, g_r=0.9, g_i=-0.3, csi=0.5)
        fam = expand_pole_family(P, leading_orders(P)[0], 12)
        fam.coefficients_M[7] *= 1 + mpf(10) ** -20
        assert series_substitute_residual(P, fam) > 1e-30


def test_family_counts():
    P = CglParams(e_r=0.2, e_i=1.3, d_r=-0.4, d_i=0.6, g_r=0.9, g_i=-0.3, csi=0.5)
    assert len(leading_orders(P, "cgl5")) == 4
    assert len(leading_orders(CglParams(d_r=0.3, d_i=1.0), "cgl3")) == 2


def test_fuchs_indices_are_roots_of_the_determinant():
    with mp.workdps(40):
        for P, _, _ in _draws(5):
            for lead in leading_orders(P, "cgl5"):
                rad = mpmath.sqrt(1 - 32 * lead.alpha**2)
                assert lead.fuchs_indices[2:] == ((5 + rad) / 2, (5 - rad) / 2)
                # the determinant is cubic in n; recover it by interpolation
                ns = [0, 1, 2, 3]
                vals = [fuchs_determinant(P, lead, n) for n in ns]
                coeffs = mpmath.matrix([[mpf(n) ** k for k in range(3, -1, -1)] for n in ns]) ** -1 \
                    * mpmath.matrix(vals)
                roots = mpmath.polyroots(list(coeffs), extraprec=40)
                for want in (mpc(-1), (5 - rad) / 2, (5 + rad) / 2):
                    assert min(abs(r - want) for r in roots) < 1e-12
            P3 = CglParams(d_r=P.d_r, d_i=P.d_i, g_r=P.g_r, g_i=P.g_i, csi=P.csi)
            for lead in leading_orders(P3, "cgl3"):
                rad = mpmath.sqrt(1 - 24 * lead.alpha**2)
                for n in (-1, (7 + rad) / 2, (7 - rad) / 2):
                    scale = abs(fuchs_determinant(P3, lead, n + 10))
                    assert abs(fuchs_determinant(P3, lead, n)) < 1e-12 * scale


def test_leading_balance_on_the_slice():
    with mp.workdps(30):
        P = CglParams(e_i=mpf(2), g_r=mpf(36), g_i=mpf(-9), csi=mpmath.sqrt(48))
        for lead in leading_orders(P):
            assert abs(lead.m0**4 - mpf(3) / 4) < mpf(10) ** -25


def test_series_arithmetic_against_known_expansions():
    with mp.workdps(30):
        exp = [1 / mpmath.factorial(k) for k in range(10)]
        geo = [mpf(1)] * 10
        one_minus = [mpf(1), mpf(-1)] + [mpf(0)] * 8
        assert max(abs(a - b) for a, b in zip(series_div([mpf(1)] + [0] * 9, one_minus), geo)) < 1e-28
        sq = series_mul(exp, exp)
        assert max(abs(sq[k] - mpf(2) ** k / mpmath.factorial(k)) for k in range(10)) < 1e-28
        d = series_deriv(exp, 0)
        assert max(abs(d[k + 1] - exp[k]) for k in range(9)) < 1e-28


def test_records_round_trip_at_working_precision():
    with mp.workdps(50):
        P = CglParams(e_r=0.2, e_i=1.3, d_r=-0.4, d_i=0.6, g_r=0.9, g_i=-0.3, csi=0.5)
        fam = expand_pole_family(P, leading_orders(P)[0], 8)
        recs = to_records(fam.coefficients_M, fam.valuation_M)
        assert [r["power"] for r in recs] == list(range(-1, 7))
        for r, c in zip(recs, fam.coefficients_M):
            assert abs(mpc(mpf(r["re"]), mpf(r["im"])) - c) <= mpf(10) ** -45 * max(1, abs(c))


def test_invalid_inputs_are_rejected():
    P = CglParams(e_r=0.2, e_i=1.3, d_r=-0.4, d_i=0.6, g_r=0.9, g_i=-0.3, csi=0.5)
    with pytest.raises(DegenerateLeading):
        leading_orders(CglParams(g_r=1.0), "cgl5")
    with pytest.raises(InvalidFreeConstant):
        expand_zero_family(P, 1.0, 1, 0, 6)
    with pytest.raises(InvalidFreeConstant):
        expand_zero_family(P, 1j, 0, 0, 6)
    with pytest.raises(InvalidFreeConstant):
        expand_zero_family(CglParams(e_i=1.0), 1j, 1, 0.5, 6)
    with pytest.raises(InsufficientTerms):
        expand_pole_family(P, leading_orders(P)[0], 1)
    with pytest.raises(ValueError):
        leading_orders(P, "cgl7")


def test_worked_quintic_leading_orders():
    # purely imaginary quintic ratio: alpha = +-sqrt(3)/2, m0^2 = alpha and
    # 1 - 32 alpha^2 = -23 gives complex Fuchs indices (5 +- i sqrt(23))/2
    with mp.workdps(30):
        leads = leading_orders(CglParams(e_r=mpf(0), e_i=mpf(2)), "cgl5")
        h = mpmath.sqrt(3) / 2
        assert sorted(float(L.alpha) for L in leads) == pytest.approx([-h, -h, h, h], abs=1e-15)
        for L in leads:
            assert abs(L.m0**2 - L.alpha) < 1e-25
            want = {(5 + 1j * mpmath.sqrt(23)) / 2, (5 - 1j * mpmath.sqrt(23)) / 2}
            assert all(min(abs(r - w) for w in want) < 1e-25 for r in L.fuchs_indices[2:])
            assert L.fuchs_indices[:2] == (-1, 0)


def test_worked_cubic_leading_orders():
    # purely imaginary cubic ratio: alpha^2 = 2 and m0 = 3 alpha on each branch
    with mp.workdps(30):
        leads = leading_orders(CglParams(d_r=mpf(0), d_i=mpf(1)), "cgl3")
        assert sorted(float(L.alpha) for L in leads) == pytest.approx([-2**0.5, 2**0.5], abs=1e-15)
        for L in leads:
            assert abs(L.m0 - 3 * L.alpha) < 1e-25
            rad = 1j * mpmath.sqrt(47)
            assert min(abs(L.fuchs_indices[2] - (7 + s * rad) / 2) for s in (1, -1)) < 1e-25
