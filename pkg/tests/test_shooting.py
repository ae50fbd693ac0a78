import itertools

import numpy as np
import pytest
from scipy.integrate import quad, solve_ivp

from mhd_evans.contour import build_semicircle
from mhd_evans.kato import kato_init
from mhd_evans.params import PhysicalParams
from mhd_evans.profile import compute_profile
from mhd_evans.shooting import (EvansFunction, evans_eval, polar_factor, polar_integrate)
from mhd_evans.system import coefficient_matrix, limit_matrix

PAIRS = list(itertools.combinations(range(4), 2))


def wedge2(a, b):
    return np.array([a[i] * b[j] - a[j] * b[i] for i, j in PAIRS])


def second_compound(A):
    E = np.eye(4)
    return np.column_stack([wedge2(A @ E[i], E[j]) + wedge2(E[i], A @ E[j]) for i, j in PAIRS])


def pairing(p, q):
    """det[a b c d] from the Plucker vectors of (a, b) and (c, d)."""
    total = 0.0
    for (i, j), x in zip(PAIRS, p):
        k, l = [m for m in range(4) if m not in (i, j)]
        perm = [i, j, k, l]
        sign = np.linalg.det(np.eye(4)[perm])
        total = total + sign * x * q[PAIRS.index((k, l))]
    return total


def compound_evans(lam, params, profile, fp, fm):
    """Independent D: integrate the wedges in the 6-dimensional exterior system."""
    out = []
    for fr, x_end in ((fp, float(profile.grid[-1])), (fm, float(profile.grid[0]))):
        s = fr.eigensum
        rhs = lambda x, z: (second_compound(coefficient_matrix(float(profile(x)), lam, params)) - s * np.eye(6)) @ z
        sol = solve_ivp(rhs, (x_end, 0.0), wedge2(fr.basis[:, 0], fr.basis[:, 1]), method="DOP853",
                        rtol=1e-11, atol=1e-13)
        out.append(sol.y[:, -1])
    return pairing(out[0], out[1])


@pytest.fixture(scope="module")
def mid():
    p = PhysicalParams(v_plus=0.3, b1=0.7, mu0=1.2, sigma=0.8)
    return p, compute_profile(p)


def test_against_compound_system(mid):
    p, prof = mid
    ev = EvansFunction(p, profile=prof)
    for lam in (1.0, 0.4 + 1.5j, 2.5 - 0.5j):
        fp, fm = ev.frames_at(lam)
        ref = compound_evans(lam, p, prof, fp, fm)
        assert abs(ev(lam).d_raw - ref) / abs(ref) < 1e-5


def test_constant_coefficient_slope():
    p = PhysicalParams(v_plus=0.2, b1=1.1)
    prof = compute_profile(p)
    lam = 0.8 + 0.6j
    fr = kato_init("plus", lam, p)
    x0, x1 = prof.l_plus + 40.0, prof.l_plus + 10.0
    st = polar_integrate(fr.basis, x0, x1, lam, p, prof)
    _, lr0 = polar_factor(fr.basis)
    slope = (st.log_rho - lr0) / (x1 - x0)
    eig = np.linalg.eigvals(limit_matrix("plus", lam, p))
    assert abs(slope - np.sum(eig[eig.real < 0])) < 1e-7
    # span unchanged: projection of the final frame onto the initial span
    Q, _ = np.linalg.qr(fr.basis)
    assert np.linalg.norm(st.omega - Q @ (Q.conj().T @ st.omega)) < 1e-7


def test_zero_length_integration(mid):
    p, prof = mid
    R = np.array([[1, 0.2j], [0.3, 1], [0, -0.5], [2, 0.1]], dtype=complex)
    st = polar_integrate(R, 1.5, 1.5, 0.7, p, prof)
    np.testing.assert_allclose(st.omega.conj().T @ st.omega, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(st.wedge(), wedge2(R[:, 0], R[:, 1]), atol=1e-14)
    assert st.log_rho.real == pytest.approx(np.log(np.linalg.norm(wedge2(R[:, 0], R[:, 1]))))


def test_tolerance_refinement(base_evans, base_params, base_profile):
    tight = EvansFunction(base_params, profile=base_profile, anchor=4.5, integ_tol=(5e-7, 5e-9))
    rng = np.random.default_rng(5)
    pts = build_semicircle(4.5, 120).upper().points
    for lam in rng.choice(pts[:-1], 20, replace=False):
        a, b = base_evans(lam).d_raw, tight(lam).d_raw
        assert abs(a - b) / abs(b) < 1e-3


def test_conjugate_symmetry(base_evans):
    rng = np.random.default_rng(8)
    for _ in range(20):
        lam = complex(rng.uniform(0, 4), rng.uniform(0.05, 4))
        a, b = base_evans(lam), base_evans(np.conj(lam))
        for name in a.VARIANTS:
            za, zb = a.variant(name), b.variant(name)
            assert abs(np.conj(za) - zb) <= 1e-8 * abs(za)


def test_real_on_real_axis(base_evans):
    for lam in (0.05, 1.0, 4.5):
        v = base_evans(lam)
        assert v.d_raw != 0
        for name in v.VARIANTS:
            z = v.variant(name)
            assert abs(z.imag) <= 1e-10 * abs(z)


def test_prefactors_trivial_at_one(base_evans):
    v = base_evans(1.0)
    assert v.d_check == pytest.approx(v.d_raw, rel=1e-14)
    assert v.d_hat == pytest.approx(v.d_raw, rel=1e-14)
    assert v.d_tilde == pytest.approx(v.d_raw, rel=1e-14)


def test_unit_modulus_bound(base_evans):
    for lam in (0.01, 1 + 1j, 3j, 4.5):
        assert 0 < abs(base_evans(lam).d_unit) <= 1 + 1e-12


def test_translation_law(mid):
    # translating the profile by s multiplies D by exp(s (Sigma_+ + Sigma_-)) exp(-int_{-s}^0 tr A)
    p, prof = mid
    s = 1.0
    a = EvansFunction(p, profile=prof)
    b = EvansFunction(p, profile=prof.translated(s))
    tr = lambda x: float(prof(x)) / p.mu + p.sigma * p.mu0 * float(prof(x)) ** 2
    abel = np.exp(-quad(tr, -s, 0.0, epsabs=1e-13)[0])
    for lam in (1.0, 0.5 + 2j, 3 - 1j, 0.1j):
        fp, fm = a.frames_at(lam)
        pred = np.exp(s * (fp.eigensum + fm.eigensum)) * abel
        assert abs(b(lam).d_raw / a(lam).d_raw / pred - 1) < 1e-6


def test_truncation_independence():
    p = PhysicalParams(v_plus=0.3, b1=0.7)
    short = compute_profile(p)
    long = compute_profile(p, l_init=35.0)
    assert long.l_plus > short.l_plus
    for lam in (1.0, 0.3 + 1j):
        a = EvansFunction(p, profile=short)(lam).d_raw
        b = EvansFunction(p, profile=long)(lam).d_raw
        assert abs(a - b) / abs(b) < 1e-3


def test_endpoint_signs_agree(base_evans):
    # a zero-free semicircle has D of one sign at both real endpoints
    lo, hi = base_evans(4.5e-6).d_raw, base_evans(4.5).d_raw
    assert np.sign(lo.real) == np.sign(hi.real)


def test_small_amplitude_nearly_constant():
    p = PhysicalParams(v_plus=0.99, b1=0.0)
    prof = compute_profile(p, l_cap=2000.0)
    ev = EvansFunction(p, profile=prof, anchor=1.05)
    pts = [z if z != 0 else 1e-6 for z in build_semicircle(1.05).upper().points]
    d = np.array([v.d_raw for v in ev.along(pts)])
    assert np.max(np.abs(d / d[0] - 1)) < 0.1


def test_single_eval_matches_along(base_evans):
    path = [4.5, 3 + 3j, 1j]
    along = base_evans.along(path)
    for lam, v in zip(path, along):
        w = evans_eval(lam, base_evans.params, base_evans.profile, base_evans.frames_at(lam))
        assert abs(w.d_raw - v.d_raw) <= 1e-12 * abs(v.d_raw)
