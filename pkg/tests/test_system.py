import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from mhd_evans.params import PhysicalParams
from mhd_evans.profile import compute_profile
from mhd_evans.system import (SplitFailure, assemble, branch_points, char_poly_plus, coefficient_dlambda,
                              limit_decomposition, limit_matrix, spectral_split)


def _derived_template():
    """First-order matrix re-derived from the second-order eigenvalue equations.

    Unknowns: W = (w, mu w', alpha, alpha' / (sigma mu0 v)).
    """
    lam, v, mu, mu0, sig, B = sp.symbols("lam v mu mu0 sigma B")
    W1, W2, W3, W4 = sp.symbols("W1:5")
    w_p = W2 / mu
    a_p = sig * mu0 * v * W4
    # lam w + w' - B alpha' / (mu0 v) = mu w'' / v, with (mu w')' = W2'
    dW2 = sp.solve(sp.Eq(lam * W1 + w_p - B * a_p / (mu0 * v), sp.Symbol("D2") / v), sp.Symbol("D2"))[0]
    # lam alpha + alpha' - B w' = (alpha'/v)' / (sigma mu0 v), with (alpha'/v)' = sigma mu0 W4'
    dW4 = sp.solve(sp.Eq(lam * W3 + a_p - B * w_p, sig * mu0 * sp.Symbol("D4") / (sig * mu0 * v)),
                   sp.Symbol("D4"))[0]
    rhs = sp.Matrix([w_p, dW2, a_p, dW4])
    A = rhs.jacobian([W1, W2, W3, W4])
    return sp.lambdify((lam, v, mu, mu0, sig, B), A, "numpy")


TEMPLATE = _derived_template()


@pytest.fixture(scope="module")
def prof():
    return compute_profile(PhysicalParams(v_plus=0.3, b1=0.7, mu0=1.3, sigma=0.6))


def test_matches_derived_template(prof):
    p = prof.params
    rng = np.random.default_rng(3)
    for _ in range(20):
        lam = complex(rng.normal(0, 3), rng.normal(0, 3))
        x = rng.uniform(-15, 15)
        v = float(prof(x))
        ref = np.array(TEMPLATE(lam, v, p.mu, p.mu0, p.sigma, p.b1), dtype=complex)
        np.testing.assert_allclose(assemble(x, lam, p, prof).entries, ref, rtol=1e-14, atol=1e-14)


def test_constant_solutions_at_zero(prof):
    for x in (-3.0, 0.0, 2.5):
        A = assemble(x, 0.0, prof.params, prof).entries
        assert np.all(A[:, 0] == 0) and np.all(A[:, 2] == 0)


def test_sparsity(prof):
    A = assemble(0.4, 1.3 - 0.2j, prof.params, prof).entries
    np.testing.assert_array_equal(A[0], [0, 1 / prof.params.mu, 0, 0])
    for i, j in [(0, 2), (0, 3), (2, 0), (2, 1), (3, 0)]:
        assert A[i, j] == 0


def test_clamps_to_endstates(prof):
    lam = 0.7 + 1.1j
    np.testing.assert_array_equal(assemble(prof.l_plus + 10, lam, prof.params, prof).entries,
                                  limit_matrix("plus", lam, prof.params))
    np.testing.assert_array_equal(assemble(-prof.l_minus - 10, lam, prof.params, prof).entries,
                                  limit_matrix("minus", lam, prof.params))


def test_dlambda_is_derivative():
    p = PhysicalParams(v_plus=0.2, b1=1.1)
    h = 1e-6
    fd = (limit_matrix("plus", 1 + h, p) - limit_matrix("plus", 1 - h, p)) / (2 * h)
    np.testing.assert_allclose(coefficient_dlambda(p.v_plus), fd, atol=1e-9)


def test_decoupled_blocks_without_field():
    A = limit_matrix("minus", 1.0, PhysicalParams(b1=0.0))
    assert A[1, 3] == 0 and A[3, 1] == 0
    assert np.all(A[:2, 2:] == 0) and np.all(A[2:, :2] == 0)


def test_two_two_split_at_one():
    d = limit_decomposition(1.0, PhysicalParams(v_plus=0.4, b1=0.9))
    for split in (d.stable_plus, d.unstable_minus):
        assert np.sum(split.eigenvalues.real < 0) == 2
        assert np.sum(split.eigenvalues.real > 0) == 2
    assert np.all(d.stable_plus.values.real < 0)
    assert np.all(d.unstable_minus.values.real > 0)


def test_eigenvectors_canonical():
    d = spectral_split(limit_matrix("plus", 2 + 1j, PhysicalParams(v_plus=0.4, b1=0.9)), "plus")
    A = limit_matrix("plus", 2 + 1j, PhysicalParams(v_plus=0.4, b1=0.9))
    for j in range(2):
        r = d.vectors[:, j]
        assert np.linalg.norm(r) == pytest.approx(1.0)
        first = r[np.flatnonzero(np.abs(r) > 1e-12)[0]]
        assert first.imag == pytest.approx(0.0, abs=1e-15) and first.real > 0
        np.testing.assert_allclose(A @ r, d.values[j] * r, atol=1e-12)


def test_zero_field_quadratic_roots():
    p = PhysicalParams(v_plus=0.5, b1=0.0, mu0=1.0, sigma=1.0)
    lam, vp, sm = 1.0, 0.5, 1.0
    roots = np.concatenate([np.roots([1, -vp, -lam * vp]), np.roots([1, -sm * vp ** 2, -lam * sm * vp ** 2])])
    eig = np.linalg.eigvals(limit_matrix("plus", lam, p))
    np.testing.assert_allclose(np.sort_complex(eig), np.sort_complex(roots.astype(complex)), atol=1e-13)
    stable = spectral_split(limit_matrix("plus", lam, p), "plus").values
    np.testing.assert_allclose(np.sort(stable.real), np.sort(roots[roots < 0]), atol=1e-13)


def test_real_lambda_conjugate_closed():
    eig = spectral_split(limit_matrix("plus", 0.8, PhysicalParams(v_plus=0.02, b1=2.5, sigma=3)), "plus").eigenvalues
    np.testing.assert_allclose(np.sort_complex(eig), np.sort_complex(np.conj(eig)), atol=1e-13)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0, 4), st.floats(0.1, 4), st.floats(0.1, 4),
       st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5))
def test_char_poly_identity(vp, b, mu0, sigma, lr, li, ar, ai):
    p = PhysicalParams(v_plus=vp, b1=b, mu0=mu0, sigma=sigma)
    lam, alpha = complex(lr, li), complex(ar, ai)
    det = np.linalg.det(limit_matrix("plus", lam, p) - alpha * np.eye(4))
    ref = char_poly_plus(alpha, lam, p)
    scale = max(abs(alpha) ** 4, 1.0) * max(1.0, abs(lam)) ** 2 * max(1.0, sigma * mu0, sigma * b * b) ** 2
    assert abs(det - ref) <= 1e-12 * scale


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(0, 4), st.floats(-5, 5), st.floats(-5, 5))
def test_limit_matrix_conjugation(vp, b, lr, li):
    p = PhysicalParams(v_plus=vp, b1=b)
    lam = complex(lr, li)
    for side in ("plus", "minus"):
        np.testing.assert_array_equal(limit_matrix(side, np.conj(lam), p), np.conj(limit_matrix(side, lam, p)))


def test_hyperbolic_split_random():
    rng = np.random.default_rng(11)
    n = 0
    while n < 200:
        vp, b = rng.uniform(1e-3, 0.9), rng.uniform(0, 4)
        mu0, sigma = rng.uniform(0.1, 4), rng.uniform(0.1, 4)
        if min(abs(b - np.sqrt(mu0 * vp)), abs(b - np.sqrt(mu0))) < 0.05:
            continue
        r = 10 ** rng.uniform(-3, 3)
        lam = r * np.exp(1j * rng.uniform(-np.pi / 2, np.pi / 2))
        d = limit_decomposition(lam, PhysicalParams(v_plus=vp, b1=b, mu0=mu0, sigma=sigma))
        assert len(d.stable_plus.values) == 2 and len(d.unstable_minus.values) == 2
        n += 1


def test_split_failure_at_origin():
    p = PhysicalParams(v_plus=0.25, b1=0.5)
    with pytest.raises(SplitFailure) as info:
        limit_decomposition(0.0, p)
    assert info.value.lam == 0.0


def test_branch_points_are_double_eigenvalues():
    p = PhysicalParams(v_plus=1e-4, b1=0.5)
    pts = branch_points(p, "plus")
    assert len(pts) == 4
    assert np.all(np.abs(pts) < 1e-3) and np.all(pts != 0)
    for lam in pts:
        eig = np.linalg.eigvals(limit_matrix("plus", lam, p))
        gaps = np.abs(eig[:, None] - eig[None, :]) + np.eye(4)
        # a double eigenvalue splits like the square root of the rounding error
        assert gaps.min() < 1e-6 * np.abs(eig).max()
    np.testing.assert_allclose(np.sort_complex(pts), np.sort_complex(np.conj(pts)), atol=1e-15)


def test_no_branch_points_near_origin_for_unit_endstate():
    pts = branch_points(PhysicalParams(b1=0.5), "minus")
    assert np.all(np.abs(pts) > 1e-2)
