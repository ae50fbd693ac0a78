import numpy as np
import pytest

from mhd_evans.contour import build_semicircle
from mhd_evans.kato import (FrameCache, StepTooLarge, evans_family, kato_advance, kato_along_contour, kato_at,
                            kato_init, kato_step, model_family, projector_and_derivative, quarter_root_factor,
                            regularized_product, regularized_wedge)
from mhd_evans.params import PhysicalParams


def exact_model_vector(lam, eta):
    """Transported stable eigenvector of [[0, 1], [lam, eta]], equal to (1, mu(1)) at lam = 1."""
    d = eta * eta / 4
    mu = eta / 2 - np.sqrt(d + lam)
    return (d + 1) ** 0.25 / (d + lam) ** 0.25 * np.array([1.0, mu])


def _model_error(eta, n_steps, controlled=False):
    fam = model_family(eta)
    frame = kato_init(fam, 1.0)
    c = exact_model_vector(1.0, eta)[0] / frame.basis[0, 0]
    lams = np.linspace(1.0, 0.25, n_steps + 1)
    err = 0.0
    for lam in lams[1:]:
        frame = kato_advance(frame, fam, lam) if controlled else kato_step(frame, fam, lam)
        ref = exact_model_vector(lam, eta)
        err = max(err, np.linalg.norm(c * frame.basis[:, 0] - ref) / np.linalg.norm(ref))
    return err


def test_oracle_is_an_eigenvector():
    for eta in (-1.0, 0.0, 1.0):
        r = exact_model_vector(0.4, eta)
        A = np.array([[0, 1], [0.4, eta]])
        mu = eta / 2 - np.sqrt(eta ** 2 / 4 + 0.4)
        np.testing.assert_allclose(A @ r, mu * r, atol=1e-14)


@pytest.mark.parametrize("eta", [-1.0, -0.1, 0.0, 0.1, 1.0])
def test_model_oracle_fixed_steps(eta):
    assert _model_error(eta, 100) < 1e-6


@pytest.mark.parametrize("eta", [-1.0, 0.0, 1.0])
def test_model_oracle_controlled(eta):
    assert _model_error(eta, 3, controlled=True) < 1e-9


def test_model_step_convergence():
    # the stepper is fourth order, so halving the step gains well over a factor 4
    e1, e2 = _model_error(0.0, 10), _model_error(0.0, 20)
    assert e1 / e2 >= 4.0


@pytest.mark.parametrize("lam0", [1.0, 10.0, 2 + 3j])
def test_init_in_range_and_rank(lam0):
    p = PhysicalParams(v_plus=0.05, b1=1.3, mu0=0.7, sigma=2.0)
    for side in ("plus", "minus"):
        fr = kato_init(side, lam0, p)
        assert np.linalg.norm(fr.proj @ fr.basis - fr.basis) < 1e-12
        assert np.linalg.matrix_rank(fr.basis) == 2
        np.testing.assert_allclose(fr.basis.conj().T @ fr.basis, np.eye(2), atol=1e-13)


def test_projector_derivative_matches_difference():
    p = PhysicalParams(v_plus=0.1, b1=0.8)
    lam, h = 0.7 + 0.4j, 1e-6
    for side in ("plus", "minus"):
        fam = evans_family(side, p)
        _, dP = projector_and_derivative(fam, lam)
        Pp, _ = projector_and_derivative(fam, lam + h)
        Pm, _ = projector_and_derivative(fam, lam - h)
        np.testing.assert_allclose(dP, (Pp - Pm) / (2 * h), atol=1e-7)


def test_projector_identical_blocks():
    # at B = 0 with sigma mu0 = mu = 1 on the minus side the two blocks coincide
    p = PhysicalParams(b1=0.0)
    P, dP = projector_and_derivative(evans_family("minus", p), 1.3)
    assert np.linalg.norm(P @ P - P) < 1e-12
    assert np.linalg.matrix_rank(P, 1e-8) == 2


def test_zero_length_step():
    p = PhysicalParams(v_plus=0.3, b1=0.2)
    fr = kato_init("plus", 1.0, p)
    assert kato_step(fr, evans_family("plus", p), 1.0) is fr
    assert kato_advance(fr, "plus", 1.0, params=p) is fr


def test_closed_loop_returns():
    p = PhysicalParams(v_plus=0.1, b1=1.5)
    loop = 2.0 + 1.0 * np.exp(1j * np.linspace(np.pi, 3 * np.pi, 61))
    for side in ("plus", "minus"):
        frames = kato_along_contour(side, loop, p)
        assert np.linalg.norm(frames[-1].basis - frames[0].basis) < 1e-6


def test_conjugate_half_contour():
    p = PhysicalParams(v_plus=1e-2, b1=2.0)
    upper = build_semicircle(4.5, 120).upper().points[:-1]
    for side in ("plus", "minus"):
        fr_up = kato_along_contour(side, upper, p)
        fr_dn = kato_along_contour(side, np.conj(upper), p)
        for a, b in zip(fr_up, fr_dn):
            assert np.max(np.abs(np.conj(a.basis) - b.basis)) < 1e-8


def test_single_point_contour():
    p = PhysicalParams(v_plus=0.2)
    frames = kato_along_contour("minus", [3.0], p)
    assert len(frames) == 1
    np.testing.assert_allclose(frames[0].basis, kato_init("minus", 3.0, p).basis, atol=1e-15)


def test_jump_substeps_on_radius_ten():
    # error control off: only projector jumps force a step to be split
    p = PhysicalParams()
    pts = build_semicircle(10.0, 120).points
    for side in ("plus", "minus"):
        fam = evans_family(side, p)
        fr = kato_init(fam, pts[0])
        worst = 0
        for z in pts[1:]:
            fr, n = kato_advance(fr, fam, z, tol=np.inf, count=True)
            worst = max(worst, n)
        assert worst <= 8


def test_large_step_rejected():
    fam = model_family(0.0)
    fr = kato_init(fam, 1.0)
    with pytest.raises(StepTooLarge):
        kato_step(fr, fam, -1.0 + 1e-3j)


def test_rank_and_range_on_acceptance_contour():
    p = PhysicalParams(v_plus=1e-2, b1=2.0)
    pts = build_semicircle(4.5, 120).upper().points[:-1]
    for side in ("plus", "minus"):
        for fr in kato_along_contour(side, pts, p):
            s = np.linalg.svd(fr.basis, compute_uv=False)
            assert s[1] / s[0] > 1e-6
            assert np.linalg.norm(fr.proj @ fr.basis - fr.basis) / np.linalg.norm(fr.basis) < 1e-6


def test_frame_cache_path_independent():
    p = PhysicalParams(v_plus=0.05, b1=0.4)
    cache = FrameCache(evans_family("plus", p), 1.0)
    cache.along([1 + 1j, 2j, 0.5 + 3j])
    direct = kato_at("plus", 0.5 + 3j, p)
    np.testing.assert_allclose(cache.at(0.5 + 3j).basis, direct.basis, atol=1e-9)


def test_prefactor_unity_at_one():
    p = PhysicalParams(v_plus=0.2, b1=0.6)
    fr = kato_init("plus", 1.0, p)
    rw = regularized_wedge(fr, "plus", p)
    assert rw.prefactor == pytest.approx(1.0, abs=1e-15)
    np.testing.assert_array_equal(rw.regularized, rw.wedge)
    reg = regularized_product(1.0, p)
    assert reg.check == pytest.approx(1.0) and reg.hat == pytest.approx(1.0)


def _wedge_series(b, vp=0.25):
    p = PhysicalParams(v_plus=vp, b1=b)
    lams = [10.0 ** -k for k in range(0, 9)]
    frames = kato_along_contour("plus", lams, p, anchor=1.0)
    out = [regularized_wedge(f, "plus", p) for f in frames]
    return np.array(lams), np.array([np.linalg.norm(r.wedge) for r in out]), \
        np.array([np.linalg.norm(r.regularized) for r in out])


def test_wedge_blowup_at_characteristic_point():
    # B1* = sqrt(mu0 v_+) = 0.5
    lams, w, reg = _wedge_series(0.5)
    slope = np.polyfit(np.log(lams[4:]), np.log(w[4:]), 1)[0]
    assert slope == pytest.approx(-0.25, abs=0.02)
    assert 0.5 < reg.min() and reg.max() < 2.0


def test_wedge_bounded_away_from_characteristic_point():
    lams, w, reg = _wedge_series(0.1)
    assert w.max() < 10 and reg.max() < 10
    assert w.min() > 0.1 and reg.min() > 0.1


def test_prefactor_formula():
    p = PhysicalParams(v_plus=0.3, b1=0.9, mu0=1.2, sigma=0.7)
    lam = 0.3 + 2j
    c = p.mu / (2 * p.v_plus) + 1 / (2 * p.sigma * p.mu0 * p.v_plus ** 2)
    a = (1 - p.b1 / np.sqrt(p.mu0 * p.v_plus)) ** 2
    ref = (a + 4 * lam * c) ** 0.25 / (a + 4 * c) ** 0.25
    assert quarter_root_factor(lam, p.v_plus, p) == pytest.approx(ref, rel=1e-14)
