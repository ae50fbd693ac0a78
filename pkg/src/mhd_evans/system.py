"""First-order Evans system ``W' = A(x, lambda) W`` and its limits at +-infinity.

Coordinates are ``W = (w, mu w', alpha, alpha' / (sigma mu0 v))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import PhysicalParams

SPLIT_TOL = 1e-10


class SplitFailure(ArithmeticError):
    """Eigenvalues of a limiting matrix sit on (or too near) the imaginary axis."""

    def __init__(self, msg, lam=None):
        super().__init__(msg)
        self.lam = lam


def coefficient_matrix(v, lam, params: PhysicalParams) -> np.ndarray:
    """``A`` evaluated at profile value ``v`` (a scalar)."""
    mu, sig, mu0, b = params.mu, params.sigma, params.mu0, params.b1
    A = np.zeros((4, 4), dtype=complex)
    A[0, 1] = 1.0 / mu
    A[1, 0] = lam * v
    A[1, 1] = v / mu
    A[1, 3] = -sig * b * v
    A[2, 3] = sig * mu0 * v
    A[3, 1] = -b * v / mu
    A[3, 2] = lam * v
    A[3, 3] = sig * mu0 * v * v
    return A


def coefficient_dlambda(v) -> np.ndarray:
    """``dA/dlambda``; ``A`` is affine in ``lambda``."""
    dA = np.zeros((4, 4), dtype=complex)
    dA[1, 0] = v
    dA[3, 2] = v
    return dA


@dataclass(frozen=True)
class EvansMatrix:
    entries: np.ndarray
    x: float
    lam: complex


def assemble(x: float, lam: complex, params: PhysicalParams, profile) -> EvansMatrix:
    return EvansMatrix(coefficient_matrix(float(profile(x)), lam, params), x, complex(lam))


def endstate(side: str, params: PhysicalParams) -> float:
    if side == "plus":
        return params.v_plus
    if side == "minus":
        return params.v_minus
    raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")


def limit_matrix(side: str, lam: complex, params: PhysicalParams) -> np.ndarray:
    return coefficient_matrix(endstate(side, params), lam, params)


def char_poly_plus(alpha, lam, params: PhysicalParams):
    """Closed form of ``det(A_+ - alpha I)``."""
    vp, sm = params.v_plus, params.sigma * params.mu0
    return ((alpha ** 2 - vp * alpha - lam * vp) * (alpha ** 2 - sm * vp ** 2 * alpha - lam * sm * vp ** 2)
            - params.sigma * params.b1 ** 2 * vp ** 2 * alpha ** 2)


@dataclass(frozen=True)
class SplitData:
    """Eigen-data of one limiting matrix.

    ``eigenvalues`` are all four, sorted by real part; ``values``/``vectors``
    are the selected pair (stable for ``plus``, unstable for ``minus``).
    """

    side: str
    eigenvalues: np.ndarray
    values: np.ndarray
    vectors: np.ndarray


def canonical_phase(vec: np.ndarray) -> np.ndarray:
    """Scale to unit length with the first non-negligible coordinate real positive."""
    vec = vec / np.linalg.norm(vec)
    idx = np.flatnonzero(np.abs(vec) > 1e-12 * np.abs(vec).max())[0]
    return vec * (abs(vec[idx]) / vec[idx])


def spectral_split(matrix: np.ndarray, side: str, tol: float = SPLIT_TOL, lam=None) -> SplitData:
    vals, vecs = np.linalg.eig(matrix)
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    gap = np.min(np.abs(vals.real))
    if gap < tol:
        raise SplitFailure(f"eigenvalue real part {gap:.3g} below split tolerance {tol:g}", lam)
    n_neg = int(np.sum(vals.real < 0))
    if n_neg != matrix.shape[0] // 2:
        raise SplitFailure(f"expected a {matrix.shape[0] // 2}/{matrix.shape[0] // 2} split, "
                           f"found {n_neg} stable eigenvalues", lam)
    k = matrix.shape[0] // 2
    sel = slice(0, k) if side == "plus" else slice(k, None)
    vectors = np.column_stack([canonical_phase(vecs[:, j]) for j in range(len(vals))[sel]])
    return SplitData(side, vals, vals[sel], vectors)


@dataclass(frozen=True)
class LimitDecomposition:
    a_plus: np.ndarray
    a_minus: np.ndarray
    stable_plus: SplitData
    unstable_minus: SplitData


def limit_decomposition(lam: complex, params: PhysicalParams, tol: float = SPLIT_TOL) -> LimitDecomposition:
    ap = limit_matrix("plus", lam, params)
    am = limit_matrix("minus", lam, params)
    return LimitDecomposition(ap, am, spectral_split(ap, "plus", tol, lam),
                              spectral_split(am, "minus", tol, lam))


def branch_points(params: PhysicalParams, side: str = "plus") -> np.ndarray:
    """Values of ``lambda != 0`` where ``A_side`` has a repeated eigenvalue.

    Roots of the discriminant of ``det(A - alpha I)`` in ``alpha``, formed in
    exact rational arithmetic (the coefficients span many decades for small
    ``v_+``) and solved in extended precision.
    """
    import sympy as sp

    v = sp.Rational(endstate(side, params))
    mu, sig, mu0, b = (sp.Rational(float(t)) for t in (params.mu, params.sigma, params.mu0, params.b1))
    alpha, lam = sp.symbols("alpha lam")
    A = sp.Matrix([[0, 1 / mu, 0, 0],
                   [lam * v, v / mu, 0, -sig * b * v],
                   [0, 0, 0, sig * mu0 * v],
                   [0, -b * v / mu, lam * v, sig * mu0 * v * v]])
    disc = sp.Poly(sp.discriminant((A - alpha * sp.eye(4)).det(), alpha), lam)
    coeffs = disc.all_coeffs()
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) < 2:
        return np.zeros(0, dtype=complex)
    roots = sp.Poly(coeffs, lam).nroots(n=30, maxsteps=500)
    return np.array(sorted((complex(r) for r in roots), key=lambda z: (z.real, z.imag)))
