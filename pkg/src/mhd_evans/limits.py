"""Limiting Evans functions, contour-sizing bounds, and convergence to the strong-shock limit."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .kato import (STEP_TOL, FrameCache, KatoFrame, continued_power, evans_family, kato_at,
                   quarter_root_factor, regularized_product, regularizers_along)
from .params import DomainError, PhysicalParams
from .profile import Profile, limiting_profile_table
from .shooting import DEFAULT_TOL, EvansFunction, EvansValue, match, shoot_pair
from .system import branch_points

SMALL_LAMBDA = 1e-2


@dataclass(frozen=True)
class SpectralBound:
    """Radius confining unstable spectrum: ``Re lambda + |Im lambda| < radius``."""

    radius: float
    formula_terms: tuple[float, float]


def hf_radius(params: PhysicalParams) -> SpectralBound:
    t1 = 0.5 * max(1.0 / params.mu, params.mu0 * params.sigma)
    t2 = params.b1 ** 2 * np.sqrt(params.sigma / (params.mu * params.mu0))
    return SpectralBound(float(t1 + t2), (float(t1), float(t2)))


def re_lambda_bound(params: PhysicalParams) -> float:
    """Upper bound on ``Re lambda`` for unstable eigenvalues."""
    return float(params.b1 ** 2 / 4.0 * np.sqrt(params.sigma / (params.mu * params.mu0)))


# ---------------------------------------------------------------------------
# strong-shock limit v_+ -> 0


@dataclass(frozen=True)
class StrongShockBasis:
    """Closed-form limiting basis at ``+inf`` and the continued unstable basis at ``-inf``."""

    lam: complex
    r_plus_0: np.ndarray    # 4x2
    r_minus_0: np.ndarray   # 4x2


def limiting_plus_basis(lam: complex, params: PhysicalParams, quarter=None) -> np.ndarray:
    """``R_1 = lambda^{-1/4} e_1``, ``R_2 = (0, 0, lambda^{-1/4}, -lambda^{1/4}/sqrt(sigma mu0))``.

    ``quarter`` overrides ``lambda^{1/4}`` (for continued branches).
    """
    lam = complex(lam)
    if lam == 0:
        raise DomainError("the limiting basis is singular at lambda = 0")
    q = lam ** 0.25 if quarter is None else quarter
    R = np.zeros((4, 2), dtype=complex)
    R[0, 0] = 1.0 / q
    R[2, 1] = 1.0 / q
    R[3, 1] = -q / np.sqrt(params.sigma * params.mu0)
    return R


class StrongShockFunction:
    """``lambda -> EvansValue`` of the strong-shock limit.

    Shoots the Evans system with the limiting tanh profile; the ``+inf`` data
    is the closed-form basis (no exponential rate), the ``-inf`` data the
    Kato-continued unstable basis of ``A_-``.
    """

    def __init__(self, params: PhysicalParams, anchor: complex = 1.0, integ_tol=DEFAULT_TOL,
                 kato_tol: float = STEP_TOL, profile: Profile | None = None):
        self.params = params
        self.profile = limiting_profile_table(params) if profile is None else profile
        self.anchor = complex(anchor)
        self.integ_tol = integ_tol
        self.kato_tol = kato_tol
        self.minus_frames = FrameCache(evans_family("minus", params), self.anchor, kato_tol)
        self.n_evals = 0

    def basis(self, lam: complex) -> StrongShockBasis:
        fm = self.minus_frames.at(lam)
        return StrongShockBasis(complex(lam), limiting_plus_basis(lam, self.params), fm.basis)

    def _value(self, lam, r_plus, frame_minus: KatoFrame, f_minus, sqrt_lam, quarter):
        plus, minus = shoot_pair(lam, self.params, self.profile, r_plus, frame_minus.basis,
                                 0.0, frame_minus.eigensum, self.integ_tol)
        d, d_unit = match(plus, minus)
        return EvansValue(complex(lam), d, f_minus * sqrt_lam * d, f_minus * d, f_minus * quarter * d, d_unit)

    def __call__(self, lam: complex) -> EvansValue:
        lam = complex(lam)
        if lam == 0:
            raise DomainError("the limiting Evans function is evaluated for lambda != 0")
        self.n_evals += 1
        fm = self.minus_frames.at(lam)
        f_minus = quarter_root_factor(lam, self.params.v_minus, self.params)
        return self._value(lam, limiting_plus_basis(lam, self.params), fm, f_minus, lam ** 0.5, lam ** 0.25)

    def along(self, path: Sequence[complex]) -> list[EvansValue]:
        path = [complex(z) for z in path]
        if any(z == 0 for z in path):
            raise DomainError("the limiting Evans function is evaluated for lambda != 0")
        frames = self.minus_frames.along(path)
        regs = regularizers_along([self.anchor] + path, self.params)[1:]
        full = np.array([self.anchor] + path)
        quarter = continued_power(full, 0.25)[1:]
        half = continued_power(full, 0.5)[1:]
        self.n_evals += len(path)
        return [self._value(lam, limiting_plus_basis(lam, self.params, q), fr, reg.f_minus, h, q)
                for lam, fr, reg, q, h in zip(path, frames, regs, quarter, half)]


def strong_shock_eval(lam: complex, params: PhysicalParams, anchor: complex = 1.0,
                      integ_tol=DEFAULT_TOL) -> EvansValue:
    """Limiting Evans value; ``d_check`` includes the ``lambda^{1/2}`` factor."""
    return StrongShockFunction(params, anchor, integ_tol)(lam)


# ---------------------------------------------------------------------------
# r -> infinity: no shooting, just the Kato frames


def r_infinity_eval(lam: complex, params: PhysicalParams, anchor: complex = 1.0,
                    kato_tol: float = STEP_TOL) -> complex:
    """``det[R_+ | R_-]`` of the continued limiting frames at ``lam``."""
    fp = kato_at(evans_family("plus", params), lam, anchor=anchor, tol=kato_tol)
    fm = kato_at(evans_family("minus", params), lam, anchor=anchor, tol=kato_tol)
    return complex(np.linalg.det(np.hstack([fp.basis, fm.basis])))


class RInfinityFunction:
    """``lambda -> det[R_+ | R_-]`` with frames continued from ``anchor``.

    With ``regularize`` the determinant is multiplied by the same three
    quartic-root prefactors used for the shooting Evans function.
    """

    def __init__(self, params: PhysicalParams, anchor: complex = 1.0, regularize: bool = True,
                 kato_tol: float = STEP_TOL):
        self.params = params
        self.anchor = complex(anchor)
        self.regularize = regularize
        self.plus_frames = FrameCache(evans_family("plus", params), self.anchor, kato_tol)
        self.minus_frames = FrameCache(evans_family("minus", params), self.anchor, kato_tol)
        self.n_evals = 0

    @staticmethod
    def _det(fp: KatoFrame, fm: KatoFrame) -> complex:
        return complex(np.linalg.det(np.hstack([fp.basis, fm.basis])))

    def __call__(self, lam: complex) -> complex:
        self.n_evals += 1
        d = self._det(self.plus_frames.at(lam), self.minus_frames.at(lam))
        return d * regularized_product(lam, self.params).check if self.regularize else d

    def along(self, path: Sequence[complex]) -> np.ndarray:
        path = [complex(z) for z in path]
        self.n_evals += len(path)
        d = np.array([self._det(a, b) for a, b in
                      zip(self.plus_frames.along(path), self.minus_frames.along(path))])
        if self.regularize:
            regs = regularizers_along([self.anchor] + path, self.params)[1:]
            d = d * np.array([r.check for r in regs])
        return d


# ---------------------------------------------------------------------------
# convergence to the strong-shock limit


def convergence_error(v_plus_values: Sequence[float], params: PhysicalParams, contour: Sequence[complex],
                      which: str = "check", anchor: complex | None = None, integ_tol=DEFAULT_TOL,
                      small: float = SMALL_LAMBDA) -> dict[float, float]:
    """Max relative deviation of the finite-amplitude Evans function from its limit.

    Both are continued from the same real anchor (default: the first contour
    point); their ratio there is the normalization constant divided out.
    Points with ``|lambda| < small`` are skipped, and by conjugation symmetry
    only the points with ``Im lambda >= 0`` are evaluated.
    """
    if which not in ("check", "hat"):
        raise ValueError("which must be 'check' or 'hat'")
    contour = [complex(z) for z in contour]
    anchor = contour[0] if anchor is None else complex(anchor)
    keep = [z for z in contour if abs(z) >= small and z.imag >= 0]
    path = [anchor] + keep
    limit = [v.variant(which) for v in StrongShockFunction(params, anchor, integ_tol).along(path)]
    limit = np.array(limit)
    out = {}
    for vp in v_plus_values:
        ev = EvansFunction(params.with_(v_plus=vp), anchor=anchor, integ_tol=integ_tol)
        vals = np.array([v.variant(which) for v in ev.along(path)])
        c = vals[0] / limit[0]
        out[float(vp)] = float(np.max(np.abs(vals[1:] / c - limit[1:]) / np.abs(limit[1:])))
    return out


def convergence_table_csv(table: dict[tuple[float, float], float]) -> str:
    """CSV with rows ``v_+`` and columns ``B``; ``table`` maps ``(v_plus, b1)`` to an error."""
    rows = sorted({k[0] for k in table}, reverse=True)
    cols = sorted({k[1] for k in table})
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["v_plus"] + [repr(c) for c in cols])
    for r in rows:
        w.writerow([repr(r)] + ["" if (r, c) not in table else f"{table[(r, c)]:.6g}" for c in cols])
    return buf.getvalue()


def singular_points(params: PhysicalParams) -> np.ndarray:
    """Diagnostic: branch points of the ``+inf`` eigenvalues (near the origin for small ``v_+``)."""
    return branch_points(params, "plus")
