"""Evans function by shooting in polar coordinates from both ends of the profile."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .kato import (STEP_TOL, FrameCache, KatoFrame, evans_family, kato_along_contour, plucker,
                   regularized_product, regularizers_along)
from .params import PhysicalParams
from .profile import Profile, compute_profile

DEFAULT_TOL = (1e-6, 1e-8)   # (atol, rtol)
ORTH_TOL = 1e-8
MAX_REORTH = 10 ** 6
MAX_STEPS = 10 ** 6


class IntegrationFailure(RuntimeError):
    """The adaptive integrator could not reach the matching point."""


class OrthonormalityLoss(IntegrationFailure):
    """Re-orthonormalization was needed more often than allowed."""


@dataclass(frozen=True)
class PolarState:
    """``W = rho * (omega_1 ^ omega_2)`` with orthonormal ``omega`` at abscissa ``x``."""

    omega: np.ndarray
    log_rho: complex
    x: float
    n_steps: int = 0
    n_rejected: int = 0
    n_reorth: int = 0

    def wedge(self) -> np.ndarray:
        return np.exp(self.log_rho) * plucker(self.omega)


def polar_factor(basis: np.ndarray) -> tuple[np.ndarray, complex]:
    """``basis = omega T`` with orthonormal ``omega``; returns ``(omega, log det T)``."""
    Q, T = np.linalg.qr(np.asarray(basis, dtype=complex))
    return Q, complex(np.log(complex(np.prod(np.diag(T)))))


def polar_integrate(basis, from_x: float, to_x: float, lam: complex, params: PhysicalParams,
                    profile: Profile, integ_tol=DEFAULT_TOL, log_rho0: complex = 0.0) -> PolarState:
    """Carry the span of ``basis`` (and its wedge magnitude) from ``from_x`` to ``to_x``."""
    omega, lr = polar_factor(basis)
    y0 = np.empty(9, dtype=complex)
    y0[:8] = omega.reshape(-1)
    y0[8] = lr + log_rho0
    atol, rtol = integ_tol
    x0, dx, vals, ders, left, right = profile.table()
    y, status, n_acc, n_rej, n_re = _kernels.polar_shoot(
        y0, float(from_x), float(to_x), complex(lam), params.mu, params.sigma, params.mu0, params.b1,
        x0, dx, vals, ders, left, right, rtol, atol, ORTH_TOL, MAX_STEPS, MAX_REORTH)
    if status == _kernels.TOO_MANY_REORTH:
        raise OrthonormalityLoss(f"more than {MAX_REORTH} re-orthonormalizations at lambda={lam}")
    if status != _kernels.OK:
        what = "step size underflow" if status == _kernels.UNDERFLOW else "step limit reached"
        raise IntegrationFailure(f"{what} at lambda={lam}")
    return PolarState(y[:8].reshape(4, 2), complex(y[8]), float(to_x), n_acc, n_rej, n_re)


@dataclass(frozen=True)
class EvansValue:
    """Evans function and its renormalizations at one ``lambda``."""

    lam: complex
    d_raw: complex
    d_check: complex
    d_hat: complex
    d_tilde: complex
    d_unit: complex

    VARIANTS = ("raw", "check", "hat", "tilde", "unit")

    def variant(self, name: str) -> complex:
        if name not in self.VARIANTS:
            raise ValueError(f"unknown variant {name!r}; choose from {self.VARIANTS}")
        return getattr(self, "d_" + name)

    def to_dict(self) -> dict:
        out = {"lambda": [self.lam.real, self.lam.imag]}
        for name in self.VARIANTS:
            z = self.variant(name)
            out[name] = [z.real, z.imag]
        return out


def match(plus: PolarState, minus: PolarState) -> tuple[complex, complex]:
    """``(D, D / (|W_+| |W_-|))`` from the two states at the matching point."""
    det = complex(np.linalg.det(np.hstack([plus.omega, minus.omega])))
    lr = plus.log_rho + minus.log_rho
    return np.exp(lr) * det, np.exp(1j * lr.imag) * det


def shoot_pair(lam: complex, params: PhysicalParams, profile: Profile, plus_basis, minus_basis,
               plus_rate: complex, minus_rate: complex, integ_tol=DEFAULT_TOL):
    """Integrate both sides to ``x = 0``.

    ``plus_rate``/``minus_rate`` are the traces of ``A_+-`` restricted to the
    chosen subspaces; they place the initial data on the decaying/growing
    solution at the finite endpoints, so the result does not depend on them.
    """
    x_right, x_left = float(profile.grid[-1]), float(profile.grid[0])
    plus = polar_integrate(plus_basis, x_right, 0.0, lam, params, profile, integ_tol,
                           log_rho0=plus_rate * x_right)
    minus = polar_integrate(minus_basis, x_left, 0.0, lam, params, profile, integ_tol,
                            log_rho0=minus_rate * x_left)
    return plus, minus


def evans_eval(lam: complex, params: PhysicalParams, profile: Profile, frames: Sequence[KatoFrame],
               integ_tol=DEFAULT_TOL, regularizer=None) -> EvansValue:
    """Evans function at ``lam`` from the Kato frames ``(plus, minus)`` at that ``lambda``.

    ``regularizer`` overrides the principal-branch prefactors (used along
    paths leaving the closed right half-plane).
    """
    lam = complex(lam)
    fp, fm = frames
    plus, minus = shoot_pair(lam, params, profile, fp.basis, fm.basis, fp.eigensum, fm.eigensum, integ_tol)
    d, d_unit = match(plus, minus)
    reg = regularized_product(lam, params) if regularizer is None else regularizer
    return EvansValue(lam, d, reg.check * d, reg.hat * d, reg.tilde * d, d_unit)


class EvansFunction:
    """``lambda -> EvansValue`` for one parameter set.

    Kato frames are continued from ``anchor`` (real positive); the profile is
    computed on construction unless supplied.
    """

    def __init__(self, params: PhysicalParams, profile: Profile | None = None, anchor: complex = 1.0,
                 integ_tol=DEFAULT_TOL, kato_tol: float = STEP_TOL):
        self.params = params
        self.profile = compute_profile(params) if profile is None else profile
        self.anchor = complex(anchor)
        self.integ_tol = integ_tol
        self.kato_tol = kato_tol
        self.plus_frames = FrameCache(evans_family("plus", params), self.anchor, kato_tol)
        self.minus_frames = FrameCache(evans_family("minus", params), self.anchor, kato_tol)
        self.n_evals = 0

    def frames_at(self, lam: complex):
        """Frames at ``lam``, continued from the nearest point already visited.

        Valid for the closed right half-plane (minus the origin), where the
        continuation is path independent.
        """
        return self.plus_frames.at(lam), self.minus_frames.at(lam)

    def __call__(self, lam: complex) -> EvansValue:
        self.n_evals += 1
        return evans_eval(lam, self.params, self.profile, self.frames_at(lam), self.integ_tol)

    def frames_along(self, path: Sequence[complex]):
        return list(zip(self.plus_frames.along(path), self.minus_frames.along(path)))

    def along(self, path: Sequence[complex]) -> list[EvansValue]:
        """Values along a path, with frames and prefactor branches continued from the anchor."""
        path = [complex(z) for z in path]
        frames = self.frames_along(path)
        regs = regularizers_along([self.anchor] + path, self.params)[1:]
        self.n_evals += len(path)
        return [evans_eval(lam, self.params, self.profile, fr, self.integ_tol, reg)
                for lam, fr, reg in zip(path, frames, regs)]

    def continued(self, path: Sequence[complex]) -> list[EvansValue]:
        """Values along ``path`` continued strictly in order, bypassing the frame caches.

        Needed for loops that circle branch points, where the value on return
        may sit on another sheet.  The frames start at ``anchor``.
        """
        path = [complex(z) for z in path]
        plus = kato_along_contour(self.plus_frames.family, path, anchor=self.anchor, tol=self.kato_tol)
        minus = kato_along_contour(self.minus_frames.family, path, anchor=self.anchor, tol=self.kato_tol)
        regs = regularizers_along([self.anchor] + path, self.params)[1:]
        self.n_evals += len(path)
        return [evans_eval(lam, self.params, self.profile, (a, b), self.integ_tol, reg)
                for lam, a, b, reg in zip(path, plus, minus, regs)]
