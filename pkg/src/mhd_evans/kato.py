"""Analytic bases for the stable/unstable subspaces of ``A_+-(lambda)``.

A basis ``R(lambda)`` is transported along a path in the spectral parameter
by Kato's ODE ``R' = P' R``, where ``P`` is the spectral projector onto the
selected eigenvalue group.  ``P`` and ``P'`` come from the eigendecomposition
of ``A``, so the only approximation is the path integration (classical RK4
with step doubling, followed by re-projection onto the exact subspace).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import matrix_balance, schur, solve_sylvester

from .params import PhysicalParams
from .system import coefficient_dlambda, coefficient_matrix, endstate

PROJ_JUMP_MAX = 0.5
MAX_BISECT = 24
STEP_TOL = 1e-11


class StepTooLarge(ArithmeticError):
    """A continuation step moved the spectral projector too far to trust."""

    def __init__(self, msg, lam_from=None, lam_to=None):
        super().__init__(msg)
        self.lam_from = lam_from
        self.lam_to = lam_to


@dataclass(frozen=True)
class MatrixFamily:
    """An analytic matrix family ``A(lambda)`` with a distinguished eigen-group.

    ``stable`` selects the ``k`` eigenvalues with negative real part at the
    initialization point, otherwise those with positive real part.
    """

    matrix: Callable[[complex], np.ndarray]
    dmatrix: Callable[[complex], np.ndarray]
    k: int
    stable: bool
    balance: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.balance is None:
            # fixed diagonal similarity, chosen once; keeps tiny eigenvalues resolvable
            _, (scale, _) = matrix_balance(self.matrix(1.0), permute=False, separate=True)
            object.__setattr__(self, "balance", np.asarray(scale, dtype=float))

    @property
    def n(self) -> int:
        return self.matrix(1.0).shape[0]


def evans_family(side: str, params: PhysicalParams, v=None) -> MatrixFamily:
    """Limiting Evans matrix at ``+inf`` (stable pair) or ``-inf`` (unstable pair)."""
    v = endstate(side, params) if v is None else v
    dA = coefficient_dlambda(v)
    return MatrixFamily(lambda lam: coefficient_matrix(v, lam, params), lambda lam: dA, 2, side == "plus")


def model_family(eta: float) -> MatrixFamily:
    """``[[0, 1], [lambda, eta]]`` with its stable eigenvalue; a test bed with closed-form answers."""
    dA = np.array([[0, 0], [1, 0]], dtype=complex)
    return MatrixFamily(lambda lam: np.array([[0, 1], [lam, eta]], dtype=complex), lambda lam: dA, 1, True)


@dataclass(frozen=True)
class Spectral:
    """Projector data for one ``lambda``."""

    lam: complex
    values: np.ndarray       # selected eigenvalues
    proj: np.ndarray
    dproj: np.ndarray
    span_raw: np.ndarray     # basis of the selected invariant subspace (not orthonormalized)

    @property
    def span(self) -> np.ndarray:
        return np.linalg.qr(self.span_raw)[0]


def _select(alpha: np.ndarray, family: MatrixFamily, ref_values) -> list[int]:
    """Indices of the selected group: by sign of the real part, or by tracking ``ref_values``."""
    n, k = len(alpha), family.k
    if ref_values is None:
        order = np.argsort(alpha.real)
        return sorted(order[:k] if family.stable else order[n - k:])
    cost = np.abs(alpha[:, None] - np.asarray(ref_values)[None, :])
    if k == 1:
        return [int(np.argmin(cost[:, 0]))]
    if k == 2:
        pair = cost[:, 0][:, None] + cost[:, 1][None, :]
        np.fill_diagonal(pair, np.inf)
        i, j = np.unravel_index(np.argmin(pair), pair.shape)
        return sorted([int(i), int(j)])
    best = min(itertools.permutations(range(n), k), key=lambda perm: sum(cost[c, r] for r, c in enumerate(perm)))
    return sorted(best)


def _blocks_schur(A, alpha, insel, k):
    """Block-diagonalizing basis from a reordered Schur form (robust to repeats inside a group)."""
    T, Q, sdim = schur(A, output="complex",
                       sort=lambda z: bool(insel[int(np.argmin(np.abs(alpha - z)))]))
    if sdim != k:
        raise StepTooLarge("eigenvalue groups could not be separated")
    T11, T12, T22 = T[:k, :k], T[:k, k:], T[k:, k:]
    Y = solve_sylvester(T11, -T22, -T12)
    n = A.shape[0]
    M = np.eye(n, dtype=complex)
    M[:k, k:] = Y
    Minv = np.eye(n, dtype=complex)
    Minv[:k, k:] = -Y
    return T11, T22, Q @ M, Minv @ Q.conj().T


def _projector_parts(family: MatrixFamily, lam: complex, ref=None) -> Spectral:
    """Projector onto the selected group and its ``lambda``-derivative.

    Works in a block-diagonalizing basis ``M``: with ``B = M^{-1} A' M`` the
    off-diagonal blocks of ``M^{-1} P' M`` solve Sylvester equations (plain
    divisions when ``M`` is an eigenbasis).  When eigenvalues inside a group
    nearly coincide the basis comes from a reordered Schur form instead.
    ``ref`` is the data at a nearby point (anything with ``values`` and ``proj``).
    """
    scale = family.balance
    A = family.matrix(lam) * (1.0 / scale)[:, None] * scale[None, :]
    dA = family.dmatrix(lam) * (1.0 / scale)[:, None] * scale[None, :]
    alpha, V = np.linalg.eig(A)
    k, n = family.k, A.shape[0]
    sel = _select(alpha, family, None if ref is None else ref.values)
    comp = [j for j in range(n) if j not in sel]
    insel = np.zeros(n, bool)
    insel[sel] = True
    gap = np.min(np.abs(alpha[sel][:, None] - alpha[comp][None, :]))
    if gap == 0.0:
        raise StepTooLarge("selected and complementary eigenvalues coincide")
    spread = np.max(np.abs(alpha))
    within = [abs(alpha[i] - alpha[j]) for grp in (sel, comp) for a, i in enumerate(grp) for j in grp[a + 1:]]
    Pt = np.zeros((n, n), dtype=complex)
    if not within or min(within) > 1e-6 * spread:
        perm = sel + comp
        M = V[:, perm]
        Minv = np.linalg.inv(M)
        a_s, a_c = alpha[sel], alpha[comp]
        Bm = Minv @ dA @ M
        diff = a_s[:, None] - a_c[None, :]
        Pt[:k, k:] = Bm[:k, k:] / diff
        Pt[k:, :k] = Bm[k:, :k] / diff.T
        values = a_s
        span_raw = M[:, :k]
    else:
        T11, T22, M, Minv = _blocks_schur(A, alpha, insel, k)
        Bm = Minv @ dA @ M
        Pt[:k, k:] = solve_sylvester(T11, -T22, Bm[:k, k:])
        Pt[k:, :k] = solve_sylvester(-T22, T11, Bm[k:, :k])
        values = np.diag(T11).copy()
        span_raw = M[:, :k]
    back = scale[:, None] * (1.0 / scale)[None, :]
    proj = (M[:, :k] @ Minv[:k, :]) * back
    if ref is not None:
        jump = np.linalg.norm(proj - ref.proj) / max(1.0, np.linalg.norm(ref.proj))
        if jump > PROJ_JUMP_MAX:
            raise StepTooLarge(f"projector jump {jump:.3g} exceeds {PROJ_JUMP_MAX}")
    return Spectral(complex(lam), values, proj, (M @ Pt @ Minv) * back, scale[:, None] * span_raw)


def projector_and_derivative(family, lam: complex, params: PhysicalParams | None = None):
    """Spectral projector ``P`` and ``dP/dlambda`` at ``lam`` (group chosen by sign of real part)."""
    s = _projector_parts(as_family(family, params), lam)
    return s.proj, s.dproj


@dataclass(frozen=True)
class KatoFrame:
    """A transported basis ``R`` (columns) at ``lam``, with the projector it spans."""

    lam: complex
    basis: np.ndarray
    proj: np.ndarray
    values: np.ndarray
    spectral: Spectral | None = field(default=None, repr=False, compare=False)

    @property
    def eigensum(self) -> complex:
        return complex(np.sum(self.values))

    def wedge(self) -> np.ndarray:
        return plucker(self.basis)


def plucker(R: np.ndarray) -> np.ndarray:
    """Plucker coordinates of the column span of an ``n x 2`` matrix (lexicographic pairs)."""
    n = R.shape[0]
    if R.shape[1] == 1:
        return R[:, 0].copy()
    return np.array([R[i, 0] * R[j, 1] - R[j, 0] * R[i, 1] for i in range(n) for j in range(i + 1, n)])


def normalize_frame(R: np.ndarray) -> np.ndarray:
    """Orthonormalize so the wedge has unit length and its largest coordinate is real positive."""
    Q, _ = np.linalg.qr(R)
    p = plucker(Q)
    mag = np.round(np.abs(p), 12)
    idx = int(np.argmax(mag))
    Q = Q.copy()
    Q[:, 0] *= abs(p[idx]) / p[idx]
    return Q


def as_family(family, params: PhysicalParams | None = None) -> MatrixFamily:
    """Accept a ``MatrixFamily`` or a side name ``'plus'``/``'minus'`` with params."""
    if isinstance(family, MatrixFamily):
        return family
    if params is None:
        raise ValueError("params required when a side name is given")
    return evans_family(family, params)


def kato_init(family, lam0: complex = 1.0, params: PhysicalParams | None = None) -> KatoFrame:
    """Normalized eigenbasis of the selected group at ``lam0``."""
    family = as_family(family, params)
    s = _projector_parts(family, lam0)
    return _frame(normalize_frame(s.span), s)


def _frame(R, s: Spectral) -> KatoFrame:
    return KatoFrame(s.lam, R, s.proj, s.values, s)


def _rk4(R, h, s0: Spectral, sm: Spectral, s1: Spectral):
    """One RK4 step of ``R' = P'R`` followed by projection onto the end subspace."""
    k1 = s0.dproj @ R
    k2 = sm.dproj @ (R + 0.5 * h * k1)
    k3 = sm.dproj @ (R + 0.5 * h * k2)
    k4 = s1.dproj @ (R + h * k3)
    return s1.proj @ (R + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


def _start_spectral(frame: KatoFrame, family: MatrixFamily) -> Spectral:
    return frame.spectral if frame.spectral is not None else _projector_parts(family, frame.lam, frame)


def kato_step(frame: KatoFrame, family, lam_to: complex, params: PhysicalParams | None = None) -> KatoFrame:
    """A single continuation step without error control."""
    family = as_family(family, params)
    lam_to = complex(lam_to)
    if lam_to == frame.lam:
        return frame
    s0 = _start_spectral(frame, family)
    sm = _projector_parts(family, frame.lam + 0.5 * (lam_to - frame.lam), s0)
    s1 = _projector_parts(family, lam_to, sm)
    return _frame(_rk4(frame.basis, lam_to - frame.lam, s0, sm, s1), s1)


def _advance(frame, family, lam_to, tol, depth):
    """Step-doubling controlled advance; bisects on error or projector jumps."""
    h = lam_to - frame.lam
    ok = False
    try:
        s0 = _start_spectral(frame, family)
        sq1 = _projector_parts(family, frame.lam + 0.25 * h, s0)
        sm = _projector_parts(family, frame.lam + 0.5 * h, sq1)
        sq3 = _projector_parts(family, frame.lam + 0.75 * h, sm)
        s1 = _projector_parts(family, lam_to, sq3)
        full = _rk4(frame.basis, h, s0, sm, s1)
        two = _rk4(_rk4(frame.basis, 0.5 * h, s0, sq1, sm), 0.5 * h, sm, sq3, s1)
        err = np.linalg.norm(two - full) / max(np.linalg.norm(two), 1e-300)
        ok = bool(err <= tol)
    except StepTooLarge:
        pass
    if ok:
        # Richardson extrapolation; both iterates already lie in the end subspace
        return _frame(two + (two - full) / 15.0, s1), 1
    if depth >= MAX_BISECT:
        raise StepTooLarge(f"continuation from {frame.lam} to {lam_to} failed after {MAX_BISECT} bisections",
                           frame.lam, lam_to)
    mid = frame.lam + 0.5 * h
    left, n1 = _advance(frame, family, mid, tol, depth + 1)
    right, n2 = _advance(left, family, lam_to, tol, depth + 1)
    return right, n1 + n2


def kato_advance(frame: KatoFrame, family, lam_to: complex, tol: float = STEP_TOL,
                 params: PhysicalParams | None = None, count: bool = False):
    """Continue ``frame`` along the straight segment to ``lam_to`` with error control.

    With ``count`` the number of accepted sub-steps is returned as well.
    """
    family = as_family(family, params)
    lam_to = complex(lam_to)
    if lam_to == frame.lam:
        return (frame, 0) if count else frame
    out, n = _advance(frame, family, lam_to, tol, 0)
    return (out, n) if count else out


def kato_along_contour(family, contour: Sequence[complex], params: PhysicalParams | None = None,
                       anchor: complex | None = None, tol: float = STEP_TOL,
                       start: KatoFrame | None = None) -> list[KatoFrame]:
    """Frames at each contour point as samples of one continued solution.

    Initializes at ``anchor`` (default: the first contour point) unless a
    ``start`` frame is given, then walks the contour in order.
    """
    family = as_family(family, params)
    if start is None:
        start = kato_init(family, contour[0] if anchor is None else anchor)
    frame = start
    out = []
    for lam in contour:
        frame = kato_advance(frame, family, complex(lam), tol)
        out.append(frame)
    return out


def kato_at(family, lam: complex, params: PhysicalParams | None = None, anchor: complex = 1.0,
            tol: float = STEP_TOL) -> KatoFrame:
    """Frame at ``lam`` continued along the segment from ``anchor``."""
    family = as_family(family, params)
    return kato_advance(kato_init(family, anchor), family, complex(lam), tol)


class FrameCache:
    """Continued frames of one family, all descending from a single anchor frame.

    A new point is reached from the nearest cached point; in a convex region
    free of eigenvalue collisions (such as ``Re lambda >= 0`` away from
    ``lambda = 0``) this gives the same analytic continuation as any other path.
    """

    def __init__(self, family: MatrixFamily, anchor: complex = 1.0, tol: float = STEP_TOL):
        self.family = family
        self.tol = tol
        self.frames = {complex(anchor): kato_init(family, anchor)}

    def _nearest(self, lam: complex) -> KatoFrame:
        keys = np.array(list(self.frames))
        return self.frames[complex(keys[np.argmin(np.abs(keys - lam))])]

    def at(self, lam: complex) -> KatoFrame:
        lam = complex(lam)
        if lam not in self.frames:
            self.frames[lam] = kato_advance(self._nearest(lam), self.family, lam, self.tol)
        return self.frames[lam]

    def along(self, path: Sequence[complex]) -> list[KatoFrame]:
        """Frames along ``path`` in order, entering it from the nearest cached point."""
        out = []
        for lam in path:
            lam = complex(lam)
            if lam not in self.frames:
                prev = out[-1] if out else self._nearest(lam)
                self.frames[lam] = kato_advance(prev, self.family, lam, self.tol)
            out.append(self.frames[lam])
        return out


def model_kato_exact(lam, eta: float, anchor: complex = 1.0) -> np.ndarray:
    """Closed-form transported stable eigenvector of the model family.

    Normalized to ``(1, mu(anchor))`` at the anchor, with ``mu`` the stable eigenvalue.
    """
    d = eta * eta / 4.0
    mu = eta / 2.0 - np.sqrt(d + lam)
    scale = (d + anchor) ** 0.25 / (d + lam) ** 0.25
    return scale * np.array([1.0, mu])


# ---------------------------------------------------------------------------
# regularizing factors


def quarter_root_factor(lam, v: float, params: PhysicalParams, branch_ref=None):
    """``((1 - B/sqrt(mu0 v))^2 + 4 lambda c)^{1/4}`` normalized to 1 at ``lambda = 1``.

    ``c = mu/(2v) + 1/(2 sigma mu0 v^2)``.  Principal branch unless ``branch_ref``
    (a nearby value of the fourth root's argument) is given.
    """
    c = params.mu / (2 * v) + 1.0 / (2 * params.sigma * params.mu0 * v * v)
    a = (1.0 - params.b1 / np.sqrt(params.mu0 * v)) ** 2
    return _root(a + 4 * lam * c, 0.25, branch_ref) / (a + 4 * c) ** 0.25


def _root(z, p, branch_ref=None):
    z = complex(z)
    arg = np.angle(z)
    if branch_ref is not None:
        arg += 2 * np.pi * np.round((branch_ref - arg) / (2 * np.pi))
    return abs(z) ** p * np.exp(1j * p * arg)


def continued_power(z: Sequence[complex], p: float) -> np.ndarray:
    """``z**p`` along a path, continuing the argument instead of wrapping it."""
    z = np.asarray(z, dtype=complex)
    arg = np.unwrap(np.angle(z))
    return np.abs(z) ** p * np.exp(1j * p * arg)


@dataclass(frozen=True)
class RegularizedProduct:
    """Factors removing the branch singularities of the frames at ``lam``."""

    lam: complex
    f_minus: complex
    f_plus: complex
    g: complex

    @property
    def check(self) -> complex:
        return self.f_minus * self.g * self.f_plus

    @property
    def hat(self) -> complex:
        return self.f_minus

    @property
    def tilde(self) -> complex:
        return self.f_minus * self.f_plus


def regularized_product(lam, params: PhysicalParams) -> RegularizedProduct:
    """Principal-branch regularizers (analytic on ``Re lambda >= 0``)."""
    vp = params.v_plus
    fm = quarter_root_factor(lam, params.v_minus, params)
    fp = quarter_root_factor(lam, vp, params)
    g = _root(vp / 4 + lam, 0.25) / (vp / 4 + 1) ** 0.25
    return RegularizedProduct(complex(lam), fm, fp, g)


def regularizers_along(path: Sequence[complex], params: PhysicalParams) -> list[RegularizedProduct]:
    """Regularizers continued along a path (for paths leaving ``Re lambda >= 0``)."""
    path = np.asarray(path, dtype=complex)
    vp, vm = params.v_plus, params.v_minus

    def fac(v):
        c = params.mu / (2 * v) + 1.0 / (2 * params.sigma * params.mu0 * v * v)
        a = (1.0 - params.b1 / np.sqrt(params.mu0 * v)) ** 2
        return continued_power(a + 4 * path * c, 0.25) / (a + 4 * c) ** 0.25

    fm, fp = fac(vm), fac(vp)
    g = continued_power(vp / 4 + path, 0.25) / (vp / 4 + 1) ** 0.25
    return [RegularizedProduct(complex(l), a, b, c) for l, a, b, c in zip(path, fm, fp, g)]


@dataclass(frozen=True)
class RegularizedWedge:
    """Wedge of one side's frame together with its quartic-root prefactor."""

    lam: complex
    side: str
    wedge: np.ndarray
    prefactor: complex

    @property
    def regularized(self) -> np.ndarray:
        return self.prefactor * self.wedge


def regularized_wedge(frame: KatoFrame, side: str, params: PhysicalParams,
                      prefactor: complex | None = None) -> RegularizedWedge:
    """``F(v_side) * (R_1 ^ R_2)`` for a continued frame.

    ``prefactor`` overrides the principal-branch factor (pass a continued
    value from ``regularizers_along`` off the right half-plane).
    """
    if side not in ("plus", "minus"):
        raise ValueError("side must be 'plus' or 'minus'")
    if prefactor is None:
        v = params.v_plus if side == "plus" else params.v_minus
        prefactor = quarter_root_factor(frame.lam, v, params)
    return RegularizedWedge(frame.lam, side, frame.wedge(), complex(prefactor))
