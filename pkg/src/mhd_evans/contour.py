"""Contours in the spectral plane, winding numbers by argument tracking."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

ARG_STEP = 0.2
REFINE_LIMIT = 2 ** 10
ZERO_GUARD = 1e-290
ORIGIN_GUARD = 1e-6   # relative to the radius: where lambda = 0 is actually evaluated


class ZeroOnContour(ArithmeticError):
    def __init__(self, lam):
        super().__init__(f"evaluator vanishes (numerically) at lambda={lam}")
        self.lam = lam


class RefinementExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class Contour:
    """Ordered points of a closed polyline traversed counterclockwise.

    A ``half`` contour runs from the positive real axis through the upper
    half-plane back to the real axis; ``full()`` completes it by conjugation.
    """

    points: np.ndarray
    radius: float
    kind: str = "semicircle"
    half: bool = False
    center: complex = 0.0
    sheets: int = 1
    offset: float = 0.0

    def __len__(self):
        return len(self.points)

    def full(self) -> "Contour":
        if not self.half:
            return self
        pts = np.concatenate([self.points, np.conj(self.points[-2:0:-1])])
        return Contour(pts, self.radius, self.kind, False, self.center, self.sheets, self.offset)

    def upper(self) -> "Contour":
        """The half contour (first point on the positive real axis, last on the real axis)."""
        if self.half:
            return self
        n = len(self.points)
        m = n // 2 + 1
        return Contour(self.points[:m], self.radius, self.kind, True, self.center, self.sheets, self.offset)


def build_semicircle(radius: float, n_points: int = 120, origin_offset: float = 0.0,
                     half: bool = False) -> Contour:
    """Boundary of ``{|lambda| < radius, Re lambda >= origin_offset}``, counterclockwise from ``radius``.

    The arc is sampled uniformly in angle; the segment on ``Re lambda = origin_offset``
    uses quadratic spacing so points concentrate at the origin.  ``n_points``
    counts distinct points of the closed contour and must be even.
    """
    if not radius > origin_offset >= 0.0:
        raise ValueError("need radius > origin_offset >= 0")
    if n_points < 8 or n_points % 2:
        raise ValueError("n_points must be an even number >= 8")
    m = n_points // 2          # intervals on the half contour
    n_arc = m // 2
    n_seg = m - n_arc
    eps = float(origin_offset)
    top = np.sqrt(radius ** 2 - eps ** 2)
    theta = np.linspace(0.0, np.arctan2(top, eps), n_arc + 1)
    arc = radius * np.exp(1j * theta)
    t = top * (1.0 - np.arange(1, n_seg + 1) / n_seg) ** 2
    seg = eps + 1j * t
    pts = np.concatenate([arc, seg])
    pts[0] = radius
    pts[-1] = eps
    c = Contour(pts, float(radius), "semicircle", True, 0.0, 1, eps)
    return c if half else c.full()


def build_circle(center: complex, radius: float, n_points: int = 120, sheets: int = 1) -> Contour:
    """Circle traversed ``sheets`` times, starting at ``center + radius``; the start is not repeated."""
    theta = 2 * np.pi * np.arange(n_points * sheets) / n_points
    return Contour(center + radius * np.exp(1j * theta), float(radius), "circle", False, complex(center), sheets)


@dataclass
class ContourResult:
    samples: list            # (lambda, value) in traversal order, closing point excluded
    arg_track: np.ndarray    # unwound argument, one entry per sample plus the closing one
    winding: int
    max_arg_step: float
    refinements: int
    residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return np.array([s[0] for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([s[1] for s in self.samples])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["lambda_re", "lambda_im", "D_re", "D_im", "arg_unwound"])
        for (lam, val), a in zip(self.samples, self.arg_track):
            w.writerow([repr(lam.real), repr(lam.imag), repr(val.real), repr(val.imag), repr(float(a))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "winding": self.winding,
            "max_arg_step": self.max_arg_step,
            "refinements": self.refinements,
            "residual": self.residual,
            "meta": self.meta,
            "samples": [[l.real, l.imag, v.real, v.imag] for l, v in self.samples],
            "arg_track": [float(a) for a in self.arg_track],
        })


def _arg_steps(values: np.ndarray, closed: bool) -> np.ndarray:
    v = np.append(values, values[0]) if closed else values
    return np.angle(v[1:] / v[:-1])


def _check_zero(lams, values):
    for lam, val in zip(lams, values):
        if not np.isfinite(val) or abs(val) < ZERO_GUARD:
            raise ZeroOnContour(lam)


def track_argument(points: Sequence[complex], values: Sequence[complex], evaluator: Callable | None,
                   closed: bool = True, threshold: float = ARG_STEP, refine_limit: int = REFINE_LIMIT):
    """Insert chord midpoints until every argument step is below ``threshold``.

    Returns ``(points, values, steps, insertions)``.
    """
    pts = [complex(z) for z in points]
    vals = [complex(v) for v in values]
    _check_zero(pts, vals)
    inserted = 0
    while True:
        steps = _arg_steps(np.array(vals), closed)
        bad = np.flatnonzero(np.abs(steps) >= threshold)
        if len(bad) == 0:
            return pts, vals, steps, inserted
        if evaluator is None or inserted + len(bad) > refine_limit:
            raise RefinementExhausted(f"argument steps up to {np.abs(steps).max():.3g} remain "
                                      f"after {inserted} insertions")
        n = len(pts)
        mids = [0.5 * (pts[j] + pts[(j + 1) % n]) for j in bad]
        new = [complex(evaluator(z)) for z in mids]
        _check_zero(mids, new)
        for j, z, v in sorted(zip(bad, mids, new), key=lambda t: -t[0]):
            pts.insert(j + 1, z)
            vals.insert(j + 1, v)
        inserted += len(bad)


def winding_number(contour, evaluator: Callable[[complex], complex], refine_limit: int = REFINE_LIMIT,
                   values: Sequence[complex] | None = None, threshold: float = ARG_STEP) -> ContourResult:
    """Winding number of ``evaluator`` around a closed contour.

    ``contour`` is a ``Contour`` or a sequence of points (closing segment
    implied).  Precomputed ``values`` at the contour points may be supplied;
    ``evaluator`` is then only called for refinement midpoints.
    """
    pts = contour.full().points if isinstance(contour, Contour) else np.asarray(contour, dtype=complex)
    if values is None:
        values = [evaluator(z) for z in pts]
    pts, vals, steps, inserted = track_argument(pts, values, evaluator, True, threshold, refine_limit)
    total = float(np.sum(steps))
    winding = int(np.round(total / (2 * np.pi)))
    track = np.angle(vals[0]) + np.concatenate([[0.0], np.cumsum(steps)])
    return ContourResult(list(zip(pts, vals)), track, winding, float(np.max(np.abs(steps))), inserted,
                         abs(total - 2 * np.pi * winding))


def riemann_winding(center: complex, radius: float, along: Callable[[Sequence[complex]], Sequence[complex]],
                    sheets: int = 2, n_points: int = 120, refine_limit: int = REFINE_LIMIT,
                    threshold: float = ARG_STEP) -> int:
    """Winding over a loop traversed ``sheets`` times.

    ``along`` evaluates a path with its continuation state threaded through
    the samples (so the value after one loop may differ from the start);
    the mesh is doubled until all argument steps are below ``threshold``.
    """
    n = n_points
    while True:
        theta = 2 * np.pi * np.arange(n * sheets + 1) / n
        path = center + radius * np.exp(1j * theta)
        vals = np.asarray(along(path), dtype=complex)
        _check_zero(path, vals)
        steps = np.angle(vals[1:] / vals[:-1])
        if np.max(np.abs(steps)) < threshold:
            return int(np.round(np.sum(steps) / (2 * np.pi)))
        if n * sheets > refine_limit:
            raise RefinementExhausted(f"loop still has argument steps {np.abs(steps).max():.3g}")
        n *= 2


def origin_guard(lam: complex, radius: float) -> complex:
    """Replace ``lambda = 0`` by a tiny positive value (the eigenvalue split degenerates at 0)."""
    return complex(ORIGIN_GUARD * radius) if lam == 0 else complex(lam)


def _pick(value, variant):
    return value.variant(variant) if hasattr(value, "variant") else complex(value)


def evans_winding(fn, contour: Contour, variant: str = "check", refine_limit: int = REFINE_LIMIT,
                  normalize: bool = False) -> ContourResult:
    """Winding of an Evans-type function on a conjugate-symmetric contour.

    ``fn`` provides ``along(path)`` (continued values) and ``fn(lambda)``;
    values are ``EvansValue`` (``variant`` selects the component) or complex.
    The upper half is continued, the lower half mirrored.
    """
    half = contour.upper()
    pts = [origin_guard(z, contour.radius) for z in half.points]
    vals = np.array([_pick(v, variant) for v in fn.along(pts)])
    full_pts = contour.full().points
    m = len(half.points)
    full_vals = np.concatenate([vals, np.conj(vals[-2:0:-1])])
    scale = full_vals[0] if normalize else 1.0

    def single(z):
        z = origin_guard(z, contour.radius)
        if z.imag < 0:
            return np.conj(_pick(fn(np.conj(z)), variant)) / scale
        return _pick(fn(z), variant) / scale

    res = winding_number(full_pts, single, refine_limit, full_vals / scale)
    res.meta.update({"variant": variant, "radius": contour.radius, "n_points": len(full_pts),
                     "half_points": m, "n_evals": getattr(fn, "n_evals", None)})
    return res


def evans_riemann_winding(fn, radius: float, center: complex = 0.0, sheets: int = 2, variant: str = "raw",
                          n_points: int = 120, refine_limit: int = REFINE_LIMIT) -> int:
    """Winding of an Evans function around a loop traversed ``sheets`` times.

    ``fn.continued(path)`` must thread the continuation through the whole
    path; the frames are anchored at the loop's starting point.
    """
    return riemann_winding(center, radius, lambda path: [_pick(v, variant) for v in fn.continued(path)],
                           sheets, n_points, refine_limit)
