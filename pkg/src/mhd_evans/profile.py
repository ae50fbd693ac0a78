"""Traveling-wave density profile of the parallel shock layer.

The profile solves the scalar autonomous ODE ``(2 mu + eta) v' = H(v, v_+)``.
Since the ODE is scalar we integrate outward from an interior anchor instead
of solving a two-point boundary value problem.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .params import DomainError, PhysicalParams

DEFAULT_L = 20.0
GRID_SPACING = 0.01


class ProfileConvergenceError(RuntimeError):
    """The truncation length hit its cap before the endstates were reached."""


def profile_rhs(v, params: PhysicalParams):
    """``H(v, v_+) / (2 mu + eta)``; vectorized over ``v``.

    The factor ``v - 1 + a (v^-gamma - 1)`` vanishes at both endstates, so it
    is expanded around the nearer one to avoid cancellation in the tails.
    """
    v = np.asarray(v, dtype=float)
    a, g, vp = params.a, params.gamma, params.v_plus
    y = v - vp
    z = 1.0 - v
    near_plus = a * vp ** (-g) * np.expm1(-g * np.log1p(y / vp)) + y
    near_minus = a * np.expm1(-g * np.log1p(-np.minimum(z, 0.5))) - z
    return v * np.where(np.abs(y) < np.abs(z), near_plus, near_minus) / params.visc


def anchor_value(v_plus: float) -> float:
    return v_plus + min(1.0 / 12.0, 0.5 * (1.0 - v_plus))


@dataclass(frozen=True, eq=False)
class Profile:
    """Density profile sampled on a uniform grid over ``[-l_minus, l_plus]``.

    Values between nodes come from cubic Hermite interpolation using the exact
    node slopes ``H(v)/(2 mu + eta)``; outside the domain the endstates are
    returned.  ``derivs`` holds those node slopes.
    """

    params: PhysicalParams | None
    grid: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    l_minus: float
    l_plus: float
    endpoint_error: float
    left_state: float = 1.0
    right_state: float = 0.0
    visc: float = 4.0 / 3.0

    @property
    def dx(self) -> float:
        return float(self.grid[1] - self.grid[0])

    def __call__(self, x):
        return self._eval(x)[0]

    def derivative(self, x):
        """``v_x`` evaluated from the ODE right-hand side at ``v(x)``, not by differencing."""
        v = self._eval(x)[0]
        inside = (np.asarray(x) >= self.grid[0]) & (np.asarray(x) <= self.grid[-1])
        if self.params is None:
            slope = -v * (1.0 - v) / self.visc
        else:
            slope = profile_rhs(v, self.params)
        return np.where(inside, slope, 0.0)

    def _eval(self, x):
        x = np.asarray(x, dtype=float)
        h = self.dx
        n = len(self.grid)
        s = (x - self.grid[0]) / h
        i = np.clip(np.floor(s).astype(int), 0, n - 2)
        t = np.clip(s - i, 0.0, 1.0)
        y0, y1 = self.values[i], self.values[i + 1]
        d0, d1 = self.derivs[i] * h, self.derivs[i + 1] * h
        t2, t3 = t * t, t * t * t
        v = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * d1
        dv = ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * d0 + (-6 * t2 + 6 * t) * y1 + (3 * t2 - 2 * t) * d1) / h
        v = np.where(x < self.grid[0], self.left_state, np.where(x > self.grid[-1], self.right_state, v))
        dv = np.where((x < self.grid[0]) | (x > self.grid[-1]), 0.0, dv)
        return v, dv

    def table(self):
        """``(x0, dx, values, derivs, left_state, right_state)`` for the compiled shooter."""
        return (float(self.grid[0]), self.dx, self.values, self.derivs,
                float(self.left_state), float(self.right_state))

    def translated(self, shift: float) -> "Profile":
        """Same orbit with ``v_new(x) = v(x - shift)``."""
        return Profile(self.params, self.grid + shift, self.values, self.derivs,
                       self.l_minus - shift, self.l_plus + shift, self.endpoint_error,
                       self.left_state, self.right_state, self.visc)

    def to_json(self) -> str:
        return json.dumps({
            "params": None if self.params is None else self.params.to_dict(),
            "l_minus": self.l_minus,
            "l_plus": self.l_plus,
            "grid": self.grid.tolist(),
            "values": self.values.tolist(),
            "endpoint_error": self.endpoint_error,
            "visc": self.visc,
        })

    @classmethod
    def from_json(cls, text: str) -> "Profile":
        d = json.loads(text)
        params = None if d["params"] is None else PhysicalParams.from_dict(d["params"])
        grid = np.asarray(d["grid"], dtype=float)
        values = np.asarray(d["values"], dtype=float)
        visc = d.get("visc", 4.0 / 3.0)
        if params is not None:
            derivs = profile_rhs(values, params)
            right = params.v_plus
        else:
            derivs = -values * (1.0 - values) / visc
            right = 0.0
        return cls(params, grid, values, derivs, d["l_minus"], d["l_plus"],
                   d["endpoint_error"], 1.0, right, visc)


def _integrate_side(params, v0, length, sign, integ_tol):
    """Integrate toward one endstate in the log of the distance to it.

    On the right the state is ``log(v - v_+)`` as a function of ``x``; on the
    left it is ``log(1 - v)`` as a function of ``-x``.  Both decay linearly, so
    relative accuracy is kept deep into the exponential tails.
    """
    vp = params.v_plus
    if sign > 0:
        def rhs(x, u):
            y = np.exp(u)
            return profile_rhs(vp + y, params) / y
        u0 = math.log(v0 - vp)
    else:
        def rhs(x, u):
            z = np.exp(u)
            return profile_rhs(1.0 - z, params) / z
        u0 = math.log(1.0 - v0)
    sol = solve_ivp(rhs, (0.0, length), [u0], method="RK45",
                    rtol=integ_tol, atol=integ_tol, dense_output=True)
    if not sol.success:
        raise ProfileConvergenceError(sol.message)
    dense = sol.sol
    if sign > 0:
        return lambda x: vp + np.exp(dense(x)[0])
    return lambda x: 1.0 - np.exp(dense(x)[0])


def compute_profile(params: PhysicalParams, tol: float = 1e-3, integ_tol: float = 1e-8,
                    l_init: float = DEFAULT_L, l_cap: float | None = None,
                    dx: float = GRID_SPACING) -> Profile:
    """Integrate the profile ODE both ways from ``v(0) = anchor_value(v_+)``.

    Each truncation length grows by a factor 1.5 until its endpoint error is
    below ``tol``; exceeding ``l_cap`` (default ``10 * l_init``) raises
    :class:`ProfileConvergenceError`.
    """
    vp = params.v_plus
    if not 0 < vp < 1:
        raise DomainError(f"a shock profile needs 0 < v_plus < 1, got {vp!r}")
    if l_cap is None:
        l_cap = 10.0 * l_init
    v0 = anchor_value(vp)

    def side(sign, target):
        length = min(l_init, l_cap)
        while True:
            sol = _integrate_side(params, v0, length, sign, integ_tol)
            err = abs(float(sol(length)) - target)
            if err <= tol:
                return length, sol, err
            if length >= l_cap:
                raise ProfileConvergenceError(
                    f"endpoint error {err:.3g} above {tol:g} at L={length:.4g} (cap {l_cap:g})")
            length = min(1.5 * length, l_cap)

    l_plus, sol_p, err_p = side(+1, vp)
    l_minus, sol_m, err_m = side(-1, 1.0)
    l_plus_raw, l_minus_raw = l_plus, l_minus
    n_plus = int(math.ceil(l_plus / dx))
    n_minus = int(math.ceil(l_minus / dx))
    l_plus, l_minus = n_plus * dx, n_minus * dx
    xs_p = np.arange(n_plus + 1) * dx
    xs_m = np.arange(n_minus, 0, -1) * dx
    values = np.concatenate([sol_m(np.minimum(xs_m, l_minus_raw)), sol_p(np.minimum(xs_p, l_plus_raw))])
    grid = np.concatenate([-xs_m, xs_p])
    # drop tail nodes whose distance to the endstate is below round-off resolution
    keep = ((values - vp) > 64 * np.spacing(vp)) & ((1.0 - values) > 64 * np.spacing(1.0))
    keep &= np.concatenate([[True], np.diff(values) < 0]) & np.concatenate([np.diff(values) < 0, [True]])
    lo = np.argmax(keep)
    hi = len(keep) - np.argmax(keep[::-1])
    grid, values = grid[lo:hi], values[lo:hi]
    l_minus, l_plus = -float(grid[0]), float(grid[-1])
    err = max(abs(values[0] - 1.0), abs(values[-1] - vp))
    return Profile(params, grid, values, profile_rhs(values, params),
                   l_minus, l_plus, float(err), 1.0, vp, params.visc)


def limiting_profile(x, params: PhysicalParams | None = None):
    """Strong-shock limit ``(1 - tanh(x / (2 (2mu+eta)))) / 2``, translated so ``v0(0) = 1/12``."""
    k = 4.0 / 3.0 if params is None else params.visc
    shift = 2.0 * k * math.atanh(5.0 / 6.0)
    return 0.5 * (1.0 - np.tanh((np.asarray(x, dtype=float) + shift) / (2.0 * k)))


def limiting_profile_table(params: PhysicalParams | None = None, tol: float = 1e-3,
                           threshold: float = 1e-8, l_init: float = DEFAULT_L,
                           dx: float = GRID_SPACING) -> Profile:
    """The limiting profile sampled like :func:`compute_profile` output.

    The right truncation is extended until ``v0(L+) < threshold``; the left one
    until ``1 - v0(-L-) <= tol``.
    """
    k = 4.0 / 3.0 if params is None else params.visc
    shift = 2.0 * k * math.atanh(5.0 / 6.0)
    # 1 - tanh(y) < 2 threshold  <=>  y > atanh(1 - 2 threshold)
    l_plus = max(l_init, 2.0 * k * math.atanh(1.0 - 2.0 * threshold) - shift)
    l_minus = l_init
    while 1.0 - float(limiting_profile(-l_minus, params)) > tol:
        l_minus *= 1.5
    n_plus = int(math.ceil(l_plus / dx))
    n_minus = int(math.ceil(l_minus / dx))
    grid = np.arange(-n_minus, n_plus + 1) * dx
    values = limiting_profile(grid, params)
    derivs = -values * (1.0 - values) / k
    err = max(1.0 - values[0], values[-1])
    return Profile(None, grid, values, derivs, n_minus * dx, n_plus * dx, float(err), 1.0, 0.0, k)
