"""Physical parameters, Rankine-Hugoniot closure and shock-type classification."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace


class DomainError(ValueError):
    """Raised when an input lies outside the admissible physical range."""


def rh_coefficient(v_plus: float, gamma: float) -> float:
    """Pressure coefficient ``a`` closing the profile ODE at the right endstate.

    ``a = v_+^gamma (1 - v_+) / (1 - v_+^gamma)``, with the removable
    singularities at ``v_+ = 1`` (limit ``1/gamma``) and ``gamma = 1``
    (limit ``v_+``) filled in.
    """
    if not v_plus > 0:
        raise DomainError(f"v_plus must be positive, got {v_plus!r}")
    if v_plus > 1:
        raise DomainError(f"v_plus must not exceed 1, got {v_plus!r}")
    if gamma < 1:
        raise DomainError(f"gamma must be >= 1, got {gamma!r}")
    if v_plus == 1.0:
        return 1.0 / gamma
    if gamma == 1.0:
        return v_plus
    log_v = math.log(v_plus)
    # (1 - v^g) = -expm1(g log v) keeps precision for v close to 1 or g close to 1
    return math.exp(gamma * log_v) * (-math.expm1(log_v)) / (-math.expm1(gamma * log_v))


@dataclass(frozen=True)
class PhysicalParams:
    """Rescaled parameter set: ``v_- = 1`` and shock speed ``s = -1``.

    ``a`` is derived from ``(v_plus, gamma)`` and is not a constructor argument.
    """

    gamma: float = 5.0 / 3.0
    v_plus: float = 0.5
    b1: float = 0.0
    mu0: float = 1.0
    sigma: float = 1.0
    mu: float = 1.0
    eta: float | None = None
    a: float = field(init=False)

    v_minus = 1.0
    s = -1.0

    def __post_init__(self):
        if self.eta is None:
            object.__setattr__(self, "eta", -2.0 * self.mu / 3.0)
        if not 0 < self.v_plus <= 1:
            raise DomainError(f"v_plus must lie in (0, 1], got {self.v_plus!r}")
        if self.gamma < 1:
            raise DomainError(f"gamma must be >= 1, got {self.gamma!r}")
        if self.b1 < 0:
            raise DomainError(f"b1 must be nonnegative, got {self.b1!r}")
        if not (self.mu0 > 0 and self.sigma > 0 and self.mu > 0):
            raise DomainError("mu0, sigma and mu must be positive")
        if not self.visc > 0:
            raise DomainError(f"2*mu + eta must be positive, got {self.visc!r}")
        object.__setattr__(self, "a", rh_coefficient(self.v_plus, self.gamma))

    @property
    def visc(self) -> float:
        """The profile ODE coefficient ``2 mu + eta``."""
        return 2.0 * self.mu + self.eta

    def with_(self, **changes) -> "PhysicalParams":
        changes.pop("a", None)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {
            "gamma": self.gamma,
            "v_plus": self.v_plus,
            "b1": self.b1,
            "mu0": self.mu0,
            "sigma": self.sigma,
            "mu": self.mu,
            "eta": self.eta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhysicalParams":
        return cls(**{k: d[k] for k in ("gamma", "v_plus", "b1", "mu0", "sigma", "mu", "eta") if k in d})


class ShockKind(enum.Enum):
    LAX1 = "Lax1"
    OVERCOMPRESSIVE = "Overcompressive"
    LAX3 = "Lax3"
    DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class ShockType:
    """Shock classification; ``boundary`` is set only for degenerate cases.

    ``boundary`` is ``"fast"`` when ``B1* = sqrt(mu0 v+)`` and ``"slow"`` when
    ``B1* = sqrt(mu0)``.
    """

    kind: ShockKind
    boundary: str | None = None

    def __str__(self):
        if self.boundary:
            return f"{self.kind.value}({self.boundary})"
        return self.kind.value


def classify_shock(params: PhysicalParams, tol: float = 1e-12) -> ShockType:
    b = params.b1
    fast = math.sqrt(params.mu0 * params.v_plus)
    slow = math.sqrt(params.mu0)
    if abs(b - fast) <= tol * max(fast, 1.0):
        return ShockType(ShockKind.DEGENERATE, "fast")
    if abs(b - slow) <= tol * max(slow, 1.0):
        return ShockType(ShockKind.DEGENERATE, "slow")
    if b < fast:
        return ShockType(ShockKind.LAX1)
    if b < slow:
        return ShockType(ShockKind.OVERCOMPRESSIVE)
    return ShockType(ShockKind.LAX3)


def sound_speed(v: float, params: PhysicalParams) -> float:
    """Gas-dynamical sound speed ``sqrt(gamma a v^(-gamma-1))``."""
    if not v > 0:
        raise DomainError(f"v must be positive, got {v!r}")
    return math.sqrt(params.gamma * params.a * v ** (-params.gamma - 1.0))
