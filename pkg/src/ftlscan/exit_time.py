"""Two-barrier exit analytics for Brownian motion with drift.

For ``dX = lam dt + sigma dW`` started at ``x`` in ``(b, a)`` we return the
probability of leaving through ``a`` and the expected exit time conditional
on each side.

The textbook conditional-time formulas carry a ``1/lam`` prefactor against
an exponential difference that vanishes with ``lam``.  Writing
``h(w) = (w/2) coth(w/2)`` the linear parts cancel exactly and

    F_a = (4 / sigma2) [ (a-b)^2 g(u(a-b)) - (x-b)^2 g(u(x-b)) ]
    F_b = (4 / sigma2) [ (a-b)^2 g(u(a-b)) - (a-x)^2 g(u(a-x)) ]

with ``u = 2 lam / sigma2`` and ``g(w) = (h(w) - 1) / w^2``, an even function
with ``g(0) = 1/12``.  Near zero ``g`` is evaluated from its Taylor series,
so there is no division by ``lam`` anywhere and the driftless limits
``((a-b)^2 - (x-b)^2) / (3 sigma2)`` come out directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError

_SERIES_CUTOFF = 0.2


@dataclass(frozen=True)
class ExitSpec:
    x: float
    a: float
    b: float
    lam: float = 0.0
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        for name in ("x", "a", "b", "lam", "sigma2"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidArgumentError(f"{name} must be finite")
        if not (self.b < self.x < self.a):
            raise InvalidArgumentError(f"need b < x < a, got b={self.b}, x={self.x}, a={self.a}")
        if self.sigma2 <= 0:
            raise InvalidArgumentError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def rho(self) -> float:
        return self.lam / self.sigma2

    def reflected(self) -> "ExitSpec":
        """Mirror image ``X -> -X``; its upper exit is this spec's lower exit."""
        return ExitSpec(-self.x, -self.b, -self.a, -self.lam, self.sigma2)


@dataclass(frozen=True)
class ExitStats:
    p_upper: float
    t_upper: float
    t_lower: float
    t_mean: float

    def to_dict(self) -> dict:
        return {"p_upper": self.p_upper, "t_upper": self.t_upper,
                "t_lower": self.t_lower, "t_mean": self.t_mean}


def _g(w: float) -> float:
    w = abs(w)
    if w < _SERIES_CUTOFF:
        w2 = w * w
        return 1.0 / 12 + w2 * (-1.0 / 720 + w2 * (1.0 / 30240 + w2 * (-1.0 / 1209600 + w2 / 47900160)))
    return (0.5 * w / math.tanh(0.5 * w) - 1.0) / (w * w)


def exit_prob(spec: ExitSpec) -> float:
    """Probability of leaving through the upper barrier ``a``."""
    x, a, b = spec.x, spec.a, spec.b
    u = 2.0 * spec.rho
    if u == 0.0:
        return (x - b) / (a - b)
    if u > 0.0:
        return math.expm1(-u * (x - b)) / math.expm1(-u * (a - b))
    # exponents rearranged to stay non-positive
    return (math.expm1(u * (a - x)) - math.expm1(u * (a - b))) / -math.expm1(u * (a - b))


def exit_time_upper(spec: ExitSpec) -> float:
    """Expected exit time conditional on leaving through ``a``."""
    u = 2.0 * spec.rho
    ab, xb = spec.a - spec.b, spec.x - spec.b
    return 4.0 / spec.sigma2 * (ab * ab * _g(u * ab) - xb * xb * _g(u * xb))


def exit_time_lower(spec: ExitSpec) -> float:
    """Expected exit time conditional on leaving through ``b``."""
    u = 2.0 * spec.rho
    ab, ax = spec.a - spec.b, spec.a - spec.x
    return 4.0 / spec.sigma2 * (ab * ab * _g(u * ab) - ax * ax * _g(u * ax))


def exit_stats(spec: ExitSpec) -> ExitStats:
    p = exit_prob(spec)
    tu = exit_time_upper(spec)
    tl = exit_time_lower(spec)
    return ExitStats(p, tu, tl, p * tu + (1.0 - p) * tl)
