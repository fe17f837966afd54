"""Expected stopping time of follow-the-leader by stage recursion.

With ``x`` sorted decreasingly, stage ``n`` covers the stretch where the
``n`` leading coordinates share a running minimum ``y`` that falls from
``x_n`` to ``x_{n+1}`` (1-based).  On a stage the value with leader gap
``s`` has the form

    f(s, y) = A(y) + B(y) p(s, y) + (2 s / mu) (1 - 2 p(s, y)),

``B`` solves a first-order linear ODE in ``y`` and ``A`` follows from
``f(q(y), y) = 0``.  Stage ``n`` starts from the value of stage ``n + 1``
at ``y = x_{n+1}``; the recursion is seeded at ``n = N`` with the value of
an ``N``-way tie.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import kernels
from .errors import InvalidArgumentError, SingularStageError
from .model import ProblemConfig, check_epsilon, check_threshold, leader_group_size


@dataclass(frozen=True)
class OdeOptions:
    """Step control for the stage integrator.

    The first pass uses ``max(min_steps, ceil(length * steps_per_unit))``
    RK4 steps; the step is halved until the top value moves by less than
    ``tol``.
    """

    min_steps: int = 2000
    steps_per_unit: float = 4000.0
    tol: float = 1e-10
    max_halvings: int = 12


DEFAULT_OPTS = OdeOptions()


def mpr_value(n_boxes: int, mu: float, epsilon: float) -> float:
    """Expected FTL time from an ``n_boxes``-way tie."""
    if int(n_boxes) != n_boxes or n_boxes < 2:
        raise InvalidArgumentError(f"n_boxes must be an integer >= 2, got {n_boxes}")
    if not (mu > 0 and math.isfinite(mu)):
        raise InvalidArgumentError(f"mu must be positive, got {mu}")
    epsilon = check_epsilon(epsilon)
    N = int(n_boxes)
    p0 = 1.0 - epsilon
    return 2.0 / mu**2 * ((N - 2) / (N - 1) * (N * p0 - 1.0)
                          + (2.0 * p0 - 1.0) * math.log((1.0 - epsilon) / (epsilon / (N - 1))))


def k_fun(n: int, b_n: float, mu: float, y):
    return n - 1 + b_n * np.exp(-mu * np.asarray(y, dtype=float))


def q_fun(n: int, b_n: float, mu: float, epsilon: float, y):
    """Leader gap at which the leader's posterior reaches ``1 - epsilon``."""
    return np.log((1.0 - epsilon) * k_fun(n, b_n, mu, y) / epsilon) / mu


def p_fun(s, K, mu: float):
    """Posterior of the unique leader at gap ``s``: ``e^{mu s} / (e^{mu s} + K)``."""
    return 1.0 / (1.0 + np.asarray(K, dtype=float) * np.exp(-mu * np.asarray(s, dtype=float)))


def _stage_rhs(n, b, mu, p0, y, B):
    K = (n - 1) + b * np.exp(-mu * y)
    c = 1.0 - p0 * (1.0 + K)
    num = ((n - 1) * mu * B + 2.0 * n * (K - 1.0) / mu
           - 2.0 * (1.0 - 2.0 * p0) * (K - n + 1.0) * (K + 1.0) / (mu * K))
    return num / c


@dataclass(frozen=True)
class StageSolution:
    """Numerical solution of one stage.

    ``y_grid``, ``B_vals`` and ``A_vals`` are on the integrator's final grid.
    Internally the stage works in ``y - y_lo`` with the tail weights scaled by
    ``exp(-mu y_lo)``; ``b_n`` is reported on the original scale.
    """

    n: int
    y_lo: float
    y_hi: float
    b_n: float
    y_grid: np.ndarray = field(repr=False)
    B_vals: np.ndarray = field(repr=False)
    A_vals: np.ndarray = field(repr=False)
    v_top: float
    v_boundary: float
    mu: float
    epsilon: float
    n_steps: int
    _b_scaled: float = field(repr=False)
    _spline: CubicHermiteSpline | None = field(default=None, repr=False, compare=False)

    def K(self, y):
        return k_fun(self.n, self._b_scaled, self.mu, np.asarray(y, dtype=float) - self.y_lo)

    def q(self, y):
        return q_fun(self.n, self._b_scaled, self.mu, self.epsilon, np.asarray(y, dtype=float) - self.y_lo)

    def B(self, y):
        if self._spline is None:
            return np.full_like(np.asarray(y, dtype=float), self.B_vals[0])
        return self._spline(np.asarray(y, dtype=float) - self.y_lo)

    def A(self, y):
        return 2.0 * self.q(y) * (1.0 - 2.0 * self.epsilon) / self.mu - (1.0 - self.epsilon) * self.B(y)

    def to_dict(self) -> dict:
        return {"n": self.n, "y_lo": self.y_lo, "y_hi": self.y_hi, "v_top": self.v_top}


@dataclass(frozen=True)
class ValueResult:
    value: float
    stages: list[StageSolution]
    config: ProblemConfig

    def to_dict(self) -> dict:
        return {"value": self.value, "stages": [s.to_dict() for s in self.stages]}


def solve_stage(n: int, x_tail: Sequence[float], v_boundary: float, cfg: ProblemConfig,
                *, y_hi: float, opts: OdeOptions = DEFAULT_OPTS) -> StageSolution:
    """Integrate stage ``n`` from ``y = x_tail[0]`` up to ``y_hi``.

    ``x_tail`` holds the coordinates below the ``n`` tied leaders and
    ``v_boundary`` is the value of stage ``n + 1`` at ``y = x_tail[0]``.
    """
    x_tail = np.asarray(x_tail, dtype=float)
    if n < 1 or x_tail.size < 1:
        raise InvalidArgumentError("a stage needs n >= 1 leaders and a non-empty tail")
    if v_boundary < 0:
        raise InvalidArgumentError(f"boundary value must be non-negative, got {v_boundary}")
    mu, eps = cfg.mu, cfg.epsilon
    p0 = 1.0 - eps
    y_lo = float(x_tail[0])
    if y_hi < y_lo or np.any(np.diff(x_tail) > 0):
        raise InvalidArgumentError("stage needs y_hi >= x_tail[0] >= x_tail[1] >= ...")
    length = y_hi - y_lo
    b = float(np.sum(np.exp(mu * (x_tail - y_lo))))
    with np.errstate(over="ignore"):
        b_n = float(b * np.exp(mu * y_lo))

    K_lo = n - 1 + b
    K_hi = n - 1 + b * math.exp(-mu * length)
    # the leading coefficient 1 - p0 (1 + K) increases with y, so its maximum is at y_hi
    if 1.0 - p0 * (1.0 + K_hi) >= 0.0 or K_hi <= 0.0:
        raise SingularStageError(
            f"stage n={n}: ODE coefficient vanishes on [{y_lo}, {y_hi}] "
            "(leader already at the stopping level)")
    q_lo = math.log(p0 * K_lo / eps) / mu
    B0 = (1.0 + K_lo) * (mu * v_boundary - 2.0 * q_lo * (1.0 - 2.0 * eps)) / (mu * (1.0 - p0 * (1.0 + K_lo)))

    def top(Bs):
        q_hi = math.log(p0 * K_hi / eps) / mu
        A_hi = 2.0 * q_hi * (1.0 - 2.0 * eps) / mu - p0 * Bs[-1]
        return A_hi + Bs[-1] / (1.0 + K_hi)

    # stages shorter than rounding noise carry no information and break the grid
    if length <= 1e-12 * max(1.0, abs(y_hi)):
        ys, Bs, m, v_top = np.array([0.0]), np.array([B0]), 0, float(v_boundary)
    else:
        m = max(opts.min_steps, math.ceil(length * opts.steps_per_unit))
        ys, Bs = kernels.integrate_stage(n, b, mu, eps, 0.0, length, B0, m)
        v_top = top(Bs)
        for _ in range(opts.max_halvings):
            ys2, Bs2 = kernels.integrate_stage(n, b, mu, eps, 0.0, length, B0, 2 * m)
            v2 = top(Bs2)
            converged = abs(v2 - v_top) < opts.tol
            ys, Bs, m, v_top = ys2, Bs2, 2 * m, v2
            if converged:
                break

    spline = None
    if m > 0:
        spline = CubicHermiteSpline(ys, Bs, _stage_rhs(n, b, mu, p0, ys, Bs))
    q = np.log(p0 * (n - 1 + b * np.exp(-mu * ys)) / eps) / mu
    A = 2.0 * q * (1.0 - 2.0 * eps) / mu - p0 * Bs
    y_grid = ys + y_lo
    y_grid[-1] = y_hi
    return StageSolution(n=n, y_lo=y_lo, y_hi=float(y_hi), b_n=b_n, y_grid=y_grid, B_vals=Bs,
                         A_vals=A, v_top=float(v_top), v_boundary=float(v_boundary), mu=mu,
                         epsilon=eps, n_steps=m, _b_scaled=b, _spline=spline)


def ftl_value(cfg: ProblemConfig, opts: OdeOptions = DEFAULT_OPTS) -> ValueResult:
    """Expected stopping time of FTL started from ``cfg.x0``."""
    if check_threshold(cfg.prior(), cfg.epsilon).hit:
        return ValueResult(0.0, [], cfg)
    x = np.asarray(cfg.x0)
    N = x.size
    g = leader_group_size(x)
    v = mpr_value(N, cfg.mu, cfg.epsilon)
    stages = []
    for n in range(N - 1, g - 1, -1):
        y_hi = x[0] if n == g else x[n - 1]
        st = solve_stage(n, x[n:], v, cfg, y_hi=float(y_hi), opts=opts)
        stages.append(st)
        v = st.v_top
    return ValueResult(float(v), stages, cfg)


def eval_interior(stage: StageSolution, s: float, y: float, cfg: ProblemConfig | None = None) -> float:
    """Stage value ``f(s, y)`` for ``y`` in the stage interval and ``0 <= s <= q(y)``."""
    mu = stage.mu if cfg is None else cfg.mu
    tol = 1e-9 * max(1.0, abs(stage.y_hi))
    if not (stage.y_lo - tol <= y <= stage.y_hi + tol):
        raise InvalidArgumentError(f"y={y} outside stage interval [{stage.y_lo}, {stage.y_hi}]")
    qy = float(stage.q(y))
    if not (-1e-12 <= s <= qy + 1e-12):
        raise InvalidArgumentError(f"s={s} outside [0, q(y)={qy}]")
    p = float(p_fun(s, stage.K(y), mu))
    return float(stage.A(y) + stage.B(y) * p + 2.0 * s / mu * (1.0 - 2.0 * p))
