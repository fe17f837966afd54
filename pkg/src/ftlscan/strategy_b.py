"""Strategy B for three boxes.

Observe box 2 until its coordinate either falls to ``a`` (box 1 then
reaches the stopping level) or climbs to ``x_1``; in the latter case
continue with follow-the-leader from the tie ``(x_1, x_1, x_3)``.

While box 2 is observed its coordinate is a unit-variance Brownian motion
with drift ``+mu/2`` if the object is in box 2 and ``-mu/2`` otherwise, so
the expected time mixes two-barrier exit statistics over the prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleConfigError, UnsupportedConfigurationError
from .exit_time import ExitSpec, ExitStats, exit_stats
from .ftl_value import DEFAULT_OPTS, OdeOptions, ftl_value
from .model import ProblemConfig


@dataclass(frozen=True)
class StrategyBResult:
    feasible: bool
    a_level: float
    e_time: float
    p_continue: float
    v_continue: float
    branches: tuple[ExitStats, ...] = ()

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "a_level": self.a_level,
            "e_time": self.e_time,
            "p_continue": self.p_continue,
            "v_continue": self.v_continue,
            "branches": [b.to_dict() for b in self.branches],
        }


def _require_three(cfg: ProblemConfig) -> None:
    if cfg.n_boxes != 3:
        raise UnsupportedConfigurationError(f"Strategy B is defined for 3 boxes, got {cfg.n_boxes}")


def feasibility(cfg: ProblemConfig) -> bool:
    """Whether ``pi_1(0) < 1 - eps < e^{mu x1} / (e^{mu x1} + 2 e^{mu x3})`` with strict ordering."""
    _require_three(cfg)
    x1, x2, x3 = cfg.x0
    if not (x1 > x2 > x3):
        return False
    p0 = cfg.p0
    pi1 = float(cfg.prior().probs[0])
    upper = 1.0 / (1.0 + 2.0 * math.exp(cfg.mu * (x3 - x1)))
    return pi1 < p0 < upper


def boundary_a(cfg: ProblemConfig) -> float:
    """Level of box 2 at which box 1's posterior equals ``1 - eps``."""
    if not feasibility(cfg):
        raise InfeasibleConfigError(f"Strategy B infeasible for x0={cfg.x0}, eps={cfg.epsilon}")
    x1, _, x3 = cfg.x0
    eps = cfg.epsilon
    return x1 + math.log(eps / (1.0 - eps) - math.exp(cfg.mu * (x3 - x1))) / cfg.mu


def strategy_b_value(cfg: ProblemConfig, opts: OdeOptions = DEFAULT_OPTS) -> StrategyBResult:
    """Expected stopping time of Strategy B."""
    a = boundary_a(cfg)
    x1, x2, x3 = cfg.x0
    mu = cfg.mu
    prior = [float(p) for p in cfg.prior().probs]
    v_cont = ftl_value(ProblemConfig(mu, cfg.epsilon, (x1, x1, x3)), opts).value

    branches = []
    p_continue = 0.0
    e_exit = 0.0
    for k in range(3):
        drift = 0.5 * mu if k == 1 else -0.5 * mu
        st = exit_stats(ExitSpec(x=x2, a=x1, b=a, lam=drift, sigma2=1.0))
        branches.append(st)
        p_continue += prior[k] * st.p_upper
        e_exit += prior[k] * st.t_mean
    return StrategyBResult(True, a, float(e_exit + p_continue * v_cont), float(p_continue),
                           float(v_cont), tuple(branches))
