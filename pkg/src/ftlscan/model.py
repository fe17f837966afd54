"""Problem configuration, posterior algebra and the follow-the-leader rule.

Box ``j`` carries the log-likelihood coordinate ``x_j = log(z_j) / mu``; the
posterior is the softmax of ``mu * x``.  Box indices are 0-based throughout
the Python API.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError

#: Coordinates closer than this to the leader are treated as tied with it.
TIE_TOL = 1e-12


def _finite_vector(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidArgumentError(f"{name} must be a non-empty 1-d vector")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError(f"{name} must be finite, got {arr.tolist()}")
    return arr


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not (math.isfinite(mu) and mu > 0):
        raise InvalidArgumentError(f"mu must be a positive finite number, got {mu}")
    return mu


def check_epsilon(epsilon: float) -> float:
    epsilon = float(epsilon)
    if not (0.0 < epsilon < 0.5):
        raise InvalidArgumentError(f"epsilon must lie in (0, 1/2), got {epsilon}")
    return epsilon


@dataclass(frozen=True)
class ProblemConfig:
    """Drift ``mu``, error bound ``epsilon`` and the initial coordinates ``x0``.

    ``x0`` must be sorted non-increasingly so that box 0 is the initial leader.
    """

    mu: float
    epsilon: float
    x0: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", _check_mu(self.mu))
        object.__setattr__(self, "epsilon", check_epsilon(self.epsilon))
        x = _finite_vector(self.x0, "x0")
        if x.size < 2:
            raise InvalidArgumentError("need at least two boxes")
        if np.any(np.diff(x) > 0):
            raise InvalidArgumentError(f"x0 must be sorted non-increasing, got {x.tolist()}")
        object.__setattr__(self, "x0", tuple(float(v) for v in x))

    @property
    def n_boxes(self) -> int:
        return len(self.x0)

    @property
    def p0(self) -> float:
        """The stopping level ``1 - epsilon``."""
        return 1.0 - self.epsilon

    def prior(self) -> "Posterior":
        return posterior_from_loglik(self.x0, self.mu)

    def shifted(self, c: float) -> "ProblemConfig":
        return ProblemConfig(self.mu, self.epsilon, tuple(v + c for v in self.x0))

    def to_dict(self) -> dict:
        return {"mu": self.mu, "epsilon": self.epsilon, "x0": list(self.x0)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "ProblemConfig":
        missing = {"mu", "epsilon", "x0"} - set(data)
        if missing:
            raise InvalidArgumentError(f"config is missing keys: {sorted(missing)}")
        try:
            x0 = tuple(float(v) for v in data["x0"])
        except (TypeError, ValueError) as exc:
            raise InvalidArgumentError(f"x0 must be a list of numbers: {exc}") from None
        return cls(mu=data["mu"], epsilon=data["epsilon"], x0=x0)

    @classmethod
    def from_json(cls, text: str) -> "ProblemConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidArgumentError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "ProblemConfig":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Posterior:
    probs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise InvalidArgumentError("probs must be a non-empty vector")
        if np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
            raise InvalidArgumentError(f"probabilities must lie in [0, 1], got {p.tolist()}")
        if abs(p.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError(f"probabilities must sum to 1, got sum {p.sum()!r}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __len__(self) -> int:
        return self.probs.size

    def __repr__(self) -> str:
        return f"Posterior({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True)
class ThresholdEvent:
    hit: bool
    index: int | None
    level: float


def posterior_from_loglik(x: Sequence[float], mu: float) -> Posterior:
    """Softmax of ``mu * x`` with the maximum shifted out before exponentiating."""
    mu = _check_mu(mu)
    x = _finite_vector(x)
    a = mu * x
    w = np.exp(a - a.max())
    return Posterior(w / w.sum())


def loglik_from_posterior(p: Posterior | Sequence[float], mu: float) -> np.ndarray:
    """Inverse of :func:`posterior_from_loglik`, defined up to an additive constant."""
    mu = _check_mu(mu)
    probs = p.probs if isinstance(p, Posterior) else Posterior(np.asarray(p, dtype=float)).probs
    if np.any(probs <= 0):
        raise InvalidArgumentError("a zero probability has no finite log-likelihood coordinate")
    return np.log(probs) / mu


def ftl_select(x: Sequence[float]) -> int:
    """Index observed by follow-the-leader: the largest index among the maximizers.

    Box ``j`` leads when ``x_j = max(x_0..x_j)`` and ``x_j > max(x_{j+1}..)``,
    which picks exactly one index for every input.
    """
    x = _finite_vector(x)
    return int(x.size - 1 - np.argmax(x[::-1]))


def check_threshold(p: Posterior, epsilon: float) -> ThresholdEvent:
    level = 1.0 - float(epsilon)
    probs = p.probs
    j = int(probs.size - 1 - np.argmax(probs[::-1]))
    if probs[j] >= level:
        return ThresholdEvent(True, j, level)
    return ThresholdEvent(False, None, level)


def leader_group_size(x: Sequence[float], tol: float = TIE_TOL) -> int:
    """Number of leading coordinates within ``tol`` of the maximum (``x`` sorted non-increasing)."""
    x = _finite_vector(x)
    return int(np.count_nonzero(x >= x[0] - tol))
