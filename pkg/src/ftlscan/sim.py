"""Monte Carlo simulation of the search dynamics.

Observing box ``J`` for a step of length ``dt`` moves only ``X_J``, by
``sqrt(dt) * xi + mu * 1{J = j*} dt - mu dt / 2``.  The true box ``j*`` is
drawn from the prior at the start of every replicate.  The compiled kernel
(see :mod:`ftlscan.kernels`) handles the hot loop; :func:`simulate_path` is
a slow step-by-step reference that records the whole trajectory.

Random streams: every replicate gets its own ``SeedSequence(seed,
spawn_key=(i,))`` driving an SFC64 generator, so results do not depend on
how replicates are spread over threads.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .errors import InvalidArgumentError, NonConvergenceError, UnsupportedConfigurationError
from .model import ProblemConfig, check_threshold, ftl_select, posterior_from_loglik

MAX_STEPS = 10**9

SeedLike = int | np.random.SeedSequence


def seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def replicate_seed(seed: SeedLike, index: int) -> np.random.SeedSequence:
    """Seed of replicate ``index``; identical to ``seed_sequence(seed).spawn(...)[index]``."""
    root = seed_sequence(seed)
    return np.random.SeedSequence(root.entropy, spawn_key=root.spawn_key + (index,),
                                  pool_size=root.pool_size)


def make_generator(seed: SeedLike) -> np.random.Generator:
    return np.random.Generator(np.random.SFC64(seed_sequence(seed)))


# ---------------------------------------------------------------- policies

@dataclass(frozen=True)
class Policy:
    """Which box to observe.

    ``kind`` is ``"ftl"``, ``"fixed"`` (always box ``index``) or
    ``"strategy_b"`` (box 1 until it reaches the initial leader level, then
    FTL; ``a_level`` is informational since the stop at ``a`` is the
    ordinary threshold rule).
    """

    kind: str = "ftl"
    index: int = 0
    a_level: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("ftl", "fixed", "strategy_b"):
            raise InvalidArgumentError(f"unknown policy kind {self.kind!r}")

    @classmethod
    def ftl(cls) -> "Policy":
        return cls("ftl")

    @classmethod
    def fixed(cls, index: int) -> "Policy":
        return cls("fixed", index=int(index))

    @classmethod
    def strategy_b(cls, a_level: float | None = None) -> "Policy":
        return cls("strategy_b", index=1, a_level=a_level)

    def _kernel_args(self, cfg: ProblemConfig) -> tuple[int, int, float]:
        if self.kind == "ftl":
            return kernels.FTL, 0, math.inf
        if not 0 <= self.index < cfg.n_boxes:
            raise InvalidArgumentError(f"box index {self.index} out of range")
        if self.kind == "fixed":
            return kernels.FIXED, self.index, math.inf
        if cfg.n_boxes != 3:
            raise UnsupportedConfigurationError("Strategy B is defined for 3 boxes")
        return kernels.STRATEGY_B, 1, cfg.x0[0]

    def decider(self, cfg: ProblemConfig):
        """Stateful rule ``(x, probs, t) -> box`` for step-by-step simulation."""
        code, target, switch_level = self._kernel_args(cfg)
        state = {"phase": 0}

        def choose(x, probs=None, t=0.0) -> int:
            if code == kernels.FIXED:
                return target
            if code == kernels.STRATEGY_B and state["phase"] == 0:
                if x[target] < switch_level:
                    return target
                state["phase"] = 1
            return ftl_select(x)

        return choose


# ---------------------------------------------------------------- single runs

@dataclass(frozen=True)
class SimResult:
    t_stop: float
    declared_index: int | None
    true_index: int
    correct: bool
    n_steps: int
    stopped: bool = True
    x_final: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {"t_stop": self.t_stop, "declared_index": self.declared_index,
                "true_index": self.true_index, "correct": self.correct,
                "n_steps": self.n_steps, "stopped": self.stopped}


def _check_dt(dt: float) -> float:
    dt = float(dt)
    if not (dt > 0 and math.isfinite(dt)):
        raise InvalidArgumentError(f"dt must be positive, got {dt}")
    return dt


def _run(cfg: ProblemConfig, args, dt: float, gen, max_steps: int | None,
         substeps: int = 1) -> SimResult:
    code, target, switch_level = args
    x = np.array(cfg.x0, dtype=float)
    limit = MAX_STEPS if max_steps is None else int(max_steps)
    n, jstar, status = kernels.run_search(gen, x, cfg.mu, cfg.epsilon, dt, code, target,
                                          switch_level, limit, substeps)
    stopped = status == kernels.STOPPED
    if not stopped and max_steps is None:
        raise NonConvergenceError(f"no stop after {MAX_STEPS} steps")
    declared = None
    if stopped:
        event = check_threshold(posterior_from_loglik(x, cfg.mu), cfg.epsilon)
        declared = event.index if event.hit else int(len(x) - 1 - np.argmax(x[::-1]))
    return SimResult(n * dt, declared, int(jstar), declared == jstar, int(n), stopped,
                     tuple(x.tolist()))


def simulate_search(cfg: ProblemConfig, policy: Policy, dt: float, seed: SeedLike,
                    *, max_steps: int | None = None, substeps: int = 1) -> SimResult:
    """One search from ``cfg.x0``; with ``max_steps`` the run may end unstopped at the horizon.

    ``substeps > 1`` builds each step from that many finer normals, so a run
    with ``(k * dt, substeps=k)`` sees the same Brownian path as ``(dt, 1)``
    on the same seed, observed on a coarser grid.
    """
    dt = _check_dt(dt)
    return _run(cfg, policy._kernel_args(cfg), dt, make_generator(seed), max_steps,
                _check_substeps(substeps))


@dataclass(frozen=True)
class MeanEstimate:
    mean: float
    std_error: float
    n_reps: int
    p_correct: float
    dt: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "std_error": self.std_error, "n_reps": self.n_reps,
                "p_correct": self.p_correct, "dt": self.dt}


def _check_substeps(substeps: int) -> int:
    if int(substeps) != substeps or substeps < 1:
        raise InvalidArgumentError(f"substeps must be a positive integer, got {substeps}")
    return int(substeps)


def _replicates(cfg, policy, dt, n_reps, seed, threads, max_steps=None, substeps=1, start=0):
    args = policy._kernel_args(cfg)
    results: list[SimResult | None] = [None] * n_reps

    def work(lo, hi):
        for i in range(lo, hi):
            results[i] = _run(cfg, args, dt, make_generator(replicate_seed(seed, start + i)), max_steps,
                              substeps)

    threads = max(1, min(int(threads), n_reps))
    bounds = np.linspace(0, n_reps, threads + 1).astype(int)
    if threads == 1:
        work(0, n_reps)
    else:
        with ThreadPoolExecutor(threads) as pool:
            for fut in [pool.submit(work, lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]:
                fut.result()
    return results


def sample_stopping_times(cfg: ProblemConfig, policy: Policy, dt: float, n_reps: int,
                          seed: SeedLike, threads: int = 1, substeps: int = 1,
                          start: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Stopping times and correctness flags of replicates ``start .. start + n_reps - 1``.

    Replicate ``i`` always uses the same stream, so two calls with different
    ``dt`` (and matching ``substeps``) give paired samples.
    """
    dt = _check_dt(dt)
    if n_reps < 1:
        raise InvalidArgumentError("n_reps must be positive")
    res = _replicates(cfg, policy, dt, n_reps, seed, threads, substeps=_check_substeps(substeps),
                      start=int(start))
    t = np.fromiter((r.t_stop for r in res), float, n_reps)
    correct = np.fromiter((r.correct for r in res), bool, n_reps)
    return t, correct


def estimate_mean_time(cfg: ProblemConfig, policy: Policy, dt: float, n_reps: int,
                       seed: SeedLike, threads: int = 1, substeps: int = 1) -> MeanEstimate:
    """Sample mean and standard error of the stopping time over ``n_reps`` replicates."""
    if n_reps < 2:
        raise InvalidArgumentError("n_reps must be at least 2")
    t, correct = sample_stopping_times(cfg, policy, dt, n_reps, seed, threads, substeps)
    return MeanEstimate(float(t.mean()), float(t.std(ddof=1) / math.sqrt(n_reps)), n_reps,
                        float(correct.mean()), float(dt))


@dataclass(frozen=True)
class BoxMartingaleCheck:
    box: int
    initial: float
    mean: float
    std_error: float
    passed: bool


def posterior_martingale_probe(cfg: ProblemConfig, dt: float, horizon: float, n_reps: int,
                               seed: SeedLike, policy: Policy | None = None,
                               threads: int = 1) -> list[BoxMartingaleCheck]:
    """Compare ``E[pi_j(t ^ T)]`` with ``pi_j(0)`` at ``t = horizon`` (3 standard errors)."""
    policy = policy or Policy.ftl()
    dt = _check_dt(dt)
    res = _replicates(cfg, policy, dt, n_reps, seed, threads, max_steps=round(horizon / dt))
    pis = np.array([posterior_from_loglik(r.x_final, cfg.mu).probs for r in res])
    pi0 = cfg.prior().probs
    out = []
    for j in range(cfg.n_boxes):
        m = float(pis[:, j].mean())
        se = float(pis[:, j].std(ddof=1) / math.sqrt(n_reps))
        out.append(BoxMartingaleCheck(j, float(pi0[j]), m, se, bool(abs(m - pi0[j]) <= 3 * se)))
    return out


# ---------------------------------------------------------------- reference path

@dataclass
class PathRecord:
    """Trajectory of one search, one row per grid time.

    ``J[i]`` is the box observed on ``[t_i, t_{i+1})`` (-1 on the last row);
    ``logz`` is the log unnormalised likelihood accumulated directly from the
    observation increments, independently of ``X``.
    """

    t: np.ndarray
    W: np.ndarray
    Y: np.ndarray
    X: np.ndarray
    J: np.ndarray
    pi: np.ndarray
    logz: np.ndarray
    result: SimResult

    def to_csv(self, path: str | Path) -> None:
        n = self.X.shape[1]
        header = ["t", "W"] + [f"X_{j + 1}" for j in range(n)] + ["J"] + [f"pi_{j + 1}" for j in range(n)]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i in range(self.t.size):
                box = int(self.J[i]) + 1 if self.J[i] >= 0 else ""
                w.writerow([repr(float(self.t[i])), repr(float(self.W[i]))]
                           + [repr(float(v)) for v in self.X[i]] + [box]
                           + [repr(float(v)) for v in self.pi[i]])


def simulate_path(cfg: ProblemConfig, policy: Policy, dt: float, seed: SeedLike,
                  *, max_steps: int = 10**6) -> PathRecord:
    """Step-by-step search that recomputes the posterior every step and records the path.

    Consumes the generator exactly like the compiled kernel (one uniform for
    the true box, then one normal per step), so for the same seed it follows
    the same trajectory as :func:`simulate_search`.
    """
    dt = _check_dt(dt)
    gen = make_generator(seed)
    mu, eps = cfg.mu, cfg.epsilon
    choose = policy.decider(cfg)
    x = np.array(cfg.x0, dtype=float)
    pi = posterior_from_loglik(x, mu).probs
    logz = np.log(pi)

    u = gen.random()
    acc, jstar = 0.0, cfg.n_boxes - 1
    for i, p in enumerate(pi):
        acc += p
        if u < acc:
            jstar = i
            break

    sdt = math.sqrt(dt)
    ts, Ws, Ys, Xs, Js, pis, lzs = [0.0], [0.0], [0.0], [x.copy()], [], [pi], [logz.copy()]
    W = Y = 0.0
    n = 0
    event = check_threshold(posterior_from_loglik(x, mu), eps)
    while not event.hit and n < max_steps:
        J = choose(x, pi, n * dt)
        dW = sdt * gen.standard_normal()
        dY = dW + (mu * dt if J == jstar else 0.0)
        x[J] += dY - 0.5 * mu * dt
        logz[J] += mu * dY - 0.5 * mu * mu * dt
        W += dW
        Y += dY
        n += 1
        pi = posterior_from_loglik(x, mu).probs
        event = check_threshold(posterior_from_loglik(x, mu), eps)
        ts.append(n * dt)
        Ws.append(W)
        Ys.append(Y)
        Xs.append(x.copy())
        Js.append(J)
        pis.append(pi)
        lzs.append(logz.copy())
    Js.append(-1)
    declared = event.index if event.hit else None
    result = SimResult(n * dt, declared, jstar, declared == jstar, n, event.hit, tuple(x.tolist()))
    return PathRecord(np.array(ts), np.array(Ws), np.array(Ys), np.array(Xs), np.array(Js),
                      np.array(pis), np.array(lzs), result)


# ---------------------------------------------------------------- driftless construction

@dataclass
class PathBundle:
    """Driftless FTL solution from zero built by labelling the excursions of ``W``.

    ``labels[i]`` is the box that owns the excursion in progress at step
    ``i`` (-1 while ``W`` sits at its running minimum).
    """

    t: np.ndarray
    W: np.ndarray
    running_min: np.ndarray
    X: np.ndarray
    labels: np.ndarray
    dt: float

    @property
    def n_boxes(self) -> int:
        return self.X.shape[1]


def build_driftless_paths(n_boxes: int, horizon: float, dt: float, seed: SeedLike) -> PathBundle:
    if n_boxes < 1:
        raise InvalidArgumentError("n_boxes must be positive")
    dt = _check_dt(dt)
    n_steps = int(round(horizon / dt))
    W, M, X, labels = kernels.driftless_paths(make_generator(seed), int(n_boxes), n_steps, dt)
    return PathBundle(np.arange(n_steps + 1) * dt, W, M, X, labels, dt)


@dataclass(frozen=True)
class CheckResult:
    passed: bool
    max_error: float
    tolerance: float


@dataclass(frozen=True)
class Theorem1Report:
    checks: dict

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def failures(self) -> list[str]:
        return [name for name, c in self.checks.items() if not c.passed]


def theorem1_probe(bundle: PathBundle) -> Theorem1Report:
    """Pathwise checks on a driftless bundle started from zero.

    1. the coordinates sum to ``W``;
    2. every coordinate's running minimum equals ``min W / N``;
    3. at most one coordinate is above that common minimum;
    4. that coordinate's excess equals ``W - min W``.

    Checks 2 and 4 allow one grid step of slack (the largest increment of W).
    """
    W, X, N = bundle.W, bundle.X, bundle.n_boxes
    Wmin = np.minimum.accumulate(W)
    common = Wmin / N
    scale = max(1.0, float(np.abs(W).max()))
    exact_tol = 1e-12 * scale
    step_tol = float(np.abs(np.diff(W)).max()) if W.size > 1 else 0.0

    err1 = float(np.abs(X.sum(axis=1) - W).max())
    err2 = float(np.abs(np.minimum.accumulate(X, axis=0) - common[:, None]).max())
    above = X > common[:, None] + exact_tol
    n_above = above.sum(axis=1)
    err3 = float(max(0, n_above.max() - 1))
    excess = np.where(above, X - common[:, None], 0.0).sum(axis=1)
    err4 = float(np.abs(np.where(n_above > 0, excess - (W - Wmin), 0.0)).max())
    return Theorem1Report({
        "sum_equals_W": CheckResult(err1 <= exact_tol, err1, exact_tol),
        "common_running_min": CheckResult(err2 <= step_tol + exact_tol, err2, step_tol + exact_tol),
        "single_excursion": CheckResult(err3 == 0, err3, 0.0),
        "excess_equals_reflected_W": CheckResult(err4 <= step_tol + exact_tol, err4, step_tol + exact_tol),
    })


@dataclass(frozen=True)
class MartingaleCheck:
    t: float
    mean: float
    std_error: float
    identity_error: float
    passed: bool


def martingale_probe(n_boxes: int, n_bundles: int, times: Sequence[float], dt: float,
                     seed: SeedLike, box: int = 0) -> list[MartingaleCheck]:
    """Mean of ``X_k - mean_{j != k} X_j`` over independent bundles at each time in ``times``.

    The process starts at 0, so each mean must be within 3 standard errors of
    0.  Also records the worst deviation from the closed form
    ``(N I_k - 1) / (N - 1) (W - min W)``.
    """
    if n_boxes < 2:
        raise InvalidArgumentError("need at least two boxes")
    dt = _check_dt(dt)
    idx = np.array([int(round(t / dt)) for t in times])
    horizon = idx.max() * dt
    N, k = n_boxes, box
    vals = np.empty((n_bundles, idx.size))
    ident = 0.0
    for r in range(n_bundles):
        b = build_driftless_paths(N, horizon, dt, replicate_seed(seed, r))
        Xt = b.X[idx]
        M = Xt[:, k] - (Xt.sum(axis=1) - Xt[:, k]) / (N - 1)
        lead = np.array([ftl_select(row) == k for row in Xt], dtype=float)
        closed = (N * lead - 1.0) / (N - 1) * (b.W[idx] - b.running_min[idx])
        ident = max(ident, float(np.abs(M - closed).max()))
        vals[r] = M
    means = vals.mean(axis=0)
    ses = vals.std(axis=0, ddof=1) / math.sqrt(n_bundles)
    return [MartingaleCheck(float(t), float(m), float(se), ident, bool(abs(m) <= 3 * se))
            for t, m, se in zip(idx * dt, means, ses)]
