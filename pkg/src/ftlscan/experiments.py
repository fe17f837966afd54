"""Reproduction harness: the five-row comparison table, grid scans and the prior-ordering check.

Values are kept on the raw time scale; the x100 presentation only appears in
:class:`ReportRow` and the emitters.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .ftl_value import ftl_value
from .model import Posterior, ProblemConfig, check_epsilon, loglik_from_posterior
from .strategy_b import feasibility, strategy_b_value

# (epsilon, x1, x2) with mu = 1 and x3 = 0
TABLE1_ROWS: tuple[tuple[float, float, float], ...] = (
    (0.4, 2.0, 1.4),
    (0.3, 2.7, 1.7),
    (0.2, 4.05, 2.6),
    (0.1, 6.2, 4.0),
    (0.05, 10.3, 7.4),
)

# published figures, x100
TABLE1_PUBLISHED: tuple[tuple[float, float], ...] = (
    (3.633, 3.464),
    (3.053, 2.936),
    (1.832, 1.797),
    (3.749, 3.738),
    (10.6482, 10.6476),
)

KLIMKO_PRIORS = ((0.4, 0.3, 0.3), (0.4, 0.4, 0.2))


@dataclass(frozen=True)
class ReportRow:
    epsilon: float
    x1: float
    x2: float
    e_ftl_x100: float
    e_b_x100: float

    @property
    def e_ftl(self) -> float:
        return self.e_ftl_x100 / 100.0

    @property
    def e_b(self) -> float:
        return self.e_b_x100 / 100.0


def table1_config(epsilon: float, x1: float, x2: float, mu: float = 1.0) -> ProblemConfig:
    return ProblemConfig(mu, epsilon, (x1, x2, 0.0))


def reproduce_table1() -> list[ReportRow]:
    rows = []
    for eps, x1, x2 in TABLE1_ROWS:
        cfg = table1_config(eps, x1, x2)
        rows.append(ReportRow(eps, x1, x2, 100.0 * ftl_value(cfg).value,
                              100.0 * strategy_b_value(cfg).e_time))
    return rows


# ---------------------------------------------------------------- scan

@dataclass(frozen=True)
class ScanGrid:
    """Closed ranges stepped by ``step``; only cells with ``x1 > x2 > 0`` are kept."""

    x1_min: float
    x1_max: float
    x2_min: float
    x2_max: float
    step: float

    def __post_init__(self) -> None:
        if not self.step > 0:
            raise InvalidArgumentError("grid step must be positive")
        if self.x1_max < self.x1_min or self.x2_max < self.x2_min:
            raise InvalidArgumentError("grid ranges must be non-empty")

    @staticmethod
    def _axis(lo: float, hi: float, step: float) -> np.ndarray:
        n = int(math.floor((hi - lo) / step + 1e-9))
        return np.round(lo + step * np.arange(n + 1), 12)

    def cells(self) -> list[tuple[float, float]]:
        return [(float(a), float(b))
                for a in self._axis(self.x1_min, self.x1_max, self.step)
                for b in self._axis(self.x2_min, self.x2_max, self.step)
                if a > b > 0]


@dataclass(frozen=True)
class ScanCell:
    x1: float
    x2: float
    feasible: bool
    e_ftl: float
    e_b: float
    gap: float


def _scan_cell(epsilon: float, mu: float, x1: float, x2: float) -> ScanCell:
    cfg = ProblemConfig(mu, epsilon, (x1, x2, 0.0))
    e_ftl = ftl_value(cfg).value
    if not feasibility(cfg):
        return ScanCell(x1, x2, False, e_ftl, math.nan, math.nan)
    e_b = strategy_b_value(cfg).e_time
    return ScanCell(x1, x2, True, e_ftl, e_b, e_ftl - e_b)


def scan_counterexamples(epsilon: float, mu: float, grid: ScanGrid, threads: int = 1) -> list[ScanCell]:
    """Both values on every grid cell, ordered by ``x1`` then ``x2``."""
    check_epsilon(epsilon)
    cells = grid.cells()
    if threads <= 1:
        return [_scan_cell(epsilon, mu, a, b) for a, b in cells]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(lambda c: _scan_cell(epsilon, mu, *c), cells))


def positive_region(cells: Sequence[ScanCell], step: float, seed: tuple[float, float]) -> set:
    """Grid-connected component of feasible cells with ``gap > 0`` containing ``seed``."""
    key = lambda a, b: (round(a / step), round(b / step))
    good = {key(c.x1, c.x2) for c in cells if c.feasible and c.gap > 0}
    start = key(*seed)
    if start not in good:
        return set()
    seen, todo = {start}, [start]
    while todo:
        i, j = todo.pop()
        for nb in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if nb in good and nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return seen


# ---------------------------------------------------------------- prior ordering

@dataclass(frozen=True)
class KlimkoRow:
    epsilon: float
    v_a: float
    v_b: float

    @property
    def diff(self) -> float:
        return self.v_b - self.v_a

    @property
    def b_faster(self) -> bool:
        return self.v_b < self.v_a


def klimko_check(epsilons: Iterable[float] = (0.1, 0.2, 0.3), mu: float = 1.0,
                 shift: float = 0.0) -> list[KlimkoRow]:
    """FTL values from the priors (0.4, 0.3, 0.3) and (0.4, 0.4, 0.2) for each epsilon.

    ``shift`` moves both x-vectors by a common constant, which must not
    change the verdict.
    """
    x_a, x_b = (loglik_from_posterior(Posterior(np.array(p)), mu) + shift for p in KLIMKO_PRIORS)
    out = []
    for eps in epsilons:
        check_epsilon(eps)
        if not 1.0 - eps > 0.4:
            raise InvalidArgumentError(f"need 1 - epsilon > 0.4, got epsilon={eps}")
        v_a = ftl_value(ProblemConfig(mu, eps, tuple(x_a))).value
        v_b = ftl_value(ProblemConfig(mu, eps, tuple(x_b))).value
        out.append(KlimkoRow(float(eps), v_a, v_b))
    return out


# ---------------------------------------------------------------- emitters

def _num(v: float):
    return None if isinstance(v, float) and math.isnan(v) else v


def records_to_json(records: Sequence) -> str:
    rows = []
    for r in records:
        d = {k: _num(v) for k, v in asdict(r).items()}
        if isinstance(r, KlimkoRow):
            d["diff"] = r.diff
        rows.append(d)
    return json.dumps(rows, indent=2, sort_keys=False) + "\n"


def records_to_csv(records: Sequence) -> str:
    buf = io.StringIO()
    if not records:
        return ""
    fields = list(asdict(records[0]).keys())
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in records:
        w.writerow(["" if (isinstance(v, float) and math.isnan(v)) else repr(v) if isinstance(v, float) else v
                    for v in asdict(r).values()])
    return buf.getvalue()
