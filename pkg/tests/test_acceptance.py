"""Acceptance criteria 1-7.

Each criterion is a plain function returning ``(passed, detail)``; the
pytest wrappers record one PASS/FAIL line per criterion (shown in the
terminal summary) and assert.  Running this file directly prints the same
lines without pytest.

Monte Carlo bias allowances: runs at ``dt = 4e-5`` reuse the Brownian path
of the ``dt = 1e-5`` runs (``substeps=4`` on the same replicate streams), so
the paired difference of the two means estimates the discretisation bias of
the fine run when the bias scales like ``sqrt(dt)``.
"""

from __future__ import annotations

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ftlscan import experiments as E
from ftlscan import sim
from ftlscan.exit_time import ExitSpec, exit_prob, exit_stats, exit_time_lower, exit_time_upper
from ftlscan.ftl_value import eval_interior, ftl_value, mpr_value
from ftlscan.kernels import exit_paths
from ftlscan.model import ProblemConfig
from ftlscan.strategy_b import strategy_b_value

from oracles import fd_derivatives

pytestmark = pytest.mark.slow

DT_FINE, DT_COARSE = 1e-5, 4e-5


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _dt_study(cfg, policy, analytic, n_fine, n_paired, seed):
    """Fine mean, its SE, the paired bias estimate and the gap ratio."""
    t_f, _ = sim.sample_stopping_times(cfg, policy, DT_FINE, n_fine, seed)
    t_c, _ = sim.sample_stopping_times(cfg, policy, DT_COARSE, n_paired, seed, substeps=4)
    m_f = float(t_f.mean())
    se_f = float(t_f.std(ddof=1) / math.sqrt(n_fine))
    d = t_c - t_f[:n_paired]
    bias = float(d.mean())
    bias_se = float(d.std(ddof=1) / math.sqrt(n_paired))
    gap_f = m_f - analytic
    gap_c = gap_f + bias
    ratio = gap_c / gap_f if gap_f != 0 else math.inf
    ok = abs(gap_f) <= 3 * se_f + abs(bias)
    return ok, dict(mean=m_f, se=se_f, bias=bias, bias_se=bias_se, gap_f=gap_f, gap_c=gap_c, ratio=ratio)


# ---------------------------------------------------------------- criteria

def criterion_1():
    t0 = time.perf_counter()
    rows = E.reproduce_table1()
    elapsed = time.perf_counter() - t0
    errs = []
    ok = elapsed < 5.0
    for i, (r, (pa, pb)) in enumerate(zip(rows, E.TABLE1_PUBLISHED)):
        if i < 4:
            ea = abs(r.e_ftl_x100 - pa) / pa
            eb = abs(r.e_b_x100 - pb) / pb
            ok &= ea <= 1e-3 and eb <= 1e-3
            errs.append(f"rel {ea:.1e}/{eb:.1e}")
        else:
            ea = abs(r.e_ftl - pa / 100)
            eb = abs(r.e_b - pb / 100)
            ok &= ea <= 5e-6 and eb <= 5e-6
            errs.append(f"abs {ea:.1e}/{eb:.1e}")
        ok &= r.e_b < r.e_ftl
    return ok, f"errors {', '.join(errs)}; E_B < E_A in all rows; {elapsed:.2f}s"


def criterion_2():
    v = mpr_value(3, 1.0, 0.4)
    ok_val = abs(v - 1.23944) <= 5e-6
    cfg = ProblemConfig(1.0, 0.4, (0.0, 0.0, 0.0))
    ok_mc, s = _dt_study(cfg, sim.Policy.ftl(), v, 200_000, 50_000, seed=20_240_002)
    return ok_val and ok_mc, (f"V={_fmt(v)}; MC {_fmt(s['mean'])} +- {s['se']:.1e}, "
                              f"bias est {s['bias']:.1e} +- {s['bias_se']:.1e}")


def criterion_3():
    parts, ok = [], True
    rows = {1: (0.4, 2.0, 1.4), 3: (0.2, 4.05, 2.6)}
    for k, (eps, x1, x2) in rows.items():
        cfg = ProblemConfig(1.0, eps, (x1, x2, 0.0))
        targets = {"ftl": ftl_value(cfg).value, "B": strategy_b_value(cfg).e_time}
        for name, policy in (("ftl", sim.Policy.ftl()), ("B", sim.Policy.strategy_b())):
            good, s = _dt_study(cfg, policy, targets[name], 1_000_000, 1_000_000, seed=3000 + 10 * k)
            good &= s["ratio"] >= 1.5
            ok &= good
            parts.append(f"row{k}/{name}: gap {s['gap_f']:.2e} (3SE {3 * s['se']:.1e}, bias {s['bias']:.1e}) "
                         f"ratio {s['ratio']:.2f}")
    return ok, "; ".join(parts)


EXIT_SPECS = (
    ExitSpec(0.0, 0.25, -0.25, 2.0),
    ExitSpec(0.05, 0.2, -0.2, 1e-7),
    ExitSpec(0.1, 0.3, -0.1, -1.5, 0.5),
)


def criterion_4():
    ok, parts = True, []
    n = 1_000_000
    for i, spec in enumerate(EXIT_SPECS):
        side, times = exit_paths(sim.make_generator(4000 + i), sim.make_generator(5000 + i), n,
                                 spec.x, spec.a, spec.b, spec.lam, spec.sigma2, DT_FINE, 10**9)
        st = exit_stats(spec)
        up = side == 1
        assert np.all(side >= 0)
        p = up.mean()
        zs = [(p - st.p_upper) / math.sqrt(p * (1 - p) / n)]
        for mask, target in ((up, st.t_upper), (~up, st.t_lower)):
            t = times[mask]
            zs.append((t.mean() - target) / (t.std(ddof=1) / math.sqrt(t.size)))
        zs.append((times.mean() - st.t_mean) / (times.std(ddof=1) / math.sqrt(n)))
        ok &= all(abs(z) <= 3 for z in zs)
        parts.append(f"spec{i + 1} z=" + "/".join(f"{z:+.2f}" for z in zs))

    sym = 0.0
    for lam in (1e-7, 0.5, 2.0, 6.0):
        for x, a, b, s2 in ((0.0, 1.0, -1.0, 1.0), (0.05, 0.2, -0.2, 1.0), (0.1, 0.3, -0.1, 0.5)):
            pos, neg = ExitSpec(x, a, b, lam, s2), ExitSpec(x, a, b, -lam, s2)
            sym = max(sym, abs(exit_time_upper(pos) - exit_time_upper(neg)),
                      abs(exit_time_lower(pos) - exit_time_lower(neg)))
    lim = 0.0
    for x, a, b in ((0.0, 1.0, -1.0), (0.3, 2.0, -0.5), (0.05, 0.2, -0.2)):
        s0 = ExitSpec(x, a, b, 0.0)
        lim = max(lim, abs(exit_prob(s0) - (x - b) / (a - b)),
                  abs(exit_stats(s0).t_mean - (a - x) * (x - b)))
    ok &= sym <= 1e-12 and lim <= 1e-8
    return ok, f"{'; '.join(parts)}; symmetry {sym:.1e}; driftless {lim:.1e}"


def criterion_5():
    ok, parts = True, []
    worst = {}
    for r in range(1000):
        b = sim.build_driftless_paths(3, 4.0, 1e-3, sim.replicate_seed(5100, r))
        rep = sim.theorem1_probe(b)
        ok &= rep.passed
        for name, c in rep.checks.items():
            worst[name] = max(worst.get(name, 0.0), c.max_error)
    parts.append("pathwise " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))

    mart = sim.martingale_probe(3, 100_000, [0.25, 1.0, 4.0], 1e-3, 5200)
    ok &= all(c.passed for c in mart)
    parts.append("M(t) " + ", ".join(f"t={c.t:g}: {c.mean:+.4f}+-{c.std_error:.4f}" for c in mart))

    cfg = ProblemConfig(1.0, 0.4, (2.0, 1.4, 0.0))
    pis = sim.posterior_martingale_probe(cfg, 1e-4, 0.02, 20_000, 5300)
    ok &= all(c.passed for c in pis)
    parts.append("pi " + ", ".join(f"{c.mean:.4f}~{c.initial:.4f}" for c in pis))
    return ok, "; ".join(parts)


def criterion_6():
    cfg = ProblemConfig(1.0, 0.4, (2.0, 1.4, 0.0))
    res = ftl_value(cfg)
    mu = cfg.mu
    h = 1e-3
    r1 = r2 = bnd = 0.0
    for st in res.stages:
        f = lambda s, y, st=st: eval_interior(st, s, y)
        for y in np.linspace(st.y_lo + 4 * h, st.y_hi - 4 * h, 7):
            q = float(st.q(y))
            for s in np.linspace(3 * h, q - 3 * h, 6):
                fs, fss, _ = fd_derivatives(f, s, y, h)
                p = 1.0 / (1.0 + float(st.K(y)) * math.exp(-mu * s))
                r1 = max(r1, abs(0.5 * fss + (p - 0.5) * mu * fs + 1.0))
            # the stage formula is smooth through s = 0, so a central stencil is fine there
            g = lambda s, yy, st=st: _stage_formula(st, s, yy)
            fs0, _, fy0 = fd_derivatives(g, 0.0, y, h)
            r2 = max(r2, abs(-st.n * fs0 + fy0))
            bnd = max(bnd, abs(eval_interior(st, q, y)))
        bnd = max(bnd, abs(eval_interior(st, 0.0, st.y_lo) - st.v_boundary))
    v = res.value
    trans = max(abs(ftl_value(cfg.shifted(c)).value - v) / v for c in (-3.0, 5.0))
    resc = max(abs(ftl_value(ProblemConfig(c, 0.4, tuple(x / c for x in cfg.x0))).value * c * c - v) / v
               for c in (0.5, 3.0))
    ok = r1 < 1e-6 and r2 < 1e-5 and bnd < 1e-8 and trans < 1e-8 and resc < 1e-8
    return ok, (f"pde {r1:.1e}, reflection {r2:.1e}, boundary {bnd:.1e}, "
                f"translation {trans:.1e}, rescaling {resc:.1e}")


def _stage_formula(st, s, y):
    p = 1.0 / (1.0 + float(st.K(y)) * math.exp(-st.mu * s))
    return float(st.A(y) + st.B(y) * p + 2.0 * s / st.mu * (1.0 - 2.0 * p))


def criterion_7():
    step = 0.05
    cells = E.scan_counterexamples(0.4, 1.0, E.ScanGrid(1.5, 2.5, 1.0, 1.8, step))
    region = E.positive_region(cells, step, (2.0, 1.4))
    positive = {(round(c.x1 / step), round(c.x2 / step)) for c in cells if c.feasible and c.gap > 0}
    target = next(c for c in cells if (c.x1, c.x2) == (2.0, 1.4))
    kl = E.klimko_check([0.1, 0.2, 0.3])
    ok = target.feasible and target.gap > 0 and bool(region) and region == positive
    ok &= all(r.v_b < r.v_a for r in kl)
    return ok, (f"gap(2,1.4)={target.gap:.3e}; component {len(region)} of {len(positive)} positive cells "
                f"({sum(c.feasible for c in cells)} feasible); Klimko diffs "
                + ", ".join(f"eps={r.epsilon}: {r.diff:+.4f}" for r in kl))


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


def _report(i, ok, detail):
    return f"criterion {i}: {'PASS' if ok else 'FAIL'} - {detail}"


@pytest.mark.parametrize("index", range(1, 8))
def test_criterion(index):
    from conftest import ACCEPTANCE_LINES

    t0 = time.perf_counter()
    ok, detail = CRITERIA[index - 1]()
    line = _report(index, ok, f"{detail} [{time.perf_counter() - t0:.0f}s]")
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


if __name__ == "__main__":
    for i, fn in enumerate(CRITERIA, 1):
        t0 = time.perf_counter()
        ok, detail = fn()
        print(_report(i, ok, f"{detail} [{time.perf_counter() - t0:.0f}s]"), flush=True)
