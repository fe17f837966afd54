import math
import os
import subprocess
import sys

import numpy as np
import pytest

from ftlscan import _pykernels as P
from ftlscan import kernels
from ftlscan.sim import make_generator

C = pytest.importorskip("ftlscan._ckernels")


def test_compiled_backend_selected_by_default():
    assert kernels.BACKEND == "cython"
    assert set(kernels.backends()) == {"python", "cython"}


@pytest.mark.parametrize("flag,expected", [("1", "python"), ("0", "cython")])
def test_env_var_selects_backend(flag, expected):
    env = dict(os.environ, FTLSCAN_PURE_PYTHON=flag)
    out = subprocess.run([sys.executable, "-c", "import ftlscan.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_integrate_stage_identical():
    for args in [(2, 1.0, 1.0, 0.4, 0.0, 1.4, -3.2, 5000), (1, 1.8, 1.0, 0.4, 0.0, 0.6, 0.7, 777)]:
        yc, bc = C.integrate_stage(*args)
        yp, bp = P.integrate_stage(*args)
        assert np.array_equal(yc, yp) and np.array_equal(bc, bp)


POLICIES = [(kernels.FTL, 0, math.inf), (kernels.FIXED, 1, math.inf), (kernels.FIXED, 0, math.inf),
            (kernels.STRATEGY_B, 1, 2.0)]


@pytest.mark.parametrize("policy,target,switch", POLICIES)
@pytest.mark.parametrize("substeps", [1, 3])
def test_run_search_identical(policy, target, switch, substeps):
    for seed in range(60):
        xc = np.array([2.0, 1.4, 0.0])
        xp = xc.copy()
        rc = C.run_search(make_generator(seed), xc, 1.0, 0.4, 1e-4, policy, target, switch, 10**7, substeps)
        rp = P.run_search(make_generator(seed), xp, 1.0, 0.4, 1e-4, policy, target, switch, 10**7, substeps)
        assert tuple(rc) == tuple(rp)
        assert np.array_equal(xc, xp)


def test_run_search_horizon_identical():
    for seed in range(20):
        xc = np.array([0.0, 0.0, 0.0, 0.0])
        xp = xc.copy()
        rc = C.run_search(make_generator(seed), xc, 1.0, 0.1, 1e-3, kernels.FTL, 0, math.inf, 37)
        rp = P.run_search(make_generator(seed), xp, 1.0, 0.1, 1e-3, kernels.FTL, 0, math.inf, 37)
        assert tuple(rc) == tuple(rp) and rc[2] == kernels.HORIZON and rc[0] == 37
        assert np.array_equal(xc, xp)


@pytest.mark.parametrize("lam,s2", [(0.0, 1.0), (2.0, 1.0), (-1.5, 0.5)])
def test_exit_paths_identical(lam, s2):
    args = (200, 0.05, 0.2, -0.2, lam, s2, 1e-4, 10**7)
    sc, tc = C.exit_paths(make_generator(1), make_generator(2), *args)
    sp, tp = P.exit_paths(make_generator(1), make_generator(2), *args)
    assert np.array_equal(sc, sp) and np.array_equal(tc, tp)
    assert set(np.unique(sc)) <= {0, 1}


def test_exit_paths_horizon_marker():
    side, times = C.exit_paths(make_generator(1), make_generator(2), 5, 0.0, 5.0, -5.0, 0.0, 1.0, 1e-3, 10)
    assert np.all(side == -1)


def test_driftless_paths_identical():
    for n_boxes in (1, 2, 5):
        a = C.driftless_paths(make_generator(9), n_boxes, 3000, 1e-3)
        b = P.driftless_paths(make_generator(9), n_boxes, 3000, 1e-3)
        for u, v in zip(a, b):
            assert np.array_equal(u, v)


def test_stream_consumption_matches_scalar_draws():
    # the kernel draws one uniform for the true box and then one normal per step
    x = np.array([0.0, 0.0])
    gen = make_generator(5)
    n, jstar, status = C.run_search(gen, x, 1.0, 0.3, 1e-3, kernels.FIXED, 0, math.inf, 50)
    ref = make_generator(5)
    u = ref.random()
    assert jstar == (0 if u < 0.5 else 1)
    z = ref.standard_normal(n)
    step = math.sqrt(1e-3) * z + 1e-3 * ((1.0 if jstar == 0 else 0.0) - 0.5)
    assert x[0] == pytest.approx(np.cumsum(step)[-1], abs=1e-12)
    assert x[1] == 0.0
