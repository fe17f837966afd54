import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftlscan.errors import InvalidArgumentError
from ftlscan.model import (Posterior, ProblemConfig, check_threshold, ftl_select, leader_group_size,
                           loglik_from_posterior, posterior_from_loglik)

from oracles import posterior_brute


def test_config_roundtrip(tmp_path):
    cfg = ProblemConfig(1.5, 0.2, (3.0, 1.0, 1.0, -2.0))
    again = ProblemConfig.from_json(cfg.to_json())
    assert again == cfg
    path = tmp_path / "cfg.json"
    path.write_text(cfg.to_json())
    assert ProblemConfig.load(path) == cfg
    assert json.loads(cfg.to_json()).keys() == {"mu", "epsilon", "x0"}
    assert cfg.n_boxes == 4 and cfg.p0 == pytest.approx(0.8)


@pytest.mark.parametrize("kwargs", [
    dict(mu=0.0, epsilon=0.2, x0=(1, 0)),
    dict(mu=-1.0, epsilon=0.2, x0=(1, 0)),
    dict(mu=1.0, epsilon=0.5, x0=(1, 0)),
    dict(mu=1.0, epsilon=0.0, x0=(1, 0)),
    dict(mu=1.0, epsilon=0.7, x0=(1, 0)),
    dict(mu=1.0, epsilon=0.2, x0=(0, 1)),
    dict(mu=1.0, epsilon=0.2, x0=(1,)),
    dict(mu=1.0, epsilon=0.2, x0=(1, float("nan"))),
])
def test_config_rejects_invalid(kwargs):
    with pytest.raises(InvalidArgumentError):
        ProblemConfig(**kwargs)


@pytest.mark.parametrize("doc", ['{"mu": 1, "epsilon": 0.2}', '[1, 2]', '{"mu": 1, "epsilon": 0.2, "x0": [0, 1]}'])
def test_config_json_errors(doc):
    with pytest.raises(InvalidArgumentError):
        ProblemConfig.from_json(doc)


def test_posterior_matches_bruteforce():
    x = [2.0, 1.4, 0.0]
    assert np.allclose(posterior_from_loglik(x, 1.0).probs, posterior_brute(x, 1.0), rtol=0, atol=1e-15)
    assert posterior_from_loglik(x, 1.0).probs[0] == pytest.approx(0.5937724, abs=1e-7)


def test_posterior_survives_huge_coordinates():
    p = posterior_from_loglik([1e5, 1e5 - 1.0, -1e5], 3.0).probs
    assert np.all(np.isfinite(p)) and p.sum() == pytest.approx(1.0, abs=1e-15)


def test_posterior_read_only_and_validated():
    p = posterior_from_loglik([0.0, 0.0], 1.0)
    with pytest.raises(ValueError):
        p.probs[0] = 1.0
    with pytest.raises(InvalidArgumentError):
        Posterior(np.array([0.5, 0.6]))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=8), st.floats(0.05, 5), st.floats(-100, 100))
def test_posterior_shift_invariant_and_normalised(x, mu, c):
    p = posterior_from_loglik(x, mu).probs
    q = posterior_from_loglik([v + c for v in x], mu).probs
    assert abs(p.sum() - 1.0) <= 1e-12
    assert np.allclose(p, q, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8), st.floats(0.1, 4))
def test_loglik_inverts_posterior(w, mu):
    p = np.array(w) / sum(w)
    x = loglik_from_posterior(Posterior(p), mu)
    assert np.allclose(posterior_from_loglik(x, mu).probs, p, atol=1e-13)


def test_loglik_rejects_zero_mass():
    with pytest.raises(InvalidArgumentError):
        loglik_from_posterior([1.0, 0.0], 1.0)


def test_ftl_select_prefers_largest_index_on_ties():
    assert ftl_select([1.0, 1.0, 0.0]) == 1
    assert ftl_select([0.0, 2.0, 2.0]) == 2
    assert ftl_select([3.0, 2.0, 1.0]) == 0


def test_threshold_inclusive():
    ev = check_threshold(Posterior(np.array([0.6, 0.3, 0.1])), 0.4)
    assert ev.hit and ev.index == 0 and ev.level == pytest.approx(0.6)
    ev = check_threshold(Posterior(np.array([0.59, 0.31, 0.1])), 0.4)
    assert not ev.hit
    ev = check_threshold(Posterior(np.array([0.4, 0.1, 0.1, 0.4])), 0.4)
    assert not ev.hit


def test_leader_group_size():
    assert leader_group_size([1.0, 1.0, 0.5]) == 2
    assert leader_group_size([1.0, 0.5, 0.5]) == 1
    assert leader_group_size([0.0, 0.0, 0.0]) == 3


def test_shifted_config():
    cfg = ProblemConfig(1.0, 0.3, (1.0, 0.0))
    assert cfg.shifted(2.5).x0 == (3.5, 2.5)
    assert math.isclose(cfg.prior().probs[0], cfg.shifted(-7).prior().probs[0], rel_tol=1e-14)
