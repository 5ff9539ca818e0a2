"""E-step closed form, parameter updates, bound behavior, and the EM driver."""

import io
import json

import numpy as np
import pytest

from oracles import q_posterior_exact
from tracegraph import (
    EMConfig,
    EMParams,
    PairStats,
    QMatrix,
    ValidationError,
    build_constraints,
    build_episodes,
    compute_q,
    compute_w,
    count_ordered_pairs,
    jensen_bound,
    parse_trace,
    preprocess,
    reduce_constraints,
    run_em,
    threshold_graph,
    update_alpha,
    update_beta,
    update_rho,
)
from tracegraph.em import write_history, write_params


def pair_stats(counts, n_users=None):
    counts = np.asarray(counts, dtype=np.int64)
    n = n_users or counts.size + 1
    return PairStats(n, np.arange(1, counts.size + 1, dtype=np.int64), counts)


def test_compute_q_three_successes():
    # rho 0.1, alpha 0.8, beta 0.2, M=3 all direct: posterior odds are
    # (1/9) * 4^3, so Q = 64/73
    m = pair_stats([3])
    q = compute_q(m, [1.0], EMParams(alpha=0.8, beta=0.2, rho=0.1))
    assert q.values[0] == pytest.approx(64 / 73, rel=1e-12)


def test_compute_q_zero_count_is_prior_exactly():
    m = pair_stats([0, 2])
    q = compute_q(m, [0.5, 0.5], EMParams(alpha=0.8, beta=0.2, rho=0.37))
    assert q.values[0] == 0.37


def test_compute_q_equal_rates_collapse_to_prior():
    m = pair_stats([50])
    q = compute_q(m, [0.3], EMParams(alpha=0.4, beta=0.4, rho=0.22))
    assert q.values[0] == pytest.approx(0.22, rel=1e-12)


def test_compute_q_matches_arbitrary_precision():
    rng = np.random.default_rng(41)
    mm = rng.integers(0, 101, size=100)
    ss = rng.uniform(size=100)
    ss[::7] = 1.0
    ss[3::11] = 0.0
    m = pair_stats(mm, n_users=200)
    for _ in range(5):
        a, b = np.sort(rng.uniform(0.01, 0.99, size=2))[::-1]
        rho = rng.uniform(0.01, 0.99)
        q = compute_q(m, ss, EMParams(alpha=float(a), beta=float(b),
                                      rho=float(rho)))
        for k in range(100):
            exact = float(q_posterior_exact(int(mm[k]), float(ss[k]),
                                            float(a), float(b), float(rho)))
            assert q.values[k] == pytest.approx(exact, rel=1e-12)


def test_compute_q_rejects_degenerate_rates():
    m = pair_stats([1])
    with pytest.raises(ValidationError):
        compute_q(m, [1.0], EMParams(alpha=1.0, beta=0.2, rho=0.1))


def test_compute_w_balanced_posterior_is_zero():
    # symmetric rates cancel the two log-ratio terms at q = 1/2, up to
    # the ulp left by log vs log1p on mirrored arguments
    m = pair_stats([2])
    w = compute_w(m, [0.5], EMParams(alpha=0.8, beta=0.2, rho=0.1))
    assert w[0] == pytest.approx(0.0, abs=1e-12)


def test_compute_w_signs():
    m = pair_stats([4])
    params = EMParams(alpha=0.9, beta=0.1, rho=0.1)
    assert compute_w(m, [1.0], params)[0] > 0  # confident edge rewards sigma
    assert compute_w(m, [0.0], params)[0] < 0  # confident non-edge penalizes


def test_update_alpha_weighted_ratio():
    m = pair_stats([2, 3])
    # num = 2*1*0.5 + 3*0.5*1 = 2.5 ; den = 2*0.5 + 3*1 = 4
    assert update_alpha(m, [1.0, 0.5], [0.5, 1.0]) == pytest.approx(0.625)


def test_update_beta_weighted_ratio():
    m = pair_stats([2, 3])
    # num = 2*1*0.5 + 3*0.5*0 = 1 ; den = 2*0.5 + 3*0 = 1
    assert update_beta(m, [1.0, 0.5], [0.5, 1.0]) == pytest.approx(1 - 1e-9)


def test_update_alpha_zero_denominator_keeps_previous():
    m = pair_stats([2])
    with pytest.warns(UserWarning):
        out = update_alpha(m, [1.0], [0.0], prev=0.7)
    assert out == 0.7


def test_update_beta_zero_denominator_keeps_previous():
    m = pair_stats([2])
    with pytest.warns(UserWarning):
        out = update_beta(m, [1.0], [1.0], prev=0.2)
    assert out == 0.2


def test_updates_clamp_away_from_bounds():
    m = pair_stats([5])
    assert 0 < update_alpha(m, [1.0], [1.0]) < 1
    assert 0 < update_beta(m, [0.0], [0.0]) < 1


def test_update_rho_blends_inactive_pairs():
    q = QMatrix(3, np.asarray([1, 2], dtype=np.int64),
                np.asarray([0.5, 0.7]), rho=0.1)
    # 6 ordered pairs total, 4 inactive at the old prior
    assert update_rho(q, 3) == pytest.approx((0.5 + 0.7 + 0.1 * 4) / 6)


def test_update_rho_needs_two_users():
    q = QMatrix(1, np.empty(0, dtype=np.int64), np.empty(0), rho=0.5)
    with pytest.raises(ValidationError):
        update_rho(q, 1)


def test_jensen_bound_is_tight_at_the_e_step():
    rng = np.random.default_rng(3)
    for _ in range(20):
        L = int(rng.integers(1, 8))
        m = pair_stats(rng.integers(1, 20, size=L), n_users=20)
        sigma = rng.uniform(size=L)
        params = EMParams(alpha=0.8, beta=0.1, rho=0.05)
        q_star = compute_q(m, sigma, params)
        best = jensen_bound(m, sigma, q_star, params)
        for _ in range(10):
            perturbed = np.clip(q_star.values + rng.normal(0, 0.1, size=L),
                                0.0, 1.0)
            assert jensen_bound(m, sigma, perturbed, params) <= best + 1e-12


def test_em_config_validation():
    with pytest.raises(ValidationError):
        EMConfig(epsilon=0.0)
    with pytest.raises(ValidationError):
        EMConfig(max_iterations=0)


def em_fixture_inputs(lines):
    trace, _ = preprocess(parse_trace(lines))
    episodes = build_episodes(trace)
    m = count_ordered_pairs(episodes)
    cs = build_constraints(episodes, m)
    fixed, reduced, _ = reduce_constraints(cs)
    return episodes, m, cs, fixed, reduced


SMALL_TRACE = [
    "p1 1 a -1", "p2 2 b p1", "p3 3 c p1",
    "p4 4 a -1", "p5 5 c p4",
    "p6 6 b -1", "p7 7 c p6",
]


def test_run_em_converges_and_respects_constraints():
    episodes, m, cs, fixed, reduced = em_fixture_inputs(SMALL_TRACE)
    result = run_em(episodes, m, reduced, fixed, EMConfig(seed=0),
                    full_constraints=cs)
    assert result.converged
    assert result.iterations <= 500
    assert result.min_constraint_margin >= -1e-6
    # fixed pairs really are 1 in the reported sigma
    for (i, j) in fixed.as_dict():
        assert result.sigma.get(i, j) == 1.0
    assert len(result.history) == result.iterations


def test_run_em_margin_only_tracked_on_request():
    episodes, m, cs, fixed, reduced = em_fixture_inputs(SMALL_TRACE)
    result = run_em(episodes, m, reduced, fixed, EMConfig(seed=0))
    assert result.min_constraint_margin == float("inf")


def test_run_em_is_deterministic():
    episodes, m, cs, fixed, reduced = em_fixture_inputs(SMALL_TRACE)
    r1 = run_em(episodes, m, reduced, fixed, EMConfig(seed=11))
    r2 = run_em(episodes, m, reduced, fixed, EMConfig(seed=11))
    assert r1.history == r2.history
    assert r1.params == r2.params
    np.testing.assert_array_equal(r1.q.values, r2.q.values)


def test_run_em_seed_changes_start_not_feasibility():
    episodes, m, cs, fixed, reduced = em_fixture_inputs(SMALL_TRACE)
    for seed in (1, 2, 3):
        result = run_em(episodes, m, reduced, fixed, EMConfig(seed=seed),
                        full_constraints=cs)
        assert result.min_constraint_margin >= -1e-6


def test_threshold_graph_is_strict():
    q = QMatrix(3, np.asarray([1, 2], dtype=np.int64),
                np.asarray([0.5, 0.7]), rho=0.01)
    g = threshold_graph(q, threshold=0.5)
    assert g.n_edges == 1
    assert g.has_edge(0, 2)


def test_threshold_graph_warns_when_prior_exceeds_threshold():
    q = QMatrix(3, np.asarray([1], dtype=np.int64), np.asarray([0.9]),
                rho=0.8)
    with pytest.warns(UserWarning):
        threshold_graph(q, threshold=0.5)


def test_write_params_schema():
    episodes, m, cs, fixed, reduced = em_fixture_inputs(SMALL_TRACE)
    config = EMConfig(seed=0)
    result = run_em(episodes, m, reduced, fixed, config)
    buf = io.StringIO()
    write_params(buf, result, config)
    payload = json.loads(buf.getvalue())
    assert set(payload) == {"alpha", "beta", "rho", "iterations",
                            "converged", "epsilon"}
    assert payload["epsilon"] == 0.001
    assert isinstance(payload["converged"], bool)


def test_write_history_csv():
    buf = io.StringIO()
    write_history(buf, [(1, float("inf"), -10.5), (2, 0.25, -9.0)])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "iteration,q_delta,objective"
    assert lines[1].startswith("1,")
    assert len(lines) == 3
