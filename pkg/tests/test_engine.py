import numpy as np
import pytest

from adasub import (
    BIC,
    AdaSubConfig,
    CriterionSpec,
    SolverConfig,
    full_search,
    run,
    top_k_model,
)
from adasub.engine import (
    AdaSubState,
    sample_subspace,
    selection_probabilities,
    selection_probability,
)

from conftest import make_dataset


def test_config_validation():
    with pytest.raises(ValueError):
        AdaSubConfig(t_max=0)
    with pytest.raises(ValueError):
        AdaSubConfig(rho=1.0)
    with pytest.raises(ValueError):
        AdaSubConfig(trace_prob_interval=-1)
    assert AdaSubConfig(k_rate=0.0).resolved_k(60) == 60.0
    assert AdaSubConfig(k_rate=25.0).resolved_k(60) == 25.0
    with pytest.raises(ValueError):
        AdaSubConfig(k_rate=float("inf")).resolved_k(60)


def test_initial_probability_is_q_over_p():
    state = AdaSubState(
        t=0, select_counts=np.zeros(2000, dtype=int), consider_counts=np.zeros(2000, dtype=int)
    )
    cfg = AdaSubConfig(q=10.0, k_rate=100.0)
    assert selection_probability(state, cfg, 0, p=2000) == pytest.approx(0.005)


def test_update_formula_single_step():
    # one iteration, considered and selected: (10 + 60) / (1000 + 60)
    sel = np.zeros(1000, dtype=int)
    con = np.zeros(1000, dtype=int)
    sel[3] = con[3] = 1
    r = selection_probabilities(10.0, 60.0, 1000, sel, con)
    assert r[3] == pytest.approx(70 / 1060)
    assert r[4] == pytest.approx(0.01)
    # considered but rejected with K = 1000: halves and more
    sel[3] = 0
    con[3] = 1
    r = selection_probabilities(10.0, 1000.0, 1000, sel, con)
    assert r[3] == pytest.approx(10 / 2000)


def test_sample_subspace_mean_size():
    rng = np.random.default_rng(5)
    probs = np.full(2000, 10 / 2000)
    sizes = [len(sample_subspace(probs, rng)) for _ in range(10_000)]
    se = np.sqrt(10 * (1 - 10 / 2000) / 10_000)
    assert abs(np.mean(sizes) - 10) < 3 * se


def test_sample_subspace_high_probability_entry():
    rng = np.random.default_rng(6)
    probs = np.full(50, 0.001)
    probs[7] = 0.999
    hits = sum(7 in set(sample_subspace(probs, rng)) for _ in range(10_000))
    assert hits >= 9_900


def test_run_reproducible(rng):
    ds, _ = make_dataset(rng, 40, 12, s0=3)
    spec = CriterionSpec(BIC)
    cfg = AdaSubConfig(q=4, t_max=150, seed=11)
    a = run(ds, spec, SolverConfig(), cfg)
    b = run(ds, spec, SolverConfig(), cfg)
    assert a.best_model == b.best_model
    assert a.best_score == b.best_score
    assert np.array_equal(a.final_probs, b.final_probs)
    assert [(r.t, r.score) for r in a.trace] == [(r.t, r.score) for r in b.trace]


def test_run_invariants_validated(rng):
    ds, _ = make_dataset(rng, 40, 10, s0=2)
    cfg = AdaSubConfig(q=3, t_max=200, seed=4, validate=True)
    res = run(ds, CriterionSpec(BIC), SolverConfig(), cfg)
    assert res.trace[0].expected_search_size == cfg.q
    assert np.all(res.final_probs > 0) and np.all(res.final_probs < 1)
    k = cfg.resolved_k(ds.n)
    assert np.all(res.final_probs >= cfg.q / (ds.p + k * cfg.t_max) - 1e-15)
    assert np.all(res.state.select_counts <= res.state.consider_counts)
    assert np.all(res.state.consider_counts <= cfg.t_max)


def test_best_model_matches_trace_max(rng):
    ds, _ = make_dataset(rng, 40, 10, s0=2)
    res = run(ds, CriterionSpec(BIC), SolverConfig(), AdaSubConfig(q=3, t_max=100, seed=2))
    assert res.best_score == max(r.score for r in res.trace)
    assert res.trace[res.best_first_t - 1].score == res.best_score
    # earliest iteration wins on ties
    first = next(t for t, r in enumerate(res.trace, start=1) if r.score == res.best_score)
    assert res.best_first_t == first


def test_thresholded_model_definition(rng):
    ds, _ = make_dataset(rng, 40, 10, s0=2)
    cfg = AdaSubConfig(q=3, t_max=300, seed=8, rho=0.9)
    res = run(ds, CriterionSpec(BIC), SolverConfig(), cfg)
    expected = tuple(int(j) for j in np.flatnonzero(res.final_probs > cfg.rho))
    assert res.thresholded_model == expected


def test_strong_signal_recovers_optimum(rng):
    hits = 0
    spec = CriterionSpec(BIC)
    for i in range(20):
        ds, _ = make_dataset(np.random.default_rng(300 + i), 60, 10, s0=3, signal=2.0)
        opt = full_search(ds, spec, SolverConfig()).best
        res = run(ds, spec, SolverConfig(), AdaSubConfig(q=5, t_max=500, seed=i))
        hits += res.best_model == opt
    assert hits >= 19


def test_pure_noise_thresholded_mostly_empty():
    # under a high-dimensional-consistent penalty, noise yields the empty model
    from adasub import EBIC

    empty = 0
    spec = CriterionSpec(EBIC, gamma=1.0)
    for i in range(30):
        ds, _ = make_dataset(np.random.default_rng(900 + i), 100, 50, s0=0)
        res = run(ds, spec, SolverConfig(), AdaSubConfig(q=10, t_max=400, seed=i))
        empty += res.thresholded_model == ()
    assert empty >= 27


def test_pure_noise_best_model_tracks_optimum():
    # with a liberal penalty the noise optimum is often nonempty; the search
    # must land on the optimum either way
    spec = CriterionSpec(BIC)
    agree = 0
    for i in range(30):
        ds, _ = make_dataset(np.random.default_rng(900 + i), 100, 12, s0=0)
        opt = full_search(ds, spec, SolverConfig()).best
        res = run(ds, spec, SolverConfig(), AdaSubConfig(q=5, t_max=1000, seed=i))
        agree += res.best_model == opt
    assert agree >= 28


def test_prob_snapshots_interval(rng):
    ds, _ = make_dataset(rng, 30, 6)
    cfg = AdaSubConfig(q=3, t_max=50, seed=1, trace_prob_interval=10)
    res = run(ds, CriterionSpec(BIC), SolverConfig(), cfg)
    assert [t for t, _ in res.prob_snapshots] == [10, 20, 30, 40, 50]
    for _, probs in res.prob_snapshots:
        assert probs.shape == (6,)


def test_top_k_model():
    from adasub.engine import AdaSubResult

    res = AdaSubResult(
        best_model=(), best_score=0.0, best_first_t=1, thresholded_model=(),
        final_probs=np.array([0.9, 0.1, 0.5]), trace=[], prob_snapshots=[],
        state=None,
    )
    assert top_k_model(res, 2) == (0, 2)
    assert top_k_model(res, 3) == (0, 1, 2)
    with pytest.raises(ValueError):
        top_k_model(res, 0)
    # ties resolved toward the smaller index
    res.final_probs = np.array([0.5, 0.5, 0.5])
    assert top_k_model(res, 2) == (0, 1)


def test_q_out_of_range(rng):
    ds, _ = make_dataset(rng, 20, 5)
    with pytest.raises(ValueError):
        run(ds, CriterionSpec(BIC), SolverConfig(), AdaSubConfig(q=5.0, t_max=10))
    with pytest.raises(ValueError):
        run(ds, CriterionSpec(BIC), SolverConfig(), AdaSubConfig(q=0.0, t_max=10))
