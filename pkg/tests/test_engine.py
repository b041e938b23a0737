import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from recession_cascade import empirics, engine, model
from recession_cascade.model import CountryRoster, ModelParams
from recession_cascade.roster import load_roster

ROSTER = load_roster()


def test_trajectory_shape_and_start():
    traj = engine.simulate_run(ModelParams(), ROSTER, engine.run_stream(1, 0))
    assert traj.states.shape == (136, 17)
    assert traj.states.dtype == bool


def test_simulate_run_matches_block_bitwise():
    for params in (ModelParams(), ModelParams(cascade_mode="synchronous", threshold_mode="per-step"),
                   ModelParams(k=0, mu=0.0)):
        block, _ = engine.simulate_block(params, ROSTER, 7, [0, 3, 4])
        for j, i in enumerate([0, 3, 4]):
            traj = engine.simulate_run(params, ROSTER, engine.run_stream(7, i), i)
            np.testing.assert_array_equal(block[j], traj.states)


def test_single_run_aggregate_equals_trajectory_stats():
    agg = engine.monte_carlo(ModelParams(), ROSTER, 1, 11)
    rs = engine.trajectory_stats(engine.simulate_run(ModelParams(), ROSTER, engine.run_stream(11, 0)))
    assert agg.counts_hist == rs.counts_hist.tolist()
    assert agg.duration_counts == empirics.tally(rs.durations)
    assert agg.wait_counts == empirics.tally(rs.waits)


def test_no_spontaneous_entry_means_no_recessions():
    agg = engine.monte_carlo(ModelParams(pi_lo=0.0, pi_hi=0.0), ROSTER, 50, 0)
    assert agg.counts_hist[0] == 50 * 136
    assert agg.total_spells == 0
    assert agg.frac_all_in_recession == 0.0


def test_mass_conservation():
    agg = engine.monte_carlo(ModelParams(), ROSTER, 200, 5, chunk_runs=64)
    assert sum(agg.counts_hist) == 200 * 136 == agg.n_years
    recession_years = sum(c * v for c, v in enumerate(agg.counts_hist))
    assert sum(d * v for d, v in agg.duration_counts.items()) == recession_years
    assert sum(agg.duration_counts.values()) == agg.total_spells
    # a one-year gap is two adjacent recession years inside a spell
    assert agg.wait_counts.get(1, 0) == recession_years - agg.total_spells


def test_determinism_across_chunks_and_workers():
    p = ModelParams()
    a = engine.monte_carlo(p, ROSTER, 120, 9, workers=1, chunk_runs=120)
    b = engine.monte_carlo(p, ROSTER, 120, 9, workers=1, chunk_runs=17)
    c = engine.monte_carlo(p, ROSTER, 120, 9, workers=3, chunk_runs=25)
    assert a.to_dict() == b.to_dict() == c.to_dict()


def test_different_seeds_differ():
    a = engine.monte_carlo(ModelParams(), ROSTER, 20, 1)
    b = engine.monte_carlo(ModelParams(), ROSTER, 20, 2)
    assert a.to_dict() != b.to_dict()


def test_aggregate_round_trip():
    agg = engine.monte_carlo(ModelParams(), ROSTER, 10, 3)
    assert engine.AggregateStats.from_dict(agg.to_dict()) == agg


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        engine.monte_carlo(ModelParams(), ROSTER, 0, 1)
    with pytest.raises(model.ConfigError):
        engine.monte_carlo(ModelParams(), CountryRoster.equal(5), 1, 1)


@pytest.mark.parametrize("floor", [0.3, 0.6, 0.95])
def test_higher_threshold_floor_shrinks_recession_set(floor):
    # thresholds are floor + (1 - floor) u on the same uniforms, so raising the
    # floor can only remove cascade entries
    base = ModelParams()
    lo, _ = engine.simulate_block(base, ROSTER, 21, range(40))
    hi, _ = engine.simulate_block(base.with_(tau_floor=floor), ROSTER, 21, range(40))
    assert np.all(hi <= lo)


def test_ablation_binomial_oracle():
    p = engine.ablation_params(ModelParams())
    block, _ = engine.simulate_block(p, ROSTER, 3, range(2000))
    frac = block[:, 10:, :].mean()
    expected = model.stationary_recession_probability(p)
    n = block[:, 10:, :].size
    # step-to-step persistence inflates the variance by roughly 1.12
    se = 1.12 * np.sqrt(expected * (1 - expected) / n)
    assert abs(frac - expected) < 3 * se
    assert expected == pytest.approx(0.0676, abs=5e-4)


def test_ablation_note():
    agg = engine.monte_carlo(engine.ablation_params(ModelParams()), ROSTER, 20, 0)
    assert any("max simultaneous" in n for n in agg.notes)


def spells_oracle(col):
    out, run = [], 0
    for v in col:
        if v:
            run += 1
        elif run:
            out.append(run)
            run = 0
    if run:
        out.append(run)
    return out


def waits_oracle(col):
    idx = [t for t, v in enumerate(col) if v]
    return [b - a for a, b in zip(idx, idx[1:])]


def test_extractor_equivalence_random_matrices():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        t, n = rng.integers(1, 30), rng.integers(1, 8)
        m = rng.random((t, n)) < rng.uniform(0.05, 0.9)
        spells = sorted(s for c in m.T.tolist() for s in spells_oracle(c))
        waits = sorted(w for c in m.T.tolist() for w in waits_oracle(c))
        assert sorted(empirics.spell_lengths(m).tolist()) == spells
        assert sorted(empirics.wait_gaps(m).tolist()) == waits
        rs = engine.trajectory_stats(m)
        assert sorted(rs.durations.tolist()) == spells
        assert rs.counts_hist.tolist() == [int((m.sum(1) == c).sum()) for c in range(n + 1)]


@settings(max_examples=100)
@given(arrays(bool, st.tuples(st.integers(1, 4), st.integers(1, 20), st.integers(1, 5))))
def test_block_stats_equal_concatenated_runs(block):
    whole = engine._block_stats(block)
    parts = [engine.trajectory_stats(r) for r in block]
    assert sorted(whole.durations.tolist()) == sorted(d for p in parts for d in p.durations.tolist())
    assert sorted(whole.waits.tolist()) == sorted(w for p in parts for w in p.waits.tolist())
    assert whole.counts_hist.tolist() == np.sum([p.counts_hist for p in parts], axis=0).tolist()


def synthetic_targets():
    return engine_facts(engine.monte_carlo(ModelParams(), ROSTER, 100, 99))


def engine_facts(agg):
    return empirics.StylizedFacts(
        counts_hist=agg.counts_hist,
        duration_counts=agg.duration_counts,
        wait_counts=agg.wait_counts,
        total_spells=agg.total_spells,
        aggregate_recession_years=[],
    )


def test_sweep_scores_and_error_rows(monkeypatch):
    targets = synthetic_targets()
    grid = [ModelParams(), ModelParams(pi_lo=0.3, pi_hi=0.5)]
    rows = engine.sweep(grid, ROSTER, 100, 99, targets)
    assert rows[0].ks_durations == 0.0 and rows[0].corr_durations == pytest.approx(1.0)
    assert rows[1].ks_counts > rows[0].ks_counts
    assert rows[1].corr_counts < rows[0].corr_counts

    real = engine.monte_carlo

    def flaky(params, *a, **kw):
        if params.mu == 0.5:
            raise RuntimeError("boom")
        return real(params, *a, **kw)

    monkeypatch.setattr(engine, "monte_carlo", flaky)
    rows = engine.sweep([ModelParams(mu=0.5), ModelParams()], ROSTER, 10, 1, targets)
    assert rows[0].error == "RuntimeError: boom"
    assert rows[1].error == ""


def test_sweep_matches_single_monte_carlo():
    targets = synthetic_targets()
    p = ModelParams(mu=0.2)
    (row,) = engine.sweep([p], ROSTER, 30, 4, targets)
    direct = engine.score(engine.monte_carlo(p, ROSTER, 30, 4), targets)
    assert row.ks_counts == direct["ks_counts"]
    assert row.corr_waits == direct["corr_waits"]
