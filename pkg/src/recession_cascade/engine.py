"""Seeded Monte Carlo ensembles, stylized-fact aggregation, ablation and sweeps.

Run ``i`` of an ensemble draws everything (its graph, its thresholds, every
step's rates) from ``default_rng(SeedSequence([master_seed, i]))``. Batches of
runs are evaluated together with vectorized dynamics, and the result does not
depend on batch size or worker count.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from numpy.typing import NDArray

from . import empirics, model, smallworld, stats
from .model import CountryRoster, ModelParams, StepDraws

log = logging.getLogger(__name__)

CHUNK_RUNS = 500


def run_stream(master_seed: int, run_index: int) -> np.random.Generator:
    """The random stream owned by one run of an ensemble."""
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), int(run_index)]))


@dataclass
class Trajectory:
    states: NDArray[np.bool_]  # n_steps x n_countries
    run_index: int
    graph: smallworld.Graph

    @property
    def graph_summary(self) -> list[list[int]]:
        return self.graph.edge_list()


@dataclass
class RunStats:
    counts_hist: NDArray[np.int64]
    durations: NDArray[np.int64]
    waits: NDArray[np.int64]
    n_all_in_recession: int
    max_simultaneous: int
    n_years: int


@dataclass
class AggregateStats:
    n_runs: int
    n_steps: int
    n_countries: int
    counts_hist: list[int]
    duration_counts: dict[int, int]
    wait_counts: dict[int, int]
    total_spells: int
    frac_all_in_recession: float
    max_simultaneous: int
    n_years: int
    graph_regenerations: int = 0
    notes: list[str] = field(default_factory=list)

    def duration_shares(self, support: Sequence[int] = range(1, 8)) -> NDArray[np.float64]:
        return stats.shares(self.duration_counts, support)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["duration_counts"] = {str(k): v for k, v in self.duration_counts.items()}
        d["wait_counts"] = {str(k): v for k, v in self.wait_counts.items()}
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AggregateStats":
        d = dict(d)
        d["duration_counts"] = {int(k): int(v) for k, v in d["duration_counts"].items()}
        d["wait_counts"] = {int(k): int(v) for k, v in d["wait_counts"].items()}
        return cls(**d)


def _prepare_run(params: ModelParams, roster: CountryRoster, rng: np.random.Generator):
    """Consume a run's stream in its fixed order: graph, thresholds, step draws."""
    graph = smallworld.generate_connected(
        params.n_countries, params.k, params.mu, rng, mode=params.rewiring_mode
    )
    weights = model.influence_matrix(graph.adjacency_matrix(), roster.sizes)
    run_tau = model.draw_run_thresholds(params, rng)
    return graph, weights, run_tau


def simulate_run(params: ModelParams, roster: CountryRoster, rng: np.random.Generator,
                 run_index: int = 0) -> Trajectory:
    """One solution: fresh connected graph, all countries start out of recession."""
    roster.check(params)
    graph, weights, run_tau = _prepare_run(params, roster, rng)
    state = np.zeros(params.n_countries, dtype=bool)
    states = np.empty((params.n_steps, params.n_countries), dtype=bool)
    for t in range(params.n_steps):
        draws = model.draw_step_rates(params, rng)
        state = model.step(state, weights, params, draws, run_tau)
        states[t] = state
    return Trajectory(states, run_index, graph)


def trajectory_stats(traj: Trajectory | NDArray[np.bool_]) -> RunStats:
    states = traj.states if isinstance(traj, Trajectory) else np.asarray(traj, dtype=bool)
    return _block_stats(states[None])


def _block_stats(block: NDArray[np.bool_]) -> RunStats:
    """Statistics of a ``runs x steps x countries`` block via the empirics extractors."""
    n_runs, n_steps, n = block.shape
    per_year = block.sum(axis=2).ravel()
    columns = block.transpose(1, 0, 2).reshape(n_steps, n_runs * n)
    return RunStats(
        counts_hist=empirics.counts_histogram(per_year, n),
        durations=empirics.spell_lengths(columns),
        waits=empirics.wait_gaps(columns),
        n_all_in_recession=int((per_year == n).sum()),
        max_simultaneous=int(per_year.max()) if per_year.size else 0,
        n_years=int(per_year.size),
    )


def simulate_block(params: ModelParams, roster: CountryRoster, master_seed: int,
                   run_indices: Sequence[int]) -> tuple[NDArray[np.bool_], int]:
    """Trajectories for the given runs, stacked ``runs x steps x countries``.

    Bitwise identical to calling :func:`simulate_run` on each run's stream.
    """
    n, t_steps = params.n_countries, params.n_steps
    weights = np.empty((len(run_indices), n, n))
    run_tau = np.empty((len(run_indices), n))
    uniforms = np.empty((len(run_indices), t_steps, model.DRAWS_PER_COUNTRY, n))
    regen = 0
    for j, i in enumerate(run_indices):
        rng = run_stream(master_seed, i)
        graph, weights[j], run_tau[j] = _prepare_run(params, roster, rng)
        regen += graph.attempts - 1
        uniforms[j] = rng.random((t_steps, model.DRAWS_PER_COUNTRY, n))
    draws = StepDraws.from_uniforms(uniforms, params)
    return model.evolve(weights, params, draws, run_tau), regen


def _chunk_stats(args) -> tuple[RunStats, int]:
    params, sizes, names, master_seed, indices = args
    roster = CountryRoster(names, sizes)
    block, regen = simulate_block(params, roster, master_seed, indices)
    return _block_stats(block), regen


def _merge(parts: Iterable[tuple[RunStats, int]], params: ModelParams, n_runs: int) -> AggregateStats:
    counts = np.zeros(params.n_countries + 1, dtype=np.int64)
    durations: list[NDArray] = []
    waits: list[NDArray] = []
    n_all = 0
    max_sim = 0
    n_years = 0
    regen = 0
    for rs, rg in parts:
        counts += rs.counts_hist
        durations.append(rs.durations)
        waits.append(rs.waits)
        n_all += rs.n_all_in_recession
        max_sim = max(max_sim, rs.max_simultaneous)
        n_years += rs.n_years
        regen += rg
    dur = np.concatenate(durations) if durations else np.zeros(0, dtype=np.int64)
    wt = np.concatenate(waits) if waits else np.zeros(0, dtype=np.int64)
    return AggregateStats(
        n_runs=n_runs,
        n_steps=params.n_steps,
        n_countries=params.n_countries,
        counts_hist=[int(c) for c in counts],
        duration_counts=empirics.tally(dur),
        wait_counts=empirics.tally(wt),
        total_spells=int(dur.size),
        frac_all_in_recession=n_all / n_years if n_years else 0.0,
        max_simultaneous=max_sim,
        n_years=n_years,
        graph_regenerations=regen,
    )


def monte_carlo(params: ModelParams, roster: CountryRoster, n_runs: int, master_seed: int,
                workers: int = 1, chunk_runs: int = CHUNK_RUNS) -> AggregateStats:
    """Aggregate stylized facts over ``n_runs`` independent solutions."""
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    roster.check(params)
    chunks = [list(range(lo, min(lo + chunk_runs, n_runs))) for lo in range(0, n_runs, chunk_runs)]
    jobs = [(params, roster.sizes, roster.names, master_seed, c) for c in chunks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_stats, jobs))
    else:
        parts = [_chunk_stats(j) for j in jobs]
    agg = _merge(parts, params, n_runs)
    if params.k == 0:
        agg.notes.append(
            f"network removed; max simultaneous recessions = {agg.max_simultaneous}"
        )
    return agg


def ablation_params(params: ModelParams) -> ModelParams:
    """Same entry/exit ranges, no network."""
    return params.with_(k=0, mu=0.0)

@dataclass
class SweepRow:
    params: ModelParams
    ks_counts: float = float("nan")
    ks_counts_p: float = float("nan")
    ks_durations: float = float("nan")
    ks_durations_p: float = float("nan")
    ks_waits: float = float("nan")
    ks_waits_p: float = float("nan")
    corr_counts: float = float("nan")
    corr_durations: float = float("nan")
    corr_waits: float = float("nan")
    total_spells: int = 0
    error: str = ""


def score(agg: AggregateStats, targets: empirics.StylizedFacts) -> dict[str, float]:
    """Two-sample KS distances and share correlations of model output vs targets."""
    model_counts = dict(enumerate(agg.counts_hist))
    target_counts = dict(enumerate(targets.counts_hist))
    out = {}
    pairs = [
        ("counts", model_counts, target_counts),
        ("durations", agg.duration_counts, targets.duration_counts),
        ("waits", agg.wait_counts, targets.wait_counts),
    ]
    for name, m, t in pairs:
        try:
            d, p = stats.ks_two_sample_counts(t, m)
        except ValueError:
            d, p = float("nan"), float("nan")
        out[f"ks_{name}"] = d
        out[f"ks_{name}_p"] = p
        support = sorted(set(m) | set(t))
        try:
            out[f"corr_{name}"] = stats.pearson(stats.shares(t, support), stats.shares(m, support))
        except ValueError:
            out[f"corr_{name}"] = float("nan")
    return out


def sweep(grid: Sequence[ModelParams], roster: CountryRoster, n_runs: int, master_seed: int,
          targets: empirics.StylizedFacts, workers: int = 1) -> list[SweepRow]:
    """Score every grid point against ``targets``; a failing point yields an error row."""
    if not grid:
        raise ValueError("sweep grid is empty")
    rows = []
    for params in grid:
        try:
            agg = monte_carlo(params, roster, n_runs, master_seed, workers=workers)
            rows.append(SweepRow(params, total_spells=agg.total_spells, **score(agg, targets)))
        except Exception as exc:  # recorded per row, never fatal
            log.warning("sweep point %s failed: %s", params, exc)
            rows.append(SweepRow(params, error=f"{type(exc).__name__}: {exc}"))
    return rows
