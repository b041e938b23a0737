"""Agent state dynamics: stochastic entry/exit plus a size-weighted threshold cascade.

Every transition is a pure function of explicit inputs. Random numbers are
drawn up front into a :class:`StepDraws` block so the same dynamics can be
evaluated for one run or for a stacked batch of runs (leading axes are
treated as batch axes throughout).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from numpy.typing import NDArray

CASCADE_MODES = ("sequential", "synchronous", "fixed-point")
THRESHOLD_MODES = ("per-run", "per-step")
REWIRING_MODES = ("degree-preserving-swap", "endpoint-rewire")

# rows of the per-step uniform block: pi, rho, tau, exit uniform, entry uniform
DRAWS_PER_COUNTRY = 5


class ConfigError(ValueError):
    """Invalid model or run configuration. ``errors`` maps field -> message."""

    def __init__(self, errors: dict[str, str]):
        self.errors = dict(errors)
        msg = "; ".join(f"{k}: {v}" for k, v in self.errors.items())
        super().__init__(msg)


@dataclass(frozen=True)
class ModelParams:
    """Calibration of the cascade model."""

    pi_lo: float = 0.01
    pi_hi: float = 0.11
    rho_lo: float = 0.76
    rho_hi: float = 1.0
    tau_floor: float = 0.1
    k: int = 2
    mu: float = 0.08
    n_countries: int = 17
    n_steps: int = 136
    cascade_mode: str = "sequential"
    threshold_mode: str = "per-run"
    rewiring_mode: str = "degree-preserving-swap"

    def __post_init__(self):
        errors = {}
        if not 0.0 <= self.pi_lo <= self.pi_hi <= 1.0:
            errors["pi"] = f"need 0 <= pi_lo <= pi_hi <= 1, got [{self.pi_lo}, {self.pi_hi}]"
        if not 0.0 <= self.rho_lo <= self.rho_hi <= 1.0:
            errors["rho"] = f"need 0 <= rho_lo <= rho_hi <= 1, got [{self.rho_lo}, {self.rho_hi}]"
        if not 0.0 <= self.tau_floor < 1.0:
            errors["tau_floor"] = f"need 0 <= tau_floor < 1, got {self.tau_floor}"
        if not 0.0 <= self.mu <= 1.0:
            errors["mu"] = f"need 0 <= mu <= 1, got {self.mu}"
        if int(self.k) != self.k or self.k < 0:
            errors["k"] = f"need integer k >= 0, got {self.k}"
        if int(self.n_countries) != self.n_countries or self.n_countries < 1:
            errors["n_countries"] = f"need positive integer, got {self.n_countries}"
        elif 2 * self.k >= self.n_countries and self.k > 0:
            errors["k"] = f"need 2*k < n_countries, got k={self.k}, n={self.n_countries}"
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            errors["n_steps"] = f"need positive integer, got {self.n_steps}"
        if self.cascade_mode not in CASCADE_MODES:
            errors["cascade_mode"] = f"must be one of {CASCADE_MODES}, got {self.cascade_mode!r}"
        if self.threshold_mode not in THRESHOLD_MODES:
            errors["threshold_mode"] = f"must be one of {THRESHOLD_MODES}, got {self.threshold_mode!r}"
        if self.rewiring_mode not in REWIRING_MODES:
            errors["rewiring_mode"] = f"must be one of {REWIRING_MODES}, got {self.rewiring_mode!r}"
        if errors:
            raise ConfigError(errors)

    @property
    def cascade_fixed_point(self) -> bool:
        return self.cascade_mode == "fixed-point"

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError({name: "unknown parameter" for name in sorted(unknown)})
        return cls(**data)

    def with_(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class CountryRoster:
    """Country names and economy-size weights; order fixes ring-lattice positions."""

    names: tuple[str, ...]
    sizes: NDArray[np.float64] = field(repr=False)

    def __post_init__(self):
        names = tuple(self.names)
        sizes = np.asarray(self.sizes, dtype=float)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "sizes", sizes)
        if sizes.ndim != 1 or len(sizes) != len(names):
            raise ConfigError({"roster": f"{len(names)} names but {sizes.size} sizes"})
        if len(set(names)) != len(names):
            raise ConfigError({"roster": "country names must be unique"})
        if not np.all(np.isfinite(sizes)) or np.any(sizes <= 0):
            raise ConfigError({"roster": "all sizes must be finite and > 0"})

    def __len__(self) -> int:
        return len(self.names)

    @classmethod
    def equal(cls, n: int) -> "CountryRoster":
        return cls(tuple(f"C{i:02d}" for i in range(n)), np.ones(n))

    def with_equal_sizes(self) -> "CountryRoster":
        return CountryRoster(self.names, np.ones(len(self.names)))

    def check(self, params: ModelParams) -> None:
        if len(self) != params.n_countries:
            raise ConfigError(
                {"roster": f"roster has {len(self)} countries, params expect {params.n_countries}"}
            )


@dataclass(frozen=True)
class StepDraws:
    """Per-country random inputs for one step (or a stack of steps / runs).

    ``u_exit`` and ``u_entry`` are the uniforms that resolve the recovery and
    entry coin flips, so the phases themselves are deterministic.
    """

    pi: NDArray[np.float64]
    rho: NDArray[np.float64]
    tau: NDArray[np.float64]
    u_exit: NDArray[np.float64]
    u_entry: NDArray[np.float64]

    @classmethod
    def from_uniforms(cls, u: NDArray[np.float64], params: ModelParams) -> "StepDraws":
        """Map a ``(..., 5, n)`` block of U[0,1) values onto the parameter ranges."""
        u = np.asarray(u, dtype=float)
        return cls(
            pi=params.pi_lo + (params.pi_hi - params.pi_lo) * u[..., 0, :],
            rho=params.rho_lo + (params.rho_hi - params.rho_lo) * u[..., 1, :],
            tau=params.tau_floor + (1.0 - params.tau_floor) * u[..., 2, :],
            u_exit=u[..., 3, :],
            u_entry=u[..., 4, :],
        )

    def at(self, t: int) -> "StepDraws":
        """Slice step ``t`` out of draws stacked along axis -2."""
        return StepDraws(*(getattr(self, f.name)[..., t, :] for f in fields(self)))


def draw_step_rates(params: ModelParams, rng: np.random.Generator) -> StepDraws:
    """Draw one step's pi, rho, tau and transition uniforms for every country.

    Always consumes exactly ``5 * n_countries`` doubles, so a run's stream
    layout does not depend on the threshold mode.
    """
    return StepDraws.from_uniforms(rng.random((DRAWS_PER_COUNTRY, params.n_countries)), params)


def draw_run_thresholds(params: ModelParams, rng: np.random.Generator) -> NDArray[np.float64]:
    return params.tau_floor + (1.0 - params.tau_floor) * rng.random(params.n_countries)


def _check_dims(state: NDArray, *arrays: NDArray) -> None:
    n = state.shape[-1]
    for a in arrays:
        if a.shape[-1] != n:
            raise ValueError(f"dimension mismatch: state has {n} countries, got array of shape {a.shape}")


def stochastic_phase(state: NDArray[np.bool_], draws: StepDraws) -> NDArray[np.bool_]:
    """Recover with probability rho, then expose every non-recession country to entry.

    A country that just recovered is re-exposed to entry in the same step, so
    the per-step exit probability of a country in recession is rho * (1 - pi).
    """
    state = np.asarray(state, dtype=bool)
    _check_dims(state, draws.pi, draws.rho, draws.u_exit, draws.u_entry)
    recovered = state & (draws.u_exit < draws.rho)
    stays = state & ~recovered
    return stays | (draws.u_entry < draws.pi)


def influence_matrix(adjacency: NDArray, sizes: NDArray) -> NDArray[np.float64]:
    """Row-normalized neighbor weights: row i holds size_j / sum of neighbor sizes.

    Isolated vertices get an all-zero row (pressure 0). ``adjacency`` may carry
    leading batch axes.
    """
    adjacency = np.asarray(adjacency, dtype=float)
    sizes = np.asarray(sizes, dtype=float)
    w = adjacency * sizes[..., None, :]
    totals = w.sum(axis=-1, keepdims=True)
    return np.divide(w, totals, out=np.zeros_like(w), where=totals > 0)


def pressure(state: NDArray[np.bool_], weights: NDArray[np.float64]) -> NDArray[np.float64]:
    return np.einsum("...ij,...j->...i", weights, state.astype(float))


def cascade_phase(
    state: NDArray[np.bool_],
    weights: NDArray[np.float64],
    tau: NDArray[np.float64],
    mode: str = "sequential",
) -> NDArray[np.bool_]:
    """Import recessions from neighbors whose weighted share exceeds each threshold.

    ``sequential`` visits countries in roster order and updates in place, so a
    country pushed into recession counts toward later countries in the same
    sweep. ``synchronous`` evaluates every country on the input state.
    ``fixed-point`` repeats synchronous passes until nothing changes. No mode
    ever removes a recession.
    """
    state = np.asarray(state, dtype=bool)
    weights = np.asarray(weights, dtype=float)
    tau = np.asarray(tau, dtype=float)
    _check_dims(state, tau, weights)
    if weights.shape[-2] != state.shape[-1]:
        raise ValueError(f"weights shape {weights.shape} does not match {state.shape[-1]} countries")

    if mode == "synchronous":
        return state | (pressure(state, weights) > tau)
    if mode == "fixed-point":
        while True:
            nxt = state | (pressure(state, weights) > tau)
            if np.array_equal(nxt, state):
                return nxt
            state = nxt
    if mode == "sequential":
        out = state.copy()
        as_float = out.astype(float)
        for i in range(out.shape[-1]):
            hit = np.einsum("...j,...j->...", weights[..., i, :], as_float) > tau[..., i]
            out[..., i] |= hit
            as_float[..., i] = out[..., i]
        return out
    raise ValueError(f"unknown cascade mode {mode!r}")


def step(
    state: NDArray[np.bool_],
    weights: NDArray[np.float64],
    params: ModelParams,
    draws: StepDraws,
    run_tau: NDArray[np.float64] | None = None,
) -> NDArray[np.bool_]:
    """One model step: stochastic entry/exit, then the cascade.

    With ``threshold_mode == "per-run"`` the thresholds in ``run_tau`` are used
    and the step's own tau draw is ignored.
    """
    tau = draws.tau
    if params.threshold_mode == "per-run":
        if run_tau is None:
            raise ValueError("per-run threshold mode needs run_tau")
        tau = run_tau
    after = stochastic_phase(state, draws)
    if params.k == 0:
        return after
    return cascade_phase(after, weights, tau, params.cascade_mode)


def evolve(
    weights: NDArray[np.float64],
    params: ModelParams,
    draws: StepDraws,
    run_tau: NDArray[np.float64] | None = None,
    initial: NDArray[np.bool_] | None = None,
) -> NDArray[np.bool_]:
    """Iterate :func:`step` over draws stacked as ``(..., n_steps, n)``.

    Returns the state after each step with the same shape. Starts from all
    countries out of recession unless ``initial`` is given.
    """
    shape = draws.pi.shape
    n_steps = shape[-2]
    batch = shape[:-2]
    state = np.zeros(batch + (shape[-1],), dtype=bool) if initial is None else np.asarray(initial, bool)
    out = np.empty(shape, dtype=bool)
    for t in range(n_steps):
        state = step(state, weights, params, draws.at(t), run_tau)
        out[..., t, :] = state
    return out


def stationary_recession_probability(params: ModelParams) -> float:
    """Long-run recession share of an isolated country (no network)."""
    pi_bar = 0.5 * (params.pi_lo + params.pi_hi)
    rho_bar = 0.5 * (params.rho_lo + params.rho_hi)
    exit_p = rho_bar * (1.0 - pi_bar)
    return pi_bar / (pi_bar + exit_p)


def isolated_exit_probability(params: ModelParams) -> float:
    pi_bar = 0.5 * (params.pi_lo + params.pi_hi)
    rho_bar = 0.5 * (params.rho_lo + params.rho_hi)
    return rho_bar * (1.0 - pi_bar)

