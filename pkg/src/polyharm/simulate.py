"""Monte Carlo estimation of hitting objects, for cross-validation.

Trajectories run under the chain's transition matrix until absorption
(or a step cap).  The uniform variate consumed by trial t at step k is
the value at counter offset (k-1)*trials + t of a Philox stream keyed by
the seed, so every trial owns a fixed, scheduler-independent substream:
results are bit-identical no matter how trials are sharded across
workers.  Merging shard results is plain addition of counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bvp import GreenMatrix
from .chain import Chain

CENSOR_FLAG_RATE = 1e-3
UNDERPOWERED_TRIALS = 100


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters; ``seed`` pins the whole experiment."""

    trials: int
    seed: int
    max_steps: int
    start: str

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(eq=False)
class HittingEstimate:
    """Raw counts from absorbed trajectories.

    ``first_visit[t, j]`` counts trials first absorbed at boundary vertex
    j exactly at step t (row 0 is all zero: starts are interior);
    ``occupancy[t, i]`` counts trials sitting at vertex i at step t,
    absorbed trials included.  Rows stop at the last recorded step; the
    occupancy row is constant from there on.
    """

    chain: Chain
    config: SimConfig
    counts: np.ndarray
    censored: int
    first_visit: np.ndarray
    occupancy: np.ndarray

    @property
    def trials(self) -> int:
        return self.config.trials

    @property
    def hit_fraction(self) -> np.ndarray:
        return self.counts / self.trials

    @property
    def std_error(self) -> np.ndarray:
        p = self.hit_fraction
        return np.sqrt(p * (1.0 - p) / self.trials)

    @property
    def censor_flagged(self) -> bool:
        return self.censored / self.trials > CENSOR_FLAG_RATE

    def count_of(self, w: str) -> int:
        return int(self.counts[self.chain.boundary_ids.index(w)])


def _step_uniforms(seed: int, step: int, trials: int, lo: int, hi: int) -> np.ndarray:
    offset = (step - 1) * trials + lo
    bitgen = np.random.Philox(key=seed)
    # advance() moves the counter in whole 4-output blocks; walk the rest
    bitgen.advance(offset // 4)
    if offset % 4:
        bitgen.random_raw(offset % 4)
    return np.random.Generator(bitgen).random(hi - lo)


def _run_shard(chain: Chain, config: SimConfig, lo: int, hi: int):
    n = chain.n
    nb = len(chain.boundary)
    start = chain.vertex_index(config.start)
    boundary_set = np.zeros(n, dtype=bool)
    boundary_set[list(chain.boundary)] = True
    boundary_col = np.full(n, -1, dtype=np.int64)
    for j, w in enumerate(chain.boundary):
        boundary_col[w] = j
    cum = np.cumsum(chain.trans, axis=1)
    cum[:, -1] = 1.0  # guard against rounding in the last bin

    m = hi - lo
    pos = np.full(m, start, dtype=np.int64)
    active = np.ones(m, dtype=bool)
    counts = np.zeros(nb, dtype=np.int64)
    first_visit = np.zeros((config.max_steps + 1, nb), dtype=np.int64)
    occupancy_rows = [np.bincount(pos, minlength=n)]

    step = 0
    while active.any() and step < config.max_steps:
        step += 1
        u = _step_uniforms(config.seed, step, config.trials, lo, hi)
        idx = np.nonzero(active)[0]
        rows = cum[pos[idx]]
        nxt = (u[idx, None] >= rows).sum(axis=1)
        pos[idx] = nxt
        hit = boundary_set[nxt]
        if hit.any():
            cols = boundary_col[nxt[hit]]
            np.add.at(counts, cols, 1)
            np.add.at(first_visit[step], cols, 1)
            active[idx[hit]] = False
        occupancy_rows.append(np.bincount(pos, minlength=n))

    censored = int(active.sum())
    occupancy = np.vstack(occupancy_rows)
    return counts, censored, first_visit[: step + 1], occupancy


def simulate_hitting(chain: Chain, config: SimConfig, shards: int = 1) -> HittingEstimate:
    """Run ``config.trials`` independent trajectories from
    ``config.start`` and tally absorption vertex, absorption time and
    per-step occupancy.

    ``shards`` only partitions the work; results are identical for any
    value because every trial consumes its own counter-indexed substream.
    Trajectories still alive after ``max_steps`` are counted as censored
    (exponentially rare on a valid chain).
    """
    start_idx = chain.vertex_index(config.start)
    if start_idx not in chain.interior:
        raise ValueError(f"start vertex {config.start!r} must be interior")
    if shards < 1:
        raise ValueError("shards must be >= 1")

    bounds = np.linspace(0, config.trials, shards + 1).astype(int)
    total_counts = np.zeros(len(chain.boundary), dtype=np.int64)
    total_censored = 0
    fv_parts: list[np.ndarray] = []
    occ_parts: list[np.ndarray] = []
    for s in range(shards):
        lo, hi = int(bounds[s]), int(bounds[s + 1])
        if lo == hi:
            continue
        counts, censored, fv, occ = _run_shard(chain, config, lo, hi)
        total_counts += counts
        total_censored += censored
        fv_parts.append(fv)
        occ_parts.append(occ)

    t_max = max(p.shape[0] for p in fv_parts)
    first_visit = np.zeros((t_max, len(chain.boundary)), dtype=np.int64)
    for p in fv_parts:
        first_visit[: p.shape[0]] += p
    o_max = max(p.shape[0] for p in occ_parts)
    occupancy = np.zeros((o_max, chain.n), dtype=np.int64)
    for p in occ_parts:
        occupancy[: p.shape[0]] += p
        if p.shape[0] < o_max:  # absorbed shards stay where they ended
            occupancy[p.shape[0]:] += p[-1]

    return HittingEstimate(
        chain=chain,
        config=config,
        counts=total_counts,
        censored=total_censored,
        first_visit=first_visit,
        occupancy=occupancy,
    )


@dataclass(eq=False)
class SeriesCheck:
    """One boundary vertex of the resolvent-series comparison."""

    empirical: float
    analytic: float
    sigma: float
    truncation_bound: float

    @property
    def within(self) -> bool:
        return abs(self.empirical - self.analytic) <= 3.0 * self.sigma + self.truncation_bound


@dataclass(eq=False)
class ComparisonReport:
    """Monte Carlo vs analytic hitting values.

    At lam = 1 the absorption frequencies are z-scored against the
    hitting matrix; for real lam above the spectral radius the weighted
    series sum_t first_visit(t) lam^-t is compared against F(start, w |
    lam) with a censoring-based truncation bound.
    """

    mode: str
    start: str
    lam: complex
    z_scores: dict[str, float]
    series: dict[str, SeriesCheck]
    censored_fraction: float
    underpowered: bool

    @property
    def max_abs_z(self) -> float:
        return max((abs(z) for z in self.z_scores.values()), default=0.0)

    @property
    def all_series_within(self) -> bool:
        return all(s.within for s in self.series.values())


def compare_to_analytic(estimate: HittingEstimate, gm: GreenMatrix) -> ComparisonReport:
    """Compare an estimate against the analytic hitting values carried by
    a Green matrix (must be built on the same chain)."""
    chain = estimate.chain
    if gm.chain is not chain and gm.chain.vertices != chain.vertices:
        raise ValueError("estimate and Green matrix use different chains")
    start = estimate.config.start
    x_row = chain.interior.index(chain.vertex_index(start))
    lam = gm.lam
    underpowered = estimate.trials < UNDERPOWERED_TRIALS
    censored_fraction = estimate.censored / estimate.trials

    z_scores: dict[str, float] = {}
    series: dict[str, SeriesCheck] = {}
    if abs(lam - 1.0) <= 1e-12:
        p_hat = estimate.hit_fraction
        se = estimate.std_error
        for j, w in enumerate(chain.boundary_ids):
            target = float(gm.f[x_row, j].real)
            if se[j] > 0:
                z = (p_hat[j] - target) / se[j]
            else:
                z = 0.0 if abs(p_hat[j] - target) < 1e-15 else float("inf")
            z_scores[w] = float(z)
    else:
        if abs(lam.imag) > 1e-12 or lam.real <= 0:
            raise ValueError("series comparison needs real positive lam")
        t = np.arange(estimate.first_visit.shape[0])
        weights = lam.real ** (-t.astype(float))
        n_trials = estimate.trials
        for j, w in enumerate(chain.boundary_ids):
            hist = estimate.first_visit[:, j].astype(float)
            emp = float((hist * weights).sum() / n_trials)
            second = float((hist * weights**2).sum() / n_trials)
            var = max(second - emp**2, 0.0) / n_trials
            if lam.real > 1.0:
                tail = lam.real ** (-(estimate.config.max_steps + 1))
                trunc = censored_fraction * tail / (1.0 - 1.0 / lam.real)
            else:
                trunc = censored_fraction  # crude but safe for lam <= 1
            analytic = float(gm.f[x_row, j].real)
            series[w] = SeriesCheck(
                empirical=emp,
                analytic=analytic,
                sigma=float(np.sqrt(var)),
                truncation_bound=float(trunc),
            )
    return ComparisonReport(
        mode="hitting" if abs(lam - 1.0) <= 1e-12 else "series",
        start=start,
        lam=lam,
        z_scores=z_scores,
        series=series,
        censored_fraction=float(censored_fraction),
        underpowered=underpowered,
    )
