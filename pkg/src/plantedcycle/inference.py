"""Scan-statistic detection and recovery: exact argmax over an enumerated
feasible set, a local-search surrogate over latent positions, the midpoint
threshold test, and Monte Carlo risk estimates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from plantedcycle import _kernels as K
from plantedcycle.feasible import FeasibleSet, cached_feasible, size_band, size_band_filter
from plantedcycle.model import Adjacency, Params, cycle_bits, sample_null, sample_planted
from plantedcycle.parallel import pmap
from plantedcycle.seeding import as_generator, substream

SWEEP_COLUMNS = (
    "n", "tau", "p", "q", "r", "lambda", "a", "b", "trials", "seed",
    "detect_risk", "detect_se", "recovery_ratio", "recovery_se", "search_mode", "truth_init",
)  # fmt: skip


@dataclass(frozen=True)
class SearchResult:
    Xhat: Adjacency
    Lhat: float
    zhat: np.ndarray | None
    mode: str

    def check(self, A: Adjacency) -> bool:
        return self.Lhat == self.Xhat.inner(A)


def exact_search(A: Adjacency, S: FeasibleSet) -> SearchResult:
    """argmax of <X, A> over S; ties go to the smallest bitstring."""
    if len(S) == 0:
        raise ValueError("feasible set is empty")
    if S.n != A.n:
        raise ValueError("feasible set and A disagree on n")
    vals = S.bits_matrix().astype(np.int64) @ A.bits.astype(np.int64)
    best = int(np.argmax(vals))  # members are sorted by bitstring, argmax takes the first
    return SearchResult(S.members[best], float(vals[best]), None, "exact")


def spectral_init(A: Adjacency) -> np.ndarray:
    """Angles from the top two eigenvectors of the centered adjacency."""
    M = A.matrix(np.float64)
    M -= M.mean()
    np.fill_diagonal(M, 0.0)
    w, V = np.linalg.eigh(M)
    v1, v2 = V[:, -1], V[:, -2]
    return np.mod(np.arctan2(v2, v1) / (2 * math.pi), 1.0)


def hop_distances(A: Adjacency) -> np.ndarray:
    """Breadth-first hop counts; unreachable pairs get one more than the largest finite count."""
    M = A.matrix(np.int32)
    n = A.n
    D = np.full((n, n), -1, np.int64)
    reached = np.eye(n, dtype=bool)
    D[reached] = 0
    frontier = reached.copy()
    d = 0
    while frontier.any():
        d += 1
        nxt = (frontier.astype(np.int32) @ M > 0) & ~reached
        D[nxt] = d
        reached |= nxt
        frontier = nxt
    D[D < 0] = d
    return D


def mds_init(A: Adjacency) -> np.ndarray:
    """Evenly spaced positions in the circular order given by planar scaling of hop distances."""
    D = hop_distances(A).astype(float)
    n = A.n
    J = np.eye(n) - 1.0 / n
    B = -0.5 * J @ (D**2) @ J
    _, V = np.linalg.eigh(B)
    ang = np.arctan2(V[:, -2], V[:, -1])
    # keep only the circular order and space points evenly, which puts |X| near its mean
    rank = np.empty(n)
    rank[np.argsort(ang, kind="stable")] = np.arange(n)
    return (rank + 0.5) / n


@dataclass(frozen=True)
class LocalSearchConfig:
    restarts: int = 50
    max_sweeps: int = 60
    band: bool = True
    spectral: bool = True
    mds: bool = True
    swaps_per_vertex: float = 1.0
    blocks_per_sweep: int = 16
    drift: float = 0.0


def local_search(
    A: Adjacency,
    params: Params,
    restarts: int = 50,
    include_truth_init: bool = False,
    rng=None,
    z_truth=None,
    config: LocalSearchConfig | None = None,
) -> SearchResult:
    """Best cycle graph found by hill climbing over latent positions.

    One restart starts from a spectral embedding, one from a planar scaling
    of hop distances, one from ``z_truth`` when ``include_truth_init`` is set
    (test mode), and the rest from uniform draws.
    """
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    if include_truth_init and z_truth is None:
        raise ValueError("include_truth_init needs z_truth")
    cfg = config or LocalSearchConfig(restarts=restarts)
    rng = as_generator(rng)
    n, tau = A.n, params.tau
    half = tau / 2
    Am = A.matrix(np.int64)
    indptr = np.concatenate([[0], np.cumsum(Am.sum(axis=1))]).astype(np.int64)
    indices = np.nonzero(Am)[1].astype(np.int64)
    lo, hi = size_band(n, tau) if cfg.band else (-np.inf, np.inf)
    a_bits = A.bits

    inits: list[np.ndarray] = []
    if include_truth_init:
        inits.append(np.asarray(z_truth, dtype=float))
    if cfg.spectral and n >= 3:
        inits.append(spectral_init(A))
    if cfg.mds and n >= 3:
        inits.append(mds_init(A))
    while len(inits) < restarts + int(include_truth_init):
        inits.append(rng.random(n))

    def score(z):
        # in-band candidates beat any out-of-band one; then larger overlap, then smaller violation
        x = cycle_bits(z, tau)
        size = int(x.sum())
        viol = max(lo - size, size - hi, 0.0)
        val = int(np.count_nonzero(x & a_bits))
        return (viol == 0.0, val if viol == 0.0 else -viol, val)

    best_z, best_key = None, None
    for z0 in inits:
        seed = int(rng.integers(2**31 - 1))
        z, _ = K.local_search_kernel(
            z0.copy(), Am, indptr, indices, half, float(lo), float(hi), cfg.max_sweeps, seed,
            n <= 64, int(cfg.swaps_per_vertex * n), cfg.blocks_per_sweep, cfg.drift,
        )  # fmt: skip
        for cand in (z, z0):
            key = score(cand)
            if best_key is None or key[:2] > best_key[:2]:
                best_z, best_key = cand, key
    X = Adjacency(n, cycle_bits(best_z, tau))
    return SearchResult(X, float(best_key[2]), best_z, "local")


def kappa(params: Params) -> float:
    return math.comb(params.n, 2) * params.tau * (params.p + params.r) / 2


def detect(result: SearchResult, params: Params) -> bool:
    return bool(result.Lhat > kappa(params))


def recovery_metrics(Xhat: Adjacency, X: Adjacency, params: Params) -> tuple[float, float]:
    """(squared error, squared error over the trivial risk C(n,2) tau (1 - tau))."""
    if Xhat.n != X.n:
        raise ValueError("size mismatch")
    mse = float(Xhat.hamming(X))
    return mse, mse / (math.comb(X.n, 2) * params.tau * (1 - params.tau))


def auc(pos, neg) -> float:
    """P(score under planted > score under null), ties counted one half."""
    pos = np.asarray(pos, dtype=float)[:, None]
    neg = np.asarray(neg, dtype=float)[None, :]
    return float(np.mean((pos > neg) + 0.5 * (pos == neg)))


@dataclass
class SweepRecord:
    n: int
    tau: float
    p: float
    q: float
    r: float
    lam: float
    trials: int
    seed: int
    detect_risk: float
    detect_se: float
    recovery_ratio: float
    recovery_se: float
    search_mode: str
    truth_init: bool
    a: float = math.nan
    b: float = math.nan
    extra: dict = field(default_factory=dict)

    def as_row(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        d.update(d.pop("extra"))
        return d


@dataclass(frozen=True)
class SearchSpec:
    mode: str = "local"  # local | exact
    restarts: int = 50
    truth_init: bool = False
    band: bool = True
    max_sweeps: int = 60


def run_search(A: Adjacency, params: Params, spec: SearchSpec, rng, z_truth=None) -> SearchResult:
    if spec.mode == "exact":
        S = cached_feasible(A.n, params.tau)
        if spec.band:
            S = size_band_filter(S)
        return exact_search(A, S)
    if spec.mode == "local":
        cfg = LocalSearchConfig(restarts=spec.restarts, band=spec.band, max_sweeps=spec.max_sweeps)
        return local_search(A, params, spec.restarts, spec.truth_init, rng, z_truth, cfg)
    raise ValueError(f"unknown search mode {spec.mode!r}")


def trial_outcome(params: Params, spec: SearchSpec, seed: int, cell: int, trial: int) -> dict:
    """One planted draw and one null draw with their scan statistics."""
    rng = substream(seed, cell, trial)
    A1, X, z = sample_planted(params, rng)
    A0 = sample_null(params, rng)
    r1 = run_search(A1, params, spec, rng, z_truth=z)
    r0 = run_search(A0, params, spec, rng, z_truth=z)
    _, ratio = recovery_metrics(r1.Xhat, X, params)
    return {
        "L_planted": r1.Lhat,
        "L_null": r0.Lhat,
        "miss": not detect(r1, params),
        "false_alarm": detect(r0, params),
        "ratio": ratio,
        "truth_overlap": float(X.inner(A1)),
    }


def _trial_task(task) -> dict:
    params, spec, seed, cell, trial = task
    return trial_outcome(params, spec, seed, cell, trial)


def summarize(params: Params, outcomes: list[dict], spec: SearchSpec, seed: int) -> SweepRecord:
    T = len(outcomes)
    miss = np.array([o["miss"] for o in outcomes], float)
    fa = np.array([o["false_alarm"] for o in outcomes], float)
    ratio = np.array([o["ratio"] for o in outcomes], float)
    risk = miss.mean() + fa.mean()
    se = math.sqrt(miss.var() / T + fa.var() / T)
    return SweepRecord(
        params.n, params.tau, params.p, params.q, params.r, params.lam, T, seed,
        float(risk), se, float(ratio.mean()), float(ratio.std() / math.sqrt(T)),
        spec.mode, spec.truth_init,
    )  # fmt: skip


def risk_curve(params_grid, trials: int, spec: SearchSpec, seed: int, threads: int = 1, min_trials: int = 50):
    """Empirical total detection error and mean recovery ratio per cell."""
    if trials < min_trials:
        raise ValueError(f"need at least {min_trials} trials per cell")
    params_grid = list(params_grid)
    tasks = [(p, spec, seed, c, t) for c, p in enumerate(params_grid) for t in range(trials)]
    flat = pmap(_trial_task, tasks, threads)
    out = []
    for c, p in enumerate(params_grid):
        out.append(summarize(p, flat[c * trials : (c + 1) * trials], spec, seed))
    return out


def score_samples(params: Params, trials: int, spec: SearchSpec, seed: int, threads: int = 1, cell: int = 0):
    """Planted and null scan statistics for an AUC diagnostic."""
    tasks = [(params, spec, seed, cell, t) for t in range(trials)]
    outs = pmap(_trial_task, tasks, threads)
    return np.array([o["L_planted"] for o in outs]), np.array([o["L_null"] for o in outs]), outs


def _recovery_task(task) -> float:
    params, spec, seed, cell, trial = task
    rng = substream(seed, cell, trial)
    A, X, z = sample_planted(params, rng)
    res = run_search(A, params, spec, rng, z_truth=z)
    return recovery_metrics(res.Xhat, X, params)[1]


def recovery_curve(params_grid, trials: int, spec: SearchSpec, seed: int, threads: int = 1) -> list[tuple[float, float]]:
    """(mean recovery ratio, standard error) per cell, planted draws only."""
    params_grid = list(params_grid)
    tasks = [(p, spec, seed, c, t) for c, p in enumerate(params_grid) for t in range(trials)]
    flat = np.array(pmap(_recovery_task, tasks, threads)).reshape(len(params_grid), trials)
    return [(float(row.mean()), float(row.std() / math.sqrt(trials))) for row in flat]
