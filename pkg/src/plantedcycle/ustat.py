"""Centered edge count T, overlap statistic S, its block decomposition into
sums over disjoint vertex groups, the two conditioning events, the decoupled
overlap, and a Monte Carlo comparison of tails against the three-branch
exponential envelope."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from plantedcycle import _kernels as K
from plantedcycle.model import Adjacency, Params, check_positions, circ_dist_array
from plantedcycle.parallel import chunk_sizes, pmap
from plantedcycle.seeding import substream

TAIL_COLUMNS = ("t", "empirical_tail", "envelope", "n", "tau", "lambda", "trials", "seed")


def centered_edge_sum(X: Adjacency, tau: float) -> float:
    """T = sum over pairs of (X_ij - tau)."""
    return X.n_edges - math.comb(X.n, 2) * tau


def overlap_stat(X: Adjacency, Xprime: Adjacency, tau: float) -> float:
    """S = sum over pairs of X'_ij (X_ij - tau)."""
    if X.n != Xprime.n:
        raise ValueError("X and X' must have the same size")
    return X.inner(Xprime) - tau * Xprime.n_edges


def block_count(tau: float) -> int:
    """Largest even integer not exceeding 1/tau."""
    if not 0.0 < tau < 0.5:
        raise ValueError(f"tau must lie in (0, 1/2), got {tau}")
    k = int(math.floor(1.0 / tau + 1e-12))
    return k - (k % 2)


def block_of(z: np.ndarray, tau: float, k: int) -> np.ndarray:
    """0-based block label; blocks are [l*tau, (l+1)*tau) and the last absorbs the rest."""
    return np.minimum(np.floor(np.asarray(z) / tau).astype(np.int64), k - 1)


# J-set kinds
WITHIN, ODD_ADJ, EVEN_ADJ = 1, 2, 3


@dataclass(frozen=True)
class BlockDecomposition:
    """Block structure induced by z'. Pair sets are restricted to the support of X'.

    ``groups`` maps each support pair (``ii[t]``, ``jj[t]``) to an index into
    ``keys``, where a key is (kind, l) with l 1-based; kind 1 is within block l,
    kind 2 is between blocks l and l+1 for odd l, kind 3 the same for even l.
    """

    n: int
    tau: float
    k: int
    block_bounds: np.ndarray
    labels: np.ndarray
    I: tuple[np.ndarray, ...]
    ii: np.ndarray
    jj: np.ndarray
    groups: np.ndarray
    keys: tuple[tuple[int, int], ...]
    _index: dict = field(repr=False, compare=False, default_factory=dict)

    def pairs(self, kind: int, ell: int) -> tuple[np.ndarray, np.ndarray]:
        g = self._index.get((kind, ell))
        if g is None:
            e = np.empty(0, np.int64)
            return e, e
        sel = self.groups == g
        return self.ii[sel], self.jj[sel]

    def J(self, kind: int) -> dict[int, set[tuple[int, int]]]:
        """Nonempty J-sets of one kind as explicit pair sets, keyed by 1-based l."""
        out: dict[int, set[tuple[int, int]]] = {}
        for g, (kd, ell) in enumerate(self.keys):
            if kd == kind:
                sel = self.groups == g
                out[ell] = set(zip(self.ii[sel].tolist(), self.jj[sel].tolist()))
        return out

    def vertices(self, kind: int, ell: int) -> np.ndarray:
        """Vertices whose latent positions determine U of this kind and block."""
        if kind == WITHIN:
            return self.I[ell - 1]
        return np.concatenate([self.I[ell - 1], self.I[ell % self.k]])


def decompose_blocks(zprime, tau: float) -> BlockDecomposition:
    zp = check_positions(zprime)
    n = zp.size
    k = block_count(tau)
    lo = np.arange(k) * tau
    hi = np.append(lo[1:], 1.0)
    bounds = np.stack([lo, hi], axis=1)
    labels = block_of(zp, tau, k)
    I = tuple(np.flatnonzero(labels == ell) for ell in range(k))
    ii, jj = K.support_pairs(zp, tau / 2)
    a, b = labels[ii], labels[jj]
    same = a == b
    fwd = (a + 1) % k == b
    bwd = (b + 1) % k == a
    if not np.all(same | fwd | bwd):
        raise AssertionError("support pair between non-adjacent blocks")
    # 0-based l of the adjacent pair {l, l+1}; with k == 2 both directions hold and l = 0
    ell0 = np.where(same, a, np.where(fwd, a, b))
    if k == 2:
        ell0 = np.where(same, a, 0)
    kind = np.where(same, WITHIN, np.where(ell0 % 2 == 0, ODD_ADJ, EVEN_ADJ))
    code = kind * (k + 1) + ell0
    uniq, groups = np.unique(code, return_inverse=True)
    keys = tuple((int(c // (k + 1)), int(c % (k + 1)) + 1) for c in uniq)
    index = {key: g for g, key in enumerate(keys)}
    return BlockDecomposition(n, float(tau), k, bounds, labels, I, ii, jj, groups.astype(np.int64), keys, index)


def _centered_on_pairs(z: np.ndarray, ii, jj, tau: float) -> np.ndarray:
    return (circ_dist_array(z[ii], z[jj]) <= tau / 2).astype(float) - tau


@dataclass(frozen=True)
class Decomposition:
    blocks: BlockDecomposition
    S1: float
    S2: float
    S3: float
    U: dict[tuple[int, int], float]  # (kind, l) -> U, only nonempty sets

    @property
    def total(self) -> float:
        return self.S1 + self.S2 + self.S3


def decompose(z, zprime, tau: float, blocks: BlockDecomposition | None = None) -> Decomposition:
    """Split S into block sums U_l^(i) and S_i = sum_l U_l^(i)."""
    z = check_positions(z)
    bd = blocks if blocks is not None else decompose_blocks(zprime, tau)
    if z.size != bd.n:
        raise ValueError("z and z' must have equal lengths")
    h = _centered_on_pairs(z, bd.ii, bd.jj, tau)
    u = np.bincount(bd.groups, weights=h, minlength=len(bd.keys))
    U = {key: float(u[g]) for g, key in enumerate(bd.keys)}
    S = [0.0, 0.0, 0.0]
    for (kind, _), v in U.items():
        S[kind - 1] += v
    return Decomposition(bd, S[0], S[1], S[2], U)


def default_t(params: Params) -> float:
    """Default threshold for the centered-count event; constant 20, natural log."""
    n, tau, lam = params.n, params.tau, params.lam
    scale = max(n * lam * tau**1.5, math.sqrt(n) * lam * tau**1.5, lam * tau)
    return 20.0 * scale * math.log(n)


def event_E0(z, params: Params, t: float | None = None) -> bool:
    """lambda * tau * |T| <= t for the cycle graph of z."""
    if t is None:
        t = default_t(params)
    if t < 0:
        raise ValueError("t must be non-negative")
    z = np.asarray(z, dtype=float)
    T = K.edge_count(z, params.tau / 2) - math.comb(z.size, 2) * params.tau
    return bool(params.lam * params.tau * abs(T) <= t)


def event_E0_batch(Z: np.ndarray, params: Params, t: float) -> np.ndarray:
    T = K.edge_count_batch(Z, params.tau / 2) - math.comb(Z.shape[1], 2) * params.tau
    return params.lam * params.tau * np.abs(T) <= t


def block_sizes(zprime, tau: float) -> np.ndarray:
    zp = np.asarray(zprime, dtype=float)
    k = block_count(tau)
    return np.bincount(block_of(zp, tau, k), minlength=k)


def event_E1(zprime, tau: float) -> bool:
    """Every block holds at most 4 n tau points."""
    zp = np.asarray(zprime, dtype=float)
    return bool(block_sizes(zp, tau).max() <= 4 * zp.size * tau)


def event_E1_batch(Zp: np.ndarray, tau: float) -> np.ndarray:
    k = block_count(tau)
    lab = block_of(Zp, tau, k)
    counts = np.stack([(lab == ell).sum(axis=1) for ell in range(k)], axis=1)
    return counts.max(axis=1) <= 4 * Zp.shape[1] * tau


def decoupled_overlap(z, zdouble, Xprime: Adjacency, tau: float) -> float:
    """Sum over pairs i < j of X'_ij (1{d(z_i, z''_j) <= tau/2} - tau).

    The indicator takes the first coordinate from z and the second from z'',
    so swapping the roles of i and j changes the term.
    """
    z = np.asarray(z, dtype=float)
    zdd = np.asarray(zdouble, dtype=float)
    if z.size != Xprime.n or zdd.size != Xprime.n:
        raise ValueError("position vectors must match the size of X'")
    iu, ju = Xprime.support()
    return float(np.sum((circ_dist_array(z[iu], zdd[ju]) <= tau / 2) - tau))


# tails


def envelope(t, params: Params) -> np.ndarray:
    """exp(-min{t/C, (t/B)^(2/3), (t/A)^(1/2)}) with A = 1, B = sqrt(n tau), C = n sqrt(tau)."""
    t = np.asarray(t, dtype=float)
    A, B, C = 1.0, math.sqrt(params.n * params.tau), params.n * math.sqrt(params.tau)
    return np.exp(-np.minimum(np.minimum(t / C, (t / B) ** (2 / 3)), np.sqrt(t / A)))


@dataclass(frozen=True)
class TailTable:
    stat: str
    t: np.ndarray
    empirical: np.ndarray
    envelope: np.ndarray  # already multiplied by K
    K: float
    params: Params
    trials: int
    seed: int

    def rows(self) -> list[dict]:
        return [
            {
                "t": float(t),
                "empirical_tail": float(e),
                "envelope": float(v),
                "n": self.params.n,
                "tau": self.params.tau,
                "lambda": self.params.lam,
                "trials": self.trials,
                "seed": self.seed,
            }
            for t, e, v in zip(self.t, self.empirical, self.envelope)
        ]

    @property
    def dominates(self) -> bool:
        # K is fitted at equality, so allow rounding at the binding point
        return bool(np.all(self.envelope >= self.empirical * (1 - 1e-12)))


_CHUNK = 2000


def _tail_chunk(task) -> np.ndarray:
    stat, n, tau, seed, c, size, zp = task
    rng = substream(seed, 0x7A11, c)
    Z = rng.random((size, n))
    if stat == "T":
        return np.abs(K.edge_count_batch(Z, tau / 2) - math.comb(n, 2) * tau)
    ii, jj = K.support_pairs(zp, tau / 2)
    Zdd = rng.random((size, n))
    out = np.empty(size)
    for b in range(size):
        out[b] = abs(K.decoupled_on_support(Z[b], Zdd[b], ii, jj, tau / 2, tau))
    return out


def sample_tail_stat(params: Params, trials: int, seed: int, stat: str = "T", threads: int = 1) -> np.ndarray:
    """|T| over fresh z, or |S~| (decoupled) over fresh (z, z'') for one fixed typical z'."""
    if stat not in ("T", "S"):
        raise ValueError("stat must be 'T' or 'S'")
    zp = substream(seed, 0x7A11, 1 << 30).random(params.n) if stat == "S" else None
    tasks = [(stat, params.n, params.tau, seed, c, s, zp) for c, s in enumerate(chunk_sizes(trials, _CHUNK))]
    return np.concatenate(pmap(_tail_chunk, tasks, threads))


def tail_envelope_compare(
    params: Params,
    trials: int,
    seed: int,
    stat: str = "T",
    t_grid=None,
    threads: int = 1,
) -> TailTable:
    """Empirical survival P(|stat| >= t) on a log grid next to K * envelope(t).

    K is the smallest multiplier for which the scaled envelope dominates the
    empirical tail at every grid point.
    """
    if trials < 1000:
        raise ValueError("trials must be at least 1000")
    vals = np.sort(sample_tail_stat(params, trials, seed, stat, threads))
    if t_grid is None:
        top = max(float(vals[-1]), 1.0)
        t_grid = np.concatenate([[0.0], np.geomspace(0.5, top, 40)])
    t_grid = np.asarray(t_grid, dtype=float)
    emp = 1.0 - np.searchsorted(vals, t_grid, side="left") / vals.size
    env = envelope(t_grid, params)
    K_fit = float(np.max(emp / env))
    return TailTable(stat, t_grid, emp, K_fit * env, K_fit, params, trials, int(seed))


# block second moments


def block_second_moments(zprime, params: Params, trials: int, seed: int) -> dict[tuple[int, int], tuple[float, float]]:
    """Empirical E[(U_l^(i))^2] over z for fixed z', with standard errors, per nonempty J-set."""
    bd = decompose_blocks(zprime, params.tau)
    rng = substream(seed, 0x5EC0)
    sums = np.zeros(len(bd.keys))
    sq = np.zeros(len(bd.keys))
    for size in chunk_sizes(trials, 1000):
        Z = rng.random((size, bd.n))
        h = (circ_dist_array(Z[:, bd.ii], Z[:, bd.jj]) <= params.tau / 2) - params.tau
        U = np.zeros((size, len(bd.keys)))
        for g in range(len(bd.keys)):
            U[:, g] = h[:, bd.groups == g].sum(axis=1)
        sums += (U**2).sum(axis=0)
        sq += (U**4).sum(axis=0)
    mean = sums / trials
    var = np.maximum(sq / trials - mean**2, 0.0)
    se = np.sqrt(var / trials)
    return {key: (float(mean[g]), float(se[g])) for g, key in enumerate(bd.keys)}
