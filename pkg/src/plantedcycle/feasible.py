"""Realizable cycle graphs: two independent membership oracles, exhaustive
enumeration at desk scale, the edge-count band, and a bitstring file cache.

A graph counts as realizable when some distinct positions realize it with
slack: every edge pair strictly closer than tau/2 and every non-edge pair
strictly farther. Graphs that need a pair at exactly tau/2 are excluded;
they have probability zero under the model.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from plantedcycle import _kernels as K
from plantedcycle.io import atomic_write_text
from plantedcycle.model import Adjacency, build_cycle, pair_index
from plantedcycle.parallel import pmap

DEFAULT_GRID_M = 120
DEFAULT_BUDGET = 10**8
MAX_ENUM_N = 8
TOL = 1e-12


class ResourceError(RuntimeError):
    """Raised when a desk-scale computation would exceed its budget."""


def _check_tau(tau: float) -> None:
    if not 0.0 < tau < 0.5:
        raise ValueError(f"tau must lie in (0, 1/2), got {tau}")


def realize_on_grid(X: Adjacency, tau: float, grid_m: int, budget: int = DEFAULT_BUDGET) -> np.ndarray | None:
    """Grid positions k/m realizing X with slack, or None."""
    _check_tau(tau)
    if grid_m < 4 * X.n:
        raise ValueError(f"grid_m must be at least 4n = {4 * X.n}")
    status, pos = K.grid_search(X.matrix(np.bool_), int(grid_m), float(tau) * grid_m, int(budget))
    if status < 0:
        raise ResourceError(f"grid search exceeded the node budget of {budget}")
    return pos / grid_m if status == 1 else None


def is_realizable(X: Adjacency, tau: float, grid_m: int = DEFAULT_GRID_M, budget: int = DEFAULT_BUDGET) -> bool:
    return realize_on_grid(X, tau, grid_m, budget) is not None


# ordering oracle


def orderings(n: int) -> np.ndarray:
    """Circular orders of 0..n-1 starting at 0, one per mirror pair."""
    if n <= 2:
        return np.arange(n, dtype=np.int64)[None, :]
    rows = [(0, *p) for p in itertools.permutations(range(1, n)) if p[0] < p[-1]]
    return np.array(rows, dtype=np.int64)


def patterns(n: int, tau: float) -> np.ndarray:
    """Feasible clockwise-reach vectors: t[a] = how many successors lie within tau/2."""
    _check_tau(tau)
    if n <= 1:
        return np.zeros((1, max(n, 0)), np.int64)
    return K.feasible_patterns(n, tau / 2, TOL)


def pattern_positions_adjacency(t: np.ndarray) -> np.ndarray:
    n = t.size
    M = np.zeros((n, n), bool)
    for a in range(n):
        for s in range(1, t[a] + 1):
            b = (a + s) % n
            M[a, b] = M[b, a] = True
    return M


def pattern_witness(t: np.ndarray, tau: float) -> np.ndarray:
    """Sorted positions realizing reach vector t with slack (0 at the first point)."""
    W = K.pattern_weights(np.asarray(t, np.int64), tau / 2)
    eps = 1e-3
    for _ in range(60):
        D = K.shortest_closure(W - eps)
        if np.all(np.diag(D) > 0):
            break
        eps /= 2
    else:
        raise AssertionError("pattern has no slack witness")
    # shortest distances from a virtual source joined to every node by weight 0
    P = np.minimum(D.min(axis=0), 0.0)
    return np.mod(P - P[0], 1.0)


def _codes(bits: np.ndarray) -> np.ndarray:
    w = np.left_shift(np.int64(1), np.arange(bits.shape[1], dtype=np.int64))
    return bits.astype(np.int64) @ w


def _decode(code: int, n: int) -> Adjacency:
    npairs = n * (n - 1) // 2
    bits = np.array([(int(code) >> e) & 1 for e in range(npairs)], dtype=bool)
    return Adjacency(n, bits)


def enumerate_by_ordering(n: int, tau: float, verify: bool = True) -> list[Adjacency]:
    """Labeled graphs from every (circular order, feasible reach vector) combination."""
    pats = patterns(n, tau)
    if n <= 1:
        return [Adjacency.empty(max(n, 0))]
    orders = orderings(n)
    inv = np.argsort(orders, axis=1)
    iu, ju = pair_index(n)
    codes = set()
    for t in pats:
        M = pattern_positions_adjacency(t)
        if verify:
            z = pattern_witness(t, tau)
            got = build_cycle(z, tau).matrix(np.bool_)
            if not np.array_equal(got, M):
                raise AssertionError(f"witness check failed for reach vector {t.tolist()}")
        bits = M[inv[:, iu], inv[:, ju]]
        codes.update(_codes(bits).tolist())
    return [_decode(c, n) for c in sorted(codes)]


def _grid_chunk(task) -> list[int]:
    n, tau, grid_m, budget, lo, hi = task
    keep = []
    for code in range(lo, hi):
        if is_realizable(_decode(code, n), tau, grid_m, budget):
            keep.append(code)
    return keep


def enumerate_by_grid(n: int, tau: float, grid_m: int = DEFAULT_GRID_M, threads: int = 1, budget: int = DEFAULT_BUDGET):
    """Every labeled graph on n vertices that the grid oracle accepts."""
    total = 1 << (n * (n - 1) // 2)
    step = max(1, total // 64)
    tasks = [(n, tau, grid_m, budget, lo, min(lo + step, total)) for lo in range(0, total, step)]
    codes = [c for chunk in pmap(_grid_chunk, tasks, threads) for c in chunk]
    return [_decode(c, n) for c in codes]


@dataclass(frozen=True)
class FeasibleSet:
    n: int
    tau: float
    members: tuple[Adjacency, ...]
    provenance: str
    grid_m: int | None = None

    def __post_init__(self):
        keys = [m.bitstring() for m in self.members]
        if keys != sorted(set(keys)):
            raise ValueError("members must be distinct and sorted by bitstring")

    @classmethod
    def from_members(cls, n, tau, members, provenance, grid_m=None) -> FeasibleSet:
        uniq = {m.bitstring(): m for m in members}
        return cls(n, float(tau), tuple(uniq[k] for k in sorted(uniq)), provenance, grid_m)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, X) -> bool:
        return X.bitstring() in self.bitstrings()

    def bitstrings(self) -> list[str]:
        return [m.bitstring() for m in self.members]

    def bits_matrix(self) -> np.ndarray:
        P = self.n * (self.n - 1) // 2
        if not self.members:
            return np.zeros((0, P), bool)
        return np.stack([m.bits for m in self.members])

    def to_text(self) -> str:
        head = f"# n={self.n} tau={self.tau!r} grid_m={self.grid_m} provenance={self.provenance}\n"
        return head + "".join(b + "\n" for b in self.bitstrings())

    @classmethod
    def from_text(cls, text: str) -> FeasibleSet:
        lines = [l for l in text.splitlines() if not l.startswith("# config:")]
        if not lines or not lines[0].startswith("# "):
            raise ValueError("missing feasible-set header")
        meta = dict(kv.split("=", 1) for kv in lines[0][2:].split())
        n = int(meta["n"])
        grid_m = None if meta["grid_m"] == "None" else int(meta["grid_m"])
        members = [Adjacency.from_bitstring(n, s) for s in lines[1:] if s.strip()]
        return cls.from_members(n, float(meta["tau"]), members, meta["provenance"], grid_m)

    def save(self, path) -> Path:
        return atomic_write_text(path, self.to_text())

    @classmethod
    def load(cls, path) -> FeasibleSet:
        return cls.from_text(Path(path).read_text())


def enumerate_feasible(
    n: int,
    tau: float,
    grid_m: int = DEFAULT_GRID_M,
    method: str = "ordering",
    threads: int = 1,
) -> FeasibleSet:
    """All realizable cycle graphs on n labeled vertices."""
    _check_tau(tau)
    if n > MAX_ENUM_N or (method == "grid" and n > 6):
        raise ResourceError(f"exhaustive enumeration is limited to desk scale, got n={n}")
    if method == "ordering":
        members = enumerate_by_ordering(n, tau)
        return FeasibleSet.from_members(n, tau, members, "ordering-enumeration", None)
    if method == "grid":
        members = enumerate_by_grid(n, tau, grid_m, threads)
        return FeasibleSet.from_members(n, tau, members, "grid-oracle", grid_m)
    raise ValueError(f"unknown method {method!r}")


def cache_path(cache_dir, n: int, tau: float, grid_m: int | None, method: str) -> Path:
    return Path(cache_dir) / f"feasible_n{n}_tau{tau!r}_m{grid_m}_{method}.txt"


def cached_feasible(n: int, tau: float, grid_m: int = DEFAULT_GRID_M, method: str = "ordering", cache_dir=None) -> FeasibleSet:
    cache_dir = cache_dir or os.environ.get("PLANTEDCYCLE_CACHE", os.path.join(os.path.expanduser("~"), ".cache", "plantedcycle"))
    path = cache_path(cache_dir, n, tau, grid_m if method == "grid" else None, method)
    if path.exists():
        return FeasibleSet.load(path)
    fs = enumerate_feasible(n, tau, grid_m, method)
    fs.save(path)
    return fs


def size_band(n: int, tau: float) -> tuple[float, float]:
    """Edge counts allowed in the banded set (natural log)."""
    center = math.comb(n, 2) * tau
    width = n * math.sqrt(tau) * math.log(n) if n > 1 else 0.0
    return center - width, center + width


def in_size_band(X: Adjacency, tau: float) -> bool:
    lo, hi = size_band(X.n, tau)
    return lo <= X.n_edges <= hi


def size_band_filter(S: FeasibleSet) -> FeasibleSet:
    kept = [m for m in S.members if in_size_band(m, S.tau)]
    return FeasibleSet(S.n, S.tau, tuple(kept), S.provenance + "+band", S.grid_m)


def counting_bound(n: int) -> int:
    return n ** (3 * n)
