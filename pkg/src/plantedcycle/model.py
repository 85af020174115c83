"""Parameters, adjacency storage and samplers for the planted, null and
interpolated models, plus the per-edge degradation channel."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from plantedcycle.seeding import as_generator

REL_TOL = 1e-12


class ParamsError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    """Model parameters (n, tau, p, q, r) with the derived signal-to-noise ratio ``lam``.

    Use :meth:`create` for validated construction and :meth:`unchecked` for
    degenerate fixtures such as p == q or q == 0.
    """

    n: int
    tau: float
    p: float
    q: float
    r: float
    lam: float

    @classmethod
    def create(cls, n: int, tau: float, p: float, q: float, r: float | None = None) -> Params:
        n = int(n)
        if n < 1:
            raise ParamsError(f"n must be positive, got {n}")
        if not 0.0 < tau < 0.5:
            raise ParamsError(f"tau must lie in (0, 1/2), got {tau}")
        r_derived = tau * p + (1.0 - tau) * q
        if r is None:
            r = r_derived
        elif not math.isclose(r, r_derived, rel_tol=REL_TOL, abs_tol=0.0):
            raise ParamsError(f"r={r} inconsistent with tau*p+(1-tau)*q={r_derived}")
        if not 0.0 < q < r < p <= 1.0:
            raise ParamsError(f"need 0 < q < r < p <= 1, got q={q}, r={r}, p={p}")
        return cls(n, float(tau), float(p), float(q), float(r), _snr(p, q, r))

    @classmethod
    def unchecked(cls, n: int, tau: float, p: float, q: float, r: float | None = None) -> Params:
        if r is None:
            r = tau * p + (1.0 - tau) * q
        return cls(int(n), float(tau), float(p), float(q), float(r), _snr(p, q, r))

    @property
    def n_pairs(self) -> int:
        return self.n * (self.n - 1) // 2

    def with_n(self, n: int) -> Params:
        return Params(int(n), self.tau, self.p, self.q, self.r, self.lam)

    def as_dict(self) -> dict:
        return {"n": self.n, "tau": self.tau, "p": self.p, "q": self.q, "r": self.r, "lambda": self.lam}


def _snr(p: float, q: float, r: float) -> float:
    denom = r * (1.0 - r)
    if denom == 0.0:
        return 0.0 if p == q else math.inf
    return (p - q) ** 2 / denom


@lru_cache(maxsize=64)
def pair_index(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row-major upper-triangular pair order (i < j) shared by every bit vector."""
    iu, ju = np.triu_indices(n, 1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


class Adjacency:
    """Symmetric 0/1 matrix with zero diagonal, stored as the upper-triangular bit vector."""

    __slots__ = ("n", "_bits")
    FORMAT_VERSION = 1
    _MAGIC = b"PDCA"

    def __init__(self, n: int, bits):
        bits = np.asarray(bits, dtype=bool).ravel()
        if bits.size != n * (n - 1) // 2:
            raise ValueError(f"expected {n * (n - 1) // 2} pair bits for n={n}, got {bits.size}")
        bits = bits.copy()
        bits.setflags(write=False)
        self.n = int(n)
        self._bits = bits

    @classmethod
    def from_matrix(cls, m) -> Adjacency:
        m = np.asarray(m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("adjacency matrix must be square")
        if not np.array_equal(m, m.T):
            raise ValueError("adjacency matrix must be symmetric")
        if np.any(np.diag(m) != 0):
            raise ValueError("adjacency matrix must have zero diagonal")
        if not np.all((m == 0) | (m == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        n = m.shape[0]
        iu, ju = pair_index(n)
        return cls(n, m[iu, ju] == 1)

    @classmethod
    def from_edges(cls, n: int, edges) -> Adjacency:
        m = np.zeros((n, n), dtype=np.uint8)
        for i, j in edges:
            if i == j:
                raise ValueError("self-loops are not allowed")
            m[i, j] = m[j, i] = 1
        return cls.from_matrix(m)

    @classmethod
    def empty(cls, n: int) -> Adjacency:
        return cls(n, np.zeros(n * (n - 1) // 2, dtype=bool))

    @classmethod
    def complete(cls, n: int) -> Adjacency:
        return cls(n, np.ones(n * (n - 1) // 2, dtype=bool))

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    def matrix(self, dtype=np.uint8) -> np.ndarray:
        m = np.zeros((self.n, self.n), dtype=dtype)
        iu, ju = pair_index(self.n)
        m[iu, ju] = self._bits
        m[ju, iu] = self._bits
        return m

    def support(self) -> tuple[np.ndarray, np.ndarray]:
        """Row and column indices (i < j) of the edges."""
        iu, ju = pair_index(self.n)
        return iu[self._bits], ju[self._bits]

    def edges(self) -> list[tuple[int, int]]:
        iu, ju = self.support()
        return list(zip(iu.tolist(), ju.tolist()))

    @property
    def n_edges(self) -> int:
        return int(self._bits.sum())

    def inner(self, other: Adjacency) -> int:
        return int(np.count_nonzero(self._bits & other._bits))

    def hamming(self, other: Adjacency) -> int:
        return int(np.count_nonzero(self._bits ^ other._bits))

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self._bits)

    @classmethod
    def from_bitstring(cls, n: int, s: str) -> Adjacency:
        return cls(n, np.frombuffer(s.encode("ascii"), dtype=np.uint8) == ord("1"))

    def permute(self, perm) -> Adjacency:
        """Relabel vertices: vertex ``v`` becomes ``perm[v]``."""
        perm = np.asarray(perm)
        m = self.matrix()
        out = np.zeros_like(m)
        out[np.ix_(perm, perm)] = m
        return Adjacency.from_matrix(out)

    # serialization

    def to_bytes(self) -> bytes:
        header = self._MAGIC + struct.pack("<HI", self.FORMAT_VERSION, self.n)
        return header + np.packbits(self._bits.astype(np.uint8)).tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> Adjacency:
        if data[:4] != cls._MAGIC:
            raise ValueError("not an adjacency bitstring (bad magic)")
        version, n = struct.unpack("<HI", data[4:10])
        if version != cls.FORMAT_VERSION:
            raise ValueError(f"unsupported adjacency format version {version}")
        npairs = n * (n - 1) // 2
        bits = np.unpackbits(np.frombuffer(data[10:], dtype=np.uint8))[:npairs]
        if bits.size != npairs:
            raise ValueError("truncated adjacency payload")
        return cls(n, bits.astype(bool))

    def to_edgelist(self) -> str:
        lines = [f"# n={self.n}"]
        lines += [f"{i + 1} {j + 1}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str, n: int | None = None) -> Adjacency:
        edges = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                for tok in body.split():
                    if tok.startswith("n=") and n is None:
                        n = int(tok[2:])
                continue
            i, j = (int(t) for t in line.split()[:2])
            edges.append((i - 1, j - 1))
        if n is None:
            raise ValueError("edge list has no '# n=' header and no n was given")
        return cls.from_edges(n, edges)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Adjacency):
            return NotImplemented
        return self.n == other.n and np.array_equal(self._bits, other._bits)

    def __hash__(self) -> int:
        return hash((self.n, self._bits.tobytes()))

    def __repr__(self) -> str:
        return f"Adjacency(n={self.n}, edges={self.n_edges})"


def circ_dist(a: float, b: float) -> float:
    """Distance on the circle of circumference 1."""
    if not (0.0 <= a < 1.0 and 0.0 <= b < 1.0):
        raise ValueError(f"circ_dist expects points in [0, 1), got {a}, {b}")
    d = abs(a - b)
    return min(d, 1.0 - d)


def circ_dist_array(a, b) -> np.ndarray:
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    return np.minimum(d, 1.0 - d)


def check_positions(z, n: int | None = None) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise ValueError("latent positions must be a vector")
    if n is not None and z.size != n:
        raise ValueError(f"expected {n} latent positions, got {z.size}")
    if np.any(z < 0.0) or np.any(z >= 1.0):
        raise ValueError("latent positions must lie in [0, 1)")
    return z


def cycle_bits(z: np.ndarray, tau: float) -> np.ndarray:
    """Pair bits of the cycle graph; no validation (hot path)."""
    iu, ju = pair_index(z.size)
    return circ_dist_array(z[iu], z[ju]) <= tau / 2


def build_cycle(z, tau: float) -> Adjacency:
    z = check_positions(z)
    if not 0.0 < tau < 0.5:
        raise ValueError(f"tau must lie in (0, 1/2), got {tau}")
    return Adjacency(z.size, cycle_bits(z, tau))


def sample_positions(n: int, rng) -> np.ndarray:
    return as_generator(rng).random(n)


def sample_planted(params: Params, rng) -> tuple[Adjacency, Adjacency, np.ndarray]:
    """Draw (A, X, z): z uniform, X its cycle graph, A | X independent Bernoulli(p or q)."""
    rng = as_generator(rng)
    z = rng.random(params.n)
    x = cycle_bits(z, params.tau)
    prob = np.where(x, params.p, params.q)
    a = rng.random(x.size) < prob
    return Adjacency(params.n, a), Adjacency(params.n, x), z


def sample_null(params: Params, rng) -> Adjacency:
    rng = as_generator(rng)
    return Adjacency(params.n, rng.random(params.n_pairs) < params.r)


def interpolate_q(r: float, tau: float, theta: float) -> float:
    return (r - tau * theta) / (1.0 - tau)


def interpolate_params(params: Params, theta: float) -> Params:
    """Member of the interpolation family with on-cycle density ``theta``.

    The off-cycle density is adjusted so every edge keeps marginal density r.
    """
    r, tau = params.r, params.tau
    if not r <= theta <= 1.0:
        raise ParamsError(f"theta must lie in [r, 1] = [{r}, 1], got {theta}")
    if not r > tau * theta:
        raise ParamsError(f"need r > tau*theta, got r={r}, tau*theta={tau * theta}")
    q = interpolate_q(r, tau, theta)
    return Params(params.n, tau, float(theta), q, r, _snr(theta, q, r))


def degrade_probs(theta_prime: float, theta: float, r: float, allow_equal: bool = False) -> tuple[float, float]:
    """Resampling probabilities (x, y) taking density theta_prime to theta while fixing r."""
    if theta_prime < theta or (theta_prime == theta and not allow_equal):
        raise ParamsError(f"need theta' > theta, got theta'={theta_prime}, theta={theta}")
    if not r <= theta or theta_prime > 1.0 or theta_prime <= r:
        raise ParamsError(f"need r <= theta < theta' <= 1, got r={r}, theta={theta}, theta'={theta_prime}")
    x = (theta - r + r * (theta_prime - theta)) / (theta_prime - r)
    y = r * (theta_prime - theta) / (theta_prime - r)
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ParamsError(f"degradation probabilities out of range: x={x}, y={y}")
    return x, y


def degrade(Aprime: Adjacency, theta_prime: float, theta: float, r: float, rng, allow_equal: bool = False) -> Adjacency:
    """Map a sample of the theta_prime model to one of the theta model, edge by edge."""
    x, y = degrade_probs(theta_prime, theta, r, allow_equal=allow_equal)
    rng = as_generator(rng)
    u = rng.random(Aprime.bits.size)
    return Adjacency(Aprime.n, u < np.where(Aprime.bits, x, y))
