"""Exact computations at tiny n by summing over a latent grid and over all
graphs: marginals, posterior means, MMSE along the interpolation path,
divergences between the planted and null laws, and mutual information.

The prior on X is the law of the cycle graph of z drawn uniformly from the
grid {0, 1/m, ..., (m-1)/m}^n. Rotating the grid preserves that law, so z_0
is pinned to 0 and the remaining m^(n-1) vectors are enumerated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from plantedcycle import _kernels as K
from plantedcycle.feasible import ResourceError
from plantedcycle.likelihood import log_product_from_counts
from plantedcycle.model import Adjacency, Params, cycle_bits, interpolate_params, pair_index
from plantedcycle.parallel import chunk_sizes
from plantedcycle.seeding import substream
from plantedcycle.ustat import default_t, event_E0_batch, event_E1_batch

MAX_N = 5
MAX_M = 64


@dataclass(frozen=True)
class LatentGrid:
    n: int
    m: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("grid resolution must be at least 2")
        if self.n > MAX_N or self.m > MAX_M:
            raise ResourceError(f"grid enumeration limited to n <= {MAX_N}, m <= {MAX_M}")

    @property
    def size(self) -> int:
        return self.m**self.n

    def vectors(self) -> np.ndarray:
        """All m^n grid vectors in lexicographic order of their integer coordinates."""
        idx = np.indices((self.m,) * self.n).reshape(self.n, -1).T
        return idx / self.m

    def sample(self, rng, size: int | None = None) -> np.ndarray:
        k = rng.integers(0, self.m, size=(self.n,) if size is None else (size, self.n))
        return k / self.m


@lru_cache(maxsize=64)
def _prior(n: int, m: int, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """(X codes, prior weights) aggregated over the grid."""
    npairs = n * (n - 1) // 2
    if n <= 1:
        return np.zeros(1, np.int64), np.ones(1)
    iu, ju = pair_index(n)
    w = np.left_shift(np.int64(1), np.arange(npairs, dtype=np.int64))
    counts = np.zeros(1 << npairs, np.int64)
    free = n - 1
    # chunk over the first free coordinate to bound memory
    rest = np.indices((m,) * (free - 1)).reshape(free - 1, -1).T / m if free > 1 else np.zeros((1, 0))
    for k in range(m):
        Z = np.zeros((rest.shape[0], n))
        Z[:, 1] = k / m
        Z[:, 2:] = rest
        d = np.abs(Z[:, iu] - Z[:, ju])
        bits = np.minimum(d, 1.0 - d) <= tau / 2
        counts += np.bincount(bits.astype(np.int64) @ w, minlength=1 << npairs)
    codes = np.flatnonzero(counts)
    return codes, counts[codes] / m**free


def grid_edge_prob(tau: float, m: int) -> float:
    """P(X_e = 1) under the grid prior."""
    d = np.arange(m) / m
    return float(np.mean(np.minimum(d, 1.0 - d) <= tau / 2))


def _bits(codes: np.ndarray, npairs: int) -> np.ndarray:
    return ((codes[:, None] >> np.arange(npairs)) & 1).astype(np.int64)


def _clog(c, v: float):
    """c * log v with 0 * log 0 = 0."""
    c = np.asarray(c, dtype=float)
    if v > 0:
        return c * math.log(v)
    return np.where(c > 0, -np.inf, 0.0)


def _logsumexp(a: np.ndarray, axis=None):
    mx = np.max(a, axis=axis, keepdims=True)
    mx = np.where(np.isfinite(mx), mx, 0.0)
    s = np.log(np.sum(np.exp(a - mx), axis=axis, keepdims=True)) + mx
    return np.squeeze(s, axis=axis) if axis is not None else s.item()


class Enumeration:
    """Joint law of (A, X) on all graphs for one parameter set and grid."""

    def __init__(self, params: Params, grid: LatentGrid):
        if grid.n != params.n:
            raise ValueError("grid and params disagree on n")
        self.params, self.grid = params, grid
        n = params.n
        self.npairs = n * (n - 1) // 2
        self.codes, self.prior = _prior(n, grid.m, params.tau)
        self.Xb = _bits(self.codes, self.npairs)
        self.Ab = _bits(np.arange(1 << self.npairs, dtype=np.int64), self.npairs)
        p, q = params.p, params.q
        n11 = self.Ab @ self.Xb.T
        na = self.Ab.sum(axis=1)[:, None]
        nx = self.Xb.sum(axis=1)[None, :]
        n10 = na - n11
        n01 = nx - n11
        n00 = self.npairs - n11 - n10 - n01
        self.loglik = _clog(n11, p) + _clog(n10, q) + _clog(n01, 1 - p) + _clog(n00, 1 - q)
        with np.errstate(divide="ignore"):
            self.logjoint = self.loglik + np.log(self.prior)[None, :]
        self.logPA = _logsumexp(self.logjoint, axis=1)
        r = params.r
        self.logQA = _clog(na[:, 0], r) + _clog(self.npairs - na[:, 0], 1 - r)

    @property
    def PA(self) -> np.ndarray:
        return np.exp(self.logPA)

    @property
    def QA(self) -> np.ndarray:
        return np.exp(self.logQA)

    def posterior(self) -> np.ndarray:
        """P(X | A), rows indexed by A code (zero rows where P(A) = 0)."""
        with np.errstate(invalid="ignore"):
            post = np.exp(self.logjoint - self.logPA[:, None])
        return np.where(np.isfinite(self.logPA)[:, None], post, 0.0)

    def posterior_means(self) -> np.ndarray:
        return self.posterior() @ self.Xb

    def index(self, A: Adjacency) -> int:
        return int(A.bits.astype(np.int64) @ (1 << np.arange(self.npairs, dtype=np.int64)))


@lru_cache(maxsize=256)
def _enum_cached(params: Params, grid: LatentGrid) -> Enumeration:
    return Enumeration(params, grid)


def enumeration(params: Params, grid: LatentGrid) -> Enumeration:
    return _enum_cached(params, grid)


def marginal_likelihood(A: Adjacency, params: Params, grid: LatentGrid) -> float:
    """Average of P(A | z) over the grid."""
    E = enumeration(params, grid)
    return float(E.PA[E.index(A)])


def null_likelihood(A: Adjacency, params: Params) -> float:
    r, k = params.r, A.n_edges
    return float(r**k * (1 - r) ** (A.bits.size - k))


def posterior_mean(A: Adjacency, params: Params, grid: LatentGrid) -> np.ndarray:
    """Symmetric matrix of P(X_e = 1 | A), zero diagonal."""
    E = enumeration(params, grid)
    i = E.index(A)
    if not np.isfinite(E.logPA[i]):
        raise ValueError("A has probability zero under the planted model")
    v = E.posterior_means()[i]
    M = np.zeros((A.n, A.n))
    iu, ju = pair_index(A.n)
    M[iu, ju] = v
    M[ju, iu] = v
    return M


def mmse_from(E: Enumeration) -> float:
    Xt = E.posterior_means()
    return float(np.sum(E.PA * np.sum(Xt * (1 - Xt), axis=1)))


def mmse_exact(params: Params, theta: float, grid: LatentGrid) -> float:
    """Bayes risk of the posterior mean under the interpolation model at theta."""
    return mmse_from(enumeration(interpolate_params(params, theta), grid))


def mmse_curve(params: Params, thetas, grid: LatentGrid) -> np.ndarray:
    return np.array([mmse_exact(params, float(t), grid) for t in thetas])


@dataclass(frozen=True)
class Divergences:
    tv_sum: float
    tv_half: float
    chi2: float
    kl: float


def divergences_exact(params: Params, grid: LatentGrid) -> Divergences:
    E = enumeration(params, grid)
    P, Q = E.PA, E.QA
    tv_sum = float(np.sum(np.abs(P - Q)))
    chi2 = float(np.sum(np.exp(2 * E.logPA - E.logQA)) - 1.0)
    pos = P > 0
    kl = float(np.sum(P[pos] * (E.logPA[pos] - E.logQA[pos])))
    return Divergences(tv_sum, tv_sum / 2, chi2, kl)


def bernoulli_kl(a: float, b: float) -> float:
    out = 0.0
    if a > 0:
        out += a * math.log(a / b)
    if a < 1:
        out += (1 - a) * math.log((1 - a) / (1 - b))
    return out


def mutual_information_exact(params: Params, grid: LatentGrid) -> tuple[float, float]:
    """I(A; X) computed directly and as E_X KL(P_{A|X} || Q) - KL(P_A || Q)."""
    E = enumeration(params, grid)
    joint = np.exp(E.logjoint)
    pos = joint > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = E.logjoint - E.logPA[:, None] - np.log(E.prior)[None, :]
    direct = float(np.sum(joint[pos] * ratio[pos]))
    p, q, r = params.p, params.q, params.r
    nx = E.Xb.sum(axis=1)
    kl_cond = nx * bernoulli_kl(p, r) + (E.npairs - nx) * bernoulli_kl(q, r)
    via = float(np.sum(E.prior * kl_cond) - divergences_exact(params, grid).kl)
    return direct, via


def entropy_X(params: Params, grid: LatentGrid) -> float:
    _, w = _prior(params.n, grid.m, params.tau)
    return float(-np.sum(w * np.log(w)))


def conditional_entropy(params: Params, grid: LatentGrid) -> float:
    """H(X | A) under the planted law with these parameters."""
    E = enumeration(params, grid)
    joint = np.exp(E.logjoint)
    pos = joint > 0
    logpost = E.logjoint - E.logPA[:, None]
    return float(-np.sum(joint[pos] * logpost[pos]))


# derivative identity along the interpolation path


def _binary_entropy_grad(x: float) -> float:
    return math.log((1 - x) / x)


def edge_channel_entropy_grad(params: Params, theta: float, grid: LatentGrid) -> float:
    """d/dtheta of sum_e H_theta(A_e | X_e)."""
    t = params.tau
    pe = grid_edge_prob(t, grid.m)
    q = (params.r - t * theta) / (1 - t)
    g = pe * _binary_entropy_grad(theta) + (1 - pe) * _binary_entropy_grad(q) * (-t / (1 - t))
    return math.comb(params.n, 2) * g


def r1_terms(params: Params, theta: float, grid: LatentGrid) -> np.ndarray:
    """Per-pair correction terms of the entropy derivative under the theta model.

    For pair e, sums over (x, y) of d p_theta(y|x)/dtheta times
    E[P(X_e = x | A_-e) log sum_x' p_theta(y|x') P(X_e = x' | A_-e)].
    """
    pt = interpolate_params(params, theta)
    E = enumeration(pt, grid)
    joint = np.exp(E.logjoint)
    t = params.tau
    dq = -t / (1 - t)
    # p_theta(y | x) and its derivative, indexed [x][y]
    cond = {1: {1: pt.p, 0: 1 - pt.p}, 0: {1: pt.q, 0: 1 - pt.q}}
    dcond = {1: {1: 1.0, 0: -1.0}, 0: {1: dq, 0: -dq}}
    out = np.zeros(E.npairs)
    for e in range(E.npairs):
        # J[A, x] = P(A, X_e = x)
        J = np.stack([joint[:, E.Xb[:, e] == 0].sum(axis=1), joint[:, E.Xb[:, e] == 1].sum(axis=1)], axis=1)
        base = E.Ab[:, e] == 0
        flip = np.flatnonzero(base) + (1 << e)
        Jm = J[base] + J[flip]  # P(A_-e, X_e = x)
        Pm = Jm.sum(axis=1)
        keep = Pm > 0
        Jm, Pm = Jm[keep], Pm[keep]
        post = Jm / Pm[:, None]
        total = 0.0
        for y in (0, 1):
            mix = cond[0][y] * post[:, 0] + cond[1][y] * post[:, 1]
            with np.errstate(divide="ignore"):
                lg = np.log(mix)
            for x in (0, 1):
                w = Jm[:, x]
                total += dcond[x][y] * float(np.sum(np.where(w > 0, w * lg, 0.0)))
        out[e] = total
    return out


def kl_integral_check(params: Params, grid: LatentGrid, step: float = 1e-3, n_theta: int = 41) -> dict:
    """Numerical check of the entropy-derivative identity and the KL integral identity.

    The grid prior must give edge probability tau for the integral identity
    to hold exactly, e.g. tau = (2j + 1) / m.
    """
    r, p = params.r, params.p
    thetas = np.linspace(r, p, n_theta)

    def H(th):
        return conditional_entropy(interpolate_params(params, th), grid)

    deriv_err = 0.0
    for th in thetas[1:-1]:
        if th - step < r or th + step > p:
            continue
        fd = (H(th + step) - H(th - step)) / (2 * step)
        formula = edge_channel_entropy_grad(params, th, grid) + float(np.sum(r1_terms(params, th, grid)))
        deriv_err = max(deriv_err, abs(fd - formula))
    r1 = np.array([np.sum(r1_terms(params, th, grid)) for th in thetas])
    # composite Simpson on an odd number of nodes
    h = (p - r) / (n_theta - 1)
    integral = h / 3 * (r1[0] + r1[-1] + 4 * r1[1:-1:2].sum() + 2 * r1[2:-1:2].sum())
    kl = divergences_exact(params, grid).kl
    return {
        "max_derivative_error": deriv_err,
        "kl": kl,
        "r1_integral": float(integral),
        "integral_error": abs(kl - float(integral)),
        "grid_edge_prob": grid_edge_prob(params.tau, grid.m),
    }


# conditional second moment by Monte Carlo


def conditional_chi2_mc(
    params: Params,
    samples: int,
    t0: float | None = None,
    seed: int = 0,
    condition: bool = True,
    batch: int = 5000,
) -> tuple[float, float]:
    """Mean of prod_e factor(X_e, X'_e) * 1{z, z' both in the good event} over independent z, z'."""
    if samples < 10_000:
        raise ValueError("samples must be at least 10^4")
    if t0 is None:
        t0 = default_t(params)
    n, tau = params.n, params.tau
    total = 0.0
    total_sq = 0.0
    for c, size in enumerate(chunk_sizes(samples, batch)):
        rng = substream(seed, 0xC412, c)
        Z = rng.random((size, n))
        Zp = rng.random((size, n))
        nx, nxp, n11 = K.pair_counts_batch(Z, Zp, tau / 2)
        val = np.exp(log_product_from_counts(n11, nx, nxp, math.comb(n, 2), params))
        if condition:
            ok = event_E0_batch(Z, params, t0) & event_E0_batch(Zp, params, t0)
            ok &= event_E1_batch(Z, tau) & event_E1_batch(Zp, tau)
            val = np.where(ok, val, 0.0)
        total += float(val.sum())
        total_sq += float((val**2).sum())
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    return mean, math.sqrt(var / samples)


def good_event_prob(params: Params, samples: int, t0: float | None = None, seed: int = 0) -> float:
    if t0 is None:
        t0 = default_t(params)
    rng = substream(seed, 0xE0E1)
    Z = rng.random((samples, params.n))
    return float(np.mean(event_E0_batch(Z, params, t0) & event_E1_batch(Z, params.tau)))


def report(params: Params, grid: LatentGrid, thetas=None) -> dict:
    """JSON-ready summary of divergences, information and the MMSE curve."""
    d = divergences_exact(params, grid)
    direct, via = mutual_information_exact(params, grid)
    if thetas is None:
        thetas = np.linspace(params.r, params.p, 11)
    curve = [{"theta": float(t), "mmse": mmse_exact(params, float(t), grid)} for t in thetas]
    return {
        "params": params.as_dict(),
        "grid_m": grid.m,
        "tv_sum": d.tv_sum,
        "tv_half": d.tv_half,
        "chi2": d.chi2,
        "kl": d.kl,
        "mi_direct": direct,
        "mi_via_kl": via,
        "mmse_by_theta": curve,
    }


def sample_grid_planted(params: Params, grid: LatentGrid, rng) -> tuple[Adjacency, Adjacency]:
    """(A, X) with z uniform on the grid instead of the continuum."""
    z = grid.sample(rng)
    x = cycle_bits(z, params.tau)
    a = rng.random(x.size) < np.where(x, params.p, params.q)
    return Adjacency(params.n, a), Adjacency(params.n, x)
