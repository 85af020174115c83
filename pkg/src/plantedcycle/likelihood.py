"""Likelihood ratios between the planted and null models and the per-pair
second-moment factors, all evaluated in log space."""

from __future__ import annotations

import math

import numpy as np

from plantedcycle.model import Adjacency, Params, cycle_bits


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def log_likelihood_ratio(A: Adjacency, X: Adjacency, params: Params) -> float:
    """log P(A | X) - log Q(A).

    Returns ``-inf`` when A is impossible under the planted model, e.g. p = 1
    and some cycle pair is absent from A.
    """
    if A.n != X.n:
        raise ValueError("A and X must have the same size")
    p, q, r = params.p, params.q, params.r
    a, x = A.bits, X.bits
    n11 = np.count_nonzero(a & x)
    n10 = np.count_nonzero(a & ~x)
    n01 = np.count_nonzero(~a & x)
    n00 = a.size - n11 - n10 - n01
    terms = [
        (n11, _log(p / r)),
        (n10, _log(q / r)),
        (n01, _log((1 - p) / (1 - r))),
        (n00, _log((1 - q) / (1 - r))),
    ]
    return float(sum(c * lv for c, lv in terms if c))


def pair_factors(params: Params) -> tuple[float, float, float]:
    """(both-on, both-off, mixed) values of E_Q[ratio(x) * ratio(x')] for one pair."""
    p, q, r = params.p, params.q, params.r
    f11 = p * p / r + (1 - p) ** 2 / (1 - r)
    f00 = q * q / r + (1 - q) ** 2 / (1 - r)
    f01 = p * q / r + (1 - p) * (1 - q) / (1 - r)
    return f11, f00, f01


def pair_second_moment_factor(x: int, xp: int, params: Params) -> float:
    if x not in (0, 1) or xp not in (0, 1):
        raise ValueError("pair indicators must be 0 or 1")
    f11, f00, f01 = pair_factors(params)
    if x and xp:
        return f11
    if not x and not xp:
        return f00
    return f01


def log_product_from_counts(n11, nx, nxp, n_pairs, params: Params):
    """Log of the pairwise product given |X ∧ X'|, |X|, |X'| (array-friendly)."""
    f11, f00, f01 = pair_factors(params)
    n11 = np.asarray(n11, dtype=float)
    nmix = np.asarray(nx, dtype=float) + np.asarray(nxp, dtype=float) - 2 * n11
    n00 = n_pairs - n11 - nmix
    return n11 * math.log(f11) + n00 * math.log(f00) + nmix * math.log(f01)


def log_second_moment_conditional(z, zp, params: Params) -> tuple[float, float]:
    """(log product, log exponent bound) for fixed latent vectors z and z'."""
    z = np.asarray(z, dtype=float)
    zp = np.asarray(zp, dtype=float)
    if z.shape != zp.shape:
        raise ValueError("z and z' must have equal lengths")
    x = cycle_bits(z, params.tau)
    xp = cycle_bits(zp, params.tau)
    n11 = np.count_nonzero(x & xp)
    log_prod = float(log_product_from_counts(n11, x.sum(), xp.sum(), x.size, params))
    tau = params.tau
    s = float(np.sum(xp * (x - tau)))
    t = float(np.sum(x - tau))
    log_bound = params.lam * (s - tau * t)
    return log_prod, log_bound


def _safe_exp(v: float) -> float:
    return math.exp(v) if v < 709.0 else math.inf


def second_moment_conditional(z, zp, params: Params) -> tuple[float, float]:
    """E_{A~Q}[P(A|z) P(A|z') / Q(A)^2] and its exponential upper bound."""
    log_prod, log_bound = log_second_moment_conditional(z, zp, params)
    return _safe_exp(log_prod), _safe_exp(log_bound)


def identity_residuals(params: Params) -> np.ndarray:
    """Residuals of the six equalities linking the pair factors to lambda."""
    p, q, r, tau, lam = params.p, params.q, params.r, params.tau, params.lam
    v = r * (1 - r)
    f11, f00, f01 = pair_factors(params)
    return np.array(
        [
            f11 - (1 + (p - r) ** 2 / v),
            f00 - (1 + (q - r) ** 2 / v),
            f01 - (1 + (p - r) * (q - r) / v),
            (p - r) ** 2 / v - lam * (1 - tau) ** 2,
            (q - r) ** 2 / v - lam * tau**2,
            (p - r) * (q - r) / v + lam * tau * (1 - tau),
        ]
    )


def verify_elementary_identities(params: Params) -> float:
    return float(np.max(np.abs(identity_residuals(params))))
