import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plantedcycle.model import (
    Adjacency,
    Params,
    ParamsError,
    build_cycle,
    circ_dist,
    cycle_bits,
    degrade,
    degrade_probs,
    interpolate_params,
    interpolate_q,
    sample_null,
    sample_planted,
)
from plantedcycle.seeding import substream

from conftest import valid_params


# params


def test_params_derives_r_and_lambda():
    P = Params.create(10, 0.1, 0.5, 0.3)
    assert P.r == pytest.approx(0.32)
    assert P.lam == pytest.approx(0.04 / (0.32 * 0.68))


@pytest.mark.parametrize(
    "kw",
    [
        dict(n=0, tau=0.1, p=0.5, q=0.3),
        dict(n=5, tau=0.5, p=0.5, q=0.3),
        dict(n=5, tau=0.0, p=0.5, q=0.3),
        dict(n=5, tau=0.1, p=0.3, q=0.5),
        dict(n=5, tau=0.1, p=1.2, q=0.3),
        dict(n=5, tau=0.1, p=0.5, q=0.0),
        dict(n=5, tau=0.1, p=0.5, q=0.3, r=0.4),
    ],
)
def test_params_rejects_invalid(kw):
    with pytest.raises(ParamsError):
        Params.create(**kw)


@given(valid_params())
def test_params_ordering_invariant(P):
    assert 0 < P.q < P.r < P.p <= 1
    assert P.r == pytest.approx(P.tau * P.p + (1 - P.tau) * P.q, rel=1e-12)


# circle geometry


@pytest.mark.parametrize("a,b,d", [(0.3, 0.3, 0.0), (0.0, 0.5, 0.5), (0.9, 0.05, 0.15)])
def test_circ_dist_examples(a, b, d):
    assert circ_dist(a, b) == pytest.approx(d, abs=1e-15)


@given(st.floats(0, 1, exclude_max=True), st.floats(0, 1, exclude_max=True))
def test_circ_dist_symmetric_and_bounded(a, b):
    d = circ_dist(a, b)
    assert d == circ_dist(b, a)
    assert 0.0 <= d <= 0.5


def test_circ_dist_rejects_out_of_range():
    with pytest.raises(ValueError):
        circ_dist(1.0, 0.2)


def test_build_cycle_example():
    X = build_cycle([0.0, 0.1, 0.5], 0.25)
    assert X.edges() == [(0, 1)]


def test_build_cycle_coincident_points_complete():
    X = build_cycle(np.full(6, 0.37), 0.1)
    assert X == Adjacency.complete(6)


def test_cycle_edge_probability_is_tau():
    # one fixed pair over 10^6 independent draws
    rng = substream(11, 1)
    tau = 0.13
    z = rng.random((1_000_000, 2))
    d = np.abs(z[:, 0] - z[:, 1])
    hits = np.minimum(d, 1 - d) <= tau / 2
    se = math.sqrt(tau * (1 - tau) / hits.size)
    assert abs(hits.mean() - tau) < 3 * se


@given(st.lists(st.floats(0, 1, exclude_max=True), min_size=2, max_size=25), st.floats(0.01, 0.49))
def test_cycle_graph_rotation_invariant(z, tau):
    z = np.array(z)
    shift = 0.3141
    X = build_cycle(z, tau)
    Y = build_cycle(np.mod(z + shift, 1.0), tau)
    # rotation can move a distance across the tau/2 threshold only through rounding
    dist = np.abs(z[:, None] - z[None, :])
    dist = np.minimum(dist, 1 - dist)
    near_tie = np.isclose(dist, tau / 2, atol=1e-12).any()
    if not near_tie:
        assert X == Y


# adjacency storage


@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_adjacency_roundtrips(n, seed):
    rng = np.random.default_rng(seed)
    A = Adjacency(n, rng.random(n * (n - 1) // 2) < 0.4)
    assert Adjacency.from_matrix(A.matrix()) == A
    assert Adjacency.from_bitstring(n, A.bitstring()) == A
    assert Adjacency.from_bytes(A.to_bytes()) == A
    assert Adjacency.from_edgelist(A.to_edgelist()) == A
    M = A.matrix()
    assert np.array_equal(M, M.T) and not M.diagonal().any()


def test_adjacency_validation():
    with pytest.raises(ValueError):
        Adjacency.from_matrix(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        Adjacency.from_matrix(np.eye(3, dtype=int))
    with pytest.raises(ValueError):
        Adjacency(4, np.zeros(5, bool))
    with pytest.raises(ValueError):
        Adjacency.from_bytes(b"XXXX" + bytes(8))


def test_adjacency_inner_and_hamming():
    A = Adjacency.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    B = Adjacency.from_edges(4, [(0, 1), (0, 3)])
    assert A.inner(B) == 1
    assert A.hamming(B) == 3


def test_edgelist_without_header_needs_n():
    with pytest.raises(ValueError):
        Adjacency.from_edgelist("1 2\n")
    assert Adjacency.from_edgelist("1 2\n", n=3).edges() == [(0, 1)]


def test_permute_relabels():
    A = Adjacency.from_edges(3, [(0, 1)])
    assert A.permute([2, 0, 1]).edges() == [(0, 2)]


# samplers


def test_sample_planted_deterministic():
    P = Params.create(30, 0.1, 0.6, 0.2)
    a = sample_planted(P, substream(3, 1))
    b = sample_planted(P, substream(3, 1))
    assert a[0] == b[0] and a[1] == b[1] and np.array_equal(a[2], b[2])
    assert sample_null(P, substream(3, 2)) == sample_null(P, substream(3, 2))


def test_sample_planted_consistent_with_z():
    P = Params.create(40, 0.1, 0.6, 0.2)
    A, X, z = sample_planted(P, substream(0, 0))
    assert X == build_cycle(z, P.tau)


def test_planted_marginals():
    P = Params.create(60, 0.2, 0.7, 0.1)
    rng = substream(4, 0)
    on, on_hits, all_hits, total = 0, 0, 0, 0
    for _ in range(400):
        A, X, _ = sample_planted(P, rng)
        on += X.n_edges
        on_hits += A.inner(X)
        all_hits += A.n_edges
        total += A.bits.size
    # conditional rate given X = 1 is p
    assert abs(on_hits / on - P.p) < 3 * math.sqrt(P.p * (1 - P.p) / on)
    # marginal rate is r; pairs within a graph are dependent through z, so allow a wider band
    assert abs(all_hits / total - P.r) < 0.01


def test_null_density():
    P = Params.create(200, 0.1, 0.6, 0.2)
    rng = substream(5, 0)
    hits = sum(sample_null(P, rng).n_edges for _ in range(51))
    total = 51 * P.n_pairs
    assert abs(hits / total - P.r) < 3 * math.sqrt(P.r * (1 - P.r) / total)


def test_null_r_equal_one_is_complete():
    P = Params.unchecked(5, 0.1, 1.0, 1.0)
    assert sample_null(P, 0) == Adjacency.complete(5)


# interpolation and degradation


def test_interpolation_examples():
    P = Params.create(10, 0.1, 0.5, 0.3)
    assert interpolate_params(P, 0.5).q == pytest.approx(0.3, abs=1e-15)
    assert interpolate_params(P, P.r).q == pytest.approx(P.r, abs=1e-15)
    assert interpolate_q(0.32, 0.1, 0.4) == pytest.approx(0.28 / 0.9)


@given(valid_params(), st.floats(0, 1))
def test_interpolation_keeps_density(P, u):
    hi = min(1.0, P.r / P.tau * (1 - 1e-9))
    theta = P.r + u * (hi - P.r)
    Pt = interpolate_params(P, theta)
    assert Pt.tau * Pt.p + (1 - Pt.tau) * Pt.q == pytest.approx(P.r, rel=1e-12, abs=1e-15)


def test_interpolation_rejects_out_of_range():
    P = Params.create(10, 0.1, 0.5, 0.3)
    with pytest.raises(ParamsError):
        interpolate_params(P, P.r / 2)


def test_degrade_example():
    x, y = degrade_probs(0.6, 0.4, 0.2)
    assert (x, y) == pytest.approx((0.6, 0.1))
    assert 0.6 * x + 0.4 * y == pytest.approx(0.4)
    assert 0.2 * x + 0.8 * y == pytest.approx(0.2)


def test_degrade_identity_boundary():
    assert degrade_probs(0.5, 0.5, 0.2, allow_equal=True) == pytest.approx((1.0, 0.0))
    with pytest.raises(ParamsError):
        degrade_probs(0.5, 0.5, 0.2)


@given(st.floats(0.01, 0.4), st.floats(0, 1), st.floats(0, 1), st.floats(0.05, 0.45))
def test_degrade_marginal_identities(r, u, v, tau):
    hi = min(1.0, r / tau * (1 - 1e-9))
    theta = r + u * (hi - r) * 0.999
    theta_p = theta + v * (hi - theta) + 1e-9
    if theta_p > hi:
        return
    x, y = degrade_probs(theta_p, theta, r)
    assert theta_p * x + (1 - theta_p) * y == pytest.approx(theta, abs=1e-12)
    qp, q = interpolate_q(r, tau, theta_p), interpolate_q(r, tau, theta)
    assert qp * x + (1 - qp) * y == pytest.approx(q, abs=1e-12)


def test_degrade_matches_direct_sampling():
    P = Params.create(80, 0.1, 0.8, 0.1)
    theta = 0.5
    Pt = interpolate_params(P, theta)
    rng = substream(9, 0)
    stats = {"deg": [0, 0, 0, 0], "dir": [0, 0, 0, 0]}
    for _ in range(300):
        A1, X1, _ = sample_planted(P, rng)
        D = degrade(A1, P.p, theta, P.r, rng)
        A2, X2, _ = sample_planted(Pt, rng)
        for key, A, X in (("deg", D, X1), ("dir", A2, X2)):
            s = stats[key]
            s[0] += A.inner(X)
            s[1] += X.n_edges
            s[2] += A.n_edges - A.inner(X)
            s[3] += X.bits.size - X.n_edges
    for on in (True, False):
        i = 0 if on else 2
        a = stats["deg"][i] / stats["deg"][i + 1]
        b = stats["dir"][i] / stats["dir"][i + 1]
        pr = Pt.p if on else Pt.q
        se = math.sqrt(pr * (1 - pr) * (1 / stats["deg"][i + 1] + 1 / stats["dir"][i + 1]))
        assert abs(a - b) < 3 * se


def test_cycle_bits_threshold_inclusive():
    z = np.array([0.0, 0.05])
    assert cycle_bits(z, 0.1).tolist() == [True]
