import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from plantedcycle import ustat
from plantedcycle.model import Adjacency, Params, build_cycle
from plantedcycle.seeding import substream
from plantedcycle.ustat import EVEN_ADJ, ODD_ADJ, WITHIN


def test_centered_edge_sum_examples():
    assert ustat.centered_edge_sum(Adjacency.empty(4), 0.25) == pytest.approx(-1.5)
    assert ustat.centered_edge_sum(Adjacency.complete(4), 0.25) == pytest.approx(4.5)


def test_centered_edge_sum_mean_zero():
    rng = substream(1, 0)
    n, tau = 20, 0.15
    Z = rng.random((100_000, n))
    T = ustat.K.edge_count_batch(Z, tau / 2) - math.comb(n, 2) * tau
    assert abs(T.mean()) < 3 * T.std() / math.sqrt(T.size)


def test_overlap_stat_examples():
    X = build_cycle(substream(2, 0).random(10), 0.2)
    assert ustat.overlap_stat(X, Adjacency.empty(10), 0.2) == 0
    C = Adjacency.complete(7)
    assert ustat.overlap_stat(C, C, 0.1) == pytest.approx(21 * 0.9)


def test_overlap_stat_mean_zero():
    n, tau = 15, 0.2
    Xp = build_cycle(substream(3, 0).random(n), tau)
    ii, jj = Xp.support()
    rng = substream(3, 1)
    vals = np.array([ustat.K.overlap_on_support(rng.random(n), ii, jj, tau / 2, tau) for _ in range(100_000)])
    assert abs(vals.mean()) < 3 * vals.std() / math.sqrt(vals.size)


@pytest.mark.parametrize("tau,k", [(0.3, 2), (0.24, 4), (0.1, 10), (0.05, 20), (0.49, 2), (0.2, 4)])
def test_block_count(tau, k):
    assert ustat.block_count(tau) == k


def test_block_count_rejects_wide_tau():
    with pytest.raises(ValueError):
        ustat.block_count(0.5)


def test_blocks_for_tau_03():
    bd = ustat.decompose_blocks(np.array([0.1, 0.35, 0.95]), 0.3)
    assert bd.k == 2
    assert bd.block_bounds.tolist() == [[0.0, 0.3], [0.3, 1.0]]
    assert bd.labels.tolist() == [0, 1, 1]


def _check_partition(z, zp, tau):
    bd = ustat.decompose_blocks(zp, tau)
    Xp = build_cycle(zp, tau)
    support = set(Xp.edges())
    union = set()
    total = 0
    for kind in (WITHIN, ODD_ADJ, EVEN_ADJ):
        for ell, pairs in bd.J(kind).items():
            assert not (pairs & union)
            union |= pairs
            total += len(pairs)
            if kind == WITHIN:
                assert all(bd.labels[i] == bd.labels[j] == ell - 1 for i, j in pairs)
            else:
                assert (kind == ODD_ADJ) == (ell % 2 == 1) or bd.k == 2
    assert union == support and total == len(support)
    dec = ustat.decompose(z, zp, tau, bd)
    S = ustat.overlap_stat(build_cycle(z, tau), Xp, tau)
    assert dec.total == pytest.approx(S, abs=1e-9)
    return bd, dec


@given(st.integers(0, 2**31), st.sampled_from([0.05, 0.1, 0.3, 0.24, 0.45]), st.integers(2, 60))
def test_decomposition_sums_to_overlap(seed, tau, n):
    rng = np.random.default_rng(seed)
    _check_partition(rng.random(n), rng.random(n), tau)


def test_decomposition_k2_has_no_even_sets():
    rng = substream(4, 0)
    bd, _ = _check_partition(rng.random(40), rng.random(40), 0.3)
    assert bd.J(EVEN_ADJ) == {}
    assert set(bd.J(ODD_ADJ)) <= {1}


@given(st.integers(0, 2**31))
def test_block_sums_depend_only_on_own_vertices(seed):
    rng = np.random.default_rng(seed)
    n, tau = 50, 0.1
    z, zp = rng.random(n), rng.random(n)
    bd = ustat.decompose_blocks(zp, tau)
    base = ustat.decompose(z, zp, tau, bd).U
    for key in base:
        keep = bd.vertices(*key)
        z2 = rng.random(n)
        z2[keep] = z[keep]
        assert ustat.decompose(z2, zp, tau, bd).U[key] == base[key]


def test_event_E0_trivial_cases():
    P = Params.create(50, 0.1, 0.6, 0.2)
    z = substream(5, 0).random(50)
    assert ustat.event_E0(z, P, t=math.inf)
    Q = Params.unchecked(50, 0.1, 0.3, 0.3)
    assert ustat.event_E0(z, Q, t=0.0)
    with pytest.raises(ValueError):
        ustat.event_E0(z, P, t=-1.0)


def test_event_E0_high_probability_in_easy_regime():
    P = Params.create(400, 0.05, 0.9, 0.15)
    Z = substream(6, 0).random((10_000, 400))
    assert ustat.event_E0_batch(Z, P, ustat.default_t(P)).mean() >= 0.99


def test_event_E1_examples():
    assert not ustat.event_E1(np.full(10, 0.05), 0.2)
    assert ustat.event_E1((np.arange(40) + 0.5) / 40, 0.1)


def test_event_E1_high_probability():
    n, tau = 400, 0.05
    Z = substream(7, 0).random((10_000, n))
    assert ustat.event_E1_batch(Z, tau).mean() >= 1 - 10 / n


def test_event_batches_agree_with_scalar():
    P = Params.create(30, 0.1, 0.9, 0.1)
    Z = substream(8, 0).random((50, 30))
    t = ustat.default_t(P) / 50
    e0 = ustat.event_E0_batch(Z, P, t)
    e1 = ustat.event_E1_batch(Z, P.tau)
    for b in range(50):
        assert e0[b] == ustat.event_E0(Z[b], P, t)
        assert e1[b] == ustat.event_E1(Z[b], P.tau)


def test_decoupled_overlap_hand_example():
    # ordered pair (z_i, z''_j): only the (0, 1) term is near
    z = np.array([0.0, 0.5, 0.9])
    zdd = np.array([0.7, 0.02, 0.3])
    Xp = Adjacency.complete(3)
    tau = 0.1
    got = ustat.decoupled_overlap(z, zdd, Xp, tau)
    assert got == pytest.approx(1 - 3 * tau)
    assert ustat.decoupled_overlap(z, z, Xp, tau) == pytest.approx(ustat.overlap_stat(build_cycle(z, tau), Xp, tau))
    assert ustat.overlap_stat(build_cycle(zdd, tau), Xp, tau) != pytest.approx(got)
    assert ustat.decoupled_overlap(z, zdd, Adjacency.empty(3), tau) == 0


def test_decoupled_overlap_mean_zero():
    n, tau = 12, 0.2
    Xp = build_cycle(substream(9, 0).random(n), tau)
    rng = substream(9, 1)
    vals = np.array([ustat.decoupled_overlap(rng.random(n), rng.random(n), Xp, tau) for _ in range(20_000)])
    assert abs(vals.mean()) < 3 * vals.std() / math.sqrt(vals.size)


def test_envelope_at_zero_and_tail_table():
    P = Params.create(200, 0.05, 0.3, 0.2)
    assert ustat.envelope(0.0, P) == 1.0
    tab = ustat.tail_envelope_compare(P, 2000, seed=1)
    assert tab.t[0] == 0.0 and tab.empirical[0] == 1.0
    assert tab.envelope[0] == pytest.approx(tab.K)
    assert tab.dominates
    assert [r["t"] for r in tab.rows()] == tab.t.tolist()
    with pytest.raises(ValueError):
        ustat.tail_envelope_compare(P, 10, seed=1)


def test_envelope_constant_is_moderate():
    P = Params.create(200, 0.05, 0.3, 0.2)
    for stat in ("T", "S"):
        assert ustat.tail_envelope_compare(P, 20_000, seed=2, stat=stat).K <= 10


def test_tail_scaling_collapse():
    # |T| / (n sqrt(tau)) at fixed n tau: quantiles roughly match after doubling n
    qs = []
    for n, tau in ((100, 0.2), (200, 0.1)):
        P = Params.create(n, tau, 0.3, 0.2)
        T = ustat.sample_tail_stat(P, 20_000, seed=3)
        qs.append(np.quantile(T / (n * math.sqrt(tau)), [0.5, 0.9]))
    assert np.allclose(qs[0], qs[1], rtol=0.15)


def test_tail_sampling_independent_of_threads():
    P = Params.create(60, 0.1, 0.3, 0.2)
    a = ustat.sample_tail_stat(P, 4500, seed=4, stat="S", threads=1)
    b = ustat.sample_tail_stat(P, 4500, seed=4, stat="S", threads=2)
    assert np.array_equal(a, b)
