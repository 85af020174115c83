"""Compiled inner loops. Every cycle test uses the same float expression as
``model.cycle_bits`` so counts agree bit for bit with the dense path."""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _near(a, b, half):
    d = abs(a - b)
    e = 1.0 - d
    return (d if d < e else e) <= half


@njit(cache=True)
def edge_count(z, half):
    """Number of pairs within circular distance ``half``, O(n log n + edges)."""
    s = np.sort(z)
    n = s.size
    total = 0
    for a in range(n):
        b = a + 1
        while b < n and s[b] - s[a] <= half:
            b += 1
        total += b - a - 1
        c = n - 1
        while c >= b and 1.0 - (s[c] - s[a]) <= half:
            total += 1
            c -= 1
    return total


@njit(cache=True)
def support_pairs(z, half):
    """All pairs (i, j), i < j, within circular distance ``half``."""
    order = np.argsort(z)
    s = z[order]
    n = s.size
    cap = 16
    out_i = np.empty(cap, np.int64)
    out_j = np.empty(cap, np.int64)
    m = 0
    for a in range(n):
        b = a + 1
        while b < n and s[b] - s[a] <= half:
            b += 1
        w = n
        while w > b and 1.0 - (s[w - 1] - s[a]) <= half:
            w -= 1
        c = a + 1
        while c < n:
            if c == b:
                c = w
                if c >= n:
                    break
            if m == cap:
                cap *= 2
                ni = np.empty(cap, np.int64)
                nj = np.empty(cap, np.int64)
                ni[:m] = out_i[:m]
                nj[:m] = out_j[:m]
                out_i = ni
                out_j = nj
            u = order[a]
            v = order[c]
            if u < v:
                out_i[m] = u
                out_j[m] = v
            else:
                out_i[m] = v
                out_j[m] = u
            m += 1
            c += 1
    return out_i[:m], out_j[:m]


@njit(cache=True)
def pair_counts_batch(Z, Zp, half):
    """Per row: (|X|, |X'|, |X and X'|) for cycle graphs of Z and Zp."""
    B = Z.shape[0]
    nx = np.empty(B, np.int64)
    nxp = np.empty(B, np.int64)
    n11 = np.empty(B, np.int64)
    for b in range(B):
        z = Z[b]
        ii, jj = support_pairs(Zp[b], half)
        nxp[b] = ii.size
        c = 0
        for t in range(ii.size):
            if _near(z[ii[t]], z[jj[t]], half):
                c += 1
        n11[b] = c
        nx[b] = edge_count(z, half)
    return nx, nxp, n11


@njit(cache=True)
def edge_count_batch(Z, half):
    out = np.empty(Z.shape[0], np.int64)
    for b in range(Z.shape[0]):
        out[b] = edge_count(Z[b], half)
    return out


@njit(cache=True)
def overlap_on_support(z, ii, jj, half, tau):
    """sum over the given pairs of (1{near(z_i, z_j)} - tau)."""
    s = 0.0
    for t in range(ii.size):
        s += (1.0 if _near(z[ii[t]], z[jj[t]], half) else 0.0) - tau
    return s


@njit(cache=True)
def decoupled_on_support(z, zz, ii, jj, half, tau):
    s = 0.0
    for t in range(ii.size):
        s += (1.0 if _near(z[ii[t]], zz[jj[t]], half) else 0.0) - tau
    return s


# local search


@njit(cache=True)
def _window(arr, m, x, h):
    """Count of arr[:m] (sorted) inside the closed circular window [x-h, x+h]."""
    a = arr[:m]
    lo = x - h
    hi = x + h
    if lo < 0.0:
        return np.searchsorted(a, hi, side="right") + m - np.searchsorted(a, lo + 1.0, side="left")
    if hi >= 1.0:
        return m - np.searchsorted(a, lo, side="left") + np.searchsorted(a, hi - 1.0, side="right")
    return np.searchsorted(a, hi, side="right") - np.searchsorted(a, lo, side="left")


@njit(cache=True, inline="always")
def _violation(s, lo, hi):
    if s < lo:
        return lo - s
    if s > hi:
        return s - hi
    return 0.0


@njit(cache=True)
def objective_and_size(z, A, half):
    n = z.size
    obj = 0
    size = 0
    for i in range(n):
        zi = z[i]
        for j in range(i + 1, n):
            if _near(zi, z[j], half):
                size += 1
                obj += A[i, j]
    return obj, size


@njit(cache=True)
def _wrap(x):
    x = x - np.floor(x)
    if x >= 1.0:
        x = 0.0
    return x


@njit(cache=True)
def local_search_kernel(z0, A, indptr, indices, half, lo, hi, max_sweeps, seed, anchor_all, n_swaps, n_blocks, drift):
    """Hill climbing on <X(z), A> with |X(z)| kept in [lo, hi].

    Moves per sweep: best-response relocation of each vertex to a window
    anchored at another point, random coordinate swaps, and reversal or
    translation of the points inside a random arc. Only strict improvements
    are accepted; an arc move that keeps the objective but drops edges also
    counts as one.
    """
    np.random.seed(seed)
    n = z0.size
    z = z0.copy()
    obj, size = objective_and_size(z, A, half)
    eps = 1e-9
    S = np.sort(z)
    P = np.empty(n)
    sweeps = 0
    for sweep in range(max_sweeps):
        sweeps += 1
        improved = False
        order = np.random.permutation(n)
        for t in range(n):
            i = order[t]
            zi = z[i]
            k = np.searchsorted(S, zi, side="left")
            while k < n - 1 and S[k] != zi:
                k += 1
            for u in range(k, n - 1):
                S[u] = S[u + 1]
            m = n - 1
            deg = indptr[i + 1] - indptr[i]
            if deg > 0:
                for u in range(deg):
                    P[u] = z[indices[indptr[i] + u]]
                Ps = np.sort(P[:deg])
                cur_obj = 0
                for u in range(deg):
                    if _near(zi, Ps[u], half):
                        cur_obj += 1
                cur_all = _window(S, m, zi, half)
                v_cur = _violation(size, lo, hi)
                best_gain = 0
                best_x = zi
                best_all = cur_all
                # a random equal-objective position, used to drift along plateaus
                flat_x = zi
                flat_all = cur_all
                n_flat = 0
                n_anchor = m if anchor_all else deg
                for u in range(n_anchor):
                    anchor = S[u] if anchor_all else Ps[u]
                    for sgn in (1.0, -1.0):
                        x = _wrap(anchor + sgn * (half - eps))
                        g = _window(Ps, deg, x, half) - cur_obj
                        if g > best_gain or (g == 0 and best_gain == 0 and drift):
                            al = _window(S, m, x, half)
                            ns = size - cur_all + al
                            v_new = _violation(ns, lo, hi)
                            if v_new == 0.0 or v_new <= v_cur:
                                if g > best_gain:
                                    best_gain = g
                                    best_x = x
                                    best_all = al
                                else:
                                    n_flat += 1
                                    if np.random.random() * n_flat < 1.0:
                                        flat_x = x
                                        flat_all = al
                if best_gain > 0:
                    z[i] = best_x
                    obj += best_gain
                    size += best_all - cur_all
                    improved = True
                elif n_flat > 0 and np.random.random() < drift:
                    z[i] = flat_x
                    size += flat_all - cur_all
            zi = z[i]
            pos = np.searchsorted(S[:m], zi, side="left")
            for u in range(m, pos, -1):
                S[u] = S[u - 1]
            S[pos] = zi

        for t in range(n_swaps):
            i = np.random.randint(n)
            j = np.random.randint(n)
            if i == j:
                continue
            zi = z[i]
            zj = z[j]
            g = 0
            for k in range(n):
                if k == i or k == j:
                    continue
                d = A[i, k] - A[j, k]
                if d != 0:
                    xi = 1 if _near(zi, z[k], half) else 0
                    xj = 1 if _near(zj, z[k], half) else 0
                    g += d * (xj - xi)
            if g > 0:
                z[i] = zj
                z[j] = zi
                obj += g
                improved = True

        inb = np.zeros(n, np.bool_)
        newz = np.empty(n)
        for t in range(n_blocks):
            c = np.random.random()
            w = half * (1.0 + 3.0 * np.random.random())
            reverse = np.random.random() < 0.5
            shift = half * (4.0 * np.random.random() - 2.0)
            nb = 0
            for k in range(n):
                off = z[k] - c
                off = off - np.floor(off)
                if off < w:
                    inb[k] = True
                    newz[k] = _wrap(c + w - off) if reverse else _wrap(z[k] + shift)
                    nb += 1
                else:
                    inb[k] = False
                    newz[k] = z[k]
            if nb == 0 or nb == n:
                continue
            g = 0
            ds = 0
            for a in range(n):
                if not inb[a]:
                    continue
                for b in range(n):
                    if inb[b]:
                        continue
                    xo = 1 if _near(z[a], z[b], half) else 0
                    xn = 1 if _near(newz[a], z[b], half) else 0
                    if xo != xn:
                        ds += xn - xo
                        g += A[a, b] * (xn - xo)
            if g > 0 or (g == 0 and ds < 0):
                ns = size + ds
                v_new = _violation(ns, lo, hi)
                if v_new == 0.0 or v_new <= _violation(size, lo, hi):
                    for k in range(n):
                        z[k] = newz[k]
                    obj += g
                    size = ns
                    improved = True
                    S = np.sort(z)
        if not improved and drift == 0.0:
            break
    return z, sweeps


# realizability: grid backtracking


@njit(cache=True)
def grid_masks(m, tm):
    """near[x, y]: 2 D(x, y) < tm; far[x, y]: 2 D(x, y) > tm, D the circular grid distance."""
    near = np.zeros((m, m), np.bool_)
    far = np.zeros((m, m), np.bool_)
    for x in range(m):
        for y in range(m):
            d = abs(x - y)
            if m - d < d:
                d = m - d
            near[x, y] = 2 * d < tm
            far[x, y] = 2 * d > tm
    return near, far


@njit(cache=True)
def grid_search(adj, m, tm, budget):
    """Depth-first search for grid positions realizing ``adj`` with slack.

    Vertex 0 sits at 0 and the second placed vertex at most m/2 (reflection).
    Returns (status, positions): 1 found, 0 exhausted, -1 budget exceeded.
    """
    n = adj.shape[0]
    pos = np.zeros(n, np.int64)
    if n <= 1:
        return 1, pos
    near, far = grid_masks(m, tm)
    dom = np.ones((n + 1, n, m), np.bool_)
    dom[0, 0, :] = False
    dom[0, 0, 0] = True
    assigned = np.zeros(n, np.bool_)
    var = np.full(n, -1, np.int64)
    cursor = np.zeros(n + 1, np.int64)
    nodes = 0
    d = 0
    var[0] = 0
    cursor[0] = 0
    while d >= 0:
        v = var[d]
        found = False
        x = cursor[d]
        while x < m:
            if dom[d, v, x] and not (d == 1 and 2 * x > m):
                nodes += 1
                if nodes > budget:
                    return -1, pos
                ok = True
                for u in range(n):
                    if assigned[u] or u == v:
                        dom[d + 1, u, :] = dom[d, u, :]
                        continue
                    cnt = 0
                    for y in range(m):
                        val = dom[d, u, y] and (near[x, y] if adj[v, u] else far[x, y])
                        dom[d + 1, u, y] = val
                        if val:
                            cnt += 1
                    if cnt == 0:
                        ok = False
                        break
                if ok:
                    found = True
                    break
            x += 1
        if not found:
            if d > 0:
                assigned[var[d - 1]] = False
            d -= 1
            continue
        cursor[d] = x + 1
        pos[v] = x
        dom[d + 1, v, :] = False
        dom[d + 1, v, x] = True
        assigned[v] = True
        if d + 1 == n:
            return 1, pos
        # most constrained unassigned vertex next
        best = -1
        best_cnt = m + 1
        for u in range(n):
            if not assigned[u]:
                cnt = 0
                for y in range(m):
                    if dom[d + 1, u, y]:
                        cnt += 1
                if cnt < best_cnt:
                    best_cnt = cnt
                    best = u
        d += 1
        var[d] = best
        cursor[d] = 0
    return 0, pos


# realizability: circular orderings and clockwise reach patterns


@njit(cache=True)
def pattern_weights(t, half):
    """Difference constraints for reach vector ``t`` over sorted positions P.

    W[v, u] = w encodes P_u - P_v < w; all constraints are strict.
    """
    n = t.size
    inf = np.inf
    W = np.full((n, n), inf)
    for a in range(n - 1):
        W[a + 1, a] = min(W[a + 1, a], 0.0)
    W[0, n - 1] = min(W[0, n - 1], 1.0)
    for a in range(n):
        for s in range(1, n):
            b = (a + s) % n
            wrap = 1.0 if a + s >= n else 0.0
            if s <= t[a]:
                W[a, b] = min(W[a, b], half - wrap)
            elif s == t[a] + 1:
                W[b, a] = min(W[b, a], wrap - half)
    return W


@njit(cache=True)
def shortest_closure(W):
    D = W.copy()
    n = D.shape[0]
    for k in range(n):
        for i in range(n):
            dik = D[i, k]
            if dik == np.inf:
                continue
            for j in range(n):
                v = dik + D[k, j]
                if v < D[i, j]:
                    D[i, j] = v
    return D


@njit(cache=True)
def strict_feasible(W, tol):
    """All constraints strict: feasible iff every cycle has weight > tol."""
    D = shortest_closure(W)
    for i in range(D.shape[0]):
        if D[i, i] <= tol:
            return False
    return True


@njit(cache=True)
def _prefix_ok(t, level, n):
    if level >= 1 and t[level] < t[level - 1] - 1:
        return False
    for a in range(level):
        s = level - a
        if s <= t[a] and t[level] >= n - s:
            return False
    if level == n - 1 and t[0] < t[n - 1] - 1:
        return False
    return True


@njit(cache=True)
def feasible_patterns(n, half, tol):
    """All reach vectors t in {0..n-1}^n whose constraint system is strictly feasible."""
    cap = 64
    out = np.empty((cap, n), np.int64)
    m = 0
    t = np.zeros(n, np.int64)
    level = 0
    t[0] = -1
    while level >= 0:
        t[level] += 1
        if t[level] > n - 1:
            level -= 1
            continue
        if not _prefix_ok(t, level, n):
            continue
        if level < n - 1:
            level += 1
            t[level] = -1
            continue
        if strict_feasible(pattern_weights(t, half), tol):
            if m == cap:
                cap *= 2
                nxt = np.empty((cap, n), np.int64)
                nxt[:m] = out[:m]
                out = nxt
            out[m] = t
            m += 1
    return out[:m]
