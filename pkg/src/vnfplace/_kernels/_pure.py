"""Pure-Python implementations of the hot kernels.

Every function here has a twin with the same name and signature in the
compiled ``_native`` module. Graph-like arguments are duck-typed objects
exposing numpy arrays as attributes (see ``NetworkGraph``,
``SpanningTables`` and ``CondensedTables``).
"""

from __future__ import annotations

from collections import deque

import numpy as np

NAME = "pure"

EMPTY_CAP = -1
STUCK = -2


def bfs_distances(indptr, indices, source):
    n = len(indptr) - 1
    dist = np.full(n, -1, dtype=np.int32)
    dist[source] = 0
    ip = indptr.tolist()
    ix = indices.tolist()
    d = [-1] * n
    d[source] = 0
    q = deque([source])
    while q:
        v = q.popleft()
        dv = d[v] + 1
        for k in range(ip[v], ip[v + 1]):
            u = ix[k]
            if d[u] < 0:
                d[u] = dv
                q.append(u)
    dist[:] = d
    return dist


def simple_nearest(graph, remaining, origin, demand):
    """Level-synchronous BFS; lowest server ID wins within the first feasible level."""
    ip = graph.indptr
    ix = graph.indices
    ns = graph.node_server
    seen = np.zeros(graph.n_nodes, dtype=bool)
    seen[origin] = True
    level = [origin]
    while level:
        best = -1
        for v in level:
            s = ns[v]
            if s >= 0 and remaining[s] >= demand and (best < 0 or s < best):
                best = s
        if best >= 0:
            return int(best)
        nxt = []
        for v in level:
            for k in range(ip[v], ip[v + 1]):
                u = ix[k]
                if not seen[u]:
                    seen[u] = True
                    nxt.append(u)
        level = nxt
    return -1


def nearest_order(graph, origins):
    """Servers sorted by (hop distance, server ID) for each origin node."""
    sn = graph.server_nodes
    out = np.empty((len(origins), graph.n_servers), dtype=np.int32)
    for row, o in enumerate(origins):
        dist = bfs_distances(graph.indptr, graph.indices, int(o))
        out[row] = np.argsort(dist[sn], kind="stable")
    return out


def cached_nearest(order_row, remaining, demand):
    for s in order_row:
        if remaining[s] >= demand:
            return int(s)
    return -1


def _better(c1, d1, s1, c2, d2, s2):
    if c1 != c2:
        return c1 > c2
    if d1 != d2:
        return d1 < d2
    return s1 < s2


def st_build(tables, graph, remaining):
    rp = tables.row_ptr
    nbr = tables.row_nbr
    rev = tables.row_rev
    cap = tables.cap
    dist = tables.dist
    srv = tables.srv
    cap[:] = EMPTY_CAP
    dist[:] = 0
    srv[:] = -1
    for s, node in enumerate(graph.server_nodes):
        c = int(remaining[s])
        sr = tables.self_row[node]
        cap[sr] = c
        dist[sr] = 0
        srv[sr] = s
        q = deque()
        for y in range(rp[node], rp[node + 1]):
            if nbr[y] >= 0:
                q.append((rev[y], 1))
        while q:
            x, d = q.popleft()
            if not _better(c, d, s, cap[x], dist[x], srv[x]):
                continue
            cap[x] = c
            dist[x] = d
            srv[x] = s
            v = nbr[rev[x]]
            for y in range(rp[v], rp[v + 1]):
                if y != x and nbr[y] >= 0:
                    q.append((rev[y], d + 1))
    for v in range(len(rp) - 1):
        tables.best[v], tables.second[v] = _top2(rp, cap, dist, srv, v)


def st_place(tables, origin, demand):
    rp = tables.row_ptr
    nbr = tables.row_nbr
    rev = tables.row_rev
    cap = tables.cap
    dist = tables.dist
    srv = tables.srv
    v = origin
    back = -1
    while True:
        sr = tables.self_row[v]
        if sr >= 0 and cap[sr] >= demand:
            return int(srv[sr])
        best = -1
        for y in range(rp[v], rp[v + 1]):
            if y == back or nbr[y] < 0 or cap[y] < demand:
                continue
            if best < 0:
                best = y
                continue
            if dist[y] != dist[best]:
                if dist[y] < dist[best]:
                    best = y
            elif cap[y] != cap[best]:
                if cap[y] > cap[best]:
                    best = y
            elif srv[y] < srv[best]:
                best = y
        if best < 0:
            return -1 if v == origin else STUCK
        back = rev[best]
        v = nbr[best]


def _top2(rp, cap, dist, srv, v):
    b = -1
    s = -1
    for y in range(rp[v], rp[v + 1]):
        if b < 0 or _better(cap[y], dist[y], srv[y], cap[b], dist[b], srv[b]):
            s = b
            b = y
        elif s < 0 or _better(cap[y], dist[y], srv[y], cap[s], dist[s], srv[s]):
            s = y
    return b, s


def _retop(tables, v, r, improved):
    """Refresh the cached best/second rows of ``v`` after row ``r`` changed."""
    cap, dist, srv = tables.cap, tables.dist, tables.srv
    b, s = int(tables.best[v]), int(tables.second[v])

    def beats(x, y):
        return _better(cap[x], dist[x], srv[x], cap[y], dist[y], srv[y])

    if r == b:
        if s >= 0 and not beats(r, s):
            tables.best[v], tables.second[v] = _top2(tables.row_ptr, cap, dist, srv, v)
    elif r == s:
        if beats(r, b):
            tables.best[v], tables.second[v] = r, b
        elif not improved:
            tables.best[v], tables.second[v] = _top2(tables.row_ptr, cap, dist, srv, v)
    elif beats(r, b):
        tables.best[v], tables.second[v] = r, b
    elif s < 0 or beats(r, s):
        tables.second[v] = r


def st_update(tables, server_node, new_cap):
    """Propagate a capacity change through the tables; returns rows modified."""
    rp = tables.row_ptr
    nbr = tables.row_nbr
    rev = tables.row_rev
    cap = tables.cap
    dist = tables.dist
    srv = tables.srv
    sr = tables.self_row[server_node]
    discovered = {server_node}
    q = deque([(sr, int(new_cap), 0, int(srv[sr]))])
    modified = 0
    while q:
        r, c, d, sv = q.popleft()
        v = tables.row_node[r]
        b_old, s_old = int(tables.best[v]), int(tables.second[v])
        old_r = (cap[r], dist[r], srv[r])
        if old_r == (c, d, sv):
            continue
        modified += 1
        vb_old = old_r if b_old == r else (cap[b_old], dist[b_old], srv[b_old])
        vs_old = None
        if s_old >= 0:
            vs_old = old_r if s_old == r else (cap[s_old], dist[s_old], srv[s_old])
        improved = _better(c, d, sv, *old_r)
        cap[r] = c
        dist[r] = d
        srv[r] = sv
        _retop(tables, v, r, improved)
        b, s = int(tables.best[v]), int(tables.second[v])
        best_changed = b != b_old or (cap[b], dist[b], srv[b]) != vb_old
        second_changed = s != s_old or (
            s >= 0 and (cap[s], dist[s], srv[s]) != vs_old
        )
        if best_changed:
            for y in range(rp[v], rp[v + 1]):
                n = nbr[y]
                if n < 0 or n in discovered:
                    continue
                discovered.add(n)
                m = s if y == b else b
                q.append(_message(rev[y], m, cap, dist, srv))
        elif second_changed and nbr[b] >= 0:
            n = nbr[b]
            if n not in discovered:
                discovered.add(n)
                q.append(_message(rev[b], s, cap, dist, srv))
    return modified


def _message(target_row, m, cap, dist, srv):
    if m < 0 or cap[m] == EMPTY_CAP:
        return (target_row, EMPTY_CAP, 0, -1)
    return (target_row, int(cap[m]), int(dist[m]) + 1, int(srv[m]))


def _place_loop(find, graph, remaining, origin_nodes, vnf_ptr, demands, out, commit=None):
    sn = graph.server_nodes
    for i in range(len(origin_nodes)):
        at = int(origin_nodes[i])
        for j in range(vnf_ptr[i], vnf_ptr[i + 1]):
            dmd = int(demands[j])
            s = find(at, dmd)
            if s < 0:
                return j
            remaining[s] -= dmd
            if commit is not None:
                commit(s)
            out[j] = s
            at = int(sn[s])
    return -1


def place_simple(graph, remaining, origin_nodes, vnf_ptr, demands, out):
    return _place_loop(
        lambda at, d: simple_nearest(graph, remaining, at, d),
        graph, remaining, origin_nodes, vnf_ptr, demands, out,
    )


def place_cached(order, graph, remaining, origin_nodes, vnf_ptr, demands, out):
    return _place_loop(
        lambda at, d: cached_nearest(order[at], remaining, d),
        graph, remaining, origin_nodes, vnf_ptr, demands, out,
    )


def place_spanning(tables, graph, remaining, origin_nodes, vnf_ptr, demands, out):
    def find(at, d):
        s = st_place(tables, at, d)
        if s == STUCK:
            raise RuntimeError("spanning tables inconsistent with capacities")
        return s

    sn = graph.server_nodes
    return _place_loop(
        find, graph, remaining, origin_nodes, vnf_ptr, demands, out,
        commit=lambda s: st_update(tables, int(sn[s]), int(remaining[s])),
    )


def route_ranges(graph):
    """Per adjacency slot, merged inclusive server-ID ranges it is a next hop toward."""
    ip = graph.indptr
    ix = graph.indices
    n_slots = len(ix)
    ranges = [[] for _ in range(n_slots)]
    owner = np.repeat(np.arange(graph.n_nodes), np.diff(ip))
    for t, node in enumerate(graph.server_nodes):
        dist = bfs_distances(ip, ix, int(node))
        hits = np.nonzero(dist[ix] == dist[owner] - 1)[0]
        for slot in hits.tolist():
            rs = ranges[slot]
            if rs and rs[-1][1] == t - 1:
                rs[-1][1] = t
            else:
                rs.append([t, t])
    counts = np.array([len(r) for r in ranges], dtype=np.int64)
    slot_ptr = np.zeros(n_slots + 1, dtype=np.int64)
    np.cumsum(counts, out=slot_ptr[1:])
    lo = np.empty(int(slot_ptr[-1]), dtype=np.int32)
    hi = np.empty(int(slot_ptr[-1]), dtype=np.int32)
    k = 0
    for rs in ranges:
        for a, b in rs:
            lo[k] = a
            hi[k] = b
            k += 1
    return slot_ptr, lo, hi


def _slot_has(ranges, slot, t):
    a = ranges.slot_ptr[slot]
    b = ranges.slot_ptr[slot + 1]
    if a == b:
        return False
    k = int(np.searchsorted(ranges.hi[a:b], t)) + a
    return k < b and ranges.lo[k] <= t


def next_hops(graph, ranges, v, t):
    ip = graph.indptr
    return [
        int(graph.indices[slot])
        for slot in range(ip[v], ip[v + 1])
        if _slot_has(ranges, slot, t)
    ]


def mm1k(lam, mu, k):
    """Sojourn time and blocking probability of an M/M/1/K queue."""
    if lam <= 0.0:
        return 1.0 / mu, 0.0
    rho = lam / mu
    r = rho if rho <= 1.0 else 1.0 / rho
    w = 1.0
    z = 0.0
    m = 0.0
    m1 = 0.0  # sum i r^(i-1): L / rho without underflow at tiny rho
    prev = 0.0
    for i in range(k + 1):
        z += w
        m += i * w
        m1 += i * prev
        prev = w
        if i < k:
            w *= r
    if rho <= 1.0:
        p = w / z
        return m1 / z / (mu * (1.0 - p)), p
    p = 1.0 / z
    length = k - m / z
    return length / (lam * (1.0 - p)), p


def _walk(graph, ranges, vnf_nodes, vnf_ptr, lam, p, w, load, lat_out, loss_out):
    """One pass over every service chain, pushing ECMP-split mass through nodes."""
    ns = graph.node_server
    n_svc = len(vnf_ptr) - 1
    for i in range(n_svc):
        mass = float(lam[i])
        latm = 0.0
        prev = -1
        for j in range(vnf_ptr[i], vnf_ptr[i + 1]):
            node = int(vnf_nodes[j])
            if prev >= 0 and node != prev:
                mass, latm = _segment(graph, ranges, prev, node, int(ns[node]),
                                      mass, latm, p, w, load)
            if load is not None:
                load[node] += mass
            latm = (latm + mass * w[node]) * (1.0 - p[node])
            mass *= 1.0 - p[node]
            prev = node
        if lat_out is not None:
            lat_out[i] = latm / mass if mass > 0.0 else float("inf")
            loss_out[i] = 1.0 - mass / float(lam[i])


def _segment(graph, ranges, src, dst, t, mass, latm, p, w, load):
    frontier = {src: (mass, latm)}
    while True:
        nxt = {}
        arrived = None
        for v, (m, l) in frontier.items():
            hops = next_hops(graph, ranges, v, t)
            share = 1.0 / len(hops)
            for u in hops:
                if u == dst:
                    a = arrived or (0.0, 0.0)
                    arrived = (a[0] + m * share, a[1] + l * share)
                else:
                    a = nxt.get(u, (0.0, 0.0))
                    nxt[u] = (a[0] + m * share, a[1] + l * share)
        if arrived is not None:
            return arrived
        frontier = {}
        for u in sorted(nxt):
            m, l = nxt[u]
            if load is not None:
                load[u] += m
            keep = 1.0 - p[u]
            frontier[u] = (m * keep, (l + m * w[u]) * keep)


def _metrics(load, mu, k):
    n = len(load)
    w = np.empty(n)
    p = np.empty(n)
    for v in range(n):
        w[v], p[v] = mm1k(float(load[v]), float(mu[v]), k)
    return w, p


def evaluate_flows(graph, ranges, vnf_nodes, vnf_ptr, lam, mu, k):
    """Offered loads, one drop-aware correction pass, then per-service metrics.

    Returns (raw_load, load, p, w, latency, loss).
    """
    n = graph.n_nodes
    zeros = np.zeros(n)
    raw = np.zeros(n)
    _walk(graph, ranges, vnf_nodes, vnf_ptr, lam, zeros, zeros, raw, None, None)
    _, p0 = _metrics(raw, mu, k)
    load = np.zeros(n)
    _walk(graph, ranges, vnf_nodes, vnf_ptr, lam, p0, zeros, load, None, None)
    w, p = _metrics(load, mu, k)
    n_svc = len(vnf_ptr) - 1
    lat = np.empty(n_svc)
    loss = np.empty(n_svc)
    _walk(graph, ranges, vnf_nodes, vnf_ptr, lam, p, w, None, lat, loss)
    return raw, load, p, w, lat, loss
