# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_pure.py`` (same names, same contracts)."""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int32_t, int64_t
from libc.math cimport INFINITY

cnp.import_array()

NAME = "native"

cdef int64_t _EMPTY = -1
cdef int _STUCK = -2
EMPTY_CAP = -1
STUCK = -2



cdef int _bfs(const int32_t[::1] ip, const int32_t[::1] ix, int source,
              int32_t[::1] dist, int32_t[::1] queue) noexcept nogil:
    cdef int head = 0, tail = 0, v, u, k, dv
    dist[source] = 0
    queue[tail] = source
    tail += 1
    while head < tail:
        v = queue[head]
        head += 1
        dv = dist[v] + 1
        for k in range(ip[v], ip[v + 1]):
            u = ix[k]
            if dist[u] < 0:
                dist[u] = dv
                queue[tail] = u
                tail += 1
    return tail


def bfs_distances(const int32_t[::1] indptr, const int32_t[::1] indices, int source):
    cdef int n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int32)
    queue = np.empty(n, dtype=np.int32)
    _bfs(indptr, indices, source, dist, queue)
    return dist


cdef class _SimpleScratch:
    cdef int32_t[::1] mark
    cdef int32_t[::1] level
    cdef int32_t[::1] nxt
    cdef int epoch

    def __init__(self, int n):
        self.mark = np.zeros(n, dtype=np.int32)
        self.level = np.empty(n, dtype=np.int32)
        self.nxt = np.empty(n, dtype=np.int32)
        self.epoch = 0


cdef int _simple(const int32_t[::1] ip, const int32_t[::1] ix, const int32_t[::1] ns,
                 const int64_t[::1] rem, int origin, int64_t demand,
                 _SimpleScratch sc):
    cdef int32_t[::1] mark = sc.mark
    cdef int32_t[::1] level = sc.level
    cdef int32_t[::1] nxt = sc.nxt
    cdef int32_t[::1] tmp
    cdef int nl = 1, nn, i, k, v, u, s, best
    cdef int ep
    sc.epoch += 1
    if sc.epoch == 2147483647:
        mark[:] = 0
        sc.epoch = 1
    ep = sc.epoch
    mark[origin] = ep
    level[0] = origin
    while nl > 0:
        best = -1
        for i in range(nl):
            s = ns[level[i]]
            if s >= 0 and rem[s] >= demand and (best < 0 or s < best):
                best = s
        if best >= 0:
            return best
        nn = 0
        for i in range(nl):
            v = level[i]
            for k in range(ip[v], ip[v + 1]):
                u = ix[k]
                if mark[u] != ep:
                    mark[u] = ep
                    nxt[nn] = u
                    nn += 1
        tmp = level
        level = nxt
        nxt = tmp
        nl = nn
    return -1


def simple_nearest(graph, const int64_t[::1] remaining, int origin, int64_t demand):
    sc = _SimpleScratch(graph.n_nodes)
    return _simple(graph.indptr, graph.indices, graph.node_server, remaining,
                   origin, demand, sc)


def nearest_order(graph, origins):
    cdef const int32_t[::1] ip = graph.indptr
    cdef const int32_t[::1] ix = graph.indices
    cdef const int32_t[::1] sn = graph.server_nodes
    cdef const int32_t[::1] orig = np.ascontiguousarray(origins, dtype=np.int32)
    cdef int n = graph.n_nodes, ns = graph.n_servers, no = orig.shape[0]
    cdef int32_t[::1] dist = np.full(n, -1, dtype=np.int32)
    cdef int32_t[::1] queue = np.empty(n, dtype=np.int32)
    cdef int32_t[::1] count = np.zeros(n + 2, dtype=np.int32)
    out_arr = np.empty((no, ns), dtype=np.int32)
    cdef int32_t[:, ::1] out = out_arr
    cdef int r, i, reached, d, maxd, s
    with nogil:
        for r in range(no):
            reached = _bfs(ip, ix, orig[r], dist, queue)
            maxd = 0
            for i in range(reached):
                if dist[queue[i]] > maxd:
                    maxd = dist[queue[i]]
            for i in range(maxd + 2):
                count[i] = 0
            for s in range(ns):
                d = dist[sn[s]]
                count[d + 1] += 1
            for i in range(1, maxd + 2):
                count[i] += count[i - 1]
            for s in range(ns):
                d = dist[sn[s]]
                out[r, count[d]] = s
                count[d] += 1
            for i in range(reached):
                dist[queue[i]] = -1
    return out_arr


cdef inline int _cached(const int32_t[:, ::1] order, int row, const int64_t[::1] rem,
                        int64_t demand) noexcept nogil:
    cdef int i, s
    for i in range(order.shape[1]):
        s = order[row, i]
        if rem[s] >= demand:
            return s
    return -1


def cached_nearest(order_row, const int64_t[::1] remaining, int64_t demand):
    cdef const int32_t[:, ::1] o = np.ascontiguousarray(order_row, dtype=np.int32).reshape(1, -1)
    return _cached(o, 0, remaining, demand)


cdef inline bint _better(int64_t c1, int d1, int s1, int64_t c2, int d2, int s2) noexcept nogil:
    if c1 != c2:
        return c1 > c2
    if d1 != d2:
        return d1 < d2
    return s1 < s2


cdef class _Tables:
    """Typed view over a SpanningTables instance plus update scratch."""
    cdef const int32_t[::1] rp
    cdef const int32_t[::1] nbr
    cdef const int32_t[::1] rev
    cdef const int32_t[::1] owner
    cdef const int32_t[::1] selfr
    cdef int64_t[::1] cap
    cdef int32_t[::1] dist
    cdef int32_t[::1] srv
    cdef int32_t[::1] tb
    cdef int32_t[::1] ts
    cdef int32_t[::1] mark
    cdef int32_t[::1] q_row
    cdef int64_t[::1] q_cap
    cdef int32_t[::1] q_dist
    cdef int32_t[::1] q_srv
    cdef int epoch

    def __init__(self, t):
        self.rp = t.row_ptr
        self.nbr = t.row_nbr
        self.rev = t.row_rev
        self.owner = t.row_node
        self.selfr = t.self_row
        self.cap = t.cap
        self.dist = t.dist
        self.srv = t.srv
        self.tb = t.best
        self.ts = t.second
        n = t.row_ptr.shape[0] - 1
        r = t.cap.shape[0]
        self.mark = np.zeros(n, dtype=np.int32)
        self.q_row = np.empty(r + 1, dtype=np.int32)
        self.q_cap = np.empty(r + 1, dtype=np.int64)
        self.q_dist = np.empty(r + 1, dtype=np.int32)
        self.q_srv = np.empty(r + 1, dtype=np.int32)
        self.epoch = 0


cdef inline void _top2(_Tables t, int v, int32_t* b, int32_t* s) noexcept nogil:
    cdef int y
    b[0] = -1
    s[0] = -1
    for y in range(t.rp[v], t.rp[v + 1]):
        if b[0] < 0 or _better(t.cap[y], t.dist[y], t.srv[y], t.cap[b[0]], t.dist[b[0]], t.srv[b[0]]):
            s[0] = b[0]
            b[0] = y
        elif s[0] < 0 or _better(t.cap[y], t.dist[y], t.srv[y], t.cap[s[0]], t.dist[s[0]], t.srv[s[0]]):
            s[0] = y


cdef inline void _retop(_Tables t, int v, int r, bint improved) noexcept nogil:
    # refresh cached best/second of v after row r was rewritten
    cdef int32_t b = t.tb[v], s = t.ts[v]
    if r == b:
        if s >= 0 and not _better(t.cap[r], t.dist[r], t.srv[r], t.cap[s], t.dist[s], t.srv[s]):
            _top2(t, v, &t.tb[v], &t.ts[v])
    elif r == s:
        if _better(t.cap[r], t.dist[r], t.srv[r], t.cap[b], t.dist[b], t.srv[b]):
            t.tb[v] = r
            t.ts[v] = b
        elif not improved:
            _top2(t, v, &t.tb[v], &t.ts[v])
    elif _better(t.cap[r], t.dist[r], t.srv[r], t.cap[b], t.dist[b], t.srv[b]):
        t.ts[v] = b
        t.tb[v] = r
    elif s < 0 or _better(t.cap[r], t.dist[r], t.srv[r], t.cap[s], t.dist[s], t.srv[s]):
        t.ts[v] = r


def st_build(tables, graph, const int64_t[::1] remaining):
    cdef _Tables t = _Tables(tables)
    cdef const int32_t[::1] sn = graph.server_nodes
    cdef int ns = graph.n_servers
    cdef int s, node, sr, y, x, d, v, head, tail
    cdef int64_t c
    cdef int32_t[::1] qr = t.q_row
    cdef int32_t[::1] qd = t.q_dist
    with nogil:
        t.cap[:] = _EMPTY
        t.dist[:] = 0
        t.srv[:] = -1
        for s in range(ns):
            node = sn[s]
            c = remaining[s]
            sr = t.selfr[node]
            t.cap[sr] = c
            t.dist[sr] = 0
            t.srv[sr] = s
            head = 0
            tail = 0
            for y in range(t.rp[node], t.rp[node + 1]):
                if t.nbr[y] >= 0:
                    qr[tail] = t.rev[y]
                    qd[tail] = 1
                    tail += 1
            while head < tail:
                x = qr[head]
                d = qd[head]
                head += 1
                if not _better(c, d, s, t.cap[x], t.dist[x], t.srv[x]):
                    continue
                t.cap[x] = c
                t.dist[x] = d
                t.srv[x] = s
                v = t.owner[x]
                for y in range(t.rp[v], t.rp[v + 1]):
                    if y != x and t.nbr[y] >= 0:
                        qr[tail] = t.rev[y]
                        qd[tail] = d + 1
                        tail += 1
        for v in range(t.rp.shape[0] - 1):
            _top2(t, v, &t.tb[v], &t.ts[v])


cdef int _st_place(_Tables t, int origin, int64_t demand) noexcept nogil:
    cdef int v = origin, back = -1, sr, y, best
    while True:
        sr = t.selfr[v]
        if sr >= 0 and t.cap[sr] >= demand:
            return t.srv[sr]
        best = -1
        for y in range(t.rp[v], t.rp[v + 1]):
            if y == back or t.nbr[y] < 0 or t.cap[y] < demand:
                continue
            if best < 0:
                best = y
            elif t.dist[y] != t.dist[best]:
                if t.dist[y] < t.dist[best]:
                    best = y
            elif t.cap[y] != t.cap[best]:
                if t.cap[y] > t.cap[best]:
                    best = y
            elif t.srv[y] < t.srv[best]:
                best = y
        if best < 0:
            if v == origin:
                return -1
            return _STUCK
        back = t.rev[best]
        v = t.nbr[best]


def st_place(tables, int origin, int64_t demand):
    return _st_place(_Tables(tables), origin, demand)


cdef inline int _push(_Tables t, int tail, int target, int m) noexcept nogil:
    t.q_row[tail] = target
    if m < 0 or t.cap[m] == _EMPTY:
        t.q_cap[tail] = _EMPTY
        t.q_dist[tail] = 0
        t.q_srv[tail] = -1
    else:
        t.q_cap[tail] = t.cap[m]
        t.q_dist[tail] = t.dist[m] + 1
        t.q_srv[tail] = t.srv[m]
    return tail + 1


cdef int _st_update(_Tables t, int server_node, int64_t new_cap) noexcept nogil:
    cdef int head = 0, tail = 0, modified = 0, ep
    cdef int r, d, sv, v, b_old, s_old, b, s, y, n
    cdef bint improved
    cdef int64_t c, oc, bc_old, sc_old
    cdef int od, osv, bd_old, bs_old, sd_old, ss_old
    cdef bint best_changed, second_changed
    t.epoch += 1
    if t.epoch == 2147483647:
        t.mark[:] = 0
        t.epoch = 1
    ep = t.epoch
    t.mark[server_node] = ep
    r = t.selfr[server_node]
    t.q_row[0] = r
    t.q_cap[0] = new_cap
    t.q_dist[0] = 0
    t.q_srv[0] = t.srv[r]
    tail = 1
    while head < tail:
        r = t.q_row[head]
        c = t.q_cap[head]
        d = t.q_dist[head]
        sv = t.q_srv[head]
        head += 1
        oc = t.cap[r]
        od = t.dist[r]
        osv = t.srv[r]
        if oc == c and od == d and osv == sv:
            continue
        modified += 1
        v = t.owner[r]
        b_old = t.tb[v]
        s_old = t.ts[v]
        if b_old == r:
            bc_old = oc; bd_old = od; bs_old = osv
        else:
            bc_old = t.cap[b_old]; bd_old = t.dist[b_old]; bs_old = t.srv[b_old]
        sc_old = 0; sd_old = 0; ss_old = 0
        if s_old >= 0:
            if s_old == r:
                sc_old = oc; sd_old = od; ss_old = osv
            else:
                sc_old = t.cap[s_old]; sd_old = t.dist[s_old]; ss_old = t.srv[s_old]
        improved = _better(c, d, sv, oc, od, osv)
        t.cap[r] = c
        t.dist[r] = d
        t.srv[r] = sv
        _retop(t, v, r, improved)
        b = t.tb[v]
        s = t.ts[v]
        best_changed = (b != b_old or t.cap[b] != bc_old or t.dist[b] != bd_old
                        or t.srv[b] != bs_old)
        second_changed = s != s_old or (s >= 0 and (
            t.cap[s] != sc_old or t.dist[s] != sd_old or t.srv[s] != ss_old))
        if best_changed:
            for y in range(t.rp[v], t.rp[v + 1]):
                n = t.nbr[y]
                if n < 0 or t.mark[n] == ep:
                    continue
                t.mark[n] = ep
                if y == b:
                    tail = _push(t, tail, t.rev[y], s)
                else:
                    tail = _push(t, tail, t.rev[y], b)
        elif second_changed and t.nbr[b] >= 0:
            n = t.nbr[b]
            if t.mark[n] != ep:
                t.mark[n] = ep
                tail = _push(t, tail, t.rev[b], s)
    return modified


def st_update(tables, int server_node, int64_t new_cap):
    return _st_update(_Tables(tables), server_node, new_cap)


def place_simple(graph, int64_t[::1] remaining, const int32_t[::1] origin_nodes,
                 const int32_t[::1] vnf_ptr, const int64_t[::1] demands, int32_t[::1] out):
    cdef const int32_t[::1] ip = graph.indptr
    cdef const int32_t[::1] ix = graph.indices
    cdef const int32_t[::1] nsv = graph.node_server
    cdef const int32_t[::1] sn = graph.server_nodes
    cdef _SimpleScratch sc = _SimpleScratch(graph.n_nodes)
    cdef int i, j, at, s
    for i in range(origin_nodes.shape[0]):
        at = origin_nodes[i]
        for j in range(vnf_ptr[i], vnf_ptr[i + 1]):
            s = _simple(ip, ix, nsv, remaining, at, demands[j], sc)
            if s < 0:
                return j
            remaining[s] -= demands[j]
            out[j] = s
            at = sn[s]
    return -1


cdef int _place_cached(const int32_t[:, ::1] od, const int32_t[::1] sn, int64_t[::1] remaining,
                       const int32_t[::1] origin_nodes, const int32_t[::1] vnf_ptr,
                       const int64_t[::1] demands, int32_t[::1] out) noexcept nogil:
    cdef int i, j, at, s
    for i in range(origin_nodes.shape[0]):
        at = origin_nodes[i]
        for j in range(vnf_ptr[i], vnf_ptr[i + 1]):
            s = _cached(od, at, remaining, demands[j])
            if s < 0:
                return j
            remaining[s] -= demands[j]
            out[j] = s
            at = sn[s]
    return -1


def place_cached(order, graph, int64_t[::1] remaining, const int32_t[::1] origin_nodes,
                 const int32_t[::1] vnf_ptr, const int64_t[::1] demands, int32_t[::1] out):
    cdef const int32_t[:, ::1] od = order
    cdef const int32_t[::1] sn = graph.server_nodes
    cdef int res
    with nogil:
        res = _place_cached(od, sn, remaining, origin_nodes, vnf_ptr, demands, out)
    return res


cdef int _place_spanning(_Tables t, const int32_t[::1] sn, int64_t[::1] remaining,
                         const int32_t[::1] origin_nodes, const int32_t[::1] vnf_ptr,
                         const int64_t[::1] demands, int32_t[::1] out) noexcept nogil:
    cdef int i, j, at, s
    for i in range(origin_nodes.shape[0]):
        at = origin_nodes[i]
        for j in range(vnf_ptr[i], vnf_ptr[i + 1]):
            s = _st_place(t, at, demands[j])
            if s == _STUCK:
                return _STUCK
            if s < 0:
                return j
            remaining[s] -= demands[j]
            _st_update(t, sn[s], remaining[s])
            out[j] = s
            at = sn[s]
    return -1


def place_spanning(tables, graph, int64_t[::1] remaining, const int32_t[::1] origin_nodes,
                   const int32_t[::1] vnf_ptr, const int64_t[::1] demands, int32_t[::1] out):
    cdef _Tables t = _Tables(tables)
    cdef const int32_t[::1] sn = graph.server_nodes
    cdef int res
    with nogil:
        res = _place_spanning(t, sn, remaining, origin_nodes, vnf_ptr, demands, out)
    if res == _STUCK:
        raise RuntimeError("spanning tables inconsistent with capacities")
    return res


def route_ranges(graph):
    cdef const int32_t[::1] ip = graph.indptr
    cdef const int32_t[::1] ix = graph.indices
    cdef const int32_t[::1] sn = graph.server_nodes
    cdef int n = graph.n_nodes, ns = graph.n_servers
    cdef int n_slots = ix.shape[0]
    cdef int32_t[::1] dist = np.full(n, -1, dtype=np.int32)
    cdef int32_t[::1] queue = np.empty(n, dtype=np.int32)
    cdef int32_t[::1] last = np.full(n_slots, -2, dtype=np.int32)
    cdef int64_t[::1] cnt = np.zeros(n_slots, dtype=np.int64)
    slot_ptr_arr = np.zeros(n_slots + 1, dtype=np.int64)
    cdef int64_t[::1] slot_ptr = slot_ptr_arr
    cdef int64_t[::1] pos
    cdef int32_t[::1] lo
    cdef int32_t[::1] hi
    cdef int t, v, k, reached, i, dv
    cdef int64_t total, w
    with nogil:
        for t in range(ns):
            reached = _bfs(ip, ix, sn[t], dist, queue)
            for v in range(n):
                dv = dist[v] - 1
                for k in range(ip[v], ip[v + 1]):
                    if dist[ix[k]] == dv:
                        if last[k] != t - 1:
                            cnt[k] += 1
                        last[k] = t
            for i in range(reached):
                dist[queue[i]] = -1
        total = 0
        for k in range(n_slots):
            slot_ptr[k] = total
            total += cnt[k]
        slot_ptr[n_slots] = total
    lo_arr = np.empty(total, dtype=np.int32)
    hi_arr = np.empty(total, dtype=np.int32)
    lo = lo_arr
    hi = hi_arr
    pos = np.array(slot_ptr_arr[:n_slots], dtype=np.int64)
    last[:] = -2
    with nogil:
        for t in range(ns):
            reached = _bfs(ip, ix, sn[t], dist, queue)
            for v in range(n):
                dv = dist[v] - 1
                for k in range(ip[v], ip[v + 1]):
                    if dist[ix[k]] == dv:
                        if last[k] != t - 1:
                            w = pos[k]
                            lo[w] = t
                            hi[w] = t
                            pos[k] += 1
                        else:
                            hi[pos[k] - 1] = t
                        last[k] = t
            for i in range(reached):
                dist[queue[i]] = -1
    return slot_ptr_arr, lo_arr, hi_arr


cdef inline bint _slot_has(const int64_t[::1] sp, const int32_t[::1] lo,
                           const int32_t[::1] hi, int slot, int t) noexcept nogil:
    cdef int64_t a = sp[slot], b = sp[slot + 1], mid
    while a < b:
        mid = (a + b) >> 1
        if hi[mid] < t:
            a = mid + 1
        else:
            b = mid
    return a < sp[slot + 1] and lo[a] <= t


def next_hops(graph, ranges, int v, int t):
    cdef const int32_t[::1] ip = graph.indptr
    cdef const int32_t[::1] ix = graph.indices
    cdef const int64_t[::1] sp = ranges.slot_ptr
    cdef const int32_t[::1] lo = ranges.lo
    cdef const int32_t[::1] hi = ranges.hi
    cdef int k
    return [ix[k] for k in range(ip[v], ip[v + 1]) if _slot_has(sp, lo, hi, k, t)]


cdef inline void _mm1k(double lam, double mu, int k, double* w_out, double* p_out) noexcept nogil:
    cdef double rho, r, w, z, m, m1, prev, p, length
    cdef int i
    if lam <= 0.0:
        w_out[0] = 1.0 / mu
        p_out[0] = 0.0
        return
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
        w_out[0] = m1 / z / (mu * (1.0 - p))
        p_out[0] = p
        return
    p = 1.0 / z
    length = k - m / z
    w_out[0] = length / (lam * (1.0 - p))
    p_out[0] = p


def mm1k(double lam, double mu, int k):
    cdef double w, p
    _mm1k(lam, mu, k, &w, &p)
    return w, p


cdef class _Flow:
    cdef const int32_t[::1] ip
    cdef const int32_t[::1] ix
    cdef const int32_t[::1] nsv
    cdef const int64_t[::1] sp
    cdef const int32_t[::1] lo
    cdef const int32_t[::1] hi
    cdef double[::1] acc_m
    cdef double[::1] acc_l
    cdef int32_t[::1] mark
    cdef int32_t[::1] cur
    cdef int32_t[::1] nxt
    cdef double[::1] cur_m
    cdef double[::1] cur_l
    cdef int32_t[::1] hop
    cdef int epoch

    def __init__(self, graph, ranges):
        n = graph.n_nodes
        self.ip = graph.indptr
        self.ix = graph.indices
        self.nsv = graph.node_server
        self.sp = ranges.slot_ptr
        self.lo = ranges.lo
        self.hi = ranges.hi
        self.acc_m = np.zeros(n)
        self.acc_l = np.zeros(n)
        self.mark = np.zeros(n, dtype=np.int32)
        self.cur = np.empty(n, dtype=np.int32)
        self.nxt = np.empty(n, dtype=np.int32)
        self.cur_m = np.empty(n)
        self.cur_l = np.empty(n)
        self.hop = np.empty(n, dtype=np.int32)
        self.epoch = 0


cdef void _sort_ints(int32_t[::1] a, int n) noexcept nogil:
    cdef int i, j, x
    for i in range(1, n):
        x = a[i]
        j = i - 1
        while j >= 0 and a[j] > x:
            a[j + 1] = a[j]
            j -= 1
        a[j + 1] = x


cdef void _segment(_Flow f, int src, int dst, int t, double* mass, double* latm,
                   const double[::1] p, const double[::1] w, double[::1] load,
                   bint use_load) noexcept nogil:
    cdef int nc = 1, nn, i, k, v, u, nh, ep
    cdef double m, l, share, arr_m = 0.0, arr_l = 0.0, keep
    cdef bint arrived = False
    f.cur[0] = src
    f.cur_m[0] = mass[0]
    f.cur_l[0] = latm[0]
    while True:
        f.epoch += 1
        if f.epoch == 2147483647:
            f.mark[:] = 0
            f.epoch = 1
        ep = f.epoch
        nn = 0
        for i in range(nc):
            v = f.cur[i]
            m = f.cur_m[i]
            l = f.cur_l[i]
            nh = 0
            for k in range(f.ip[v], f.ip[v + 1]):
                if _slot_has(f.sp, f.lo, f.hi, k, t):
                    f.hop[nh] = f.ix[k]
                    nh += 1
            share = 1.0 / nh
            for k in range(nh):
                u = f.hop[k]
                if u == dst:
                    arrived = True
                    arr_m += m * share
                    arr_l += l * share
                else:
                    if f.mark[u] != ep:
                        f.mark[u] = ep
                        f.acc_m[u] = 0.0
                        f.acc_l[u] = 0.0
                        f.nxt[nn] = u
                        nn += 1
                    f.acc_m[u] += m * share
                    f.acc_l[u] += l * share
        if arrived:
            mass[0] = arr_m
            latm[0] = arr_l
            return
        _sort_ints(f.nxt, nn)
        for i in range(nn):
            u = f.nxt[i]
            m = f.acc_m[u]
            l = f.acc_l[u]
            if use_load:
                load[u] += m
            keep = 1.0 - p[u]
            f.cur[i] = u
            f.cur_m[i] = m * keep
            f.cur_l[i] = (l + m * w[u]) * keep
        nc = nn


cdef void _walk(_Flow f, const int32_t[::1] vnf_nodes, const int32_t[::1] vnf_ptr,
                const double[::1] lam, const double[::1] p, const double[::1] w,
                double[::1] load, bint use_load, double[::1] lat, double[::1] loss,
                bint use_out) noexcept nogil:
    cdef int i, j, node, prev
    cdef double mass, latm
    for i in range(vnf_ptr.shape[0] - 1):
        mass = lam[i]
        latm = 0.0
        prev = -1
        for j in range(vnf_ptr[i], vnf_ptr[i + 1]):
            node = vnf_nodes[j]
            if prev >= 0 and node != prev:
                _segment(f, prev, node, f.nsv[node], &mass, &latm, p, w, load, use_load)
            if use_load:
                load[node] += mass
            latm = (latm + mass * w[node]) * (1.0 - p[node])
            mass *= 1.0 - p[node]
            prev = node
        if use_out:
            if mass > 0.0:
                lat[i] = latm / mass
            else:
                lat[i] = INFINITY
            loss[i] = 1.0 - mass / lam[i]


def evaluate_flows(graph, ranges, const int32_t[::1] vnf_nodes, const int32_t[::1] vnf_ptr,
                   const double[::1] lam, const double[::1] mu, int k):
    cdef int n = graph.n_nodes, n_svc = vnf_ptr.shape[0] - 1, v
    cdef _Flow f = _Flow(graph, ranges)
    raw_a = np.zeros(n)
    load_a = np.zeros(n)
    p_a = np.zeros(n)
    w_a = np.zeros(n)
    lat_a = np.empty(n_svc)
    loss_a = np.empty(n_svc)
    cdef double[::1] raw = raw_a
    cdef double[::1] load = load_a
    cdef double[::1] p = p_a
    cdef double[::1] w = w_a
    cdef double[::1] lat = lat_a
    cdef double[::1] loss = loss_a
    cdef double[::1] zeros = np.zeros(n)
    cdef double wv, pv
    with nogil:
        _walk(f, vnf_nodes, vnf_ptr, lam, zeros, zeros, raw, True, lat, loss, False)
        for v in range(n):
            _mm1k(raw[v], mu[v], k, &wv, &pv)
            p[v] = pv
        _walk(f, vnf_nodes, vnf_ptr, lam, p, zeros, load, True, lat, loss, False)
        for v in range(n):
            _mm1k(load[v], mu[v], k, &wv, &pv)
            w[v] = wv
            p[v] = pv
        _walk(f, vnf_nodes, vnf_ptr, lam, p, w, load, False, lat, loss, True)
    return raw_a, load_a, p_a, w_a, lat_a, loss_a
