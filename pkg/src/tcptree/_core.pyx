# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: mark generation, event sweep and bootstrap closure.

Mirrors ``_pycore`` exactly; every arithmetic step is an IEEE basic
operation in the same order, so both paths produce identical bits.
"""

import math

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, sqrt
from libc.stdint cimport int8_t, int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc, realloc

cnp.import_array()

DEF RULE_THRESHOLD = 0
DEF RULE_THRESHOLD0 = 1
DEF RULE_LINEAR = 2
DEF RULE_BOOTSTRAP = 3

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t C_REP = 0xD1B54A32D192ED03ULL
cdef uint64_t C_SITE = 0xABC98388FB8FAC03ULL
cdef uint64_t C_KIND = 0x8CB92BA72F3D8DD7ULL
cdef uint64_t COUNT_SALT = 0x243F6A8885A308D3ULL
cdef uint64_t TIME_SALT = 0x13198A2E03707344ULL
cdef double TWO53 = 1.0 / 9007199254740992.0

cdef enum:
    K_DEATH = 0
    K_BIRTH = 1
    K_AUX = 2
    K_THIN = 3
    K_INIT = 4


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t replica_key(uint64_t seed, uint64_t replica) noexcept nogil:
    cdef uint64_t s = mix64(seed + GOLDEN)
    return mix64(s ^ ((replica + 1) * C_REP))


cdef inline uint64_t site_key(uint64_t rk, uint64_t site, uint64_t kind) noexcept nogil:
    cdef uint64_t sk = mix64(rk ^ ((site + 1) * C_SITE))
    return mix64(sk ^ ((kind + 1) * C_KIND))


cdef inline double unit(uint64_t key, uint64_t counter) noexcept nogil:
    cdef uint64_t z = mix64(key + (counter + 1) * GOLDEN)
    return (<double>(z >> 11) + 0.5) * TWO53


cdef struct Events:
    double *t
    int64_t *site
    int8_t *kind
    double *aux
    int64_t n
    int64_t cap


cdef int ev_reserve(Events *ev, int64_t need) noexcept nogil:
    cdef int64_t cap
    if need <= ev.cap:
        return 0
    cap = ev.cap * 2
    if cap < need:
        cap = need
    if cap < 64:
        cap = 64
    ev.t = <double *> realloc(ev.t, cap * sizeof(double))
    ev.site = <int64_t *> realloc(ev.site, cap * sizeof(int64_t))
    ev.kind = <int8_t *> realloc(ev.kind, cap * sizeof(int8_t))
    ev.aux = <double *> realloc(ev.aux, cap * sizeof(double))
    if ev.t == NULL or ev.site == NULL or ev.kind == NULL or ev.aux == NULL:
        return -1
    ev.cap = cap
    return 0


cdef void ev_free(Events *ev) noexcept nogil:
    free(ev.t)
    free(ev.site)
    free(ev.kind)
    free(ev.aux)
    ev.t = NULL
    ev.site = NULL
    ev.kind = NULL
    ev.aux = NULL
    ev.n = 0
    ev.cap = 0


cdef struct Stream:
    double rate
    double dt
    double mu
    double emu
    int64_t kmax
    int64_t nseg


cdef int site_stream(Events *ev, Stream *sp, uint64_t rk, int64_t site, int kind,
                     double horizon, double keep_prob, double **buf, int64_t *bufcap) noexcept nogil:
    """Append the site's Poisson marks (sorted) to ev; returns -1 on OOM."""
    cdef uint64_t key, kc, kt, thk, axk
    cdef int64_t s, k, i, j, used = 0, start, n_kept, ordinal
    cdef double u, p, cdf, x
    cdef double *tb
    if sp.rate <= 0.0:
        return 0
    key = site_key(rk, <uint64_t> site, <uint64_t> kind)
    kc = mix64(key ^ COUNT_SALT)
    kt = mix64(key ^ TIME_SALT)
    if kind == K_BIRTH:
        thk = site_key(rk, <uint64_t> site, K_THIN)
        axk = site_key(rk, <uint64_t> site, K_AUX)
    start = 0
    for s in range(sp.nseg):
        u = unit(kc, <uint64_t> s)
        p = sp.emu
        cdf = p
        k = 0
        while u > cdf and k < sp.kmax:
            k += 1
            p = p * sp.mu / <double> k
            cdf += p
        if start + k > bufcap[0]:
            bufcap[0] = 2 * (start + k) + 16
            buf[0] = <double *> realloc(buf[0], bufcap[0] * sizeof(double))
            if buf[0] == NULL:
                return -1
        tb = buf[0]
        for i in range(k):
            tb[start + i] = <double> s * sp.dt + unit(kt, <uint64_t> (used + i)) * sp.dt
        used += k
        start += k
    tb = buf[0]
    # insertion sort of this site's times
    for i in range(1, start):
        x = tb[i]
        j = i - 1
        while j >= 0 and tb[j] > x:
            tb[j + 1] = tb[j]
            j -= 1
        tb[j + 1] = x
    if ev_reserve(ev, ev.n + start) != 0:
        return -1
    for ordinal in range(start):
        x = tb[ordinal]
        if x > horizon:
            break
        if kind == K_BIRTH:
            if keep_prob < 1.0 and not (unit(thk, <uint64_t> ordinal) < keep_prob):
                continue
            ev.aux[ev.n] = unit(axk, <uint64_t> ordinal)
        else:
            ev.aux[ev.n] = 0.0
        ev.t[ev.n] = x
        ev.site[ev.n] = site
        ev.kind[ev.n] = <int8_t> kind
        ev.n += 1
    return 0


cdef inline bint ev_less(Events *ev, int64_t a, int64_t b) noexcept nogil:
    if ev.t[a] != ev.t[b]:
        return ev.t[a] < ev.t[b]
    if ev.site[a] != ev.site[b]:
        return ev.site[a] < ev.site[b]
    return ev.kind[a] < ev.kind[b]


cdef int sort_events(Events *ev, double horizon, int64_t *order, int64_t *bucket_start) noexcept nogil:
    """Bucket sort by time into ``order`` (length ev.n); bucket_start has ev.n + 1 slots."""
    cdef int64_t n = ev.n, i, b, j, x, nb
    if n == 0:
        return 0
    nb = n
    for b in range(nb + 1):
        bucket_start[b] = 0
    for i in range(n):
        b = <int64_t> (ev.t[i] / horizon * nb)
        if b >= nb:
            b = nb - 1
        if b < 0:
            b = 0
        bucket_start[b + 1] += 1
    for b in range(nb):
        bucket_start[b + 1] += bucket_start[b]
    # place; reuse the tail slot counters via a second pass
    for i in range(n):
        b = <int64_t> (ev.t[i] / horizon * nb)
        if b >= nb:
            b = nb - 1
        if b < 0:
            b = 0
        order[bucket_start[b]] = i
        bucket_start[b] += 1
    # bucket_start[b] now marks the end of bucket b; insertion sort globally is
    # cheap because elements are already bucketed
    for i in range(1, n):
        x = order[i]
        j = i - 1
        while j >= 0 and ev_less(ev, x, order[j]):
            order[j + 1] = order[j]
            j -= 1
        order[j + 1] = x
    return 0


cdef struct Graph:
    int64_t n
    int64_t *nbr_ptr
    int64_t *nbr_idx
    int64_t *rev_ptr
    int64_t *rev_idx
    int32_t *n_boundary
    int8_t *frozen


cdef void do_sweep(Graph *g, int boundary_spin, int rule, int theta, double deg,
                   uint8_t *state, int64_t *cnt, Events *ev, int64_t *order,
                   double *samples, int64_t n_samp, int64_t *obs, int64_t n_obs,
                   uint8_t *rec, int64_t *occ) noexcept nogil:
    cdef int64_t i, v, w, e, q, si = 0, total = 0, c
    cdef bint ok
    for v in range(g.n):
        if g.frozen[v] >= 0:
            state[v] = <uint8_t> g.frozen[v]
    for v in range(g.n):
        total += state[v]
        c = 0
        for i in range(g.nbr_ptr[v], g.nbr_ptr[v + 1]):
            c += state[g.nbr_idx[i]]
        cnt[v] = c
    for q in range(ev.n):
        e = order[q]
        while si < n_samp and samples[si] < ev.t[e]:
            for i in range(n_obs):
                rec[si * n_obs + i] = state[obs[i]]
            occ[si] = total
            si += 1
        v = ev.site[e]
        if g.frozen[v] >= 0:
            continue
        if ev.kind[e] == K_DEATH:
            if rule == RULE_BOOTSTRAP or state[v] == 0:
                continue
            state[v] = 0
            total -= 1
            for i in range(g.rev_ptr[v], g.rev_ptr[v + 1]):
                cnt[g.rev_idx[i]] -= 1
        else:
            if state[v] == 1:
                continue
            c = cnt[v] + g.n_boundary[v] * boundary_spin
            if rule == RULE_THRESHOLD0:
                ok = True
            elif rule == RULE_LINEAR:
                ok = ev.aux[e] * deg < c
            else:
                ok = c >= theta
            if ok:
                state[v] = 1
                total += 1
                for i in range(g.rev_ptr[v], g.rev_ptr[v + 1]):
                    cnt[g.rev_idx[i]] += 1
    while si < n_samp:
        for i in range(n_obs):
            rec[si * n_obs + i] = state[obs[i]]
        occ[si] = total
        si += 1


cdef Stream make_stream(double rate, double horizon):
    cdef Stream sp
    sp.rate = rate
    sp.dt = 1.0
    sp.mu = 0.0
    sp.emu = 1.0
    sp.kmax = 0
    sp.nseg = 0
    if rate > 0.0 and horizon > 0.0:
        while rate * sp.dt > 512.0:
            sp.dt *= 0.5
        sp.mu = rate * sp.dt
        sp.emu = math.exp(-sp.mu)
        sp.kmax = <int64_t> (sp.mu + 20.0 * sqrt(sp.mu) + 30.0)
        sp.nseg = <int64_t> ceil(horizon / sp.dt)
    else:
        sp.rate = 0.0
    return sp


cdef int fill_events(Events *ev, int64_t n_sites, uint64_t rk, Stream *sd, Stream *su,
                     double horizon, double keep_prob, double **buf, int64_t *bufcap) noexcept nogil:
    cdef int64_t v
    ev.n = 0
    for v in range(n_sites):
        if site_stream(ev, sd, rk, v, K_DEATH, horizon, 1.0, buf, bufcap) != 0:
            return -1
        if site_stream(ev, su, rk, v, K_BIRTH, horizon, keep_prob, buf, bufcap) != 0:
            return -1
    return 0


def make_events(int64_t n_sites, uint64_t seed, uint64_t replica, double horizon,
                double d_rate, double u_rate, double keep_prob):
    cdef Events ev
    cdef Stream sd = make_stream(d_rate, horizon)
    cdef Stream su = make_stream(u_rate, horizon)
    cdef double *buf = NULL
    cdef int64_t bufcap = 0, i, rc
    cdef uint64_t rk = replica_key(seed, replica)
    cdef int64_t *order = NULL
    cdef int64_t *bstart = NULL
    ev.t = NULL; ev.site = NULL; ev.kind = NULL; ev.aux = NULL; ev.n = 0; ev.cap = 0
    with nogil:
        rc = fill_events(&ev, n_sites, rk, &sd, &su, horizon, keep_prob, &buf, &bufcap)
    if rc != 0:
        free(buf)
        ev_free(&ev)
        raise MemoryError()
    order = <int64_t *> malloc((ev.n + 1) * sizeof(int64_t))
    bstart = <int64_t *> malloc((ev.n + 2) * sizeof(int64_t))
    if order == NULL or bstart == NULL:
        free(buf); free(order); free(bstart); ev_free(&ev)
        raise MemoryError()
    with nogil:
        sort_events(&ev, horizon, order, bstart)
    times = np.empty(ev.n, dtype=np.float64)
    sites = np.empty(ev.n, dtype=np.int64)
    kinds = np.empty(ev.n, dtype=np.int8)
    aux = np.empty(ev.n, dtype=np.float64)
    cdef double[::1] tv = times
    cdef int64_t[::1] sv = sites
    cdef int8_t[::1] kv = kinds
    cdef double[::1] av = aux
    for i in range(ev.n):
        tv[i] = ev.t[order[i]]
        sv[i] = ev.site[order[i]]
        kv[i] = ev.kind[order[i]]
        av[i] = ev.aux[order[i]]
    free(buf); free(order); free(bstart); ev_free(&ev)
    return times, sites, kinds, aux


def init_states(int64_t n_sites, uint64_t seed, uint64_t replica, double p):
    out = np.empty(n_sites, dtype=np.uint8)
    cdef uint8_t[::1] ov = out
    cdef uint64_t rk = replica_key(seed, replica)
    cdef int64_t v
    with nogil:
        for v in range(n_sites):
            ov[v] = 1 if unit(site_key(rk, <uint64_t> v, K_INIT), 0) < p else 0
    return out


cdef Graph make_graph(int64_t[::1] nbr_ptr, int64_t[::1] nbr_idx, int64_t[::1] rev_ptr,
                      int64_t[::1] rev_idx, int32_t[::1] n_boundary, int8_t[::1] frozen):
    cdef Graph g
    g.n = nbr_ptr.shape[0] - 1
    g.nbr_ptr = &nbr_ptr[0]
    g.nbr_idx = &nbr_idx[0] if nbr_idx.shape[0] else NULL
    g.rev_ptr = &rev_ptr[0]
    g.rev_idx = &rev_idx[0] if rev_idx.shape[0] else NULL
    g.n_boundary = &n_boundary[0]
    g.frozen = &frozen[0]
    return g


def _arrays(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, frozen):
    return (np.ascontiguousarray(nbr_ptr, dtype=np.int64),
            np.ascontiguousarray(nbr_idx, dtype=np.int64),
            np.ascontiguousarray(rev_ptr, dtype=np.int64),
            np.ascontiguousarray(rev_idx, dtype=np.int64),
            np.ascontiguousarray(n_boundary, dtype=np.int32),
            np.ascontiguousarray(frozen, dtype=np.int8))


def sweep(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, int boundary_spin, int rule, int theta,
          double deg, frozen, state0, times, sites, kinds, aux, sample_times, obs):
    arrs = _arrays(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, frozen)
    cdef Graph g = make_graph(arrs[0], arrs[1], arrs[2], arrs[3], arrs[4], arrs[5])
    state_arr = np.array(state0, dtype=np.uint8)
    cdef uint8_t[::1] state = state_arr
    cnt_arr = np.zeros(g.n, dtype=np.int64)
    cdef int64_t[::1] cnt = cnt_arr
    t_arr = np.ascontiguousarray(times, dtype=np.float64)
    s_arr = np.ascontiguousarray(sites, dtype=np.int64)
    k_arr = np.ascontiguousarray(kinds, dtype=np.int8)
    a_arr = np.ascontiguousarray(aux, dtype=np.float64)
    cdef double[::1] tv = t_arr
    cdef int64_t[::1] sv = s_arr
    cdef int8_t[::1] kv = k_arr
    cdef double[::1] av = a_arr
    samp_arr = np.ascontiguousarray(sample_times, dtype=np.float64)
    obs_arr = np.ascontiguousarray(obs, dtype=np.int64)
    cdef double[::1] samp = samp_arr
    cdef int64_t[::1] ob = obs_arr
    cdef int64_t n_samp = samp.shape[0], n_obs = ob.shape[0], i
    rec_arr = np.zeros((n_samp, n_obs), dtype=np.uint8)
    occ_arr = np.zeros(n_samp, dtype=np.int64)
    cdef uint8_t[:, ::1] rec = rec_arr
    cdef int64_t[::1] occ = occ_arr
    cdef Events ev
    order_arr = np.arange(tv.shape[0], dtype=np.int64)
    cdef int64_t[::1] order = order_arr
    ev.n = tv.shape[0]
    ev.cap = ev.n
    ev.t = &tv[0] if ev.n else NULL
    ev.site = &sv[0] if ev.n else NULL
    ev.kind = &kv[0] if ev.n else NULL
    ev.aux = &av[0] if ev.n else NULL
    with nogil:
        do_sweep(&g, boundary_spin, rule, theta, deg, &state[0], &cnt[0], &ev,
                 &order[0] if ev.n else NULL,
                 &samp[0] if n_samp else NULL, n_samp,
                 &ob[0] if n_obs else NULL, n_obs,
                 &rec[0, 0] if n_samp * n_obs else NULL, &occ[0] if n_samp else NULL)
    return rec_arr, occ_arr


def simulate(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, int boundary_spin, int rule, int theta,
             double deg, frozen, double init_p, uint64_t seed, int64_t replica0, int64_t n_rep,
             double horizon, double d_rate, double u_rate, double keep_prob, sample_times, obs):
    arrs = _arrays(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, frozen)
    cdef Graph g = make_graph(arrs[0], arrs[1], arrs[2], arrs[3], arrs[4], arrs[5])
    samp_arr = np.ascontiguousarray(sample_times, dtype=np.float64)
    obs_arr = np.ascontiguousarray(obs, dtype=np.int64)
    cdef double[::1] samp = samp_arr
    cdef int64_t[::1] ob = obs_arr
    cdef int64_t n_samp = samp.shape[0], n_obs = ob.shape[0]
    out_arr = np.zeros((n_rep, n_samp, n_obs), dtype=np.uint8)
    occ_arr = np.zeros((n_rep, n_samp), dtype=np.int64)
    cdef uint8_t[:, :, ::1] out = out_arr
    cdef int64_t[:, ::1] occ = occ_arr
    if rule == RULE_BOOTSTRAP:
        d_rate = 0.0
    cdef Stream sd = make_stream(d_rate, horizon)
    cdef Stream su = make_stream(u_rate, horizon)
    cdef Events ev
    ev.t = NULL; ev.site = NULL; ev.kind = NULL; ev.aux = NULL; ev.n = 0; ev.cap = 0
    cdef double *buf = NULL
    cdef int64_t bufcap = 0, r, v, ocap = 0
    cdef int64_t *order = NULL
    cdef int64_t *bstart = NULL
    cdef uint8_t *state = <uint8_t *> malloc((g.n + 1) * sizeof(uint8_t))
    cdef int64_t *cnt = <int64_t *> malloc((g.n + 1) * sizeof(int64_t))
    cdef uint64_t rk
    cdef int err = 0
    if state == NULL or cnt == NULL:
        free(state); free(cnt)
        raise MemoryError()
    with nogil:
        for r in range(n_rep):
            rk = replica_key(seed, <uint64_t> (replica0 + r))
            for v in range(g.n):
                state[v] = 1 if unit(site_key(rk, <uint64_t> v, K_INIT), 0) < init_p else 0
            if fill_events(&ev, g.n, rk, &sd, &su, horizon, keep_prob, &buf, &bufcap) != 0:
                err = 1
                break
            if ev.n + 2 > ocap:
                ocap = 2 * ev.n + 2
                order = <int64_t *> realloc(order, ocap * sizeof(int64_t))
                bstart = <int64_t *> realloc(bstart, (ocap + 1) * sizeof(int64_t))
                if order == NULL or bstart == NULL:
                    err = 1
                    break
            sort_events(&ev, horizon, order, bstart)
            do_sweep(&g, boundary_spin, rule, theta, deg, state, cnt, &ev, order,
                     &samp[0] if n_samp else NULL, n_samp,
                     &ob[0] if n_obs else NULL, n_obs,
                     &out[r, 0, 0] if n_samp * n_obs else NULL,
                     &occ[r, 0] if n_samp else NULL)
    free(buf); free(order); free(bstart); free(state); free(cnt); ev_free(&ev)
    if err:
        raise MemoryError()
    return out_arr, occ_arr


cdef void do_bootstrap(Graph *g, int boundary_spin, int theta, uint8_t *state, int64_t *cnt,
                       int32_t *join, int64_t *cur, int64_t *nxt, int64_t max_rounds) noexcept nogil:
    cdef int64_t v, w, i, k, n_cur = 0, n_nxt, r = 0, c
    for v in range(g.n):
        if g.frozen[v] >= 0:
            state[v] = <uint8_t> g.frozen[v]
    for v in range(g.n):
        c = g.n_boundary[v] * boundary_spin
        for i in range(g.nbr_ptr[v], g.nbr_ptr[v + 1]):
            c += state[g.nbr_idx[i]]
        cnt[v] = c
        join[v] = 0 if state[v] else -1
    if max_rounds >= 1:
        for v in range(g.n):
            if state[v] == 0 and g.frozen[v] < 0 and cnt[v] >= theta:
                cur[n_cur] = v
                n_cur += 1
    while n_cur > 0 and r < max_rounds:
        r += 1
        for k in range(n_cur):
            join[cur[k]] = <int32_t> r
            state[cur[k]] = 1
        n_nxt = 0
        for k in range(n_cur):
            v = cur[k]
            for i in range(g.rev_ptr[v], g.rev_ptr[v + 1]):
                w = g.rev_idx[i]
                cnt[w] += 1
                if r < max_rounds and state[w] == 0 and join[w] < 0 and g.frozen[w] < 0 and cnt[w] >= theta:
                    join[w] = <int32_t> (r + 1)
                    nxt[n_nxt] = w
                    n_nxt += 1
        for k in range(n_nxt):
            cur[k] = nxt[k]
        n_cur = n_nxt


cdef int64_t do_radius(int64_t *adj_ptr, int64_t *adj_idx, int32_t *dist, int32_t *join,
                       int64_t root, uint8_t *seen, int64_t *stack, int64_t n) noexcept nogil:
    cdef int64_t v, w, i, top = 0, best
    if join[root] < 0:
        return -1
    for v in range(n):
        seen[v] = 0
    seen[root] = 1
    stack[0] = root
    top = 1
    best = dist[root]
    while top > 0:
        top -= 1
        v = stack[top]
        for i in range(adj_ptr[v], adj_ptr[v + 1]):
            w = adj_idx[i]
            if seen[w] == 0 and join[w] >= 0:
                seen[w] = 1
                stack[top] = w
                top += 1
                if dist[w] > best:
                    best = dist[w]
    return best


def bootstrap(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, int boundary_spin, int theta, frozen,
              state0, int64_t max_rounds):
    arrs = _arrays(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, frozen)
    cdef Graph g = make_graph(arrs[0], arrs[1], arrs[2], arrs[3], arrs[4], arrs[5])
    state_arr = np.array(state0, dtype=np.uint8)
    cdef uint8_t[::1] state = state_arr
    cnt_arr = np.zeros(g.n, dtype=np.int64)
    join_arr = np.zeros(g.n, dtype=np.int32)
    cur_arr = np.zeros(g.n + 1, dtype=np.int64)
    nxt_arr = np.zeros(g.n + 1, dtype=np.int64)
    cdef int64_t[::1] cnt = cnt_arr
    cdef int32_t[::1] join = join_arr
    cdef int64_t[::1] cur = cur_arr
    cdef int64_t[::1] nxt = nxt_arr
    if g.n == 0:
        return join_arr
    with nogil:
        do_bootstrap(&g, boundary_spin, theta, &state[0], &cnt[0], &join[0], &cur[0], &nxt[0], max_rounds)
    if max_rounds < 1:
        return join_arr
    # sites queued for round max_rounds + 1 are never marked (guarded by r < max_rounds)
    return join_arr


def bootstrap_mc(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, int boundary_spin, int theta,
                 double p, uint64_t seed, int64_t replica0, int64_t n_rep, int64_t max_rounds,
                 obs, int64_t root, adj_ptr, adj_idx, dist):
    n = len(nbr_ptr) - 1
    frozen_arr = np.full(n, -1, dtype=np.int8)
    arrs = _arrays(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, frozen_arr)
    cdef Graph g = make_graph(arrs[0], arrs[1], arrs[2], arrs[3], arrs[4], arrs[5])
    obs_arr = np.ascontiguousarray(obs, dtype=np.int64)
    ap_arr = np.ascontiguousarray(adj_ptr, dtype=np.int64)
    ai_arr = np.ascontiguousarray(adj_idx, dtype=np.int64)
    d_arr = np.ascontiguousarray(dist, dtype=np.int32)
    cdef int64_t[::1] ob = obs_arr
    cdef int64_t[::1] ap = ap_arr
    cdef int64_t[::1] ai = ai_arr
    cdef int32_t[::1] dv = d_arr
    cdef int64_t n_obs = ob.shape[0], r, v, i
    joins_arr = np.zeros((n_rep, n_obs), dtype=np.int32)
    radius_arr = np.full(n_rep, -1, dtype=np.int32)
    cdef int32_t[:, ::1] joins = joins_arr
    cdef int32_t[::1] radius = radius_arr
    cdef uint8_t *state = <uint8_t *> malloc((g.n + 1) * sizeof(uint8_t))
    cdef uint8_t *seen = <uint8_t *> malloc((g.n + 1) * sizeof(uint8_t))
    cdef int64_t *cnt = <int64_t *> malloc((g.n + 1) * sizeof(int64_t))
    cdef int32_t *join = <int32_t *> malloc((g.n + 1) * sizeof(int32_t))
    cdef int64_t *cur = <int64_t *> malloc((g.n + 1) * sizeof(int64_t))
    cdef int64_t *nxt = <int64_t *> malloc((g.n + 1) * sizeof(int64_t))
    cdef uint64_t rk
    if state == NULL or seen == NULL or cnt == NULL or join == NULL or cur == NULL or nxt == NULL:
        free(state); free(seen); free(cnt); free(join); free(cur); free(nxt)
        raise MemoryError()
    if g.n > 0:
        with nogil:
            for r in range(n_rep):
                rk = replica_key(seed, <uint64_t> (replica0 + r))
                for v in range(g.n):
                    state[v] = 1 if unit(site_key(rk, <uint64_t> v, K_INIT), 0) < p else 0
                do_bootstrap(&g, boundary_spin, theta, state, cnt, join, cur, nxt, max_rounds)
                for i in range(n_obs):
                    joins[r, i] = join[ob[i]]
                if root >= 0:
                    radius[r] = <int32_t> do_radius(&ap[0], &ai[0] if ai.shape[0] else NULL, &dv[0],
                                                    join, root, seen, cur, g.n)
    free(state); free(seen); free(cnt); free(join); free(cur); free(nxt)
    return joins_arr, radius_arr
