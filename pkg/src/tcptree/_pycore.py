"""Pure numpy/Python kernels.

Reference semantics for the compiled ``_core`` extension; both expose the
same functions and produce bit-identical results.  Used when the extension
is unavailable or ``TCPTREE_PURE=1``.
"""

from __future__ import annotations

import math

import numpy as np

from . import rng

RULE_THRESHOLD = 0
RULE_THRESHOLD0 = 1
RULE_LINEAR = 2
RULE_BOOTSTRAP = 3

KIND_D = 0
KIND_U = 1


def _poisson_times(n_sites, seed, replica, kind, rate, horizon):
    """Per-site sorted Poisson times on [0, horizon]; returns (times, sites, ordinals)."""
    if rate <= 0.0 or horizon <= 0.0 or n_sites == 0:
        empty = np.empty(0)
        return empty, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    dt = rng.segment_length(rate)
    mu = rate * dt
    emu = math.exp(-mu)
    kmax = int(mu + 20.0 * math.sqrt(mu) + 30.0)
    nseg = int(math.ceil(horizon / dt))
    keys = rng.stream_keys(seed, replica, np.arange(n_sites), kind)
    kc = rng.salted(keys, rng.COUNT_SALT)
    kt = rng.salted(keys, rng.TIME_SALT)
    used = np.zeros(n_sites, dtype=np.int64)
    t_parts, s_parts = [], []
    for s in range(nseg):
        u = rng.uniforms(kc, s)
        k = np.zeros(n_sites, dtype=np.int64)
        p = np.full(n_sites, emu)
        cdf = p.copy()
        active = u > cdf
        step = 0
        while active.any() and step < kmax:
            step += 1
            k[active] += 1
            p[active] = p[active] * mu / float(step)
            cdf[active] += p[active]
            active &= u > cdf
        total = int(k.sum())
        if total == 0:
            continue
        owner = np.repeat(np.arange(n_sites), k)
        first = np.repeat(np.cumsum(k) - k, k)
        counter = used[owner] + (np.arange(total) - first)
        t = s * dt + rng.uniforms(kt[owner], counter) * dt
        used += k
        t_parts.append(t)
        s_parts.append(owner)
    if not t_parts:
        empty = np.empty(0)
        return empty, np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    t = np.concatenate(t_parts)
    owner = np.concatenate(s_parts)
    order = np.lexsort((t, owner))
    t, owner = t[order], owner[order]
    keep = t <= horizon
    starts = np.searchsorted(owner, owner, side="left")
    ordinal = np.arange(len(owner)) - starts
    return t[keep], owner[keep], ordinal[keep]


def make_events(n_sites, seed, replica, horizon, d_rate, u_rate, keep_prob):
    """Merged, globally time-ordered D/U events for one replica.

    Returns ``(times, sites, kinds, aux)``; ``aux`` is the acceptance uniform
    attached to each U mark (0.0 for D marks).
    """
    td, sd, _ = _poisson_times(n_sites, seed, replica, rng.DEATH, d_rate, horizon)
    tu, su, ou = _poisson_times(n_sites, seed, replica, rng.BIRTH, u_rate, horizon)
    if keep_prob < 1.0 and len(tu):
        thin = rng.uniforms(rng.stream_keys(seed, replica, su, rng.THIN), ou)
        kept = thin < keep_prob
        tu, su, ou = tu[kept], su[kept], ou[kept]
    aux_u = rng.uniforms(rng.stream_keys(seed, replica, su, rng.AUX), ou) if len(su) else np.empty(0)
    times = np.concatenate([td, tu])
    sites = np.concatenate([sd, su])
    kinds = np.concatenate([np.zeros(len(td), np.int8), np.ones(len(tu), np.int8)])
    aux = np.concatenate([np.zeros(len(td)), aux_u])
    order = np.lexsort((kinds, sites, times))
    return times[order], sites[order], kinds[order], aux[order]


def init_states(n_sites, seed, replica, p):
    """Product-measure start: site occupied iff its INIT uniform is below p."""
    keys = rng.stream_keys(seed, replica, np.arange(n_sites), rng.INIT)
    return (rng.uniforms(keys, 0) < p).astype(np.uint8)


def _initial_counts(nbr_ptr, nbr_idx, state):
    """Occupied in-region influence neighbours of every site."""
    owner = np.repeat(np.arange(len(state)), np.diff(nbr_ptr))
    return np.bincount(owner, weights=state[nbr_idx], minlength=len(state)).astype(np.int64)


def sweep(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, boundary_spin, rule, theta, deg,
          frozen, state0, times, sites, kinds, aux, sample_times, obs):
    """Process events in order; record ``state[obs]`` and occupied counts at samples."""
    state = np.array(state0, dtype=np.uint8)
    fz = np.asarray(frozen)
    state[fz >= 0] = fz[fz >= 0]
    bnd = (np.asarray(n_boundary, dtype=np.int64) * int(boundary_spin)).tolist()
    cnt = _initial_counts(nbr_ptr, nbr_idx, state).tolist()
    st = state.tolist()
    fl = fz.tolist()
    rp = rev_ptr.tolist()
    ri = rev_idx.tolist()
    n_obs = len(obs)
    n_samp = len(sample_times)
    rec = np.zeros((n_samp, n_obs), dtype=np.uint8)
    occ = np.zeros(n_samp, dtype=np.int64)
    total = sum(st)
    obs_l = list(obs)
    si = 0
    tl, sl, kl, al = times.tolist(), sites.tolist(), kinds.tolist(), aux.tolist()
    for e in range(len(tl)):
        t = tl[e]
        while si < n_samp and sample_times[si] < t:
            rec[si] = [st[o] for o in obs_l]
            occ[si] = total
            si += 1
        v = sl[e]
        if fl[v] >= 0:
            continue
        if kl[e] == KIND_D:
            if rule == RULE_BOOTSTRAP or st[v] == 0:
                continue
            st[v] = 0
            total -= 1
            for w in ri[rp[v]:rp[v + 1]]:
                cnt[w] -= 1
        else:
            if st[v] == 1:
                continue
            c = cnt[v] + bnd[v]
            if rule == RULE_THRESHOLD0:
                ok = True
            elif rule == RULE_LINEAR:
                ok = al[e] * deg < c
            else:
                ok = c >= theta
            if ok:
                st[v] = 1
                total += 1
                for w in ri[rp[v]:rp[v + 1]]:
                    cnt[w] += 1
    while si < n_samp:
        rec[si] = [st[o] for o in obs_l]
        occ[si] = total
        si += 1
    return rec, occ


def simulate(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, boundary_spin, rule, theta, deg,
             frozen, init_p, seed, replica0, n_rep, horizon, d_rate, u_rate, keep_prob,
             sample_times, obs):
    """Independent replicas ``replica0 .. replica0 + n_rep - 1``."""
    n = len(nbr_ptr) - 1
    sample_times = np.asarray(sample_times, dtype=np.float64)
    obs = np.asarray(obs, dtype=np.int64)
    out = np.zeros((n_rep, len(sample_times), len(obs)), dtype=np.uint8)
    occ = np.zeros((n_rep, len(sample_times)), dtype=np.int64)
    if rule == RULE_BOOTSTRAP:
        d_rate = 0.0
    for r in range(n_rep):
        rep = replica0 + r
        state0 = init_states(n, seed, rep, init_p)
        ev = make_events(n, seed, rep, horizon, d_rate, u_rate, keep_prob)
        out[r], occ[r] = sweep(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, boundary_spin,
                               rule, theta, deg, frozen, state0, *ev, sample_times, obs)
    return out, occ


def bootstrap(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, boundary_spin, theta, frozen,
              state0, max_rounds):
    """Synchronous bootstrap rounds; returns the round each site joined (-1 never)."""
    n = len(state0)
    state = np.array(state0, dtype=np.uint8)
    fz = np.asarray(frozen)
    state[fz >= 0] = fz[fz >= 0]
    cnt = _initial_counts(nbr_ptr, nbr_idx, state) + np.asarray(n_boundary, np.int64) * int(boundary_spin)
    join = np.where(state == 1, 0, -1).astype(np.int32)
    free = (state == 0) & (fz < 0)
    current = np.flatnonzero(free & (cnt >= theta)) if max_rounds >= 1 else np.empty(0, np.int64)
    r = 0
    while len(current) and r < max_rounds:
        r += 1
        join[current] = r
        state[current] = 1
        hits = np.concatenate([rev_idx[rev_ptr[u]:rev_ptr[u + 1]] for u in current])
        np.add.at(cnt, hits, 1)
        if r == max_rounds:
            break
        cand = np.unique(hits)
        cand = cand[(state[cand] == 0) & (fz[cand] < 0) & (cnt[cand] >= theta)]
        current = cand
    return join


def cluster_radius(adj_ptr, adj_idx, dist, join, root):
    """Largest root distance in the occupied cluster of ``root`` (-1 if vacant)."""
    if join[root] < 0:
        return -1
    seen = {int(root)}
    stack = [int(root)]
    best = int(dist[root])
    while stack:
        v = stack.pop()
        for w in adj_idx[adj_ptr[v]:adj_ptr[v + 1]].tolist():
            if w not in seen and join[w] >= 0:
                seen.add(w)
                stack.append(w)
                if dist[w] > best:
                    best = int(dist[w])
    return best


def bootstrap_mc(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, boundary_spin, theta, p, seed,
                 replica0, n_rep, max_rounds, obs, root, adj_ptr, adj_idx, dist):
    """Bootstrap closure from product starts; join rounds at ``obs`` and root cluster radius."""
    n = len(nbr_ptr) - 1
    obs = np.asarray(obs, dtype=np.int64)
    frozen = np.full(n, -1, dtype=np.int8)
    joins = np.zeros((n_rep, len(obs)), dtype=np.int32)
    radius = np.zeros(n_rep, dtype=np.int32)
    for r in range(n_rep):
        state0 = init_states(n, seed, replica0 + r, p)
        join = bootstrap(nbr_ptr, nbr_idx, rev_ptr, rev_idx, n_boundary, boundary_spin, theta,
                         frozen, state0, max_rounds)
        joins[r] = join[obs]
        radius[r] = cluster_radius(adj_ptr, adj_idx, dist, join, root) if root >= 0 else -1
    return joins, radius
