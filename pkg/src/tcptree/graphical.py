"""Poisson-mark construction of threshold contact processes.

Every site carries a rate-1 stream of D marks and a rate-``lam`` stream of
U marks.  A D mark empties the site; a U mark fills it if the flip rule
allows.  Running several processes on the same marks gives the monotone
couplings used throughout the package.

The heavy lifting (mark generation, the time-ordered sweep) happens in the
kernel backend selected by :mod:`tcptree._backend`; this module wraps it in
typed objects and handles frozen sites, truncation boundaries and replica
parallelism.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _backend
from .topology import AddressError, Ball, Region, SiteAddress, TreeTopology, compile_region


class SpecError(ValueError):
    """Inconsistent process specifications."""


class RangeError(ValueError):
    """A requested time outside the generated mark horizon."""


class Rule(enum.Enum):
    THRESHOLD = "threshold"
    THRESHOLD0 = "threshold0"
    LINEAR = "linear"
    BOOTSTRAP = "bootstrap"


_RULE_CODE = {
    Rule.THRESHOLD: _backend.RULE_THRESHOLD,
    Rule.THRESHOLD0: _backend.RULE_THRESHOLD0,
    Rule.LINEAR: _backend.RULE_LINEAR,
    Rule.BOOTSTRAP: _backend.RULE_BOOTSTRAP,
}


def default_threads() -> int:
    """Thread count from ``TCPTREE_THREADS``, else the CPU count."""
    env = os.environ.get("TCPTREE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ProcessSpec:
    """Flip rule, graph, rate, frozen sites and boundary spin.

    ``frozen`` maps site addresses to a fixed spin; ``boundary_spin`` is the
    value assumed for influence neighbours outside the truncation.
    """

    rule: Rule
    topology: TreeTopology
    lam: float
    theta: int = 2
    frozen: Mapping[SiteAddress, int] = field(default_factory=dict)
    boundary_spin: int = 0

    def __post_init__(self):
        if isinstance(self.rule, str):
            object.__setattr__(self, "rule", Rule(self.rule))
        if not self.lam >= 0:
            raise SpecError(f"lambda must be >= 0, got {self.lam}")
        if self.rule in (Rule.THRESHOLD, Rule.BOOTSTRAP) and self.theta < 1:
            raise SpecError("threshold rules need theta >= 1")
        if self.boundary_spin not in (0, 1):
            raise SpecError("boundary spin must be 0 or 1")
        if any(s not in (0, 1) for s in self.frozen.values()):
            raise SpecError("frozen spins must be 0 or 1")
        if self.topology.truncation is None:
            raise SpecError("simulation needs a finite truncation")
        object.__setattr__(self, "frozen", dict(self.frozen))

    def __hash__(self):
        return hash((self.rule, self.topology, self.lam, self.theta,
                     tuple(sorted(self.frozen.items())), self.boundary_spin))

    @property
    def region(self) -> Region:
        return compile_region(self.topology)

    @property
    def degree(self) -> int:
        """Neighbourhood size used by the linear contact rule."""
        return self.topology.max_degree

    @property
    def u_rate(self) -> float:
        """Rate of the U stream the rule consumes."""
        return self.lam * self.degree if self.rule is Rule.LINEAR else self.lam

    def frozen_array(self) -> np.ndarray:
        reg = self.region
        out = np.full(len(reg), -1, dtype=np.int8)
        for v, s in self.frozen.items():
            i = reg.index.get(v)
            if i is None:
                raise AddressError(f"frozen site {v!r} is not in the region")
            out[i] = s
        return out

    def with_boundary(self, spin: int) -> "ProcessSpec":
        return ProcessSpec(self.rule, self.topology, self.lam, self.theta, self.frozen, spin)


@dataclass
class SpinConfig:
    """Occupation of every region site at one time."""

    region: Region
    state: np.ndarray
    time: float = 0.0

    @property
    def occupied(self) -> frozenset:
        return frozenset(self.region.sites[i] for i in np.flatnonzero(self.state))

    def __getitem__(self, v: SiteAddress) -> int:
        return int(self.state[self.region.index[v]])

    def __le__(self, other: "SpinConfig") -> bool:
        return bool(np.all(self.state <= other.state))

    @classmethod
    def from_sites(cls, region: Region, sites, time: float = 0.0) -> "SpinConfig":
        state = np.zeros(len(region), dtype=np.uint8)
        if len(sites):
            state[region.indices(sites)] = 1
        return cls(region, state, time)

    @classmethod
    def product(cls, region: Region, p: float, seed: int, replica: int = 0) -> "SpinConfig":
        """Product-measure start; for a fixed seed the configurations are nested in ``p``."""
        return cls(region, _backend.kernels.init_states(len(region), seed, replica, float(p)))

    @classmethod
    def full(cls, region: Region) -> "SpinConfig":
        return cls(region, np.ones(len(region), dtype=np.uint8))


@dataclass
class MarkStream:
    """D and U marks of every region site on ``[0, horizon]``, merged in time order.

    ``aux`` carries an acceptance uniform for each U mark (used by the
    linear contact rule).  When ``lam_max > lam`` the U marks are generated
    at rate ``lam_max`` and thinned, so streams with the same seed are nested
    in ``lam``.
    """

    region: Region
    lam: float
    horizon: float
    seed: int
    replica: int
    times: np.ndarray
    sites: np.ndarray
    kinds: np.ndarray
    aux: np.ndarray
    u_rate: float = float("nan")

    D = 0
    U = 1

    def per_site(self, i: int) -> list[tuple[float, str]]:
        m = self.sites == i
        return [(float(t), "D" if k == 0 else "U") for t, k in zip(self.times[m], self.kinds[m])]

    def count(self, kind: int) -> int:
        return int(np.count_nonzero(self.kinds == kind))


def generate_marks(topo: TreeTopology, lam: float, horizon: float, seed: int, replica: int = 0,
                   lam_max: float | None = None, u_scale: float = 1.0) -> MarkStream:
    """Mark streams for the truncation of ``topo``.

    ``u_scale`` multiplies the U rate (the linear contact rule uses the
    neighbourhood size).  Deterministic in ``(seed, replica, site index)``.
    """
    if not horizon > 0:
        raise RangeError("horizon must be > 0")
    if not lam >= 0:
        raise SpecError("lambda must be >= 0")
    region = compile_region(topo)
    lam_gen = lam if lam_max is None else float(lam_max)
    if lam_gen < lam:
        raise SpecError("lam_max must be >= lam")
    keep = 1.0 if lam_gen == 0 else lam / lam_gen
    u_rate = lam_gen * u_scale
    t, s, k, a = _backend.kernels.make_events(len(region), seed, replica, float(horizon), 1.0,
                                              float(u_rate), float(keep))
    return MarkStream(region, lam, float(horizon), seed, replica, t, s, k, a, u_rate)


def marks_for(spec: ProcessSpec, horizon: float, seed: int, replica: int = 0,
              lam_max: float | None = None) -> MarkStream:
    scale = spec.degree if spec.rule is Rule.LINEAR else 1.0
    return generate_marks(spec.topology, spec.lam, horizon, seed, replica, lam_max, scale)


def _sample_array(sample_times, horizon):
    st = np.asarray(sample_times, dtype=np.float64)
    if st.ndim != 1:
        raise RangeError("sample times must be one-dimensional")
    if np.any(np.diff(st) < 0):
        raise RangeError("sample times must be nondecreasing")
    if len(st) and (st[0] < 0 or st[-1] > horizon):
        raise RangeError(f"sample times must lie in [0, {horizon}]")
    return st


def evolve(spec: ProcessSpec, init: SpinConfig, marks: MarkStream, sample_times) -> list[SpinConfig]:
    """Run the process on ``marks`` and return the configuration at each sample time."""
    region = spec.region
    if marks.region is not region or init.region is not region:
        raise SpecError("marks, initial configuration and spec must share a region")
    st = _sample_array(sample_times, marks.horizon)
    obs = np.arange(len(region), dtype=np.int64)
    rec, _ = _backend.kernels.sweep(
        region.nbr_ptr, region.nbr_idx, region.rev_ptr, region.rev_idx, region.n_boundary,
        spec.boundary_spin, _RULE_CODE[spec.rule], spec.theta, float(spec.degree),
        spec.frozen_array(), init.state, marks.times, marks.sites, marks.kinds, marks.aux, st, obs)
    return [SpinConfig(region, rec[i].copy(), float(t)) for i, t in enumerate(st)]


def couple(specs: Sequence[ProcessSpec], inits: Sequence[SpinConfig], marks: MarkStream,
           sample_times) -> list[list[SpinConfig]]:
    """Evolve every spec on the same marks.

    All specs must share the topology (and hence the region) and the rate
    the marks were generated for.  To couple different rates, generate one
    stream per rate with a common ``lam_max``.
    """
    if len(specs) != len(inits):
        raise SpecError("one initial configuration per spec is required")
    topo = specs[0].topology
    for s in specs:
        if s.topology != topo:
            raise SpecError("coupled specs must share a topology")
        if s.lam != marks.lam:
            raise SpecError("coupled specs must use the rate the marks were generated for")
    return [evolve(s, x, marks, sample_times) for s, x in zip(specs, inits)]


def discrepancy(upper: Sequence[SpinConfig], lower: Sequence[SpinConfig]) -> np.ndarray:
    """Sitewise difference ``upper - lower`` per sample time (int8, values in {-1, 0, 1})."""
    return np.stack([a.state.astype(np.int8) - b.state.astype(np.int8) for a, b in zip(upper, lower)])


def conservative_radius(lam: float, t: float, site_distance: int = 0) -> int:
    """Truncation radius regarded as effectively infinite up to time ``t``."""
    return int(math.ceil(2.0 * (1.0 + lam) * t)) + int(site_distance)


def sandwich_estimate(spec: ProcessSpec, init: SpinConfig, marks: MarkStream, site: SiteAddress,
                      t: float) -> tuple[int, int]:
    """Outcome at ``site`` with the boundary frozen at 0 and at 1.

    By attractivity the infinite-volume indicator lies between the two.
    """
    region = spec.region
    i = region.index.get(site)
    if i is None:
        raise AddressError(f"{site!r} is not in the region")
    if region.dist[i] + 1 > _radius_of(spec.topology):
        raise SpecError("truncation must extend at least one step beyond the site")
    lo = evolve(spec.with_boundary(0), init, marks, [t])[0].state[i]
    hi = evolve(spec.with_boundary(1), init, marks, [t])[0].state[i]
    return int(lo), int(hi)


def _radius_of(topo: TreeTopology) -> int:
    tr = topo.truncation
    return tr.radius if isinstance(tr, Ball) else tr.width


# ---------------------------------------------------------------------------
# replica ensembles


@dataclass
class Ensemble:
    """Observed-site spins ``(R, S, n_obs)`` and occupied counts ``(R, S)``."""

    states: np.ndarray
    occupied: np.ndarray
    sample_times: np.ndarray
    seed: int
    replica0: int


def run_replicas(spec: ProcessSpec, init_p: float, sample_times, obs: Sequence[SiteAddress] | np.ndarray,
                 replicas: int, seed: int, horizon: float | None = None, lam_max: float | None = None,
                 replica0: int = 0, threads: int | None = None, chunk: int = 256) -> Ensemble:
    """Independent replicas from the product measure of density ``init_p``.

    Replica ``r`` uses substreams keyed by ``(seed, replica0 + r)``, so the
    result does not depend on how replicas are split across threads.
    """
    region = spec.region
    st = np.asarray(sample_times, dtype=np.float64)
    if horizon is None:
        horizon = float(st[-1]) if len(st) else 0.0
    st = _sample_array(st, horizon)
    if len(obs) and isinstance(obs[0], SiteAddress):
        obs = region.indices(obs)
    obs = np.asarray(obs, dtype=np.int64)
    lam_gen = spec.lam if lam_max is None else float(lam_max)
    if lam_gen < spec.lam:
        raise SpecError("lam_max must be >= lam")
    keep = 1.0 if lam_gen == 0 else spec.lam / lam_gen
    u_rate = lam_gen * (spec.degree if spec.rule is Rule.LINEAR else 1.0)
    frozen = spec.frozen_array()
    k = _backend.kernels

    def work(r0, n):
        return k.simulate(region.nbr_ptr, region.nbr_idx, region.rev_ptr, region.rev_idx,
                          region.n_boundary, spec.boundary_spin, _RULE_CODE[spec.rule], spec.theta,
                          float(spec.degree), frozen, float(init_p), seed, r0, n, float(horizon),
                          1.0, float(u_rate), float(keep), st, obs)

    states, occ = _parallel(work, replica0, replicas, threads, chunk)
    if states is None:
        states = np.zeros((0, len(st), len(obs)), dtype=np.uint8)
        occ = np.zeros((0, len(st)), dtype=np.int64)
    return Ensemble(states, occ, st, seed, replica0)


def _parallel(work, replica0, replicas, threads, chunk):
    """Run ``work(r0, n)`` over replica chunks and concatenate in replica order."""
    threads = default_threads() if threads is None else max(1, int(threads))
    starts = list(range(0, replicas, chunk))
    if not starts:
        return None, None
    jobs = [(replica0 + s, min(chunk, replicas - s)) for s in starts]
    if threads == 1 or len(jobs) == 1:
        parts = [work(r0, n) for r0, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda j: work(*j), jobs))
    return tuple(np.concatenate([p[i] for p in parts]) for i in range(len(parts[0])))


@dataclass
class SandwichEnsemble:
    sample_times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    disagreement: np.ndarray
    replicas: int


def sandwich_ensemble(spec: ProcessSpec, init_p: float, site: SiteAddress, sample_times,
                      replicas: int, seed: int, threads: int | None = None) -> SandwichEnsemble:
    """Ensemble means at ``site`` under boundary 0 and boundary 1 on shared marks."""
    lo = run_replicas(spec.with_boundary(0), init_p, sample_times, [site], replicas, seed, threads=threads)
    hi = run_replicas(spec.with_boundary(1), init_p, sample_times, [site], replicas, seed, threads=threads)
    a = lo.states[:, :, 0].astype(np.float64)
    c = hi.states[:, :, 0].astype(np.float64)
    return SandwichEnsemble(lo.sample_times, a.mean(axis=0), c.mean(axis=0),
                            (a != c).mean(axis=0), replicas)
