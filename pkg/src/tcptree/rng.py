"""Counter-based random streams keyed by (seed, replica, site, kind).

Every uniform is a pure function of its key and a counter, so any site's
randomness can be regenerated without touching other sites, replicas can run
in any order, and the compiled and pure-Python kernels draw identical
numbers.  The mixing function is the SplitMix64 finaliser.
"""

from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_C_REP = 0xD1B54A32D192ED03
_C_SITE = 0xABC98388FB8FAC03
_C_KIND = 0x8CB92BA72F3D8DD7
COUNT_SALT = 0x243F6A8885A308D3
TIME_SALT = 0x13198A2E03707344

# stream kinds
DEATH = 0
BIRTH = 1
AUX = 2
THIN = 3
INIT = 4

_U64 = np.uint64
_TWO53 = 2.0**-53


def mix64(z):
    """SplitMix64 finaliser on python ints or uint64 arrays."""
    if isinstance(z, np.ndarray):
        z = z.astype(_U64, copy=True)
        z ^= z >> _U64(30)
        z *= _U64(0xBF58476D1CE4E5B9)
        z ^= z >> _U64(27)
        z *= _U64(0x94D049BB133111EB)
        z ^= z >> _U64(31)
        return z
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def replica_key(seed: int, replica: int) -> int:
    s = mix64((seed + GOLDEN) & MASK)
    return mix64(s ^ (((replica + 1) * _C_REP) & MASK))


def stream_keys(seed: int, replica: int, sites, kind: int) -> np.ndarray:
    """uint64 keys for ``kind`` streams of the given site indices."""
    rk = _U64(replica_key(seed, replica))
    sites = np.asarray(sites, dtype=_U64)
    with np.errstate(over="ignore"):
        sk = mix64(rk ^ ((sites + _U64(1)) * _U64(_C_SITE)))
        return mix64(sk ^ _U64(((kind + 1) * _C_KIND) & MASK))


def stream_key(seed: int, replica: int, site: int, kind: int) -> int:
    rk = replica_key(seed, replica)
    sk = mix64(rk ^ (((site + 1) * _C_SITE) & MASK))
    return mix64(sk ^ (((kind + 1) * _C_KIND) & MASK))


def uniforms(keys, counter) -> np.ndarray:
    """Uniforms in (0, 1) for ``keys`` at integer ``counter`` (broadcasts)."""
    keys = np.asarray(keys, dtype=_U64)
    counter = np.asarray(counter, dtype=_U64)
    with np.errstate(over="ignore"):
        z = mix64(keys + (counter + _U64(1)) * _U64(GOLDEN))
    return ((z >> _U64(11)).astype(np.float64) + 0.5) * _TWO53


def uniform(key: int, counter: int) -> float:
    z = mix64((key + (counter + 1) * GOLDEN) & MASK)
    return ((z >> 11) + 0.5) * _TWO53


def salted(keys, salt: int):
    if isinstance(keys, np.ndarray):
        return mix64(keys ^ _U64(salt))
    return mix64(keys ^ salt)


def segment_length(rate: float) -> float:
    """Time segment over which Poisson counts are drawn (a power of two <= 1)."""
    dt = 1.0
    while rate * dt > 512.0:
        dt *= 0.5
    return dt
