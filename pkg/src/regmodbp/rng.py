"""Deterministic counter-based random streams.

Experiment results must reproduce bit-for-bit from a (seed, stream id)
pair alone, independent of library versions, draw batching, or worker
layout.  The generator is therefore pinned algorithmically instead of
delegating to a library bit generator:

* Each ``Stream`` is a SplitMix64 sequence.  The 64-bit output at
  counter ``c`` is ``mix64(h + c * GOLDEN)`` where ``GOLDEN`` is the
  odd constant 0x9E3779B97F4A7C15 and ``mix64`` is the SplitMix64
  finalizer (xor-shift 30, multiply 0xBF58476D1CE4E5B9, xor-shift 27,
  multiply 0x94D049BB133111EB, xor-shift 31), all modulo 2**64.
* The per-stream state ``h`` is derived from the 64-bit seed and the
  stream id as ``mix64(mix64(seed + GOLDEN) ^ mix64(stream + SALT))``
  with ``SALT`` = 0xD1B54A32D192ED03, so distinct (seed, stream) pairs
  index statistically independent sequences.
* Uniform doubles take the top 53 bits: ``(word >> 11) * 2**-53``.
* Gaussians use the polar Box-Muller method with the documented
  rejection batching in :meth:`Stream.gaussians`; words are consumed
  strictly in counter order, so the mapping from stream position to
  output is fixed.
* Bounded integers use rejection below the largest multiple of the
  bound, which makes them exactly uniform.
"""

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
SALT = 0xD1B54A32D192ED03
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK = (1 << 64) - 1

_U = np.uint64


def mix64(z):
    """SplitMix64 finalizer on a uint64 scalar or array."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U(30))) * _U(_M1)
        z = (z ^ (z >> _U(27))) * _U(_M2)
        z = z ^ (z >> _U(31))
    return z


class Stream:
    """One independent random stream addressed by (seed, stream id)."""

    def __init__(self, seed: int, stream: int = 0):
        seed = int(seed) & _MASK
        stream = int(stream) & _MASK
        h = mix64(_U((seed + GOLDEN) & _MASK))
        h = mix64(h ^ mix64(_U((stream + SALT) & _MASK)))
        self._state = int(h)
        self.counter = 0
        self.seed = seed
        self.stream = stream

    def words(self, count: int) -> np.ndarray:
        """Next `count` raw 64-bit words, advancing the counter."""
        idx = np.arange(self.counter, self.counter + count, dtype=np.uint64)
        self.counter += count
        return mix64(_U(self._state) + idx * _U(GOLDEN))

    def uniforms(self, count: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits of each word."""
        return (self.words(count) >> _U(11)).astype(np.float64) * 2.0**-53

    def gaussians(self, count: int) -> np.ndarray:
        """Standard normals by the polar Box-Muller method.

        Pairs (a, b) = (2u1-1, 2u2-1) are accepted when 0 < a*a+b*b < 1
        and mapped to (a*f, b*f) with f = sqrt(-2 ln s / s).  Rejection
        rounds draw `2 * max(64, p + p//2 + 16)` uniforms where p is the
        number of pairs still needed; accepted outputs are taken in draw
        order, two per pair.
        """
        out = np.empty(count, dtype=np.float64)
        filled = 0
        while filled < count:
            pairs_needed = (count - filled + 1) // 2
            batch = max(64, pairs_needed + pairs_needed // 2 + 16)
            u = self.uniforms(2 * batch)
            a = 2.0 * u[0::2] - 1.0
            b = 2.0 * u[1::2] - 1.0
            s = a * a + b * b
            keep = (s > 0.0) & (s < 1.0)
            a, b, s = a[keep], b[keep], s[keep]
            f = np.sqrt(-2.0 * np.log(s) / s)
            z = np.empty(2 * a.size, dtype=np.float64)
            z[0::2] = a * f
            z[1::2] = b * f
            take = min(z.size, count - filled)
            out[filled:filled + take] = z[:take]
            filled += take
        return out

    def randbelow(self, bound: int) -> int:
        """Exactly uniform integer in [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // bound) * bound
        while True:
            w = int(self.words(1)[0])
            if w < limit:
                return w % bound

    def subset(self, pool, k: int) -> np.ndarray:
        """Uniform size-k subset of pool, returned sorted ascending.

        Partial Fisher-Yates: position i swaps with i + randbelow(n-i).
        """
        pool = np.array(pool, dtype=np.int64, copy=True)
        n = pool.size
        if not 0 <= k <= n:
            raise ValueError(f"cannot take {k} of {n} items")
        for i in range(k):
            j = i + self.randbelow(n - i)
            pool[i], pool[j] = pool[j], pool[i]
        return np.sort(pool[:k])

    def pick(self, values) -> float:
        """One draw from a finite set of equally likely values."""
        return values[self.randbelow(len(values))]
