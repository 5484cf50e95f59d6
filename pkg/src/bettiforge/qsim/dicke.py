"""Threshold procedure for preparing fixed-Hamming-weight states with garbage.

Each of n registers holds a uniformly random seed in [0, f) where f is the
smallest power of two >= c*n.  The procedure builds a threshold bit string
b_1..b_{n_seed} most-significant-bit first: at stage j it counts how many
registers have their first j bits >= b_1..b_{j-1}1 and sets b_j = 1 iff that
count is >= k.  At the end the registers >= b are selected; the run succeeds
iff exactly k registers are selected, which happens iff the k-th and (k+1)-th
largest seed values differ (ties at that boundary cannot be split by any
threshold).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def seed_modulus(n: int, c: int) -> int:
    """f(n): smallest power of two >= c*n."""
    if n < 2 or c < 1:
        raise ValueError("need n >= 2 registers and c >= 1")
    f = 1
    while f < c * n:
        f *= 2
    return f


@dataclass(frozen=True)
class ThresholdRun:
    """Deterministic trace of one threshold preparation."""

    seeds: tuple[int, ...]
    k: int
    bits: tuple[int, ...]  # b_1..b_{n_seed}, most significant first
    selected: int  # bit mask over registers, bit i <=> register i selected
    success: bool

    @property
    def threshold(self) -> int:
        value = 0
        for b in self.bits:
            value = (value << 1) | b
        return value


def dicke_threshold_run(seeds, k: int, n_seed: int | None = None) -> ThresholdRun:
    """Run the threshold procedure on explicit register seeds.

    ``n_seed`` is the register width in bits; when omitted it is inferred from
    the default constant c = 8 via f(n) = next power of two >= 8n.
    """
    seeds = tuple(int(s) for s in seeds)
    n = len(seeds)
    if n_seed is None:
        n_seed = seed_modulus(n, 8).bit_length() - 1
    if not 1 <= k <= n:
        raise ValueError(f"target weight k={k} outside 1..{n}")
    f = 1 << n_seed
    if any(not 0 <= s < f for s in seeds):
        raise ValueError(f"seeds must lie in [0, {f})")

    bits = []
    prefix = 0  # integer value of b_1..b_{j-1}
    for j in range(1, n_seed + 1):
        shift = n_seed - j
        probe = (prefix << 1) | 1  # b_1..b_{j-1}1 as a j-bit value
        count = sum(1 for s in seeds if (s >> shift) >= probe)
        b = 1 if count >= k else 0
        bits.append(b)
        prefix = (prefix << 1) | b

    selected = 0
    for i, s in enumerate(seeds):
        if s >= prefix:
            selected |= 1 << i
    success = selected.bit_count() == k
    return ThresholdRun(seeds, k, tuple(bits), selected, success)


def threshold_success_batch(seeds: np.ndarray, k: int) -> np.ndarray:
    """Vectorized success indicator for a (trials, n) array of seeds.

    Uses the order-statistic characterization (k-th and (k+1)-th largest
    differ), which the test suite checks exhaustively against
    dicke_threshold_run.
    """
    if seeds.ndim != 2:
        raise ValueError("expected a (trials, n) seed array")
    n = seeds.shape[1]
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n for the tie criterion")
    part = np.sort(seeds, axis=1)
    return part[:, n - k] != part[:, n - k - 1]


def exact_failure_prob(n: int, k: int, c: int) -> Fraction:
    """Exact probability that the k/(k+1) boundary of n iid seeds is tied.

    Summing over the value v of the k-th largest seed: failure needs at most
    k-1 seeds strictly above v and at least k+1 seeds >= v.
    """
    f = seed_modulus(n, c)
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    total = Fraction(0)
    for v in range(f):
        p_gt = Fraction(f - 1 - v, f)
        p_eq = Fraction(1, f)
        p_lt = Fraction(v, f)
        for a in range(0, k):
            pa = math.comb(n, a) * p_gt**a
            if pa == 0:
                continue
            inner = Fraction(0)
            for b in range(k + 1 - a, n - a + 1):
                rest = n - a - b
                term = math.comb(n - a, b) * p_eq**b
                if rest:
                    if p_lt == 0:
                        continue
                    term *= p_lt**rest
                inner += term
            total += pa * inner
    return total


@dataclass(frozen=True)
class SuccessProbResult:
    n: int
    k: int
    c: int
    trials: int
    seed: int
    failure_rate: float
    exact_failure: Fraction | None


def dicke_success_prob(
    n: int, k: int, c: int, trials: int, seed: int, exact_max_n: int = 8
) -> SuccessProbResult:
    """Monte-Carlo failure frequency of the threshold preparation.

    Draws ``trials`` independent n-register seed tuples from PCG64 and applies
    the tie criterion.  For n <= exact_max_n the exact combinatorial failure
    probability is computed alongside.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    f = seed_modulus(n, c)
    rng = np.random.default_rng(seed)
    failures = 0
    chunk = max(1, min(trials, 1 << 22 >> max(n.bit_length() - 1, 0)))
    done = 0
    while done < trials:
        take = min(chunk, trials - done)
        draws = rng.integers(0, f, size=(take, n))
        failures += int(np.count_nonzero(~threshold_success_batch(draws, k)))
        done += take
    exact = exact_failure_prob(n, k, c) if n <= exact_max_n else None
    return SuccessProbResult(n, k, c, trials, seed, failures / trials, exact)
