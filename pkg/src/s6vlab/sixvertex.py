"""Stochastic six-vertex model with step initial condition.

The model lives on the positive quadrant: a path enters horizontally at
column 1 of every row, and each vertex forwards its incoming arrows with the
stochastic weights

    b1 = (u q^{-1/2} - q^{-1}) / (u q^{-1/2} - 1)   for a lone horizontal arrow,
    b2 = (u q^{1/2} - 1) / (u q^{-1/2} - 1)         for a lone vertical arrow,

the remaining mass turning the arrow.  The height h(M, N) counts the paths
passing through or weakly to the right of column M at row N.  This module
provides exact transfer-matrix enumeration of the height pmf (width <= 16),
a vectorised Monte Carlo sampler with replica-splittable RNG, the q-Laplace
functional of the height, and the moderate-deviation scaling constants.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


MAX_WIDTH = 16


class WidthTooLarge(ValueError):
    """Transfer-matrix width beyond the 2^16-state guard."""


class SlopeOutOfLiquidRegion(ValueError):
    """nu outside (1, q^{1/2} u)."""


@dataclass(frozen=True)
class S6VParams:
    """Validated model parameters (q, u) with derived vertex weights."""

    q: float
    u: float
    b1: float = field(init=False)
    b2: float = field(init=False)
    kappa: float = field(init=False)

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0,1), got {self.q}")
        sq = math.sqrt(self.q)
        if not self.u * sq > 1.0:
            raise ValueError(f"u must exceed q^(-1/2) = {1/sq}, got {self.u}")
        denom = self.u / sq - 1.0
        object.__setattr__(self, "b1", (self.u / sq - 1.0 / self.q) / denom)
        object.__setattr__(self, "b2", (self.u * sq - 1.0) / denom)
        object.__setattr__(self, "kappa", 1.0 / (sq * self.u))


@dataclass(frozen=True)
class HeightPmf:
    """Exact pmf of h(M, N)."""

    M: int
    N: int
    support: tuple
    probs: tuple

    def mean(self) -> float:
        return float(sum(h * p for h, p in zip(self.support, self.probs)))


@dataclass(frozen=True)
class ScalingConstants:
    """Centering a_eq and scale c for h(floor(nu N), N), plus the inputs."""

    nu: float
    a_eq: float
    c: float
    q: float
    kappa: float


def vertex_transition(params: S6VParams, i1: int, j1: int) -> dict:
    """Outgoing-arrow distribution {(i2, j2): prob} at a single vertex.

    The first bit is the vertical arrow (from below), the second the
    horizontal arrow (from the left).  Arrow conservation i1 + j1 = i2 + j2
    is enforced; a lone horizontal arrow continues rightward with
    probability b1, a lone vertical arrow continues upward with
    probability b2.
    """
    if i1 == j1:
        return {(i1, j1): 1.0}
    if (i1, j1) == (0, 1):
        return {(0, 1): params.b1, (1, 0): 1.0 - params.b1}
    return {(1, 0): params.b2, (0, 1): 1.0 - params.b2}


# ---------------------------------------------------------------------------
# Monte Carlo sampler
# ---------------------------------------------------------------------------

_SM64_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM64_M1 = np.uint64(0xBF58476D1CE4E5B9)
_SM64_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _splitmix_init(seed, replica):
    s = np.uint64(seed) * np.uint64(0x9E3779B97F4A7C15) + np.uint64(replica)
    # one scramble round so nearby (seed, replica) keys decorrelate
    s ^= s >> np.uint64(30)
    s *= np.uint64(0xBF58476D1CE4E5B9)
    s ^= s >> np.uint64(27)
    s *= np.uint64(0x94D049BB133111EB)
    s ^= s >> np.uint64(31)
    return s


@njit(cache=True, nogil=True)
def _sweep_one(M, N, b1, b2, seed, replica):
    """One replica: row-major sweep, returns h(M, N).

    Uniforms come from a splitmix64 stream keyed by (seed, replica), drawn
    only at branching vertices, so replicas are reproducible independently
    of scheduling.
    """
    state = np.zeros(M, dtype=np.uint8)
    s = _splitmix_init(seed, replica)
    right_exits = 0
    for _ in range(N):
        carry = 1
        for c in range(M):
            j1 = state[c]
            if carry == j1:
                continue  # (0,0) and (1,1) pass through
            s += np.uint64(0x9E3779B97F4A7C15)
            z = s
            z ^= z >> np.uint64(30)
            z *= np.uint64(0xBF58476D1CE4E5B9)
            z ^= z >> np.uint64(27)
            z *= np.uint64(0x94D049BB133111EB)
            z ^= z >> np.uint64(31)
            uni = (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)
            if carry == 1:  # lone horizontal arrow
                if uni < b1:
                    pass  # continues right: carry stays 1
                else:
                    state[c] = 1
                    carry = 0
            else:  # lone vertical arrow
                if uni < b2:
                    pass  # continues up
                else:
                    state[c] = 0
                    carry = 1
        right_exits += carry
    return right_exits + state[M - 1]


@njit(cache=True, nogil=True)
def _sweep_block(M, N, b1, b2, seed, rep_lo, rep_hi, out):
    for r in range(rep_lo, rep_hi):
        out[r - rep_lo] = _sweep_one(M, N, b1, b2, seed, r)


def sample_height(params: S6VParams, M: int, N: int, seed: int) -> int:
    """One sample of h(M, N); deterministic given seed."""
    if M < 1:
        raise ValueError("M must be >= 1")
    if N == 0:
        return 0
    return int(_sweep_one(M, N, params.b1, params.b2, seed, 0))


def sample_heights(
    params: S6VParams,
    M: int,
    N: int,
    n_samples: int,
    seed: int,
    threads: int = 1,
) -> np.ndarray:
    """Monte Carlo samples of h(M, N), replica r keyed by (seed, r).

    Output is independent of the thread count: each replica owns its RNG
    stream.
    """
    if N == 0:
        return np.zeros(n_samples, dtype=np.int64)
    out = np.empty(n_samples, dtype=np.int64)
    if threads <= 1 or n_samples < 256:
        _sweep_block(M, N, params.b1, params.b2, seed, 0, n_samples, out)
        return out
    bounds = np.linspace(0, n_samples, threads + 1).astype(np.int64)
    chunks = [np.empty(bounds[i + 1] - bounds[i], dtype=np.int64) for i in range(threads)]

    def work(i):
        _sweep_block(
            M, N, params.b1, params.b2, seed, bounds[i], bounds[i + 1], chunks[i]
        )

    with ThreadPoolExecutor(max_workers=threads) as ex:
        list(ex.map(work, range(threads)))
    for i in range(threads):
        out[bounds[i] : bounds[i + 1]] = chunks[i]
    return out


# ---------------------------------------------------------------------------
# Exact transfer-matrix pmf
# ---------------------------------------------------------------------------


def exact_height_pmf(params: S6VParams, M: int, N: int) -> HeightPmf:
    """Exact pmf of h(M, N) by DP over 2^M vertical-edge states.

    State per row: vertical-edge outputs (bit c = column c+1 occupied) plus
    the count R of paths that already exited the strip through column M.
    h(M, N) = R + (bit at column M).
    """
    if M > MAX_WIDTH:
        raise WidthTooLarge(f"M={M} exceeds the 2^{MAX_WIDTH}-state guard")
    if M < 1 or N < 0:
        raise ValueError("need M >= 1, N >= 0")
    if N == 0:
        return HeightPmf(M, N, (0,), (1.0,))

    S = 1 << M
    states = np.arange(S)
    b1, b2 = params.b1, params.b2
    # P[state, R] after each completed row
    P = np.zeros((S, N + 1))
    P[0, 0] = 1.0
    for _ in range(N):
        # C[state, carry, R]; inject a horizontal arrow at column 1
        C = np.zeros((S, 2, N + 1))
        C[:, 1, :] = P
        for c in range(M):
            bit = (states >> c) & 1
            m0 = bit == 0
            m1 = ~m0
            flip = states ^ (1 << c)
            C2 = np.zeros_like(C)
            C2[m0, 0] += C[m0, 0]  # empty vertex
            C2[m1, 1] += C[m1, 1]  # doubly occupied: both pass
            # lone horizontal arrow: continues (b1) or turns up (1-b1)
            C2[m0, 1] += b1 * C[m0, 1]
            C2[flip[m0], 0] += (1.0 - b1) * C[m0, 1]
            # lone vertical arrow: continues (b2) or turns right (1-b2)
            C2[m1, 0] += b2 * C[m1, 0]
            C2[flip[m1], 1] += (1.0 - b2) * C[m1, 0]
            C = C2
        P = C[:, 0, :].copy()
        P[:, 1:] += C[:, 1, :-1]  # carry=1 after column M: one more exit
    top_bit = (states >> (M - 1)) & 1
    pmf = np.zeros(N + 2)
    for shift in (0, 1):
        sel = top_bit == shift
        pmf[shift : N + 1 + shift] += P[sel].sum(axis=0)
    total = pmf.sum()
    if abs(total - 1.0) > 1e-12:
        raise AssertionError(f"pmf mass {total} deviates from 1")
    support = np.nonzero(pmf > 0.0)[0]
    return HeightPmf(M, N, tuple(int(h) for h in support), tuple(float(pmf[h]) for h in support))


# ---------------------------------------------------------------------------
# q-Laplace functional and scaling constants
# ---------------------------------------------------------------------------


def _log_qlaplace_factor(q: float, zeta: float, h: int) -> float:
    """log prod_{i>=1} 1/(1 + zeta q^{h+i}), truncated with certified tail."""
    if zeta == 0.0:
        return 0.0
    # tail beyond K: sum_{i>K} log(1+zeta q^{h+i}) <= zeta q^{h+K+1}/(1-q)
    acc = 0.0
    i = 1
    while True:
        x = zeta * q ** (h + i)
        acc -= math.log1p(x)
        if x / (1.0 - q) * q <= 1e-16:
            break
        i += 1
        if i > 100000:  # pragma: no cover
            raise RuntimeError("q-Laplace truncation did not converge")
    return acc


def qlaplace_of_height(params: S6VParams, pmf: HeightPmf, zeta: float) -> float:
    """E[prod_{i>=1} 1/(1 + zeta q^{h+i})] over the exact pmf."""
    if zeta < 0:
        raise ValueError("zeta must be >= 0")
    q = params.q
    return float(
        sum(p * math.exp(_log_qlaplace_factor(q, zeta, h)) for h, p in zip(pmf.support, pmf.probs))
    )


def qlaplace_of_samples(params: S6VParams, samples: np.ndarray, zeta: float) -> float:
    """Monte Carlo estimate of the q-Laplace functional from height samples."""
    vals, counts = np.unique(np.asarray(samples), return_counts=True)
    q = params.q
    tot = counts.sum()
    return float(
        sum(
            cnt / tot * math.exp(_log_qlaplace_factor(q, zeta, int(h)))
            for h, cnt in zip(vals, counts)
        )
    )


def scaling_constants(params: S6VParams, nu: float) -> ScalingConstants:
    """Centering and scaling constants for the rescaled height."""
    kappa = params.kappa
    if not 1.0 < nu < math.sqrt(params.q) * params.u:
        raise SlopeOutOfLiquidRegion(
            f"nu={nu} outside (1, q^(1/2) u) = (1, {math.sqrt(params.q)*params.u})"
        )
    a_eq = (1.0 - math.sqrt(nu * kappa)) ** 2 / (1.0 - kappa)
    c = (
        math.sqrt(kappa)
        * nu ** (-1.0 / 6.0)
        / (1.0 - kappa)
        * ((1.0 - math.sqrt(nu * kappa)) * (math.sqrt(nu / kappa) - 1.0)) ** (2.0 / 3.0)
    )
    return ScalingConstants(nu=nu, a_eq=a_eq, c=c, q=params.q, kappa=kappa)


def rescaled_height(consts: ScalingConstants, N: int, h) -> float:
    """(h - a_eq N) / (c N^{1/3})."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return (np.asarray(h, dtype=float) - consts.a_eq * N) / (consts.c * N ** (1.0 / 3.0))


def tail_bounds_from_qlaplace(
    consts: ScalingConstants, N: int, h: float, eps: float, qlaplace_value: float
) -> dict:
    """Two-sided comparison bounds between tail probabilities and the
    q-Laplace value, with the explicit correction terms evaluated.

    Returns {"upper_tail": (lo, hi), "lower_tail": (lo, hi)} bracketing
    P(H >= (1 -/+ eps) h) and P(H <= -(1 -/+ eps) h) around the q-Laplace
    expectation E and 1 - E respectively.
    """
    if h <= 0 or not 0.0 < eps < 1.0:
        raise ValueError("need h > 0 and 0 < eps < 1")
    q = consts.q
    logq_inv = math.log(1.0 / q)
    mult = math.exp(q ** (eps * h * N ** (1.0 / 3.0)) / (1.0 - q))
    gauss = math.exp(-0.5 * logq_inv * (eps * h * consts.c) ** 2 * N ** (2.0 / 3.0))
    E = qlaplace_value
    return {
        "upper_tail": (E - gauss, mult * E),
        "lower_tail": (1.0 - mult * E, 1.0 - E + gauss),
    }
