"""Discrete orthogonal polynomial ensembles on the positive integers.

An ensemble places n particles on Z_{>0} with density proportional to the
squared Vandermonde times a product of weights w(x).  Everything here is
finite linear algebra on a truncated support with certified tail bounds:
weights live in the log domain, orthonormal polynomials are built by the
Stieltjes (discrete Lanczos) procedure with full reorthogonalisation, and
multiplicative statistics are computed both as partition-function ratios and
as finite determinants of the Christoffel-Darboux kernel.

The Meixner weight follows the Z_{>0} convention
    w(x) = Gamma(alpha+x-1) / (Gamma(alpha) Gamma(x)) * beta^{x-1},
so w(1) = 1 and w(2) = alpha*beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy.special import gammaln


class ParameterOutOfRange(ValueError):
    pass


class DegenerateWeight(ValueError):
    pass


class PrecisionExhausted(RuntimeError):
    pass


class RoutesDisagree(RuntimeError):
    """Partition-ratio and determinant routes differ beyond tolerance."""


@dataclass(frozen=True)
class DiscreteWeight:
    """Truncated weight on sites 1..x_max, stored as log w."""

    log_w: np.ndarray  # log w(x) for x = 1..x_max
    x_max: int
    tail_bound: float  # neglected mass x^(working degree), relative to retained

    @property
    def sites(self) -> np.ndarray:
        return np.arange(1, self.x_max + 1)

    def w(self) -> np.ndarray:
        return np.exp(self.log_w)


@dataclass(frozen=True)
class OPBasis:
    """Monic three-term recurrence p_{k+1} = (x - a_k) p_k - b_k p_{k-1}.

    log_gamma2_inv[k] = log gamma_k^{-2} = log ||p_k||_w^2.
    """

    n: int
    a: np.ndarray
    b: np.ndarray  # b[0] unused, b[k] = ||p_k||^2/||p_{k-1}||^2
    log_gamma2_inv: np.ndarray
    ortho_residual: float


@dataclass(frozen=True)
class KernelMatrix:
    """Christoffel-Darboux kernel K_n on a finite window of sites.

    ``weighted`` is the symmetrised matrix A(x,y) = sqrt(w(x)) K(x,y)
    sqrt(w(y)) = sum_k q_k(x) q_k(y) with q_k the weighted orthonormal
    polynomials; it is the numerically robust object.  ``values`` is the
    plain K_n(x,y) (may overflow deep in the exponentially small gap).
    """

    window: np.ndarray
    weighted: np.ndarray
    log_w: np.ndarray
    n: int

    @property
    def values(self) -> np.ndarray:
        half = np.exp(-0.5 * self.log_w)
        return self.weighted * half[:, None] * half[None, :]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_w)


# ---------------------------------------------------------------------------
# Weights
# ---------------------------------------------------------------------------


def _meixner_log_w(alpha: float, beta: float, x_max: int) -> np.ndarray:
    x = np.arange(1, x_max + 1, dtype=float)
    return gammaln(alpha + x - 1.0) - gammaln(alpha) - gammaln(x) + (x - 1.0) * math.log(beta)


def meixner_weight(alpha: float, beta: float, working_degree: int = 0) -> DiscreteWeight:
    """Meixner weight on Z_{>0}, truncated with a certified moment tail.

    The truncation x_max is chosen so that the neglected tail of
    sum w(x) x^working_degree is below 1e-16 of the retained part (the
    ratio w(x+1)/w(x) = beta (alpha+x-1)/x < 1 eventually gives a geometric
    bound).
    """
    if alpha <= 0:
        raise ParameterOutOfRange(f"alpha must be > 0, got {alpha}")
    if not 0.0 < beta < 1.0:
        raise ParameterOutOfRange(f"beta must lie in (0,1), got {beta}")
    d = max(int(working_degree), 0)
    # start beyond the weight mode and grow until the geometric bound certifies
    x_max = max(64, int(2 * (alpha * beta / (1.0 - beta) + d / math.log(1.0 / beta))) + 64)
    while True:
        log_w = _meixner_log_w(alpha, beta, x_max)
        xs = np.arange(1, x_max + 1, dtype=float)
        logm = log_w + d * np.log(xs)
        retained = _logsumexp(logm)
        # ratio of w(x) x^d at consecutive sites, evaluated at the edge
        r = beta * (alpha + x_max - 1.0) / x_max * ((x_max + 1.0) / x_max) ** d
        if r < 1.0:
            tail = math.exp(logm[-1] - retained) * r / (1.0 - r)
            if tail < 1e-16:
                return DiscreteWeight(log_w=log_w, x_max=x_max, tail_bound=tail)
        x_max *= 2
        if x_max > 10**7:  # pragma: no cover
            raise ParameterOutOfRange("truncation did not certify; parameters too extreme")


def deformed_weight(w: DiscreteWeight, t: float, s: float, a: float, N: int) -> DiscreteWeight:
    """w^sigma(x) = (1 + e^{-t(x - aN) - s}) w(x), in log domain."""
    if t <= 0:
        raise ParameterOutOfRange("t must be > 0")
    x = w.sites.astype(float)
    bump = np.logaddexp(0.0, -t * (x - a * N) - s)
    return DiscreteWeight(log_w=w.log_w + bump, x_max=w.x_max, tail_bound=w.tail_bound)


def _logsumexp(v: np.ndarray) -> float:
    m = float(np.max(v))
    return m + math.log(float(np.sum(np.exp(v - m))))


# ---------------------------------------------------------------------------
# Stieltjes procedure
# ---------------------------------------------------------------------------


def _stieltjes_float(x: np.ndarray, log_w: np.ndarray, n: int):
    """Lanczos on diag(x) with start vector sqrt(w), fully reorthogonalised.

    Returns (a, b, log_gamma2_inv, residual, Q) where Q rows are the
    weighted orthonormal polynomials q_k(x) = gamma_k p_k(x) sqrt(w(x)).
    """
    L = float(np.max(log_w))
    sw = np.exp(0.5 * (log_w - L))
    norm0_sq = float(np.dot(sw, sw))
    if norm0_sq <= 0:
        raise DegenerateWeight("weight has no mass on the truncated support")
    Q = np.empty((n, x.size))
    a = np.zeros(n)
    b = np.zeros(n)
    logg = np.zeros(n)
    q = sw / math.sqrt(norm0_sq)
    Q[0] = q
    logg[0] = math.log(norm0_sq) + L
    q_prev = np.zeros_like(q)
    beta_prev = 0.0
    for k in range(n):
        a[k] = float(np.dot(x * Q[k], Q[k]))
        if k == n - 1:
            break
        r = (x - a[k]) * Q[k] - beta_prev * q_prev
        # full reorthogonalisation (twice) keeps residuals at rounding level
        for _ in range(2):
            r -= Q[: k + 1].T @ (Q[: k + 1] @ r)
        beta = float(np.linalg.norm(r))
        if beta <= 1e-14 * max(1.0, abs(a[k])):
            raise DegenerateWeight(
                f"Lanczos breakdown at k={k + 1}: support has < n effective points"
            )
        q_prev = Q[k]
        Q[k + 1] = r / beta
        beta_prev = beta
        b[k + 1] = beta * beta
        logg[k + 1] = logg[k] + 2.0 * math.log(beta)
    G = Q @ Q.T
    residual = float(np.max(np.abs(G - np.eye(n))))
    return a, b, logg, residual, Q


def _stieltjes_mp(x: np.ndarray, log_w: np.ndarray, n: int, dps: int):
    """Extended-precision Stieltjes (classical monic recurrence)."""
    with mp.workdps(dps):
        L = mp.mpf(float(np.max(log_w)))
        wv = [mp.e ** (mp.mpf(float(lw)) - L) for lw in log_w]
        xv = [mp.mpf(int(xx)) for xx in x]
        m = len(xv)
        p_prev = [mp.mpf(0)] * m
        p_cur = [mp.mpf(1)] * m
        norm_prev = mp.mpf(1)
        norm_cur = mp.fsum(wv)
        a = np.zeros(n)
        b = np.zeros(n)
        logg = np.zeros(n)
        logg[0] = float(mp.log(norm_cur) + L)
        for k in range(n):
            ak = mp.fsum(xv[i] * p_cur[i] ** 2 * wv[i] for i in range(m)) / norm_cur
            a[k] = float(ak)
            if k == n - 1:
                break
            bk = norm_cur / norm_prev if k > 0 else mp.mpf(0)
            p_next = [
                (xv[i] - ak) * p_cur[i] - (bk * p_prev[i] if k > 0 else mp.mpf(0))
                for i in range(m)
            ]
            p_prev, p_cur = p_cur, p_next
            norm_prev = norm_cur
            norm_cur = mp.fsum(p_cur[i] ** 2 * wv[i] for i in range(m))
            if norm_cur <= 0:
                raise DegenerateWeight("extended-precision breakdown")
            b[k + 1] = float(norm_cur / norm_prev)
            logg[k + 1] = float(mp.log(norm_cur) + L)
    return a, b, logg


def _weighted_q_mp(x: np.ndarray, log_w: np.ndarray, n: int, window_idx: np.ndarray, dps: int) -> np.ndarray:
    """q_k(x) sqrt(w(x)) on selected sites by an extended-precision Stieltjes pass.

    The float recurrence for the weighted orthonormal polynomials is
    exponentially unstable at sites deep outside the oscillatory region of
    the high-degree polynomials (the true values are the recessive
    solution there), so this recomputes them from scratch: the classical
    monic Stieltjes procedure is run at ``dps`` digits and the orthonormal
    values q_k = p_k / gamma_k^{-1} are read off at the requested sites.
    """
    with mp.workdps(dps):
        L = mp.mpf(float(np.max(log_w)))
        wv = [mp.e ** (mp.mpf(float(lw)) - L) for lw in log_w]
        swv_win = [mp.e ** ((mp.mpf(float(log_w[j])) - L) / 2) for j in window_idx]
        xv = [mp.mpf(int(xx)) for xx in x]
        m = len(xv)
        win = [int(j) for j in window_idx]
        Q = np.empty((n, len(win)))
        p_prev = [mp.mpf(0)] * m
        p_cur = [mp.mpf(1)] * m
        norm_prev = mp.mpf(1)
        norm_cur = mp.fsum(wv)
        for k in range(n):
            inv_norm = 1 / mp.sqrt(norm_cur)
            for c, j in enumerate(win):
                Q[k, c] = float(p_cur[j] * swv_win[c] * inv_norm)
            if k == n - 1:
                break
            ak = mp.fsum(xv[i] * p_cur[i] ** 2 * wv[i] for i in range(m)) / norm_cur
            bk = norm_cur / norm_prev if k > 0 else mp.mpf(0)
            p_next = [
                (xv[i] - ak) * p_cur[i] - (bk * p_prev[i] if k > 0 else mp.mpf(0))
                for i in range(m)
            ]
            p_prev, p_cur = p_cur, p_next
            norm_prev = norm_cur
            norm_cur = mp.fsum(p_cur[i] ** 2 * wv[i] for i in range(m))
            if norm_cur <= 0:
                raise DegenerateWeight("extended-precision breakdown")
    return Q


_DIAG_TOL = 1e-6


def _repair_unstable_columns(Q: np.ndarray, w: DiscreteWeight, n: int, window: np.ndarray) -> np.ndarray:
    """Replace float-recurrence garbage columns of Q by mp recomputation.

    Detection uses the exact bound sum_k q_k(x)^2 = K(x,x) w(x) in [0, 1]:
    columns violating it beyond _DIAG_TOL (plus a safety margin of
    neighbours) are recomputed.  The working precision is sized from the
    observed blow-up (float roundoff 1e-16 amplified to sqrt(max diag))
    and escalated until the recomputed diagonal honours the bound.
    """
    diag = np.einsum("kx,kx->x", Q, Q)
    bad = (diag > 1.0 + _DIAG_TOL) | (diag < -_DIAG_TOL)
    if not np.any(bad):
        return Q
    idx = np.nonzero(bad)[0]
    patch = np.unique(np.clip(idx[:, None] + np.arange(-4, 5)[None, :], 0, Q.shape[1] - 1))
    amp_digits = 16.0 + 0.5 * math.log10(max(float(np.max(diag[bad])), 1.0))
    dps = int(amp_digits) + 40
    window_idx = np.asarray(window, dtype=int)[patch] - 1
    while True:
        Q_fix = _weighted_q_mp(w.sites, w.log_w, n, window_idx, dps)
        d_fix = np.einsum("kx,kx->x", Q_fix, Q_fix)
        if np.all(d_fix <= 1.0 + 1e-12) and np.all(d_fix >= -1e-12):
            break
        dps = int(dps * 1.6)
        if dps > 600:
            raise PrecisionExhausted(
                f"kernel column repair needs more than {dps} digits"
            )
    Q = Q.copy()
    Q[:, patch] = Q_fix
    return Q


def build_basis(w: DiscreteWeight, n: int, residual_tol: float = 1e-10) -> OPBasis:
    """Monic OP recurrence + norming constants by the Stieltjes procedure.

    Escalates to 50-digit arithmetic if the float orthogonality residual
    exceeds residual_tol.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    positive = np.count_nonzero(np.isfinite(w.log_w))
    if positive < n:
        raise DegenerateWeight(f"support has {positive} points < n={n}")
    x = w.sites.astype(float)
    a, b, logg, residual, _ = _stieltjes_float(x, w.log_w, n)
    if residual > residual_tol:
        for dps in (50, 100):
            try:
                a, b, logg = _stieltjes_mp(w.sites, w.log_w, n, dps)
            except DegenerateWeight:
                raise
            residual = _ortho_residual(w, OPBasis(n, a, b, logg, 0.0))
            if residual <= residual_tol:
                break
        else:
            raise PrecisionExhausted(f"orthogonality residual {residual} > {residual_tol}")
    return OPBasis(n=n, a=a, b=b, log_gamma2_inv=logg, ortho_residual=residual)


def _ortho_residual(w: DiscreteWeight, basis: OPBasis) -> float:
    Q = _orthonormal_weighted(basis, w, w.sites)
    G = Q @ Q.T
    return float(np.max(np.abs(G - np.eye(basis.n))))


def _orthonormal_weighted(basis: OPBasis, w: DiscreteWeight, window: np.ndarray) -> np.ndarray:
    """q_k(x) sqrt(w(x)) on the window via the orthonormal recurrence.

    The recurrence for the orthonormal polynomials reads
      sqrt(b_{k+1}) qt_{k+1} = (x - a_k) qt_k - sqrt(b_k) qt_{k-1};
    multiplying by sqrt(w) keeps magnitudes bounded in the bulk.  Outside
    the bulk the weighted values decay, so no per-site rescaling triggers
    for the windows used here; a guard escalates if it would.
    """
    idx = np.asarray(window, dtype=int) - 1
    if np.any(idx < 0) or np.any(idx >= w.x_max):
        raise IndexError("window outside the truncated support")
    x = np.asarray(window, dtype=float)
    n = basis.n
    Q = np.empty((n, x.size))
    logg0 = basis.log_gamma2_inv[0]
    q = np.exp(0.5 * (w.log_w[idx] - logg0))
    Q[0] = q
    q_prev = np.zeros_like(q)
    sb_prev = 0.0
    for k in range(n - 1):
        sb = math.sqrt(basis.b[k + 1])
        q_next = ((x - basis.a[k]) * Q[k] - sb_prev * q_prev) / sb
        q_prev = Q[k]
        Q[k + 1] = q_next
        sb_prev = sb
    return Q


def cd_kernel(basis: OPBasis, w: DiscreteWeight, window) -> KernelMatrix:
    """K_n on the window (stored in weighted, symmetrised form).

    Columns where the float recurrence is unstable (deep in the saturated
    or void region) are detected via the bound K(x,x) w(x) in [0, 1] and
    recomputed in extended precision.
    """
    window = np.asarray(window, dtype=int)
    Q = _orthonormal_weighted(basis, w, window)
    Q = _repair_unstable_columns(Q, w, basis.n, window)
    A = Q.T @ Q
    idx = window - 1
    return KernelMatrix(window=window, weighted=A, log_w=w.log_w[idx], n=basis.n)


def log_partition_function(basis: OPBasis, n: int) -> float:
    """log Z_n = log n! + sum_{k<n} log gamma_k^{-2}."""
    if n > basis.n:
        raise ValueError("basis degree too small")
    return math.lgamma(n + 1) + float(np.sum(basis.log_gamma2_inv[:n]))


# ---------------------------------------------------------------------------
# Multiplicative statistics
# ---------------------------------------------------------------------------


def _logdet(mat: np.ndarray) -> tuple:
    sign, logdet = np.linalg.slogdet(mat)
    return float(sign), float(logdet)


def log_multiplicative_statistic_det(w: DiscreteWeight, basis: OPBasis, f: np.ndarray) -> float:
    """log E[prod(1+f(x))] = log det(I + A diag(f)) on the significant window.

    f is given on the full truncated support; sites with |f| <= 1e-18 are
    dropped (their contribution to the log-determinant is bounded by
    sum |f| K(x,x) w(x) <= n max|f| over the dropped set).
    """
    keep = np.nonzero(np.abs(f) > 1e-18)[0]
    if keep.size == 0:
        return 0.0
    window = keep + 1
    K = cd_kernel(basis, w, window)
    mat = np.eye(keep.size) + K.weighted * f[keep][None, :]
    sign, logdet = _logdet(mat)
    if sign <= 0:
        raise RoutesDisagree("determinant route produced a non-positive value")
    return logdet


def multiplicative_statistic(w: DiscreteWeight, n: int, f, rel_tol: float = 1e-8) -> float:
    """E[prod_{x in X}(1 + f(x))] for the n-particle ensemble with weight w.

    Computed both as Z_n((1+f)w)/Z_n(w) (two basis builds) and as
    det(I + K_n f) on the window where f is non-negligible; asserts the two
    routes agree within rel_tol and returns the determinant value.
    """
    fx = np.asarray(f(w.sites.astype(float)) if callable(f) else f, dtype=float)
    if np.any(fx < -1.0):
        raise ParameterOutOfRange("f must be bounded below by -1")
    basis = build_basis(w, n)
    log_det = log_multiplicative_statistic_det(w, basis, fx)
    w_def = DiscreteWeight(log_w=w.log_w + np.log1p(fx), x_max=w.x_max, tail_bound=w.tail_bound)
    basis_def = build_basis(w_def, n)
    log_ratio = log_partition_function(basis_def, n) - log_partition_function(basis, n)
    if abs(log_det - log_ratio) > rel_tol * max(1.0, abs(log_det)):
        raise RoutesDisagree(
            f"det route {log_det} vs partition route {log_ratio} "
            f"(diff {abs(log_det - log_ratio):.3e})"
        )
    return math.exp(log_det)


def log_hole_statistic(w: DiscreteWeight, n: int, g: np.ndarray) -> float:
    """log E[prod_{holes} 1/(1 + sigma)] with g = sigma/(1+sigma) on sites.

    Uses the cancellation-free hole-process determinant
        log L = log det(I - sqrt(g) (I - A) sqrt(g))
    restricted to sites where g is non-negligible; I - A is the hole
    kernel, exponentially small in the saturated region, so no large terms
    cancel.
    """
    basis = build_basis(w, n)
    keep = np.nonzero(g > 1e-18)[0]
    if keep.size == 0:
        return 0.0
    window = keep + 1
    K = cd_kernel(basis, w, window)
    sq = np.sqrt(g[keep])
    mat = np.eye(keep.size) - sq[:, None] * (np.eye(keep.size) - K.weighted) * sq[None, :]
    sign, logdet = _logdet(mat)
    if sign <= 0:
        raise RoutesDisagree("hole determinant non-positive")
    return logdet


def hole_statistic_L(w: DiscreteWeight, n: int, t: float, s: float, a: float, N: int) -> float:
    """log L_N(s) = log S_N(s) - sum_{x>=1} log(1 + e^{-t(x-aN)-s}).

    The infinite sum beyond the truncated support is completed with a
    certified geometric tail bound.
    """
    x = w.sites.astype(float)
    logsig = -t * (x - a * N) - s
    sigma = np.exp(np.minimum(logsig, 700.0))
    g = np.where(logsig > 35.0, 1.0, sigma / (1.0 + sigma))
    log_L = log_hole_statistic(w, n, g)
    # sanity: the analytic sum must be finite over the truncation
    tail = math.exp(-t * (w.x_max + 1 - a * N) - s) / (1.0 - math.exp(-t))
    if tail > 1e-14:
        raise ParameterOutOfRange("deformation wall beyond the truncated support")
    return log_L


def log_deformed_sum(t: float, s: float, a: float, N: int, x_max: int | None = None) -> float:
    """sum_{x>=1} log(1 + e^{-t(x-aN)-s}) with geometric tail completion."""
    if x_max is None:
        x_max = int(max(a * N - s / t, 0) + 60.0 / t) + 2
    x = np.arange(1, x_max + 1, dtype=float)
    total = float(np.sum(np.logaddexp(0.0, -t * (x - a * N) - s)))
    tail = math.exp(-t * (x_max + 1 - a * N) - s) / (1.0 - math.exp(-t))
    return total + tail


def counting_mgf(kernel: KernelMatrix, interval, v: float) -> float:
    """E[e^{-v #(interval)}] = det(I - (1-e^{-v}) K) on the interval."""
    if v < 0:
        raise ParameterOutOfRange("v must be >= 0")
    interval = np.asarray(interval, dtype=int)
    pos = {int(s): i for i, s in enumerate(kernel.window)}
    try:
        idx = np.array([pos[int(s)] for s in interval], dtype=int)
    except KeyError as e:
        raise ValueError(f"interval site {e} outside kernel window") from None
    sub = kernel.weighted[np.ix_(idx, idx)]
    mat = np.eye(idx.size) - (1.0 - math.exp(-v)) * sub
    return float(np.linalg.det(mat))
