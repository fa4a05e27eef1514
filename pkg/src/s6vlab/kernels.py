"""Airy and Bessel kernels, their tail asymptotics, and Fredholm determinants.

The Airy kernel A(x,y) = (Ai(x)Ai'(y) - Ai(y)Ai'(x))/(x-y) governs edge
fluctuations; its Fredholm determinant on (s, oo) is the GUE Tracy-Widom
distribution F_GUE(s).  The Bessel-type kernel diagonal
(J0'(sqrt x)^2 + J0(sqrt x)^2)/4 appears in the bulk-to-edge matching and is
entire in x.  Semi-infinite Fredholm determinants use Gauss-Legendre
quadrature after an exponential change of variables that exploits the
kernel decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special


class DomainTooSmall(ValueError):
    """Asymptotic form requested too close to the origin."""


class NotConverged(RuntimeError):
    """Nystrom discretization did not stabilize under node doubling."""


@dataclass(frozen=True)
class AiryEval:
    """Airy function value and derivative at a point."""

    x: float
    ai: float
    ai_prime: float


def airy_eval(x: float) -> AiryEval:
    """Evaluate Ai and Ai' (scipy backend)."""
    ai, aip, _, _ = special.airy(x)
    return AiryEval(x=float(x), ai=float(ai), ai_prime=float(aip))


def airy_kernel(x: float, y: float) -> float:
    """Airy kernel (Ai(x)Ai'(y) - Ai(y)Ai'(x)) / (x - y).

    Near the diagonal (|x-y| < 1e-6) the confluent form
    Ai'(m)^2 - m Ai(m)^2 at the midpoint m is used; Ai'' = x Ai by the
    Airy equation, so the diagonal value is Ai'(x)^2 - Ai(x) Ai''(x).
    """
    if abs(x - y) < 1e-6:
        m = 0.5 * (x + y)
        ai, aip, _, _ = special.airy(m)
        return float(aip * aip - m * ai * ai)
    aix, aipx, _, _ = special.airy(x)
    aiy, aipy, _, _ = special.airy(y)
    return float((aix * aipy - aiy * aipx) / (x - y))


def airy_kernel_matrix(pts: np.ndarray) -> np.ndarray:
    """Symmetric Airy-kernel matrix on a vector of points."""
    pts = np.asarray(pts, dtype=float)
    ai, aip, _, _ = special.airy(pts)
    dx = pts[:, None] - pts[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        K = (ai[:, None] * aip[None, :] - ai[None, :] * aip[:, None]) / dx
    near = np.abs(dx) < 1e-6
    if np.any(near):
        mid = 0.5 * (pts[:, None] + pts[None, :])
        aim, aipm, _, _ = special.airy(mid)
        K = np.where(near, aipm * aipm - mid * aim * aim, K)
    return K


def airy_diag_asymptotics(x: float) -> tuple:
    """Leading-order diagonal asymptotics (positive-side, negative-side).

    For x > 0: A(x,x) ~ e^{-(4/3)x^{3/2}} / (8 pi x); for x < 0:
    A(x,x) ~ |x|^{1/2} / pi.  Both reference values are returned for |x|.
    """
    ax = abs(x)
    if ax < 2.0:
        raise DomainTooSmall(f"|x| = {ax} < 2: asymptotics unreliable")
    pos = math.exp(-4.0 / 3.0 * ax ** 1.5) / (8.0 * math.pi * ax)
    neg = math.sqrt(ax) / math.pi
    return pos, neg


_TAIL_SWITCH = 14.0


def airy_tail_integral(t: float) -> float:
    """Integral of the Airy-kernel diagonal A(y,y) over (t, oo).

    Adaptive quadrature up to a switch point, then the Laplace-method
    tail e^{-(4/3)S^{3/2}} / (16 pi S^{3/2}); at S = 14 the tail is below
    1e-30 so the switch error is negligible.
    """
    diag = lambda y: airy_kernel(y, y)
    S = max(t, _TAIL_SWITCH)
    total = 0.0
    if t < S:
        val, _ = integrate.quad(diag, t, S, limit=400)
        total += val
    total += math.exp(-4.0 / 3.0 * S ** 1.5) / (16.0 * math.pi * S ** 1.5)
    return total


def bessel_kernel_diag(x: float) -> float:
    """Diagonal (J0'(sqrt x)^2 + J0(sqrt x)^2)/4, extended entire to x <= 0.

    J0' = -J1; for x < 0 the continuation sqrt(x) = i sqrt(|x|) turns the
    Bessel J functions into modified ones, giving (I0^2 - I1^2)/4.  A short
    power series 1/4 - x/16 + x^2/128 covers the immediate neighborhood of
    zero where the subtraction loses accuracy.
    """
    if abs(x) < 1e-8:
        return 0.25 - x / 16.0 + x * x / 128.0
    if x > 0:
        r = math.sqrt(x)
        return 0.25 * (special.j1(r) ** 2 + special.j0(r) ** 2)
    r = math.sqrt(-x)
    return 0.25 * (special.i0(r) ** 2 - special.i1(r) ** 2)


def tw_tail_reference(h: float) -> tuple:
    """Leading-order GUE Tracy-Widom tails (upper, lower) at height h.

    Upper tail 1 - F_GUE(h) ~ e^{-(2/3)h^{3/2}}, lower tail
    F_GUE(-h) ~ e^{-h^3/12}, both up to algebraic prefactors.
    """
    if h <= 0:
        raise ValueError("h must be > 0")
    return math.exp(-2.0 / 3.0 * h ** 1.5), math.exp(-(h ** 3) / 12.0)


@dataclass(frozen=True)
class NystromGrid:
    """Quadrature nodes/weights for a (possibly semi-infinite) interval."""

    a: float
    b: float
    nodes: np.ndarray
    weights: np.ndarray


def nystrom_grid(a: float, b: float, m: int, decay_scale: float = 1.0) -> NystromGrid:
    """Gauss-Legendre grid on (a, b); for b = oo the exponential map
    x = a - decay_scale * log(1 - u), u in (0, 1), concentrates nodes where
    a decaying kernel has mass."""
    u, gw = np.polynomial.legendre.leggauss(m)
    if math.isinf(b):
        u01 = 0.5 * (u + 1.0)
        w01 = 0.5 * gw
        nodes = a - decay_scale * np.log1p(-u01)
        weights = w01 * decay_scale / (1.0 - u01)
    else:
        nodes = 0.5 * (b - a) * u + 0.5 * (b + a)
        weights = 0.5 * (b - a) * gw
    return NystromGrid(a=float(a), b=float(b), nodes=nodes, weights=weights)


def fredholm_det(
    kernel,
    interval,
    m: int = 60,
    decay_scale: float = 1.0,
    tol: float = 1e-8,
) -> float:
    """det(I - K) on L^2(interval) by symmetric Nystrom discretization.

    `kernel` maps a node vector to the symmetric kernel matrix (or is a
    scalar function of (x, y)).  The determinant is computed at m and 2m
    nodes; the result is accepted only if doubling changes it by < tol.
    """

    def matrix_of(pts):
        if callable(kernel):
            try:
                K = kernel(pts)
                K = np.asarray(K, dtype=float)
                if K.shape == (pts.size, pts.size):
                    return K
            except TypeError:
                pass
            return np.array([[kernel(x, y) for y in pts] for x in pts])
        raise TypeError("kernel must be callable")

    a, b = interval

    def det_at(mm):
        grid = nystrom_grid(a, b, mm, decay_scale)
        K = matrix_of(grid.nodes)
        sw = np.sqrt(grid.weights)
        return float(np.linalg.det(np.eye(mm) - sw[:, None] * K * sw[None, :]))

    d1 = det_at(m)
    d2 = det_at(2 * m)
    if abs(d2 - d1) >= tol:
        raise NotConverged(
            f"Fredholm determinant moved by {abs(d2 - d1):.3e} under node "
            f"doubling (m={m})"
        )
    return d2


def tracy_widom_cdf(s, m: int = 60) -> float:
    """F_GUE(s) = det(I - A) on L^2(s, oo) via the Nystrom scheme."""
    return fredholm_det(airy_kernel_matrix, (float(s), math.inf), m=m, decay_scale=1.0)
