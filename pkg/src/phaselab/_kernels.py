"""Interaction weights for the kernel ``|x - y|^{-n-alpha}``.

Shared by the nonlocal energy and the set interactions so both use one
convention. Cell weights are computed for unit cells; by homogeneity the
weight for spacing ``h`` is ``h^{n-alpha}`` times the unit value.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError

_GL = np.polynomial.legendre.leggauss(32)
TAYLOR_OFFSET_1D = 64
TABLE_OFFSET_2D = 16


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")
    return alpha


def antiderivative(s, alpha: float):
    """``G`` with ``G''(s) = -s^{-1-alpha}``.

    ``s^{1-alpha} / (alpha (1-alpha))`` for alpha != 1 and ``log s`` at 1.
    The interval interaction is a four-term combination of ``G``.
    """
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore"):
        if alpha == 1.0:
            return np.log(s)
        return np.power(s, 1.0 - alpha) / (alpha * (1.0 - alpha))


def _bracket(p: float, q: float, alpha: float) -> float:
    """``G(p) - G(q)`` for ``0 <= p < q < inf``, free of cancellation."""
    if p == 0.0:
        if alpha >= 1.0:
            return -math.inf
        return -float(antiderivative(q, alpha))
    if alpha == 1.0:
        return math.log(p / q)
    r = math.log(q / p)
    return -(p ** (1.0 - alpha)) * math.expm1((1.0 - alpha) * r) / (alpha * (1.0 - alpha))


def interval_interaction(a: float, b: float, c: float, d: float, alpha: float) -> float:
    """Exact ``integral over x in (a,b), y in (c,d) of |x-y|^{-1-alpha}``.

    Requires ``a < b <= c < d``; ``a`` may be ``-inf`` and ``d`` may be
    ``inf``. Returns ``inf`` whenever the integral diverges: touching
    intervals for alpha >= 1, two half-lines for alpha <= 1.
    """
    alpha = check_alpha(alpha)
    if not (a < b <= c < d):
        raise DomainError(f"need a < b <= c < d, got {(a, b, c, d)}")
    if b == c and alpha >= 1.0:
        return math.inf
    left_inf, right_inf = math.isinf(a), math.isinf(d)
    if left_inf and right_inf:
        if alpha <= 1.0:
            return math.inf
        gap = c - b
        return gap ** (1.0 - alpha) / (alpha * (alpha - 1.0))
    if right_inf:
        # integral_a^b (c - x)^{-alpha} / alpha dx
        return -_bracket(c - b, c - a, alpha)
    if left_inf:
        return interval_interaction(-d, -c, -b, math.inf, alpha)
    # [G(c-a) - G(d-a)] - [G(c-b) - G(d-b)]
    return _bracket(c - a, d - a, alpha) - _bracket(c - b, d - b, alpha)


# ---------------------------------------------------------------------------
# one dimension


def linear_pair_moment_1d(alpha: float) -> float:
    """``integral over x in [0,1], y in [1,2] of |x - y|^{1-alpha}``.

    Weight of an adjacent cell pair when the field is linear across them.
    """
    p = 1.0 - alpha
    # y - x has the density t on [0,1] and 2 - t on [1,2].
    rise = 1.0 / (p + 2.0)
    fall = 2.0 * (2.0 ** (p + 1.0) - 1.0) / (p + 1.0) - (2.0 ** (p + 2.0) - 1.0) / (p + 2.0)
    return rise + fall


def self_moment_1d(alpha: float) -> float:
    """``integral over [0,1]^2 of |x - y|^{1-alpha}``."""
    return 2.0 / ((2.0 - alpha) * (3.0 - alpha))


def pair_weights_1d(alpha: float, count: int) -> np.ndarray:
    """Unit-cell weights ``w[k]`` for offsets ``k = 0..count-1``.

    ``w[k]`` is the kernel integral over two unit cells ``k`` apart (the
    negated second difference of :func:`antiderivative`); ``w[0] = 0``.
    For alpha >= 1 the touching integral diverges and ``w[1]`` becomes the
    linear-model moment instead.
    """
    alpha = check_alpha(alpha)
    w = np.zeros(max(count, 0))
    if count <= 1:
        return w
    k = np.arange(count, dtype=float)
    cut = min(count, TAYLOR_OFFSET_1D)
    kk = k[1:cut]
    if alpha == 1.0:
        lm = np.log(np.where(kk > 1, kk - 1, 1.0))
        w[1:cut] = -(np.log(kk + 1) - 2.0 * np.log(kk) + lm)
    else:
        def G(s):
            return np.power(s, 1.0 - alpha) / (alpha * (1.0 - alpha))
        with np.errstate(divide="ignore", invalid="ignore"):
            w[1:cut] = -(G(kk + 1) - 2.0 * G(kk) + G(kk - 1))
    if count > cut:
        kb = k[cut:]
        p = 1.0 + alpha
        w[cut:] = kb**-p * (1.0 + p * (p + 1) / (12.0 * kb**2)
                            + p * (p + 1) * (p + 2) * (p + 3) / (360.0 * kb**4))
    if alpha >= 1.0:
        w[1] = linear_pair_moment_1d(alpha)
    return w


# ---------------------------------------------------------------------------
# two dimensions


def _gl_square(fn, box) -> float:
    x, wts = _GL
    lo1, hi1, lo2, hi2 = box
    t1 = 0.5 * (hi1 - lo1) * x + 0.5 * (hi1 + lo1)
    t2 = 0.5 * (hi2 - lo2) * x + 0.5 * (hi2 + lo2)
    T1, T2 = np.meshgrid(t1, t2, indexing="ij")
    f = fn(T1, T2)
    return 0.25 * (hi1 - lo1) * (hi2 - lo2) * float(wts @ f @ wts)


def _exit_distance(c, theta, box) -> float:
    lo1, hi1, lo2, hi2 = box
    ct, st = math.cos(theta), math.sin(theta)
    ts = []
    if ct > 1e-15:
        ts.append((hi1 - c[0]) / ct)
    elif ct < -1e-15:
        ts.append((lo1 - c[0]) / ct)
    if st > 1e-15:
        ts.append((hi2 - c[1]) / st)
    elif st < -1e-15:
        ts.append((lo2 - c[1]) / st)
    return max(0.0, min(ts)) if ts else 0.0


def _polar_square(fn, c, box) -> float:
    """Integral of ``fn`` over ``box`` in polar coordinates centred at ``c``.

    ``c`` is a corner of ``box``; the integrand may be singular there.
    """
    lo1, hi1, lo2, hi2 = box
    corners = [(lo1, lo2), (hi1, lo2), (hi1, hi2), (lo1, hi2)]
    angles = sorted(math.atan2(py - c[1], px - c[0])
                    for px, py in corners if (px, py) != tuple(c))
    if angles[-1] - angles[0] > math.pi:
        # The quarter straddles the branch cut of atan2.
        angles = sorted(a % (2 * math.pi) for a in angles)
    total = 0.0
    for a0, a1 in zip(angles[:-1], angles[1:]):

        def radial(theta):
            R = _exit_distance(c, theta, box)
            ct, st = math.cos(theta), math.sin(theta)
            val, _ = quad(lambda r: r * fn(c[0] + r * ct, c[1] + r * st),
                          0.0, R, epsabs=1e-14, epsrel=1e-11, limit=200)
            return val

        val, _ = quad(radial, a0, a1, epsabs=1e-13, epsrel=1e-10, limit=200)
        total += val
    return total


def tent_integral(fn, center=(0.0, 0.0), singular: bool = False) -> float:
    """``integral over [-1,1]^2 of (1-|t1|)(1-|t2|) fn(t1, t2)``.

    This is the unit cell-pair average: two unit cells offset by ``d``
    see ``t + d`` with the tent density. When ``singular`` the integrand
    may blow up at ``center``, which must be a quarter corner.
    """
    def g(t1, t2):
        return (1.0 - np.abs(t1)) * (1.0 - np.abs(t2)) * fn(t1, t2)

    total = 0.0
    for box in ((-1.0, 0.0, -1.0, 0.0), (0.0, 1.0, -1.0, 0.0),
                (-1.0, 0.0, 0.0, 1.0), (0.0, 1.0, 0.0, 1.0)):
        lo1, hi1, lo2, hi2 = box
        touches = lo1 <= center[0] <= hi1 and lo2 <= center[1] <= hi2
        if singular and touches:
            total += _polar_square(lambda a, b: float(g(np.float64(a), np.float64(b))),
                                   center, box)
        else:
            total += _gl_square(g, box)
    return total


@lru_cache(maxsize=32)
def pair_weights_2d(alpha: float, extent: int) -> np.ndarray:
    """Unit-cell weights on offsets ``(i, j)`` with ``0 <= i, j < extent``.

    Symmetric under sign changes and axis swap; ``(0, 0)`` is zero. For
    alpha >= 1 the touching offsets use a linear-model weight
    ``integral tent ((t+d).d)^2 |t+d|^{-2-alpha} / |d|^4``, which makes
    ``w_d (u_i - u_j)^2`` the pair energy of a field linear along ``d``.
    """
    alpha = check_alpha(alpha)
    p = 2.0 + alpha
    w = np.zeros((extent, extent))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        for i in range(extent):
            for j in range(i, extent):
                if i == 0 and j == 0:
                    continue
                di, dj = float(i), float(j)
                r = math.hypot(di, dj)
                if j > TABLE_OFFSET_2D:
                    val = r**-p * (1.0 + p * p / (12.0 * r * r))
                elif j >= 2:
                    val = tent_integral(
                        lambda a, b: np.power((a + di) ** 2 + (b + dj) ** 2, -0.5 * p))
                elif alpha >= 1.0:
                    dd = di * di + dj * dj

                    def fn(a, b):
                        x, y = a + di, b + dj
                        return ((x * di + y * dj) ** 2 / dd**2
                                * np.power(x * x + y * y, -0.5 * p))

                    val = tent_integral(fn, center=(-di, -dj), singular=True)
                else:
                    val = tent_integral(
                        lambda a, b: np.power((a + di) ** 2 + (b + dj) ** 2, -0.5 * p),
                        center=(-di, -dj), singular=True)
                w[i, j] = w[j, i] = val
    w.setflags(write=False)
    return w


def self_moment_2d(alpha: float) -> float:
    """Same-cell energy of a unit linear field per unit squared gradient.

    ``integral tent (e.t)^2 |t|^{-2-alpha}`` averaged over directions
    ``e``, i.e. half of ``integral tent |t|^{-alpha}``.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        return tent_integral(lambda a, b: 0.5 * np.power(a * a + b * b, -0.5 * alpha),
                             center=(0.0, 0.0), singular=True)
