"""Nonlocal phase fields with the kernel ``|x - y|^{-n-alpha}``.

The Gagliardo term integrates ``(u(x) - u(y))^2`` against the kernel over
all ordered pairs with at least one point in the domain. Fields live on
cell centres; the interior sum uses the exact interaction of the
piecewise-constant reconstruction, so a cell-aligned two-phase step gives
exactly twice its fractional perimeter. For alpha >= 1 that
reconstruction has infinite energy, and touching cells and the same-cell
term switch to the energy of a linear interpolant.

Exterior data are sampled on graded intervals out to ``EXTERIOR_RADIUS``
domain diameters (1D) or on a padded box (2D). Beyond that they are
treated as constant along rays and the remainder is integrated in closed
form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.fft import dstn, idstn
from scipy.integrate import IntegrationWarning, quad
from scipy.signal import fftconvolve

from . import _kernels as kern
from .errors import DomainError, NumericError, ResolutionError
from .localfield import DescentInfo, Grid, MinimizeOptions, descend
from .potential import DoubleWell

EXTERIOR_RADIUS = 50.0
GRADING = 1.15
TAIL_ANGLES = 256
FRACTIONAL_TOL = 1e-8
DEFAULT_PROBE_EPS = tuple(2.0**-k for k in range(3, 8))
EXTENDED_PROBE_EPS = tuple(2.0**-k for k in range(3, 11))


@dataclass(frozen=True)
class KernelAlpha:
    """Radial kernel ``|z|^{-n-alpha}`` on ``R^n``."""

    n: int
    alpha: float

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.n not in (1, 2, 3):
            raise DomainError(f"dimension must be 1, 2 or 3, got {self.n}")
        kern.check_alpha(self.alpha)

    @property
    def degree(self) -> float:
        """Homogeneity degree ``-n - alpha``, strictly between ``-n-2`` and ``-n``."""
        return -self.n - self.alpha

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.power(r, self.degree)

    def sphere_area(self) -> float:
        """Surface measure of the unit sphere in ``R^n``."""
        return 2.0 * math.pi ** (self.n / 2.0) / math.gamma(self.n / 2.0)

    def tail(self, R: float) -> float:
        """``integral over |z| > R`` of the kernel."""
        return self.sphere_area() * R ** (-self.alpha) / self.alpha


def cell_grid(lo: Sequence[float], hi: Sequence[float], cells: Sequence[int]) -> Grid:
    """Grid whose nodes are the centres of ``cells`` equal cells of the box."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    cells = tuple(int(c) for c in np.atleast_1d(cells))
    if not (len(lo) == len(hi) == len(cells)):
        raise DomainError("lo, hi and cells must have equal length")
    h = (hi - lo) / np.asarray(cells, dtype=float)
    return Grid(tuple(lo + h / 2), tuple(hi - h / 2), cells)


def domain_box(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Box covered by the cells centred on the grid nodes."""
    h = np.asarray(grid.spacings)
    return np.asarray(grid.lo) - h / 2, np.asarray(grid.hi) + h / 2


def sign_exterior(normal: Sequence[float] | None = None, offset: float = 0.0):
    """Exterior data ``sign(normal . x - offset)``, with +1 on the plane."""
    def g(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1:] != (len(nu),):
            s = x - offset
        else:
            s = x @ nu - offset
        return np.where(s >= 0, 1.0, -1.0)

    nu = np.array([1.0] if normal is None else normal, dtype=float)
    nu = nu / np.linalg.norm(nu)
    return g


def constant_exterior(value: float):
    def g(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1] if x.ndim > 1 else x.shape, float(value))
    return g


@dataclass(frozen=True, eq=False)
class NonlocalField:
    """Values on cell centres of the domain plus prescribed exterior data."""

    grid: Grid
    values: np.ndarray
    exterior: Callable[[np.ndarray], np.ndarray]
    eps: float
    kernel: KernelAlpha
    _op_cache: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise DomainError(f"values shape {v.shape} != grid shape {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        self.validate()

    def validate(self) -> None:
        if self.kernel.n != self.grid.dim:
            raise DomainError("kernel dimension differs from grid dimension")
        if self.grid.dim == 2:
            hx, hy = self.grid.spacings
            if abs(hx - hy) > 1e-9 * max(hx, hy):
                raise DomainError("2D nonlocal fields need square cells")
            if max(self.grid.counts) > 64:
                raise DomainError("2D nonlocal fields are limited to 64x64 cells")
        if self.grid.dim not in (1, 2):
            raise DomainError("nonlocal fields are implemented in 1D and 2D")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("values must be finite")
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise DomainError(f"eps must be positive, got {self.eps}")

    def with_values(self, values: np.ndarray) -> "NonlocalField":
        out = NonlocalField(self.grid, values, self.exterior, self.eps, self.kernel)
        out._op_cache.extend(self._op_cache)
        return out

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.grid.spacings))

    def points(self) -> np.ndarray:
        return self.grid.points()

    def operator(self) -> "_GagliardoOperator":
        if not self._op_cache:
            self._op_cache.append(_GagliardoOperator.build(self))
        return self._op_cache[0]


# ---------------------------------------------------------------------------
# discrete Gagliardo operator


def _bracket_array(p: np.ndarray, q: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorised ``G(p) - G(q)`` for ``0 <= p < q < inf``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = np.empty(np.broadcast(p, q).shape)
    pos = p > 0
    pb, qb = np.broadcast_arrays(p, q)
    with np.errstate(divide="ignore", invalid="ignore"):
        if alpha == 1.0:
            out[...] = np.log(pb / qb)
        else:
            r = np.log(qb / pb)
            out[...] = -np.power(pb, 1.0 - alpha) * np.expm1((1.0 - alpha) * r) / (
                alpha * (1.0 - alpha))
            if alpha < 1.0:
                zero = ~pos
                out[zero] = -np.power(qb[zero], 1.0 - alpha) / (alpha * (1.0 - alpha))
    if alpha >= 1.0:
        out[~np.broadcast_to(pos, out.shape)] = -np.inf
    return out


def _cells_vs_intervals(a, b, edges, alpha):
    """Interaction of cells ``(a_i, b_i)`` with intervals to their right.

    ``edges`` are increasing with ``edges[0] >= b``; the last interval is
    ``(edges[-1], inf)``. Returns an array of shape ``(cells, len(edges))``.
    """
    a = a[:, None]
    b = b[:, None]
    c = edges[None, :-1]
    d = edges[None, 1:]
    finite = _bracket_array(c - a, d - a, alpha) - _bracket_array(c - b, d - b, alpha)
    tail = -_bracket_array(edges[-1] - b, edges[-1] - a, alpha)
    return np.concatenate([finite, tail], axis=1)


@dataclass(frozen=True)
class _GagliardoOperator:
    """Quadratic form ``G(u) = 2 u.L u + 2 sum(A u^2 - 2 B u + C) + D(u)``.

    ``L`` is the interior pair Laplacian, ``A, B, C`` the exterior moments
    and ``D`` the same-cell term of the linear model (alpha >= 1 only).
    """

    dim: int
    h: float
    alpha: float
    kernel_full: np.ndarray
    row_sum: np.ndarray
    ext_a: np.ndarray
    ext_b: np.ndarray
    ext_c: float
    self_coeff: float
    ghost: np.ndarray | None

    @classmethod
    def build(cls, f: NonlocalField) -> "_GagliardoOperator":
        if f.grid.dim == 1:
            return cls._build_1d(f)
        return cls._build_2d(f)

    @classmethod
    def _build_1d(cls, f: NonlocalField) -> "_GagliardoOperator":
        alpha = f.kernel.alpha
        N = f.grid.counts[0]
        h = f.grid.spacings[0]
        lo, hi = domain_box(f.grid)
        lo, hi = float(lo[0]), float(hi[0])
        w = kern.pair_weights_1d(alpha, N) * h ** (1.0 - alpha)
        full = np.concatenate([w[:0:-1], w])
        csum = np.cumsum(w)
        idx = np.arange(N)
        row = csum[idx] + csum[N - 1 - idx]
        # Graded exterior intervals on the right: first band one cell wide.
        diam = hi - lo
        edges = [0.0, h]
        step = h
        while edges[-1] < EXTERIOR_RADIUS * diam:
            step *= GRADING
            edges.append(edges[-1] + step)
        off = np.asarray(edges)
        left_c = lo + (idx) * h
        a, b = left_c, left_c + h
        right = _cells_vs_intervals(a, b, hi + off, alpha)
        left = _cells_vs_intervals(-b, -a, -lo + off, alpha)
        mids = np.concatenate([0.5 * (off[:-1] + off[1:]), [off[-1] + diam]])
        g_right = np.asarray(f.exterior(hi + mids), dtype=float)
        g_left = np.asarray(f.exterior(lo - mids), dtype=float)
        _check_exterior(g_right, g_left)
        if alpha >= 1.0:
            touch = h ** (1.0 - alpha) * kern.linear_pair_moment_1d(alpha)
            right[N - 1, 0] = touch
            left[0, 0] = touch
        if not (np.all(np.isfinite(right)) and np.all(np.isfinite(left))):
            raise ResolutionError("exterior weights overflowed; refine the grid")
        A = right.sum(1) + left.sum(1)
        B = right @ g_right + left @ g_left
        C = float(np.sum(right @ g_right**2 + left @ g_left**2))
        self_coeff = 0.0
        ghost = None
        if alpha >= 1.0:
            self_coeff = h ** (3.0 - alpha) * kern.self_moment_1d(alpha)
            ghost = np.array([g_left[0], g_right[0]])
        return cls(1, h, alpha, full, row, A, B, C, self_coeff, ghost)

    @classmethod
    def _build_2d(cls, f: NonlocalField) -> "_GagliardoOperator":
        alpha = f.kernel.alpha
        n1, n2 = f.grid.counts
        h = f.grid.spacings[0]
        P = max(n1, n2)
        m1, m2 = n1 + 2 * P, n2 + 2 * P
        extent = max(m1, m2)
        w = np.asarray(kern.pair_weights_2d(alpha, extent)) * h ** (2.0 - alpha)
        full = np.block([[w[:0:-1, :0:-1], w[:0:-1, :]], [w[:, :0:-1], w]])
        lo, hi = domain_box(f.grid)
        box_lo = lo - P * h
        ax = [box_lo[k] + (np.arange(m) + 0.5) * h for k, m in enumerate((m1, m2))]
        X, Y = np.meshgrid(*ax, indexing="ij")
        pts = np.stack([X, Y], axis=-1)
        inside = np.zeros((m1, m2), dtype=bool)
        inside[P:P + n1, P:P + n2] = True
        g = np.where(inside, 0.0, np.asarray(f.exterior(pts), dtype=float))
        _check_exterior(g[~inside])
        ext = (~inside).astype(float)

        def conv(arr):
            return fftconvolve(arr, full, mode="same")[P:P + n1, P:P + n2]

        row = fftconvolve(inside.astype(float), full, mode="same")[P:P + n1, P:P + n2]
        A = conv(ext)
        B = conv(ext * g)
        C2 = conv(ext * g * g)
        # Remainder outside the padded box, constant along rays from each cell.
        theta = (np.arange(TAIL_ANGLES) + 0.5) * (2 * math.pi / TAIL_ANGLES)
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        cells = f.grid.points().reshape(-1, 2)
        box_hi = box_lo + np.array([m1, m2]) * h
        with np.errstate(divide="ignore"):
            tx = np.where(dirs[None, :, 0] > 0,
                          (box_hi[0] - cells[:, None, 0]) / dirs[None, :, 0],
                          (box_lo[0] - cells[:, None, 0]) / dirs[None, :, 0])
            ty = np.where(dirs[None, :, 1] > 0,
                          (box_hi[1] - cells[:, None, 1]) / dirs[None, :, 1],
                          (box_lo[1] - cells[:, None, 1]) / dirs[None, :, 1])
        t_exit = np.minimum(np.abs(tx), np.abs(ty))
        far = cells[:, None, :] + 1.5 * t_exit[..., None] * dirs[None]
        g_far = np.asarray(f.exterior(far), dtype=float)
        _check_exterior(g_far)
        cell_area = h * h
        wt = (2 * math.pi / TAIL_ANGLES) * t_exit ** (-alpha) / alpha
        A = A + wt.sum(1).reshape(n1, n2) * cell_area
        B = B + (wt * g_far).sum(1).reshape(n1, n2) * cell_area
        C = float(C2.sum() + (wt * g_far**2).sum() * cell_area)
        self_coeff = 0.0
        ghost = None
        if alpha >= 1.0:
            self_coeff = h ** (4.0 - alpha) * kern.self_moment_2d(alpha)
            ghost = g[P - 1:P + n1 + 1, P - 1:P + n2 + 1].copy()
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ResolutionError("exterior weights overflowed; refine the grid")
        inner = full[m1 - n1:m1 + n1 - 1, m2 - n2:m2 + n2 - 1]
        return cls(2, h, alpha, inner, row, A, B, C, self_coeff, ghost)

    # -- evaluation -------------------------------------------------------

    def _conv(self, u: np.ndarray) -> np.ndarray:
        return fftconvolve(u, self.kernel_full, mode="same")

    def _padded(self, u: np.ndarray) -> np.ndarray:
        if self.dim == 1:
            return np.concatenate([[self.ghost[0]], u, [self.ghost[1]]])
        out = self.ghost.copy()
        out[1:-1, 1:-1] = u
        return out

    def _self_term(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        """Same-cell energy ``k |grad u|^2`` with central differences."""
        if self.self_coeff == 0.0:
            return 0.0, np.zeros_like(u)
        up = self._padded(u)
        k = self.self_coeff / (4.0 * self.h * self.h)
        grad = np.zeros_like(up)
        total = 0.0
        for axis in range(self.dim):
            sl_hi = [slice(1, -1)] * self.dim
            sl_lo = [slice(1, -1)] * self.dim
            sl_hi[axis] = slice(2, None)
            sl_lo[axis] = slice(None, -2)
            diff = up[tuple(sl_hi)] - up[tuple(sl_lo)]
            total += k * float(np.sum(diff * diff))
            gh = np.zeros_like(up)
            gh[tuple(sl_hi)] += 2 * k * diff
            gh[tuple(sl_lo)] -= 2 * k * diff
            grad += gh
        inner = tuple([slice(1, -1)] * self.dim)
        return total, grad[inner]

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        """Interior pair Laplacian ``L u = S u - W * u``."""
        return self.row_sum * u - self._conv(u)

    def value(self, u: np.ndarray) -> float:
        Lu = self.laplacian(u)
        inner = 2.0 * float(np.sum(u * Lu))
        ext = 2.0 * (float(np.sum(self.ext_a * u * u - 2.0 * self.ext_b * u)) + self.ext_c)
        s, _ = self._self_term(u)
        return max(inner, 0.0) + ext + s

    def gradient(self, u: np.ndarray) -> np.ndarray:
        _, gs = self._self_term(u)
        return 4.0 * self.laplacian(u) + 4.0 * (self.ext_a * u - self.ext_b) + gs

    def hessian_symbol(self) -> np.ndarray:
        """Sine-basis eigenvalues of the Toeplitz part of the Hessian of ``G``.

        Uses the full-line row sum (interior plus exterior, averaged) on the
        diagonal and the interior weights off it, which is exact for the
        translation-invariant operator restricted to the domain.
        """
        shape = self.row_sum.shape
        diag = float(np.mean(self.row_sum + self.ext_a))
        half = [slice(s - 1, None) for s in shape]
        w = self.kernel_full[tuple(half)]
        mult = [np.where(np.arange(s) == 0, 1.0, 2.0) for s in shape]
        cosines = []
        for s_, m in zip(shape, mult):
            theta = np.pi * np.arange(1, s_ + 1) / (s_ + 1)
            cosines.append(np.cos(np.outer(theta, np.arange(s_))) * m[None, :])
        if self.dim == 1:
            what = cosines[0] @ w
            sines = [np.sin(np.pi * np.arange(1, shape[0] + 1) / (shape[0] + 1)) ** 2]
            local = sines[0]
        else:
            what = cosines[0] @ w @ cosines[1].T
            s1 = np.sin(np.pi * np.arange(1, shape[0] + 1) / (shape[0] + 1)) ** 2
            s2 = np.sin(np.pi * np.arange(1, shape[1] + 1) / (shape[1] + 1)) ** 2
            local = s1[:, None] + s2[None, :]
        k = self.self_coeff / (4.0 * self.h * self.h)
        return np.maximum(4.0 * (diag - what), 0.0) + 8.0 * k * local

def _check_exterior(*arrays: np.ndarray) -> None:
    for arr in arrays:
        if not np.all(np.isfinite(arr)) or np.any(np.abs(arr) > 1.0 + 1e-12):
            raise DomainError("exterior data must be finite and lie in [-1, 1]")


# ---------------------------------------------------------------------------
# energies


GAGLIARDO_PREFACTOR = 0.25


def gagliardo(f: NonlocalField) -> float:
    """Ordered-pair double integral of ``(u(x)-u(y))^2 K`` over pairs touching the domain."""
    return f.operator().value(np.asarray(f.values, dtype=float))


def _potential(f: NonlocalField, w: DoubleWell, u: np.ndarray | None = None) -> float:
    u = f.values if u is None else u
    return f.cell_volume * float(np.sum(w.W(u)))


def energy_nonlocal(f: NonlocalField, w: DoubleWell) -> float:
    """``GAGLIARDO_PREFACTOR * gagliardo + integral of W`` (unscaled)."""
    _check_resolution(f)
    val = GAGLIARDO_PREFACTOR * gagliardo(f) + _potential(f, w)
    if not math.isfinite(val):
        raise ResolutionError("nonlocal energy overflowed; refine the grid")
    return val


def varsigma(alpha: float, eps: float) -> float:
    """Scaling factor of the perturbed long-range functional."""
    alpha = kern.check_alpha(alpha)
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if alpha < 1.0:
        return eps ** (-alpha)
    if alpha == 1.0:
        le = abs(math.log(eps))
        if le == 0.0:
            raise DomainError("eps = 1 with alpha = 1 makes the scaling singular")
        return 1.0 / (eps * le)
    return 1.0 / eps


def scaled_energy(f: NonlocalField, w: DoubleWell) -> float:
    """``varsigma * (eps^alpha * gagliardo + integral of W)``."""
    _check_resolution(f)
    s = varsigma(f.kernel.alpha, f.eps)
    val = s * (f.eps ** f.kernel.alpha * gagliardo(f) + _potential(f, w))
    if not math.isfinite(val):
        raise ResolutionError("scaled energy overflowed; refine the grid")
    return val


def _check_resolution(f: NonlocalField) -> None:
    if f.kernel.alpha >= 1.9 and f.grid.h > f.eps / 4:
        raise ResolutionError(
            f"alpha={f.kernel.alpha} needs spacing <= eps/4 = {f.eps / 4:.3g}, "
            f"got {f.grid.h:.3g}; increase the cell count")


def minimize_nonlocal(
    f: NonlocalField,
    w: DoubleWell,
    opts: MinimizeOptions | None = None,
    full_output: bool = False,
):
    """Descent on :func:`scaled_energy` with the exterior data held fixed.

    Uses the monotone line search of the local solver, preconditioned by
    the sine-transform diagonalisation of the translation-invariant part
    of the Hessian (pair operator plus well curvature). ``opts.tol``
    bounds the sup norm of the L2 gradient of the scaled energy.
    """
    opts = opts or MinimizeOptions(max_iters=20000, tol=1e-5, step_rule="sobolev")
    _check_resolution(f)
    op = f.operator()
    alpha, eps = f.kernel.alpha, f.eps
    s = varsigma(alpha, eps)
    vol = f.cell_volume
    ea = eps**alpha
    curv = max(float(w.d2W(np.array(1.0))), float(w.d2W(np.array(-1.0))), 1e-12)
    symbol = s * (ea * op.hessian_symbol() + vol * curv)

    def energy(u):
        return s * (ea * op.value(u) + vol * float(np.sum(w.W(u))))

    def gradient(u):
        return s * (ea * op.gradient(u) + vol * w.dW(u)) / vol

    def precondition(g):
        return vol * idstn(dstn(g, type=1, norm="ortho") / symbol, type=1, norm="ortho")

    u, info = descend(np.asarray(f.values, dtype=float), energy, gradient, vol, 1.0,
                      opts, precondition=precondition)
    out = f.with_values(u)
    return (out, info) if full_output else out


# ---------------------------------------------------------------------------
# fractional Laplacian


def _shell_integral(pair: Callable[[float], float], alpha: float, R: float,
                    max_levels: int, where: str) -> float:
    """``integral over (0, inf) of pair(z) z^{-1-alpha}`` with ``pair`` O(z^2) at 0.

    Dyadic shells of ``(0, R)`` from the outside in, a second-difference
    remainder on the innermost piece and the constant tail beyond ``R``.
    """
    tail = pair(R) * R ** (-alpha) / alpha
    total = 0.0
    outer = R
    previous = None
    for _ in range(max_levels):
        inner = 0.5 * outer
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            val, _ = quad(lambda z: pair(z) * z ** (-1.0 - alpha), inner, outer,
                          epsabs=1e-15, epsrel=1e-13, limit=200)
        total += val
        outer = inner
        remainder = pair(outer) / outer**2 * outer ** (2.0 - alpha) / (2.0 - alpha)
        estimate = total + remainder
        if previous is not None and abs(estimate - previous) < FRACTIONAL_TOL * max(1.0, abs(estimate)):
            return estimate + tail
        previous = estimate
    raise NumericError(
        f"principal value did not converge near z=0 at {where} (alpha={alpha}); "
        "the integrand is not integrable there")


def _check_fractional_args(kernel: KernelAlpha, R: float) -> None:
    if kernel.n != 1:
        raise DomainError("fractional_laplacian_1d needs a 1D kernel")
    if not R > 1:
        raise DomainError(f"cutoff R must exceed 1, got {R}")


def fractional_laplacian_1d(u: Callable[[float], float], x: float, kernel: KernelAlpha,
                            R: float = 10.0, max_levels: int = 80) -> float:
    """Unnormalised principal value ``integral (u(x) - u(x+z)) |z|^{-1-alpha} dz``.

    Pairs ``z`` with ``-z`` and integrates over dyadic shells of ``(0, R)``
    from the outside in; levels stop once the refined estimate changes by
    less than ``FRACTIONAL_TOL``. Beyond ``R`` the field is taken constant,
    which gives the closed-form tail ``(2u(x) - u(x+R) - u(x-R)) R^{-alpha} / alpha``.
    Raises :class:`NumericError` when the levels never settle, the sign of
    a non-integrable singularity at ``z = 0``.
    """
    _check_fractional_args(kernel, R)
    ux = float(u(x))

    def pair(z: float) -> float:
        return 2.0 * ux - float(u(x + z)) - float(u(x - z))

    return _shell_integral(pair, kernel.alpha, R, max_levels, f"x={x}")


def one_sided_fractional_1d(u: Callable[[float], float], x: float, kernel: KernelAlpha,
                            R: float = 10.0, side: int = 1, max_levels: int = 80) -> float:
    """``integral over z > 0 of (u(x) - u(x + side z)) z^{-1-alpha}``.

    Converges when ``u`` is flat to first order at ``x`` from that side,
    e.g. at the centre of an even function.
    """
    _check_fractional_args(kernel, R)
    if side not in (1, -1):
        raise DomainError("side must be +1 or -1")
    ux = float(u(x))

    def pair(z: float) -> float:
        return ux - float(u(x + side * z))

    return _shell_integral(pair, kernel.alpha, R, max_levels, f"x={x}, side={side}")


# ---------------------------------------------------------------------------
# scaling probe


def _default_u_star(x):
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) >= 1.0, np.sign(x), np.sin(0.5 * math.pi * x))


def default_u_star():
    """Odd profile ``sin(pi x / 2)`` on ``[-1, 1]``, equal to ``sign x`` outside."""
    return _default_u_star


def _profile_energy(u_star, alpha: float, L: float) -> float:
    """``integral over Q((-L, L))`` of ``(u*(X)-u*(Y))^2 |X-Y|^{-1-alpha}``.

    ``u*`` is odd and equals ``sign`` outside ``[-1, 1]``. The integral
    splits into the core square, the core against the constant phases,
    and the ``(1, L)`` phase region against the opposite phase.
    """
    def opts():
        return dict(epsabs=1e-12, epsrel=1e-10, limit=400)

    # Core pairs X < Y inside [-1, 1], in difference variables.
    def core_inner(X):
        def f(t):
            Y = X + t
            return (u_star(Y) - u_star(X)) ** 2 * t ** (-1.0 - alpha)
        if X >= 1.0:
            return 0.0
        val, _ = quad(f, 0.0, 1.0 - X, **opts())
        return val

    A, _ = quad(core_inner, -1.0, 1.0, **opts())
    A *= 2.0
    # Core against the phases beyond +-1 (all of them, not only inside L).
    def side(X):
        return ((u_star(X) - 1.0) ** 2 * (1.0 - X) ** (-alpha)
                + (u_star(X) + 1.0) ** 2 * (1.0 + X) ** (-alpha)) / alpha
    B, _ = quad(side, -1.0, 1.0, **opts())
    B *= 2.0
    # (1, L) against (-inf, -1) and its mirror, each ordered both ways.
    if L > 1.0:
        if alpha == 1.0:
            far = 8.0 * (math.log(2.0 * L) - math.log(2.0))
        else:
            far = 8.0 * ((2.0 * L) ** (1.0 - alpha) - 2.0 ** (1.0 - alpha)) / (
                alpha * (1.0 - alpha))
    else:
        far = 0.0
    return float(A + B + far)


@dataclass(frozen=True)
class ScalingReport:
    alpha: float
    eps: tuple[float, ...]
    J: tuple[float, ...]
    fitted_exponent: float
    r2: float
    regressor: str

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "eps": list(self.eps), "J": list(self.J),
                "fitted_exponent": self.fitted_exponent, "r2": self.r2,
                "regressor": self.regressor}


def profile_gagliardo(alpha: float, eps: float, u_star=None) -> float:
    """``J(eps)``: Gagliardo integral of ``u*(x/eps)`` over ``Q((-1, 1))``.

    By the substitution ``x = eps X`` this is ``eps^{1-alpha}`` times the
    unit-scale integral over ``Q((-1/eps, 1/eps))``.
    """
    alpha = kern.check_alpha(alpha)
    u_star = u_star or _default_u_star
    return eps ** (1.0 - alpha) * _profile_energy(u_star, alpha, 1.0 / eps)


def scaling_probe(alpha: float, eps_list: Sequence[float] | None = None,
                  u_star=None) -> ScalingReport:
    """Fit the small-``eps`` behaviour of ``eps^alpha J(eps)``.

    For alpha != 1 the fitted exponent is the least-squares slope of
    ``log(eps^alpha J)`` against ``log eps``. At alpha = 1 it is the slope
    of ``eps J`` against ``eps |log eps|`` and ``r2`` is that regression's
    coefficient of determination.
    """
    alpha = kern.check_alpha(alpha)
    eps = tuple(float(e) for e in (eps_list if eps_list is not None else DEFAULT_PROBE_EPS))
    if len(eps) < 3:
        raise DomainError("scaling_probe needs at least three eps values")
    if any(not 0 < e < 1 for e in eps):
        raise DomainError("eps values must lie in (0, 1)")
    J = tuple(profile_gagliardo(alpha, e, u_star) for e in eps)
    e_arr = np.asarray(eps)
    y = e_arr**alpha * np.asarray(J)
    if alpha == 1.0:
        xreg = e_arr * np.abs(np.log(e_arr))
        yreg = y
        label = "eps*|log eps|"
    else:
        xreg = np.log(e_arr)
        yreg = np.log(y)
        label = "log eps"
    slope, intercept = np.polyfit(xreg, yreg, 1)
    resid = yreg - (slope * xreg + intercept)
    ss_tot = float(np.sum((yreg - yreg.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingReport(alpha, eps, J, float(slope), r2, label)


def profile_field(alpha: float, eps: float, cells: int, u_star=None) -> NonlocalField:
    """Cell sampling of ``u*(x/eps)`` on ``(-1, 1)`` with sign exterior data."""
    u_star = u_star or _default_u_star
    grid = cell_grid([-1.0], [1.0], [cells])
    x = grid.axes()[0]
    return NonlocalField(grid, u_star(x / eps), sign_exterior(), eps, KernelAlpha(1, alpha))


def step_field(grid: Grid, kernel: KernelAlpha, eps: float = 1.0,
               normal: Sequence[float] | None = None, offset: float = 0.0) -> NonlocalField:
    """Two-phase step ``sign(normal . x - offset)`` inside and outside."""
    g = sign_exterior(normal if normal is not None else [1.0] + [0.0] * (grid.dim - 1), offset)
    return NonlocalField(grid, g(grid.points()) if grid.dim > 1 else g(grid.axes()[0]),
                         g, eps, kernel)


__all__ = [
    "KernelAlpha", "NonlocalField", "ScalingReport", "GAGLIARDO_PREFACTOR",
    "cell_grid", "domain_box", "sign_exterior", "constant_exterior",
    "gagliardo", "energy_nonlocal", "scaled_energy", "varsigma", "minimize_nonlocal",
    "fractional_laplacian_1d", "one_sided_fractional_1d", "scaling_probe", "profile_gagliardo", "profile_field",
    "step_field", "default_u_star", "DescentInfo",
]
