"""Discrete local phase-field energy on uniform node grids.

Functional: ``F(u) = integral of eps |grad u|^2 / 2 + Q(x) W(u) / eps``.

The Dirichlet part uses forward differences on grid edges and the
potential part the trapezoid rule, so the exact gradient at interior
nodes is the standard 3- or 5-point Laplacian stencil. Boundary nodes
carry the Dirichlet data and never move.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.fft import dstn, idstn
from scipy.integrate import IntegrationWarning, quad

from .errors import DomainError, NumericError, OptimizationError
from .potential import DoubleWell, surface_tension_constant


@dataclass(frozen=True)
class Grid:
    """Node-inclusive uniform grid on a box.

    ``counts[k]`` nodes span ``[lo[k], hi[k]]`` on axis k; axis 0 is the
    first array index. The spacing must agree across axes.
    """

    lo: tuple[float, ...]
    hi: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        object.__setattr__(self, "counts", tuple(int(v) for v in self.counts))
        self.validate()

    def validate(self) -> None:
        if not (len(self.lo) == len(self.hi) == len(self.counts)):
            raise DomainError("lo, hi and counts must have the same length")
        if self.dim not in (1, 2):
            raise DomainError(f"grids are 1D or 2D, got dim={self.dim}")
        if any(c < 4 for c in self.counts):
            raise DomainError(f"need at least 4 nodes per axis, got {self.counts}")
        if any(b <= a for a, b in zip(self.lo, self.hi)):
            raise DomainError("each axis needs lo < hi")
        hs = self.spacings
        if max(hs) - min(hs) > 1e-9 * max(hs):
            raise DomainError(f"spacing must be uniform across axes, got {hs}")

    @classmethod
    def uniform(cls, lo: Sequence[float], hi: Sequence[float], h: float) -> "Grid":
        """Grid with spacing as close to ``h`` as the extent allows."""
        counts = tuple(int(round((b - a) / h)) + 1 for a, b in zip(lo, hi))
        return cls(tuple(lo), tuple(hi), counts)

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple((b - a) / (c - 1) for a, b, c in zip(self.lo, self.hi, self.counts))

    @property
    def h(self) -> float:
        return self.spacings[0]

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    def axes(self) -> list[np.ndarray]:
        return [np.linspace(a, b, c) for a, b, c in zip(self.lo, self.hi, self.counts)]

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``counts + (dim,)``."""
        return np.stack(self.mesh(), axis=-1)

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def trapezoid_weights(self) -> np.ndarray:
        w = np.ones(self.counts)
        for axis in range(self.dim):
            idx = [slice(None)] * self.dim
            for end in (0, -1):
                idx[axis] = end
                w[tuple(idx)] *= 0.5
        return w * self.cell_volume

    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.counts, dtype=bool)
        for axis in range(self.dim):
            idx = [slice(None)] * self.dim
            for end in (0, -1):
                idx[axis] = end
                mask[tuple(idx)] = True
        return mask

    def contains_ball(self, center: Sequence[float], r: float) -> bool:
        return all(a - 1e-12 <= c - r and c + r <= b + 1e-12
                   for a, b, c in zip(self.lo, self.hi, center))


@dataclass(frozen=True, eq=False)
class Field:
    """Order parameter sampled at grid nodes.

    Boundary-node values are the Dirichlet data. ``Q`` is an optional
    heterogeneity, either a callable on node coordinates or an array.
    """

    grid: Grid
    values: np.ndarray
    eps: float
    Q: Callable[[np.ndarray], np.ndarray] | np.ndarray | None = None
    q_bounds: tuple[float, float] | None = None
    _q_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        self.validate()

    def validate(self) -> None:
        if self.values.shape != self.grid.shape:
            raise DomainError(f"values shape {self.values.shape} != grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("field values must be finite")
        if not self.eps > 0:
            raise DomainError(f"eps must be positive, got {self.eps}")
        if self.Q is not None:
            q = self.q_values
            lo, hi = self.q_bounds if self.q_bounds is not None else (q.min(), q.max())
            if not 0 < lo <= hi:
                raise DomainError("Q bounds must satisfy 0 < Q_lo <= Q_hi")
            if q.min() < lo - 1e-12 or q.max() > hi + 1e-12:
                raise DomainError("Q leaves its declared range")

    @property
    def q_values(self) -> np.ndarray:
        if self.Q is None:
            return np.ones(self.grid.shape)
        if "q" not in self._q_cache:
            if callable(self.Q):
                q = np.asarray(self.Q(self.grid.points()), dtype=float)
            else:
                q = np.asarray(self.Q, dtype=float)
            self._q_cache["q"] = np.broadcast_to(q, self.grid.shape).copy()
        return self._q_cache["q"]

    @property
    def boundary(self) -> np.ndarray:
        return self.values[self.grid.boundary_mask()]

    def with_values(self, values: np.ndarray) -> "Field":
        new = replace(self, values=values, _q_cache={})
        if "q" in self._q_cache:
            new._q_cache["q"] = self._q_cache["q"]
        return new

    def points(self) -> np.ndarray:
        return self.grid.points()

    @property
    def cell_volume(self) -> float:
        return self.grid.cell_volume

    def value_at(self, x: Sequence[float]) -> float:
        """Value at the node nearest to ``x``."""
        idx = tuple(
            int(np.clip(round((xi - a) / self.grid.h), 0, c - 1))
            for xi, a, c in zip(x, self.grid.lo, self.grid.counts)
        )
        return float(self.values[idx])

    def csv_rows(self) -> tuple[list[str], list[list[str]]]:
        names = ["x", "y"][: self.grid.dim]
        pts = self.points().reshape(-1, self.grid.dim)
        rows = [[repr(float(c)) for c in p] + [repr(float(v))]
                for p, v in zip(pts, self.values.ravel())]
        return names + ["u"], rows

    def to_bytes(self) -> bytes:
        """Little-endian dump: uint32 dim, uint32 counts[dim], float64 h,
        float64 lo[dim], float64 values in C order, float64 eps."""
        g = self.grid
        head = struct.pack(f"<I{g.dim}Id{g.dim}d", g.dim, *g.counts, g.h, *g.lo)
        body = np.ascontiguousarray(self.values, dtype="<f8").tobytes()
        return head + body + struct.pack("<d", self.eps)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Field":
        (dim,) = struct.unpack_from("<I", data, 0)
        off = 4
        counts = struct.unpack_from(f"<{dim}I", data, off)
        off += 4 * dim
        (h,) = struct.unpack_from("<d", data, off)
        off += 8
        lo = struct.unpack_from(f"<{dim}d", data, off)
        off += 8 * dim
        n = int(np.prod(counts))
        values = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(counts)
        (eps,) = struct.unpack_from("<d", data, off + 8 * n)
        hi = tuple(a + h * (c - 1) for a, c in zip(lo, counts))
        return cls(Grid(lo, hi, counts), values.copy(), eps)


def _edge_weights(grid: Grid, axis: int) -> np.ndarray:
    """Transverse trapezoid weights for edges along ``axis``."""
    shape = list(grid.shape)
    shape[axis] -= 1
    w = np.ones(shape)
    for other in range(grid.dim):
        if other == axis:
            continue
        idx = [slice(None)] * grid.dim
        for end in (0, -1):
            idx[other] = end
            w[tuple(idx)] *= 0.5
    return w


@dataclass(frozen=True, eq=False)
class _LocalOperator:
    """Precomputed weights for energy and gradient of one field layout."""

    grid: Grid
    eps: float
    q: np.ndarray
    trap: np.ndarray
    edge_w: tuple[np.ndarray, ...]
    interior: np.ndarray

    @classmethod
    def build(cls, f: Field) -> "_LocalOperator":
        g = f.grid
        return cls(
            grid=g,
            eps=f.eps,
            q=f.q_values,
            trap=g.trapezoid_weights(),
            edge_w=tuple(_edge_weights(g, a) for a in range(g.dim)),
            interior=~g.boundary_mask(),
        )

    def energy(self, u: np.ndarray, w: DoubleWell) -> float:
        g = self.grid
        h = g.h
        dirichlet = 0.0
        for axis in range(g.dim):
            d = np.diff(u, axis=axis)
            dirichlet += float(np.sum(self.edge_w[axis] * d * d))
        dirichlet *= 0.5 * self.eps * h ** (g.dim - 2)
        potential = float(np.sum(self.trap * self.q * w.W(u))) / self.eps
        return dirichlet + potential

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        """5-point (or 3-point) Laplacian at interior nodes, zero elsewhere."""
        g = self.grid
        lap = np.zeros_like(u)
        inner = tuple(slice(1, -1) for _ in range(g.dim))
        for axis in range(g.dim):
            lo = list(inner)
            hi = list(inner)
            lo[axis] = slice(0, -2)
            hi[axis] = slice(2, None)
            lap[inner] += u[tuple(lo)] + u[tuple(hi)] - 2.0 * u[inner]
        return lap / g.h**2

    def l2_gradient(self, u: np.ndarray, w: DoubleWell) -> np.ndarray:
        grad = -self.eps * self.laplacian(u) + self.q * w.dW(u) / self.eps
        return np.where(self.interior, grad, 0.0)


def energy_local(f: Field, w: DoubleWell) -> float:
    return _LocalOperator.build(f).energy(f.values, w)


def residual_allen_cahn(f: Field, w: DoubleWell) -> float:
    """Sup over interior nodes of ``|eps^2 lap u - Q W'(u)|``."""
    op = _LocalOperator.build(f)
    r = f.eps**2 * op.laplacian(f.values) - op.q * w.dW(f.values)
    return float(np.max(np.abs(r[op.interior])))


STEP_RULES = ("sobolev", "bb", "armijo")
# Consecutive accepted steps with no energy decrease at all before stopping.
STALL_WINDOW = 50


@dataclass(frozen=True)
class MinimizeOptions:
    """Descent settings.

    ``sobolev`` preconditions the L2 gradient with ``(-eps lap + c/eps)^-1``
    and uses Barzilai-Borwein trial steps in that metric; ``bb`` and
    ``armijo`` are the plain explicit L2 flows.
    """

    max_iters: int = 200_000
    tol: float = 1e-8
    step_rule: str = "sobolev"
    armijo: float = 1e-4
    max_backtracks: int = 60

    def validate(self) -> None:
        if self.step_rule not in STEP_RULES:
            raise DomainError(f"step_rule must be one of {STEP_RULES}, got {self.step_rule!r}")
        if not self.tol > 0 or self.max_iters < 1:
            raise DomainError("need tol > 0 and max_iters >= 1")
        if not 0 < self.armijo < 1:
            raise DomainError("Armijo constant must lie in (0, 1)")


@dataclass(frozen=True)
class DescentInfo:
    iterations: int
    converged: bool
    status: str
    grad_sup: float
    energies: tuple[float, ...]


def descend(
    x0: np.ndarray,
    energy: Callable[[np.ndarray], float],
    gradient: Callable[[np.ndarray], np.ndarray],
    metric: float,
    initial_step: float,
    opts: MinimizeOptions,
    precondition: Callable[[np.ndarray], np.ndarray] | None = None,
    record_every: int = 1,
) -> tuple[np.ndarray, DescentInfo]:
    """Monotone gradient descent with Armijo backtracking.

    ``gradient`` returns the L2 gradient; ``metric`` is the cell volume
    converting it to the Euclidean gradient of ``energy``. With the ``bb``
    rule the trial step is the Barzilai-Borwein step of the last move,
    otherwise the previous accepted step doubled. ``precondition`` is an
    optional symmetric positive definite map applied to the gradient.
    """
    opts.validate()
    u = np.array(x0, dtype=float)
    e = energy(u)
    g = gradient(u)
    energies = [e]
    tau = float(initial_step)
    tau_floor = initial_step * 2.0 ** (-opts.max_backtracks)
    prev = None
    status = "max_iters"
    it = 0
    flat = 0
    for it in range(1, opts.max_iters + 1):
        gsup = float(np.max(np.abs(g))) if g.size else 0.0
        if gsup < opts.tol:
            status = "converged"
            it -= 1
            break
        d = g if precondition is None else precondition(g)
        slope = metric * float(np.sum(g * d))
        if opts.step_rule != "armijo" and prev is not None:
            s, y = prev
            sy = float(np.sum(s * y))
            if sy > 0:
                py = y if precondition is None else precondition(y)
                tau = sy / float(np.sum(y * py))
        for _ in range(opts.max_backtracks):
            trial = u - tau * d
            e_trial = energy(trial)
            if e_trial <= e - opts.armijo * tau * slope:
                break
            tau *= 0.5
        else:
            # The predicted decrease is lost in rounding: stop, do not fail.
            if tau * slope <= 1e-13 * max(1.0, abs(e)):
                status = "stalled"
                break
            raise OptimizationError(
                f"line search failed at iteration {it} (energy {e:.6g}, sup grad {gsup:.3g})"
            )
        if not np.isfinite(e_trial):
            raise OptimizationError("energy became non-finite")
        if e_trial >= e:
            flat += 1
            if flat >= STALL_WINDOW:
                u, e = trial, e_trial
                g = gradient(u)
                status = "stalled"
                break
        else:
            flat = 0
        g_new = gradient(trial)
        prev = (trial - u, g_new - g)
        u, e, g = trial, e_trial, g_new
        if it % record_every == 0:
            energies.append(e)
        if opts.step_rule == "armijo":
            tau = max(2.0 * tau, tau_floor)
    else:
        it = opts.max_iters
    if energies[-1] != e:
        energies.append(e)
    gsup = float(np.max(np.abs(g))) if g.size else 0.0
    if gsup < opts.tol:
        status = "converged"
    return u, DescentInfo(
        iterations=it,
        converged=status == "converged",
        status=status,
        grad_sup=gsup,
        energies=tuple(energies),
    )


def minimize_local(
    f: Field,
    w: DoubleWell,
    opts: MinimizeOptions | None = None,
    full_output: bool = False,
):
    """Gradient flow on ``energy_local`` with boundary nodes held fixed.

    Stops when the sup norm of the L2 gradient on interior nodes drops
    below ``opts.tol``. The returned field never has higher energy than
    the input.
    """
    opts = opts or MinimizeOptions()
    op = _LocalOperator.build(f)
    g = f.grid
    curv = float(np.max(np.abs(w.d2W(np.linspace(-1.0, 1.0, 201))))) * float(np.max(op.q))
    stable = 1.0 / (2.0 * g.dim * f.eps / g.h**2 + curv / f.eps)
    precondition = None
    if opts.step_rule == "sobolev":
        precondition = _sobolev_preconditioner(g, f.eps, max(curv, 1.0))
        stable = 0.5
    u, info = descend(
        f.values,
        energy=lambda v: op.energy(v, w),
        gradient=lambda v: op.l2_gradient(v, w),
        metric=g.cell_volume,
        initial_step=stable,
        opts=opts,
        precondition=precondition,
    )
    out = f.with_values(u)
    return (out, info) if full_output else out


def _sobolev_preconditioner(grid: Grid, eps: float, shift: float):
    """Exact inverse of ``-eps lap_h + shift/eps`` on interior nodes.

    The Dirichlet Laplacian on interior nodes is diagonalized by the
    type-I sine transform, so the solve costs two transforms.
    """
    n = [c - 2 for c in grid.counts]
    h = grid.h
    lam = 0.0
    for axis, m in enumerate(n):
        k = np.arange(1, m + 1)
        ev = (4.0 / h**2) * np.sin(np.pi * k / (2.0 * (m + 1))) ** 2
        shape = [1] * grid.dim
        shape[axis] = m
        lam = lam + ev.reshape(shape)
    denom = eps * lam + shift / eps
    inner = tuple(slice(1, -1) for _ in range(grid.dim))

    def apply(g: np.ndarray) -> np.ndarray:
        out = np.zeros_like(g)
        out[inner] = idstn(dstn(g[inner], type=1) / denom, type=1)
        return out

    return apply


def stability_form(f: Field, w: DoubleWell, phi: np.ndarray) -> float:
    """Second variation of ``energy_local`` at ``f`` in direction ``phi``.

    Equals the trapezoid sum of ``eps |grad phi|^2 + Q W''(u) phi^2 / eps``
    with the same edge weights as the energy, so it is the exact discrete
    Hessian quadratic form. At ``eps = 1`` this is the plain
    ``|grad phi|^2 + W''(u) phi^2``.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != f.grid.shape:
        raise DomainError("phi must live on the field's grid")
    if np.any(phi[f.grid.boundary_mask()] != 0.0):
        raise DomainError("phi must vanish on the boundary nodes")
    op = _LocalOperator.build(f)
    h = f.grid.h
    grad = 0.0
    for axis in range(f.grid.dim):
        d = np.diff(phi, axis=axis)
        grad += float(np.sum(op.edge_w[axis] * d * d))
    grad *= f.eps * h ** (f.grid.dim - 2)
    pot = float(np.sum(op.trap * op.q * w.d2W(f.values) * phi * phi)) / f.eps
    return grad + pot


# ----------------------------------------------------------------------------
# One-dimensional heteroclinic layer


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True, eq=False)
class LayerProfile:
    """Heteroclinic of ``u'' = W'(u)`` through ``u(0) = 0``.

    The profile is parametrized by ``t = -log(1 - |u|)`` in which the
    first integral ``dx/dt = (1 - |u|)/sqrt(2 W(u))`` is smooth and
    bounded; evaluation inverts the tabulated ``x(t)`` by Newton's method
    with Gauss-Legendre corrections between table nodes.
    """

    well: DoubleWell
    t_nodes: np.ndarray
    x_pos: np.ndarray
    x_neg: np.ndarray
    abscissae: np.ndarray
    values: np.ndarray
    ode_residual: float
    first_integral_error: float

    @staticmethod
    def _dxdt(well: DoubleWell, t: np.ndarray, sign: float) -> np.ndarray:
        m = np.exp(-t)
        u = sign * (-np.expm1(-t))
        return m / np.sqrt(2.0 * np.asarray(well.W(u), dtype=float))

    def _x_of_t(self, t: np.ndarray, sign: float) -> np.ndarray:
        table = self.x_pos if sign > 0 else self.x_neg
        dt = self.t_nodes[1] - self.t_nodes[0]
        k = np.clip(np.floor(t / dt).astype(int), 0, len(self.t_nodes) - 1)
        a = self.t_nodes[k]
        half = 0.5 * (t - a)
        nodes = a[..., None] + half[..., None] * (_GL_NODES + 1.0)
        vals = self._dxdt(self.well, nodes, sign)
        return table[k] + half * np.sum(vals * _GL_WEIGHTS, axis=-1)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        sign = np.where(x >= 0, 1.0, -1.0)
        out = np.empty_like(x)
        for s in (1.0, -1.0):
            sel = sign == s
            if not np.any(sel):
                continue
            target = np.abs(x[sel])
            table = self.x_pos if s > 0 else self.x_neg
            t = np.interp(target, table, self.t_nodes)
            for _ in range(50):
                step = (self._x_of_t(t, s) - target) / self._dxdt(self.well, t, s)
                t = np.maximum(t - step, 0.0)
                if np.max(np.abs(step)) < 1e-15 * max(1.0, float(np.max(t))):
                    break
            out[sel] = s * (-np.expm1(-t))
        return out

    def derivative(self, x) -> np.ndarray:
        u = self(x)
        return np.sqrt(2.0 * np.asarray(self.well.W(u), dtype=float))


def _d2_sixth_order(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, d: float) -> np.ndarray:
    c = (2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0)
    acc = sum(ck * fn(x + (k - 3) * d) for k, ck in enumerate(c))
    return acc / (180.0 * d * d)


def layer_profile_1d(
    w: DoubleWell, half_width: float = 8.0, tol: float = 1e-6, samples: int = 1601
) -> LayerProfile:
    """Compute the heteroclinic from the first integral ``u' = sqrt(2 W(u))``.

    Raises :class:`NumericError` when a table quadrature fails or the
    second-order ODE residual exceeds ``tol``.
    """
    if half_width < 5:
        raise DomainError(f"half_width must be at least 5, got {half_width}")
    if not tol > 0:
        raise DomainError("tol must be positive")
    dt = 0.25
    # x grows like t / sqrt(W''(+-1)) at large t.
    slope = 1.0 / math.sqrt(min(float(w.d2W(1.0)), float(w.d2W(-1.0))))
    t_max = half_width / slope + 6.0
    t_nodes = np.arange(0.0, t_max + dt, dt)
    tables = {}
    for sign in (1.0, -1.0):
        acc = np.zeros_like(t_nodes)
        for k in range(1, len(t_nodes)):
            with warnings.catch_warnings():
                # Far in the tail W(u) is evaluated from u alone and loses
                # digits to cancellation; QUADPACK then warns about roundoff.
                warnings.simplefilter("ignore", IntegrationWarning)
                val, err = quad(
                    lambda t: float(LayerProfile._dxdt(w, np.array(t), sign)),
                    t_nodes[k - 1], t_nodes[k], epsabs=1e-13, epsrel=1e-12, limit=100,
                )
            # An error dx in x moves u by about u'(x) dx ~ e^{-t} dx, so the
            # admissible table error grows like e^{t}.
            allowed = min(1e-6, 1e-12 * math.exp(t_nodes[k - 1]))
            if not np.isfinite(val) or err > allowed:
                raise NumericError(f"layer quadrature failed near t={t_nodes[k]:.3g}")
            acc[k] = acc[k - 1] + val
        tables[sign] = acc
    if tables[1.0][-1] < half_width or tables[-1.0][-1] < half_width:
        raise NumericError("layer table does not reach the requested half width")
    x = np.linspace(-half_width, half_width, samples)
    proto = LayerProfile(w, t_nodes, tables[1.0], tables[-1.0], x, np.zeros_like(x), 0.0, 0.0)
    u = proto(x)
    du = proto.derivative(x)
    inner = x[np.abs(x) <= half_width - 0.05]
    res = float(np.max(np.abs(_d2_sixth_order(proto, inner, 1e-2) - w.dW(proto(inner)))))
    # Independent check of the first integral by central differences.
    fd = (proto(inner + 1e-5) - proto(inner - 1e-5)) / 2e-5
    fie = float(np.max(np.abs(fd - proto.derivative(inner))))
    prof = LayerProfile(w, t_nodes, tables[1.0], tables[-1.0], x, u, res, fie)
    if res > tol:
        raise NumericError(f"layer ODE residual {res:.3g} exceeds tol {tol:.3g}")
    del du
    return prof


def layer_field(grid: Grid, eps: float, profile: LayerProfile,
                normal: Sequence[float] | None = None, offset: float = 0.0) -> Field:
    """Planar layer ``u(x) = profile((x . normal - offset) / eps)`` on a grid."""
    normal = np.asarray(normal if normal is not None else [1.0] + [0.0] * (grid.dim - 1), float)
    normal = normal / np.linalg.norm(normal)
    s = (grid.points() @ normal - offset) / eps
    return Field(grid, profile(s), eps)


# ----------------------------------------------------------------------------
# Gamma-limit probe


@dataclass(frozen=True)
class GammaRow:
    eps: float
    h: float
    energy: float
    deviation: float
    iterations: int


@dataclass(frozen=True)
class GammaProbe:
    target: float
    rows: tuple[GammaRow, ...]

    @property
    def deviations(self) -> np.ndarray:
        return np.array([r.deviation for r in self.rows])

    def strictly_decreasing(self) -> bool:
        d = self.deviations
        return bool(np.all(np.diff(d) < 0))


def probe_spacing(eps: float) -> float:
    """Refinement path of the probe: nodes per eps grow like 1/(2 eps).

    Along this path ``h/eps -> 0`` jointly with ``eps``, so the
    discretization error shrinks with eps instead of staying constant.
    """
    return eps / max(4.0, 0.5 / eps)


def gamma_probe_local(
    eps_list: Sequence[float],
    w: DoubleWell,
    half_length: float = 1.0,
    opts: MinimizeOptions | None = None,
    spacing: Callable[[float], float] = probe_spacing,
) -> GammaProbe:
    """Minimize the 1D energy on ``(-L, L)`` with data -1 / +1 for each eps.

    Reports each minimum energy against the surface tension constant.
    """
    eps_arr = np.asarray(list(eps_list), dtype=float)
    if eps_arr.size == 0 or np.any(eps_arr <= 0) or np.any(np.diff(eps_arr) >= 0):
        raise DomainError("eps_list must be positive and strictly decreasing")
    opts = opts or MinimizeOptions(tol=1e-9)
    c = surface_tension_constant(w)
    rows = []
    for eps in eps_arr:
        h_target = spacing(float(eps))
        n = 2 * int(math.ceil(half_length / h_target)) + 1
        grid = Grid((-half_length,), (half_length,), (n,))
        x = grid.axes()[0]
        u0 = np.clip(x / (4.0 * eps), -1.0, 1.0)
        start = Field(grid, u0, float(eps))
        out, info = minimize_local(start, w, opts, full_output=True)
        e = energy_local(out, w)
        rows.append(GammaRow(float(eps), grid.h, e, abs(e - c), info.iterations))
    return GammaProbe(target=c, rows=tuple(rows))
