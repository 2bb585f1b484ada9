"""Sets, their kernel interactions and perimeters.

Interactions ``I(E, F) = integral over E x F of |x - y|^{-n-alpha}`` are
computed line by line. Writing ``x = p + s theta``, ``y = p + t theta``
turns the pair integral into

    I(E, F) = 1/2 * integral over directions theta and offsets p
              of I_1(E on the line, F on the line),

where ``I_1`` is the 1D interaction of the two chord sets, which is
closed form for unions of intervals. Only the outer integral over
(theta, p) is sampled, by stratified Monte Carlo or a midpoint rule.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats
from scipy.integrate import IntegrationWarning, quad
from scipy.ndimage import gaussian_filter
from scipy.signal import fftconvolve

from . import _kernels as kern
from .errors import DomainError, NumericError
from .localfield import Grid

Intervals = list[tuple[float, float]]
KINDS = ("halfspace", "ball", "box", "interval", "grid", "lawson", "whole", "empty",
         "complement", "intersection")


# ---------------------------------------------------------------------------
# interval algebra


def normalize(intervals: Iterable[tuple[float, float]]) -> Intervals:
    """Sorted, merged, non-empty open intervals."""
    items = sorted((float(a), float(b)) for a, b in intervals if b > a)
    out: Intervals = []
    for a, b in items:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


def complement(intervals: Intervals) -> Intervals:
    out: Intervals = []
    prev = -math.inf
    for a, b in intervals:
        if a > prev:
            out.append((prev, a))
        prev = b
    if prev < math.inf:
        out.append((prev, math.inf))
    return out


def intersect(x: Intervals, y: Intervals) -> Intervals:
    out: Intervals = []
    i = j = 0
    while i < len(x) and j < len(y):
        a = max(x[i][0], y[j][0])
        b = min(x[i][1], y[j][1])
        if b > a:
            out.append((a, b))
        if x[i][1] < y[j][1]:
            i += 1
        else:
            j += 1
    return out


def total_length(intervals: Intervals) -> float:
    return float(sum(b - a for a, b in intervals))


def interaction_1d(x: Intervals, y: Intervals, alpha: float) -> float:
    """Exact interaction of two disjoint unions of intervals."""
    total = 0.0
    for a, b in x:
        for c, d in y:
            if b <= c:
                total += kern.interval_interaction(a, b, c, d, alpha)
            elif d <= a:
                total += kern.interval_interaction(c, d, a, b, alpha)
            else:
                raise DomainError("sets overlap on a set of positive length")
            if math.isinf(total):
                return math.inf
    return total


# ---------------------------------------------------------------------------
# sets


@dataclass(frozen=True)
class SetRegion:
    """A measurable set in ``R^dim`` described analytically or by a grid mask.

    Use the constructors (:meth:`halfspace`, :meth:`ball`, :meth:`box`,
    :meth:`intervals`, :meth:`grid_indicator`, ...) rather than building
    the fields directly. ``params`` holds plain tuples so regions hash.
    """

    kind: str
    dim: int
    params: tuple = ()
    parts: tuple["SetRegion", ...] = ()
    grid: Grid | None = field(default=None, compare=False)
    mask: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        self.validate()

    # -- constructors ----------------------------------------------------

    @classmethod
    def halfspace(cls, normal: Sequence[float], offset: float = 0.0) -> "SetRegion":
        """``{x : normal . x > offset}`` with ``normal`` normalised."""
        nu = np.asarray(normal, dtype=float)
        norm = float(np.linalg.norm(nu))
        if not norm > 0:
            raise DomainError("halfspace normal must be nonzero")
        return cls("halfspace", len(nu), (tuple(nu / norm), float(offset) / norm))

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "SetRegion":
        return cls("ball", len(center), (tuple(float(c) for c in center), float(radius)))

    @classmethod
    def box(cls, lo: Sequence[float], hi: Sequence[float]) -> "SetRegion":
        return cls("box", len(lo), (tuple(float(v) for v in lo), tuple(float(v) for v in hi)))

    @classmethod
    def cube(cls, side: float, center: Sequence[float] | None = None, dim: int = 2) -> "SetRegion":
        c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
        if not side > 0:
            raise DomainError("cube side must be positive")
        return cls.box(c - side / 2, c + side / 2)

    @classmethod
    def interval(cls, a: float, b: float) -> "SetRegion":
        return cls.intervals([(a, b)])

    @classmethod
    def intervals(cls, pieces: Iterable[tuple[float, float]]) -> "SetRegion":
        """Union of open intervals on the line (endpoints may be infinite)."""
        pieces = list(pieces)
        for a, b in pieces:
            if not b > a:
                raise DomainError(f"interval ({a}, {b}) is empty")
        return cls("interval", 1, tuple(normalize(pieces)))

    @classmethod
    def grid_indicator(cls, grid: Grid, mask: np.ndarray) -> "SetRegion":
        """Union of the cells centred at the nodes where ``mask`` holds."""
        m = np.asarray(mask, dtype=bool)
        if m.shape != grid.shape:
            raise DomainError("mask shape differs from grid shape")
        m = m.copy()
        m.setflags(write=False)
        return cls("grid", grid.dim, (), (), grid, m)

    @classmethod
    def lawson(cls, m: int, n: int, delta: float) -> "SetRegion":
        """``{(y, z) in R^m x R^(n-m) : |z| <= delta |y|}``."""
        return cls("lawson", int(n), (int(m), float(delta)))

    @classmethod
    def whole(cls, dim: int) -> "SetRegion":
        return cls("whole", dim)

    @classmethod
    def empty(cls, dim: int) -> "SetRegion":
        return cls("empty", dim)

    def complement(self) -> "SetRegion":
        if self.kind == "complement":
            return self.parts[0]
        if self.kind == "whole":
            return SetRegion.empty(self.dim)
        if self.kind == "empty":
            return SetRegion.whole(self.dim)
        return SetRegion("complement", self.dim, (), (self,))

    def intersection(self, *others: "SetRegion") -> "SetRegion":
        parts = [p for s in (self, *others) for p in (s.parts if s.kind == "intersection" else (s,))]
        if any(p.kind == "empty" for p in parts):
            return SetRegion.empty(self.dim)
        parts = [p for p in parts if p.kind != "whole"]
        if not parts:
            return SetRegion.whole(self.dim)
        if len(parts) == 1:
            return parts[0]
        return SetRegion("intersection", self.dim, (), tuple(parts))

    def __and__(self, other: "SetRegion") -> "SetRegion":
        return self.intersection(other)

    def __invert__(self) -> "SetRegion":
        return self.complement()

    # -- validation ------------------------------------------------------

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise DomainError(f"unknown set kind {self.kind!r}")
        if self.dim < 1:
            raise DomainError("dimension must be positive")
        if self.kind == "ball":
            center, r = self.params
            if not (r > 0 and math.isfinite(r)) or not np.all(np.isfinite(center)):
                raise DomainError("ball needs a finite centre and positive radius")
        elif self.kind == "box":
            lo, hi = self.params
            if len(lo) != len(hi) or not all(b > a for a, b in zip(lo, hi)):
                raise DomainError("box needs lo < hi in every coordinate")
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise DomainError("box bounds must be finite")
        elif self.kind == "halfspace":
            if not math.isfinite(self.params[1]):
                raise DomainError("halfspace offset must be finite")
        elif self.kind == "lawson":
            m, delta = self.params
            if not (1 <= m <= self.dim - 1) or not delta > 0:
                raise DomainError("lawson cone needs 1 <= m <= n-1 and delta > 0")
        elif self.kind == "grid":
            if self.grid is None or self.mask is None:
                raise DomainError("grid indicator needs a grid and a mask")
        for p in self.parts:
            if p.dim != self.dim:
                raise DomainError("combined sets must share a dimension")

    # -- geometry --------------------------------------------------------

    def contains(self, points) -> np.ndarray:
        """Membership of points with shape ``(..., dim)`` (or ``(...)`` in 1D)."""
        x = np.asarray(points, dtype=float)
        if self.dim == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dim:
            raise DomainError(f"points must have last axis {self.dim}")
        k = self.kind
        if k == "whole":
            return np.ones(x.shape[:-1], dtype=bool)
        if k == "empty":
            return np.zeros(x.shape[:-1], dtype=bool)
        if k == "halfspace":
            nu, c = self.params
            return x @ np.asarray(nu) > c
        if k == "ball":
            c, r = self.params
            return np.sum((x - np.asarray(c)) ** 2, axis=-1) < r * r
        if k == "box":
            lo, hi = self.params
            return np.all((x > np.asarray(lo)) & (x < np.asarray(hi)), axis=-1)
        if k == "interval":
            s = x[..., 0]
            out = np.zeros(s.shape, dtype=bool)
            for a, b in self.params:
                out |= (s > a) & (s < b)
            return out
        if k == "lawson":
            m, delta = self.params
            y = np.linalg.norm(x[..., :m], axis=-1)
            z = np.linalg.norm(x[..., m:], axis=-1)
            return z <= delta * y
        if k == "grid":
            g = self.grid
            h = np.asarray(g.spacings)
            idx = np.floor((x - (np.asarray(g.lo) - h / 2)) / h).astype(int)
            inside = np.all((idx >= 0) & (idx < np.asarray(g.counts)), axis=-1)
            out = np.zeros(x.shape[:-1], dtype=bool)
            sel = idx[inside]
            out[inside] = self.mask[tuple(sel.T)]
            return out
        if k == "complement":
            return ~self.parts[0].contains(x)
        if k == "intersection":
            out = np.ones(x.shape[:-1], dtype=bool)
            for p in self.parts:
                out &= p.contains(x)
            return out
        raise DomainError(f"membership not defined for {k}")

    def line_intervals(self, p: np.ndarray, theta: np.ndarray) -> Intervals:
        """Parameters ``t`` with ``p + t theta`` in the set (``|theta| = 1``)."""
        p = np.asarray(p, dtype=float).reshape(self.dim)
        th = np.asarray(theta, dtype=float).reshape(self.dim)
        k = self.kind
        if k == "whole":
            return [(-math.inf, math.inf)]
        if k == "empty":
            return []
        if k == "halfspace":
            nu, c = self.params
            nu = np.asarray(nu)
            a, b = float(nu @ th), float(nu @ p)
            if a == 0.0:
                return [(-math.inf, math.inf)] if b > c else []
            t0 = (c - b) / a
            return [(t0, math.inf)] if a > 0 else [(-math.inf, t0)]
        if k == "ball":
            c, r = self.params
            q = p - np.asarray(c)
            bq = float(q @ th)
            disc = bq * bq - (float(q @ q) - r * r)
            if disc <= 0:
                return []
            s = math.sqrt(disc)
            return [(-bq - s, -bq + s)]
        if k == "box":
            lo, hi = self.params
            t_lo, t_hi = -math.inf, math.inf
            for i in range(self.dim):
                if th[i] == 0.0:
                    if not lo[i] < p[i] < hi[i]:
                        return []
                    continue
                t1 = (lo[i] - p[i]) / th[i]
                t2 = (hi[i] - p[i]) / th[i]
                t_lo = max(t_lo, min(t1, t2))
                t_hi = min(t_hi, max(t1, t2))
            return [(t_lo, t_hi)] if t_hi > t_lo else []
        if k == "interval":
            s = float(th[0])
            pts = [((a - p[0]) / s, (b - p[0]) / s) for a, b in self.params]
            return normalize((min(u, v), max(u, v)) for u, v in pts)
        if k == "lawson":
            return _quadratic_cone_intervals(self, p, th)
        if k == "grid":
            return _grid_line_intervals(self, p, th)
        if k == "complement":
            return complement(self.parts[0].line_intervals(p, th))
        if k == "intersection":
            out = [(-math.inf, math.inf)]
            for part in self.parts:
                out = intersect(out, part.line_intervals(p, th))
                if not out:
                    break
            return out
        raise DomainError(f"line intervals not defined for {k}")

    def bounding_ball(self) -> tuple[np.ndarray, float] | None:
        """A ball containing the set, or ``None`` when it is unbounded."""
        k = self.kind
        if k == "empty":
            return np.zeros(self.dim), 0.0
        if k == "ball":
            c, r = self.params
            return np.asarray(c), r
        if k == "box":
            lo, hi = map(np.asarray, self.params)
            return (lo + hi) / 2, float(np.linalg.norm(hi - lo) / 2)
        if k == "interval":
            a, b = self.params[0][0], self.params[-1][1]
            if math.isinf(a) or math.isinf(b):
                return None
            return np.array([(a + b) / 2]), (b - a) / 2
        if k == "grid":
            g = self.grid
            h = np.asarray(g.spacings)
            lo = np.asarray(g.lo) - h / 2
            hi = np.asarray(g.hi) + h / 2
            return (lo + hi) / 2, float(np.linalg.norm(hi - lo) / 2)
        if k == "intersection":
            balls = [b for b in (p.bounding_ball() for p in self.parts) if b is not None]
            if not balls:
                return None
            return min(balls, key=lambda b: b[1])
        return None

    def scaled(self, t: float) -> "SetRegion":
        """Dilation ``t E`` about the origin."""
        if not t > 0:
            raise DomainError("dilation factor must be positive")
        k = self.kind
        if k in ("whole", "empty", "lawson"):
            return self
        if k == "halfspace":
            nu, c = self.params
            return SetRegion("halfspace", self.dim, (nu, c * t))
        if k == "ball":
            c, r = self.params
            return SetRegion.ball(tuple(t * v for v in c), r * t)
        if k == "box":
            lo, hi = self.params
            return SetRegion.box([t * v for v in lo], [t * v for v in hi])
        if k == "interval":
            return SetRegion.intervals([(t * a, t * b) for a, b in self.params])
        if k == "grid":
            g = self.grid
            return SetRegion.grid_indicator(
                Grid(tuple(t * v for v in g.lo), tuple(t * v for v in g.hi), g.counts), self.mask)
        if k == "complement":
            return self.parts[0].scaled(t).complement()
        return self.parts[0].scaled(t).intersection(*[p.scaled(t) for p in self.parts[1:]])

    def normal_at(self, x: Sequence[float]) -> np.ndarray | None:
        """Outer unit normal at a boundary point, when the set is smooth there."""
        x = np.asarray(x, dtype=float)
        k = self.kind
        if k == "halfspace":
            return -np.asarray(self.params[0])
        if k == "ball":
            c, r = self.params
            v = x - np.asarray(c)
            return v / np.linalg.norm(v)
        if k == "complement":
            inner = self.parts[0].normal_at(x)
            return None if inner is None else -inner
        return None

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind, "dim": self.dim}
        k = self.kind
        if k == "halfspace":
            out.update(normal=list(self.params[0]), offset=self.params[1])
        elif k == "ball":
            out.update(center=list(self.params[0]), radius=self.params[1])
        elif k == "box":
            out.update(lo=list(self.params[0]), hi=list(self.params[1]))
        elif k == "interval":
            out.update(pieces=[[a, b] for a, b in self.params])
        elif k == "lawson":
            out.update(m=self.params[0], delta=self.params[1])
        elif k == "grid":
            out.update(lo=list(self.grid.lo), hi=list(self.grid.hi),
                       counts=list(self.grid.counts), cells=int(self.mask.sum()))
        elif self.parts:
            out.update(parts=[p.to_json() for p in self.parts])
        return out

    @classmethod
    def from_json(cls, data: dict) -> "SetRegion":
        k = data.get("kind")
        if k == "halfspace":
            return cls.halfspace(data["normal"], data.get("offset", 0.0))
        if k == "ball":
            return cls.ball(data["center"], data["radius"])
        if k == "box":
            return cls.box(data["lo"], data["hi"])
        if k == "cube":
            return cls.cube(data["side"], data.get("center"), data.get("dim", 2))
        if k == "interval":
            if "pieces" in data:
                return cls.intervals([tuple(p) for p in data["pieces"]])
            return cls.interval(data["a"], data["b"])
        if k == "lawson":
            return cls.lawson(data["m"], data["dim"], data["delta"])
        if k == "whole":
            return cls.whole(data["dim"])
        if k == "empty":
            return cls.empty(data["dim"])
        if k == "complement":
            return cls.from_json(data["parts"][0]).complement()
        if k == "intersection":
            parts = [cls.from_json(p) for p in data["parts"]]
            return parts[0].intersection(*parts[1:])
        raise DomainError(f"cannot build a set from {json.dumps(data)}")


def _quadratic_cone_intervals(s: SetRegion, p: np.ndarray, th: np.ndarray) -> Intervals:
    m, delta = s.params
    d2 = delta * delta
    A = float(th[m:] @ th[m:] - d2 * th[:m] @ th[:m])
    B = float(p[m:] @ th[m:] - d2 * p[:m] @ th[:m])
    C = float(p[m:] @ p[m:] - d2 * p[:m] @ p[:m])
    # q(t) = A t^2 + 2 B t + C <= 0
    if abs(A) < 1e-14:
        if B == 0.0:
            return [(-math.inf, math.inf)] if C <= 0 else []
        t0 = -C / (2 * B)
        return [(-math.inf, t0)] if B > 0 else [(t0, math.inf)]
    disc = B * B - A * C
    if disc <= 0:
        return [] if A > 0 else [(-math.inf, math.inf)]
    r = math.sqrt(disc)
    t1, t2 = sorted(((-B - r) / A, (-B + r) / A))
    if A > 0:
        return [(t1, t2)]
    return [(-math.inf, t1), (t2, math.inf)]


def _grid_line_intervals(s: SetRegion, p: np.ndarray, th: np.ndarray) -> Intervals:
    """Chords of a grid indicator, sampled at a quarter of the cell size."""
    g = s.grid
    h = np.asarray(g.spacings)
    lo = np.asarray(g.lo) - h / 2
    hi = np.asarray(g.hi) + h / 2
    box = SetRegion.box(lo, hi)
    chord = box.line_intervals(p, th)
    if not chord:
        return []
    t0, t1 = chord[0]
    step = 0.25 * float(h.min())
    n = max(2, int(math.ceil((t1 - t0) / step)))
    ts = t0 + (np.arange(n) + 0.5) * (t1 - t0) / n
    inside = s.contains(p[None, :] + ts[:, None] * th[None, :])
    out: Intervals = []
    edges = t0 + np.arange(n + 1) * (t1 - t0) / n
    start = None
    for i, flag in enumerate(inside):
        if flag and start is None:
            start = edges[i]
        elif not flag and start is not None:
            out.append((start, edges[i]))
            start = None
    if start is not None:
        out.append((start, edges[-1]))
    return out


# ---------------------------------------------------------------------------
# interactions


@dataclass(frozen=True)
class Budget:
    """Sampling budget: ``samples`` lines split into ``batches`` replicates.

    ``seed`` is required so Monte Carlo results are reproducible bit for
    bit (Philox counter-based generator).
    """

    samples: int = 20000
    seed: int | None = None
    batches: int = 16
    method: str = "montecarlo"

    def validate(self) -> None:
        if self.method not in ("montecarlo", "quadrature"):
            raise DomainError(f"unknown method {self.method!r}")
        if self.samples < self.batches or self.batches < 2:
            raise DomainError("need at least two batches and one sample per batch")
        if self.method == "montecarlo" and self.seed is None:
            raise DomainError("Monte Carlo budgets need an explicit seed")

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(int(self.seed)))


@dataclass(frozen=True)
class Estimate:
    value: float
    error: float
    method: str
    samples: int

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error, "method": self.method,
                "samples": self.samples}


def _unit_sphere_area(n: int) -> float:
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def _unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _orthonormal_complement(theta: np.ndarray) -> np.ndarray:
    """Rows spanning the hyperplane orthogonal to ``theta``."""
    n = len(theta)
    q, _ = np.linalg.qr(np.column_stack([theta, np.eye(n)[:, : n - 1]]))
    return q[:, 1:].T


def _line_integral(line_value, dim: int, center: np.ndarray, radius: float,
                   budget: Budget) -> Estimate:
    """``1/2 integral over directions and offsets of line_value(p, theta)``.

    Offsets range over the disc of ``radius`` about ``center`` inside the
    hyperplane normal to ``theta``; lines missing that disc must
    contribute zero.
    """
    budget.validate()
    if dim == 1:
        v = line_value(center.copy(), np.array([1.0]))
        return Estimate(float(v), 0.0, "exact", 1)
    if budget.method == "quadrature":
        if dim != 2:
            raise DomainError("deterministic line quadrature is implemented in 2D")
        return _line_quadrature_2d(line_value, center, radius, budget)
    rng = budget.rng()
    per = budget.samples // budget.batches
    values = np.empty(budget.batches)
    if dim == 2:
        # theta in [0, pi) covers every line once: 1/2 * 2 = 1.
        k_theta = max(1, int(math.sqrt(per)))
        k_p = max(1, per // k_theta)
        for b in range(budget.batches):
            jt = rng.random((k_theta, k_p))
            jp = rng.random((k_theta, k_p))
            ang = (np.arange(k_theta)[:, None] + jt) * (math.pi / k_theta)
            off = -radius + (np.arange(k_p)[None, :] + jp) * (2 * radius / k_p)
            acc = 0.0
            for a_, o_ in zip(ang.ravel(), off.ravel()):
                th = np.array([math.cos(a_), math.sin(a_)])
                nrm = np.array([-th[1], th[0]])
                acc += line_value(center + o_ * nrm, th)
            values[b] = acc / (k_theta * k_p) * math.pi * 2 * radius
    else:
        vol = _unit_ball_volume(dim - 1) * radius ** (dim - 1)
        area = _unit_sphere_area(dim)
        for b in range(budget.batches):
            acc = 0.0
            for _ in range(per):
                th = rng.normal(size=dim)
                th /= np.linalg.norm(th)
                basis = _orthonormal_complement(th)
                d = rng.normal(size=dim - 1)
                d /= np.linalg.norm(d)
                rad = radius * rng.random() ** (1.0 / (dim - 1))
                acc += line_value(center + (rad * d) @ basis, th)
            values[b] = 0.5 * area * vol * acc / per
    mean = float(values.mean())
    if not np.all(np.isfinite(values)):
        return Estimate(math.inf, math.inf, "montecarlo", per * budget.batches)
    half = float(stats.t.ppf(0.975, budget.batches - 1) * values.std(ddof=1)
                 / math.sqrt(budget.batches))
    return Estimate(mean, half, "montecarlo", per * budget.batches)


def _line_quadrature_2d(line_value, center, radius, budget: Budget) -> Estimate:
    def rule(k: int) -> float:
        k_theta = max(2, int(math.sqrt(k)))
        k_p = max(2, k // k_theta)
        acc = 0.0
        for i in range(k_theta):
            a_ = (i + 0.5) * math.pi / k_theta
            th = np.array([math.cos(a_), math.sin(a_)])
            nrm = np.array([-th[1], th[0]])
            for j in range(k_p):
                o_ = -radius + (j + 0.5) * 2 * radius / k_p
                acc += line_value(center + o_ * nrm, th)
        return acc / (k_theta * k_p) * math.pi * 2 * radius

    coarse = rule(max(4, budget.samples // 4))
    fine = rule(budget.samples)
    return Estimate(fine, abs(fine - coarse), "quadrature", budget.samples)


def _window(*candidates: SetRegion) -> tuple[np.ndarray, float]:
    for s in candidates:
        b = s.bounding_ball()
        if b is not None:
            return np.asarray(b[0], dtype=float), float(b[1])
    raise DomainError("at least one side of the interaction must be bounded")


def _check_kernel(kernel, dim: int) -> float:
    if kernel.n != dim:
        raise DomainError("kernel dimension differs from the sets")
    return kernel.alpha


def interaction_alpha(E: SetRegion, F: SetRegion, kernel, budget: Budget | None = None) -> Estimate:
    """``I(E, F) = integral over E x F of |x - y|^{-n-alpha}``.

    Exact in 1D. Two grid indicators on one grid use the cell-pair
    weights shared with the nonlocal energy. Otherwise lines are sampled
    per ``budget``; the error is the 95% half-width (Monte Carlo) or the
    refinement delta (quadrature). Divergent interactions return ``inf``.
    """
    if E.dim != F.dim:
        raise DomainError("sets must share a dimension")
    alpha = _check_kernel(kernel, E.dim)
    if E.kind == "grid" and F.kind == "grid" and E.grid == F.grid:
        return _grid_interaction(E, F, alpha)
    budget = budget or Budget(method="quadrature" if E.dim <= 2 else "montecarlo")
    center, radius = _window(E, F)

    def value(p, th):
        return interaction_1d(E.line_intervals(p, th), F.line_intervals(p, th), alpha)

    if E.dim == 1:
        return Estimate(interaction_1d(list(E.line_intervals(np.zeros(1), np.ones(1))),
                                       list(F.line_intervals(np.zeros(1), np.ones(1))), alpha),
                        0.0, "exact", 1)
    return _line_integral(value, E.dim, center, radius, budget)


def _grid_interaction(E: SetRegion, F: SetRegion, alpha: float) -> Estimate:
    if np.any(E.mask & F.mask):
        raise DomainError("grid sets overlap")
    g = E.grid
    h = g.spacings[0]
    if g.dim == 1:
        w = kern.pair_weights_1d(alpha, g.counts[0]) * h ** (1.0 - alpha)
        full = np.concatenate([w[:0:-1], w])
    elif g.dim == 2:
        if abs(g.spacings[0] - g.spacings[1]) > 1e-12 * h:
            raise DomainError("grid interactions need square cells")
        w = np.asarray(kern.pair_weights_2d(alpha, max(g.counts))) * h ** (2.0 - alpha)
        full = np.block([[w[:0:-1, :0:-1], w[:0:-1, :]], [w[:, :0:-1], w]])
        n1, n2 = g.counts
        m = max(g.counts)
        full = full[m - n1:m + n1 - 1, m - n2:m + n2 - 1]
    else:
        raise DomainError("grid interactions are implemented in 1D and 2D")
    if alpha >= 1.0 and _touching(E.mask, F.mask):
        return Estimate(math.inf, math.inf, "grid", int(E.mask.sum()))
    conv = fftconvolve(F.mask.astype(float), full, mode="same")
    return Estimate(float(np.sum(conv[E.mask])), 0.0, "grid", int(E.mask.sum()))


def _touching(a: np.ndarray, b: np.ndarray) -> bool:
    for axis in range(a.ndim):
        for shift in (1, -1):
            if np.any(a & np.roll(b, shift, axis=axis)):
                return True
    return False


# ---------------------------------------------------------------------------
# perimeters


@dataclass(frozen=True)
class PerimeterEstimate:
    value: float
    error: float
    terms: tuple[float, float, float]
    method: str

    def to_json(self) -> dict:
        return {"value": self.value, "error": self.error, "terms": list(self.terms),
                "method": self.method}


def frac_perimeter(E: SetRegion, Omega: SetRegion, kernel,
                   budget: Budget | None = None) -> PerimeterEstimate:
    """Fractional perimeter of ``E`` in ``Omega``.

    Sum of ``I(E in Omega, E^c in Omega)``, ``I(E outside Omega, E^c in
    Omega)`` and ``I(E in Omega, E^c outside Omega)``. All three share the
    sampled lines, so their sum and each term are estimated together.
    """
    alpha = _check_kernel(kernel, E.dim)
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"fractional perimeter needs alpha in (0, 1), got {alpha}")
    Ec = E.complement()
    Oc = Omega.complement()
    pieces = [(E & Omega, Ec & Omega), (E & Oc, Ec & Omega), (E & Omega, Ec & Oc)]
    if E.dim == 1:
        z, o = np.zeros(1), np.ones(1)
        terms = tuple(interaction_1d(a.line_intervals(z, o), b.line_intervals(z, o), alpha)
                      for a, b in pieces)
        return PerimeterEstimate(float(sum(terms)), 0.0, terms, "exact")
    budget = budget or Budget(method="quadrature")
    center, radius = _window(Omega, E, Ec)
    ests = []
    for a, b in pieces:
        def value(p, th, a=a, b=b):
            return interaction_1d(a.line_intervals(p, th), b.line_intervals(p, th), alpha)
        ests.append(_line_integral(value, E.dim, center, radius, budget))
    terms = tuple(e.value for e in ests)
    err = float(math.sqrt(sum(e.error**2 for e in ests))) if ests[0].method == "montecarlo" \
        else float(sum(e.error for e in ests))
    return PerimeterEstimate(float(sum(terms)), err, terms, ests[0].method)


def classical_perimeter(E: SetRegion, Omega: SetRegion | None = None) -> float:
    """Length (2D) or point count (1D) of the boundary of ``E`` inside ``Omega``.

    Exact for halfspaces, balls, boxes and intervals (and complements);
    grid indicators use marching squares on the indicator smoothed by one
    cell, which removes the staircase bias of the raw mask.
    """
    Omega = Omega or SetRegion.whole(E.dim)
    base = E.parts[0] if E.kind == "complement" else E
    if E.dim == 1:
        pts = []
        for a, b in base.line_intervals(np.zeros(1), np.ones(1)):
            pts.extend(v for v in (a, b) if math.isfinite(v))
        return float(sum(bool(Omega.contains(np.array([v]))) for v in sorted(set(pts))))
    if E.dim != 2:
        raise DomainError("classical perimeter is implemented in 1D and 2D")
    if base.kind == "grid":
        return _marching_squares_length(base, Omega)
    if Omega.kind not in ("whole", "box"):
        raise DomainError("analytic perimeters need a box or the whole plane as window")
    if base.kind == "ball":
        return _circle_length_in(base, Omega)
    if base.kind == "halfspace":
        nu, c = base.params
        if Omega.kind == "whole":
            return math.inf
        p = np.asarray(nu) * c
        th = np.array([-nu[1], nu[0]])
        return total_length(Omega.line_intervals(p, th))
    if base.kind == "box":
        lo, hi = base.params
        corners = [(lo[0], lo[1]), (hi[0], lo[1]), (hi[0], hi[1]), (lo[0], hi[1])]
        total = 0.0
        for (x0, y0), (x1, y1) in zip(corners, corners[1:] + corners[:1]):
            p = np.array([x0, y0])
            d = np.array([x1 - x0, y1 - y0])
            L = float(np.linalg.norm(d))
            chord = intersect(Omega.line_intervals(p, d / L), [(0.0, L)])
            total += total_length(chord)
        return total
    raise DomainError(f"no analytic perimeter for {base.kind}")


def _circle_length_in(ball: SetRegion, Omega: SetRegion) -> float:
    c, r = ball.params
    if Omega.kind == "whole":
        return 2 * math.pi * r
    lo, hi = Omega.params
    cuts = {0.0, 2 * math.pi}
    for axis in range(2):
        for bound in (lo[axis], hi[axis]):
            s = (bound - c[axis]) / r
            if abs(s) <= 1:
                base = math.acos(s) if axis == 0 else math.asin(s)
                for ang in ((base, -base) if axis == 0 else (base, math.pi - base)):
                    cuts.add(ang % (2 * math.pi))
    cuts = sorted(cuts)
    total = 0.0
    for a0, a1 in zip(cuts[:-1], cuts[1:]):
        mid = 0.5 * (a0 + a1)
        pt = np.array([c[0] + r * math.cos(mid), c[1] + r * math.sin(mid)])
        if Omega.contains(pt[None, :])[0]:
            total += r * (a1 - a0)
    return total


def _marching_squares_length(E: SetRegion, Omega: SetRegion) -> float:
    g = E.grid
    hx, hy = g.spacings
    field_ = gaussian_filter(E.mask.astype(float), sigma=1.0, mode="nearest")
    v = field_ - 0.5
    x, y = g.axes()
    total = 0.0
    n1, n2 = v.shape
    for i in range(n1 - 1):
        for j in range(n2 - 1):
            c = (v[i, j], v[i + 1, j], v[i + 1, j + 1], v[i, j + 1])
            signs = [s > 0 for s in c]
            if all(signs) or not any(signs):
                continue
            pts = []
            corners = ((x[i], y[j]), (x[i + 1], y[j]), (x[i + 1], y[j + 1]), (x[i], y[j + 1]))
            for k in range(4):
                a, b = c[k], c[(k + 1) % 4]
                if (a > 0) != (b > 0):
                    t = a / (a - b)
                    pa, pb = corners[k], corners[(k + 1) % 4]
                    pts.append((pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])))
            if len(pts) == 2:
                segs = [(pts[0], pts[1])]
            else:
                # Saddle: resolve by the cell average.
                if (np.mean(c) > 0) == (c[0] > 0):
                    segs = [(pts[0], pts[1]), (pts[2], pts[3])]
                else:
                    segs = [(pts[3], pts[0]), (pts[1], pts[2])]
            for (x0, y0), (x1, y1) in segs:
                mid = np.array([[0.5 * (x0 + x1), 0.5 * (y0 + y1)]])
                if Omega.contains(mid)[0]:
                    total += math.hypot(x1 - x0, y1 - y0)
    return total


# ---------------------------------------------------------------------------
# nonlocal mean curvature


def _paired_line_curvature(E: SetRegion, x: np.ndarray, th: np.ndarray, alpha: float,
                           cutoff: float = math.inf) -> float:
    """Both rays of the line through ``x``: integral over ``0 < t < cutoff`` of
    ``(sigma(t) + sigma(-t)) t^{-1-alpha}`` with ``sigma = 1 - 2 chi_E``.

    For a transversal line through a boundary point the bracket vanishes
    near ``t = 0``, so every piece is integrated in closed form.
    """
    # x lies on the boundary, so a crossing within rounding of t = 0 is at 0
    snap = 1e-12 * max(1.0, float(np.max(np.abs(x))))
    ivs = [tuple(0.0 if abs(v) < snap else v for v in iv) for iv in E.line_intervals(x, th)]
    ivs = [(a, b) for a, b in ivs if b > a]
    mirrored = normalize((-b, -a) for a, b in ivs)
    breaks = {0.0, cutoff}
    breaks |= {abs(v) for a, b in ivs for v in (a, b) if math.isfinite(v) and abs(v) < cutoff}
    breaks = sorted(breaks)
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        mid = lo + 1.0 if math.isinf(hi) else 0.5 * (lo + hi)
        m = sum(1 for a, b in ivs if a < mid < b) + sum(1 for a, b in mirrored if a < mid < b)
        coeff = 2.0 - 2.0 * m
        if coeff == 0.0:
            continue
        if lo == 0.0:
            return math.copysign(math.inf, coeff)
        upper = 0.0 if math.isinf(hi) else hi ** (-alpha)
        total += coeff * (lo ** (-alpha) - upper) / alpha
    return total


def nonlocal_mean_curvature(E: SetRegion, x: Sequence[float], kernel,
                            cutoff: float | None = None, tol: float = 1e-9) -> float:
    """Principal value of ``integral (chi_{E^c} - chi_E)(y) |x - y|^{-n-alpha} dy``.

    ``x`` should lie on the boundary of ``E``. Directions ``theta`` and
    ``-theta`` are paired so the integrand cancels near ``x``; each line is
    integrated exactly and the angular integral is adaptive, split at the
    tangent direction when the normal is known. ``cutoff`` restricts the
    integral to the ball of that radius about ``x``. Raises
    :class:`NumericError` when the angular quadrature does not settle.
    """
    alpha = _check_kernel(kernel, E.dim)
    if not 0.0 < alpha < 1.0:
        raise DomainError("nonlocal mean curvature needs alpha in (0, 1)")
    R = math.inf if cutoff is None else float(cutoff)
    if not R > 0:
        raise DomainError("cutoff must be positive")
    x = np.asarray(x, dtype=float)
    if E.dim == 1:
        return _paired_line_curvature(E, x, np.ones(1), alpha, R)
    if E.dim != 2:
        raise DomainError("nonlocal mean curvature is implemented in 1D and 2D")
    normal = E.normal_at(x)
    # Angles are measured from the tangent, so the singular direction is an endpoint.
    phi0 = 0.0 if normal is None else math.atan2(normal[1], normal[0]) + 0.5 * math.pi

    def integrand(phi: float) -> float:
        th = np.array([math.cos(phi0 + phi), math.sin(phi0 + phi)])
        return _paired_line_curvature(E, x, th, alpha, R)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(integrand, 0.0, math.pi, points=[0.5 * math.pi],
                        epsabs=tol, epsrel=tol, limit=500)
    if not math.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
        raise NumericError(f"nonlocal mean curvature did not converge (error {err:.3g})")
    return float(val)


def lawson_cone_profile(m: int, n: int, delta: float) -> SetRegion:
    """The cone region ``{|z| <= delta |y|}`` in ``R^m x R^(n-m)``."""
    return SetRegion.lawson(m, n, delta)


# ---------------------------------------------------------------------------
# interaction lower bound


@dataclass(frozen=True)
class LowerBoundReport:
    alpha: float
    gaps: tuple[float, ...]
    interactions: tuple[float, ...]
    regressor: str
    slope: float
    intercept: float
    r2: float
    positive: bool

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "gaps": list(self.gaps),
                "interactions": list(self.interactions), "regressor": self.regressor,
                "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "positive": self.positive}


def separated_thirds(gap: float, dim: int = 1) -> tuple[SetRegion, SetRegion]:
    """The two outer parts of the unit cube left by a central slab of measure ``gap``."""
    if not 0 < gap < 1:
        raise DomainError("gap must lie in (0, 1)")
    a = 0.5 * (1.0 - gap)
    if dim == 1:
        return SetRegion.interval(0.0, a), SetRegion.interval(a + gap, 1.0)
    lo, hi = [0.0] * dim, [1.0] * dim
    A = SetRegion.box(lo, [a] + hi[1:])
    D = SetRegion.box([a + gap] + lo[1:], hi)
    return A, D


def _slab_kernel_2d(s: float, alpha: float) -> float:
    """``integral over a unit transverse square of the planar kernel``:
    ``integral_{-1}^{1} (1 - |v|) (s^2 + v^2)^{-1-alpha/2} dv``."""
    val, _ = quad(lambda v: 2 * (1 - v) * (s * s + v * v) ** (-1 - alpha / 2), 0.0, 1.0,
                  epsabs=1e-13, epsrel=1e-11, limit=200)
    return val


def gap_interaction(gap: float, alpha: float, dim: int = 1) -> float:
    """``I(A, D)`` for the pair from :func:`separated_thirds`."""
    A, D = separated_thirds(gap, dim)
    if dim == 1:
        return interaction_1d(list(A.params), list(D.params), alpha)
    if dim != 2:
        raise DomainError("gap interaction is implemented in 1D and 2D")
    a = 0.5 * (1.0 - gap)

    def length(s):
        # measure of x in (0, a) with x + s in (a + gap, 1)
        return max(0.0, min(a, 1.0 - s) - max(0.0, a + gap - s))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda s: length(s) * _slab_kernel_2d(s, alpha), gap, 1.0,
                      points=[a + gap, 1.0 - a], epsabs=1e-12, epsrel=1e-10, limit=400)
    return val


def interaction_lower_bound_probe(gaps: Sequence[float], alpha: float,
                                  dim: int = 1) -> LowerBoundReport:
    """Fit ``I(A, D)`` against ``|log g|`` (alpha = 1) or ``g^(1-alpha)``.

    A positive slope with a good fit is the numerical face of the lower
    bound: the interaction blows up as the separating slab thins.
    """
    alpha = kern.check_alpha(alpha)
    if alpha < 1.0:
        raise DomainError("the lower bound probe needs alpha in [1, 2)")
    gaps = tuple(float(g) for g in gaps)
    if len(gaps) < 3:
        raise DomainError("need at least three gap values for a fit")
    if any(not 0 < g < 1 for g in gaps) or any(b >= a for a, b in zip(gaps, gaps[1:])):
        raise DomainError("gaps must be decreasing values in (0, 1)")
    values = tuple(gap_interaction(g, alpha, dim) for g in gaps)
    garr = np.asarray(gaps)
    if alpha == 1.0:
        xreg = np.abs(np.log(garr))
        label = "|log g|"
    else:
        xreg = garr ** (1.0 - alpha)
        label = f"g^{1.0 - alpha:g}"
    y = np.asarray(values)
    slope, intercept = np.polyfit(xreg, y, 1)
    resid = y - (slope * xreg + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    if ss == 0.0:
        raise NumericError("degenerate fit: interactions do not vary with the gap")
    r2 = 1.0 - float(np.sum(resid**2)) / ss
    return LowerBoundReport(alpha, gaps, values, label, float(slope), float(intercept),
                            float(r2), bool(slope > 0))


__all__ = [
    "SetRegion", "Budget", "Estimate", "PerimeterEstimate", "LowerBoundReport",
    "normalize", "complement", "intersect", "interaction_1d", "interaction_alpha",
    "frac_perimeter", "classical_perimeter", "nonlocal_mean_curvature",
    "lawson_cone_profile", "separated_thirds", "gap_interaction",
    "interaction_lower_bound_probe",
]
