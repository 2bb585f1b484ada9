"""Interface diagnostics for phase fields on grids.

Every measure is a cell count: a grid cell belongs to a set when its
node (the cell centre) does. Inputs are any field-like object exposing
``grid``, ``values`` and ``eps`` (both :class:`~phaselab.localfield.Field`
and :class:`~phaselab.nonlocalfield.NonlocalField` qualify).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.ndimage import distance_transform_edt

from .errors import DomainError
from .geometry import SetRegion
from .localfield import Field, Grid, MinimizeOptions, minimize_local
from .potential import quartic_well

TRAP_THETA_MIN = math.sqrt(3.0) / 3.0
DIRECTION_STEP_DEG = 1.0
DEFAULT_KAPPAS = (1 / 2, 3 / 8, 1 / 4, 3 / 16, 1 / 8, 1 / 16, 1 / 32)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def layer_band_width(theta: float) -> float:
    """Width of ``{|tanh(s / sqrt 2)| < theta}`` in units of ``eps``."""
    return 2.0 * math.sqrt(2.0) * math.atanh(theta)


def _check_theta(theta: float, name: str = "theta") -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {theta}")
    return theta


def _center(f, center) -> np.ndarray:
    c = np.zeros(f.grid.dim) if center is None else np.asarray(center, dtype=float)
    if c.shape != (f.grid.dim,):
        raise DomainError("center has the wrong dimension")
    return c


def _distances(f, center: np.ndarray) -> np.ndarray:
    pts = f.grid.points().reshape(*f.grid.shape, f.grid.dim)
    return np.linalg.norm(pts - center, axis=-1)


def _check_radii(f, center: np.ndarray, radii: Sequence[float]) -> tuple[float, ...]:
    radii = tuple(float(r) for r in radii)
    if not radii or any(not r > 0 for r in radii):
        raise DomainError("radii must be positive")
    for r in radii:
        if not f.grid.contains_ball(center, r):
            raise DomainError(f"ball of radius {r} about {center.tolist()} leaves the grid")
    return radii


def _value_at_center(f, center: np.ndarray) -> float:
    d = _distances(f, center)
    return float(f.values.flat[int(np.argmin(d))])


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# density ratios


@dataclass(frozen=True)
class LevelSetStats:
    """Cell-counted phase measures in concentric balls.

    ``above`` counts ``{u > theta2}``, ``below`` counts ``{u < -theta2}``
    and ``band`` the rest, so the three partition the counted ball.
    ``theta1`` records which density estimate applies at the centre.
    """

    theta1: float
    theta2: float
    center: tuple[float, ...]
    center_value: float
    radii: tuple[float, ...]
    volumes_above: tuple[float, ...]
    volumes_below: tuple[float, ...]
    volumes_band: tuple[float, ...]
    volumes_ball: tuple[float, ...]
    dim: int

    def _normalised(self, vols) -> tuple[float, ...]:
        return tuple(v / r**self.dim for v, r in zip(vols, self.radii))

    @property
    def ratios_above(self) -> tuple[float, ...]:
        return self._normalised(self.volumes_above)

    @property
    def ratios_below(self) -> tuple[float, ...]:
        return self._normalised(self.volumes_below)

    @property
    def min_above(self) -> float:
        return min(self.ratios_above)

    @property
    def min_below(self) -> float:
        return min(self.ratios_below)

    @property
    def min_ratio(self) -> float:
        return min(self.min_above, self.min_below)

    @property
    def above_applies(self) -> bool:
        return self.center_value > self.theta1

    @property
    def below_applies(self) -> bool:
        return self.center_value < -self.theta1

    def to_json(self) -> dict:
        return {
            "theta1": self.theta1, "theta2": self.theta2, "center": list(self.center),
            "center_value": self.center_value, "radii": list(self.radii),
            "volumes_above": list(self.volumes_above), "volumes_below": list(self.volumes_below),
            "volumes_band": list(self.volumes_band), "volumes_ball": list(self.volumes_ball),
            "ratios_above": list(self.ratios_above), "ratios_below": list(self.ratios_below),
            "min_ratio": self.min_ratio,
        }

    def to_csv(self) -> str:
        rows = [[r, a, b, c, t, ra, rb] for r, a, b, c, t, ra, rb in zip(
            self.radii, self.volumes_above, self.volumes_below, self.volumes_band,
            self.volumes_ball, self.ratios_above, self.ratios_below)]
        return _csv(["r", "above", "below", "band", "ball", "ratio_above", "ratio_below"], rows)


def density_ratios(f, theta1: float, theta2: float, radii: Sequence[float],
                   center: Sequence[float] | None = None) -> LevelSetStats:
    """Phase measures ``|{u > theta2} cap B_r|`` and ``|{u < -theta2} cap B_r|``."""
    if not -1.0 < theta1 < 1.0:
        raise DomainError("theta1 must lie in (-1, 1)")
    if not -1.0 < theta2 < 1.0:
        raise DomainError("theta2 must lie in (-1, 1)")
    c = _center(f, center)
    radii = _check_radii(f, c, radii)
    d = _distances(f, c)
    u = np.asarray(f.values)
    vol = f.grid.cell_volume
    above, below, band, ball = [], [], [], []
    hi_mask, lo_mask = u > theta2, u < -theta2
    for r in radii:
        inside = d < r
        a = int(np.count_nonzero(inside & hi_mask))
        b = int(np.count_nonzero(inside & lo_mask))
        t = int(np.count_nonzero(inside))
        above.append(a * vol)
        below.append(b * vol)
        band.append((t - a - b) * vol)
        ball.append(t * vol)
    return LevelSetStats(float(theta1), float(theta2), tuple(c.tolist()),
                         _value_at_center(f, c), radii, tuple(above), tuple(below),
                         tuple(band), tuple(ball), f.grid.dim)


# ---------------------------------------------------------------------------
# band measure


@dataclass(frozen=True)
class BandReport:
    """Per-radius band measures with fitted and reference constants.

    ``ratios`` are ``measure / (eps r^(n-1))``. The reference is the 1D
    layer width ``2 sqrt 2 artanh(theta)`` times the measure of a central
    hyperplane section of the unit ball, i.e. a flat interface.
    """

    theta: float
    eps: float
    radii: tuple[float, ...]
    measures: tuple[float, ...]
    ratios: tuple[float, ...]
    reference: float
    fitted_low: float
    fitted_high: float
    dim: int

    @property
    def lower_bounds(self) -> tuple[float, ...]:
        n = self.dim
        return tuple(self.fitted_low * self.eps * r ** (n - 1) for r in self.radii)

    @property
    def upper_bounds(self) -> tuple[float, ...]:
        n = self.dim
        return tuple(self.fitted_high * self.eps * r ** (n - 1) for r in self.radii)

    @property
    def within_reference(self) -> tuple[bool, ...]:
        """Ratio inside ``[reference / 2, 2 reference]``."""
        return tuple(0.5 * self.reference <= q <= 2.0 * self.reference for q in self.ratios)

    @property
    def violations(self) -> tuple[bool, ...]:
        """Ratio outside ``[fitted_low / 2, 2 fitted_high]``."""
        return tuple(not (0.5 * self.fitted_low <= q <= 2.0 * self.fitted_high)
                     for q in self.ratios)

    def to_json(self) -> dict:
        return {"theta": self.theta, "eps": self.eps, "radii": list(self.radii),
                "measures": list(self.measures), "ratios": list(self.ratios),
                "reference": self.reference, "fitted_low": self.fitted_low,
                "fitted_high": self.fitted_high, "lower_bounds": list(self.lower_bounds),
                "upper_bounds": list(self.upper_bounds),
                "within_reference": list(self.within_reference)}

    def to_csv(self) -> str:
        rows = [[r, m, q, lo, hi, str(ok)] for r, m, q, lo, hi, ok in zip(
            self.radii, self.measures, self.ratios, self.lower_bounds, self.upper_bounds,
            self.within_reference)]
        return _csv(["r", "measure", "ratio", "lower", "upper", "within_reference"], rows)


def band_measure(f, theta: float, radii: Sequence[float],
                 center: Sequence[float] | None = None) -> BandReport:
    """``|{|u| < theta} cap B_r|`` per radius; the centre must be on the interface."""
    theta = _check_theta(theta)
    c = _center(f, center)
    radii = _check_radii(f, c, radii)
    if not abs(_value_at_center(f, c)) < theta:
        raise DomainError("center is not on the interface: |u(center)| >= theta")
    n = f.grid.dim
    d = _distances(f, c)
    band = np.abs(np.asarray(f.values)) < theta
    vol = f.grid.cell_volume
    measures = tuple(float(np.count_nonzero(band & (d < r)) * vol) for r in radii)
    ratios = tuple(m / (f.eps * r ** (n - 1)) for m, r in zip(measures, radii))
    section = unit_ball_volume(n - 1) if n > 1 else 1.0
    return BandReport(theta, float(f.eps), radii, measures, ratios,
                      layer_band_width(theta) * section, min(ratios), max(ratios), n)


# ---------------------------------------------------------------------------
# clean balls


@dataclass(frozen=True)
class CleanBallResult:
    kappa_found: float
    q_minus: tuple[float, ...] | None
    q_plus: tuple[float, ...] | None
    center_on_interface: bool

    @property
    def success(self) -> bool:
        return self.kappa_found > 0

    def to_json(self) -> dict:
        return {"kappa_found": self.kappa_found,
                "q_minus": None if self.q_minus is None else list(self.q_minus),
                "q_plus": None if self.q_plus is None else list(self.q_plus),
                "center_on_interface": self.center_on_interface}


def clean_ball_search(f, theta: float, r: float, center: Sequence[float] | None = None,
                      kappa_grid: Sequence[float] = DEFAULT_KAPPAS) -> CleanBallResult:
    """Largest ``kappa`` with pure-phase balls ``B_{kappa r}(q_-)``, ``B_{kappa r}(q_+)``
    inside ``B_r(center)``; ``kappa_found = 0`` reports failure.

    A ball is pure when every cell centre within it satisfies ``u < -theta``
    (resp. ``u > theta``). Witnesses maximise the clearance to the phase
    boundary and to the sphere of radius ``r`` (middle of the best plateau).
    """
    theta = _check_theta(theta)
    c = _center(f, center)
    (r,) = _check_radii(f, c, [r])
    u = np.asarray(f.values)
    h = f.grid.spacings
    d = _distances(f, c)
    pts = f.grid.points().reshape(*f.grid.shape, f.grid.dim)
    room = r - d
    clear = {}
    for sign, mask in ((-1, u < -theta), (1, u > theta)):
        # distance from each node to the nearest node outside the phase
        clear[sign] = np.where(mask, distance_transform_edt(mask, sampling=h), 0.0)
    on_interface = abs(_value_at_center(f, c)) < theta
    for kappa in sorted({float(k) for k in kappa_grid}, reverse=True):
        if not 0 < kappa < 1:
            raise DomainError("kappa values must lie in (0, 1)")
        rho = kappa * r
        found = {}
        for sign in (-1, 1):
            ok = (clear[sign] > rho) & (room >= rho)
            if not np.any(ok):
                break
            margin = np.where(ok, np.minimum(clear[sign], room), -np.inf)
            # The best margins form a plateau a cell wide; take its middle.
            best = margin >= margin.max() - max(h)
            mid = pts[best].mean(axis=0)
            near = np.where(best, np.linalg.norm(pts - mid, axis=-1), np.inf)
            idx = np.unravel_index(int(np.argmin(near)), near.shape)
            found[sign] = tuple(float(v) for v in pts[idx])
        if len(found) == 2:
            return CleanBallResult(kappa, found[-1], found[1], on_interface)
    return CleanBallResult(0.0, None, None, on_interface)


# ---------------------------------------------------------------------------
# trapping


@dataclass(frozen=True)
class TrapRow:
    r: float
    omega: tuple[float, ...]
    gamma: float
    a: float


@dataclass(frozen=True)
class TrapReport:
    theta: float
    rows: tuple[TrapRow, ...]

    @property
    def flatness(self) -> tuple[float, ...]:
        return tuple(row.a for row in self.rows)

    def to_json(self) -> dict:
        return {"theta": self.theta,
                "rows": [{"r": x.r, "omega": list(x.omega), "gamma": x.gamma, "a": x.a}
                         for x in self.rows]}

    def to_csv(self) -> str:
        rows = [[x.r, *x.omega, x.gamma, x.a] for x in self.rows]
        dims = len(self.rows[0].omega) if self.rows else 0
        return _csv(["r"] + [f"omega_{i}" for i in range(dims)] + ["gamma", "a"], rows)


def _directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        ang = np.deg2rad(np.arange(0.0, 360.0, DIRECTION_STEP_DEG))
        return np.column_stack([np.cos(ang), np.sin(ang)])
    raise DomainError("trapping diagnostics are implemented in 1D and 2D")


def trapped_flatness(f, theta: float, radii: Sequence[float],
                     center: Sequence[float] | None = None) -> TrapReport:
    """Smallest ``gamma`` per radius for which the interface is trapped.

    Trapped in direction ``omega`` means ``{omega.x <= -gamma}`` lies in
    ``{u <= -theta}`` and ``{u <= theta}`` lies in ``{omega.x <= gamma}``,
    both inside ``B_r``. On cell centres the least such ``gamma`` is the
    larger of ``max(-omega.x)`` over ``{u > -theta}`` and ``max(omega.x)``
    over ``{u <= theta}``. Values within one cell diameter of ``r`` are
    reported as ``r`` (trivially trapped).
    """
    theta = float(theta)
    if not TRAP_THETA_MIN < theta < 1.0:
        raise DomainError(f"theta must lie in (sqrt(3)/3, 1), got {theta}")
    c = _center(f, center)
    radii = _check_radii(f, c, radii)
    u = np.asarray(f.values).ravel()
    x = f.grid.points().reshape(-1, f.grid.dim) - c
    d = np.linalg.norm(x, axis=1)
    dirs = _directions(f.grid.dim)
    slack = math.sqrt(sum(s * s for s in f.grid.spacings))
    proj = x @ dirs.T
    rows = []
    for r in radii:
        inside = d < r
        not_minus = inside & (u > -theta)
        not_plus = inside & (u <= theta)
        g1 = np.max(np.where(not_minus[:, None], -proj, -np.inf), axis=0)
        g2 = np.max(np.where(not_plus[:, None], proj, -np.inf), axis=0)
        gamma = np.clip(np.maximum(g1, g2), 0.0, r)
        k = int(np.argmin(gamma))
        g = float(gamma[k])
        if g >= r - slack:
            g = r
        rows.append(TrapRow(r, tuple(float(v) for v in dirs[k]), g, g / r))
    return TrapReport(theta, tuple(rows))


# ---------------------------------------------------------------------------
# uniform convergence of the band


@dataclass(frozen=True)
class ConvergenceReport:
    eps: tuple[float, ...]
    passes: tuple[bool, ...]
    worst_distance: tuple[float, ...]
    first_pass_eps: float | None
    persistent: bool

    def to_json(self) -> dict:
        return {"eps": list(self.eps), "passes": list(self.passes),
                "worst_distance": list(self.worst_distance),
                "first_pass_eps": self.first_pass_eps, "persistent": self.persistent}

    def to_csv(self) -> str:
        return _csv(["eps", "passes", "worst_distance"],
                    [[e, str(p), w] for e, p, w in zip(self.eps, self.passes,
                                                        self.worst_distance)])


def _boundary_distance(grid, E: SetRegion) -> np.ndarray:
    """Distance from each node to the nearest boundary point of ``E``.

    ``E`` is sampled on the nodes; the boundary is the set of midpoints of
    grid edges whose two ends disagree, so the result is exact up to half
    a cell for any set.
    """
    pts = grid.points()
    inside = np.asarray(E.contains(pts.reshape(-1, grid.dim))).reshape(grid.shape)
    edge = np.zeros(grid.shape, dtype=bool)
    for axis in range(grid.dim):
        diff = np.diff(inside.astype(np.int8), axis=axis) != 0
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(0, -1)
        hi[axis] = slice(1, None)
        edge[tuple(lo)] |= diff
        edge[tuple(hi)] |= diff
    if not edge.any():
        return np.full(grid.shape, np.inf)
    dist = distance_transform_edt(~edge, sampling=grid.spacings)
    return np.maximum(dist - 0.5 * max(grid.spacings), 0.0)


def uniform_convergence_check(fields: Sequence, E: SetRegion, theta: float, r0: float,
                              delta: float,
                              center: Sequence[float] | None = None) -> ConvergenceReport:
    """Whether ``{|u_eps| < theta} cap B_r0`` sits within ``delta`` of ``boundary E``.

    Fields are ordered by decreasing ``eps``. ``first_pass_eps`` is the
    first ``eps`` that passes, and ``persistent`` says whether every
    smaller ``eps`` passes as well.
    """
    theta = _check_theta(theta)
    if not delta > 0 or not r0 > 0:
        raise DomainError("delta and r0 must be positive")
    if not fields:
        raise DomainError("need at least one field")
    fields = sorted(fields, key=lambda f: -f.eps)
    extent = fields[0].grid
    for f in fields:
        if not (np.allclose(f.grid.lo, extent.lo) and np.allclose(f.grid.hi, extent.hi)):
            raise DomainError("fields must share the grid extent")
        if E.dim != f.grid.dim:
            raise DomainError("limit set dimension differs from the fields")
    passes, worst = [], []
    for f in fields:
        c = _center(f, center)
        dist = _boundary_distance(f.grid, E)
        band = (np.abs(np.asarray(f.values)) < theta) & (_distances(f, c) < r0)
        w = float(dist[band].max()) if band.any() else 0.0
        worst.append(w)
        passes.append(w < delta)
    first = next((i for i, p in enumerate(passes) if p), None)
    first_eps = None if first is None else float(fields[first].eps)
    persistent = first is not None and all(passes[first:])
    return ConvergenceReport(tuple(float(f.eps) for f in fields), tuple(passes), tuple(worst),
                             first_eps, persistent)


# ---------------------------------------------------------------------------
# test fields


def planar_minimizer(eps: float, half_width: float, h: float, angle: float = 0.4,
                     wiggle: float = 0.03, tol: float = 1e-6):
    """Local minimizer on ``[-half_width, half_width]^2`` with planar data.

    The boundary carries the layer ``tanh(s / (sqrt2 eps))`` across the
    line ``s = x cos(angle) + y sin(angle) = 0``; the interior starts from
    a wiggled sign step so the descent has work to do. Uses the quartic
    well.
    """
    if not (eps > 0 and half_width > 0 and 0 < h < half_width):
        raise DomainError("need eps > 0 and 0 < h < half_width")
    count = 2 * int(round(half_width / h)) + 1
    g = Grid((-half_width, -half_width), (half_width, half_width), (count, count))
    X, Y = g.mesh()
    s = X * math.cos(angle) + Y * math.sin(angle)
    data = np.tanh(s / (math.sqrt(2.0) * eps))
    start = np.where(g.boundary_mask(), data, np.sign(s + wiggle * np.sin(9 * Y)))
    return minimize_local(Field(g, start, eps), quartic_well(), MinimizeOptions(tol=tol))


__all__ = [
    "planar_minimizer", "LevelSetStats", "BandReport", "CleanBallResult", "TrapRow", "TrapReport",
    "ConvergenceReport", "density_ratios", "band_measure", "clean_ball_search",
    "trapped_flatness", "uniform_convergence_check", "layer_band_width", "unit_ball_volume",
]
