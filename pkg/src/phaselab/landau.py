"""Polynomial Landau free energies in a scalar order parameter.

The free energy is ``a0 + a2(T) eta^2 + a3(T) eta^3 + a4(T) eta^4``.
Three model parameter sets ship as constructors: the symmetric
second-order model, the first-order model with a cubic term, and its
degenerate variant whose free energy has a continuous derivative.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError

Coefficient = Callable[[float], float]

TIE_TOL = 1e-9
DERIVATIVE_STEP = 1e-5
JUMP_OFFSET = 1e-4
JUMP_TIE_TOL = 1e-14
JUMP_THRESHOLD = 1e-1
GAP_THRESHOLD = 1e-4


class Transition(str, enum.Enum):
    SECOND_ORDER = "SecondOrder"
    FIRST_ORDER = "FirstOrder"
    DEGENERATE_FIRST_ORDER = "DegenerateFirstOrder"


@dataclass(frozen=True)
class LandauModel:
    """Temperature-dependent quartic free energy.

    ``declares_a0`` records whether the constant offset belongs to the
    model (the first-order family drops it).
    """

    name: str
    a0: float
    a2: Coefficient
    a3: Coefficient
    a4: Coefficient
    Tc: float
    symmetric: bool = False
    declares_a0: bool = True

    def coefficients(self, T: float) -> tuple[float, float, float, float]:
        a0 = float(self.a0) if self.declares_a0 else 0.0
        c = (a0, float(self.a2(T)), float(self.a3(T)), float(self.a4(T)))
        if not all(math.isfinite(v) for v in c):
            raise DomainError(f"non-finite coefficient at T={T!r}: {c}")
        if c[3] <= 0.0:
            raise DomainError(f"a4(T) must be positive, got {c[3]} at T={T!r}")
        return c

    def validate(self, temperatures: Sequence[float]) -> None:
        """Check coefficient invariants at the given temperatures."""
        for T in temperatures:
            _, a2, a3, _ = self.coefficients(T)
            if self.symmetric and a3 != 0.0:
                raise DomainError(f"{self.name}: symmetric model needs a3 = 0")
            if not self.symmetric and a2 <= 0.0:
                raise DomainError(f"{self.name}: first-order model needs a2 > 0")


def avpa() -> LandauModel:
    """Symmetric model: a2 = (T - 2)/2, a4 = 1/4, offset 1/4."""
    return LandauModel(
        name="avpa",
        a0=0.25,
        a2=lambda T: 0.5 * (T - 2.0),
        a3=lambda T: 0.0,
        a4=lambda T: 0.25,
        Tc=2.0,
        symmetric=True,
    )


def _a3_first_order(T: float) -> float:
    # T - 4 where prescribed; a C1 increasing continuation below 2 past T = 5.
    if T <= 5.0:
        return T - 4.0
    return 2.0 - math.exp(5.0 - T)


def _a3_degenerate(T: float) -> float:
    # (T - 2)^3 - 2 where prescribed; C1 continuation into (-1, 2) past T = 3.
    if T <= 3.0:
        return (T - 2.0) ** 3 - 2.0
    return 2.0 - 3.0 * math.exp(3.0 - T)


def bsntt6() -> LandauModel:
    """First-order model with a2 = a4 = 1 and a3 = T - 4."""
    return LandauModel(
        name="bsntt6",
        a0=0.0,
        a2=lambda T: 1.0,
        a3=_a3_first_order,
        a4=lambda T: 1.0,
        Tc=2.0,
        declares_a0=False,
    )


def bsntt6_dege() -> LandauModel:
    """Degenerate first-order model with a3 = (T - 2)^3 - 2."""
    return LandauModel(
        name="bsntt6-dege",
        a0=0.0,
        a2=lambda T: 1.0,
        a3=_a3_degenerate,
        a4=lambda T: 1.0,
        Tc=2.0,
        declares_a0=False,
    )


MODELS: dict[str, Callable[[], LandauModel]] = {
    "avpa": avpa,
    "bsntt6": bsntt6,
    "bsntt6-dege": bsntt6_dege,
}


def get_model(name: str) -> LandauModel:
    try:
        return MODELS[name.lower()]()
    except KeyError:
        raise DomainError(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None


def free_energy(model: LandauModel, T: float, eta) -> np.ndarray | float:
    a0, a2, a3, a4 = model.coefficients(T)
    eta = np.asarray(eta, dtype=float)
    e2 = eta * eta
    value = a0 + e2 * (a2 + eta * (a3 + a4 * eta))
    return float(value) if value.ndim == 0 else value


def _energy_slope(a2: float, a3: float, a4: float, eta: float) -> tuple[float, float]:
    g = eta * (2 * a2 + eta * (3 * a3 + 4 * a4 * eta))
    dg = 2 * a2 + eta * (6 * a3 + 12 * a4 * eta)
    return g, dg


def critical_points(model: LandauModel, T: float) -> list[float]:
    """Real roots of the derivative, sorted and deduplicated.

    The derivative factors as ``eta (2 a2 + 3 a3 eta + 4 a4 eta^2)``; the
    quadratic is solved with the cancellation-free form of the formula and
    each nonzero root gets one Newton polish on the full cubic.
    """
    _, a2, a3, a4 = model.coefficients(T)
    A, B, C = 4.0 * a4, 3.0 * a3, 2.0 * a2
    roots = [0.0]
    disc = B * B - 4.0 * A * C
    if disc >= 0.0:
        sq = math.sqrt(disc)
        q = -0.5 * (B + math.copysign(sq, B)) if B != 0.0 else -0.5 * sq
        cands = [q / A] + ([C / q] if q != 0.0 else [-q / A])
        for r in cands:
            g, dg = _energy_slope(a2, a3, a4, r)
            if dg != 0.0 and r != 0.0:
                r = r - g / dg
            roots.append(float(r))
    roots.sort()
    merged: list[float] = []
    for r in roots:
        if merged and abs(r - merged[-1]) <= 1e-12 * max(1.0, abs(r), abs(merged[-1])):
            continue
        merged.append(r)
    return merged


def global_minimizers(model: LandauModel, T: float, tol: float = TIE_TOL) -> list[float]:
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    pts = critical_points(model, T)
    energies = np.array([free_energy(model, T, p) for p in pts])
    if not np.all(np.isfinite(energies)):
        raise DomainError(f"non-finite energy at T={T!r}")
    best = float(energies.min())
    return [p for p, e in zip(pts, energies) if e - best <= tol]


def minimal_energy(model: LandauModel, T: float) -> float:
    """E(T): the free energy at a global minimizer."""
    pts = critical_points(model, T)
    return float(min(free_energy(model, T, p) for p in pts))


def _one_sided(model: LandauModel, T: float, h: float, side: int) -> float:
    # First-order one-sided quotients with one Richardson step cancel the
    # O(h) error: 2 D(h/2) - D(h).
    e0 = minimal_energy(model, T)

    def quotient(step: float) -> float:
        return side * (minimal_energy(model, T + side * step) - e0) / step

    return 2.0 * quotient(0.5 * h) - quotient(h)


def free_energy_of_temperature(
    model: LandauModel, T: float, h: float = DERIVATIVE_STEP
) -> tuple[float, float, float]:
    """Return ``(E(T), E'(T-), E'(T+))``."""
    return (
        minimal_energy(model, T),
        _one_sided(model, T, h, -1),
        _one_sided(model, T, h, +1),
    )


def latent_heat(model: LandauModel) -> float:
    _, left, right = free_energy_of_temperature(model, model.Tc)
    return -model.Tc * (right - left)


@dataclass(frozen=True)
class BifurcationRow:
    T: float
    minimizers: tuple[float, ...]
    energy: float


@dataclass(frozen=True)
class BifurcationTable:
    model: str
    rows: tuple[BifurcationRow, ...]

    def validate(self) -> None:
        Ts = [r.T for r in self.rows]
        if any(b <= a for a, b in zip(Ts, Ts[1:])):
            raise DomainError("rows must be strictly increasing in T")
        for r in self.rows:
            if list(r.minimizers) != sorted(r.minimizers):
                raise DomainError(f"minimizers unsorted at T={r.T}")

    @property
    def width(self) -> int:
        return max((len(r.minimizers) for r in self.rows), default=0)

    def header(self) -> list[str]:
        return ["T"] + [f"minimizer_{k + 1}" for k in range(self.width)] + ["energy"]

    def csv_rows(self) -> list[list[str]]:
        k = self.width
        out = []
        for r in self.rows:
            mins = [repr(float(m)) for m in r.minimizers] + [""] * (k - len(r.minimizers))
            out.append([repr(float(r.T))] + mins + [repr(float(r.energy))])
        return out

    def to_json(self) -> list[dict]:
        return [
            {"T": r.T, "minimizers": list(r.minimizers), "energy": r.energy}
            for r in self.rows
        ]


def temperature_grid(T_min: float, T_max: float, steps: int) -> np.ndarray:
    """Equispaced, inclusive grid; values are rounded to 12 digits so that
    grid points such as the critical temperature are hit exactly."""
    if not T_min < T_max:
        raise DomainError("T_min must be below T_max")
    if steps < 2:
        raise DomainError("steps must be at least 2")
    return np.round(np.linspace(T_min, T_max, steps), 12)


def bifurcation_scan(
    model: LandauModel, T_min: float, T_max: float, steps: int, threads: int = 1
) -> BifurcationTable:
    grid = temperature_grid(T_min, T_max, steps)

    def row(T: float) -> BifurcationRow:
        T = float(T)
        mins = tuple(global_minimizers(model, T))
        return BifurcationRow(T=T, minimizers=mins, energy=minimal_energy(model, T))

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = tuple(pool.map(row, grid))
    else:
        rows = tuple(row(T) for T in grid)
    table = BifurcationTable(model=model.name, rows=rows)
    table.validate()
    return table


def _hausdorff(a: Sequence[float], b: Sequence[float]) -> float:
    A, B = np.asarray(a, float)[:, None], np.asarray(b, float)[None, :]
    d = np.abs(A - B)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def classify_transition(model: LandauModel) -> Transition:
    """Classify by the minimizer jump at Tc and the derivative gap of E."""
    # The degenerate model separates its branches only by |T - Tc|^3 in
    # energy, so the probe offset must keep that gap above rounding.
    below = global_minimizers(model, model.Tc - JUMP_OFFSET, JUMP_TIE_TOL)
    above = global_minimizers(model, model.Tc + JUMP_OFFSET, JUMP_TIE_TOL)
    jumps = _hausdorff(below, above) > JUMP_THRESHOLD
    _, left, right = free_energy_of_temperature(model, model.Tc)
    if not jumps:
        return Transition.SECOND_ORDER
    if abs(left - right) > GAP_THRESHOLD:
        return Transition.FIRST_ORDER
    return Transition.DEGENERATE_FIRST_ORDER


def energy_curves(model: LandauModel, temperatures: Sequence[float], eta: np.ndarray) -> np.ndarray:
    """Free energy curves, one row per temperature."""
    return np.vstack([free_energy(model, float(T), eta) for T in temperatures])
