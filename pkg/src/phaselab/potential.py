"""Double-well potentials and the interfacial surface-tension constant."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial
from scipy.integrate import quad

from .errors import DomainError, NumericError

ScalarFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DoubleWell:
    """A potential W with its first two derivatives.

    All three callables must accept numpy arrays and act elementwise.
    """

    W: ScalarFn
    dW: ScalarFn
    d2W: ScalarFn
    label: str = "custom"

    def validate(self, samples: int = 10_000) -> "WellReport":
        return validate_double_well(self, samples)

    def scaled(self, factor: float) -> "DoubleWell":
        """Return ``factor * W`` with matching derivatives."""
        if not factor > 0:
            raise DomainError(f"scale factor must be positive, got {factor}")
        W, dW, d2W = self.W, self.dW, self.d2W
        return DoubleWell(
            W=lambda u: factor * W(u),
            dW=lambda u: factor * dW(u),
            d2W=lambda u: factor * d2W(u),
            label=f"{factor:g}*{self.label}",
        )


def quartic_well() -> DoubleWell:
    """The model quartic ``(1 - u^2)^2 / 4``."""
    return DoubleWell(
        W=lambda u: 0.25 * (1.0 - np.square(u)) ** 2,
        dW=lambda u: np.power(u, 3) - u,
        d2W=lambda u: 3.0 * np.square(u) - 1.0,
        label="quartic",
    )


def polynomial_well(coefficients, label: str = "polynomial") -> DoubleWell:
    """Build a well from power-basis coefficients (lowest degree first)."""
    p = Polynomial(coefficients)
    dp, d2p = p.deriv(1), p.deriv(2)
    return DoubleWell(W=p, dW=dp, d2W=d2p, label=label)


@dataclass(frozen=True)
class WellReport:
    passed: bool
    violations: tuple[str, ...] = ()
    max_derivative_error: float = 0.0
    details: dict = field(default_factory=dict)


def validate_double_well(w: DoubleWell, samples: int = 10_000) -> WellReport:
    """Check the well conditions on a sampled grid of [-2, 2].

    Positivity is a sampled surrogate, not a proof. The derivative check
    compares ``dW`` with a central difference of ``W`` away from the wells.
    """
    if samples < 100:
        raise DomainError(f"samples must be at least 100, got {samples}")
    violations = []
    wells = np.array([-1.0, 1.0])
    w_at_wells = np.asarray(w.W(wells), dtype=float)
    if np.any(np.abs(w_at_wells) > 1e-12):
        violations.append("W(-1) = W(1) = 0")

    u = np.linspace(-2.0, 2.0, samples)
    u = u[np.abs(np.abs(u) - 1.0) > 1e-6]
    values = np.asarray(w.W(u), dtype=float)
    if not np.all(np.isfinite(values)):
        violations.append("W finite")
    elif np.any(values <= 0.0):
        violations.append("W > 0 away from the wells")

    curvature = np.asarray(w.d2W(wells), dtype=float)
    if np.any(curvature <= 1e-10):
        violations.append("W''(+-1) > 0")

    # Central differences lose accuracy where dW is tiny, so compare on a
    # relative scale with a floor set by the typical slope.
    step = 1e-5
    numeric = (np.asarray(w.W(u + step)) - np.asarray(w.W(u - step))) / (2 * step)
    exact = np.asarray(w.dW(u), dtype=float)
    scale = np.maximum(np.abs(exact), np.max(np.abs(exact)) * 1e-3 + 1e-300)
    rel = float(np.max(np.abs(numeric - exact) / scale))
    if not rel < 1e-5:
        violations.append("dW consistent with W")

    return WellReport(
        passed=not violations,
        violations=tuple(violations),
        max_derivative_error=rel,
        details={"W_at_wells": w_at_wells.tolist(), "d2W_at_wells": curvature.tolist()},
    )


def surface_tension_constant(w: DoubleWell, tol: float = 1e-8) -> float:
    """Return ``c = integral of sqrt(2 W)`` over [-1, 1]."""

    def integrand(r: float) -> float:
        return float(np.sqrt(2.0 * max(float(w.W(r)), 0.0)))

    value, err = quad(integrand, -1.0, 1.0, epsabs=tol * 1e-2, epsrel=1e-12, limit=200)
    if not (np.isfinite(value) and err <= tol):
        raise NumericError(f"surface tension quadrature did not converge (err={err:.3g})")
    return float(value)


def band_half_width(w: DoubleWell, theta: float) -> float:
    """Distance from 0 to the level ``theta`` along the unit-scale layer.

    The layer solves ``u' = sqrt(2 W(u))`` so the width of ``{|u| < theta}``
    is ``integral_{-theta}^{theta} du / sqrt(2 W(u))``; this returns half of it
    for symmetric wells and the full value over two in general.
    """
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")

    def inv(u: float) -> float:
        return 1.0 / float(np.sqrt(2.0 * float(w.W(u))))

    value, err = quad(inv, -theta, theta, epsabs=1e-12, epsrel=1e-12, limit=200)
    if not np.isfinite(value) or err > 1e-8:
        raise NumericError("band width quadrature did not converge")
    return 0.5 * float(value)
