"""Second variation of minimal cones reduced to one radial variable.

A cone ``{|z| = delta |y|}`` in ``R^m x R^(n-m)`` has second fundamental
form homogeneous of degree -1, ``|A|(x) = sff_norm_unit / |x|``. For a
radial test function the stability form factorises as

    Q(phi) = link_measure * int_0^inf (phi'(rho)^2 - sff^2 phi^2 / rho^2) rho^(n-2) drho,

which is integrated here in the log variable ``s = log rho``. Curvatures
are obtained numerically from the defining function, not from formulas.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.optimize import minimize

from .errors import DomainError, NumericError

QUAD_TOL = 1e-9
PROFILE_SMOOTHING = 1e-4
FD_STEP = 1e-3
MINIMAL_TOL = 1e-8


def sphere_area(k: int) -> float:
    """``H^k`` measure of the unit sphere ``S^k``."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


def hardy_constant(n: int) -> float:
    """Best constant in ``int phi'^2 rho^(n-2) >= H int phi^2 rho^(n-4)``."""
    return (n - 3) ** 2 / 4.0


def _check_split(m: int, n: int, delta: float) -> None:
    if not (isinstance(m, (int, np.integer)) and isinstance(n, (int, np.integer))):
        raise DomainError("m and n must be integers")
    if not 1 <= m <= n - 1:
        raise DomainError(f"need 1 <= m <= n-1, got m={m}, n={n}")
    if not (delta > 0 and math.isfinite(delta)):
        raise DomainError(f"delta must be positive, got {delta}")


# ---------------------------------------------------------------------------
# curvature of Lawson cones


def _defining_function(m: int, delta: float):
    d2 = delta * delta

    def F(x: np.ndarray) -> float:
        return float(x[m:] @ x[m:] - d2 * x[:m] @ x[:m])

    return F


def _unit_link_point(m: int, n: int, delta: float) -> np.ndarray:
    a = 1.0 / math.sqrt(1.0 + delta * delta)
    p = np.zeros(n)
    p[0] = a
    p[m] = delta * a
    return p


def _fd_gradient_hessian(F, p: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    n = len(p)
    eye = np.eye(n) * h
    grad = np.array([(F(p + eye[i]) - F(p - eye[i])) / (2 * h) for i in range(n)])
    hess = np.empty((n, n))
    f0 = F(p)
    for i in range(n):
        hess[i, i] = (F(p + eye[i]) - 2 * f0 + F(p - eye[i])) / (h * h)
        for j in range(i + 1, n):
            v = (F(p + eye[i] + eye[j]) - F(p + eye[i] - eye[j])
                 - F(p - eye[i] + eye[j]) + F(p - eye[i] - eye[j])) / (4 * h * h)
            hess[i, j] = hess[j, i] = v
    return grad, hess


def principal_curvatures(m: int, n: int, delta: float, h: float = FD_STEP) -> np.ndarray:
    """Principal curvatures at a unit-distance point of ``{|z| = delta |y|}``.

    Finite-difference gradient and Hessian of ``F = |z|^2 - delta^2 |y|^2``
    give the shape operator ``P (D^2 F / |grad F|) P`` on the tangent space;
    its ``n - 1`` eigenvalues are returned in increasing order.
    """
    _check_split(m, n, delta)
    F = _defining_function(m, delta)
    p = _unit_link_point(m, n, delta)
    grad, hess = _fd_gradient_hessian(F, p, h)
    norm = float(np.linalg.norm(grad))
    nu = grad / norm
    # orthonormal tangent basis
    q, _ = np.linalg.qr(np.column_stack([nu, np.eye(n)]))
    T = q[:, 1:n]
    shape = T.T @ hess @ T / norm
    return np.sort(np.linalg.eigvalsh(0.5 * (shape + shape.T)))


def lawson_mean_curvature(m: int, n: int, delta: float) -> float:
    """Sum of principal curvatures at a unit-distance point."""
    return float(np.sum(principal_curvatures(m, n, delta)))


def minimal_aperture(m: int, n: int, lo: float = 1e-3, hi: float = 1e3,
                     tol: float = 1e-12) -> float:
    """The aperture ``delta*`` of vanishing mean curvature, by bisection in ``log delta``.

    Raises :class:`NumericError` when ``H`` keeps one sign on ``[lo, hi]``
    (no minimal cone in the family, e.g. ``m = 1``).
    """
    h_lo, h_hi = lawson_mean_curvature(m, n, lo), lawson_mean_curvature(m, n, hi)
    if h_lo * h_hi > 0:
        raise NumericError(
            f"bisection bracket failure: H keeps the sign {math.copysign(1, h_lo):+.0f} "
            f"on [{lo}, {hi}] for m={m}, n={n}")
    a, b = math.log(lo), math.log(hi)
    for _ in range(200):
        mid = 0.5 * (a + b)
        h_mid = lawson_mean_curvature(m, n, math.exp(mid))
        if h_mid == 0.0:
            return math.exp(mid)
        if (h_mid > 0) == (h_lo > 0):
            a, h_lo = mid, h_mid
        else:
            b = mid
        if b - a < tol:
            break
    return math.exp(0.5 * (a + b))


@dataclass(frozen=True)
class ConeProfile:
    """Radial data of a cone: curvature on the unit sphere and link measure."""

    n: int
    m: int
    delta: float
    sff_norm_unit: float
    link_measure: float
    mean_curvature: float = 0.0

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if not self.sff_norm_unit >= 0:
            raise DomainError("sff_norm_unit must be nonnegative")
        if not self.link_measure > 0:
            raise DomainError("link_measure must be positive")
        if not 1 <= self.m <= self.n - 1:
            raise DomainError("need 1 <= m <= n-1")

    @property
    def hardy_constant(self) -> float:
        return hardy_constant(self.n)

    @property
    def is_minimal(self) -> bool:
        return abs(self.mean_curvature) < MINIMAL_TOL

    @classmethod
    def lawson(cls, m: int, n: int, delta: float) -> "ConeProfile":
        """Profile of ``{|z| = delta |y|}`` with curvature from finite differences."""
        kappas = principal_curvatures(m, n, delta)
        a = 1.0 / math.sqrt(1.0 + delta * delta)
        # link: S^(m-1)(a) x S^(n-m-1)(delta a)
        link = sphere_area(m - 1) * a ** (m - 1) * sphere_area(n - m - 1) * (delta * a) ** (n - m - 1)
        return cls(n, m, float(delta), float(math.sqrt(np.sum(kappas**2))), float(link),
                   float(np.sum(kappas)))

    @classmethod
    def simons(cls, n: int) -> "ConeProfile":
        if n < 2 or n % 2:
            raise DomainError("Simons cones need an even dimension n >= 2")
        return cls.lawson(n // 2, n, 1.0)

    @classmethod
    def flat(cls, n: int) -> "ConeProfile":
        """A hyperplane through the origin: no curvature."""
        return cls(n, 1, 1.0, 0.0, sphere_area(n - 2), 0.0)


# ---------------------------------------------------------------------------
# test functions


def standard_exponents(n: int) -> tuple[float, float]:
    """The explicit choice ``alpha = (5-n)/4 + sqrt(2)/2``, ``beta = -sqrt(2)``."""
    return (5 - n) / 4.0 + math.sqrt(2.0) / 2.0, -math.sqrt(2.0)


def tails_integrable(n: int, alpha: float, beta: float) -> bool:
    """``2 alpha + n - 5 > 0`` and ``2 (alpha + beta) + n - 5 < 0``."""
    return 2 * alpha + n - 5 > 0 and 2 * (alpha + beta) + n - 5 < 0


def exponents_admissible(n: int, alpha: float, beta: float) -> bool:
    """Integrable tails plus the positivity of ``2 - alpha^2`` and ``2 - (alpha+beta)^2``."""
    varsigma = alpha + beta
    return (tails_integrable(n, alpha, beta) and abs(alpha) < math.sqrt(2.0)
            and abs(varsigma) < math.sqrt(2.0))


def admissible_exponents_exist(n: int) -> bool:
    """Some pair satisfies :func:`exponents_admissible` iff ``|5 - n| / 2 < sqrt 2``."""
    return abs(5 - n) / 2.0 < math.sqrt(2.0)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x), 6.0 * x * (1.0 - x)


@dataclass(frozen=True)
class RadialTestFunction:
    """``psi(rho) = amplitude * tau(r) * zeta(r) / r`` with ``r = rho / scale``.

    ``zeta`` behaves like ``r^alpha`` for ``r < 1`` and ``r^(alpha+beta)``
    for ``r > 1``. It is ``r^alpha`` times a smoothed maximum (``beta > 0``)
    or minimum (``beta < 0``) of ``t = r^beta`` and 1: the maximum is
    ``(t + 1 + sqrt((t - 1)^2 + smoothing)) / 2`` and the minimum is
    ``t`` divided by that maximum, which keeps the exact power tails. The
    division by ``r`` makes ``psi`` the product of the unit-sphere
    curvature profile ``1/r`` and ``zeta``. ``tau`` is a C^1 cutoff in
    ``log r``: 0 below ``inner_cut``, 1 on ``[2 inner_cut, outer_cut]``,
    0 above ``2 outer_cut``; ``inner_cut = 0`` or ``outer_cut = inf``
    switches a side off.
    """

    alpha_exp: float
    beta_exp: float
    inner_cut: float = 0.0
    outer_cut: float = math.inf
    smoothing: float = PROFILE_SMOOTHING
    amplitude: float = 1.0
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not (self.inner_cut >= 0 and self.outer_cut > 0):
            raise DomainError("cutoffs must be nonnegative")
        if self.inner_cut > 0 and math.isfinite(self.outer_cut) and not (
                2 * self.inner_cut < self.outer_cut):
            raise DomainError("need 2 * inner_cut < outer_cut")
        if not self.smoothing > 0 or not self.scale > 0:
            raise DomainError("smoothing and scale must be positive")
        if self.beta_exp == 0:
            raise DomainError("beta_exp must be nonzero")

    def validate_for(self, n: int) -> None:
        if not tails_integrable(n, self.alpha_exp, self.beta_exp):
            raise DomainError(
                f"exponents alpha={self.alpha_exp:g}, beta={self.beta_exp:g} give "
                f"non-integrable tails in dimension {n}")

    @classmethod
    def for_dimension(cls, n: int, alpha: float, beta: float, **kw) -> "RadialTestFunction":
        phi = cls(alpha, beta, **kw)
        phi.validate_for(n)
        return phi

    def scaled(self, t: float) -> "RadialTestFunction":
        """``rho -> psi(rho / t)``."""
        return replace(self, scale=self.scale * t)

    def times(self, t: float) -> "RadialTestFunction":
        return replace(self, amplitude=self.amplitude * t)

    def log_parts(self, s: np.ndarray):
        """Overflow-free pieces at ``rho = exp(s)``.

        Returns ``(log_base, rate, tau, dtau)`` with
        ``psi = amplitude * tau * exp(log_base)`` and
        ``d psi / d log rho = amplitude * exp(log_base) * (tau * rate + dtau)``.
        """
        u = np.asarray(s, dtype=float) - math.log(self.scale)
        a, b, eps = self.alpha_exp, self.beta_exp, self.smoothing
        x = b * u  # log t
        log_big = np.maximum(x, 0.0)
        ratio = np.exp(-np.abs(x))  # min(t, 1) / max(t, 1)
        S = np.sqrt((1.0 - ratio) ** 2 + eps * np.exp(-2.0 * log_big))
        # smoothed max(t, 1) = (t + 1 + sqrt((t - 1)^2 + eps)) / 2
        log_gmax = log_big + np.log(0.5 * (1.0 + ratio + S))
        tb, ob = np.exp(x - log_big), np.exp(-log_big)
        dlog_gmax = b * tb * (1.0 + (tb - ob) / S) / (tb + ob + S)
        if b > 0:
            log_g, dlog_g = log_gmax, dlog_gmax
        else:
            # smoothed min(t, 1) = t / smoothed max(t, 1)
            log_g, dlog_g = x - log_gmax, b - dlog_gmax
        tau, dtau = self._cutoff(u)
        return (a - 1.0) * u + log_g, (a - 1.0) + dlog_g, tau, dtau

    def log_value_and_slope(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """``psi`` and ``d psi / d log rho`` at ``rho = exp(s)``."""
        log_base, rate, tau, dtau = self.log_parts(s)
        base = self.amplitude * np.exp(log_base)
        return tau * base, base * (tau * rate + dtau)

    def _cutoff(self, u: np.ndarray):
        tau = np.ones_like(u)
        dtau = np.zeros_like(u)
        ln2 = math.log(2.0)
        if self.inner_cut > 0:
            x = (u - math.log(self.inner_cut)) / ln2
            up, dup = _smoothstep(x)
            dup = np.where((x > 0) & (x < 1), dup, 0.0) / ln2
            tau, dtau = tau * up, dtau * up + tau * dup
        if math.isfinite(self.outer_cut):
            x = (u - math.log(self.outer_cut)) / ln2
            up, dup = _smoothstep(x)
            dup = np.where((x > 0) & (x < 1), dup, 0.0) / ln2
            tau, dtau = tau * (1.0 - up), dtau * (1.0 - up) - tau * dup
        return tau, dtau

    def to_json(self) -> dict:
        return {"alpha_exp": float(self.alpha_exp), "beta_exp": float(self.beta_exp),
                "inner_cut": float(self.inner_cut),
                "outer_cut": None if math.isinf(self.outer_cut) else float(self.outer_cut),
                "smoothing": float(self.smoothing), "amplitude": float(self.amplitude),
                "scale": float(self.scale)}

    @classmethod
    def from_json(cls, data: dict) -> "RadialTestFunction":
        data = dict(data)
        if data.get("outer_cut") is None:
            data["outer_cut"] = math.inf
        return cls(**data)


# ---------------------------------------------------------------------------
# stability form


def _radial_integrals(cone: ConeProfile, phi: RadialTestFunction, quad_tol: float):
    """``(int (psi_s^2 - c^2 psi^2) e^{(n-3)s} ds, int psi^2 e^{(n-3)s} ds)``."""
    n, c2 = cone.n, cone.sff_norm_unit**2
    low_rate = 2 * phi.alpha_exp + n - 5
    high_rate = -(2 * (phi.alpha_exp + phi.beta_exp) + n - 5)
    ls = math.log(phi.scale)
    # Outside [s_lo, s_hi] psi is an exact power to within O(smoothing e^{-2|beta u|}).
    cut = abs(math.log(1e-3 * quad_tol))
    reach_lo = max(1.0, cut / low_rate, 30.0 / abs(phi.beta_exp))
    reach_hi = max(1.0, cut / high_rate, 30.0 / abs(phi.beta_exp))
    s_lo = ls + (math.log(phi.inner_cut) if phi.inner_cut > 0 else -reach_lo)
    s_hi = ls + (math.log(2 * phi.outer_cut) if math.isfinite(phi.outer_cut) else reach_hi)

    def form(s):
        lb, rate, tau, dtau = phi.log_parts(np.array([s]))
        w = math.exp(2 * lb[0] + (n - 3) * s)
        return float(w * ((tau[0] * rate[0] + dtau[0]) ** 2 - c2 * tau[0] ** 2))

    def mass(s):
        lb, _, tau, _ = phi.log_parts(np.array([s]))
        return float(math.exp(2 * lb[0] + (n - 3) * s) * tau[0] ** 2)

    knots = [ls - 0.05, ls, ls + 0.05]
    for c in (phi.inner_cut, 2 * phi.inner_cut, phi.outer_cut, 2 * phi.outer_cut):
        if 0 < c < math.inf:
            knots.append(ls + math.log(c))
    knots = sorted(k for k in set(knots) if s_lo < k < s_hi)
    out = []
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        for fn, rate_lo, rate_hi, coeff_lo, coeff_hi in (
            (form, low_rate, high_rate, (phi.alpha_exp - 1) ** 2 - c2,
             (phi.alpha_exp + phi.beta_exp - 1) ** 2 - c2),
            (mass, low_rate, high_rate, 1.0, 1.0),
        ):
            total = 0.0
            edges = [s_lo, *knots, s_hi]
            for a, b in zip(edges[:-1], edges[1:]):
                try:
                    val, _ = quad(fn, a, b, epsabs=0.1 * quad_tol, epsrel=1e-11, limit=400)
                except IntegrationWarning as exc:
                    raise NumericError(f"radial quadrature failed on [{a:.3g}, {b:.3g}]: {exc}")
                total += val
            amp2 = phi.amplitude**2
            total *= amp2
            # the smoothed max tends to plateau (not 1) on its constant side
            plateau = 0.5 * (1.0 + math.sqrt(1.0 + phi.smoothing))
            fac_lo, fac_hi = (plateau**2, 1.0) if phi.beta_exp > 0 else (1.0, plateau**-2)
            if phi.inner_cut == 0:
                # psi = amp r^(alpha-1), r = e^{s - ls}
                total += amp2 * fac_lo * coeff_lo * math.exp(
                    (n - 3) * ls + rate_lo * (s_lo - ls)) / rate_lo
            if math.isinf(phi.outer_cut):
                total += amp2 * fac_hi * coeff_hi * math.exp(
                    (n - 3) * ls - rate_hi * (s_hi - ls)) / rate_hi
            out.append(total)
    return out[0], out[1]


def stability_form_radial(cone: ConeProfile, phi: RadialTestFunction,
                          quad_tol: float = QUAD_TOL) -> float:
    """``Q(psi)`` for a minimal cone; see the module docstring."""
    if not cone.is_minimal:
        raise DomainError("the radial stability form needs a cone with zero mean curvature")
    phi.validate_for(cone.n)
    q, _ = _radial_integrals(cone, phi, quad_tol)
    return cone.link_measure * q


def rayleigh_quotient(cone: ConeProfile, phi: RadialTestFunction,
                      quad_tol: float = QUAD_TOL) -> float:
    """``Q(psi) / (link_measure int psi^2 rho^(n-4) drho)``."""
    if not cone.is_minimal:
        raise DomainError("the radial stability form needs a cone with zero mean curvature")
    phi.validate_for(cone.n)
    q, m = _radial_integrals(cone, phi, quad_tol)
    return q / m


# ---------------------------------------------------------------------------
# dimension scan


@dataclass(frozen=True)
class StabilityVerdict:
    """Scan outcome for one cone.

    ``NoNegativeDirectionFound`` only means the searched family has no
    negative direction; it is not a certificate of stability.
    """

    n: int
    m: int
    delta: float
    sff_norm_unit: float
    hardy_constant: float
    verdict: str
    witness: RadialTestFunction | None
    witness_value: float | None
    best_quotient: float
    evaluations: int

    @property
    def unstable(self) -> bool:
        return self.verdict == "UnstableWithWitness"

    @property
    def hardy_predicts_unstable(self) -> bool:
        return self.sff_norm_unit**2 > self.hardy_constant

    @property
    def hardy_consistent(self) -> bool:
        return self.unstable == self.hardy_predicts_unstable

    def to_json(self) -> dict:
        return {"n": self.n, "m": self.m, "delta": self.delta,
                "sff_norm_unit": self.sff_norm_unit, "sff_norm_unit_sq": self.sff_norm_unit**2,
                "hardy_constant": self.hardy_constant, "verdict": self.verdict,
                "witness_params": None if self.witness is None else self.witness.to_json(),
                "witness_value": self.witness_value, "best_quotient": self.best_quotient,
                "evaluations": self.evaluations}


@dataclass(frozen=True)
class SearchBudget:
    """Grid of ``grid`` values per exponent gap plus ``refine`` Nelder-Mead steps."""

    grid: int = 8
    refine: int = 60
    gap_min: float = 0.02
    gap_max: float = 2.5
    quad_tol: float = QUAD_TOL

    def validate(self) -> None:
        if self.grid < 2 or self.refine < 0:
            raise DomainError("grid needs at least two points; refine must be >= 0")
        if not 0 < self.gap_min < self.gap_max:
            raise DomainError("need 0 < gap_min < gap_max")


def _exponents_from_gaps(n: int, lo_gap: float, hi_gap: float) -> tuple[float, float]:
    # alpha = (5 - n)/2 + lo_gap, alpha + beta = (5 - n)/2 - hi_gap
    pivot = (5 - n) / 2.0
    return pivot + lo_gap, -(lo_gap + hi_gap)


def stability_scan(ns: Sequence[int], budget: SearchBudget | None = None) -> list[StabilityVerdict]:
    """Search the two-regime family for negative directions on Simons cones.

    Minimises the Rayleigh quotient over admissible exponents, first on a
    geometric grid of the two exponent gaps and then by Nelder-Mead in
    log coordinates. A cone is ``UnstableWithWitness`` when the best
    function, normalised to unit mass, has ``Q < -quad_tol``.
    """
    budget = budget or SearchBudget()
    budget.validate()
    out = []
    for n in ns:
        if n < 4 or n % 2:
            raise DomainError(f"Simons cones are scanned for even n >= 4, got {n}")
        cone = ConeProfile.simons(n)
        evaluations = 0

        def quotient(log_gaps) -> float:
            nonlocal evaluations
            evaluations += 1
            a, b = _exponents_from_gaps(n, *np.exp(log_gaps))
            try:
                return rayleigh_quotient(cone, RadialTestFunction(a, b), budget.quad_tol)
            except NumericError:
                return math.inf

        gaps = np.log(np.geomspace(budget.gap_min, budget.gap_max, budget.grid))
        best = min(((quotient((x, y)), (x, y)) for x in gaps for y in gaps),
                   key=lambda t: t[0])
        point = np.array(best[1])
        if budget.refine:
            box = [(gaps[0], gaps[-1])] * 2
            res = minimize(quotient, point, method="Nelder-Mead", bounds=box,
                           options={"maxiter": budget.refine, "xatol": 1e-4, "fatol": 1e-10})
            if res.fun < best[0]:
                point = res.x
        a, b = _exponents_from_gaps(n, *np.exp(point))
        phi = RadialTestFunction(float(a), float(b))
        q, mass = _radial_integrals(cone, phi, budget.quad_tol)
        witness = phi.times(1.0 / math.sqrt(mass))
        value = stability_form_radial(cone, witness, budget.quad_tol)
        ratio = q / mass
        unstable = value < -budget.quad_tol
        out.append(StabilityVerdict(
            n, cone.m, cone.delta, cone.sff_norm_unit, cone.hardy_constant,
            "UnstableWithWitness" if unstable else "NoNegativeDirectionFound",
            witness if unstable else None, float(value) if unstable else None, float(ratio),
            evaluations))
    return out


def verdicts_json(verdicts: Sequence[StabilityVerdict]) -> str:
    return json.dumps([v.to_json() for v in verdicts], sort_keys=True)


__all__ = [
    "ConeProfile", "RadialTestFunction", "StabilityVerdict", "SearchBudget",
    "principal_curvatures", "lawson_mean_curvature", "minimal_aperture",
    "stability_form_radial", "rayleigh_quotient", "stability_scan", "hardy_constant",
    "standard_exponents", "tails_integrable", "exponents_admissible",
    "admissible_exponents_exist", "sphere_area", "verdicts_json",
]
