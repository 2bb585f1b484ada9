"""Command-line driver.

Every command takes documented parameters, either as options
(``phaselab landau-scan --model avpa --t 0:4:401``) or from a JSON file
(``phaselab run --config run.json``). Output is CSV or JSON; its first
line is a ``#`` comment holding the resolved configuration and its
SHA-256 digest, so identical configurations give byte-identical output.

Value syntax:

* numbers accept fractions such as ``1/64``;
* lists are comma separated: ``0.25,0.5``;
* ranges ``a:b:k`` mean ``k`` equispaced samples from ``a`` to ``b`` inclusive;
* sets are ``interval:a:b``, ``ball:cx:cy:r``, ``box:x0:y0:x1:y1``,
  ``halfspace:nx:ny:c`` or ``whole:dim``.

Exit status: 0 on success, 2 on invalid input, 3 on numeric failure,
1 on I/O failure. Errors are printed to standard error as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from . import __version__
from . import conestab, geometry, interfaces, landau, localfield, nonlocalfield
from .errors import ConfigError, DomainError, NumericError
from .potential import quartic_well

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
FORMATS = ("csv", "json")


# ---------------------------------------------------------------------------
# value parsing


def parse_number(text: Any) -> float:
    if isinstance(text, bool):
        raise ConfigError(f"expected a number, got {text!r}")
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"expected a number, got {text!r}") from None


def parse_int(text: Any) -> int:
    value = parse_number(text)
    if not value.is_integer():
        raise ConfigError(f"expected an integer, got {text!r}")
    return int(value)


def parse_list(text: Any) -> list[float]:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    out = [parse_number(t) for t in items if str(t).strip() != ""]
    if not out:
        raise ConfigError("expected a non-empty list")
    return out


def parse_int_list(text: Any) -> list[int]:
    return [parse_int(v) for v in (text if isinstance(text, (list, tuple)) else str(text).split(","))]


def parse_range(text: Any) -> list[float]:
    """``a:b:k`` -> ``[a, b, k]`` with ``k >= 2`` samples."""
    parts = text if isinstance(text, (list, tuple)) else str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"range must look like a:b:k, got {text!r}")
    a, b, k = parse_number(parts[0]), parse_number(parts[1]), parse_int(parts[2])
    if not a < b or k < 2:
        raise ConfigError(f"range needs a < b and k >= 2, got {text!r}")
    return [a, b, k]


def parse_set(text: Any) -> str:
    spec = str(text).strip()
    build_set(spec)
    return spec


def build_set(spec: str) -> geometry.SetRegion:
    kind, *args = spec.split(":")
    vals = [parse_number(a) for a in args]
    try:
        if kind == "interval" and len(vals) == 2:
            return geometry.SetRegion.interval(*vals)
        if kind == "ball" and len(vals) >= 2:
            return geometry.SetRegion.ball(vals[:-1], vals[-1])
        if kind == "box" and len(vals) % 2 == 0 and vals:
            d = len(vals) // 2
            return geometry.SetRegion.box(vals[:d], vals[d:])
        if kind == "halfspace" and len(vals) >= 2:
            return geometry.SetRegion.halfspace(vals[:-1], vals[-1])
        if kind == "whole" and len(vals) == 1:
            return geometry.SetRegion.whole(int(vals[0]))
    except DomainError as exc:
        raise ConfigError(f"bad set {spec!r}: {exc}") from None
    raise ConfigError(f"unknown set syntax {spec!r}")


def parse_choice(choices: Sequence[str]) -> Callable[[Any], str]:
    def parse(text: Any) -> str:
        if str(text) not in choices:
            raise ConfigError(f"expected one of {list(choices)}, got {text!r}")
        return str(text)
    return parse


def parse_optional_path(text: Any) -> str | None:
    return None if text in (None, "") else str(text)


@dataclass(frozen=True)
class Param:
    parse: Callable[[Any], Any]
    default: Any
    help: str


# ---------------------------------------------------------------------------
# results


@dataclass
class Result:
    """A table (``columns`` and ``rows``) and/or a JSON document."""

    columns: list[str] | None = None
    rows: list[list[Any]] | None = None
    doc: Any = None
    files: dict[str, bytes] = field(default_factory=dict)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = self.doc if self.doc is not None else [
                dict(zip(self.columns, row)) for row in self.rows]
            return json.dumps(_plain(doc), sort_keys=True, indent=1) + "\n"
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.columns is not None:
            writer.writerow(self.columns)
            writer.writerows([[_cell(v) for v in row] for row in self.rows])
        else:
            writer.writerow(["key", "value"])
            for k, v in sorted(_flatten(_plain(self.doc)).items()):
                writer.writerow([k, _cell(v)])
        return buf.getvalue()


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    return obj


def _flatten(doc, prefix: str = "") -> dict[str, Any]:
    if isinstance(doc, dict):
        out = {}
        for k, v in doc.items():
            out.update(_flatten(v, f"{prefix}{k}."))
        return out
    if isinstance(doc, list) and any(isinstance(v, (dict, list)) for v in doc):
        out = {}
        for i, v in enumerate(doc):
            out.update(_flatten(v, f"{prefix}{i}."))
        return out
    return {prefix[:-1]: doc}


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, list):
        return ";".join(_cell(x) for x in v)
    if v is None:
        return ""
    return str(v)


# ---------------------------------------------------------------------------
# commands


def _models() -> list[str]:
    return ["avpa", "bsntt6", "bsntt6-dege"]


def cmd_landau_scan(p: dict) -> Result:
    a, b, k = p["t"]
    table = landau.bifurcation_scan(landau.get_model(p["model"]), a, b, int(k), threads=p["threads"])
    return Result(table.header(), table.csv_rows(), {"model": table.model, "rows": table.to_json()})


def cmd_latent_heat(p: dict) -> Result:
    model = landau.get_model(p["model"])
    E, left, right = landau.free_energy_of_temperature(model, model.Tc)
    return Result(doc={
        "model": p["model"], "Tc": model.Tc, "E_at_Tc": E, "dE_left": left, "dE_right": right,
        "latent_heat": landau.latent_heat(model),
        "transition": landau.classify_transition(model).value,
    })


def cmd_layer_profile(p: dict) -> Result:
    prof = localfield.layer_profile_1d(quartic_well(), half_width=p["half_width"],
                                       samples=p["samples"])
    x = prof.abscissae
    ref = np.tanh(x / math.sqrt(2.0))
    err = np.abs(prof.values - ref)
    rows = [[float(a), float(u), float(r), float(e)] for a, u, r, e in zip(x, prof.values, ref, err)]
    doc = {"sup_error": float(err.max()), "ode_residual": prof.ode_residual,
           "slope_at_zero": float(prof.derivative(np.array([0.0]))[0]),
           "first_integral_error": prof.first_integral_error,
           "x": x.tolist(), "u": prof.values.tolist()}
    return Result(["x", "u", "tanh_reference", "abs_error"], rows, doc)


def _local_start(p: dict) -> localfield.Field:
    if p["dim"] == 1:
        n = 2 * int(round(p["half_width"] / p["h"])) + 1
        grid = localfield.Grid((-p["half_width"],), (p["half_width"],), (n,))
        x = grid.axes()[0]
        return localfield.Field(grid, np.clip(x / (4 * p["eps"]), -1.0, 1.0), p["eps"])
    raise ConfigError("dim must be 1 or 2")


def cmd_minimize_local(p: dict) -> Result:
    w = quartic_well()
    if p["dim"] == 2:
        out = interfaces.planar_minimizer(p["eps"], p["half_width"], p["h"], p["angle"],
                                          tol=p["tol"])
        iterations = None
    else:
        out, info = localfield.minimize_local(
            _local_start(p), w, localfield.MinimizeOptions(tol=p["tol"]), full_output=True)
        iterations = info.iterations
    blob = out.to_bytes()
    doc = {"dim": p["dim"], "nodes": int(out.values.size), "h": out.grid.h, "eps": out.eps,
           "energy": localfield.energy_local(out, w),
           "residual": localfield.residual_allen_cahn(out, w),
           "surface_tension": 2.0 * math.sqrt(2.0) / 3.0, "iterations": iterations,
           "field_sha256": hashlib.sha256(blob).hexdigest()}
    files = {p["field_out"]: blob} if p["field_out"] else {}
    return Result(doc=doc, files=files)


def cmd_minimize_nonlocal(p: dict) -> Result:
    start = nonlocalfield.profile_field(p["alpha"], p["eps"], p["cells"])
    opts = localfield.MinimizeOptions(max_iters=p["max_iters"], tol=p["tol"])
    w = quartic_well()
    out, info = nonlocalfield.minimize_nonlocal(start, w, opts, full_output=True)
    return Result(doc={
        "alpha": p["alpha"], "eps": p["eps"], "cells": p["cells"],
        "energy_start": nonlocalfield.scaled_energy(start, w),
        "energy": nonlocalfield.scaled_energy(out, w),
        "iterations": info.iterations, "converged": info.converged, "status": info.status,
        "grad_sup": info.grad_sup,
    })


def cmd_gamma_probe(p: dict) -> Result:
    probe = localfield.gamma_probe_local(p["eps"], quartic_well(), p["half_length"])
    rows = [[r.eps, r.h, r.energy, r.deviation, r.iterations] for r in probe.rows]
    cols = ["eps", "h", "energy", "deviation", "iterations"]
    doc = {"target": probe.target, "strictly_decreasing": probe.strictly_decreasing(),
           "rows": [dict(zip(cols, r)) for r in rows]}
    return Result(cols, rows, doc)


def cmd_scaling_probe(p: dict) -> Result:
    rep = nonlocalfield.scaling_probe(p["alpha"], p["eps"])
    rows = [[e, J, e ** rep.alpha * J] for e, J in zip(rep.eps, rep.J)]
    return Result(["eps", "J", "eps_alpha_J"], rows, rep.to_json())


def _budget(p: dict) -> geometry.Budget:
    return geometry.Budget(samples=p["samples"], seed=p["seed"], method=p["method"])


def cmd_frac_perimeter(p: dict) -> Result:
    E = build_set(p["set"])
    Omega = build_set(p["omega"]) if p["omega"] else geometry.SetRegion.whole(E.dim)
    kern = nonlocalfield.KernelAlpha(E.dim, p["alpha"])
    est = geometry.frac_perimeter(E, Omega, kern, _budget(p))
    doc = est.to_json()
    doc.update({"alpha": p["alpha"], "set": p["set"], "omega": p["omega"] or f"whole:{E.dim}"})
    if E.kind == "interval" and Omega.kind == "whole" and len(E.params) == 1:
        a = p["alpha"]
        lo, hi = E.params[0]
        doc["closed_form"] = 2.0 / (a * (1.0 - a)) * (hi - lo) ** (-a)
    return Result(doc=doc)


def cmd_curvature(p: dict) -> Result:
    E = build_set(p["set"])
    kern = nonlocalfield.KernelAlpha(E.dim, p["alpha"])
    cutoff = p["cutoff"] if p["cutoff"] > 0 else None
    value = geometry.nonlocal_mean_curvature(E, p["point"], kern, cutoff=cutoff)
    return Result(doc={"set": p["set"], "point": p["point"], "alpha": p["alpha"],
                       "cutoff": cutoff, "curvature": value})


def cmd_lower_bound(p: dict) -> Result:
    rep = geometry.interaction_lower_bound_probe(p["gaps"], p["alpha"], p["dim"])
    rows = [[g, v] for g, v in zip(rep.gaps, rep.interactions)]
    return Result(["gap", "interaction"], rows, rep.to_json())


def _interface_field(p: dict):
    if p["field"]:
        try:
            with open(p["field"], "rb") as fh:
                return localfield.Field.from_bytes(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read field {p['field']!r}: {exc}") from None
    return interfaces.planar_minimizer(p["eps"], p["half_width"], p["h"], p["angle"], tol=p["tol"])


def cmd_density_check(p: dict) -> Result:
    f = _interface_field(p)
    th = p["theta"]
    stats = interfaces.density_ratios(f, -th, th, p["radii"])
    band = interfaces.band_measure(f, th, p["radii"])
    unit = interfaces.unit_ball_volume(f.grid.dim)
    cols = ["r", "ratio_above", "ratio_below", "floor", "band_measure", "band_ratio",
            "band_reference", "band_within_factor_2"]
    inside = band.within_reference
    rows = [[r, a, b, 0.1 * unit, m, q, band.reference, bool(ok)]
            for r, a, b, m, q, ok in zip(stats.radii, stats.ratios_above, stats.ratios_below,
                                         band.measures, band.ratios, inside)]
    doc = {"density": stats.to_json(), "band": band.to_json(), "floor": 0.1 * unit}
    return Result(cols, rows, doc)


def cmd_clean_ball(p: dict) -> Result:
    f = _interface_field(p)
    res = interfaces.clean_ball_search(f, p["theta"], p["r"])
    return Result(doc=res.to_json())


def cmd_trapping(p: dict) -> Result:
    f = _interface_field(p)
    rep = interfaces.trapped_flatness(f, p["theta"], p["radii"])
    rows = [[r.r, float(r.omega[0]), float(r.omega[1]), r.gamma, r.a] for r in rep.rows]
    return Result(["r", "omega_0", "omega_1", "gamma", "a"], rows, rep.to_json())


def cmd_cone_stability(p: dict) -> Result:
    budget = conestab.SearchBudget(grid=p["grid"], refine=p["refine"])
    verdicts = conestab.stability_scan(p["n"], budget)
    cols = ["n", "m", "delta", "sff_norm_unit", "hardy_constant", "verdict", "best_quotient",
            "hardy_consistent", "witness_alpha", "witness_beta", "witness_value"]
    rows = []
    for v in verdicts:
        w = v.witness
        rows.append([v.n, v.m, v.delta, v.sff_norm_unit, v.hardy_constant, v.verdict,
                     v.best_quotient, v.hardy_consistent,
                     None if w is None else w.alpha_exp, None if w is None else w.beta_exp,
                     v.witness_value])
    doc = [dict(v.to_json(), hardy_consistent=v.hardy_consistent) for v in verdicts]
    return Result(cols, rows, doc)


FIGURES = {
    "fig1": ("energy", "avpa", (4, 3, 2, 1, 0, -1), (-2.0, 2.0)),
    "fig2": ("bifurcation", "avpa", (0.0, 4.0), None),
    "fig3": ("temperature", "avpa", (0.0, 4.0), None),
    "fig4": ("energy", "bsntt6", (3, 2.05, 2, 1.95, 1.9), (-0.5, 1.5)),
    "fig5": ("bifurcation", "bsntt6", (0.0, 4.0), None),
    "fig6": ("bifurcation", "bsntt6-dege", (0.0, 4.0), None),
    "fig7": ("energy", "bsntt6-dege", (3, 2.5, 2, 1.5, 1.3), (-0.5, 1.5)),
}


def emit_figure_data(figure_id: str, samples: int = 401) -> Result:
    """Curve families behind the free-energy and bifurcation figures."""
    if figure_id not in FIGURES:
        raise ConfigError(f"unknown figure {figure_id!r}")
    kind, name, temps, eta_range = FIGURES[figure_id]
    model = landau.get_model(name)
    if kind == "energy":
        eta = np.linspace(*eta_range, samples)
        curves = landau.energy_curves(model, temps, eta)
        cols = ["eta"] + [f"T={float(T)!r}" for T in temps]
        rows = [[float(e)] + [float(c) for c in curves[:, i]] for i, e in enumerate(eta)]
        return Result(cols, rows)
    if kind == "bifurcation":
        table = landau.bifurcation_scan(model, temps[0], temps[1], samples)
        return Result(table.header(), table.csv_rows())
    rows = []
    for T in landau.temperature_grid(temps[0], temps[1], samples):
        E, left, right = landau.free_energy_of_temperature(model, float(T))
        rows.append([float(T), E, left, right])
    return Result(["T", "E", "dE_left", "dE_right"], rows)


def cmd_figure(p: dict) -> Result:
    return emit_figure_data(p["id"], p["samples"])


def _field_params() -> dict[str, Param]:
    return {
        "field": Param(parse_optional_path, None, "binary field from minimize-local --field-out; "
                       "when absent a planar minimizer is computed"),
        "eps": Param(parse_number, 1 / 64, "interface scale of the computed minimizer"),
        "half_width": Param(parse_number, 0.6, "half side of the square domain"),
        "h": Param(parse_number, 1 / 256, "grid spacing"),
        "angle": Param(parse_number, 0.4, "angle of the planar boundary data"),
        "tol": Param(parse_number, 1e-6, "descent tolerance (sup norm of the gradient)"),
        "theta": Param(parse_number, 0.9, "level threshold"),
    }


SAMPLING = {
    "samples": Param(parse_int, 20000, "Monte Carlo samples or quadrature lines"),
    "seed": Param(lambda v: None if v in (None, "") else parse_int(v), None,
                  "random seed (required for Monte Carlo)"),
    "method": Param(parse_choice(("montecarlo", "quadrature")), "montecarlo", "line sampling rule"),
}


@dataclass(frozen=True)
class Command:
    handler: Callable[[dict], Result]
    params: dict[str, Param]
    help: str
    default_format: str = "csv"


COMMANDS: dict[str, Command] = {
    "landau-scan": Command(cmd_landau_scan, {
        "model": Param(parse_choice(_models()), "avpa", "Landau model"),
        "t": Param(parse_range, [0.0, 4.0, 401], "temperature range a:b:k"),
        "threads": Param(parse_int, 1, "worker threads for the scan"),
    }, "global minimizers over a temperature range"),
    "latent-heat": Command(cmd_latent_heat, {
        "model": Param(parse_choice(_models()), "bsntt6", "Landau model"),
    }, "latent heat and transition order at the critical temperature", "json"),
    "layer-profile": Command(cmd_layer_profile, {
        "half_width": Param(parse_number, 8.0, "half width of the sampled window"),
        "samples": Param(parse_int, 1601, "number of samples"),
    }, "1D heteroclinic of the quartic well against tanh(x/sqrt2)"),
    "minimize-local": Command(cmd_minimize_local, {
        "dim": Param(parse_int, 1, "1 (data -1/+1 on [-L, L]) or 2 (planar data)"),
        "eps": Param(parse_number, 1 / 16, "interface scale"),
        "half_width": Param(parse_number, 1.0, "half width of the domain"),
        "h": Param(parse_number, 1 / 256, "grid spacing"),
        "angle": Param(parse_number, 0.4, "angle of the planar data (dim 2)"),
        "tol": Param(parse_number, 1e-8, "descent tolerance"),
        "field_out": Param(parse_optional_path, None, "write the minimizer as a binary field"),
    }, "local energy minimizer", "json"),
    "minimize-nonlocal": Command(cmd_minimize_nonlocal, {
        "alpha": Param(parse_number, 0.5, "fractional order"),
        "eps": Param(parse_number, 0.25, "interface scale"),
        "cells": Param(parse_int, 64, "cells on (-1, 1)"),
        "tol": Param(parse_number, 1e-5, "descent tolerance"),
        "max_iters": Param(parse_int, 20000, "iteration cap"),
    }, "1D fractional minimizer with sign exterior data", "json"),
    "gamma-probe": Command(cmd_gamma_probe, {
        "eps": Param(parse_list, [1 / 8, 1 / 16, 1 / 32, 1 / 64], "decreasing eps list"),
        "half_length": Param(parse_number, 1.0, "half length of the interval"),
    }, "1D minimum energies against the surface tension constant"),
    "scaling-probe": Command(cmd_scaling_probe, {
        "alpha": Param(parse_number, 0.5, "fractional order in (0, 2)"),
        "eps": Param(parse_list, list(nonlocalfield.DEFAULT_PROBE_EPS), "eps list"),
    }, "small-eps scaling of the rescaled Gagliardo energy"),
    "frac-perimeter": Command(cmd_frac_perimeter, {
        "alpha": Param(parse_number, 0.5, "fractional order in (0, 1)"),
        "set": Param(parse_set, "interval:0:1", "the set E"),
        "omega": Param(lambda v: "" if v in (None, "") else parse_set(v), "", "the window (default whole space)"),
        **SAMPLING,
    }, "fractional perimeter of a set in a window", "json"),
    "curvature": Command(cmd_curvature, {
        "alpha": Param(parse_number, 0.5, "fractional order in (0, 1)"),
        "set": Param(parse_set, "ball:0:0:1", "the set E (1D or 2D)"),
        "point": Param(parse_list, [1.0, 0.0], "boundary point"),
        "cutoff": Param(parse_number, 0.0, "truncation radius (0 for none)"),
    }, "nonlocal mean curvature at a boundary point", "json"),
    "lower-bound": Command(cmd_lower_bound, {
        "alpha": Param(parse_number, 1.0, "order >= 1"),
        "gaps": Param(parse_list, [2.0**-k for k in range(2, 9)], "decreasing gaps"),
        "dim": Param(parse_int, 1, "1 or 2"),
    }, "interaction of separated thirds as the gap shrinks"),
    "density-check": Command(cmd_density_check, {
        **_field_params(),
        "radii": Param(parse_list, [0.25, 0.5], "ball radii"),
    }, "phase densities and interface band around the centre"),
    "clean-ball": Command(cmd_clean_ball, {
        **_field_params(),
        "r": Param(parse_number, 0.25, "ball radius"),
    }, "largest clean-ball fraction on both sides", "json"),
    "trapping": Command(cmd_trapping, {
        **_field_params(),
        "radii": Param(parse_list, [0.125, 0.25, 0.5], "ball radii"),
    }, "slab trapping of the interface"),
    "cone-stability": Command(cmd_cone_stability, {
        "n": Param(parse_int_list, [4, 6, 8], "even dimensions of Simons cones"),
        "grid": Param(parse_int, 8, "grid points per exponent gap"),
        "refine": Param(parse_int, 60, "Nelder-Mead iterations"),
    }, "negative directions of the radial stability form"),
    "figure": Command(cmd_figure, {
        "id": Param(parse_choice(tuple(FIGURES)), "fig1", "figure id"),
        "samples": Param(parse_int, 401, "samples per curve"),
    }, "figure curve data (free energies, bifurcations)"),
}


# ---------------------------------------------------------------------------
# configuration


CONFIG_KEYS = {"command", "parameters", "output_format", "output"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict
    output_format: str
    output: str | None = None

    @classmethod
    def resolve(cls, command: str, given: dict, output_format: str | None,
                output: str | None = None) -> "RunConfig":
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        spec = COMMANDS[command]
        unknown = sorted(set(given) - set(spec.params))
        if unknown:
            raise ConfigError(f"unknown parameter(s) for {command}: {unknown}")
        params = {}
        for name, prm in spec.params.items():
            params[name] = prm.parse(given[name]) if name in given else prm.default
        fmt = output_format or spec.default_format
        if fmt not in FORMATS:
            raise ConfigError(f"output_format must be one of {FORMATS}")
        return cls(command, params, fmt, output)

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = sorted(set(data) - CONFIG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config key(s): {unknown}")
        if "command" not in data:
            raise ConfigError("config needs a command")
        params = data.get("parameters", {})
        if not isinstance(params, dict):
            raise ConfigError("parameters must be a JSON object")
        return cls.resolve(data["command"], params, data.get("output_format"), data.get("output"))

    def canonical(self) -> str:
        return json.dumps({"command": self.command, "parameters": _plain(self.parameters),
                           "output_format": self.output_format},
                          sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def header(self) -> str:
        return f"# phaselab {__version__} sha256={self.digest()} config={self.canonical()}\n"


def execute(cfg: RunConfig) -> tuple[str, dict[str, bytes]]:
    """Run a resolved configuration; returns the rendered text and extra files."""
    result = COMMANDS[cfg.command].handler(dict(cfg.parameters))
    return cfg.header() + result.render(cfg.output_format), result.files


def _write_atomic(path: str, data: bytes) -> None:
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".phaselab-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run(cfg: RunConfig, stdout=None) -> int:
    """Execute and write outputs; exit status per the module docstring."""
    stdout = stdout or sys.stdout
    text, files = execute(cfg)
    for path in [cfg.output, *files]:
        if path:
            folder = os.path.dirname(os.path.abspath(path))
            if not os.path.isdir(folder):
                raise OSError(f"output directory does not exist: {folder}")
    for path, blob in files.items():
        _write_atomic(path, blob)
    if cfg.output:
        _write_atomic(cfg.output, text.encode("utf-8"))
    else:
        stdout.write(text)
    return EXIT_OK


def read_output(path: str) -> str:
    """Body of an output file without its ``#`` comment lines."""
    with open(path, encoding="utf-8") as fh:
        return "".join(line for line in fh if not line.startswith("#"))


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with usage text
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="phaselab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"phaselab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, spec in COMMANDS.items():
        p = sub.add_parser(name, help=spec.help, description=spec.help)
        for key, prm in spec.params.items():
            default = prm.default
            shown = ",".join(map(str, default)) if isinstance(default, list) else default
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS,
                           help=f"{prm.help} (default: {shown})")
        p.add_argument("--format", dest="output_format", choices=FORMATS, default=None,
                       help=f"output format (default: {spec.default_format})")
        p.add_argument("--out", dest="output", default=None, help="output file (default: stdout)")
    p = sub.add_parser("run", help="run a JSON configuration",
                       description="Run {command, parameters, output_format, output} from a file.")
    p.add_argument("--config", required=True, help="path to the JSON configuration")
    return parser


def _config_from_args(argv: Sequence[str] | None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    command = ns.pop("command")
    if command == "run":
        try:
            with open(ns["config"], encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return RunConfig.from_json(data)
    fmt = ns.pop("output_format")
    out = ns.pop("output")
    return RunConfig.resolve(command, ns, fmt, out)


def _fail(exc: BaseException, status: int) -> int:
    payload = {"error": getattr(exc, "code", "io" if isinstance(exc, OSError) else "error"),
               "type": type(exc).__name__, "message": str(exc), "exit_status": status}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return status


def main(argv: Sequence[str] | None = None) -> int:
    try:
        return run(_config_from_args(argv))
    except DomainError as exc:
        return _fail(exc, EXIT_INVALID)
    except NumericError as exc:
        return _fail(exc, EXIT_NUMERIC)
    except OSError as exc:
        return _fail(exc, EXIT_IO)


if __name__ == "__main__":
    sys.exit(main())
