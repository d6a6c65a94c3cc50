"""Command-line front end.

Subcommands: coords, solve, curve, verify, spectrum-1d, qes.  A run is
described by a JSON config file plus --set key=value overrides; results
are written as CSV or JSON with full round-trip float precision so that
identical configs produce byte-identical data payloads.

Exit codes: 0 success, 1 usage/config error, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from .geometry import Cartesian, Geometry, Prolate
from . import geometry as _geo
from .potentials import (
    PT1DParams,
    QESParams,
    SWParams,
    coulomb_two_center,
    pt_exactly_solvable_2d,
    pt_hyperbolic,
    pt_trigonometric,
    qes_potential,
    sw_spec,
    verify_periodicity,
)
from .separation import (
    BracketError,
    ModeLabels,
    SolverSettings,
    bispectral_solve,
    potential_curve,
)
from . import solvable as _solv
from . import operators as _ops

__all__ = ["RunConfig", "ResultTable", "ConfigError", "parse_config", "run", "main"]

_SUBCOMMANDS = ("coords", "solve", "curve", "verify", "spectrum-1d", "qes")

# complete key schema per subcommand: {key: (required, type)}
_SCHEMAS: dict[str, dict] = {
    "coords": {
        "a": (False, float), "R": (False, float),
        "direction": (True, str),          # prolate-to-cartesian | cartesian-to-prolate
        "points": (True, list),
    },
    "solve": {
        "a": (False, float), "R": (False, float),
        "family": (False, str),            # coulomb (default) | pt2d | sw
        "Z1": (False, float), "Z2": (False, float), "m": (False, int),
        "params": (False, dict),
        "n_xi": (True, int), "n_eta": (True, int),
        "settings": (False, dict),
    },
    "curve": {
        "Z1": (True, float), "Z2": (True, float), "m": (True, int),
        "n_xi": (True, int), "n_eta": (True, int),
        "R_values": (True, list),
        "workers": (False, int),
        "settings": (False, dict),
    },
    "verify": {
        "a": (False, float), "R": (False, float),
        "checks": (False, list),
        "grids": (False, list),
    },
    "spectrum-1d": {
        "family": (True, str),     # pt-hyperbolic | pt-trigonometric | qes-h1 | ...
        "params": (True, dict),
        "count": (True, int),
        "domain": (False, list),
        "boundary": (False, str),
    },
    "qes": {
        "family": (True, str),
        "params": (True, dict),
        "k": (True, int),
    },
}

_PHYSICS_KEYS = {"Z1", "Z2", "m", "n_xi", "n_eta", "R_values", "params"}


class ConfigError(ValueError):
    """Invalid run configuration; the message lists every violation."""


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    options: dict
    fmt: str = "csv"
    output: str | None = None

    def geometry(self) -> Geometry:
        a, R = self.options.get("a"), self.options.get("R")
        if a is None and R is None:
            raise ConfigError("one of 'a' or 'R' is required")
        if a is not None and R is not None:
            raise ConfigError("'a' and 'R' must not both be set")
        return Geometry(a if a is not None else R / 2.0)


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def payload_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def payload_json(self) -> str:
        data = {"columns": self.columns,
                "rows": [[_fmt(v) for v in row] for row in self.rows]}
        data.update(self.meta)
        return json.dumps(data, sort_keys=True, indent=1) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, (np.floating,)):
        return format(float(v), ".17g")
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def parse_config(text: str, subcommand: str | None = None) -> RunConfig:
    """Validate a JSON config; every schema violation is collected and the
    joined list is raised as one ConfigError."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    problems = []
    sub = raw.pop("subcommand", subcommand)
    if sub is None:
        problems.append("missing 'subcommand'")
    elif sub not in _SUBCOMMANDS:
        problems.append(f"unknown subcommand {sub!r}")
    fmt = raw.pop("format", "csv")
    if fmt not in ("csv", "json"):
        problems.append(f"unknown format {fmt!r}")
    output = raw.pop("output", None)
    if sub in _SCHEMAS:
        schema = _SCHEMAS[sub]
        for key in raw:
            if key not in schema:
                problems.append(f"unknown key {key!r} for subcommand {sub!r}")
        for key, (required, typ) in schema.items():
            if key in raw:
                val = raw[key]
                if typ is float and isinstance(val, (int, float)) \
                        and not isinstance(val, bool):
                    continue
                if typ is int and isinstance(val, int) and not isinstance(val, bool):
                    continue
                if typ in (str, list, dict) and isinstance(val, typ):
                    continue
                problems.append(f"key {key!r} must be of type {typ.__name__}")
            elif required:
                problems.append(f"missing required key {key!r}")
        if sub in ("coords", "solve", "verify"):
            if ("a" in raw) == ("R" in raw):
                problems.append("exactly one of 'a' or 'R' must be set")
    if problems:
        raise ConfigError("; ".join(problems))
    return RunConfig(subcommand=sub, options=raw, fmt=fmt, output=output)


def _apply_overrides(text: str, overrides: list[str]) -> str:
    data = json.loads(text)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        try:
            data[key] = json.loads(val)
        except json.JSONDecodeError:
            data[key] = val
    return json.dumps(data)


# ---------------------------------------------------------------------------
# subcommand implementations


def _run_coords(cfg: RunConfig) -> ResultTable:
    g = cfg.geometry()
    direction = cfg.options["direction"]
    rows = []
    if direction == "prolate-to-cartesian":
        for pt in cfg.options["points"]:
            p = Prolate(*map(float, pt))
            c = _geo.prolate_to_cartesian(g, p)
            e = _geo.elliptic_from_prolate(p)
            r = _geo.focal_radii(g, e)
            rows.append([p.alpha, p.beta, p.phi, c.x, c.y, c.z,
                         e.xi, e.eta, r.r1, r.r2])
    elif direction == "cartesian-to-prolate":
        for pt in cfg.options["points"]:
            c = Cartesian(*map(float, pt))
            p = _geo.cartesian_to_prolate(g, c)
            e = _geo.elliptic_from_prolate(p)
            r = _geo.focal_radii(g, e)
            rows.append([float(p.alpha), float(p.beta), float(p.phi),
                         c.x, c.y, c.z, float(e.xi), float(e.eta),
                         float(r.r1), float(r.r2)])
    else:
        raise ConfigError(f"unknown direction {direction!r}")
    return ResultTable(
        columns=["alpha", "beta", "phi", "x", "y", "z", "xi", "eta", "r1", "r2"],
        rows=rows)


def _settings_from(options: dict) -> SolverSettings:
    return SolverSettings(**options.get("settings", {}))


def _build_family_spec(cfg: RunConfig, g: Geometry):
    fam = cfg.options.get("family", "coulomb")
    if fam == "coulomb":
        missing = [k for k in ("Z1", "Z2", "m") if k not in cfg.options]
        if missing:
            raise ConfigError(f"coulomb family needs keys {missing}")
        return coulomb_two_center(cfg.options["Z1"], cfg.options["Z2"],
                                  cfg.options["m"], g)
    params = cfg.options.get("params")
    if params is None:
        raise ConfigError(f"family {fam!r} needs a 'params' record")
    if fam == "pt2d":
        return pt_exactly_solvable_2d(params["Ac"], params["As"],
                                      params["Bc"], params["Bs"], g)
    if fam == "sw":
        return sw_spec(SWParams(params["A1"], params["A2"], params["A3"]), g)
    raise ConfigError(f"unknown potential family {fam!r}")


def _run_solve(cfg: RunConfig) -> ResultTable:
    g = cfg.geometry()
    spec = _build_family_spec(cfg, g)
    labels = ModeLabels(cfg.options["n_xi"], cfg.options["n_eta"])
    s = _settings_from(cfg.options)
    sol = bispectral_solve(spec, labels=labels, s=s)
    d = sol.diagnostics
    return ResultTable(
        columns=["a", "R", "m", "n_xi", "n_eta", "E", "lambda",
                 "residual_H", "residual_K", "status"],
        rows=[[g.a, g.R, sol.constants.m, labels.n_xi, labels.n_eta,
               sol.E, sol.lam, d.get("residual_H"), d.get("residual_K"), "ok"]])


def _run_curve(cfg: RunConfig) -> ResultTable:
    s = _settings_from(cfg.options)
    labels = ModeLabels(cfg.options["n_xi"], cfg.options["n_eta"])
    rows = potential_curve(cfg.options["Z1"], cfg.options["Z2"],
                           cfg.options["m"], labels,
                           [float(r) for r in cfg.options["R_values"]],
                           s=s, workers=cfg.options.get("workers", 1))
    cols = ["R", "a", "m", "n_xi", "n_eta", "E_electronic", "E_total",
            "lambda", "residual_H", "residual_K", "status"]
    return ResultTable(columns=cols, rows=[[r[c] for c in cols] for r in rows])


_VERIFY_CHECKS = ("laplacian_z", "laplacian_r2", "commutator_coulomb",
                  "commutator_pt2d", "commutator_sw", "commutator_nonseparable",
                  "gauge_m0", "gauge_m1", "gauge_m2", "e3", "periodicity")


def _run_verify(cfg: RunConfig) -> ResultTable:
    g = cfg.geometry()
    checks = cfg.options.get("checks", list(_VERIFY_CHECKS))
    grids = cfg.options.get("grids", [65, 129, 257])
    rows = []
    for check in checks:
        if check not in _VERIFY_CHECKS:
            raise ConfigError(f"unknown verify check {check!r}")
        rows.extend(_one_verify_check(check, g, grids))
    return ResultTable(
        columns=["check", "h", "residual_l2", "residual_max", "est_order"],
        rows=rows)


def _one_verify_check(check: str, g: Geometry, grids) -> list:
    rows = []
    if check in ("laplacian_z", "laplacian_r2"):
        prev = None
        for n in grids:
            grid = _ops.make_grid("alpha-beta", n, n, 2.4, u_min=0.4,
                                  v_min=0.3, v_max=np.pi - 0.3)
            A, B = grid.mesh()
            if check == "laplacian_z":
                f = g.a * np.cosh(A) * np.cos(B)
                target = 0.0
            else:
                f = g.a ** 2 * (np.sinh(A) ** 2 * np.sin(B) ** 2
                                + np.cosh(A) ** 2 * np.cos(B) ** 2)
                target = 6.0
            lap = _ops.apply_laplacian_3d(g, 0, _ops.GridFunction2D(grid, f))
            mask = grid.interior()
            res = lap.values[mask] - target
            l2 = float(np.sqrt(np.mean(res ** 2)))
            mx = float(np.max(np.abs(res)))
            order = None if prev is None else float(np.log2(prev / l2))
            rows.append([check, grid.hu, l2, mx, order])
            prev = l2
        return rows
    if check.startswith("commutator"):
        spec_map = {
            "commutator_coulomb": (coulomb_two_center(1.0, 0.7, 1, g), 1, None,
                                   (0.4, np.pi - 0.4)),
            "commutator_pt2d": (pt_exactly_solvable_2d(-2.0, 0.1, 0.0, 0.15, g),
                                0, None, (0.4, np.pi - 0.4)),
            "commutator_sw": (sw_spec(SWParams(0.7, 0.3, 0.2), g), 0, None,
                              (0.35, 1.30)),
            "commutator_nonseparable": (coulomb_two_center(1.0, 0.7, 1, g), 1,
                                        lambda xi, eta: xi * eta,
                                        (0.4, np.pi - 0.4)),
        }
        spec, m, extra, (v0, v1) = spec_map[check]
        prev = None
        for n in grids:
            grid = _ops.make_grid("alpha-beta", n, n, 2.8, u_min=0.3,
                                  v_min=v0, v_max=v1)
            psi = _ops.gaussian_function(grid)
            rep = _ops.commutator_residual(spec, m, 2, psi, extra_potential=extra)
            order = None if prev is None else float(np.log2(prev / rep.residual_l2))
            rows.append([check, rep.h, rep.residual_l2, rep.residual_max, order])
            prev = rep.residual_l2
        return rows
    if check.startswith("gauge"):
        m = int(check[-1])
        spec = coulomb_two_center(1.0, 0.7, m, g, include_azimuthal=False)
        prev = None
        for n in grids:
            grid = _ops.make_grid("alpha-beta", n, n, 3.0)
            psi = _ops.bump_function(grid)
            rep = _ops.verify_gauge_reduction(spec, m, psi)
            order = None if prev is None else float(np.log2(prev / rep.residual_l2))
            rows.append([check, rep.h, rep.residual_l2, rep.residual_max, order])
            prev = rep.residual_l2
        return rows
    if check == "e3":
        spec = coulomb_two_center(1.0, 0.7, 0, g, include_azimuthal=False)
        rep = _ops.e3_consistency(spec, _ops.GaussianTestFunction())
        return [[check, 0.0, rep.residual_l2, rep.residual_max, None]]
    # periodicity
    out = []
    for name, spec in (
            ("coulomb", coulomb_two_center(1.0, 0.7, 1, g)),
            ("pt2d", pt_exactly_solvable_2d(1.0, 0.2, 0.3, 0.4, g)),
            ("sw", sw_spec(SWParams(0.5, 0.25, 0.1), g))):
        rep = verify_periodicity(spec)
        dev = max(rep["f_even_deviation"], rep["g_periodic_deviation"])
        out.append([f"periodicity_{name}", 0.0, dev, dev, None])
    return out


def _run_spectrum_1d(cfg: RunConfig) -> ResultTable:
    fam = cfg.options["family"]
    params = cfg.options["params"]
    count = cfg.options["count"]
    if fam == "pt-hyperbolic":
        p = PT1DParams(Ac=params.get("Ac", 0.0), As=params.get("As", 0.0))
        alg = _solv.pt_spectrum_algebraic(p, "hyperbolic")
        levels = list(alg.energies)[:count]
        meta = {"method": alg.method, "meta": {k: list(v) if isinstance(v, list) else v
                                               for k, v in alg.meta.items()}}
    elif fam == "pt-trigonometric":
        p = PT1DParams(Bc=params.get("Bc", 0.0), Bs=params.get("Bs", 0.0))
        alg = _solv.pt_spectrum_algebraic(p, "trigonometric", count=count)
        levels = list(alg.energies)
        meta = {"method": alg.method}
    elif fam == "numeric":
        dom = cfg.options.get("domain")
        if dom is None:
            raise ConfigError("family 'numeric' needs a 'domain'")
        V = _potential_from_params(params)
        sp = _solv.solve_1d_spectrum(V, tuple(dom),
                                     boundary=cfg.options.get("boundary", "decaying"),
                                     count=count)
        levels = list(sp.energies)
        meta = {"method": sp.method, "complete": sp.complete}
    else:
        raise ConfigError(f"unknown 1D family {fam!r}")
    table = ResultTable(columns=["index", "energy"],
                        rows=[[i, e] for i, e in enumerate(levels)],
                        meta={"family": fam, "params": params, **meta})
    return table


def _potential_from_params(params: dict):
    kind = params.get("kind")
    if kind == "pt-hyperbolic":
        return pt_hyperbolic(PT1DParams(Ac=params.get("Ac", 0.0),
                                        As=params.get("As", 0.0)))
    if kind == "pt-trigonometric":
        return pt_trigonometric(PT1DParams(Bc=params.get("Bc", 0.0),
                                           Bs=params.get("Bs", 0.0)))
    raise ConfigError(f"unknown numeric potential kind {params.get('kind')!r}")


def _run_qes(cfg: RunConfig) -> ResultTable:
    fam = cfg.options["family"]
    params = dict(cfg.options["params"])
    k = cfg.options["k"]
    q = QESParams(family=fam, k=k, **params)
    sector = _solv.qes_sector(q)
    V = qes_potential(q)
    dom = (0.1, 5.0) if fam.startswith("h") else (0.1, np.pi / 2 - 0.05)
    residuals = []
    for i in range(len(sector.values)):
        psi = _solv.sector_eigenfunction(q, sector, i)
        residuals.append(_solv.verify_solution(V, psi, sector.values[i], domain=dom))
    constraint = {kk: (list(vv) if isinstance(vv, (list, tuple)) else vv)
                  for kk, vv in sector.constraint.items()}
    return ResultTable(
        columns=["index", "level", "residual"],
        rows=[[i, float(sector.values[i]), residuals[i]]
              for i in range(len(sector.values))],
        meta={"family": fam, "params": params, "k": k,
              "constraint": json.loads(json.dumps(constraint, default=float)),
              "levels": [float(v) for v in sector.values],
              "residuals": residuals})


_RUNNERS = {
    "coords": _run_coords,
    "solve": _run_solve,
    "curve": _run_curve,
    "verify": _run_verify,
    "spectrum-1d": _run_spectrum_1d,
    "qes": _run_qes,
}


def run(cfg: RunConfig) -> tuple[ResultTable | None, int]:
    """Dispatch one validated config; returns (table, exit_code)."""
    try:
        table = _RUNNERS[cfg.subcommand](cfg)
    except ConfigError:
        raise
    except (BracketError, _solv.SectorClosureError, _solv.LevelAbsentError,
            RuntimeError) as exc:
        sys.stderr.write(f"error[numerical]: {exc}\n")
        return None, 2
    return table, 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="twocenter",
        description="separable two-center quantum eigenproblems")
    parser.add_argument("subcommand", choices=_SUBCOMMANDS)
    parser.add_argument("config", help="path to a JSON config file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                        help="override a config key (JSON-encoded value)")
    parser.add_argument("--format", choices=("csv", "json"), default=None)
    parser.add_argument("--output", default=None, metavar="PATH")
    args = parser.parse_args(argv)

    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        text = _apply_overrides(text, args.set)
        cfg = parse_config(text, subcommand=args.subcommand)
        if cfg.subcommand != args.subcommand:
            raise ConfigError(
                f"config subcommand {cfg.subcommand!r} != {args.subcommand!r}")
        if args.format:
            cfg = RunConfig(cfg.subcommand, cfg.options, args.format,
                            args.output or cfg.output)
        elif args.output:
            cfg = RunConfig(cfg.subcommand, cfg.options, cfg.fmt, args.output)
    except (OSError, ConfigError) as exc:
        sys.stderr.write(f"error[config]: {exc}\n")
        return 1

    try:
        table, code = run(cfg)
    except ConfigError as exc:
        sys.stderr.write(f"error[config]: {exc}\n")
        return 1
    if table is None:
        return code
    payload = table.payload_csv() if cfg.fmt == "csv" else table.payload_json()
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
