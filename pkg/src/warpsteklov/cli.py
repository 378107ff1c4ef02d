"""Batch front end: one JSON run configuration in, tables out.

A configuration names a ``command`` and carries everything the command
needs (base, fiber, warping or family, indices, mesh).  Example::

    {"command": "spectrum",
     "base": {"type": "interval", "L": 1},
     "fiber": {"type": "sphere", "n": 2},
     "warping": {"preset": "constant", "C": 1},
     "K": 10}

Outputs go to ``--out`` (default ``$WARPSTEKLOV_OUT`` or ``./out``):
``spectrum.csv``, ``bounds.json`` and ``sweep.csv`` depending on the command.
The exit status is nonzero iff an asserted report fails or an error occurs.
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import jsonschema

from .bounds import (HypothesisError, bound_basic, bound_const_chain, bound_interval, bound_lp,
                     const_asymptotics, improved_bound, stability_report)
from .families import (FamilySpec, blowup_sweep, conformal_check, make_hdelta,
                       saturation_sweep)
from .geometry import (Ball, FiberSpectrum, GeometryError, Interval, collar_bump, constant,
                       load_warping, piecewise_linear, ramp)
from .reports import CheckReport, write_csv, write_reports_json
from .spectrum import SpectrumError, check_kcompk0, steklov_spectrum
from .sturm import DEFAULT_MESH, SolverError, build_mesh

OUT_ENV = "WARPSTEKLOV_OUT"
COMMANDS = ("spectrum", "bounds", "asymptotics", "saturate", "blowup", "stability", "conformal")
BOUND_NAMES = ("basic", "const_chain", "lp", "interval", "improved", "kcompk0")

_pos = {"type": "number", "exclusiveMinimum": 0}
_pos_list = {"type": "array", "items": _pos, "minItems": 1}
_index = {"type": "integer", "minimum": 0}


def _typed(type_field, variants):
    """Object schema with a discriminator and per-variant required fields."""
    props = {type_field: {"enum": sorted(variants)}}
    for fields in variants.values():
        props.update(fields[0])
    return {
        "type": "object",
        "required": [type_field],
        "additionalProperties": False,
        "properties": props,
        "allOf": [{"if": {"properties": {type_field: {"const": name}}, "required": [type_field]},
                   "then": {"required": fields[1],
                            "propertyNames": {"enum": [type_field, *fields[0]]}}}
                  for name, fields in variants.items()],
    }


SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["command"],
    "properties": {
        "command": {"enum": list(COMMANDS)},
        "base": _typed("type", {
            "interval": ({"L": _pos}, ["L"]),
            "ball": ({"d": {"type": "integer", "minimum": 1}, "R": _pos}, ["d", "R"]),
        }),
        "fiber": _typed("type", {
            "sphere": ({"n": {"type": "integer", "minimum": 1}}, ["n"]),
            "circle": ({"radius": _pos}, []),
            "torus": ({"lengths": _pos_list}, ["lengths"]),
            "list": ({"n": {"type": "integer", "minimum": 1},
                      "eigenvalues": {"type": "array", "minItems": 1, "items": {
                "type": "array", "minItems": 2, "maxItems": 2,
                "prefixItems": [{"type": "number", "minimum": 0},
                                {"type": "integer", "minimum": 1}]}}}, ["n", "eigenvalues"]),
        }),
        "warping": _typed("preset", {
            "constant": ({"C": _pos}, []),
            "ramp": ({"peak": _pos}, ["peak"]),
            "collar_bump": ({"width": _pos, "height": _pos}, ["width", "height"]),
            "piecewise_linear": ({"knots": {"type": "array", "items": {"type": "number"},
                                            "minItems": 2},
                                  "values": {"type": "array", "items": _pos, "minItems": 2}},
                                 ["knots", "values"]),
            "file": ({"path": {"type": "string", "minLength": 1}}, ["path"]),
        }),
        "family": _typed("kind", {
            "hdelta": ({"C": {"type": "number", "minimum": 1}, "delta": _pos}, ["C", "delta"]),
            "heps": ({"p": {"type": "number"}, "budget": _pos, "eps": _pos},
                     ["p", "budget", "eps"]),
        }),
        "K": {"type": "integer", "minimum": 1},
        "k": _index,
        "p": {"type": "number"},
        "C": {"type": "number", "minimum": 1},
        "C_list": {"type": "array", "items": {"type": "number", "minimum": 1}, "minItems": 1},
        "delta_list": _pos_list,
        "eps_list": _pos_list,
        "budget": _pos,
        "q": {"type": "number"},
        "r": _pos,
        "D": {"oneOf": [_pos, {"type": "array", "items": {"type": "number"},
                               "minItems": 2, "maxItems": 2}]},
        "bounds": {"type": "array", "items": {"enum": list(BOUND_NAMES)}, "minItems": 1,
                   "uniqueItems": True},
        "mesh_N": {"type": "integer", "minimum": 8},
        "per_piece": {"type": "integer", "minimum": 0},
        "tolerance": _pos,
        "output": {"type": "string", "minLength": 1},
    },
}

REQUIRED = {
    "spectrum": ["base", "fiber", "K"],
    "bounds": ["base", "fiber", "k"],
    "asymptotics": ["base", "fiber", "k", "C_list"],
    "saturate": ["base", "fiber", "k", "C", "delta_list"],
    "blowup": ["base", "fiber", "p", "budget"],
    "stability": ["base", "fiber", "k", "q", "r"],
    "conformal": ["base", "fiber", "K"],
}
SCHEMA["allOf"] = [{"if": {"properties": {"command": {"const": c}}, "required": ["command"]},
                    "then": {"required": req}} for c, req in REQUIRED.items()]
NEEDS_WARPING = ("spectrum", "bounds", "conformal")


class ConfigError(ValueError):
    """Aggregated, field-addressed configuration errors."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class RunConfig:
    command: str
    base: object
    fiber: Optional[FiberSpectrum]
    warping: object = None
    family: Optional[FamilySpec] = None
    params: dict = field(default_factory=dict)
    mesh_N: int = DEFAULT_MESH
    tolerance: float = 1e-8
    output: Optional[str] = None

    @property
    def n(self) -> int:
        return self.fiber.dim_n


def _address(err) -> str:
    path = ".".join(str(p) for p in err.absolute_path)
    if err.validator == "required":
        m = re.match(r"'([^']+)'", err.message)
        if m:
            return (path + "." if path else "") + m.group(1)
    return path or "<config>"


def _message(err) -> str:
    if err.validator == "required":
        return "required field is missing"
    if err.validator == "additionalProperties":
        return err.message.replace("Additional properties are not allowed", "unknown key")
    if err.validator == "enum" and "propertyNames" in err.schema_path:
        return f"unknown key {err.instance!r} for this type"
    return err.message


def _structural_errors(data) -> list[str]:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errs = sorted(v.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    out = []
    for e in errs:
        if e.validator in ("if", "allOf"):
            continue
        line = f"{_address(e)}: {_message(e)}"
        if line not in out:
            out.append(line)
    return out


def _make_base(d):
    if d["type"] == "interval":
        return Interval(float(d["L"]))
    return Ball(int(d["d"]), float(d["R"]))


def _make_fiber(d):
    t = d["type"]
    if t == "sphere":
        return FiberSpectrum.sphere(d["n"])
    if t == "circle":
        return FiberSpectrum.circle(d.get("radius", 1.0))
    if t == "torus":
        return FiberSpectrum.torus(d["lengths"])
    return FiberSpectrum.from_list(d["n"], d["eigenvalues"])


def _make_warping(d, base, root="."):
    p = d["preset"]
    if p == "constant":
        return constant(base, d.get("C", 1.0))
    if p == "ramp":
        return ramp(base, d["peak"])
    if p == "collar_bump":
        return collar_bump(base, d["width"], d["height"])
    if p == "piecewise_linear":
        h = piecewise_linear(d["knots"], d["values"])
        h.check_domain(base)
        return h
    path = d["path"] if os.path.isabs(d["path"]) else os.path.join(root, d["path"])
    return load_warping(path, base)


def _gates(cfg: RunConfig, data) -> list[str]:
    """Hypotheses of the requested evaluations, checked before any solve."""
    errs = []
    c, n = cfg.command, cfg.n
    P = cfg.params
    if c in NEEDS_WARPING or (c == "stability" and "delta_list" not in P):
        if cfg.warping is None and cfg.family is None:
            errs.append("warping: one of 'warping' or 'family' is required")
    if "warping" in data and "family" in data:
        errs.append("family: give either 'warping' or 'family', not both")
    if c == "bounds":
        names = P.get("bounds", ["basic"])
        if "lp" in names:
            if n < 3:
                errs.append("bounds.lp: the L^p bound requires n ≥ 3")
            elif "p" not in P:
                errs.append("p: required by the L^p bound")
            elif P["p"] < n - 2:
                errs.append(f"p: the L^p bound requires p ≥ n - 2 = {n - 2}")
        if "interval" in names:
            if not isinstance(cfg.base, Interval):
                errs.append("bounds.interval: requires an interval base")
            if n < 2:
                errs.append("bounds.interval: requires n ≥ 2")
            if "p" not in P:
                errs.append("p: required by the interval bounds")
            elif P["p"] < 1:
                errs.append("p: requires p ≥ 1")
        if "const_chain" in names and "C" not in P:
            errs.append("C: required by the constant-comparison chain")
        if P.get("k", 1) < 1 and any(b != "basic" for b in names):
            errs.append("k: k = 0 is only meaningful for the basic bound")
    if c == "saturate" and n != 2:
        errs.append("fiber: the saturation sweep requires n = 2")
    if c == "stability" and n != 2:
        errs.append("fiber: the stability estimate requires n = 2")
    if c in ("saturate", "stability", "asymptotics") and P.get("k", 1) < 1:
        errs.append("k: requires k ≥ 1")
    if c == "blowup":
        p = P["p"]
        if p < 1:
            errs.append("p: requires p ≥ 1")
        if n < 3:
            errs.append("fiber: the blow-up sweep requires n ≥ 3")
        elif p >= n - 2:
            errs.append(f"p: the blow-up sweep requires p < n - 2 = {n - 2}")
        if not isinstance(cfg.base, Ball):
            errs.append("base: the blow-up sweep requires a ball base")
    if c == "conformal":
        if not isinstance(cfg.base, Interval):
            errs.append("base: the conformal check requires an interval base")
        if cfg.fiber.kind != "circle":
            errs.append("fiber: the conformal check requires a circle fiber")
    if "delta_list" in P and c in ("saturate", "stability"):
        C = P.get("C")
        if C is None:
            errs.append("C: required with delta_list")
        else:
            for i, d in enumerate(P["delta_list"]):
                try:
                    make_hdelta(cfg.base, C, d)
                except (HypothesisError, GeometryError) as e:
                    errs.append(f"delta_list.{i}: {e}")
    if cfg.family is not None and cfg.family.kind == "heps":
        if not isinstance(cfg.base, Ball):
            errs.append("family: h_eps requires a ball base")
        if cfg.family.params["p"] < 1:
            errs.append("family.p: requires p ≥ 1")
    return errs


def validate(text, root: str = ".") -> RunConfig:
    """Parse and check a configuration; raises :class:`ConfigError` listing every problem."""
    try:
        data = json.loads(text) if isinstance(text, (str, bytes)) else text
    except json.JSONDecodeError as e:
        raise ConfigError([f"<config>: invalid JSON ({e})"]) from None
    errs = _structural_errors(data)
    if errs:
        raise ConfigError(errs)
    objs = {}
    for key, make in (("base", _make_base), ("fiber", _make_fiber)):
        if key in data:
            try:
                objs[key] = make(data[key])
            except (GeometryError, ValueError) as e:
                errs.append(f"{key}: {e}")
    if "base" in objs and "warping" in data:
        try:
            objs["warping"] = _make_warping(data["warping"], objs["base"], root)
        except OSError as e:
            errs.append(f"warping.path: cannot read ({e.strerror or e})")
        except (GeometryError, ValueError) as e:
            errs.append(f"warping: {e}")
    family = None
    if "family" in data and "base" in objs:
        fam = dict(data["family"])
        family = FamilySpec(fam.pop("kind"), objs["base"], fam)
        if family.kind == "hdelta":
            try:
                make_hdelta(objs["base"], **fam)
            except (HypothesisError, GeometryError) as e:
                errs.append(f"family: {e}")
    if errs:
        raise ConfigError(errs)
    skip = {"command", "base", "fiber", "warping", "family", "mesh_N", "tolerance", "output"}
    cfg = RunConfig(command=data["command"], base=objs.get("base"), fiber=objs.get("fiber"),
                    warping=objs.get("warping"), family=family,
                    params={k: v for k, v in data.items() if k not in skip},
                    mesh_N=data.get("mesh_N", DEFAULT_MESH),
                    tolerance=data.get("tolerance", 1e-8), output=data.get("output"))
    errs = _gates(cfg, data)
    if errs:
        raise ConfigError(errs)
    return cfg


# ---------------------------------------------------------------------------
# Commands

def _warping(cfg):
    return cfg.warping if cfg.warping is not None else cfg.family.build()


def _cmd_spectrum(cfg, pool, out):
    h = _warping(cfg)
    spec = steklov_spectrum(cfg.base, h, cfg.fiber, cfg.params["K"],
                            build_mesh(cfg.base, h, cfg.mesh_N), tol=cfg.tolerance)
    spec.to_csv(os.path.join(out, "spectrum.csv"))
    vals = spec.values()
    lines = [f"sigma_{k} = {v:.12g}" for k, v in enumerate(vals[:cfg.params["K"] + 1])]
    return [], lines


def _default_D(base):
    return (0.25 * base.L, 0.75 * base.L) if isinstance(base, Interval) else 0.5 * base.R


def _cmd_bounds(cfg, pool, out):
    h = _warping(cfg)
    P = cfg.params
    k = P["k"]
    mesh = build_mesh(cfg.base, h, cfg.mesh_N)

    def one(name):
        if name == "basic":
            return [bound_basic(cfg.base, h, cfg.fiber, k, mesh)]
        if name == "const_chain":
            return list(bound_const_chain(cfg.base, h, cfg.fiber, k, P["C"], mesh))
        if name == "lp":
            return [bound_lp(cfg.base, h, cfg.fiber, k, P["p"], mesh)]
        if name == "interval":
            return bound_interval(h, cfg.fiber, k, P["p"], cfg.base.L, mesh)
        if name == "improved":
            D = P.get("D", _default_D(cfg.base))
            D = tuple(D) if isinstance(D, list) else D
            return [improved_bound(cfg.base, h, cfg.fiber, k, D, mesh_N=cfg.mesh_N)]
        spec = steklov_spectrum(cfg.base, h, cfg.fiber, k, mesh, tol=cfg.tolerance)
        return [check_kcompk0(spec, k)]

    reports = [r for group in pool.map(one, P.get("bounds", ["basic"])) for r in group]
    write_reports_json(os.path.join(out, "bounds.json"), reports)
    return reports, [str(r) for r in reports]


def _write_sweep(out, rows):
    header = list(rows[0])
    write_csv(os.path.join(out, "sweep.csv"), header, [[r[c] for c in header] for r in rows])


def _checks(result):
    return [CheckReport(name, ok) for name, ok in result.checks.items()]


def _cmd_asymptotics(cfg, pool, out):
    P = cfg.params
    rows = const_asymptotics(cfg.base, cfg.fiber, P["k"], sorted(P["C_list"]), cfg.mesh_N)
    _write_sweep(out, rows)
    devs = [r["deviation"] for r in rows]
    checks = [CheckReport("deviation_decreasing",
                          all(b < a for a, b in zip(devs, devs[1:])))]
    write_reports_json(os.path.join(out, "bounds.json"), checks)
    lines = [f"C={r['C']:g}: C^2 sigma = {r['C2_sigma_k']:.12g} (limit {r['limit']:.12g})"
             for r in rows]
    return checks, lines + [str(c) for c in checks]


def _cmd_saturate(cfg, pool, out):
    P = cfg.params
    res = saturation_sweep(cfg.base, cfg.fiber, P["k"], [P["C"]], P["delta_list"], cfg.mesh_N,
                           per_piece=P.get("per_piece", 64), map_fn=pool.map)
    _write_sweep(out, res.rows)
    checks = _checks(res)
    write_reports_json(os.path.join(out, "bounds.json"), checks)
    lines = [f"delta={r['delta']:g}: sigma_{P['k']} = {r['sigma_k']:.12g} "
             f"({r['ratio_to_ceiling']:.6f} of the ceiling)" for r in res.rows]
    return checks, lines + [str(c) for c in checks]


def _cmd_blowup(cfg, pool, out):
    P = cfg.params
    res = blowup_sweep(cfg.base, cfg.fiber, P["p"], P["budget"], P.get("eps_list"), cfg.mesh_N,
                       per_piece=P.get("per_piece", 64), map_fn=pool.map)
    _write_sweep(out, res.rows)
    checks = _checks(res)
    write_reports_json(os.path.join(out, "bounds.json"), checks)
    lines = [f"eps={r['eps']:g}: sigma_1 = {r['sigma_1']:.12g}" for r in res.rows]
    return checks, lines + [str(c) for c in checks]


def _cmd_stability(cfg, pool, out):
    P = cfg.params
    if "delta_list" in P:
        members = [(d, make_hdelta(cfg.base, P["C"], d)) for d in P["delta_list"]]
    else:
        members = [(None, _warping(cfg))]

    def one(item):
        _, h = item
        mesh = build_mesh(cfg.base, h, cfg.mesh_N, per_piece=P.get("per_piece", 64))
        return stability_report(cfg.base, h, cfg.fiber, P["k"], P["q"], P["r"], mesh)

    reports = list(pool.map(one, members))
    rows = [{"delta": "" if d is None else d, **{k: v for k, v in r.to_dict().items()
                                                 if k != "name"}}
            for (d, _), r in zip(members, reports)]
    _write_sweep(out, rows)
    lhs = [r.lhs for r in reports]
    checks = [CheckReport(f"stability[{i}]", r.verdict) for i, r in enumerate(reports)]
    checks.append(CheckReport("ball_integral_nondecreasing",
                              all(b >= a * (1 - 1e-12) for a, b in zip(lhs, lhs[1:])),
                              observational=True))
    write_reports_json(os.path.join(out, "bounds.json"), checks)
    lines = [f"deficit={r.deficit:.6g}: int h^2 = {r.lhs:.12g} >= {r.rhs:.12g}" for r in reports]
    return checks, lines + [str(c) for c in checks]


def _cmd_conformal(cfg, pool, out):
    res = conformal_check(cfg.base.L, _warping(cfg), cfg.fiber, K=cfg.params["K"],
                          mesh_N=cfg.mesh_N)
    rows = [{"k": i, "warped": a, "flat": b} for i, (a, b) in
            enumerate(zip(res["warped"], res["flat"]))]
    _write_sweep(out, rows)
    checks = [CheckReport("conformal_agreement", res["verdict"],
                          note=f"max rel err {res['max_rel_err']:.3g}, t(L) = {res['t_L']:.12g}")]
    write_reports_json(os.path.join(out, "bounds.json"), checks)
    return checks, [f"k={r['k']}: {r['warped']:.12g} vs {r['flat']:.12g}" for r in rows] + \
        [str(c) for c in checks]


HANDLERS = {"spectrum": _cmd_spectrum, "bounds": _cmd_bounds, "asymptotics": _cmd_asymptotics,
            "saturate": _cmd_saturate, "blowup": _cmd_blowup, "stability": _cmd_stability,
            "conformal": _cmd_conformal}


def run(cfg: RunConfig, out: Optional[str] = None, workers: int = 1, quiet: bool = False,
        stream=None) -> int:
    """Execute a validated configuration; returns the exit status."""
    stream = sys.stdout if stream is None else stream
    out = out or cfg.output or os.environ.get(OUT_ENV) or "out"
    os.makedirs(out, exist_ok=True)
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        reports, lines = HANDLERS[cfg.command](cfg, pool, out)
    failed = [r for r in reports if r.asserted and not r.verdict]
    if not quiet:
        for line in lines:
            print(line, file=stream)
        asserted = [r for r in reports if r.asserted]
        observed = len(reports) - len(asserted)
        tail = f", {observed} observational" if observed else ""
        if reports:
            print(f"{cfg.command}: {len(asserted) - len(failed)}/{len(asserted)} asserted "
                  f"reports pass{tail}; outputs in {out}", file=stream)
        else:
            print(f"{cfg.command}: outputs in {out}", file=stream)
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="warpsteklov", description=__doc__.split("\n")[0])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./out)")
    ap.add_argument("--workers", type=int, default=1, help="worker threads for sweeps")
    ap.add_argument("--mesh", type=int, help="override mesh_N")
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("--workers: must be >= 1", file=sys.stderr)
        return 2
    try:
        with open(args.config) as fh:
            text = fh.read()
    except OSError as e:
        print(f"--config: cannot read {args.config}: {e.strerror}", file=sys.stderr)
        return 2
    try:
        cfg = validate(text, root=os.path.dirname(os.path.abspath(args.config)))
        if args.mesh is not None:
            if args.mesh < 8:
                raise ConfigError(["--mesh: must be >= 8"])
            cfg.mesh_N = args.mesh
    except ConfigError as e:
        for line in e.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    try:
        return run(cfg, args.out, args.workers, args.quiet)
    except SolverError as e:
        print(f"solver error at (lambda={e.lam}, mu={e.mu}, mesh={e.mesh}): {e}",
              file=sys.stderr)
        return 3
    except (HypothesisError, GeometryError, SpectrumError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
