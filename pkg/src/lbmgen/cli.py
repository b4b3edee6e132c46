"""Command-line interface: derive, flops, emit and simulate from a YAML config.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

import jsonschema
import numpy as np
import yaml

from .equilibria import EquilibriumSpec
from .kernel import (
    UBB, BoundaryMode, Field, Layout, NoSlip, StreamingPattern, emit, lower, lower_boundary,
    split_inner_loop,
)
from .lattice import SUPPORTED, UnknownStencilError, builtin
from .methods import (
    NewtonConvergenceError, assemble_collision_rule, create_cumulant, create_kbc, create_mrt,
    create_smagorinsky_srt, create_srt, create_trt, method_tableau,
)
from .methods.entropic import OMEGA_S
from .refsim import (
    ScenarioError, SimulationDiverged, WallSpec, couette, couette_deviation, fit_viscosity,
    lid_driven_cavity, run, taylor_green, write_snapshot,
)
from .refsim.scenarios import Scenario, ScenarioName
from .refsim.sim import PATTERN_FAMILIES
from .simplify import STRATEGY_ORDER, Strategy, render_reports, run_strategy, select_best
from .symexpr import Symbol

__all__ = [
    "CONFIG_SCHEMA", "ConfigError", "load_config", "validate_config", "build_method",
    "build_rule", "cmd_derive", "cmd_flops", "cmd_emit", "cmd_simulate", "main",
]

_RATE = {"oneOf": [{"type": "number"}, {"type": "string", "pattern": r"^[A-Za-z_][A-Za-z0-9_]*$"}]}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "lbmgen method configuration",
    "type": "object",
    "additionalProperties": False,
    "required": ["stencil", "method"],
    "properties": {
        "stencil": {"type": "string"},
        "method": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "rates"],
            "properties": {
                "kind": {"enum": ["srt", "trt", "mrt", "cumulant"]},
                "weighted": {"type": "boolean"},
                "rates": {"oneOf": [
                    _RATE,
                    {"type": "object", "additionalProperties": False, "required": ["smagorinsky"],
                     "properties": {"smagorinsky": {
                         "type": "object", "additionalProperties": False,
                         "required": ["C_S", "nu0"],
                         "properties": {"C_S": _RATE, "nu0": _RATE}}}},
                    {"type": "object", "additionalProperties": False, "required": ["kbc"],
                     "properties": {"kbc": {
                         "type": "object", "additionalProperties": False,
                         "properties": {"partition": {"enum": ["default"]},
                                        "omega_s": _RATE}}}},
                    {"type": "object", "additionalProperties": False, "required": ["even", "odd"],
                     "properties": {"even": _RATE, "odd": _RATE}},
                    {"type": "object", "minProperties": 1,
                     "propertyNames": {"pattern": r"^(conserved|shear|bulk|[0-9]+)$"},
                     "additionalProperties": _RATE},
                ]},
            },
        },
        "equilibrium": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "compressible": {"type": "boolean"},
                "order": {"enum": [1, 2, 3]},
                "continuous": {"type": "boolean"},
            },
        },
        "streaming": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "pattern": {"enum": sorted(PATTERN_FAMILIES) + ["collide-only"]},
                "layout": {"enum": ["soa", "aos"]},
                "split_block": {"type": "integer", "minimum": 1},
            },
        },
        "boundaries": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"enum": [m.value for m in BoundaryMode]},
                "walls": {"type": "array", "items": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "face"],
                    "properties": {
                        "kind": {"enum": ["noslip", "ubb"]},
                        "face": {"enum": ["x-", "x+", "y-", "y+", "z-", "z+"]},
                        "velocity": {"type": "array", "items": {"type": "number"}},
                        "name": {"type": "string", "pattern": r"^[A-Za-z_][A-Za-z0-9_]*$"},
                    },
                }},
            },
        },
        "simplify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"strategy": {"enum": ["auto"] + [s.value for s in Strategy]}},
        },
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": [n.value for n in ScenarioName]},
                "shape": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "steps": {"type": "integer", "minimum": 0},
                "params": {"type": "object", "additionalProperties": {"type": "number"}},
                "sample_every": {"type": "integer", "minimum": 1},
                "amplitude": {"type": "number"},
                "lid": {"type": "number"},
                "reynolds": {"type": "number", "exclusiveMinimum": 0},
                "steady_tol": {"type": "number", "exclusiveMinimum": 0},
                "backend": {"enum": ["interp", "c"]},
                "entropy": {"type": "boolean"},
            },
        },
    },
}


class ConfigError(ValueError):
    pass


def _key_path(err: jsonschema.ValidationError) -> str:
    parts = [str(p) for p in err.absolute_path]
    if "propertyNames" in err.schema_path:
        parts.append(str(err.instance))
    elif err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        if extra:
            parts.append(extra[0])
    return ".".join(parts) or "<root>"


def _type_mismatch(err) -> bool:
    return err.validator == "type" or (err.validator == "oneOf" and all(_type_mismatch(c) for c in err.context))


def _closest_branch(err):
    """Error from the oneOf branch that fits the value best: branches that
    reject the value's type are skipped, then the fewest errors wins."""
    branches: dict = {}
    for c in err.context:
        branches.setdefault(c.relative_schema_path[0], []).append(c)
    usable = [b for b in branches.values() if not (len(b) == 1 and _type_mismatch(b[0]))]
    if not usable:
        return None
    best = min(usable, key=len)
    return min(best, key=lambda c: c.validator in ("required", "type"))


def validate_config(cfg) -> dict:
    """Schema check; errors name the offending key path."""
    if not isinstance(cfg, dict):
        raise ConfigError("<root>: configuration must be a mapping")
    v = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(v.iter_errors(cfg), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        e = errors[0]
        while e.context and _closest_branch(e) is not None:
            e = _closest_branch(e)
        raise ConfigError(f"{_key_path(e)}: {e.message}")
    if cfg["stencil"].upper() not in SUPPORTED:
        raise ConfigError(f"stencil: unknown stencil {cfg['stencil']!r}; supported: {', '.join(SUPPORTED)}")
    return cfg


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    return validate_config(cfg)


def _value(v):
    if isinstance(v, str):
        return Symbol(v)
    if isinstance(v, bool):
        raise ConfigError(f"rate {v!r} is not a number or symbol name")
    return Fraction(str(v)) if isinstance(v, float) else Fraction(v)


def _eq_spec(cfg) -> EquilibriumSpec:
    e = cfg.get("equilibrium", {})
    return EquilibriumSpec(compressible=e.get("compressible", True),
                           truncation_order=e.get("order", 2),
                           continuous=e.get("continuous", True))


def _group_rates(rates) -> dict:
    if not isinstance(rates, dict) or {"even", "odd", "smagorinsky", "kbc"} & set(rates):
        raise ConfigError("method.rates: expected a map from moment groups to rates")
    return {(int(k) if str(k).isdigit() else k): _value(v) for k, v in rates.items()}


def build_method(cfg):
    """MethodSpec described by a validated config."""
    s = builtin(cfg["stencil"])
    m = cfg["method"]
    kind, rates, eq = m["kind"], m["rates"], _eq_spec(cfg)
    try:
        if kind == "srt":
            if isinstance(rates, dict) and "smagorinsky" in rates:
                sm = rates["smagorinsky"]
                return create_smagorinsky_srt(s, _value(sm["nu0"]), _value(sm["C_S"]), eq)
            if isinstance(rates, dict) and "kbc" in rates:
                return create_kbc(s, _value(rates["kbc"].get("omega_s", "omega_s")), eq)
            if isinstance(rates, dict):
                raise ConfigError("method.rates: srt takes a single rate or a rate model")
            return create_srt(s, _value(rates), eq)
        if kind == "trt":
            if not (isinstance(rates, dict) and set(rates) == {"even", "odd"}):
                raise ConfigError("method.rates: trt needs 'even' and 'odd'")
            return create_trt(s, _value(rates["even"]), _value(rates["odd"]), eq)
        if kind == "mrt":
            return create_mrt(s, _group_rates(rates), m.get("weighted", True), eq)
        return create_cumulant(s, _group_rates(rates), eq)
    except KeyError as exc:
        raise ConfigError(f"method.rates: {exc.args[0]}") from exc


def _strategy(cfg, override):
    name = override or cfg.get("simplify", {}).get("strategy", "auto")
    return None if name == "auto" else Strategy(name)


def build_rule(cfg, strategy=None):
    """``(simplified rule, report)``; ``strategy=None`` selects the cheapest."""
    rule = assemble_collision_rule(build_method(cfg))
    if strategy is None:
        return select_best(rule)
    return run_strategy(rule, strategy)


def cmd_derive(cfg) -> str:
    return method_tableau(build_method(cfg))


def _equivalence_error(a_rule, b_rule, seed: int, n: int = 100) -> float:
    rng = np.random.default_rng(seed)
    s = a_rule.stencil
    w = np.array([float(x) for x in s.weights])
    f = (w[:, None] * (1 + 0.05 * rng.standard_normal((s.q, n))))
    params = {p.name: rng.uniform(0.8, 1.6) for p in a_rule.parameters}
    a = a_rule.evaluate(f, params)
    b = b_rule.evaluate(f, {p.name: params[p.name] for p in b_rule.parameters})
    return float(np.max(np.max(np.abs(a - b), axis=0) / np.max(np.abs(a), axis=0)))


def cmd_flops(cfg, strategy=None, seed: int = 0) -> str:
    """Per-strategy, per-stage FLOP tables plus the selected strategy."""
    rule = assemble_collision_rule(build_method(cfg))
    best, report = select_best(rule)
    chosen = report.strategy
    if strategy is not None:
        chosen = strategy
        best = run_strategy(rule, strategy)[0]
    text = render_reports(report.alternatives, chosen)
    err = _equivalence_error(rule, best, seed)
    return text + f"\nequivalence (seed {seed}, 100 states): max normwise relative error {err:.3e}"


def _fields(s, layout):
    return (Field("src", s.d, s.q, layout), Field("dst", s.d, s.q, layout),
            Field("flags", s.d, 1, dtype="uint"))


def _wall_specs(cfg, s):
    walls = []
    for i, w in enumerate(cfg.get("boundaries", {}).get("walls", [])):
        axis = "xyz".index(w["face"][0])
        if axis >= s.d:
            raise ConfigError(f"boundaries.walls.{i}.face: {w['face']} does not exist in {s.d}D")
        region = [slice(None)] * s.d
        region[axis] = 0 if w["face"][1] == "-" else -1
        name = w.get("name", f"{w['kind']}_{w['face'][0]}{'lo' if w['face'][1] == '-' else 'hi'}")
        if w["kind"] == "ubb":
            vel = w.get("velocity", [0.0] * s.d)
            if len(vel) != s.d:
                raise ConfigError(f"boundaries.walls.{i}.velocity: needs {s.d} components")
            bc = UBB([Fraction(str(v)) for v in vel], name=name)
        else:
            bc = NoSlip(name)
        walls.append(WallSpec(bc, tuple(region)))
    return walls


def cmd_emit(cfg, out: str, strategy=None) -> list:
    """Write collision and boundary kernel sources with ABI descriptions."""
    rule, _ = build_rule(cfg, strategy)
    s = rule.stencil
    st = cfg.get("streaming", {})
    layout = Layout(st.get("layout", "soa"))
    src, dst, flags = _fields(s, layout)
    family = st.get("pattern", "pull")
    sweeps = (StreamingPattern.COLLIDE_ONLY,) if family == "collide-only" else PATTERN_FAMILIES[family]
    mode = BoundaryMode(cfg.get("boundaries", {}).get("mode", "index-list"))
    walls = _wall_specs(cfg, s)
    if walls and family == "collide-only":
        raise ConfigError("boundaries: collide-only kernels cannot carry boundaries")
    os.makedirs(out, exist_ok=True)
    paths = []
    for pat in sweeps:
        compiled = []
        if mode is BoundaryMode.COMPILED_IN:
            compiled = [lower_boundary(w.bc, pat, mode, s, src, flags, 1 << (i + 1))
                        for i, w in enumerate(walls)]
        k = lower(rule, pat, src, dst if pat.two_array else None, boundaries=compiled)
        if st.get("split_block"):
            k = split_inner_loop(k, block=st["split_block"])
        paths += emit(k).write(out)
        if mode is not BoundaryMode.COMPILED_IN:
            for i, w in enumerate(walls):
                bk = lower_boundary(w.bc, pat, mode, s, src, flags, 1 << (i + 1),
                                    name=f"{w.bc.name}_{pat.value.replace('-', '_')}")
                paths += emit(bk).write(out)
    return paths


def _shear_rate(cfg, params):
    """Numeric shear relaxation rate of the configured method, if known."""
    rates = cfg["method"]["rates"]
    if isinstance(rates, dict):
        if "kbc" in rates:
            rates = rates["kbc"].get("omega_s", OMEGA_S.name)
        elif "smagorinsky" in rates:
            nu0 = rates["smagorinsky"]["nu0"]
            nu0 = params.get(nu0) if isinstance(nu0, str) else nu0
            return None if nu0 is None else 1.0 / (3.0 * nu0 + 0.5)
        else:
            rates = rates.get("even", rates.get("shear"))
    if isinstance(rates, str):
        return params.get(rates)
    return float(rates) if isinstance(rates, (int, float)) else None


def _scenario(cfg, rule) -> Scenario:
    sc = cfg.get("scenario")
    if sc is None:
        raise ConfigError("scenario: simulate needs a scenario section")
    name = ScenarioName(sc["name"])
    params = dict(sc.get("params", {}))
    missing = [p.name for p in rule.parameters if p.name not in params]
    if missing:
        raise ConfigError(f"scenario.params: missing value(s) for {', '.join(missing)}")
    s = rule.stencil
    kw = dict(pattern=cfg.get("streaming", {}).get("pattern", "pull"),
              boundary_mode=cfg.get("boundaries", {}).get("mode", "index-list"),
              backend=sc.get("backend", "interp"), with_entropy=sc.get("entropy", False))
    if kw["pattern"] == "collide-only":
        raise ConfigError("streaming.pattern: simulations need a streaming pattern")
    if "sample_every" in sc:
        kw["sample_every"] = sc["sample_every"]
    shape = sc.get("shape")
    n = shape[0] if shape else None
    if shape and (len(shape) != s.d or len(set(shape)) != 1):
        raise ConfigError(f"scenario.shape: expected {s.d} equal extents")
    if cfg["method"]["kind"] == "srt" and isinstance(cfg["method"]["rates"], dict) \
            and "kbc" in cfg["method"]["rates"]:
        kw["kbc_probe"] = assemble_collision_rule(
            create_kbc(s, OMEGA_S, _eq_spec(cfg), closed_form=False))
        if OMEGA_S.name not in params:
            raise ConfigError("scenario.params: the entropy check needs a value for omega_s")
    try:
        if name is ScenarioName.TAYLOR_GREEN_2D:
            return taylor_green(rule, params, n or 32, sc.get("amplitude", 0.01), sc.get("steps", 2000), **kw)
        walls = _wall_specs(cfg, s)
        if name is ScenarioName.COUETTE:
            out = couette(rule, params, n or 32, sc.get("lid", 0.05), sc.get("steps", 100000),
                          sc.get("steady_tol", 1e-10), **kw)
        else:
            out = lid_driven_cavity(rule, params, n or 64, sc.get("lid", 0.1), sc.get("steps", 5000), **kw)
        if walls:
            out.walls = walls
            out.periodic = tuple(not any(isinstance(w.region[a], int) for w in walls) for a in range(s.d))
            out.__post_init__()
        return out
    except ScenarioError as exc:
        raise ConfigError(f"scenario: {exc}") from exc


def cmd_simulate(cfg, out: str, strategy=None):
    """Run the configured scenario; returns ``(summary line, series)``."""
    rule, _ = build_rule(cfg, strategy)
    sc = _scenario(cfg, rule)
    series = run(sc)
    os.makedirs(out, exist_ok=True)
    series.write_csv(os.path.join(out, "observables.csv"))
    write_snapshot(os.path.join(out, "velocity_final.bin"), series.final_velocity, "velocity",
                   series.steps_run)
    mass = series.column("mass")
    drift = abs(mass[-1] - mass[0]) / abs(mass[0])
    if sc.name is ScenarioName.TAYLOR_GREEN_2D and len(series.snapshots) > 1:
        nu = fit_viscosity(series, sc.info["k"])
        omega = _shear_rate(cfg, sc.params)
        line = f"taylor-green: fitted nu = {nu:.6g}"
        if omega:
            expected = float(rule.stencil.cs2) * (1 / omega - 0.5)
            line += f", expected nu = {expected:.6g}, relative error = {abs(nu / expected - 1):.3e}"
    elif sc.name is ScenarioName.COUETTE:
        dev = couette_deviation(series, sc.info["lid"])
        steady = "not reached" if series.steady_step is None else f"step {series.steady_step}"
        line = f"couette: max deviation from linear profile = {dev:.3e}, steady state {steady}"
    else:
        u = series.final_velocity
        line = f"{sc.name.value}: max |u| = {float(np.sqrt((u * u).sum(-1)).max()):.6g}"
    line += f"; steps {series.steps_run}, relative mass drift {drift:.3e}"
    return line, series


def _parser():
    p = argparse.ArgumentParser(prog="lbmgen", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (("derive", "print the moment/equilibrium/rate tableau"),
                        ("flops", "print FLOP counts per simplification strategy and stage"),
                        ("emit", "write C kernel sources and ABI descriptions"),
                        ("simulate", "run the configured scenario")):
        c = sub.add_parser(name, help=help_)
        c.add_argument("config", help="YAML method configuration")
        c.add_argument("--out", default=".", help="output directory (emit, simulate)")
        c.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
        c.add_argument("--strategy", choices=["auto"] + [s.value for s in STRATEGY_ORDER],
                       help="override the simplification strategy")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        strategy = _strategy(cfg, args.strategy)
        if args.command == "derive":
            print(cmd_derive(cfg))
        elif args.command == "flops":
            print(cmd_flops(cfg, strategy, args.seed))
        elif args.command == "emit":
            for path in cmd_emit(cfg, args.out, strategy):
                print(path)
        else:
            line, _ = cmd_simulate(cfg, args.out, strategy)
            print(line)
    except (ConfigError, UnknownStencilError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SimulationDiverged, NewtonConvergenceError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
