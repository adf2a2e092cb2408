"""Command-line front end: ``analyze``, ``sweep`` and ``list-scenarios``."""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import jsonschema
import numpy as np

from . import __version__
from .averaging import AveragedMap, QuadratureConfig
from .errors import ConfigurationError, NumericalError
from .integrate import IntegratorConfig
from .poisson import validate_poisson
from .reduction import chart_checks
from .rootfind import SearchBox, find_zeros, local_small_amplitude_scan
from .scenarios import SCENARIO_NAMES, SCENARIO_SCHEMAS, cross_check, make_scenario
from .verify import continuation_in_epsilon, poincare_shoot

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_POS = {"type": "number", "exclusiveMinimum": 0}
_INTERVAL = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["scenario"],
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": list(SCENARIO_NAMES)},
                "parameters": {"type": "object"},
            },
            "allOf": [
                {
                    "if": {"properties": {"name": {"const": name}}},
                    "then": {"properties": {"parameters": schema}},
                }
                for name, schema in SCENARIO_SCHEMAS.items()
            ],
        },
        "order": {"enum": [1, 2]},
        "epsilon": {
            "oneOf": [_POS, {"type": "array", "items": _POS, "minItems": 1}],
        },
        "verify": {"type": "boolean"},
        "quadrature": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nodes": {"type": "integer", "minimum": 8},
                "tol": _POS,
                "max_doublings": {"type": "integer", "minimum": 0},
            },
        },
        "search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r_range": _INTERVAL,
                "z_ranges": {"type": "array", "items": _INTERVAL},
                "grid": {
                    "oneOf": [
                        {"type": "integer", "minimum": 2},
                        {"type": "array", "items": {"type": "integer", "minimum": 2}},
                    ]
                },
            },
        },
        "integrator": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"rtol": _POS, "atol": _POS, "max_steps": {"type": "integer", "minimum": 1}},
        },
        "local_scan": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"r_max": _POS, "z_box": _INTERVAL},
        },
        "sweep": {
            "type": "object",
            "required": ["parameter", "values"],
            "additionalProperties": False,
            "properties": {
                "parameter": {
                    "type": "array",
                    "items": {"type": ["string", "integer"]},
                    "minItems": 1,
                },
                "values": {"type": "array", "items": {"type": "number"}},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string"}, "format": {"enum": ["json", "csv"]}},
        },
    },
}

DEFAULTS = {
    "order": 1,
    "epsilon": [1e-3],
    "verify": True,
    "quadrature": {"nodes": 256, "tol": 1e-10, "max_doublings": 6},
    "search": {"r_range": [0.05, 3.0], "z_ranges": [[-0.9, 3.0]], "grid": 13},
    "integrator": {"rtol": 1e-10, "atol": 1e-12, "max_steps": 100000},
    "local_scan": {"r_max": 0.3, "z_box": [-0.3, 0.3]},
}


class ConfigError(Exception):
    """Schema or semantic problem in a run configuration."""

    def __init__(self, errors: list):
        super().__init__("; ".join(e["message"] for e in errors))
        self.errors = errors


def validate_config(cfg) -> None:
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errs = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errs:
        out = []
        for e in errs:
            msg = e.message
            if list(e.absolute_path) == ["scenario", "name"]:
                msg += " (run 'list-scenarios' for the available names)"
            out.append({"path": "/".join(str(p) for p in e.absolute_path), "message": msg})
        raise ConfigError(out)


def resolve_config(cfg: dict, overrides: dict | None = None) -> dict:
    """Validate, apply command-line overrides and fill defaults."""
    validate_config(cfg)
    out = copy.deepcopy(cfg)
    for k, v in (overrides or {}).items():
        if v is not None:
            out[k] = v
    for k, v in DEFAULTS.items():
        if k not in out:
            out[k] = copy.deepcopy(v)
        elif isinstance(v, dict):
            merged = copy.deepcopy(v)
            merged.update(out[k])
            out[k] = merged
    out["scenario"].setdefault("parameters", {})
    if not isinstance(out["epsilon"], list):
        out["epsilon"] = [out["epsilon"]]
    out["epsilon"] = [float(e) for e in out["epsilon"]]
    validate_config(out)
    return out


def _box(cfg: dict) -> SearchBox:
    s = cfg["search"]
    return SearchBox(tuple(s["r_range"]), tuple(tuple(z) for z in s["z_ranges"]), s["grid"])


def _grid_samples(amap: AveragedMap, box: SearchBox, k: int = 5) -> dict:
    b = box.bounds
    axes = [np.linspace(lo, hi, k) for lo, hi in b]
    mesh = np.meshgrid(*axes, indexing="ij")
    vals = amap.value(mesh[0].ravel(), [m.ravel() for m in mesh[1:]])
    return {
        "axes": [a.tolist() for a in axes],
        "values": _clean(vals.reshape((amap.dim,) + mesh[0].shape).tolist()),
    }


def _clean(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _closed_form_summary(sc) -> dict:
    cf = sc.closed_forms
    out = {"notes": list(sc.notes)}
    if sc.name == "duffing":
        out["deltas"] = list(cf["deltas"])
        out["ghat_origin_formula"] = list(cf["ghat_origin"])
        out["deltas_surviving_terms"] = list(cf["deltas_z0"])
    if "zeros" in cf:
        out["predicted_zeros"] = [list(z) for z in cf["zeros"]()]
    if "cubic_coefficients" in cf:
        out["cubic_coefficients"] = dict(cf["cubic_coefficients"])
    if "parity_vanishing" in cf:
        out["parity_vanishing"] = bool(cf["parity_vanishing"])
    return out


def cmd_analyze(cfg: dict) -> dict:
    """Run reduce, average, search and (optionally) verify for one resolved config."""
    sc = make_scenario(cfg["scenario"]["name"], cfg["scenario"]["parameters"])
    qcfg = QuadratureConfig(**cfg["quadrature"])
    icfg = IntegratorConfig(**cfg["integrator"])
    box = _box(cfg)
    if len(box.z_ranges) != sc.spec.n - 2:
        raise ConfigurationError(f"search.z_ranges needs {sc.spec.n - 2} interval(s)")
    order = cfg["order"]

    cc = chart_checks(sc.chart, 100)
    vp = validate_poisson(sc.spec, 50)
    chart = {"reduction": cc.to_dict(), "poisson": vp.to_dict()}

    amap = AveragedMap(sc.sf, qcfg, order)
    averaging = {"order": order, "closed_forms": _closed_form_summary(sc)}
    zeros = find_zeros(amap, box)
    if "order2_gate" in zeros.metadata:
        averaging["order2_gate"] = zeros.metadata["order2_gate"]
    averaging["samples"] = _grid_samples(amap, box)
    if sc.name in ("harmonic_potential", "zero_hopf") and (
        "gbar0" in sc.closed_forms or "G_dagger" in sc.closed_forms
    ):
        averaging["cross_check"] = cross_check(sc, config=qcfg).to_dict()
    if sc.leading_powers is not None:
        ls = cfg["local_scan"]
        scan = local_small_amplitude_scan(
            AveragedMap(sc.sf, qcfg), ls["r_max"], tuple(ls["z_box"]), leading_powers=sc.leading_powers
        )
        averaging["local_scan"] = scan.to_dict()
        averaging["cross_check"] = cross_check(sc, config=qcfg).to_dict()

    orbits = []
    if cfg["verify"]:
        eps_list = sorted(set(cfg["epsilon"]), reverse=True)
        for k, z in enumerate(zeros.simple_zeros):
            entry = {"zero_index": k, "zero": z.point.tolist()}
            if len(eps_list) > 1:
                tab = continuation_in_epsilon(sc.sf, z.point, eps_list, icfg)
                entry["continuation"] = tab.to_dict()
                entry["certificates"] = [r.to_dict() for r in tab.rows]
            else:
                cert = poincare_shoot(sc.sf, eps_list[0], z.point, icfg, predicted=z.point, orbit_samples=33)
                entry["certificates"] = [cert.to_dict(include_orbit=True)]
            entry["stability_consistent"] = _monodromy_consistent(z, entry["certificates"])
            orbits.append(entry)

    return _clean({
        "config": _provenance(cfg),
        "chart_checks": chart,
        "averaging": averaging,
        "zeros": zeros.to_dict(),
        "orbits": orbits,
        "sweep": None,
    })


def _provenance(cfg: dict) -> dict:
    """Resolved config plus every fixed tolerance the run depended on."""
    from . import averaging, reduction, rootfind, verify

    out = copy.deepcopy(cfg)
    out["package_version"] = __version__
    out["tolerances"] = {
        "chart_newton_tol": reduction.NEWTON_TOL,
        "chart_newton_max_iter": reduction.NEWTON_MAX_ITER,
        "newton_tol": rootfind.NEWTON_TOL,
        "dedup_radius": rootfind.DEDUP_RADIUS,
        "simplicity_det_tol": rootfind.DET_TOL,
        "simplicity_step_tol": rootfind.STEP_TOL,
        "polish_iterations": rootfind.POLISH_ITER,
        "identically_zero_tol": rootfind.IDENTICALLY_ZERO_TOL,
        "order2_gate_tol": averaging.ORDER2_GATE_TOL,
        "shoot_tol": verify.SHOOT_TOL,
        "shoot_step_tol": verify.STEP_TOL,
        "degeneracy_tol": verify.DEGENERACY_TOL,
    }
    return out


def _monodromy_consistent(zero, certs) -> bool | None:
    """Stable label iff the Floquet multipliers lie inside the unit circle."""
    for c in certs:
        if c["status"] != "isolated" or c["multipliers"] is None:
            continue
        inside = all(math.hypot(a, b) < 1.0 for a, b in c["multipliers"])
        return inside == (zero.stability.value == "Stable")
    return None


# ---------------------------------------------------------------------------
# sweep


def _set_path(params: dict, path: list, value: float) -> None:
    node = params
    for key in path[:-1]:
        if isinstance(node, list):
            if not isinstance(key, int) or not 0 <= key < len(node):
                raise ConfigError([{"path": "sweep/parameter", "message": f"bad list index {key!r}"}])
            node = node[key]
        else:
            if key not in node:
                raise ConfigError([{"path": "sweep/parameter", "message": f"missing key {key!r}"}])
            node = node[key]
    last = path[-1]
    if isinstance(node, list):
        if not isinstance(last, int) or not 0 <= last < len(node):
            raise ConfigError([{"path": "sweep/parameter", "message": f"bad list index {last!r}"}])
    elif not isinstance(node, dict):
        raise ConfigError([{"path": "sweep/parameter", "message": "path does not lead to a container"}])
    node[last] = float(value)


def _sweep_row(args) -> dict:
    cfg, value = args
    row = {"swept_value": value}
    try:
        doc = cmd_analyze(cfg)
        zs = [z for z in doc["zeros"]["zeros"] if z["simple"]]
        row["zero_count"] = len(zs)
        dists = {}
        for orb in doc["orbits"]:
            certs = orb["certificates"]
            dists[orb["zero_index"]] = certs[-1]["distance"] if certs else None
        row["zeros"] = [
            {
                "point": z["point"],
                "stability": z["stability"],
                "shoot_distance": dists.get(k),
            }
            for k, z in enumerate(zs)
        ]
        row["error"] = None
    except (ConfigurationError, NumericalError, ConfigError) as exc:
        row["zero_count"] = None
        row["zeros"] = []
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(cfg: dict, jobs: int = 1) -> dict:
    sweep = cfg.get("sweep")
    if not sweep:
        raise ConfigError([{"path": "sweep", "message": "sweep block is required"}])
    values = [float(v) for v in sweep["values"]]
    if not values:
        raise ConfigError([{"path": "sweep/values", "message": "empty grid"}])
    path = list(sweep["parameter"])
    tasks = []
    for v in values:
        row_cfg = copy.deepcopy(cfg)
        row_cfg.pop("sweep", None)
        _set_path(row_cfg["scenario"]["parameters"], path, v)
        validate_config(row_cfg)
        tasks.append((row_cfg, v))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    return _clean({
        "config": _provenance(cfg),
        "chart_checks": None,
        "averaging": None,
        "zeros": None,
        "orbits": None,
        "sweep": {"parameter": path, "rows": rows},
    })


def sweep_csv(doc: dict) -> str:
    rows = doc["sweep"]["rows"]
    nz = max((len(r["zeros"]) for r in rows), default=0)
    zdim = max((len(z["point"]) - 1 for r in rows for z in r["zeros"]), default=1)
    header = ["swept_value", "zero_count"]
    for k in range(nz):
        header.append(f"r_{k}")
        header += [f"z_{k}"] if zdim == 1 else [f"z{j}_{k}" for j in range(1, zdim + 1)]
        header += [f"stability_{k}", f"shoot_distance_{k}"]
    header.append("error")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        line = [repr(r["swept_value"]), "" if r["zero_count"] is None else r["zero_count"]]
        for k in range(nz):
            if k < len(r["zeros"]):
                z = r["zeros"][k]
                line += [repr(v) for v in z["point"]]
                line += [z["stability"], "" if z["shoot_distance"] is None else repr(z["shoot_distance"])]
            else:
                line += [""] * (zdim + 3)
        line.append(r["error"] or "")
        w.writerow(line)
    return buf.getvalue()


def cmd_list_scenarios(fmt: str = "text") -> str:
    if fmt == "json":
        return dumps({name: SCENARIO_SCHEMAS[name] for name in SCENARIO_NAMES})
    lines = []
    for name in SCENARIO_NAMES:
        sch = SCENARIO_SCHEMAS[name]
        lines.append(f"{name}: {sch['description']}")
        for key, sub in sch["properties"].items():
            lines.append(f"    {key}: {sub.get('description', '')}")
    return "\n".join(lines) + "\n"


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="poisson-averaging",
        description="Averaging analysis of perturbed rank-2 Poisson systems.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--order", type=int, choices=(1, 2))
        sp.add_argument("--epsilon", type=float, action="append", help="repeatable")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--format", choices=("json", "csv"))
        sp.add_argument("--verify", choices=("on", "off"))

    a = sub.add_parser("analyze", help="reduce, average, find zeros, certify orbits")
    common(a)
    s = sub.add_parser("sweep", help="analyze over a grid of one parameter")
    common(s)
    s.add_argument("--jobs", type=int, default=1, help="worker processes")
    ls = sub.add_parser("list-scenarios", help="show built-in scenarios and parameter schemas")
    ls.add_argument("--format", choices=("text", "json"), default="text")
    return p


def _load(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError([{"path": "", "message": f"cannot read {path}: {exc.strerror}"}]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([{"path": "", "message": f"invalid JSON: {exc}"}]) from exc


def _emit(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-scenarios":
        sys.stdout.write(cmd_list_scenarios(args.format))
        return EXIT_OK
    try:
        raw = _load(args.config)
        if not isinstance(raw, dict):
            raise ConfigError([{"path": "", "message": "configuration must be a JSON object"}])
        out_cfg = raw.get("output", {}) if isinstance(raw.get("output"), dict) else {}
        overrides = {
            "order": args.order,
            "epsilon": args.epsilon,
            "verify": None if args.verify is None else args.verify == "on",
        }
        cfg = resolve_config(raw, overrides)
        fmt = args.format or out_cfg.get("format", "json")
        out_path = args.out or out_cfg.get("path")
        if args.command == "analyze":
            if fmt == "csv":
                raise ConfigError([{"path": "output/format", "message": "csv output is for sweeps"}])
            _emit(dumps(cmd_analyze(cfg)), out_path)
        else:
            doc = cmd_sweep(cfg, jobs=max(1, args.jobs))
            _emit(sweep_csv(doc) if fmt == "csv" else dumps(doc), out_path)
        return EXIT_OK
    except ConfigError as exc:
        sys.stderr.write(dumps({"error": "configuration", "details": exc.errors}))
        return EXIT_CONFIG
    except ConfigurationError as exc:
        sys.stderr.write(dumps({"error": "configuration", "details": [{"path": "", "message": str(exc)}]}))
        return EXIT_CONFIG
    except NumericalError as exc:
        sys.stderr.write(dumps({"error": "numerical", "type": type(exc).__name__, "message": str(exc)}))
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
