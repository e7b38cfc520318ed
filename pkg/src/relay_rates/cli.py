"""Command-line front end.

Every command reads a JSON scenario::

    {"model": "gaussian", "parameters": {...}, "output": {"path": "...", "format": "csv"}, "seed": 0}

and writes CSV or JSON. Exit status is 0 on success, 2 for invalid input
(with a JSON error record on stderr) and 3 when a numerical search fails.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import __version__, dmc, fading, gaussian, geometry
from .errors import ArgumentError, ConvergenceError, RelayRatesError
from .frontier import SigmaGrid

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3
DEFAULT_ORACLE_POINTS = 4000
DEFAULT_MC_SAMPLES = fading.DEFAULT_SAMPLES

REPRODUCE = {
    "fig3": ("gaussian", "region"),
    "fig4": ("gaussian", "region"),
    "sumrate": ("gaussian", "sumrate"),
    "fig5": ("geometry", "map"),
    "fig6": ("geometry", "map"),
    "fig7": ("geometry", "map"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ArgumentError(message)


@dataclass
class Output:
    """Result of a command in both renderings; ``rows`` is None for JSON-only results."""

    data: object
    header: Optional[tuple] = None
    rows: list = field(default_factory=list)
    default_format: str = "json"

    def csv_text(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.header) + "\n")
        for row in self.rows:
            buf.write(",".join(_csv_cell(v) for v in row) + "\n")
        return buf.getvalue()


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _jsonable(obj):
    """Plain JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# Scenario handling ----------------------------------------------------------

def bundled_scenarios() -> list[str]:
    root = resources.files("relay_rates") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def read_bundled(name: str) -> dict:
    path = resources.files("relay_rates") / "scenarios" / f"{name}.json"
    if not path.is_file():
        raise ArgumentError(f"no bundled scenario {name!r}; available: {bundled_scenarios()}")
    return json.loads(path.read_text())


def load_scenario(path: Optional[str]) -> dict:
    """Read a scenario file; a bare bundled name such as ``fig3`` also works."""
    if path is None:
        raise ArgumentError("--scenario is required")
    p = Path(path)
    if not p.exists():
        stem = p.name[:-5] if p.name.endswith(".json") else p.name
        if p.parent == Path(".") and stem in bundled_scenarios():
            return read_bundled(stem)
        raise ArgumentError(f"scenario file {path} not found")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ArgumentError(f"scenario {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ArgumentError("scenario must be a JSON object")
    return data


def _check_scenario(data: dict, models: tuple) -> tuple[dict, dict, int]:
    unknown = set(data) - {"model", "parameters", "output", "seed"}
    if unknown:
        raise ArgumentError(f"unknown scenario keys {sorted(unknown)}")
    if data.get("model") not in models:
        raise ArgumentError(f"model must be one of {list(models)}, got {data.get('model')!r}")
    params = data.get("parameters", {})
    if not isinstance(params, dict):
        raise ArgumentError("parameters must be a JSON object")
    out = data.get("output") or {}
    if not isinstance(out, dict) or set(out) - {"path", "format"}:
        raise ArgumentError("output must be an object with optional 'path' and 'format'")
    if out.get("format") not in (None, "csv", "json"):
        raise ArgumentError(f"output format must be 'csv' or 'json', got {out.get('format')!r}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ArgumentError(f"seed must be a non-negative integer, got {seed!r}")
    return params, out, seed


def _only(params: dict, allowed: set, what: str):
    unknown = set(params) - allowed
    if unknown:
        raise ArgumentError(f"unknown {what} parameters {sorted(unknown)}")


def _schemes(params: dict, allowed: tuple) -> list:
    schemes = params.get("schemes", list(allowed))
    if not isinstance(schemes, list) or not schemes or set(schemes) - set(allowed):
        raise ArgumentError(f"schemes must be a non-empty subset of {list(allowed)}")
    return schemes


def _positive_int(value, name) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < 2:
        raise ArgumentError(f"{name} must be an integer >= 2, got {value!r}")
    return value


@dataclass
class Job:
    """A validated command: resolved parameters plus the function that computes it."""

    command: str
    model: str
    resolved: dict
    seed: int
    run: Callable[[], Output]

    def manifest(self) -> dict:
        return {"command": self.command, "model": self.model, "parameters": self.resolved,
                "seed": self.seed, "version": __version__}


# Commands --------------------------------------------------------------------

def _dmc_eval(data):
    params, _, seed = _check_scenario(data, ("oneway-dmc", "twrc-dmc"))
    d = dmc.load_distribution({"model": data["model"], **params})
    resolved = {"axes": [list(a) for a in d.pmf.axes]}

    def run():
        res = dmc.evaluate(d)
        rows = [(k, v["r1_bound"], v["r2_bound"], v["feasible"]) for k, v in res["schemes"].items()]
        return Output(res, ("scheme", "R1", "R2", "feasible"), rows)
    return resolved, seed, run


def _gaussian_channel(params) -> gaussian.GaussianTwrcChannel:
    if "channel" not in params:
        raise ArgumentError("parameters.channel is required")
    ch = gaussian.GaussianTwrcChannel.from_dict(params["channel"])
    gaussian.thresholds(ch)
    return ch


def _gaussian_region(data):
    params, _, seed = _check_scenario(data, ("gaussian",))
    _only(params, {"channel", "grid", "schemes"}, "gaussian region")
    ch = _gaussian_channel(params)
    grid = SigmaGrid.from_dict(params.get("grid"))
    schemes = _schemes(params, gaussian.SCHEMES)
    resolved = {"channel": ch.to_dict(), "grid": grid.to_dict(), "schemes": schemes}

    def run():
        fronts = [gaussian.region(ch, s, grid) for s in schemes]
        return _frontier_output(fronts)
    return resolved, seed, run


def _frontier_output(fronts) -> Output:
    rows = [(s, a, b, f.scheme) for f in fronts for s, (a, b) in zip(f.sigma2, f.points)]
    data = {f.scheme: {"sigma2": list(f.sigma2), "points": [list(p) for p in f.points],
                       "max_sum": f.max_sum()} for f in fronts}
    return Output(data, ("sigma2", "R1", "R2", "scheme"), rows, default_format="csv")


def _oracle_points(params) -> int:
    return _positive_int(params.get("oracle_points", DEFAULT_ORACLE_POINTS), "oracle_points")


def _power_sweep(params):
    sweep = params.get("power_sweep")
    if sweep is None:
        return None
    if not isinstance(sweep, dict) or set(sweep) - {"lower", "upper", "points"}:
        raise ArgumentError("power_sweep needs 'lower', 'upper' and 'points'")
    lo, hi = float(sweep.get("lower", 1.0)), float(sweep.get("upper", 100.0))
    n = _positive_int(sweep.get("points", 20), "power_sweep.points")
    if not 0 < lo < hi:
        raise ArgumentError("power_sweep needs 0 < lower < upper")
    return {"lower": lo, "upper": hi, "points": n}


def _gaussian_sumrate(data, oracle: bool):
    params, _, seed = _check_scenario(data, ("gaussian",))
    _only(params, {"channel", "oracle_points", "power_sweep"}, "gaussian sumrate")
    ch = _gaussian_channel(params)
    points = _oracle_points(params)
    sweep = _power_sweep(params)
    resolved = {"channel": ch.to_dict(), "oracle": oracle, "oracle_points": points, "power_sweep": sweep}
    powers = np.linspace(sweep["lower"], sweep["upper"], sweep["points"]) if sweep else [ch.power]

    def one(c):
        s_n, v_n = gaussian.optimal_sigma_nnc(c)
        s_b, v_b = gaussian.sumrate_cf_nobinning(c)
        rec = {"P": c.power, "nnc": {"sigma2": s_n, "sum_rate": v_n},
               "cf_nobinning": {"sigma2": s_b, "sum_rate": v_b}}
        if oracle:
            so, vo = gaussian.sumrate_oracle(c, points=points)
            sb, vb = gaussian.sumrate_oracle(c, gaussian.admissible_lower(c, "cf_nobinning"), points)
            rec["oracle"] = {"nnc": {"sigma2": so, "sum_rate": vo},
                             "cf_nobinning": {"sigma2": sb, "sum_rate": vb},
                             "max_abs_difference": max(abs(vo - v_n), abs(vb - v_b))}
        return rec

    def run():
        recs = [one(replace(ch, power=float(p))) for p in powers]
        header = ("P", "sum_nnc", "sigma2_nnc", "sum_cf_nobinning", "sigma2_cf_nobinning")
        rows = [(r["P"], r["nnc"]["sum_rate"], r["nnc"]["sigma2"], r["cf_nobinning"]["sum_rate"],
                 r["cf_nobinning"]["sigma2"]) for r in recs]
        if oracle:
            header += ("oracle_sum_nnc", "oracle_sum_cf_nobinning")
            rows = [row + (r["oracle"]["nnc"]["sum_rate"], r["oracle"]["cf_nobinning"]["sum_rate"])
                    for row, r in zip(rows, recs)]
        data = {"rates": recs} if sweep else recs[0]
        return Output(data, header, rows)
    return resolved, seed, run


def _gaussian_check(data):
    params, _, seed = _check_scenario(data, ("gaussian",))
    _only(params, {"channel"}, "gaussian check")
    ch = _gaussian_channel(params)

    def run():
        res = {
            "same_region_original": gaussian.check_same_region_original(ch),
            "same_region_nnc": gaussian.check_same_region_nnc(ch),
            "same_sumrate_nnc": gaussian.check_same_sumrate(ch),
            "thresholds": gaussian.thresholds(ch).to_dict(),
            "sigma_n": gaussian.optimal_sigma_nnc(ch)[0],
        }
        keys = ("same_region_original", "same_region_nnc", "same_sumrate_nnc")
        return Output(res, keys, [tuple(res[k] for k in keys)])
    return {"channel": ch.to_dict()}, seed, run


def _fading_channel(params) -> fading.FadingTwrcChannel:
    if "channel" not in params:
        raise ArgumentError("parameters.channel is required")
    return fading.FadingTwrcChannel.from_dict(params["channel"])


def _fading_region(data):
    params, _, seed = _check_scenario(data, ("fading",))
    _only(params, {"channel", "grid", "schemes"}, "fading region")
    ch = _fading_channel(params)
    grid = SigmaGrid.from_dict(params.get("grid"))
    schemes = _schemes(params, fading.SCHEMES)
    resolved = {"channel": ch.to_dict(), "grid": grid.to_dict(), "schemes": schemes}

    def run():
        return _frontier_output([fading.fading_region(ch, s, grid) for s in schemes])
    return resolved, seed, run


def _monte_carlo(params):
    mc = params.get("monte_carlo")
    if mc is None:
        return None
    if not isinstance(mc, dict) or set(mc) - {"sigma2", "samples"}:
        raise ArgumentError("monte_carlo takes 'sigma2' and 'samples'")
    s = float(mc.get("sigma2", 1.0))
    if not s > 0:
        raise ArgumentError("monte_carlo.sigma2 must be positive")
    return {"sigma2": s, "samples": _positive_int(mc.get("samples", DEFAULT_MC_SAMPLES), "monte_carlo.samples")}


def _fading_sumrate(data, oracle: bool):
    params, _, seed = _check_scenario(data, ("fading",))
    _only(params, {"channel", "oracle_points", "monte_carlo"}, "fading sumrate")
    ch = _fading_channel(params)
    points = _oracle_points(params)
    mc = _monte_carlo(params)
    resolved = {"channel": ch.to_dict(), "oracle": oracle, "oracle_points": points, "monte_carlo": mc}

    def run():
        s_n, v_n = fading.fading_optimal_sigma_nnc(ch)
        s_b, v_b = fading.fading_sumrate_cf_nobinning(ch)
        res = {"nnc": {"sigma2": s_n, "sum_rate": v_n}, "cf_nobinning": {"sigma2": s_b, "sum_rate": v_b}}
        if oracle:
            so, vo = fading.fading_sumrate_oracle(ch, points=points)
            res["oracle"] = {"nnc": {"sigma2": so, "sum_rate": vo}, "abs_difference": abs(vo - v_n)}
        if mc:
            closed = fading.fading_rate_tuple(ch, mc["sigma2"]).to_dict()
            est = fading.monte_carlo_rates(ch, mc["sigma2"], np.random.default_rng(seed), mc["samples"])
            res["monte_carlo"] = {k: {"closed_form": closed[k], "mean": m, "stderr": se}
                                  for k, (m, se) in est.items()}
        rows = [(k, res[k]["sum_rate"], res[k]["sigma2"]) for k in ("nnc", "cf_nobinning")]
        return Output(res, ("scheme", "sum_rate", "sigma2"), rows)
    return resolved, seed, run


def _fading_check(data):
    params, _, seed = _check_scenario(data, ("fading",))
    _only(params, {"channel"}, "fading check")
    ch = _fading_channel(params)

    def run():
        th = fading.fading_thresholds(ch)
        res = {"same_region_nnc": fading.fading_check_same_region(ch),
               "same_sumrate_nnc": fading.fading_check_same_sumrate(ch),
               "thresholds": th.to_dict()}
        keys = ("same_region_nnc", "same_sumrate_nnc")
        return Output(res, keys, [tuple(res[k] for k in keys)])
    return {"channel": ch.to_dict()}, seed, run


def _geometry_map(data):
    params, _, seed = _check_scenario(data, ("geometry",))
    cfg = geometry.SweepConfig.from_dict(params)

    def run():
        cells = geometry.sweep(cfg)
        buf = io.StringIO()
        geometry.write_map_csv(buf, cells, cfg)
        lines = buf.getvalue().splitlines()
        rows = [tuple(line.split(",")) for line in lines[1:]]
        res = {"summary": geometry.summarize(cells),
               "undetermined": [{"cell": [c.x, c.y], "reason": c.reason} for c in cells if c.undetermined]}
        return Output(res, tuple(lines[0].split(",")), rows, default_format="csv")
    return cfg.to_dict(), seed, run


def build_job(group: str, action: str, data: dict, oracle: bool = False) -> Job:
    """Validate a scenario for one command; nothing is computed yet."""
    if oracle and action != "sumrate":
        raise ArgumentError("--oracle only applies to sumrate")
    table = {
        ("dmc", "eval"): _dmc_eval,
        ("gaussian", "region"): _gaussian_region,
        ("gaussian", "sumrate"): lambda d: _gaussian_sumrate(d, oracle),
        ("gaussian", "check"): _gaussian_check,
        ("fading", "region"): _fading_region,
        ("fading", "sumrate"): lambda d: _fading_sumrate(d, oracle),
        ("fading", "check"): _fading_check,
        ("geometry", "map"): _geometry_map,
    }
    if (group, action) not in table:
        raise ArgumentError(f"unknown command {group} {action}")
    resolved, seed, run = table[(group, action)](data)
    return Job(f"{group} {action}", data.get("model"), resolved, seed, run)


# Output ------------------------------------------------------------------------

def _format(out_spec: dict, path: Optional[str], default: str) -> str:
    if out_spec.get("format"):
        return out_spec["format"]
    if path and path.endswith(".csv"):
        return "csv"
    if path and path.endswith(".json"):
        return "json"
    return default


def render(job: Job, out: Output, fmt: str) -> tuple[str, Optional[str]]:
    """Main text and, for CSV, the manifest that goes beside it."""
    if fmt == "json" or out.header is None:
        return _dumps({"manifest": job.manifest(), "result": out.data}), None
    return out.csv_text(), _dumps(job.manifest())


def _emit(text: str, manifest: Optional[str], path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
        return
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    if manifest is not None:
        Path(str(p) + ".manifest.json").write_text(manifest)


def _error(kind: str, message: str, **extra) -> dict:
    return {"error": kind, "message": message, **extra}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="relay-rates", description="Compress-forward relay rate regions and sum rates.")
    parser.add_argument("--version", action="version", version=__version__)
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--scenario", help="scenario JSON file (or a bundled scenario name)")
        p.add_argument("--output", help="output path; overrides the scenario's output.path")
        p.add_argument("--format", choices=("csv", "json"), help="override the output format")
        p.add_argument("--validate-only", action="store_true", help="check the scenario and stop")

    actions = {"dmc": ["eval"], "gaussian": ["region", "sumrate", "check"],
               "fading": ["region", "sumrate", "check"], "geometry": ["map"]}
    for group, acts in actions.items():
        sub = groups.add_parser(group).add_subparsers(dest="action", required=True, parser_class=_Parser)
        for act in acts:
            p = sub.add_parser(act)
            common(p)
            if act == "sumrate":
                p.add_argument("--oracle", action="store_true",
                               help="also run the threshold-free grid search")
    rep = groups.add_parser("reproduce")
    rep.add_argument("figure", choices=sorted(REPRODUCE))
    common(rep)
    return parser


def run(argv=None) -> int:
    """Entry point; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
        if args.group == "reproduce":
            if args.scenario:
                raise ArgumentError("reproduce uses its bundled scenario; drop --scenario")
            data = read_bundled(args.figure)
            group, action = REPRODUCE[args.figure]
        else:
            data = load_scenario(args.scenario)
            group, action = args.group, args.action
        job = build_job(group, action, data, getattr(args, "oracle", False))
        out_spec = data.get("output") or {}
        path = args.output or out_spec.get("path")
        if args.validate_only:
            sys.stdout.write(_dumps({"valid": True, "manifest": job.manifest()}))
            return EXIT_OK
        result = job.run()
        fmt = args.format or _format(out_spec, path, result.default_format)
        _emit(*render(job, result, fmt), path)
        return EXIT_OK
    except ConvergenceError as exc:
        sys.stderr.write(_dumps(_error("ConvergenceError", str(exc), diagnostics=exc.diagnostics)))
        return EXIT_NUMERICAL
    except RelayRatesError as exc:
        sys.stderr.write(_dumps(_error(type(exc).__name__, str(exc))))
        return EXIT_INVALID
    except (OSError, TypeError, ValueError) as exc:
        sys.stderr.write(_dumps(_error(type(exc).__name__, str(exc))))
        return EXIT_INVALID


def main():
    sys.exit(run())
