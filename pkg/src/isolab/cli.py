"""Command-line front end.

Subcommands run named experiments and write deterministic report files:

* ``ball-check``: centered-ball equality sweep over a p-grid
* ``sweep``: inequality reports for a starshaped family over a p-grid
* ``counterexample``: shrinking-neck decay study
* ``variation``: translated-ball stability reports
* ``ode``: planar stationary-curve integration and shooting
* ``chain``: proof-chain validation (radial comparison or interpolation)
* ``onedim``: interval-union endpoint inequality

Exit status: 0 when every asserted property passes, 1 on a property
failure (the failing report file is named on stderr), 2 on invalid
configuration.  All floats in reports are written with 17 significant
digits and all row orderings are fixed, so identical configurations
produce byte-identical files; ISOLAB_THREADS caps sweep workers without
affecting output bytes.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .domains import IntervalUnion, make_starshaped
from .elcurve import (
    ELState,
    check_symmetry,
    circle_curvature,
    generalized_curvature_series,
    integrate_el,
    shoot_closed,
)
from .errors import IsolabError
from .measures import CSV_COLUMNS, power_density, report_for_domain
from .variation import VARIATION_CSV_COLUMNS, variation_report
from .verifier import counterexample_decay, interpolation_chain, onedim_check, theorem9_chain

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

_PARAM_KEYS = {
    "ball-check": {"n", "p_range", "radii", "tol"},
    "sweep": {"n", "p_range", "family", "family_params", "grad_mode"},
    "counterexample": {"n", "p", "radius", "eps"},
    "variation": {"n", "p_values", "r"},
    "ode": {"p", "d", "k", "turns", "shoot", "k_range"},
    "chain": {"kind", "n", "p", "family", "family_params", "grad_mode"},
    "onedim": {"intervals", "p"},
}

_FAMILY_KEYS = {
    "constant": {"radius"},
    "perturbed": {"base_radius", "delta", "harmonic"},
    "random-trig": {"base_radius", "amplitude", "seed", "degree", "terms"},
}

_FORMATS = ("all", "json", "csv", "svg", "md")


class ConfigError(ValueError):
    """Invalid command configuration; maps to exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    """A validated subcommand invocation."""

    command: str
    params: dict
    format: str
    out: Path

    def __post_init__(self):
        if self.command not in _PARAM_KEYS:
            raise ConfigError(f"unknown command {self.command!r}")
        unknown = set(self.params) - _PARAM_KEYS[self.command]
        if unknown:
            raise ConfigError(f"unknown parameter keys {sorted(unknown)}")
        if self.format not in _FORMATS:
            raise ConfigError(f"unknown format {self.format!r}")
        rng = self.params.get("p_range")
        if rng is not None:
            start, stop, count = rng
            if count < 1:
                raise ConfigError(f"p-range count must be >= 1, got {count}")
            if count > 1 and not stop > start:
                raise ConfigError("p-range needs stop > start when count > 1")


def fmt(x) -> str:
    """Fixed 17-significant-digit rendering used in all report files."""
    return format(float(x), ".17g")


def _p_grid(rng) -> list:
    start, stop, count = rng
    if count == 1:
        return [float(start)]
    return [float(v) for v in np.linspace(start, stop, count)]


def _wants(config: RunConfig, kind: str) -> bool:
    return config.format in ("all", kind)


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)


def _write_json(config: RunConfig, name: str, obj) -> Path:
    path = config.out / f"{name}.json"
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path


def _write_csv(config: RunConfig, name: str, header, rows) -> Path:
    path = config.out / f"{name}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else fmt(c) for c in row])
    return path


def _write_svg(config: RunConfig, name: str, xs, ys) -> Path:
    """Fixed-viewBox polyline plot of one planar curve."""
    path = config.out / f"{name}.svg"
    lo = min(min(xs), min(ys))
    hi = max(max(xs), max(ys))
    span = (hi - lo) or 1.0
    pad = 0.05 * span
    lo, span = lo - pad, span + 2 * pad
    size = 800.0

    def sx(v):
        return (v - lo) / span * size

    def sy(v):
        return size - (v - lo) / span * size

    points = " ".join(f"{sx(x):.6f},{sy(y):.6f}" for x, y in zip(xs, ys))
    body = (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {size:g} {size:g}">\n'
        f'<rect width="{size:g}" height="{size:g}" fill="white"/>\n'
        f'<polyline points="{points}" fill="none" stroke="black" stroke-width="1"/>\n'
        "</svg>\n"
    )
    _write_text(path, body)
    return path


def _workers() -> int:
    raw = os.environ.get("ISOLAB_THREADS", "1")
    try:
        w = int(raw)
    except ValueError as exc:
        raise ConfigError(f"ISOLAB_THREADS must be an integer, got {raw!r}") from exc
    if w < 1:
        raise ConfigError(f"ISOLAB_THREADS must be >= 1, got {w}")
    return w


def _map_ordered(fn, items):
    w = _workers()
    if w == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=w) as ex:
        return list(ex.map(fn, items))


def _fail(path: Path, message: str) -> int:
    print(f"FAIL: {message} (see {path})", file=sys.stderr)
    return EXIT_FAIL


def _make_domain(n, family, family_params, grad_mode):
    if family not in _FAMILY_KEYS:
        raise ConfigError(f"unknown family {family!r}; known: {sorted(_FAMILY_KEYS)}")
    unknown = set(family_params) - _FAMILY_KEYS[family]
    if unknown:
        raise ConfigError(f"unknown {family!r} parameter keys {sorted(unknown)}")
    return make_starshaped(family, family_params, n, grad_mode=grad_mode)


def run(config: RunConfig) -> int:
    """Execute one validated configuration; returns the exit status."""
    return _DISPATCH[config.command](config)


def _run_ball_check(config: RunConfig) -> int:
    p = config.params
    n = p["n"]
    tol = p["tol"]
    grid = [(pp, r) for pp in _p_grid(p["p_range"]) for r in p["radii"]]

    def one(pair):
        pp, r = pair
        dom = make_starshaped("constant", {"radius": r}, n)
        return report_for_domain(dom, pp)

    reports = _map_ordered(one, grid)
    rows = [rep.csv_row() for rep in reports]
    paths = []
    if _wants(config, "csv"):
        paths.append(_write_csv(config, "ball_check", CSV_COLUMNS, rows))
    if _wants(config, "json"):
        paths.append(
            _write_json(config, "ball_check", [rep.to_json_dict() for rep in reports])
        )
    bad = [rep for rep in reports if abs(rep.ratio - 1.0) > tol]
    if bad:
        where = paths[0] if paths else config.out
        return _fail(where, f"{len(bad)} centered-ball ratios deviate beyond {tol:g}")
    print(f"ball-check: {len(reports)} rows, all ratios within {tol:g} of 1")
    return EXIT_OK


def _run_sweep(config: RunConfig) -> int:
    p = config.params
    n = p["n"]
    dom = _make_domain(n, p["family"], p["family_params"], p["grad_mode"])

    def one(pp):
        return report_for_domain(dom, pp)

    reports = _map_ordered(one, _p_grid(p["p_range"]))
    rows = [rep.csv_row() for rep in reports]
    paths = []
    if _wants(config, "csv"):
        paths.append(_write_csv(config, "sweep", CSV_COLUMNS, rows))
    if _wants(config, "json"):
        paths.append(_write_json(config, "sweep", [rep.to_json_dict() for rep in reports]))
    # the inequality is only guaranteed in these regimes; elsewhere report-only
    bad = []
    for rep in reports:
        guaranteed = rep.p >= 0 or rep.p <= -n + 1 or (n == 2 and -1 < rep.p < 0)
        if guaranteed and rep.ratio < 1.0 - 10.0 * rep.quadrature_error - 1e-12:
            bad.append(rep)
    if bad:
        where = paths[0] if paths else config.out
        return _fail(where, f"{len(bad)} in-regime ratios fell below 1")
    print(f"sweep: {len(reports)} rows for family {p['family']!r}")
    return EXIT_OK


def _run_counterexample(config: RunConfig) -> int:
    p = config.params
    report = counterexample_decay(p["n"], p["p"], p["radius"], p["eps"])
    rows = [
        (
            row.eps,
            row.volume,
            row.perimeter,
            row.ratio,
            row.pieces.area_hemisphere,
            row.pieces.area_tube_inner,
            row.pieces.area_tube_outer,
            row.pieces.area_cut_sphere,
        )
        for row in report.rows
    ]
    header = (
        "eps",
        "volume",
        "perimeter",
        "ratio",
        "hemisphere",
        "tube_inner",
        "tube_outer",
        "cut_sphere",
    )
    paths = []
    if _wants(config, "csv"):
        paths.append(_write_csv(config, "counterexample", header, rows))
    if _wants(config, "json"):
        paths.append(_write_json(config, "counterexample", report.to_json_dict()))
    if not report.perimeter_decreasing:
        where = paths[0] if paths else config.out
        return _fail(where, "weighted perimeter is not strictly decreasing in eps")
    print(
        f"counterexample: perimeter decreasing over {len(report.rows)} eps values, "
        f"violation exhibited: {report.any_violation}"
    )
    return EXIT_OK


def _run_variation(config: RunConfig) -> int:
    p = config.params
    n, r = p["n"], p["r"]
    reports = _map_ordered(lambda pp: variation_report(n, pp, r), p["p_values"])
    rows = [rep.csv_row() for rep in reports]
    paths = []
    if _wants(config, "csv"):
        paths.append(_write_csv(config, "variation", VARIATION_CSV_COLUMNS, rows))
    if _wants(config, "json"):
        paths.append(
            _write_json(config, "variation", [rep.to_json_dict() for rep in reports])
        )
    bad = [rep for rep in reports if rep.violations()]
    if bad:
        where = paths[0] if paths else config.out
        msgs = "; ".join(v for rep in bad for v in rep.violations())
        return _fail(where, msgs)
    classes = ", ".join(f"p={rep.p:g}: {rep.classification}" for rep in reports)
    print(f"variation: {classes}")
    return EXIT_OK


def _run_ode(config: RunConfig) -> int:
    p = config.params
    exponent, d = p["p"], p["d"]
    if p["shoot"]:
        k_range = p["k_range"]
        if k_range is None:
            raise ConfigError("--shoot needs --k-range START STOP COUNT")
        ks = np.linspace(k_range[0], k_range[1], int(k_range[2]))
        roots = shoot_closed(exponent, d, ks)
        obj = [{"k": r.k, "closure_error": r.closure_error} for r in roots]
        if _wants(config, "json"):
            _write_json(config, "ode_shoot", obj)
        print(f"ode: {len(roots)} closed-orbit candidates")
        return EXIT_OK

    k = p["k"] if p["k"] is not None else circle_curvature(exponent, d)
    is_circle = p["k"] is None
    start = ELState(gamma=(d, 0.0), alpha=(0.0, 1.0), p=exponent, k=k)
    curve = integrate_el(exponent, start, p["turns"] * 2.0 * math.pi * d)
    paths = []
    if _wants(config, "csv"):
        rows = [(t, x, y) for t, (x, y) in zip(curve.t, curve.gamma)]
        paths.append(_write_csv(config, "ode_curve", ("t", "x", "y"), rows))
    if _wants(config, "svg"):
        paths.append(_write_svg(config, "ode_curve", curve.gamma[:, 0], curve.gamma[:, 1]))
    where = paths[0] if paths else config.out
    if curve.aborted:
        return _fail(where, f"integration aborted: {curve.aborted}")
    drift = float(np.max(np.abs(generalized_curvature_series(curve) - k)))
    if drift > 1e-7 * (1.0 + abs(k)):
        return _fail(where, f"generalized-curvature drift {drift:.3e}")
    sym = check_symmetry(curve)
    if sym.applicable and not sym.passed:
        return _fail(where, f"reflection symmetry defect {sym.defect:.3e}")
    if is_circle:
        gap = float(np.hypot(*(curve.gamma[0] - curve.gamma[-1])))
        if p["turns"] == 1.0 and gap > 1e-8:
            return _fail(where, f"circle run failed to close: gap {gap:.3e}")
    print(f"ode: {curve.t.size} samples, curvature drift {drift:.3e}")
    return EXIT_OK


def _run_chain(config: RunConfig) -> int:
    p = config.params
    dom = _make_domain(p["n"], p["family"], p["family_params"], p["grad_mode"])
    if p["kind"] == "radial":
        report = theorem9_chain(dom, power_density(p["p"]))
    elif p["kind"] == "interpolation":
        report = interpolation_chain(dom, p["p"])
    else:
        raise ConfigError(f"unknown chain kind {p['kind']!r}")
    paths = []
    if _wants(config, "json"):
        paths.append(_write_json(config, "chain", report.to_json_dict()))
    if _wants(config, "md"):
        paths.append((config.out / "chain.md"))
        _write_text(paths[-1], report.to_markdown() + "\n")
    if not report.overall:
        failing = [s.name for s in report.steps if not s.passed]
        where = paths[0] if paths else config.out
        return _fail(where, f"chain steps failed: {', '.join(failing)}")
    print(f"chain: {report.chain} on {report.domain_id}: all {len(report.steps)} steps pass")
    return EXIT_OK


def _run_onedim(config: RunConfig) -> int:
    p = config.params
    u = IntervalUnion(tuple(p["intervals"]))
    report = onedim_check(u, p["p"])
    paths = []
    if _wants(config, "json"):
        paths.append(_write_json(config, "onedim", report.to_json_dict()))
    if report.guaranteed and not report.holds:
        where = paths[0] if paths else config.out
        return _fail(where, f"guaranteed regime {report.regime!r} violated")
    verdict = "holds" if report.holds else "fails"
    print(f"onedim: {report.regime}, inequality {verdict} (exact: {report.exact})")
    return EXIT_OK


_DISPATCH = {
    "ball-check": _run_ball_check,
    "sweep": _run_sweep,
    "counterexample": _run_counterexample,
    "variation": _run_variation,
    "ode": _run_ode,
    "chain": _run_chain,
    "onedim": _run_onedim,
}


def _parse_family_params(raw: str) -> dict:
    try:
        params = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"--params must be a JSON object: {exc}") from exc
    if not isinstance(params, dict):
        raise ConfigError(f"--params must be a JSON object, got {type(params).__name__}")
    return params


def _load_domain_file(path: str):
    """Read a domain description {family, n, params, grad_mode} from JSON."""
    try:
        with open(path) as f:
            spec = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read domain file {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"domain file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(spec, dict):
        raise ConfigError(f"domain file {path!r} must hold a JSON object")
    unknown = set(spec) - {"family", "n", "params", "grad_mode"}
    if unknown:
        raise ConfigError(f"domain file {path!r} has unknown keys {sorted(unknown)}")
    for key in ("family", "n", "params"):
        if key not in spec:
            raise ConfigError(f"domain file {path!r} is missing {key!r}")
    return spec["family"], int(spec["n"]), spec["params"], spec.get("grad_mode", "analytic")


def _parse_intervals(raw: str):
    """Parse "a,b;c,d" into pairs, keeping integer endpoints exact."""

    def atom(s):
        s = s.strip()
        try:
            if "/" in s:
                return Fraction(s)
            if "." in s or "e" in s or "E" in s:
                return float(s)
            return int(s)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad interval endpoint {s!r}") from exc

    out = []
    for chunk in raw.split(";"):
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"bad interval {chunk!r}; expected 'a,b'")
        out.append((atom(parts[0]), atom(parts[1])))
    return out


def _parse_eps(raw: str):
    try:
        return tuple(float(x) for x in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad eps list {raw!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isolab",
        description="Numerical laboratory for the |x|^p weighted isoperimetric problem.",
    )
    parser.add_argument("--out", default=".", help="output directory for report files")
    parser.add_argument("--format", default="all", choices=_FORMATS)
    sub = parser.add_subparsers(dest="command", required=True)

    pb = sub.add_parser("ball-check", help="centered-ball equality sweep")
    pb.add_argument("--n", type=int, required=True)
    pb.add_argument("--p-range", nargs=3, type=float, required=True, metavar=("START", "STOP", "COUNT"))
    pb.add_argument("--r", type=float, nargs="+", default=[1.0], dest="radii")
    pb.add_argument("--tol", type=float, default=1e-8)

    ps = sub.add_parser("sweep", help="inequality reports over a p-grid")
    ps.add_argument("--n", type=int)
    ps.add_argument("--p-range", nargs=3, type=float, required=True, metavar=("START", "STOP", "COUNT"))
    ps.add_argument("--family", default="constant")
    ps.add_argument("--params", default="{}", help="family parameters as JSON")
    ps.add_argument("--grad-mode", default="analytic", choices=("analytic", "fd"))
    ps.add_argument("--domain", help="JSON file {family, n, params, grad_mode}")

    pc = sub.add_parser("counterexample", help="shrinking-neck decay study")
    pc.add_argument("--n", type=int, required=True)
    pc.add_argument("--p", type=float, required=True)
    pc.add_argument("--R", type=float, default=1.0, dest="radius")
    pc.add_argument("--eps", type=str, required=True, help="comma-separated decreasing list")

    pv = sub.add_parser("variation", help="translated-ball stability reports")
    pv.add_argument("--n", type=int, required=True)
    pv.add_argument("--p", type=float, nargs="+", required=True, dest="p_values")
    pv.add_argument("--r", type=float, default=1.0)

    po = sub.add_parser("ode", help="stationary-curve integration and shooting")
    po.add_argument("--p", type=float, required=True)
    po.add_argument("--d", type=float, default=1.0)
    po.add_argument("--k", type=float, default=None, help="curvature label; defaults to the circle value")
    po.add_argument("--turns", type=float, default=1.0)
    po.add_argument("--shoot", action="store_true")
    po.add_argument("--k-range", nargs=3, type=float, default=None, metavar=("START", "STOP", "COUNT"))

    ph = sub.add_parser("chain", help="proof-chain validation")
    ph.add_argument("--kind", required=True, choices=("radial", "interpolation"))
    ph.add_argument("--n", type=int)
    ph.add_argument("--p", type=float, required=True)
    ph.add_argument("--family", default="constant")
    ph.add_argument("--params", default="{}", help="family parameters as JSON")
    ph.add_argument("--grad-mode", default="analytic", choices=("analytic", "fd"))
    ph.add_argument("--domain", help="JSON file {family, n, params, grad_mode}")

    p1 = sub.add_parser("onedim", help="interval-union endpoint inequality")
    p1.add_argument("--intervals", required=True, help="semicolon-separated 'a,b' pairs")
    p1.add_argument("--p", type=str, required=True)

    return parser


def _config_from_args(args) -> RunConfig:
    command = args.command
    if command == "ball-check":
        rng = (args.p_range[0], args.p_range[1], int(args.p_range[2]))
        params = {"n": args.n, "p_range": rng, "radii": tuple(args.radii), "tol": args.tol}
    elif command == "sweep":
        family, n, fparams, gmode = args.family, args.n, _parse_family_params(args.params), args.grad_mode
        if args.domain:
            family, n, fparams, gmode = _load_domain_file(args.domain)
        if n is None:
            raise ConfigError("sweep needs --n or a --domain file")
        rng = (args.p_range[0], args.p_range[1], int(args.p_range[2]))
        params = {
            "n": n,
            "p_range": rng,
            "family": family,
            "family_params": fparams,
            "grad_mode": gmode,
        }
    elif command == "counterexample":
        params = {"n": args.n, "p": args.p, "radius": args.radius, "eps": _parse_eps(args.eps)}
    elif command == "variation":
        params = {"n": args.n, "p_values": tuple(args.p_values), "r": args.r}
    elif command == "ode":
        k_range = None
        if args.k_range is not None:
            k_range = (args.k_range[0], args.k_range[1], int(args.k_range[2]))
        params = {
            "p": args.p,
            "d": args.d,
            "k": args.k,
            "turns": args.turns,
            "shoot": args.shoot,
            "k_range": k_range,
        }
    elif command == "chain":
        family, n, fparams, gmode = args.family, args.n, _parse_family_params(args.params), args.grad_mode
        if args.domain:
            family, n, fparams, gmode = _load_domain_file(args.domain)
        if n is None:
            raise ConfigError("chain needs --n or a --domain file")
        params = {
            "kind": args.kind,
            "n": n,
            "p": args.p,
            "family": family,
            "family_params": fparams,
            "grad_mode": gmode,
        }
    elif command == "onedim":
        raw_p = args.p.strip()
        try:
            p_val = int(raw_p)
        except ValueError:
            try:
                p_val = float(raw_p)
            except ValueError as exc:
                raise ConfigError(f"bad exponent {raw_p!r}") from exc
        params = {"intervals": tuple(_parse_intervals(args.intervals)), "p": p_val}
    else:
        raise ConfigError(f"unknown command {command!r}")
    return RunConfig(command=command, params=params, format=args.format, out=Path(args.out))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _config_from_args(args)
        return run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IsolabError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
