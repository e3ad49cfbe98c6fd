"""Command-line front end for the interpolation-to-circuit pipeline.

Subcommands:

  eval          classical and circuit values of the interpolant at points
  coeffs        dump the surplus coefficients (optionally with the
                integral-formula cross values)
  convergence   error decay study, CSV/JSON/SVG
  resources     epsilon-complexity estimates plus measured circuit sizes
  audit         coefficient decay bounds and stencil-vs-integral gap
  circuit       JSON gate trace of one evaluation circuit

Exit codes: 0 success, 2 configuration error, 3 invariant/audit violation.
Every command is deterministic given its arguments and seed; numbers are
serialized with 17 significant digits so doubles round-trip exactly.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Sequence

import numpy as np

from . import analysis, lcu, sparsegrid
from .analysis import KorobovTestFunction
from .simulator import MAX_DENSE_WIDTH

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VIOLATION = 3

DEFAULT_EPS_GRID = [float(f"{e:.17g}") for e in np.logspace(-4, np.log10(0.5), 10)]


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def _zero_function(d: int) -> KorobovTestFunction:
    zero = lambda x: np.zeros(np.asarray(x).shape[:-1])
    return KorobovTestFunction("zero", d, zero, zero, 0.0, 0.0)


def resolve_function(args) -> KorobovTestFunction:
    if args.expr and args.fn:
        raise ConfigError("give either --fn or --expr, not both")
    if args.expr:
        names = [part.strip() for part in args.expr.split("*")]
        unknown = [nm for nm in names if nm not in analysis.FACTORS]
        if unknown:
            raise ConfigError(
                f"unknown factor(s) {unknown}; choose from {sorted(analysis.FACTORS)}"
            )
        func = analysis.separable_function(args.expr, names)
        if args.d is not None and args.d != func.d:
            raise ConfigError(f"--d {args.d} does not match the {func.d}-factor --expr")
        return func
    name = args.fn or "prod-quad"
    d = args.d if args.d is not None else 1
    if name == "zero":
        return _zero_function(d)
    try:
        return analysis.corpus_function(name, d)
    except KeyError as exc:
        raise ConfigError(str(exc)) from None


def parse_points(text: str, d: int) -> list[np.ndarray]:
    points = []
    for chunk in text.split(";"):
        coords = [float(c) for c in chunk.split(",") if c.strip() != ""]
        if len(coords) != d:
            raise ConfigError(f"point {chunk!r} does not have {d} coordinates")
        if any(not 0.0 <= c <= 1.0 for c in coords):
            raise ConfigError(f"point {chunk!r} leaves [0,1]^d")
        points.append(np.array(coords))
    if not points:
        raise ConfigError("no evaluation points given")
    return points


def parse_p(text: str):
    if text in ("inf", "oo"):
        return math.inf
    try:
        p = float(text)
    except ValueError:
        raise ConfigError(f"cannot parse --p {text!r}") from None
    if p < 2:
        raise ConfigError("--p must be 2 <= p <= inf")
    return p


def parse_n_range(args) -> list[int]:
    if args.n_range:
        try:
            lo, hi = args.n_range.split("..")
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"cannot parse --n-range {args.n_range!r}") from None
        if hi < lo:
            raise ConfigError("--n-range must be increasing")
        return list(range(lo, hi + 1))
    if args.n is not None:
        return [args.n]
    raise ConfigError("need --n or --n-range")


def write_out(text: str, path: str | None) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def csv_text(header: Sequence[str], rows: Sequence[Sequence], comments: Sequence[str] = ()) -> str:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def json_text(doc) -> str:
    # floats through fmt() keep the 17-digit contract inside strings-free JSON
    def clean(obj):
        if isinstance(obj, float):
            return float(fmt(obj)) if math.isfinite(obj) else repr(obj)
        if isinstance(obj, dict):
            return {k: clean(v) for k, v in obj.items()}
        if isinstance(obj, (list, tuple)):
            return [clean(v) for v in obj]
        if isinstance(obj, (np.floating, np.integer)):
            return clean(obj.item())
        return obj

    return json.dumps(clean(doc), indent=2) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_eval(args) -> int:
    func = resolve_function(args)
    n = args.n if args.n is not None else 2
    points = parse_points(args.x or "0.5", func.d)
    smap = sparsegrid.surplus_coefficients(func.f, n, func.d)
    rows = []
    for x in points:
        classical = smap.evaluate(x)
        value, report = lcu.evaluate_via_circuit(
            smap, x, include_identity=args.include_identity_gates
        )
        row = {
            "x": list(map(float, x)),
            "classical": classical,
            "circuit": value,
            "abs_diff": abs(classical - value),
            "true": float(func.f(x[None, :])[0]),
            "width": report.width,
            "gate_count": report.gate_count,
            "multi_depth": report.multi_depth,
            "layered_depth": report.layered_depth,
            "touch_depth": report.touch_depth,
        }
        if args.normalized:
            terms = sparsegrid.chebyshev_expansion(smap, x)
            one_norm = float(sum(abs(t.weight) for t in terms))
            row["one_norm"] = one_norm
            row["normalized_amplitude"] = value / one_norm if one_norm else 0.0
        rows.append(row)
    if args.format == "json":
        write_out(json_text({"function": func.name, "d": func.d, "n": n, "rows": rows}), args.out)
    else:
        keys = [k for k in rows[0] if k != "x"]
        header = [f"x_{j + 1}" for j in range(func.d)] + keys
        table = [[*r["x"], *[r[k] for k in keys]] for r in rows]
        write_out(csv_text(header, table, [f"function={func.name} d={func.d} n={n}"]), args.out)
    return EXIT_OK


def cmd_coeffs(args) -> int:
    func = resolve_function(args)
    n = args.n if args.n is not None else 2
    smap = sparsegrid.surplus_coefficients(func.f, n, func.d)
    doc = smap.to_json_dict()
    if args.quadrature:
        for entry in doc["entries"]:
            g = sparsegrid.GridIndex(tuple(entry["level"]), tuple(entry["index"]))
            entry["quadrature"] = analysis.integral_coefficient(func.mixed_derivative, g)
    doc["function"] = func.name
    write_out(json_text(doc), args.out)
    return EXIT_OK


def _svg_polyline(xs, ys, width=480, height=360, margin=42):
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    sx = lambda x: margin + (x - x0) / max(x1 - x0, 1e-12) * (width - 2 * margin)
    sy = lambda y: height - margin - (y - y0) / max(y1 - y0, 1e-12) * (height - 2 * margin)
    return sx, sy


def svg_convergence(study: analysis.ConvergenceStudy) -> str:
    rows = [(r.N, e) for r, e in zip(study.rows, study.errors_for_p()) if e and e > 0 and r.N >= 2]
    xs = [math.log2(nn) for nn, _ in rows]
    ys = [math.log2(e) for _, e in rows]
    sx, sy = _svg_polyline(xs, ys)
    pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
    # reference line of slope -2 through the first point
    ref = " ".join(
        f"{sx(x):.2f},{sy(ys[0] - 2.0 * (x - xs[0])):.2f}" for x in (xs[0], xs[-1])
    )
    exponent = 3 * (study.d - 1)
    label = (
        f"{study.function} d={study.d} p={study.p} "
        f"log-exponent 3(d-1)={exponent} slope={fmt(study.slope)}"
    )
    return (
        '<svg xmlns="http://www.w3.org/2000/svg" width="480" height="360">\n'
        f'  <text x="10" y="16" font-size="11">{label}</text>\n'
        f'  <polyline points="{ref}" fill="none" stroke="#999" stroke-dasharray="4 3"/>\n'
        f'  <polyline points="{pts}" fill="none" stroke="#125699" stroke-width="1.5"/>\n'
        "</svg>\n"
    )


def cmd_convergence(args) -> int:
    func = resolve_function(args)
    p = parse_p(args.p or "inf")
    n_values = parse_n_range(args)
    study = analysis.convergence_study(func, p, n_values, seed=args.seed)
    if args.format == "svg":
        write_out(svg_convergence(study), args.out)
        return EXIT_OK
    if args.format == "json":
        doc = {
            "function": func.name,
            "d": func.d,
            "p": "inf" if p == math.inf else p,
            "log_exponent": 3 * (func.d - 1),
            "rows": [
                {"n": r.n, "N": r.N, "error_inf": r.error_inf,
                 "error_2": r.error_2, "error_p": r.error_p}
                for r in study.rows
            ],
            "slope": study.slope,
            "slope_ci": study.slope_stderr,
            "raw_slope": study.raw_slope,
            "shape_constant": study.shape_constant,
        }
        write_out(json_text(doc), args.out)
        return EXIT_OK
    errs = study.errors_for_p()
    rows = []
    for k, row in enumerate(study.rows):
        running = None
        keep = [
            (r.N, e) for r, e in zip(study.rows[: k + 1], errs[: k + 1])
            if e is not None and e > 1e-13 and r.N >= 2
        ]
        if len(keep) >= 2:
            x = np.log2([kk[0] for kk in keep])
            y = np.log2([kk[1] for kk in keep]) - 3.0 * (func.d - 1) * np.log2(x)
            running = float(np.linalg.lstsq(
                np.vstack([x, np.ones_like(x)]).T, y, rcond=None
            )[0][0])
        rows.append([row.n, row.N, row.error_inf, row.error_2, running])
    comments = [
        f"function={func.name} d={func.d} p={args.p or 'inf'} "
        f"log_exponent=3(d-1)={3 * (func.d - 1)}"
    ]
    write_out(csv_text(["n", "N", "error_inf", "error_2", "slope_running"], rows, comments), args.out)
    return EXIT_OK


def cmd_resources(args) -> int:
    p = parse_p(args.p or "2")
    eps_values = (
        [float(e) for e in args.eps.split(",")] if args.eps else DEFAULT_EPS_GRID
    )
    d_values = [args.d] if args.d is not None else [1, 2, 3, 4, 5]
    estimates = []
    for d in d_values:
        for eps in eps_values:
            try:
                est = analysis.resource_estimate(eps, d, p)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            estimates.append(
                {
                    "epsilon": est.epsilon, "d": est.d,
                    "p": "inf" if est.p == math.inf else est.p,
                    "formula": est.formula, "alpha": est.alpha, "beta": est.beta,
                    "lambert_w": est.lambert_w_value,
                    "refined_depth": est.predicted_depth_bound,
                    "refined_width": est.predicted_width_bound,
                    "simplified_depth": est.simplified_depth_bound,
                    "simplified_width": est.simplified_width_bound,
                }
            )
    measured = []
    n_values = parse_n_range(args) if (args.n is not None or args.n_range) else [1, 2, 3, 4]
    for d in d_values:
        for n in n_values:
            try:
                func = analysis.corpus_function("prod-quad", d)
            except KeyError:
                measured.append({"d": d, "n": n, "feasible": False,
                                 "reason": "no corpus function for this d"})
                continue
            smap = sparsegrid.surplus_coefficients(func.f, n, d)
            x = analysis.generic_point(d)
            terms = sparsegrid.chebyshev_expansion(smap, x)
            m = sum(1 for t in terms if t.weight != 0.0)
            width = d + max(0, math.ceil(math.log2(m))) + 1 if m else 0
            if not m or width > MAX_DENSE_WIDTH:
                measured.append({"d": d, "n": n, "terms": m, "width": width,
                                 "feasible": False, "reason": "width beyond dense ceiling"})
                continue
            _, report = lcu.evaluate_via_circuit(smap, x)
            measured.append(
                {"d": d, "n": n, "terms": m, "width": report.width,
                 "touch_depth": report.touch_depth, "gate_count": report.gate_count,
                 "feasible": True}
            )
    doc = {"p": "inf" if p == math.inf else p, "estimates": estimates, "measured": measured}
    if args.format == "csv":
        header = ["epsilon", "d", "formula", "lambert_w", "refined_depth",
                  "refined_width", "simplified_depth", "simplified_width"]
        rows = [[e["epsilon"], e["d"], e["formula"], e["lambert_w"], e["refined_depth"],
                 e["refined_width"], e["simplified_depth"], e["simplified_width"]]
                for e in estimates]
        write_out(csv_text(header, rows, [f"p={args.p or '2'}"]), args.out)
    else:
        write_out(json_text(doc), args.out)
    return EXIT_OK


def cmd_audit(args) -> int:
    n_max = args.n if args.n is not None else 4
    funcs = [
        fn for fn in analysis.corpus()
        if fn.d <= 2
        and (args.fn is None or fn.name == args.fn)
        and (args.d is None or fn.d == args.d)
    ]
    if not funcs:
        raise ConfigError("no corpus function matches the audit filter")
    reports = []
    failed = False
    for func in funcs:
        for n in range(1, n_max + 1):
            audit = analysis.coefficient_bound_audit(func, n, scale=args.scale_coeffs)
            gap = analysis.dual_oracle_gap(func, n)
            gap_tol = 1e-8 if func.d == 1 else 1e-6
            entry = {
                "function": func.name, "d": func.d, "n": n,
                "max_ratio_inf": audit.max_ratio_inf,
                "max_ratio_2": audit.max_ratio_2,
                "violations": [
                    {"level": list(g.level), "index": list(g.index),
                     "bound": which, "ratio": ratio}
                    for g, which, ratio in audit.violations
                ],
                "stencil_vs_integral_max_gap": gap,
                "gap_tolerance": gap_tol,
            }
            if audit.violations or gap > gap_tol:
                failed = True
            reports.append(entry)
    write_out(json_text({"scale": args.scale_coeffs, "pass": not failed,
                         "reports": reports}), args.out)
    return EXIT_VIOLATION if failed else EXIT_OK


def cmd_circuit(args) -> int:
    func = resolve_function(args)
    n = args.n if args.n is not None else 2
    points = parse_points(args.x or "0.5", func.d)
    x = points[0]
    smap = sparsegrid.surplus_coefficients(func.f, n, func.d)
    plan = lcu.plan_from_terms(
        sparsegrid.chebyshev_expansion(smap, x), func.d,
        include_identity=args.include_identity_gates,
    )
    if plan is None:
        write_out(json_text({"width": 0, "terms": 0, "one_norm": 0.0, "ops": []}), args.out)
        return EXIT_OK
    circuit = lcu.hadamard_test_circuit(lcu.assemble_lcu(plan))
    doc = {
        "function": func.name, "d": func.d, "n": n, "x": list(map(float, x)),
        "width": circuit.width, "terms": plan.term_count,
        "one_norm": plan.one_norm,
        "ops": lcu.circuit_json_ops(circuit),
    }
    write_out(json_text(doc), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkorobov",
        description="sparse-grid interpolants compiled to QSP+LCU circuits",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "eval": cmd_eval,
        "coeffs": cmd_coeffs,
        "convergence": cmd_convergence,
        "resources": cmd_resources,
        "audit": cmd_audit,
        "circuit": cmd_circuit,
    }
    for name, handler in commands.items():
        sp = sub.add_parser(name)
        sp.set_defaults(handler=handler)
        sp.add_argument("--config", help="JSON file with defaults; flags override")
        sp.add_argument("--fn", help="corpus function name (or 'zero')")
        sp.add_argument("--expr", help="product of factors, e.g. 'x(1-x)*sin(pi x)'")
        sp.add_argument("--d", type=int, help="dimension")
        sp.add_argument("--n", type=int, help="truncation level")
        sp.add_argument("--n-range", help="inclusive level range A..B")
        sp.add_argument("--p", help="norm: 2, inf, or a float in (2, inf)")
        sp.add_argument("--x", help="points: coords comma-separated, points ';'-separated")
        sp.add_argument("--eps", help="comma-separated epsilon grid (resources)")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=["csv", "json", "svg"], default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--normalized", action="store_true",
                        help="also report the pre-rescaling amplitude")
        sp.add_argument("--quadrature", action="store_true",
                        help="coeffs: add the integral-formula cross value per entry")
        sp.add_argument("--include-identity-gates", default=True,
                        action=argparse.BooleanOptionalAction,
                        help="materialise zero-angle phase gates (default on)")
        sp.add_argument("--scale-coeffs", type=float, default=1.0,
                        help="audit test hook: scale coefficients by this factor")
    return parser


_DEFAULT_FORMATS = {
    "eval": "csv", "coeffs": "json", "convergence": "csv",
    "resources": "json", "audit": "json", "circuit": "json",
}


_NON_NONE_DEFAULTS = {
    "seed": 0,
    "scale_coeffs": 1.0,
    "include_identity_gates": True,
    "normalized": False,
    "quadrature": False,
}


def _merge_config(args) -> None:
    """Fill argument slots from --config; explicit flags keep priority."""
    if not args.config:
        return
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read --config: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("--config must hold a JSON object")
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if attr in ("config", "handler", "command") or not hasattr(args, attr):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, attr) == _NON_NONE_DEFAULTS.get(attr, None):
            setattr(args, attr, value)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        _merge_config(args)
        if args.format is None:
            args.format = _DEFAULT_FORMATS[args.command]
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
