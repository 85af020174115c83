"""Command-line harness. Every output file starts with a comment line holding
the resolved configuration and master seed."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from plantedcycle import bayes, feasible, inference, ustat
from plantedcycle.feasible import ResourceError
from plantedcycle.io import atomic_write_text, csv_text, header_line
from plantedcycle.model import Adjacency, Params, ParamsError, sample_null, sample_planted
from plantedcycle.seeding import substream

EXIT_ASSERT, EXIT_CONFIG, EXIT_RESOURCE = 1, 2, 3


class ConfigError(ValueError):
    pass


# phase diagram


def region_label(a: float, b: float) -> str:
    """Phase-diagram region of (a, b) with p = n^-a, tau = n^-b.

    A lies beyond the information-theoretic line 1 - a - b = 0, B between it
    and the detection line 3 - 3a - 4b = 0, C between that and the recovery
    line 1 - a - 2b = 0, and D is the remaining easy corner. A point on a
    line gets the harder of its two neighbours.
    """
    if 1 - a - b <= 0:
        return "A"
    if 3 - 3 * a - 4 * b <= 0:
        return "B"
    if 1 - a - 2 * b <= 0:
        return "C"
    return "D"


def sweep_params(n: int, a: float, b: float, rho: float = 2.0) -> Params:
    p, tau = n ** (-a), n ** (-b)
    return Params.create(n, tau, p, p / rho)


def parse_range(spec: str) -> np.ndarray:
    """'lo:hi:step' (inclusive) or a comma-free single value."""
    parts = spec.split(":")
    if len(parts) == 1:
        return np.array([float(parts[0])])
    if len(parts) != 3:
        raise ConfigError(f"bad range {spec!r}; expected lo:hi:step")
    lo, hi, step = map(float, parts)
    if step <= 0 or hi < lo:
        raise ConfigError(f"bad range {spec!r}")
    k = int(math.floor((hi - lo) / step + 1e-9))
    return np.round(lo + step * np.arange(k + 1), 12)


def parse_grid(spec: str) -> tuple[np.ndarray, np.ndarray]:
    out = {}
    for item in spec.split(","):
        if "=" not in item:
            raise ConfigError(f"bad grid item {item!r}; expected name=lo:hi:step")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_range(v.strip())
    if set(out) != {"a", "b"}:
        raise ConfigError("grid must define exactly a and b")
    return out["a"], out["b"]


def sweep_records(args) -> list[dict]:
    a_vals, b_vals = parse_grid(args.grid)
    spec = inference.SearchSpec(args.mode, args.restarts, args.truth_init, not args.no_band)
    cells, rows = [], []
    for a in a_vals:
        for b in b_vals:
            try:
                cells.append((float(a), float(b), sweep_params(args.n, float(a), float(b), args.rho)))
            except ParamsError:
                cells.append((float(a), float(b), None))
    valid = [c[2] for c in cells if c[2] is not None]
    recs = iter(inference.risk_curve(valid, args.trials, spec, args.seed, args.threads) if valid else [])
    for a, b, p in cells:
        if p is None:
            tau, pp = args.n ** (-b), args.n ** (-a)
            row = {k: math.nan for k in inference.SWEEP_COLUMNS}
            row.update(n=args.n, tau=tau, p=pp, q=pp / args.rho, trials=0, seed=args.seed,
                       search_mode=spec.mode, truth_init=spec.truth_init)  # fmt: skip
        else:
            row = next(recs).as_row()
        row.update(a=a, b=b, region=region_label(a, b))
        rows.append(row)
    return rows


def phase_svg(rows: list[dict], size: int = 400) -> str:
    """Cells coloured by detection risk plus the three threshold lines."""
    pad = 30
    s = size - 2 * pad

    def xy(a, b):
        return pad + a * s, pad + (1 - b) * s

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
           f'<rect x="{pad}" y="{pad}" width="{s}" height="{s}" fill="none" stroke="black"/>']  # fmt: skip
    for row in rows:
        risk = float(row["detect_risk"])
        x, y = xy(float(row["a"]), float(row["b"]))
        if math.isnan(risk):
            fill = "#cccccc"
        else:
            v = int(255 * min(max(risk / 2, 0.0), 1.0))
            fill = f"rgb({v},{255 - v},80)"
        out.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="5" fill="{fill}"><title>{row["region"]} risk={risk:.3g}</title></circle>')
    for (a0, b0, a1, b1), color, dash in (
        ((0, 1, 1, 0), "black", ""),
        ((0, 0.75, 1, 0), "red", ' stroke-dasharray="2,3"'),
        ((0, 0.5, 1, 0), "blue", ' stroke-dasharray="6,4"'),
    ):
        x0, y0 = xy(a0, b0)
        x1, y1 = xy(a1, b1)
        out.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y1}" stroke="{color}"{dash}/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


# subcommands


def _params(args) -> Params:
    return Params.create(args.n, args.tau, args.p, args.q)


def _config(args) -> dict:
    skip = {"func", "config", "out", "svg", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def cmd_sample(args) -> str:
    params = _params(args)
    rng = substream(args.seed, 0)
    if args.model == "planted":
        A, X, z = sample_planted(params, rng)
    else:
        A, X, z = sample_null(params, rng), None, None
    body = A.to_edgelist() if args.format == "edgelist" else A.bitstring() + "\n"
    if args.with_truth and X is not None:
        body += "# truth " + X.bitstring() + "\n# z " + " ".join(repr(float(v)) for v in z) + "\n"
    return header_line(_config(args)) + "\n" + body


def _search_spec(args) -> inference.SearchSpec:
    return inference.SearchSpec(args.mode, args.restarts, args.truth_init, not args.no_band)


def cmd_detect(args) -> str:
    params = _params(args)
    spec = _search_spec(args)
    if args.input:
        A = _read_graph(args.input)
        res = inference.run_search(A, params.with_n(A.n), spec, substream(args.seed, 0))
        row = {"Lhat": res.Lhat, "kappa": inference.kappa(params.with_n(A.n)), "detect": inference.detect(res, params.with_n(A.n))}
        return csv_text([row], list(row), _config(args))
    pos, neg, outs = inference.score_samples(params, args.trials, spec, args.seed, args.threads)
    rec = inference.summarize(params, outs, spec, args.seed).as_row()
    cols = list(inference.SWEEP_COLUMNS)
    if args.auc:
        rec["auc"] = inference.auc(pos, neg)
        cols.append("auc")
    return csv_text([rec], cols, _config(args))


def cmd_recover(args) -> str:
    params = _params(args)
    spec = _search_spec(args)
    if args.input:
        A = _read_graph(args.input)
        res = inference.run_search(A, params.with_n(A.n), spec, substream(args.seed, 0))
        return header_line(_config(args)) + "\n" + f"# Lhat={res.Lhat}\n" + res.Xhat.to_edgelist()
    recs = inference.risk_curve([params], args.trials, spec, args.seed, args.threads, min_trials=1)
    return csv_text([r.as_row() for r in recs], inference.SWEEP_COLUMNS, _config(args))


def cmd_sweep(args) -> str:
    rows = sweep_records(args)
    if args.svg:
        atomic_write_text(args.svg, phase_svg(rows))
    return csv_text(rows, list(inference.SWEEP_COLUMNS) + ["region"], _config(args))


def cmd_divergence(args) -> str:
    params = _params(args)
    grid = bayes.LatentGrid(args.n, args.grid_m)
    thetas = np.linspace(params.r, params.p, args.thetas)
    payload = {"config": _config(args), **bayes.report(params, grid, thetas)}
    return json.dumps(payload, indent=2) + "\n"


def cmd_ustat_tail(args) -> str:
    params = _params(args)
    table = ustat.tail_envelope_compare(params, args.trials, args.seed, args.stat, threads=args.threads)
    cfg = {**_config(args), "K": table.K}
    return csv_text(table.rows(), ustat.TAIL_COLUMNS, cfg)


def cmd_mmse(args) -> str:
    params = _params(args)
    grid = bayes.LatentGrid(args.n, args.grid_m)
    thetas = np.linspace(params.r, params.p, args.thetas)
    rows = [
        {"theta": float(t), "mmse": bayes.mmse_exact(params, float(t), grid), "n": args.n, "tau": args.tau, "r": params.r, "grid_m": args.grid_m}
        for t in thetas
    ]
    return csv_text(rows, ["theta", "mmse", "n", "tau", "r", "grid_m"], _config(args))


def cmd_feasible_enum(args) -> str:
    fs = feasible.enumerate_feasible(args.n, args.tau, args.grid_m, args.method, args.threads)
    if args.band:
        fs = feasible.size_band_filter(fs)
    return header_line(_config(args)) + "\n" + fs.to_text()


def _read_graph(path) -> Adjacency:
    return Adjacency.from_edgelist(Path(path).read_text())


# parser


def _model_args(p: argparse.ArgumentParser, n: int = 40, tau: float = 0.1, pp: float = 0.6, q: float = 0.2) -> None:
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--tau", type=float, default=tau)
    p.add_argument("--p", type=float, default=pp)
    p.add_argument("--q", type=float, default=q)


def _search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("local", "exact"), default="local")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--truth-init", action="store_true")
    p.add_argument("--no-band", action="store_true", help="search all realizable graphs, not only the size band")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--input", help="edge-list file to analyse instead of simulating")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--config", help="key=value file; command-line flags take precedence")

    parser = argparse.ArgumentParser(prog="plantedcycle", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="draw a planted or null graph")
    _model_args(p)
    p.add_argument("--model", choices=("planted", "null"), default="planted")
    p.add_argument("--format", choices=("edgelist", "bitstring"), default="edgelist")
    p.add_argument("--with-truth", action="store_true")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("detect", parents=[common], help="scan test risk, or the decision for one graph")
    _model_args(p)
    _search_args(p)
    p.add_argument("--auc", action="store_true", help="also report the AUC of the scan statistic")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("recover", parents=[common], help="recovery ratio, or the estimate for one graph")
    _model_args(p)
    _search_args(p)
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("sweep", parents=[common], help="phase-diagram sweep over p = n^-a, tau = n^-b")
    p.add_argument("--n", type=int, default=400)
    p.add_argument("--grid", default="a=0.1:0.9:0.1,b=0.1:0.9:0.1")
    p.add_argument("--rho", type=float, default=2.0, help="density ratio p/q")
    _search_args(p)
    p.add_argument("--svg", help="also write a phase-diagram SVG here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("divergence", parents=[common], help="exact divergences and information (JSON)")
    _model_args(p, n=3, tau=0.25, pp=0.6, q=0.2)
    p.add_argument("--grid-m", type=int, default=16)
    p.add_argument("--thetas", type=int, default=11)
    p.set_defaults(func=cmd_divergence)

    p = sub.add_parser("ustat-tail", parents=[common], help="empirical tails against the envelope")
    _model_args(p, n=200, tau=0.05, pp=0.3, q=0.2)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--stat", choices=("T", "S"), default="T")
    p.set_defaults(func=cmd_ustat_tail)

    p = sub.add_parser("mmse", parents=[common], help="exact MMSE along the interpolation path")
    _model_args(p, n=3, tau=0.25, pp=0.6, q=0.2)
    p.add_argument("--grid-m", type=int, default=16)
    p.add_argument("--thetas", type=int, default=20)
    p.set_defaults(func=cmd_mmse)

    p = sub.add_parser("feasible-enum", parents=[common], help="enumerate realizable cycle graphs")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--tau", type=float, default=0.25)
    p.add_argument("--grid-m", type=int, default=feasible.DEFAULT_GRID_M)
    p.add_argument("--method", choices=("ordering", "grid"), default="ordering")
    p.add_argument("--band", action="store_true", help="keep only the edge-count band")
    p.set_defaults(func=cmd_feasible_enum)
    return parser


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def read_config(path) -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = read_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    actions = {a.dest: a for a in subparser._actions}  # noqa: SLF001
    defaults = {}
    for k, v in values.items():
        if k not in actions or k in ("config", "help"):
            raise ConfigError(f"unknown config key {k!r} for {args.command}")
        act = actions[k]
        if isinstance(act, argparse._StoreTrueAction):  # noqa: SLF001
            if v.lower() not in _TRUE | _FALSE:
                raise ConfigError(f"{k} expects a boolean, got {v!r}")
            defaults[k] = v.lower() in _TRUE
        else:
            try:
                defaults[k] = act.type(v) if act.type else v
            except ValueError as exc:
                raise ConfigError(f"bad value for {k}: {v!r}") from exc
            if act.choices and defaults[k] not in act.choices:
                raise ConfigError(f"{k} must be one of {sorted(act.choices)}")
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        text = args.func(args)
    except (ConfigError, ParamsError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except AssertionError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        atomic_write_text(args.out, text)
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
