"""``lagscope`` command line interface.

Exit codes: 0 success, 2 invalid input or usage, 3 numerical-consistency failure.
Data goes to files or stdout; diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import io
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .blocks import compare_n_blocks, search_changepoints
from .errors import LagscopeError, NumericalConsistencyError, ValidationError
from .lag_gauss import gauss_posterior_surface
from .lag_tte import TtePriorConfig, marginalize_background, tte_posterior_surface
from .posterior import lag_estimates
from .series import (
    read_events,
    read_sampled,
    read_weighted,
    to_indicator,
    write_events,
    write_sampled,
    write_weighted,
)
from .synth import synth_from_spec
from .xcorr import ccf_direct, ccf_fft

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3


def _git_hash() -> str:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def parse_grid(text: str, log: bool = False) -> np.ndarray:
    """``lo:hi:n`` with inclusive endpoints; log-spaced when ``log``."""
    try:
        lo_s, hi_s, n_s = text.split(":")
        lo, hi, n = float(lo_s), float(hi_s), int(n_s)
    except ValueError:
        raise ValidationError(f"grid {text!r} is not of the form lo:hi:n") from None
    if n < 1:
        raise ValidationError(f"grid {text!r} needs n >= 1")
    if n > 1 and not hi > lo:
        raise ValidationError(f"grid {text!r} needs hi > lo")
    if n == 1 and hi != lo:
        raise ValidationError(f"single-point grid {text!r} needs lo == hi")
    if log:
        if not lo > 0:
            raise ValidationError(f"log-spaced grid {text!r} needs lo > 0")
        return np.geomspace(lo, hi, n)
    return np.linspace(lo, hi, n)


def parse_window(text: str | None):
    if text is None:
        return None
    try:
        lo_s, hi_s = text.split(":")
        lo, hi = int(lo_s), int(hi_s)
    except ValueError:
        raise ValidationError(f"lag window {text!r} is not of the form lo:hi") from None
    if hi < lo:
        raise ValidationError(f"lag window {text!r} is empty")
    return lo, hi


def _read_path(p: str) -> Path:
    path = Path(p)
    if not path.is_file():
        raise ValidationError(f"input file not found: {p}")
    return path


def _looks_sampled(path: Path) -> bool:
    with open(path, "rb") as fh:
        for raw in fh:
            line = raw.decode("utf-8", "replace").strip()
            if line and not line.startswith("#"):
                return line.replace(" ", "").lower().startswith("t,y")
    return False


def _emit(text: str, out_dir: Path | None, name: str) -> None:
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / name).write_text(text)


def _json(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


def _surface_csv(surface) -> str:
    buf = io.StringIO()
    buf.write("tau,a,log_post\n")
    norm = surface.normalized()
    for i, t in enumerate(surface.tau_grid):
        for j, a in enumerate(surface.a_grid):
            buf.write(f"{int(t)},{float(a)!r},{float(norm[i, j])!r}\n")
    return buf.getvalue()


def _finish_lag(args, surface, mode: str) -> int:
    est = lag_estimates(surface, parse_window(args.tau_window), args.level)
    summary = {"mode": mode, "M": surface.span, **est.as_dict()}
    out_dir = Path(args.out) if args.out else None
    _emit(_surface_csv(surface), out_dir, "surface.csv")
    text = _json(summary)
    _emit(text, out_dir, "summary.json")
    sys.stdout.write(text)
    return EXIT_OK


def _a_grid(args):
    return parse_grid(args.a_grid, log=not args.a_linear)


# --------------------------------------------------------------------------
# subcommands


def cmd_ccf(args) -> int:
    px, py = _read_path(args.x), _read_path(args.y)
    if _looks_sampled(px) and _looks_sampled(py):
        x, y = read_sampled(px).values, read_sampled(py).values
    else:
        x = to_indicator(read_events(px, m=args.m)).bits
        y = to_indicator(read_events(py, m=args.m)).bits
    ccf = ccf_fft(x, y) if args.method == "fft" else ccf_direct(x, y)
    buf = io.StringIO()
    buf.write("tau,gamma\n")
    integral = ccf.gamma.dtype.kind in "iu"
    for tau, g in enumerate(ccf.gamma):
        buf.write(f"{tau},{int(g) if integral else repr(float(g))}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_lag_tte(args) -> int:
    cfg = TtePriorConfig(s0=args.s0, s1=args.s1, b_x=args.bx, b_y=args.by)
    x = read_events(_read_path(args.x), m=args.m)
    y = read_events(_read_path(args.y), m=args.m)
    a = _a_grid(args)
    if args.bx_grid or args.by_grid:
        bxg = parse_grid(args.bx_grid) if args.bx_grid else [args.bx]
        byg = parse_grid(args.by_grid) if args.by_grid else [args.by]
        surface = marginalize_background(x, y, None, a, cfg, bxg, byg)
    else:
        surface = tte_posterior_surface(x, y, None, a, cfg)
    return _finish_lag(args, surface, "tte")


def cmd_lag_gauss(args) -> int:
    x = read_sampled(_read_path(args.x))
    y = read_sampled(_read_path(args.y))
    if (args.sigma_x is None) != (args.sigma_y is None):
        raise ValidationError("--sigma-x and --sigma-y must be given together")
    noise = None if args.sigma_x is None else (args.sigma_x, args.sigma_y)
    surface = gauss_posterior_surface(x, y, None, _a_grid(args), noise)
    return _finish_lag(args, surface, "gauss")


def _read_candidates(path: str | None):
    if path is None:
        return None
    vals = []
    for lineno, line in enumerate(_read_path(path).read_text().splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        try:
            vals.append(float(s))
        except ValueError:
            raise ValidationError(f"{path} line {lineno}: not a number: {s!r}") from None
    return vals


def cmd_blocks(args) -> int:
    data = read_weighted(_read_path(args.data))
    cands = _read_candidates(args.candidates)
    if args.n_blocks is not None:
        res = search_changepoints(data, args.n_blocks, cands)
        ranked = [(args.n_blocks, res, res.log_marginal)]
        best = res
    else:
        ranked = compare_n_blocks(data, args.n_max, args.gamma, cands)
        best = max(ranked, key=lambda r: r[2])[1]
    buf = io.StringIO()
    buf.write("n_blocks,changepoints,log_marginal\n")
    for k, res, _ in ranked:
        for cps, lm in zip(res.configurations, res.log_marginals):
            buf.write(f"{k},{';'.join(repr(float(c)) for c in cps)},{float(lm)!r}\n")
    summary = {
        "n_blocks": best.model.n_blocks,
        "changepoints": [float(c) for c in best.model.changepoints],
        "heights": [float(h) for h in best.model.heights],
        "log_marginal": best.log_marginal,
    }
    if args.n_blocks is None:
        summary["scores"] = {str(k): float(s) for k, _, s in ranked}
    out_dir = Path(args.out) if args.out else None
    _emit(buf.getvalue(), out_dir, "table.csv")
    text = _json(summary)
    _emit(text, out_dir, "summary.json")
    sys.stdout.write(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    doc = None
    if args.spec:
        try:
            doc = json.loads(_read_path(args.spec).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"spec file is not valid JSON: {exc}") from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = synth_from_spec(args.mode, doc, args.seed)
    if args.mode == "tte":
        write_events(out / "x.evt", result[0])
        write_events(out / "y.evt", result[1])
        written = ["x.evt", "y.evt"]
    elif args.mode == "gauss":
        write_sampled(out / "x.csv", result[0])
        write_sampled(out / "y.csv", result[1])
        written = ["x.csv", "y.csv"]
    else:
        write_weighted(out / "data.csv", result)
        written = ["data.csv"]
    for name in written:
        print(out / name, file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lagscope",
        description="Bayesian lag estimation and piecewise-constant structure estimation.",
    )
    ap.add_argument("--version", action="version",
                    version=f"lagscope {__version__} (git {_git_hash()})")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("ccf", help="circular cross-correlation -> CSV tau,gamma")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--m", type=int, help="span M for event files without a header")
    p.add_argument("--method", choices=("fft", "direct"), default="fft")
    p.set_defaults(func=cmd_ccf)

    def lag_common(q):
        q.add_argument("--a-grid", default="0.1:10:25", help="lo:hi:n (default 0.1:10:25)")
        q.add_argument("--a-linear", action="store_true", help="linear instead of log-spaced a grid")
        q.add_argument("--tau-window", help="lo:hi inclusive lag window for the estimates")
        q.add_argument("--level", type=float, default=0.95, help="HPD credible level")
        q.add_argument("--out", help="directory for surface.csv and summary.json")

    p = sub.add_parser("lag-tte", help="lag posterior for time-tagged event files")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--m", type=int, help="span M for event files without a header")
    p.add_argument("--s0", type=float, required=True)
    p.add_argument("--s1", type=float, required=True)
    p.add_argument("--bx", type=float, default=0.0)
    p.add_argument("--by", type=float, default=0.0)
    p.add_argument("--bx-grid", help="lo:hi:n background grid for X (marginalized)")
    p.add_argument("--by-grid", help="lo:hi:n background grid for Y (marginalized)")
    lag_common(p)
    p.set_defaults(func=cmd_lag_tte)

    p = sub.add_parser("lag-gauss", help="lag posterior for evenly sampled t,y,sigma files")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--sigma-x", type=float)
    p.add_argument("--sigma-y", type=float)
    lag_common(p)
    p.set_defaults(func=cmd_lag_gauss)

    p = sub.add_parser("blocks", help="piecewise-constant fit to weighted data")
    p.add_argument("--data", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--n-blocks", type=int)
    g.add_argument("--n-max", type=int)
    p.add_argument("--gamma", type=float, default=0.5, help="geometric prior on block count")
    p.add_argument("--candidates", help="file with one candidate changepoint per line")
    p.add_argument("--out", help="directory for table.csv and summary.json")
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser("synth", help="generate synthetic data files")
    p.add_argument("mode", choices=("tte", "gauss", "blocks"))
    p.add_argument("--spec", help="JSON generator spec (defaults built in)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_synth)
    return ap


def _thread_cap():
    raw = os.environ.get("LAGSCOPE_THREADS")
    if not raw:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"LAGSCOPE_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"LAGSCOPE_THREADS must be >= 1, got {n}")
    return n


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        cap = _thread_cap()
        if cap is None:
            return args.func(args)
        from threadpoolctl import threadpool_limits
        with threadpool_limits(limits=cap):
            return args.func(args)
    except NumericalConsistencyError as exc:
        print(f"lagscope: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (LagscopeError, OSError) as exc:
        print(f"lagscope: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
