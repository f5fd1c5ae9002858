"""Command-line interface: ``indeflyap {classify,verify,simulate,kappa,examples}``.

Exit codes: 0 pass / stable, 1 violation / not stable, 2 inconclusive,
3 usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import os
import shutil
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import exprlang as el
from .certificates import CertificateError
from .gronwall import DriftPair, kappa
from .odesim import simulate
from .quadsig import ScalarSignal, StabilityClass, classify, default_t0_samples
from .report import dumps, format_float, svg_plot
from .sysfile import SystemFileError, load_system
from .verify import analyze, envelope_for

EXIT_PASS, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
SEED_ENV = "INDEF_LYAP_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _numbers(text: str, what: str) -> list[float]:
    try:
        return [float(el.evaluate(el.parse(p), {})) for p in text.split(",") if p.strip()]
    except el.ExprError as exc:
        raise UsageError(f"{what}: {exc}") from None


def _number(text: str, what: str) -> float:
    vals = _numbers(text, what)
    if len(vals) != 1:
        raise UsageError(f"{what}: expected one number")
    return vals[0]


def _signal(src: str, args, what: str) -> ScalarSignal:
    kinks = _numbers(args.kinks, "--kinks") if args.kinks else ()
    period = None
    if args.kink_period:
        vals = _numbers(args.kink_period, "--kink-period")
        if len(vals) != 2:
            raise UsageError("--kink-period expects 'offset,period'")
        period = (vals[0], vals[1])
    try:
        return ScalarSignal(el.parse(src), _number(args.start, "--start"), tuple(kinks), period)
    except (el.ExprError, ValueError) as exc:
        raise UsageError(f"{what}: {exc}") from None


def _cell(x) -> str:
    return format_float(float(x)).strip('"')


def _envelope_meta(data: bytes | None, command: str) -> dict:
    return {
        "tool": {"name": "indeflyap", "version": __version__},
        "command": command,
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "input_sha256": hashlib.sha256(data).hexdigest() if data is not None else None,
    }


def _emit(text: str, path: str | None) -> None:
    if path and path != "-":
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _load(path: str, args):
    try:
        analysis, data = load_system(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    seed = os.environ.get(SEED_ENV)
    if seed is not None:
        try:
            analysis.seed = int(seed)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {seed!r}") from None
    if getattr(args, "seed", None) is not None:
        analysis.seed = args.seed
    return analysis, data


# --------------------------------------------------------------------------
# commands

def cmd_classify(args) -> int:
    mu = _signal(args.mu, args, "--mu")
    horizon = _number(args.horizon, "--horizon")
    t0s = _numbers(args.t0, "--t0") if args.t0 else default_t0_samples(mu, horizon)
    period = _number(args.period, "--period") if args.period else None
    verdict = classify(mu, horizon, t0s, args.alpha_min, period=period)
    out = _envelope_meta(None, "classify")
    out.update({"mu": mu.label, "start": mu.start, "verdict": verdict.to_dict()})
    _emit(dumps(out), args.output)
    if verdict.inconclusive:
        return EXIT_INCONCLUSIVE
    return EXIT_FAIL if verdict.cls is StabilityClass.NONE else EXIT_PASS


def cmd_verify(args) -> int:
    analysis, data = _load(args.system, args)
    result = analyze(analysis, args.epsilon)
    out = _envelope_meta(data, "verify")
    out["report"] = result.report
    _emit(dumps(out), args.output)
    if args.plot and result.trajectory is not None:
        traj = result.trajectory
        grid = traj.dense_grid(2)
        series = [("|x(t)|", grid, np.linalg.norm(traj.state_at(grid), axis=1), "#1f4e9c")]
        if result.envelope is not None:
            series.append(("envelope", grid, np.asarray(result.envelope(grid)), "#c0392b"))
        Path(args.plot).write_text(svg_plot(series, title=analysis.name))
    for reason in result.reasons:
        print(f"{analysis.name}: {reason}", file=sys.stderr)
    return result.status


def cmd_simulate(args) -> int:
    analysis, _ = _load(args.system, args)
    t0 = _number(args.t0, "--t0") if args.t0 is not None else analysis.t0
    x0 = tuple(_numbers(args.x0, "--x0")) if args.x0 is not None else analysis.x0
    tf = _number(args.tf, "--tf") if args.tf is not None else analysis.tf
    if len(x0) != analysis.field.n:
        raise UsageError(f"--x0 needs {analysis.field.n} values")
    analysis.t0, analysis.x0, analysis.tf = t0, x0, tf
    traj = simulate(analysis.field, analysis.inputs, t0, x0, tf, analysis.rtol, analysis.atol)
    grid = np.linspace(t0, traj.t_end, args.points) if args.points else traj.times
    states = traj.state_at(grid)
    env = None if args.no_envelope else envelope_for(analysis, traj)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = analysis.field.n
    writer.writerow(["t"] + [f"x{i}" for i in range(1, n + 1)] + ["norm"] + (["env"] if env else []))
    norms = np.linalg.norm(states, axis=1)
    bounds = np.asarray(env(grid)) if env else None
    for i, t in enumerate(grid):
        row = [_cell(t)] + [_cell(v) for v in states[i]] + [_cell(norms[i])]
        if bounds is not None:
            row.append(_cell(bounds[i]))
        writer.writerow(row)
    _emit(buf.getvalue(), args.csv)
    if not traj.ok:
        print(f"simulation stopped: {traj.message}", file=sys.stderr)
        return EXIT_FAIL if traj.status == "diverged" else EXIT_INCONCLUSIVE
    return EXIT_PASS


def cmd_kappa(args) -> int:
    mu = _signal(args.mu, args, "--mu")
    pi = _signal(args.pi, args, "--pi")
    t0 = _number(args.t0, "--t0")
    horizon = _number(args.horizon, "--horizon")
    step = _number(args.grid_step, "--grid-step") if args.grid_step else None
    try:
        curve = kappa(DriftPair(mu, pi, check_until=horizon), t0, horizon, step)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _envelope_meta(None, "kappa")
    out.update({"mu": mu.label, "pi": pi.label, "kappa": curve.to_dict()})
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "kappa"])
        for t, v in zip(curve.ts, curve.values):
            writer.writerow([_cell(t), _cell(v)])
        if args.csv == "-":
            sys.stdout.write(buf.getvalue())
            sys.stderr.write(dumps(out))
        else:
            Path(args.csv).write_text(buf.getvalue())
            sys.stdout.write(dumps(out))
    else:
        sys.stdout.write(dumps(out))
    if curve.overflow or not curve.bounded:
        return EXIT_FAIL
    return EXIT_PASS if curve.vanishing else EXIT_INCONCLUSIVE


def shipped_examples() -> list[str]:
    root = resources.files("indeflyap") / "data"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".sys"))


def cmd_examples(args) -> int:
    names = shipped_examples()
    if args.list:
        for name in names:
            print(name)
        return EXIT_PASS
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    root = resources.files("indeflyap") / "data"
    for name in names:
        target = dest / name
        if target.exists() and not args.force:
            print(f"skipping existing {target}", file=sys.stderr)
            continue
        with resources.as_file(root / name) as src:
            shutil.copyfile(src, target)
        print(target)
    return EXIT_PASS


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="indeflyap", description="Stability analysis with indefinite Lyapunov derivatives.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def signal_opts(sp):
        sp.add_argument("--start", default="0", help="left end of the rate's domain")
        sp.add_argument("--kinks", help="comma-separated points where the signal is not smooth")
        sp.add_argument("--kink-period", help="'offset,period' of periodic kinks")

    c = sub.add_parser("classify", help="classify a scalar rate mu(t)")
    c.add_argument("--mu", required=True, help="expression in t")
    c.add_argument("--horizon", default="200")
    c.add_argument("--t0s", "--t0", dest="t0", help="comma-separated initial times to test")
    c.add_argument("--alpha-min", type=float, default=1e-3, help="smallest decay rate counted as exponential")
    c.add_argument("--period", help="period of mu, enables the window test")
    c.add_argument("--output", "-o")
    signal_opts(c)
    c.set_defaults(func=cmd_classify)

    v = sub.add_parser("verify", help="run the full pipeline on a system file")
    v.add_argument("system")
    v.add_argument("--epsilon", type=float, default=1e-6, help="relative containment slack")
    v.add_argument("--seed", type=int)
    v.add_argument("--plot", help="write an SVG of |x(t)| and the envelope")
    v.add_argument("--output", "-o")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="integrate a system file and print CSV")
    s.add_argument("system")
    s.add_argument("--t0")
    s.add_argument("--x0", help="comma-separated initial state")
    s.add_argument("--tf")
    s.add_argument("--points", type=int, help="uniform output grid size (default: step points)")
    s.add_argument("--no-envelope", action="store_true")
    s.add_argument("--seed", type=int)
    s.add_argument("--csv", help="output path ('-' or omitted for stdout)")
    s.set_defaults(func=cmd_simulate)

    k = sub.add_parser("kappa", help="compute the drift term kappa(t, t0)")
    k.add_argument("--mu", required=True)
    k.add_argument("--pi", required=True)
    k.add_argument("--t0", default="0")
    k.add_argument("--horizon", default="200")
    k.add_argument("--grid-step")
    k.add_argument("--csv", help="write the sampled curve; '-' sends CSV to stdout and JSON to stderr")
    signal_opts(k)
    k.set_defaults(func=cmd_kappa)

    e = sub.add_parser("examples", help="copy the shipped example system files")
    e.add_argument("--dest", default=".")
    e.add_argument("--list", action="store_true")
    e.add_argument("--force", action="store_true", help="overwrite existing files")
    e.set_defaults(func=cmd_examples)
    return p


_VALUE_OPTIONS = {"--mu", "--pi", "--t0", "--t0s", "--x0", "--tf", "--start", "--kinks", "--kink-period", "--horizon"}


def _join_negative_values(argv: list[str]) -> list[str]:
    """Rewrite ``--mu -2/(1+t)`` as ``--mu=-2/(1+t)`` so argparse does not read the value as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-") and argv[i + 1] != "-":
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except SystemFileError as exc:
        print(f"indeflyap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UsageError, CertificateError) as exc:
        print(f"indeflyap: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
