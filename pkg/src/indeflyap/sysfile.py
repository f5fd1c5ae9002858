"""Reader for sectioned ``.sys`` system-definition files.

Example::

    [system]
    dim = 1
    f1 = -x1/(t+sin(x1))

    [certificate]
    theorem = T1
    V = x1^2
    mu = -2/(1+t)
    mu_start = 1

    [bounds]
    alpha1 = power k=1 m=2
    alpha2 = power k=1 m=2

    [analysis]
    t0 = 2
    x0 = 1
    tf = 50
    box = t:1.5:60, x1:-3:3

Numeric values accept constant expressions such as ``pi/2``.
"""

from __future__ import annotations

import configparser
import re
from pathlib import Path

import numpy as np

from . import exprlang as el
from .certificates import Certificate, ComparisonFn, MonotoneExpr, PowerForm, Theorem
from .odesim import InputSignal
from .quadsig import ScalarSignal
from .verify import Analysis

__all__ = ["SystemFileError", "load_system", "parse_system", "parse_box", "parse_bound"]


class SystemFileError(ValueError):
    """Malformed or incomplete system file; ``key`` names the offending entry."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(message)


def _number(text: str, key: str) -> float:
    try:
        return float(el.evaluate(el.parse(text), {}))
    except el.ExprError as exc:
        raise SystemFileError(f"{key}: {exc}", key) from None


def _numbers(text: str, key: str) -> list[float]:
    return [_number(p, key) for p in text.split(",") if p.strip()]


def _expr(text: str, key: str, **kw) -> el.Expr:
    try:
        return el.parse(text, **kw)
    except el.ExprError as exc:
        raise SystemFileError(f"{key}: {exc}", key) from None


def parse_box(text: str) -> dict[str, tuple[float, float]]:
    """``"t:0:20, x1:-3:3"`` -> ``{"t": (0, 20), "x1": (-3, 3)}``."""
    box = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        pieces = part.split(":")
        if len(pieces) != 3:
            raise SystemFileError(f"analysis.box: expected name:lo:hi, got {part!r}", "analysis.box")
        name, lo, hi = pieces
        lo_v, hi_v = _number(lo, "analysis.box"), _number(hi, "analysis.box")
        if not lo_v <= hi_v:
            raise SystemFileError(f"analysis.box: empty range for {name.strip()}", "analysis.box")
        box[name.strip()] = (lo_v, hi_v)
    return box


_POWER = re.compile(r"power\s+k\s*=\s*(?P<k>.+?)\s+m\s*=\s*(?P<m>\S+)\s*$")


def parse_bound(text: str, key: str) -> ComparisonFn:
    """``power k=<expr in t> m=<real>`` or ``expr <expression in t, s>``."""
    text = text.strip()
    m = _POWER.fullmatch(text)
    if m:
        k_expr = _expr(m.group("k"), key)
        extra = el.free_vars(k_expr) - {"t"}
        if extra:
            raise SystemFileError(f"{key}: k may depend on t only", key)
        k = float(el.evaluate(k_expr, {})) if not el.free_vars(k_expr) else ScalarSignal(k_expr)
        try:
            return PowerForm(k, _number(m.group("m"), key))
        except ValueError as exc:
            raise SystemFileError(f"{key}: {exc}", key) from None
    if text.startswith("expr "):
        return MonotoneExpr(_expr(text[5:], key))
    raise SystemFileError(f"{key}: expected 'power k=<expr> m=<real>' or 'expr <expression>'", key)


def _get(cp: configparser.ConfigParser, section: str, key: str, default=None, required=False):
    if cp.has_option(section, key):
        return cp.get(section, key).strip()
    if required:
        raise SystemFileError(f"missing key '{section}.{key}'", f"{section}.{key}")
    return default


def _quadratic_coefficient(V: el.Expr, n: int) -> float | None:
    """``c`` when ``V(t, x) = c |x|^2`` at random sample points, else ``None``."""
    rng = np.random.default_rng(12345)
    fn = el.compile_numpy(V, ["t"] + [f"x{i}" for i in range(1, n + 1)])
    t = rng.uniform(0.0, 50.0, 64)
    x = rng.uniform(-3.0, 3.0, (64, n))
    try:
        vals = fn(t, *[x[:, j] for j in range(n)])
    except el.ExprError:
        return None
    ratio = vals / np.sum(x * x, axis=1)
    c = float(np.median(ratio))
    if c > 0 and np.allclose(ratio, c, rtol=1e-12, atol=0):
        return c
    return None


def _signal(cp, key: str, start: float, kinks, period) -> ScalarSignal:
    return ScalarSignal(_expr(_get(cp, "certificate", key, required=True), f"certificate.{key}"),
                        start, tuple(kinks), period)


def parse_system(text: str, name: str = "system") -> Analysis:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise SystemFileError(f"unreadable system file: {exc}") from None
    for section in ("system", "certificate"):
        if not cp.has_section(section):
            raise SystemFileError(f"missing section [{section}]", section)

    n = int(_number(_get(cp, "system", "dim", required=True), "system.dim"))
    m = int(_number(_get(cp, "input", "dim", "0"), "input.dim")) if cp.has_section("input") else 0
    if n < 1 or m < 0:
        raise SystemFileError("system.dim must be >= 1 and input.dim >= 0", "system.dim")
    comps = [_get(cp, "system", f"f{i}", required=True) for i in range(1, n + 1)]
    try:
        fld = el.VectorField(n, m, tuple(_expr(c, f"system.f{i}", n=n, m=m) for i, c in enumerate(comps, 1)))
    except el.ExprError as exc:
        raise SystemFileError(f"system: {exc}", "system") from None
    inputs = None
    if m:
        srcs = []
        for j in range(1, m + 1):
            raw = _get(cp, "input", f"u{j}", "zero")
            srcs.append("0" if raw.lower() == "zero" else raw)
        inputs = InputSignal(tuple(_expr(s, f"input.u{j}") for j, s in enumerate(srcs, 1)))

    theorem_txt = _get(cp, "certificate", "theorem", "T1")
    try:
        theorem = Theorem.parse(theorem_txt)
    except ValueError as exc:
        raise SystemFileError(f"certificate.theorem: {exc}", "certificate.theorem") from None
    V = _expr(_get(cp, "certificate", "V", required=True), "certificate.V", n=n, m=0)
    start = _number(_get(cp, "certificate", "mu_start", "0"), "certificate.mu_start")
    kinks = _numbers(_get(cp, "certificate", "kinks", ""), "certificate.kinks")
    period_txt = _get(cp, "certificate", "kink_period")
    period = None
    if period_txt:
        vals = _numbers(period_txt, "certificate.kink_period")
        if len(vals) != 2:
            raise SystemFileError("certificate.kink_period: expected 'offset, period'", "certificate.kink_period")
        period = (vals[0], vals[1])
    mu = _signal(cp, "mu", start, kinks, period)
    pi = _signal(cp, "pi", start, kinks, period) if cp.has_option("certificate", "pi") else None
    gains = {}
    for g in ("rho", "rho1", "rho2"):
        if cp.has_option("certificate", g):
            gains[g] = _expr(_get(cp, "certificate", g), f"certificate.{g}")
    pair = None
    if cp.has_option("certificate", "alpha") or cp.has_option("certificate", "beta"):
        pair = (_number(_get(cp, "certificate", "alpha", required=True), "certificate.alpha"),
                _number(_get(cp, "certificate", "beta", required=True), "certificate.beta"))

    bounds = {}
    for key in ("alpha1", "alpha2"):
        if cp.has_option("bounds", key):
            bounds[key] = parse_bound(cp.get("bounds", key), f"bounds.{key}")
    if len(bounds) < 2:
        c = _quadratic_coefficient(V, n)
        if c is None:
            missing = "alpha1" if "alpha1" not in bounds else "alpha2"
            raise SystemFileError(f"missing key 'bounds.{missing}' (V is not of the form c|x|^2)",
                                  f"bounds.{missing}")
        for key in ("alpha1", "alpha2"):
            bounds.setdefault(key, PowerForm(c, 2))
    try:
        cert = Certificate(V, n, mu, bounds["alpha1"], bounds["alpha2"], theorem, pi=pi,
                           certified_pair=pair, m=m, **gains)
    except ValueError as exc:
        raise SystemFileError(f"certificate: {exc}", "certificate") from None

    def num(key, default):
        raw = _get(cp, "analysis", key)
        return default if raw is None else _number(raw, f"analysis.{key}")

    t0 = num("t0", start)
    x0_txt = _get(cp, "analysis", "x0", ",".join(["1"] * n))
    x0 = tuple(_numbers(x0_txt, "analysis.x0"))
    if len(x0) != n:
        raise SystemFileError(f"analysis.x0: expected {n} values, got {len(x0)}", "analysis.x0")
    tf = num("tf", t0 + 50.0)
    horizon = num("horizon", max(200.0, tf))
    box_txt = _get(cp, "analysis", "box")
    box = parse_box(box_txt) if box_txt else {}
    box.setdefault("t", (t0, max(tf, t0 + 1.0)))
    for i in range(1, n + 1):
        box.setdefault(f"x{i}", (-3.0, 3.0))
    for j in range(1, m + 1):
        box.setdefault(f"u{j}", (-1.0, 1.0))
    period_mu = _get(cp, "analysis", "period")
    return Analysis(
        name=_get(cp, "analysis", "name", name), field=fld, cert=cert, inputs=inputs, t0=t0, x0=x0, tf=tf,
        horizon=horizon, rtol=num("rtol", 1e-9), atol=num("atol", 1e-12), seed=int(num("seed", 0)),
        samples=int(num("samples", 20000)), box=box, description=_get(cp, "analysis", "description", ""),
        iiss_variant=_get(cp, "analysis", "iiss_variant", "stated"),
        period=_number(period_mu, "analysis.period") if period_mu else None,
    )


def load_system(path: str | Path) -> tuple[Analysis, bytes]:
    """Parse a system file; returns the analysis and the raw bytes (for hashing)."""
    data = Path(path).read_bytes()
    return parse_system(data.decode("utf-8"), Path(path).stem), data
