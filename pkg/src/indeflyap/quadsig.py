"""Scalar rate functions: integrals, transition factors and stability classes.

A rate ``mu`` drives the scalar system ``y' = mu(t) y`` whose transition
factor is ``phi(t, t0) = exp(int_{t0}^t mu)``.  The classes reported here
are finite-horizon surrogates for the limit statements that define them:
every verdict carries its horizon and sampled initial times.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import exprlang as el
from .quadrature import integrate_panels, split_panels

__all__ = [
    "ScalarSignal", "CumulativeIntegral", "TransitionFactor", "StabilityClass", "StabilityVerdict",
    "integrate", "transition_factor", "classify", "verdict_from_pair", "check_pair", "grid_pair_slack",
    "periodic_test", "positive_part_integral", "golden_section_min",
    "DEFAULT_TOL", "DEFAULT_HORIZON",
]

DEFAULT_TOL = 1e-10
DEFAULT_HORIZON = 200.0
MAX_PANEL_WIDTH = 1.0
EXP_OVERFLOW = 700.0


@dataclass(frozen=True, eq=False)
class ScalarSignal:
    """A piecewise-continuous scalar function of ``t`` on ``[start, inf)``.

    ``kinks`` and ``kink_period = (offset, period)`` mark points where the
    function is not smooth; integration panels are split there.
    """

    expr: el.Expr | None
    start: float = 0.0
    kinks: tuple[float, ...] = ()
    kink_period: tuple[float, float] | None = None
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.expr is not None:
            extra = el.free_vars(self.expr) - {"t"}
            if extra:
                raise el.ExprNameError(sorted(extra)[0], None, "scalar signals depend on t only, got")
            if self.fn is None:
                object.__setattr__(self, "fn", el.compile_numpy(self.expr, ["t"]))
            if not self.label:
                object.__setattr__(self, "label", el.to_text(self.expr))
        elif self.fn is None:
            raise ValueError("a signal needs an expression or a function")
        if self.kink_period is not None and self.kink_period[1] <= 0:
            raise ValueError("kink period must be positive")

    @classmethod
    def parse(cls, source: str, start: float = 0.0, kinks: Sequence[float] = (),
              kink_period: tuple[float, float] | None = None) -> "ScalarSignal":
        return cls(el.parse(source), float(start), tuple(kinks), kink_period)

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], start: float = 0.0,
                      kinks: Sequence[float] = (), label: str = "<function>") -> "ScalarSignal":
        """Wrap a vectorized callable, e.g. a piecewise-constant test signal."""
        return cls(None, float(start), tuple(sorted(kinks)), None, fn, label)

    def __call__(self, t):
        arr = np.asarray(t, dtype=float)
        out = np.broadcast_to(np.asarray(self.fn(arr), dtype=float), arr.shape)
        return float(out) if out.ndim == 0 else np.array(out)

    def kink_points(self, a: float, b: float) -> np.ndarray:
        pts = [k for k in self.kinks if a < k < b]
        if self.kink_period is not None:
            off, per = self.kink_period
            j0 = math.ceil((a - off) / per)
            j1 = math.floor((b - off) / per)
            pts.extend(off + j * per for j in range(j0, j1 + 1) if a < off + j * per < b)
        return np.unique(np.asarray(pts, dtype=float))

    def _derived(self, expr: el.Expr | None, fn, label: str) -> "ScalarSignal":
        if expr is not None:
            return ScalarSignal(expr, self.start, self.kinks, self.kink_period)
        return ScalarSignal(None, self.start, self.kinks, self.kink_period, fn, label)

    def scaled(self, c: float) -> "ScalarSignal":
        if self.expr is not None and c >= 0:
            return self._derived(el.BinOp("*", el.Num(c), self.expr), None, "")
        base = self.fn
        return self._derived(None, lambda t: c * base(t), f"{c!r}*({self.label})")

    def plus_constant(self, c: float) -> "ScalarSignal":
        if self.expr is not None:
            op = "+" if c >= 0 else "-"
            return self._derived(el.BinOp(op, self.expr, el.Num(abs(c))), None, "")
        base = self.fn
        return self._derived(None, lambda t: base(t) + c, f"({self.label})+{c!r}")


def _check_range(signal: ScalarSignal, a: float) -> None:
    if a < signal.start:
        raise ValueError(f"interval starts at {a} before the signal domain start {signal.start}")


def _edges(signals: Sequence[ScalarSignal], a: float, b: float, extra=()) -> np.ndarray:
    breaks = [k for s in signals for k in s.kink_points(a, b)]
    breaks.extend(extra)
    return split_panels(a, b, breaks, MAX_PANEL_WIDTH)


def integrate(signal: ScalarSignal, a: float, b: float, tol: float = DEFAULT_TOL) -> float:
    """Integral of ``signal`` over ``[a, b]`` to absolute accuracy ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_range(signal, min(a, b))
    if a == b:
        return 0.0
    lo, hi, sign = (a, b, 1.0) if a < b else (b, a, -1.0)
    e = _edges([signal], lo, hi)
    res = integrate_panels(signal.fn, e[:-1], e[1:], tol)
    return sign * float(res.values[0])


class CumulativeIntegral:
    """``M(t) = int_{start}^t mu`` cached on an adaptive partition of ``[start, end]``."""

    def __init__(self, signal: ScalarSignal, start: float, end: float, tol: float = DEFAULT_TOL,
                 breakpoints: Sequence[float] = ()):
        _check_range(signal, start)
        if end < start:
            raise ValueError("end < start")
        self.signal = signal
        self.start = float(start)
        self.end = float(end)
        self.tol = tol
        if end == start:
            self.nodes = np.array([start])
            self.values = np.array([0.0])
            return
        e = _edges([signal], start, end, breakpoints)
        # tolerance shared by width so every cumulative value meets ``tol``
        share = tol * np.diff(e) / (end - start)
        res = integrate_panels(signal.fn, e[:-1], e[1:], share, owner=np.arange(len(e) - 1))
        self.nodes = e
        self.values = np.concatenate([[0.0], np.cumsum(res.values)])

    def at_nodes(self, pts) -> np.ndarray:
        """Exact cached values at points that are partition nodes."""
        idx = np.searchsorted(self.nodes, pts)
        if np.any(idx >= len(self.nodes)) or not np.array_equal(self.nodes[idx], np.asarray(pts, dtype=float)):
            raise KeyError("points are not partition nodes")
        return self.values[idx]

    def __call__(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t_arr < self.start) or np.any(t_arr > self.end):
            raise ValueError(f"t outside cached range [{self.start}, {self.end}]")
        idx = np.clip(np.searchsorted(self.nodes, t_arr, side="right") - 1, 0, len(self.nodes) - 1)
        base = self.values[idx]
        left = self.nodes[idx]
        need = t_arr > left
        out = base.copy()
        if need.any():
            owners = np.arange(int(need.sum()))
            # the cached panel around t is smooth, so a fresh adaptive pass is cheap
            part = integrate_panels(self.signal.fn, left[need], t_arr[need], self.tol, owner=owners)
            out[need] += part.values
        return out if np.ndim(t) else float(out[0])


class TransitionFactor:
    """``phi(t, s) = exp(M(t) - M(s))`` with an overflow guard."""

    def __init__(self, signal: ScalarSignal, start: float, end: float, tol: float = DEFAULT_TOL):
        self.cumulative = CumulativeIntegral(signal, start, end, tol)

    def log(self, t, s):
        return np.asarray(self.cumulative(t)) - np.asarray(self.cumulative(s))

    def __call__(self, t, s):
        lg = self.log(t, s)
        with np.errstate(over="ignore"):
            out = np.where(lg > EXP_OVERFLOW, np.inf, np.exp(np.minimum(lg, EXP_OVERFLOW)))
        return float(out) if np.ndim(out) == 0 else out


def transition_factor(signal: ScalarSignal, t: float, t0: float, tol: float = DEFAULT_TOL) -> float:
    """``exp(int_{t0}^t mu)``; returns ``inf`` once the exponent exceeds 700."""
    if t < t0:
        raise ValueError("transition factor needs t >= t0")
    if t == t0:
        return 1.0
    lg = integrate(signal, t0, t, tol)
    return math.inf if lg > EXP_OVERFLOW else math.exp(lg)


def positive_part_integral(signal: ScalarSignal, a: float, b: float, tol: float = DEFAULT_TOL,
                           samples: int = 4000) -> float:
    """``int_a^b max(mu, 0)``, splitting the range at sampled zero crossings."""
    if b < a:
        raise ValueError("need a <= b")
    _check_range(signal, a)
    if a == b:
        return 0.0
    grid = np.unique(np.concatenate([np.linspace(a, b, samples + 1), signal.kink_points(a, b)]))
    vals = signal(grid)
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(lambda x: float(signal(x)), grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    e = _edges([signal], a, b, roots)
    fn = signal.fn
    res = integrate_panels(lambda x: np.maximum(fn(x), 0.0), e[:-1], e[1:], tol)
    return float(res.values[0])


def periodic_test(signal: ScalarSignal, period: float, tol: float = DEFAULT_TOL, n_starts: int = 512) -> float:
    """Maximum over start points ``t`` in one period of ``int_t^{t+T} mu``.

    A negative value certifies uniform exponential stability of a ``T``-periodic rate.
    """
    if period <= 0:
        raise ValueError("period must be positive")
    a = signal.start
    starts = a + np.linspace(0.0, period, n_starts + 1)
    cum = CumulativeIntegral(signal, a, a + 2 * period, tol, breakpoints=np.concatenate([starts, starts + period]))
    window = cum.at_nodes(starts + period) - cum.at_nodes(starts)
    i = int(np.argmax(window))
    best = float(window[i])
    lo = starts[max(i - 1, 0)]
    hi = starts[min(i + 1, len(starts) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda s: -(cum(s + period) - cum(s)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-10})
        best = max(best, float(-res.fun))
    return best


# --------------------------------------------------------------------------
# classification

class StabilityClass(str, enum.Enum):
    NONE = "none"
    ASYMPTOTIC = "asymptotic"
    EXPONENTIAL = "exponential"
    UNIFORM_EXPONENTIAL = "uniform_exponential"

    @property
    def rank(self) -> int:
        return list(StabilityClass).index(self)


@dataclass
class StabilityVerdict:
    """Horizon-certified classification of a rate function.

    ``certified`` means "verified on the sampled finite horizon"; no limit
    statement is proved.
    """

    cls: StabilityClass
    alpha: float
    beta_of_t0: dict[float, float]
    horizon: float
    t0_samples: list[float]
    margin: float
    certified: bool = True
    inconclusive: bool = False
    reason: str = ""
    notes: list[str] = field(default_factory=list)
    pareto: list[tuple[float, float]] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    @property
    def beta(self) -> float:
        """Largest sampled beta; the uniform constant when ``cls`` is uniform."""
        return max(self.beta_of_t0.values()) if self.beta_of_t0 else math.nan

    def beta_for(self, t0: float) -> float:
        if t0 in self.beta_of_t0:
            return self.beta_of_t0[t0]
        if self.cls is StabilityClass.UNIFORM_EXPONENTIAL:
            return self.beta
        raise KeyError(f"no beta sampled at t0={t0}; include it in t0_samples")

    def at_least(self, cls: StabilityClass) -> bool:
        return self.cls.rank >= cls.rank

    def to_dict(self) -> dict:
        return {
            "class": self.cls.value,
            "alpha": self.alpha,
            "beta": self.beta if self.beta_of_t0 else None,
            "beta_of_t0": [[t0, b] for t0, b in sorted(self.beta_of_t0.items())],
            "horizon": self.horizon,
            "t0_samples": list(self.t0_samples),
            "margin": self.margin,
            "certified": self.certified,
            "certified_meaning": "verified on a finite horizon at sampled points",
            "inconclusive": self.inconclusive,
            "reason": self.reason,
            "notes": list(self.notes),
            "pareto": [list(p) for p in self.pareto],
        }


# trend thresholds for the finite-horizon surrogates
_DIVERGE_RATIO = 0.75  # decrement ratio over successive doublings for "still decreasing"
_AMBIGUOUS_RATIO = 0.6
_UNIFORM_REL = 0.10
_UNIFORM_ABS = 1.0
_FIT_ATOL = 1e-8


def golden_section_min(fun: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-9,
                       max_iter: int = 200) -> tuple[float, float]:
    """Minimize a unimodal function on ``[lo, hi]``; returns ``(x, f(x))``."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    cands = [(fc, c), (fd, d), (fun(lo), lo), (fun(hi), hi)]
    fx, x = min(cands)
    return x, fx


@dataclass
class _Curve:
    t0: float
    elapsed: np.ndarray
    integral: np.ndarray

    @property
    def span(self) -> float:
        return float(self.elapsed[-1])

    def window_max(self, e: float) -> float:
        sel = (self.elapsed >= 0.5 * e) & (self.elapsed <= e)
        return float(self.integral[sel].max())

    def trend(self) -> dict:
        E = self.span
        w1, w2, w3 = (self.window_max(E / 4), self.window_max(E / 2), self.window_max(E))
        d_a, d_b = w1 - w2, w2 - w3
        slope_a, slope_b = d_a / (E / 8), d_b / (E / 4)
        return {"t0": self.t0, "window_max": [w1, w2, w3], "decrements": [d_a, d_b],
                "slopes": [slope_a, slope_b], "final": float(self.integral[-1])}

    def head_tail(self, alpha: float) -> tuple[float, float]:
        g = self.integral + alpha * self.elapsed
        half = self.elapsed <= 0.5 * self.span
        return float(g[half].max()), float(g[~half].max())


def _curves(signal: ScalarSignal, horizon: float, t0s: Sequence[float], tol: float,
            grid_step: float | None) -> list[_Curve]:
    lo = min(t0s)
    step = grid_step or min(0.05, (horizon - lo) / 4000.0)
    grid = np.unique(np.concatenate([np.arange(lo, horizon, step), np.asarray(t0s, float), [horizon]]))
    cum = CumulativeIntegral(signal, lo, horizon, tol, breakpoints=grid)
    m = cum.at_nodes(grid)
    curves = []
    for t0 in t0s:
        j = int(np.searchsorted(grid, t0))
        curves.append(_Curve(float(t0), grid[j:] - t0, m[j:] - m[j]))
    return curves


def _asymptotic_trend(tr: dict, threshold: float) -> str:
    """'yes', 'no' or 'ambiguous' for divergence of the integral to -inf."""
    d_a, d_b = tr["decrements"]
    w3 = tr["window_max"][2]
    delta = 1e-9 * (1.0 + abs(tr["window_max"][1]))
    if d_b <= delta:
        return "no"
    if w3 <= threshold or d_a <= 0 or d_b >= _DIVERGE_RATIO * d_a:
        return "yes"
    if d_b >= _AMBIGUOUS_RATIO * d_a:
        return "ambiguous"
    return "no"


def _exponential_trend(tr: dict, alpha_min: float) -> str:
    s_a, s_b = tr["slopes"]
    if s_b < alpha_min:
        return "no"
    if s_a <= 0 or s_b >= _DIVERGE_RATIO * s_a:
        return "yes"
    if s_b >= _AMBIGUOUS_RATIO * s_a:
        return "ambiguous"
    return "no"


def _fit_pair(curves: list[_Curve], beta_cap: float, alpha_seed: float):
    """Largest admissible alpha, then the golden-section settling-time optimum below it."""

    def beta_max(alpha):
        worst = -math.inf
        for c in curves:
            head, tail = c.head_tail(alpha)
            if tail > head + _FIT_ATOL * (1.0 + abs(head)):
                return math.inf
            worst = max(worst, head)
        return worst

    def admissible(alpha):
        return beta_max(alpha) <= beta_cap

    lo = 0.0
    hi = max(alpha_seed, 1.0)
    for _ in range(80):
        if not admissible(hi):
            break
        lo, hi = hi, 2 * hi
    else:
        return math.inf, 0.0, []
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if admissible(mid):
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, hi):
            break
    alpha_max = lo
    if alpha_max <= 0:
        return 0.0, beta_max(0.0), []
    alpha, _ = golden_section_min(lambda a: (beta_max(a) + 1.0) / a, alpha_max * 1e-3, alpha_max, xtol=1e-10)
    frontier = [(a, beta_max(a)) for a in alpha_max * np.array([0.125, 0.25, 0.5, 1.0])]
    return alpha, beta_max(alpha), [(alpha, beta_max(alpha))] + frontier


def default_t0_samples(signal: ScalarSignal, horizon: float, count: int = 16) -> list[float]:
    return [float(v) for v in np.linspace(signal.start, signal.start + (horizon - signal.start) / 4, count)]


def classify(signal: ScalarSignal, horizon: float = DEFAULT_HORIZON, t0_samples: Sequence[float] | None = None,
             alpha_min: float = 1e-3, *, beta_cap: float = 1e4, threshold: float = -30.0,
             period: float | None = None, tol: float = DEFAULT_TOL, grid_step: float | None = None) -> StabilityVerdict:
    """Classify ``signal`` as none / asymptotic / exponential / uniformly exponential.

    Decrements of the windowed maximum of ``int_{t0}^t mu`` over successive
    doublings of the elapsed time decide divergence; their per-length slopes
    decide linear decay.  ``alpha`` is the settling-time optimal rate below
    the largest admissible one, and the uniform grade requires ``beta(t0)`` not
    to grow across the sampled initial times.
    """
    if alpha_min <= 0:
        raise ValueError("alpha_min must be positive")
    t0s = sorted(float(v) for v in (t0_samples if t0_samples is not None else default_t0_samples(signal, horizon)))
    if not t0s:
        raise ValueError("need at least one t0 sample")
    for t0 in t0s:
        _check_range(signal, t0)
    if horizon <= t0s[-1]:
        raise ValueError("horizon must exceed every t0 sample")
    if period is not None:
        return _classify_periodic(signal, period, horizon, t0s, tol)

    curves = _curves(signal, horizon, t0s, tol, grid_step)
    trends = [c.trend() for c in curves]
    diag = {"trends": trends}
    asym = [_asymptotic_trend(tr, threshold) for tr in trends]
    notes: list[str] = []

    def verdict(cls, alpha=0.0, betas=None, margin=math.nan, reason="", inconclusive=False, pareto=()):
        return StabilityVerdict(cls, alpha, betas or {}, horizon, t0s, margin, True, inconclusive,
                                reason, notes, list(pareto), diag)

    if "no" in asym:
        bad = t0s[asym.index("no")]
        return verdict(StabilityClass.NONE, reason=f"integral from t0={bad:g} is not diverging to -inf at horizon {horizon:g}")
    if "ambiguous" in asym:
        return verdict(StabilityClass.NONE, inconclusive=True,
                       reason="horizon too short to separate a convergent from a divergent integral")

    expo = [_exponential_trend(tr, alpha_min) for tr in trends]
    if "yes" not in expo or any(e != "yes" for e in expo):
        if "ambiguous" in expo and "no" not in expo:
            notes.append("exponential decay inconclusive at horizon")
        else:
            notes.append("not exponential at horizon: decay rate keeps shrinking")
        return verdict(StabilityClass.ASYMPTOTIC, reason="integral diverges to -inf sub-linearly")

    seed = max(tr["slopes"][1] for tr in trends)
    alpha, bmax, pareto = _fit_pair(curves, beta_cap, seed)
    if not math.isfinite(alpha) or alpha < alpha_min:
        notes.append(f"fitted alpha {alpha:.3g} below alpha_min {alpha_min:g}")
        return verdict(StabilityClass.ASYMPTOTIC, reason="no admissible exponential rate", pareto=pareto)
    betas = {}
    margin = math.inf
    for c in curves:
        head, tail = c.head_tail(alpha)
        b = max(head, 0.0)
        betas[c.t0] = b
        margin = min(margin, b - max(head, tail))
    diag["beta_max"] = bmax

    if len(t0s) < 8:
        notes.append("fewer than 8 t0 samples: uniformity not assessed")
        return verdict(StabilityClass.EXPONENTIAL, alpha, betas, margin, "linear decay of the integral", pareto=pareto)
    vals = [betas[t] for t in t0s]
    half = len(vals) // 2
    early, late = max(vals[:half]), max(vals[half:])
    diag["beta_early_late"] = [early, late]
    if late <= (1 + _UNIFORM_REL) * early + _UNIFORM_ABS:
        # one beta for every grid t0 in the window, not only the sampled ones
        slack, g0, g1 = grid_pair_slack(signal, alpha, 0.0, horizon, tol=tol)
        uniform_beta = max(max(vals), -slack)
        diag["beta_samples"] = [[t, betas[t]] for t in t0s]
        diag["beta_grid_worst_pair"] = [g0, g1]
        return verdict(StabilityClass.UNIFORM_EXPONENTIAL, alpha, {t: uniform_beta for t in t0s}, margin,
                       "linear decay with beta not growing in t0", pareto=pareto)
    notes.append(f"beta grows with t0 ({early:.3g} -> {late:.3g})")
    return verdict(StabilityClass.EXPONENTIAL, alpha, betas, margin, "linear decay with t0-dependent beta", pareto=pareto)


def _classify_periodic(signal, period, horizon, t0s, tol) -> StabilityVerdict:
    worst = periodic_test(signal, period, tol)
    diag = {"max_window_integral": worst, "period": period}
    if worst >= -1e3 * tol:
        return StabilityVerdict(StabilityClass.NONE, 0.0, {}, horizon, t0s, math.nan, True, False,
                                f"max window integral over one period is {worst:.6g} >= 0", [], [], diag)
    alpha = -worst / period
    a = signal.start
    grid = a + np.linspace(0.0, 2 * period, 2049)
    cum = CumulativeIntegral(signal, a, a + 2 * period, tol, breakpoints=grid)
    m = cum.at_nodes(grid)
    n1 = 1025
    beta = 0.0
    for i in range(n1):
        seg = m[i:i + n1] - m[i] + alpha * (grid[i:i + n1] - grid[i])
        beta = max(beta, float(seg.max()))
    betas = {t0: beta for t0 in t0s}
    return StabilityVerdict(StabilityClass.UNIFORM_EXPONENTIAL, alpha, betas, horizon, t0s, 0.0, True, False,
                            "negative integral over every period window", [], [(alpha, beta)], diag)


def check_pair(signal: ScalarSignal, alpha: float, beta: float, pairs: np.ndarray,
               tol: float = DEFAULT_TOL) -> tuple[bool, float]:
    """Check ``int_{t0}^t mu <= -alpha (t - t0) + beta`` at sampled ``(t0, t)`` rows.

    Returns ``(passed, worst_margin)``; the margin is the smallest slack.
    """
    pairs = np.asarray(pairs, dtype=float)
    lo, hi = float(pairs.min()), float(pairs.max())
    cum = CumulativeIntegral(signal, lo, hi, tol)
    t0, t = pairs[:, 0], pairs[:, 1]
    if np.any(t < t0):
        raise ValueError("pairs need t >= t0")
    integral = cum(t) - cum(t0)
    slack = -alpha * (t - t0) + beta - integral
    worst = float(slack.min())
    return worst >= -10 * tol, worst


def grid_pair_slack(signal: ScalarSignal, alpha: float, beta: float, horizon: float, step: float = 0.01,
                    tol: float = DEFAULT_TOL) -> tuple[float, float, float]:
    """Smallest slack of ``int_{t0}^t mu <= -alpha (t - t0) + beta`` over all grid pairs ``t0 <= t``.

    With ``g = int mu + alpha t`` on the grid, the worst pair for each ``t0``
    is the suffix maximum of ``g``, so every pair is covered in linear time.
    Returns ``(slack, t0, t)`` of the worst pair.
    """
    n = max(2, int(math.ceil((horizon - signal.start) / step)))
    grid = np.unique(np.concatenate([np.linspace(signal.start, horizon, n + 1),
                                     signal.kink_points(signal.start, horizon)]))
    g = CumulativeIntegral(signal, signal.start, horizon, tol, grid).at_nodes(grid) + alpha * grid
    rev = g[::-1]
    run = np.maximum.accumulate(rev)
    where_max = np.maximum.accumulate(np.where(rev >= run, np.arange(len(rev)), 0))
    suffix, arg_suffix = run[::-1], (len(g) - 1 - where_max)[::-1]
    gap = suffix - g
    i = int(np.argmax(gap))
    return beta - float(gap[i]), float(grid[i]), float(grid[arg_suffix[i]])


def verdict_from_pair(signal: ScalarSignal, alpha: float, beta: float, horizon: float = DEFAULT_HORIZON,
                      t0_samples: Sequence[float] | None = None, n_pairs: int = 10_000, seed: int = 0,
                      tol: float = DEFAULT_TOL, grid_step: float = 0.01) -> StabilityVerdict:
    """Verdict for a user-certified ``(alpha, beta)``.

    The pair is checked at ``n_pairs`` random ``(t0, t)`` and exhaustively on a
    uniform grid of spacing ``grid_step`` (which catches short windows).
    """
    t0s = sorted(float(v) for v in (t0_samples if t0_samples is not None else default_t0_samples(signal, horizon)))
    rng = np.random.default_rng(seed)
    t0 = rng.uniform(signal.start, horizon, n_pairs)
    t = rng.uniform(t0, horizon)
    t0 = np.concatenate([t0, t0s])
    t = np.concatenate([t, np.full(len(t0s), horizon)])
    ok, worst = check_pair(signal, alpha, beta, np.column_stack([t0, t]), tol)
    grid_slack, g0, g1 = grid_pair_slack(signal, alpha, beta, horizon, grid_step, tol)
    ok = ok and grid_slack >= -10 * tol
    worst = min(worst, grid_slack)
    cls = StabilityClass.UNIFORM_EXPONENTIAL if ok and alpha > 0 else StabilityClass.NONE
    if ok:
        reason = "certified pair holds at all sampled (t0, t)"
    else:
        reason = f"certified pair violated (worst slack {worst:.3g}"
        reason += f", e.g. t0={g0:.6g}, t={g1:.6g})" if grid_slack <= worst else ")"
    diag = {"pairs_checked": int(len(t)), "grid_step": grid_step, "grid_slack": grid_slack}
    return StabilityVerdict(cls, alpha, {v: beta for v in t0s}, horizon, t0s, worst, True, False, reason,
                            ["pair supplied by certificate"], [(alpha, beta)], diag)
