"""Gronwall-type bounds driven by a rate ``mu`` and a nonnegative drift ``pi``.

If ``y' <= mu y + pi`` then ``y(t) <= y(s) phi(t, s) + kappa(t, s)`` with
``kappa(t, s) = int_s^t phi(t, lam) pi(lam) dlam``.  Kappa is evaluated by a
panel recurrence: across a panel ``[p, q]``

    kappa(q) = exp(int_p^q mu) kappa(p) + int_p^q exp(int_lam^q mu) pi(lam) dlam,

where the local integral nests one Gauss-Kronrod rule inside another, so
no exponential of a long-range integral is ever formed except through the
bounded factor ``exp(int_p^q mu)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .quadrature import WK, XK, integrate_panels, split_panels
from .quadsig import DEFAULT_TOL, EXP_OVERFLOW, CumulativeIntegral, ScalarSignal

__all__ = [
    "DriftPair", "KappaCurve", "GeligReport", "MajorantResult", "MembershipError",
    "gronwall_bound", "kappa_at", "kappa", "gelig_check", "majorant_check",
]

_PANEL_WIDTH = 0.5


@dataclass(frozen=True)
class DriftPair:
    """Rate ``mu`` together with a drift ``pi >= 0`` (checked by sampling)."""

    mu: ScalarSignal
    pi: ScalarSignal
    check_until: float = 100.0

    def __post_init__(self):
        a = max(self.mu.start, self.pi.start)
        ts = np.linspace(a, a + self.check_until, 2001)
        low = float(np.min(self.pi(ts)))
        if low < -1e-12:
            raise ValueError(f"drift pi must be nonnegative; sampled minimum {low:.3g}")

    @property
    def start(self) -> float:
        return max(self.mu.start, self.pi.start)


def _local_terms(mu: ScalarSignal, pi: ScalarSignal, edges: np.ndarray, tol: float):
    """Per-panel ``int_p^q mu`` and ``int_p^q exp(int_lam^q mu) pi(lam) dlam``."""
    p, q = edges[:-1], edges[1:]
    idx = np.arange(len(p))
    share = tol * np.diff(edges) / max(edges[-1] - edges[0], 1e-300)
    dm = integrate_panels(mu.fn, p, q, share, owner=idx).values
    mu_fn, pi_fn = mu.fn, pi.fn

    def integrand(lam, right):
        # inner integral of mu over [lam, right] by one Kronrod rule per node
        c = 0.5 * (lam + right)
        h = 0.5 * (right - lam)
        nodes = c[..., None] + h[..., None] * XK
        inner = h * (np.broadcast_to(mu_fn(nodes), nodes.shape) @ WK)
        with np.errstate(over="ignore"):
            return np.exp(np.minimum(inner, EXP_OVERFLOW)) * pi_fn(lam)

    local = integrate_panels(integrand, p, q, share, owner=idx, params=q).values
    return dm, local


def _edges_for(pair_signals: Sequence[ScalarSignal], a: float, b: float, points=()) -> np.ndarray:
    breaks = [k for s in pair_signals for k in s.kink_points(a, b)]
    breaks.extend(points)
    return split_panels(a, b, breaks, _PANEL_WIDTH)


def kappa_at(mu: ScalarSignal, pi: ScalarSignal, t0: float, ts, tol: float = DEFAULT_TOL):
    """``kappa(t, t0)`` at each ``t`` in ``ts`` (all ``>= t0``).

    Returns ``(values, log_phi)`` where ``log_phi[i] = int_{t0}^{t_i} mu``;
    values are ``inf`` when the transition factor overflows.
    """
    ts_arr = np.atleast_1d(np.asarray(ts, dtype=float))
    if np.any(ts_arr < t0):
        raise ValueError("kappa needs t >= t0")
    if t0 < max(mu.start, pi.start):
        raise ValueError("t0 precedes the signal domain")
    hi = float(ts_arr.max()) if len(ts_arr) else t0
    if hi == t0:
        return np.zeros_like(ts_arr), np.zeros_like(ts_arr)
    edges = _edges_for([mu, pi], t0, hi, ts_arr)
    dm, local = _local_terms(mu, pi, edges, tol)
    kap = np.empty(len(edges))
    kap[0] = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        growth = np.exp(np.minimum(dm, EXP_OVERFLOW))
        growth[dm > EXP_OVERFLOW] = np.inf
        acc = 0.0
        for k in range(len(dm)):
            acc = growth[k] * acc + local[k]
            kap[k + 1] = acc
    logphi = np.concatenate([[0.0], np.cumsum(dm)])
    idx = np.searchsorted(edges, ts_arr)
    return kap[idx], logphi[idx]


def gronwall_bound(mu: ScalarSignal, pi: ScalarSignal, y_s: float, s: float, t: float,
                   tol: float = DEFAULT_TOL) -> float:
    """Upper bound ``y(s) phi(t, s) + kappa(t, s)`` for solutions of ``y' <= mu y + pi``."""
    if y_s < 0:
        raise ValueError("y_s must be nonnegative")
    if t < s:
        raise ValueError("need t >= s")
    kap, logphi = kappa_at(mu, pi, s, [t], tol)
    lg = float(logphi[0])
    phi = math.inf if lg > EXP_OVERFLOW else math.exp(lg)
    return (y_s * phi if y_s else 0.0) + float(kap[0])


@dataclass
class KappaCurve:
    """Sampled ``kappa(t, t0)`` on ``[t0, horizon]`` with trend flags."""

    t0: float
    ts: np.ndarray
    values: np.ndarray
    sup_value: float
    sup_time: float
    tail_value: float
    bounded: bool
    vanishing: bool
    overflow: bool

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.ts, self.values])

    def to_dict(self) -> dict:
        return {"t0": self.t0, "sup": self.sup_value, "sup_time": self.sup_time, "tail": self.tail_value,
                "bounded": self.bounded, "vanishing": self.vanishing, "overflow": self.overflow}


def kappa(pair: DriftPair, t0: float, horizon: float, grid_step: float | None = None,
          tol: float = DEFAULT_TOL) -> KappaCurve:
    """Kappa curve from ``t0`` to ``horizon``, with a refined supremum.

    ``bounded`` asks that the second half of the window not exceed the first;
    ``vanishing`` asks for a small tail (5% of the supremum) that is still
    decreasing over the last quarter.
    """
    if horizon <= t0:
        raise ValueError("horizon must exceed t0")
    step = grid_step or min(0.05, (horizon - t0) / 2000.0)
    n = max(2, int(math.ceil((horizon - t0) / step)))
    ts = np.linspace(t0, horizon, n + 1)
    vals, _ = kappa_at(pair.mu, pair.pi, t0, ts, tol)
    overflow = not np.all(np.isfinite(vals))
    i = int(np.argmax(vals))
    sup_t, sup_v = float(ts[i]), float(vals[i])
    if not overflow and 0 < i < n:
        res = minimize_scalar(lambda t: -float(kappa_at(pair.mu, pair.pi, t0, [t], tol)[0][0]),
                              bounds=(ts[i - 1], ts[i + 1]), method="bounded", options={"xatol": 1e-10})
        if -res.fun > sup_v:
            sup_t, sup_v = float(res.x), float(-res.fun)
    tail = float(vals[-1])
    q = len(ts) // 4
    first, second = vals[: 2 * q + 1], vals[2 * q:]
    bounded = not overflow and float(second.max()) <= (1 + 1e-6) * float(first.max()) + 1e-12
    third, last = vals[2 * q: 3 * q + 1], vals[3 * q:]
    small = tail <= 0.05 * sup_v or tail <= 1e-12
    vanishing = bool(bounded and small and float(last.max()) <= float(third.max()) + 1e-15)
    return KappaCurve(float(t0), ts, vals, sup_v, sup_t, tail, bool(bounded), vanishing, overflow)


# --------------------------------------------------------------------------
# convolution decay (generalized Gelig lemma)

class MembershipError(ValueError):
    """A declared function class failed its numeric spot-check."""


@dataclass
class GeligReport:
    phi1_class: str
    phi2_class: str
    tau: float
    ts: np.ndarray
    values: np.ndarray
    sup_value: float
    sup_time: float
    tail_value: float
    vanishing: bool
    membership: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"phi1_class": self.phi1_class, "phi2_class": self.phi2_class, "tau": self.tau,
                "sup": self.sup_value, "sup_time": self.sup_time, "tail": self.tail_value,
                "vanishing": self.vanishing, "membership": dict(self.membership), "notes": list(self.notes)}


def _parse_class(tag: str) -> tuple[str, float | None]:
    tag = tag.strip()
    if tag.upper() == "Z":
        return "Z", None
    m = re.fullmatch(r"[Ll](?:_?)(\d+(?:\.\d*)?|inf)", tag)
    if not m:
        raise ValueError(f"unknown class tag {tag!r}; use 'Z' or 'L<p>' such as 'L1', 'L2'")
    p = math.inf if m.group(1) == "inf" else float(m.group(1))
    if p < 1:
        # Hoelder's inequality, which the decay argument relies on, needs p >= 1
        raise ValueError(f"exponent p={p:g} < 1 is not supported")
    return "L", p


def _admissible(c1, c2) -> bool:
    (k1, p1), (k2, p2) = c1, c2
    if k1 == "L" and k2 == "L":
        return p1 > 1 and p2 > 1 and math.isfinite(p1) and math.isfinite(p2) and abs(1 / p1 + 1 / p2 - 1) < 1e-12
    if k1 == "L" and k2 == "Z":
        return p1 == 1
    if k1 == "Z" and k2 == "L":
        return p2 == 1
    return False


def _lp_norm_power(sig: ScalarSignal, a: float, b: float, p: float, tol: float) -> float:
    e = split_panels(a, b, sig.kink_points(a, b), 1.0)
    fn = sig.fn
    return float(integrate_panels(lambda x: np.abs(fn(x)) ** p, e[:-1], e[1:], tol).values[0])


def _check_membership(sig: ScalarSignal, cls, a: float, horizon: float, tol: float) -> str:
    kind, p = cls
    if kind == "L":
        half = _lp_norm_power(sig, a, a + 0.5 * (horizon - a), p, tol)
        full = half + _lp_norm_power(sig, a + 0.5 * (horizon - a), horizon, p, tol)
        change = (full - half) / max(full, 1e-300)
        if not math.isfinite(full) or change >= 0.01:
            raise MembershipError(f"L{p:g} norm still growing: {change:.2%} change when doubling the horizon")
        return f"L{p:g} norm^p {full:.6g} (last doubling changed it by {change:.2e})"
    ts = np.linspace(a, horizon, 4001)
    mag = np.abs(sig(ts))
    q = len(ts) // 4
    top = float(mag.max())
    third, last = float(mag[2 * q: 3 * q].max()), float(mag[3 * q:].max())
    if not (last <= third + 1e-15 and last <= 0.1 * top + 1e-12):
        raise MembershipError(f"no decay to zero: sup over last quarter {last:.3g} vs {third:.3g} before, peak {top:.3g}")
    return f"decays: sup over last quarter {last:.3g}, peak {top:.3g}"


def convolution(phi1: ScalarSignal, phi2: ScalarSignal, tau: float, ts, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``int_tau^t phi1(t - s) phi2(s) ds`` for each ``t`` in ``ts``."""
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    a_list, b_list, own, par = [], [], [], []
    for i, t in enumerate(ts):
        if t <= tau:
            continue
        lag_kinks = t - phi1.kink_points(0.0, t - tau)
        e = split_panels(tau, t, np.concatenate([phi2.kink_points(tau, t), lag_kinks]), 1.0)
        a_list.append(e[:-1]); b_list.append(e[1:])
        own.append(np.full(len(e) - 1, i)); par.append(np.full(len(e) - 1, t))
    out = np.zeros(len(ts))
    if not a_list:
        return out
    f1, f2 = phi1.fn, phi2.fn
    res = integrate_panels(lambda s, t: f1(t - s) * f2(s), np.concatenate(a_list), np.concatenate(b_list),
                           np.full(len(ts), tol), owner=np.concatenate(own), params=np.concatenate(par))
    n = min(len(res.values), len(ts))
    out[:n] = res.values[:n]
    return out


def gelig_check(phi1_class: str, phi2_class: str, phi1: ScalarSignal, phi2: ScalarSignal, horizon: float,
                tau: float | None = None, n_grid: int = 401, tol: float = 1e-9) -> GeligReport:
    """Spot-check the declared classes and tabulate the convolution on ``[tau, horizon]``.

    Admissible declarations: ``('L<p>', 'L<q>')`` with ``1/p + 1/q = 1``,
    ``('L1', 'Z')`` and ``('Z', 'L1')``.  Raises :class:`MembershipError`
    when a declared class does not survive its check.
    """
    c1, c2 = _parse_class(phi1_class), _parse_class(phi2_class)
    if not _admissible(c1, c2):
        raise ValueError(f"({phi1_class}, {phi2_class}) is not an admissible class pair")
    tau = phi2.start if tau is None else float(tau)
    if horizon <= tau:
        raise ValueError("horizon must exceed tau")
    membership = {
        "phi1": _check_membership(phi1, c1, 0.0, horizon - tau, tol),
        "phi2": _check_membership(phi2, c2, tau, horizon, tol),
    }
    ts = np.linspace(tau, horizon, n_grid)
    vals = convolution(phi1, phi2, tau, ts, tol)
    i = int(np.argmax(np.abs(vals)))
    sup_t, sup_v = float(ts[i]), float(abs(vals[i]))
    if 0 < i < len(ts) - 1:
        res = minimize_scalar(lambda t: -abs(float(convolution(phi1, phi2, tau, [t], tol)[0])),
                              bounds=(ts[i - 1], ts[i + 1]), method="bounded", options={"xatol": 1e-10})
        if -res.fun > sup_v:
            sup_t, sup_v = float(res.x), float(-res.fun)
    tail = float(abs(vals[-1]))
    q = len(ts) // 4
    mag = np.abs(vals)
    vanishing = bool(tail <= 0.05 * sup_v + 1e-12 and mag[3 * q:].max() <= mag[2 * q: 3 * q + 1].max() + 1e-15)
    return GeligReport(phi1_class, phi2_class, tau, ts, vals, sup_v, sup_t, tail, vanishing, membership)


@dataclass
class MajorantResult:
    passed: bool
    worst_margin: float
    worst_pair: tuple[float, float]
    checked: int


def majorant_check(mu: ScalarSignal, varpi: ScalarSignal, samples, rel: float = 1e-9,
                   tol: float = DEFAULT_TOL) -> MajorantResult:
    """Check ``phi(t, s) <= varpi(t - s)`` at sampled ``(s, t)`` rows.

    ``varpi`` is a signal in the lag variable (its ``t`` means ``t - s``).
    The margin is ``varpi (1 + rel) - phi``; negative means violated.
    """
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    s, t = pts[:, 0], pts[:, 1]
    if np.any(t < s):
        raise ValueError("samples need t >= s")
    cum = CumulativeIntegral(mu, float(s.min()), float(t.max()), tol)
    lg = cum(t) - cum(s)
    with np.errstate(over="ignore"):
        phi = np.where(lg > EXP_OVERFLOW, np.inf, np.exp(np.minimum(lg, EXP_OVERFLOW)))
    margin = varpi(t - s) * (1 + rel) - phi
    j = int(np.argmin(margin))
    return MajorantResult(bool(margin[j] >= 0), float(margin[j]), (float(s[j]), float(t[j])), len(s))
