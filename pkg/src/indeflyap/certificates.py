"""Lyapunov certificates with indefinite derivatives and the envelopes they imply.

A certificate bundles a candidate ``V``, comparison bounds
``alpha1(t, |x|) <= V(t, x) <= alpha2(t, |x|)``, a rate ``mu`` and, depending
on the theorem used, a drift ``pi`` or input gains.  Envelopes are explicit
upper bounds on ``|x(t)|`` that follow from those hypotheses.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import exprlang as el
from .gronwall import KappaCurve, kappa_at
from .quadsig import (EXP_OVERFLOW, CumulativeIntegral, ScalarSignal, StabilityClass, StabilityVerdict)

__all__ = [
    "Theorem", "ComparisonFn", "PowerForm", "MonotoneExpr", "Certificate", "Envelope", "ISSEstimate",
    "CertificateError", "InversionError", "T2Result",
    "invert_comparison", "envelope_T1", "check_T2", "drift_envelope", "iss_envelope_T3",
    "iiss_estimate_T4", "iiss_envelope", "pi_functions",
]


class CertificateError(ValueError):
    """Hypotheses or grades do not fit the requested bound."""


class InversionError(ArithmeticError):
    """A comparison function could not be inverted at the requested value."""


class Theorem(str, enum.Enum):
    T1 = "T1"
    T2 = "T2"
    T3_ISS = "T3_ISS"
    T4_IISS = "T4_iISS"
    C1_IISS = "C1_iISS"

    @classmethod
    def parse(cls, text: str) -> "Theorem":
        key = text.strip().lower()
        for member in cls:
            if key in (member.value.lower(), member.value.split("_")[0].lower()):
                return member
        raise ValueError(f"unknown theorem {text!r}; expected one of {[m.value for m in cls]}")


# --------------------------------------------------------------------------
# comparison functions

class ComparisonFn:
    """``s -> a(t, s)``, strictly increasing in ``s`` with ``a(t, 0) = 0``."""

    time_invariant: bool

    def value(self, t, s):
        raise NotImplementedError

    def inverse(self, t, v):
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError

    def check(self, ts: Sequence[float], s_max: float = 10.0, n: int = 200) -> None:
        """Sample monotonicity in ``s`` and the value at 0; raises on failure."""
        s = np.linspace(0.0, s_max, n + 1)
        for t in ts:
            vals = np.asarray(self.value(t, s), dtype=float)
            if abs(vals[0]) > 1e-12:
                raise CertificateError(f"{self.describe()} is {vals[0]:.3g} at s=0 (t={t:g})")
            if np.any(np.diff(vals) <= 0):
                raise CertificateError(f"{self.describe()} is not strictly increasing in s at t={t:g}")


@dataclass(frozen=True)
class PowerForm(ComparisonFn):
    """``k(t) s^m`` with ``k > 0``; ``k`` is a constant or a signal in ``t``."""

    k: float | ScalarSignal
    m: float

    def __post_init__(self):
        if not self.m > 0:
            raise CertificateError("power form needs m > 0")
        if not isinstance(self.k, ScalarSignal) and not float(self.k) > 0:
            raise CertificateError("power form needs k > 0")

    @property
    def time_invariant(self) -> bool:
        return not isinstance(self.k, ScalarSignal)

    def coefficient(self, t):
        if isinstance(self.k, ScalarSignal):
            return self.k(t)
        return np.broadcast_to(float(self.k), np.shape(t))[()] if np.ndim(t) else float(self.k)

    def value(self, t, s):
        return self.coefficient(t) * np.asarray(s, dtype=float) ** self.m

    def inverse(self, t, v):
        v = np.asarray(v, dtype=float)
        if np.any(v < 0):
            raise InversionError("cannot invert at a negative value")
        out = (v / self.coefficient(t)) ** (1.0 / self.m)
        return float(out) if np.ndim(out) == 0 else out

    def check(self, ts, s_max=10.0, n=200):
        for t in ts:
            if not self.coefficient(t) > 0:
                raise CertificateError(f"power form coefficient is not positive at t={t:g}")

    def describe(self) -> str:
        k = self.k.label if isinstance(self.k, ScalarSignal) else repr(float(self.k))
        return f"power k={k} m={self.m!r}"


@dataclass(frozen=True, eq=False)
class MonotoneExpr(ComparisonFn):
    """An expression in ``(t, s)``, inverted in ``s`` by bisection."""

    expr: el.Expr
    rtol: float = 1e-12
    s_limit: float = 1e150
    _fn: Callable = field(init=False, repr=False)

    def __post_init__(self):
        extra = el.free_vars(self.expr) - {"t", "s"}
        if extra:
            raise el.ExprNameError(sorted(extra)[0], None, "comparison functions depend on t and s only, got")
        object.__setattr__(self, "_fn", el.compile_numpy(self.expr, ["t", "s"]))

    @classmethod
    def parse(cls, source: str) -> "MonotoneExpr":
        return cls(el.parse(source))

    @property
    def time_invariant(self) -> bool:
        return "t" not in el.free_vars(self.expr)

    def value(self, t, s):
        out = self._fn(t, s)
        return float(out) if out.ndim == 0 else out

    def inverse(self, t, v):
        v_arr = np.asarray(v, dtype=float)
        if np.any(v_arr < 0):
            raise InversionError("cannot invert at a negative value")
        t_arr = np.broadcast_to(np.asarray(t, dtype=float), v_arr.shape)
        flat_t, flat_v = t_arr.ravel(), v_arr.ravel()
        out = np.array([self._invert_one(tt, vv) for tt, vv in zip(flat_t, flat_v)]).reshape(v_arr.shape)
        return float(out) if out.ndim == 0 else out

    def _invert_one(self, t: float, v: float) -> float:
        if v == 0:
            return 0.0
        if math.isinf(v):
            return math.inf
        lo, hi = 0.0, 1.0
        while self.value(t, hi) < v:
            lo, hi = hi, 2.0 * hi
            if hi > self.s_limit:
                raise InversionError(f"bracket for {self.describe()} at v={v:.3g} exceeds {self.s_limit:g}")
        while hi - lo > self.rtol * hi:
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self.value(t, mid) < v:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def describe(self) -> str:
        return f"expr {el.to_text(self.expr)}"


def invert_comparison(fn: ComparisonFn, t, v):
    """Right inverse in the second argument: ``fn(t, invert(fn, t, v)) == v``."""
    return fn.inverse(t, v)


def _as_gain(expr: el.Expr | None, name: str):
    if expr is None:
        return None
    extra = el.free_vars(expr) - {"s"}
    if extra:
        raise el.ExprNameError(sorted(extra)[0], None, f"gain {name} depends on s only, got")
    return el.compile_numpy(expr, ["s"])


# --------------------------------------------------------------------------
# certificates

@dataclass(frozen=True, eq=False)
class Certificate:
    """Candidate Lyapunov function together with the hypotheses of one theorem."""

    V: el.Expr
    n: int
    mu: ScalarSignal
    alpha1: ComparisonFn
    alpha2: ComparisonFn
    theorem: Theorem = Theorem.T1
    pi: ScalarSignal | None = None
    rho: el.Expr | None = None
    rho1: el.Expr | None = None
    rho2: el.Expr | None = None
    certified_pair: tuple[float, float] | None = None
    m: int = 0

    def __post_init__(self):
        missing = {
            Theorem.T2: ["pi"],
            Theorem.T3_ISS: ["rho"],
            Theorem.T4_IISS: ["rho1", "rho2"],
            Theorem.C1_IISS: ["rho"],
        }.get(self.theorem, [])
        absent = [k for k in missing if getattr(self, k) is None]
        if absent:
            raise CertificateError(f"theorem {self.theorem.value} needs {', '.join(absent)}")
        allowed = {"t"} | {f"x{i}" for i in range(1, self.n + 1)}
        extra = el.free_vars(self.V) - allowed
        if extra:
            raise el.ExprNameError(sorted(extra)[0], None, "V depends on t and x only, got")
        if self.theorem in (Theorem.T3_ISS, Theorem.T4_IISS, Theorem.C1_IISS):
            for f in (self.alpha1, self.alpha2):
                if not f.time_invariant:
                    raise CertificateError(f"theorem {self.theorem.value} needs time-invariant bounds")
        for name in ("rho", "rho1", "rho2"):
            _as_gain(getattr(self, name), name)

    @property
    def v_fn(self):
        return el.compile_numpy(self.V, ["t"] + [f"x{i}" for i in range(1, self.n + 1)])

    def gain(self, name: str):
        return _as_gain(getattr(self, name), name)

    def input_gain(self):
        """``rho`` for T3/C1, ``max(rho1, rho2)`` for T4; ``None`` otherwise."""
        if self.theorem is Theorem.T4_IISS:
            g1, g2 = self.gain("rho1"), self.gain("rho2")
            return lambda s: np.maximum(g1(s), g2(s))
        if self.theorem in (Theorem.T3_ISS, Theorem.C1_IISS):
            return self.gain("rho")
        return None

    def check_origin(self, ts: Sequence[float], atol: float = 1e-12) -> float:
        """Largest ``|V(t, 0)|`` over ``ts``; raises when above ``atol``."""
        ts = np.asarray(ts, dtype=float)
        vals = np.abs(self.v_fn(ts, *([np.zeros_like(ts)] * self.n)))
        worst = float(vals.max()) if vals.size else 0.0
        if worst > atol:
            raise CertificateError(f"V(t, 0) = {worst:.3g} is not zero")
        return worst


# --------------------------------------------------------------------------
# envelopes

@dataclass(eq=False)
class Envelope:
    """Evaluable bound ``|x(t)| <= bound(t)`` for ``t >= t0``.

    ``kind`` is one of ``asymptotic``, ``uniform_asymptotic``, ``exponential``,
    ``uniform``, ``drift``, ``iss_sum`` and ``iiss_sum``.
    """

    kind: str
    t0: float
    x0_norm: float
    params: dict
    _transient: Callable = field(repr=False)
    _gain: Callable | None = field(default=None, repr=False)

    def transient(self, t):
        return self._evaluate(self._transient, t)

    def gain_term(self, t):
        if self._gain is None:
            return np.zeros_like(np.asarray(t, dtype=float))[()]
        return self._evaluate(self._gain, t)

    def bound(self, t):
        out = np.asarray(self.transient(t), dtype=float) + np.asarray(self.gain_term(t), dtype=float)
        return float(out) if out.ndim == 0 else out

    __call__ = bound

    def _evaluate(self, fn, t):
        arr = np.asarray(t, dtype=float)
        if np.any(arr < self.t0 - 1e-12):
            raise ValueError("envelope is defined for t >= t0 only")
        out = np.asarray(fn(np.atleast_1d(arr)), dtype=float).reshape(np.shape(arr))
        return float(out) if out.ndim == 0 else out

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t0": self.t0, "x0_norm": self.x0_norm, **self.params}


def _beta(verdict: StabilityVerdict, t0: float) -> float:
    if verdict.cls is StabilityClass.UNIFORM_EXPONENTIAL:
        return verdict.beta
    return verdict.beta_for(t0)


def _phi_fn(mu: ScalarSignal, t0: float):
    def phi(ts):
        ts = np.asarray(ts, dtype=float)
        if ts.size == 0:
            return ts
        top = float(ts.max())
        cum = CumulativeIntegral(mu, t0, max(top, t0), breakpoints=ts[ts > t0])
        lg = cum(ts)
        with np.errstate(over="ignore"):
            return np.where(lg > EXP_OVERFLOW, np.inf, np.exp(np.minimum(lg, EXP_OVERFLOW)))
    return phi


_T1_GRADES = ("asymptotic", "uniform_asymptotic", "exponential", "uniform")


def envelope_T1(cert: Certificate, verdict: StabilityVerdict, t0: float, x0_norm: float,
                grade: str | None = None) -> Envelope:
    """Envelope ``alpha1^{-1}(t0, alpha2(t0, |x0|) phi(t, t0))`` and its closed forms.

    Grades: ``asymptotic`` (phi by quadrature), ``uniform_asymptotic``
    (phi replaced by ``e^beta e^{-alpha (t - t0)}``), ``exponential`` and
    ``uniform`` (closed power-form expressions).  Without ``grade`` the
    strongest one supported by the verdict and the bounds is chosen.
    """
    if x0_norm < 0:
        raise ValueError("x0_norm must be nonnegative")
    a1, a2 = cert.alpha1, cert.alpha2
    power = isinstance(a1, PowerForm) and isinstance(a2, PowerForm) and a1.m == a2.m
    invariant = a1.time_invariant and a2.time_invariant
    cls = verdict.cls
    if grade is None:
        if cls is StabilityClass.UNIFORM_EXPONENTIAL and power and invariant:
            grade = "uniform"
        elif cls.rank >= StabilityClass.EXPONENTIAL.rank and power and (
                cls is StabilityClass.EXPONENTIAL or not invariant) and t0 in verdict.beta_of_t0:
            grade = "exponential"
        elif cls is StabilityClass.UNIFORM_EXPONENTIAL and invariant:
            grade = "uniform_asymptotic"
        elif cls.rank >= StabilityClass.ASYMPTOTIC.rank:
            grade = "asymptotic"
        else:
            raise CertificateError("rate is not stable; no envelope follows")
    if grade not in _T1_GRADES:
        raise ValueError(f"unknown grade {grade!r}")
    need = {"asymptotic": StabilityClass.ASYMPTOTIC, "exponential": StabilityClass.EXPONENTIAL,
            "uniform_asymptotic": StabilityClass.UNIFORM_EXPONENTIAL, "uniform": StabilityClass.UNIFORM_EXPONENTIAL}
    if not verdict.at_least(need[grade]):
        raise CertificateError(f"grade {grade} needs a {need[grade].value} rate, verdict is {cls.value}")
    if grade in ("exponential", "uniform") and not power:
        raise CertificateError(f"grade {grade} needs power-form bounds k_i s^m with a common m")
    if grade in ("uniform", "uniform_asymptotic") and not invariant:
        raise CertificateError(f"grade {grade} needs time-invariant bounds")

    v0 = float(a2.value(t0, x0_norm))
    if grade == "asymptotic":
        phi = _phi_fn(cert.mu, t0)
        return Envelope(grade, t0, x0_norm, {"v0": v0},
                        lambda ts: np.atleast_1d(a1.inverse(t0, v0 * phi(ts))))
    alpha = verdict.alpha
    beta = _beta(verdict, t0)
    if grade == "uniform_asymptotic":
        return Envelope(grade, t0, x0_norm, {"alpha": alpha, "beta": beta},
                        lambda ts: np.atleast_1d(a1.inverse(t0, v0 * math.exp(beta) * np.exp(-alpha * (ts - t0)))))
    m = a1.m
    theta = (float(a2.coefficient(t0)) / float(a1.coefficient(t0))) ** (1.0 / m) * math.exp(beta / m)
    rate = alpha / m
    return Envelope(grade, t0, x0_norm, {"alpha": alpha, "beta": beta, "m": m, "theta": theta, "rate": rate},
                    lambda ts: theta * x0_norm * np.exp(-rate * (ts - t0)))


@dataclass
class T2Result:
    status: str  # "certified", "inconclusive" or "failed"
    reason: str
    kappa: KappaCurve | None = None

    @property
    def certified(self) -> bool:
        return self.status == "certified"

    def to_dict(self) -> dict:
        d = {"status": self.status, "reason": self.reason}
        if self.kappa is not None:
            d["kappa"] = self.kappa.to_dict()
        return d


def check_T2(cert: Certificate, kcurve: KappaCurve, verdict: StabilityVerdict | None = None) -> T2Result:
    """Decide the drift hypotheses from a sampled kappa curve."""
    if cert.theorem is not Theorem.T2:
        raise CertificateError("check_T2 needs a drift (T2) certificate")
    if verdict is not None and not verdict.at_least(StabilityClass.ASYMPTOTIC):
        return T2Result("failed", f"rate mu is {verdict.cls.value}, not asymptotically stable", kcurve)
    if kcurve.overflow:
        return T2Result("failed", "transition factor overflowed: kappa unbounded", kcurve)
    if not kcurve.bounded:
        return T2Result("inconclusive", "kappa still growing at the horizon", kcurve)
    if not kcurve.vanishing:
        return T2Result("inconclusive", f"kappa tail {kcurve.tail_value:.3g} not yet vanishing", kcurve)
    return T2Result("certified", "kappa bounded and vanishing on the horizon", kcurve)


def drift_envelope(cert: Certificate, t0: float, x0_norm: float, v0: float | None = None) -> Envelope:
    """``|x(t)| <= alpha1^{-1}(t0, V(t0, x0) phi(t, t0) + kappa(t, t0))``."""
    if cert.pi is None:
        raise CertificateError("drift envelope needs pi")
    v0 = float(cert.alpha2.value(t0, x0_norm)) if v0 is None else float(v0)
    a1, mu, pi = cert.alpha1, cert.mu, cert.pi

    def transient(ts):
        kap, lg = kappa_at(mu, pi, t0, ts)
        with np.errstate(over="ignore"):
            phi = np.where(lg > EXP_OVERFLOW, np.inf, np.exp(np.minimum(lg, EXP_OVERFLOW)))
        return np.atleast_1d(a1.inverse(t0, v0 * phi + kap))

    return Envelope("drift", t0, x0_norm, {"v0": v0}, transient)


def _need_uniform(verdict: StabilityVerdict, what: str) -> None:
    if verdict.cls is not StabilityClass.UNIFORM_EXPONENTIAL:
        raise CertificateError(f"{what} needs a uniformly exponentially stable rate, verdict is {verdict.cls.value}")


def iss_envelope_T3(cert: Certificate, verdict: StabilityVerdict, t0: float, x0_norm: float,
                    u_sup: float | Callable = 0.0) -> Envelope:
    """``alpha1^{-1}(2 e^beta alpha2(|x0|) e^{-alpha (t - t0)}) + alpha1^{-1}(2 e^beta rho(||u||))``.

    ``u_sup`` is a constant bound on ``|u|`` or a callable giving the running
    supremum over ``[t0, t]``.
    """
    _need_uniform(verdict, "the ISS envelope")
    if cert.rho is None:
        raise CertificateError("ISS envelope needs rho")
    a1, a2 = cert.alpha1, cert.alpha2
    alpha, beta = verdict.alpha, verdict.beta
    rho = cert.gain("rho")
    eb = math.exp(beta)
    v0 = float(a2.value(t0, x0_norm))

    def transient(ts):
        return np.atleast_1d(a1.inverse(t0, 2 * eb * v0 * np.exp(-alpha * (ts - t0))))

    def gain(ts):
        us = u_sup(ts) if callable(u_sup) else np.full(np.shape(ts), float(u_sup))
        return np.atleast_1d(a1.inverse(t0, 2 * eb * rho(np.asarray(us, dtype=float))))

    params = {"alpha": alpha, "beta": beta}
    if not callable(u_sup):
        params["u_sup"] = float(u_sup)
    return Envelope("iss_sum", t0, x0_norm, params, transient, gain)


def pi_functions(theorem: Theorem, beta: float, variant: str = "stated"):
    """``(pi1, pi2)`` of the iISS estimates.

    ``variant="stated"`` gives ``pi1 = s + s^2/2, pi2 = (e^s - 1)^2/2 + s e^{beta s}``
    (``pi1 = s, pi2 = s e^{beta s}`` for the single-gain form).
    ``variant="sound"`` replaces the input term by ``s e^{beta + s}``
    (``e^beta s``), which follows from bounding ``int_s^t mu <= beta`` directly.
    """
    if variant not in ("stated", "sound"):
        raise ValueError("variant must be 'stated' or 'sound'")
    eb = math.exp(beta)
    if theorem is Theorem.T4_IISS:
        def pi1(s):
            return s + 0.5 * s * s
        if variant == "stated":
            def pi2(s):
                return 0.5 * np.expm1(s) ** 2 + s * np.exp(beta * s)
        else:
            def pi2(s):
                return 0.5 * np.expm1(s) ** 2 + s * np.exp(beta + s)
    elif theorem is Theorem.C1_IISS:
        def pi1(s):
            return s
        if variant == "stated":
            def pi2(s):
                return s * np.exp(beta * s)
        else:
            def pi2(s):
                return eb * s
    else:
        raise CertificateError(f"no iISS estimate for theorem {theorem.value}")
    return pi1, pi2


@dataclass(eq=False)
class ISSEstimate:
    """``|x(t)| <= sigma(|x0|, t - t0) + gamma1(int gamma2(|u|))``."""

    alpha: float
    beta: float
    theorem: Theorem
    variant: str
    alpha1: ComparisonFn
    alpha2: ComparisonFn
    gamma2: Callable
    pi1: Callable = field(init=False, repr=False)
    pi2: Callable = field(init=False, repr=False)

    def __post_init__(self):
        self.pi1, self.pi2 = pi_functions(self.theorem, self.beta, self.variant)

    def sigma(self, s, t):
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        inner = self.alpha2.value(0.0, s) * math.exp(self.beta) * np.exp(-self.alpha * t)
        return self.alpha1.inverse(0.0, 2 * self.pi1(inner))

    def gamma1(self, r):
        return self.alpha1.inverse(0.0, 2 * self.pi2(np.asarray(r, dtype=float)))

    def bound(self, x0_norm, elapsed, u_integral):
        return np.asarray(self.sigma(x0_norm, elapsed)) + np.asarray(self.gamma1(u_integral))

    def kl_check(self, s_grid, t_grid, tail_fraction: float = 1e-3) -> dict:
        """Sampled KL surrogate: nondecreasing in s, nonincreasing in t, decaying tail."""
        s = np.asarray(s_grid, dtype=float)
        t = np.asarray(t_grid, dtype=float)
        vals = np.asarray(self.sigma(s[:, None], t[None, :]), dtype=float)
        inc_s = bool(np.all(np.diff(vals, axis=0) >= -1e-12 * (1 + np.abs(vals[1:]))))
        dec_t = bool(np.all(np.diff(vals, axis=1) <= 1e-12 * (1 + np.abs(vals[:, :-1]))))
        head = vals[:, 0]
        tail = vals[:, -1]
        decays = bool(np.all(tail <= tail_fraction * np.maximum(head, 1e-300) + 1e-300))
        return {"nondecreasing_in_s": inc_s, "nonincreasing_in_t": dec_t, "tail_decays": decays,
                "zero_at_zero": bool(np.all(np.abs(vals[s == 0.0]) <= 1e-300))}


def iiss_estimate_T4(cert: Certificate, verdict: StabilityVerdict, variant: str = "stated") -> ISSEstimate:
    """iISS estimate for the two-gain or the single-gain form."""
    if cert.theorem not in (Theorem.T4_IISS, Theorem.C1_IISS):
        raise CertificateError("iISS estimate needs a T4_iISS or C1_iISS certificate")
    _need_uniform(verdict, "the iISS estimate")
    return ISSEstimate(verdict.alpha, verdict.beta, cert.theorem, variant, cert.alpha1, cert.alpha2,
                       cert.input_gain())


def iiss_envelope(est: ISSEstimate, t0: float, x0_norm: float, u_integral: float | Callable = 0.0) -> Envelope:
    """Envelope form of an iISS estimate; ``u_integral(t) = int_{t0}^t gamma2(|u|)``."""

    def transient(ts):
        return np.atleast_1d(est.sigma(x0_norm, ts - t0))

    def gain(ts):
        r = u_integral(ts) if callable(u_integral) else np.full(np.shape(ts), float(u_integral))
        return np.atleast_1d(est.gamma1(r))

    params = {"alpha": est.alpha, "beta": est.beta, "variant": est.variant}
    return Envelope("iiss_sum", t0, x0_norm, params, transient, gain)
