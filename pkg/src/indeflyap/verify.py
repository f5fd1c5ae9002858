"""Sampled checks of certificate hypotheses, envelope containment and the example catalog."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import exprlang as el
from .certificates import (Certificate, CertificateError, Envelope, PowerForm, Theorem, check_T2,
                           drift_envelope, envelope_T1, iiss_envelope, iiss_estimate_T4, iss_envelope_T3)
from .gronwall import DriftPair, kappa
from .odesim import InputSignal, Trajectory, simulate
from .quadsig import (CumulativeIntegral, ScalarSignal, StabilityClass, StabilityVerdict, classify,
                      default_t0_samples, verdict_from_pair)

__all__ = [
    "ResidualReport", "ContainmentResult", "Analysis", "AnalysisResult",
    "vdot", "vdot_batch", "residual_check", "bounds_check", "envelope_containment", "catalog", "catalog_entry",
    "analyze", "envelope_for", "RESIDUAL_TOL",
]

RESIDUAL_TOL = 1e-8
_FD_STEP = np.cbrt(np.finfo(float).eps)


def _state_names(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)]


def vdot(V: el.Expr, fld: el.VectorField, t: float, x: Sequence[float], u: Sequence[float] = ()) -> float:
    """``dV/dt + grad_x V . f(t, x, u)`` by central differences."""
    u = tuple(u) if fld.m else ()
    out = vdot_batch(V, fld, np.array([t], dtype=float), np.array([x], dtype=float),
                     np.array([u], dtype=float).reshape(1, fld.m))
    return float(out[0])


def vdot_batch(V: el.Expr, fld: el.VectorField, t: np.ndarray, x: np.ndarray, u: np.ndarray | None = None) -> np.ndarray:
    """Vectorized :func:`vdot` for ``N`` samples (``x`` has shape ``(N, n)``)."""
    n = fld.n
    x = np.asarray(x, dtype=float).reshape(len(t), n)
    u = np.zeros((len(t), fld.m)) if u is None else np.asarray(u, dtype=float).reshape(len(t), fld.m)
    v_fn = el.compile_numpy(V, ["t"] + _state_names(n))
    comps = [el.compile_numpy(c, list(fld.params)) for c in fld.components]
    args = [t] + [x[:, j] for j in range(n)] + [u[:, j] for j in range(fld.m)]
    f = [np.broadcast_to(c(*args), t.shape) for c in comps]
    coords = [t] + [x[:, j] for j in range(n)]

    def partial(i):
        c = coords[i]
        h = _FD_STEP * np.maximum(1.0, np.abs(c))
        hi, lo = c + h, c - h
        up = list(coords); up[i] = hi
        dn = list(coords); dn[i] = lo
        return (v_fn(*up) - v_fn(*dn)) / (hi - lo)

    total = partial(0)
    for j in range(n):
        total = total + partial(j + 1) * f[j]
    total = np.broadcast_to(total, t.shape)
    if not np.all(np.isfinite(total)):
        i = int(np.argmin(np.isfinite(total)))
        raise ArithmeticError(f"non-finite derivative of V at t={t[i]}, x={x[i].tolist()}")
    return np.array(total)


@dataclass
class ResidualReport:
    """Worst sampled residual ``(lhs - rhs) / (1 + |rhs|)`` of one hypothesis."""

    hypothesis: str
    samples: int
    tested: int
    skipped: int
    worst_residual: float
    worst_location: dict
    passed: bool
    inconclusive: bool = False
    tolerance: float = RESIDUAL_TOL

    def to_dict(self) -> dict:
        return {"hypothesis": self.hypothesis, "samples": self.samples, "tested": self.tested,
                "skipped": self.skipped, "skip_rate": self.skipped / self.samples if self.samples else 0.0,
                "worst_residual": self.worst_residual, "worst_location": self.worst_location,
                "passed": self.passed, "inconclusive": self.inconclusive, "tolerance": self.tolerance}


_HYPOTHESIS = {
    Theorem.T1: "decay: Vdot <= mu V (u = 0)",
    Theorem.T2: "drift: Vdot <= mu V + pi (u = 0)",
    Theorem.T3_ISS: "implication: V >= rho(|u|) => Vdot <= mu V",
    Theorem.T4_IISS: "iiss: Vdot <= (rho1(|u|) + mu) V + rho2(|u|)",
    Theorem.C1_IISS: "iiss: Vdot <= mu V + rho(|u|)",
}


def _draw(box: Mapping[str, tuple[float, float]], names: Sequence[str], count: int, seed: int,
          partitions: int = 8) -> dict[str, np.ndarray]:
    """Uniform samples in the box; each partition has its own spawned sub-seed."""
    missing = [nm for nm in names if nm not in box]
    if missing:
        raise ValueError(f"sampling box has no range for {', '.join(missing)}")
    sizes = [count // partitions + (1 if i < count % partitions else 0) for i in range(partitions)]
    children = np.random.SeedSequence(seed).spawn(partitions)
    chunks = []
    for size, child in zip(sizes, children):
        rng = np.random.default_rng(child)
        chunks.append({nm: rng.uniform(box[nm][0], box[nm][1], size) for nm in names})
    return {nm: np.concatenate([c[nm] for c in chunks]) for nm in names}


def _location(samples: dict[str, np.ndarray], i: int) -> dict:
    return {k: float(v[i]) for k, v in samples.items()}


def residual_check(cert: Certificate, fld: el.VectorField, box: Mapping[str, tuple[float, float]],
                   count: int = 20_000, seed: int = 0, tol: float = RESIDUAL_TOL) -> ResidualReport:
    """Check the derivative hypothesis of ``cert.theorem`` at random points of ``box``.

    ``box`` maps ``t``, ``x1``.. and (for input theorems) ``u1``.. to ranges.
    Implication-form samples that miss the antecedent are skipped and counted;
    if every sample is skipped the report is inconclusive, never passed.
    """
    if fld.n != cert.n:
        raise ValueError("certificate and field dimensions differ")
    th = cert.theorem
    uses_input = th in (Theorem.T3_ISS, Theorem.T4_IISS, Theorem.C1_IISS) and fld.m > 0
    names = ["t"] + _state_names(fld.n) + ([f"u{j}" for j in range(1, fld.m + 1)] if uses_input else [])
    smp = _draw(box, names, count, seed)
    t = smp["t"]
    if np.any(t < cert.mu.start):
        raise ValueError(f"sampling box starts before the rate domain t >= {cert.mu.start}")
    x = np.column_stack([smp[nm] for nm in _state_names(fld.n)])
    u = np.column_stack([smp[f"u{j}"] for j in range(1, fld.m + 1)]) if uses_input else np.zeros((count, fld.m))
    unorm = np.linalg.norm(u, axis=1) if u.shape[1] else np.zeros(count)
    lhs = vdot_batch(cert.V, fld, t, x, u)
    v = cert.v_fn(t, *[x[:, j] for j in range(fld.n)])
    mu = cert.mu(t)
    keep = np.ones(count, dtype=bool)
    if th is Theorem.T1:
        rhs = mu * v
    elif th is Theorem.T2:
        rhs = mu * v + cert.pi(t)
    elif th is Theorem.T3_ISS:
        rhs = mu * v
        keep = v >= cert.gain("rho")(unorm)
    elif th is Theorem.T4_IISS:
        rhs = (cert.gain("rho1")(unorm) + mu) * v + cert.gain("rho2")(unorm)
    else:
        rhs = mu * v + cert.gain("rho")(unorm)
    res = (lhs - rhs) / (1.0 + np.abs(rhs))
    tested = int(keep.sum())
    if tested == 0:
        return ResidualReport(_HYPOTHESIS[th], count, 0, count, math.nan, {}, False, True, tol)
    masked = np.where(keep, res, -np.inf)
    i = int(np.argmax(masked))
    worst = float(masked[i])
    return ResidualReport(_HYPOTHESIS[th], count, tested, count - tested, worst, _location(smp, i), worst <= tol,
                          False, tol)


def bounds_check(cert: Certificate, box: Mapping[str, tuple[float, float]], count: int = 20_000, seed: int = 0,
                 tol: float = RESIDUAL_TOL) -> list[ResidualReport]:
    """Sampled ``alpha1(t, |x|) <= V(t, x) <= alpha2(t, |x|)``."""
    names = ["t"] + _state_names(cert.n)
    smp = _draw(box, names, count, seed + 1)
    t = smp["t"]
    x = np.column_stack([smp[nm] for nm in _state_names(cert.n)])
    r = np.linalg.norm(x, axis=1)
    v = cert.v_fn(t, *[x[:, j] for j in range(cert.n)])
    out = []
    for label, lhs, rhs in (("lower bound: alpha1(t, |x|) <= V", cert.alpha1.value(t, r), v),
                            ("upper bound: V <= alpha2(t, |x|)", v, cert.alpha2.value(t, r))):
        res = (np.asarray(lhs) - np.asarray(rhs)) / (1.0 + np.abs(rhs))
        i = int(np.argmax(res))
        out.append(ResidualReport(label, count, count, 0, float(res[i]), _location(smp, i), bool(res[i] <= tol),
                                  False, tol))
    return out


@dataclass
class ContainmentResult:
    passed: bool
    worst_ratio: float
    worst_time: float
    checked: int
    epsilon: float
    reason: str = ""

    def to_dict(self) -> dict:
        return {"passed": self.passed, "worst_ratio": self.worst_ratio, "worst_time": self.worst_time,
                "checked": self.checked, "epsilon": self.epsilon, "reason": self.reason}


def envelope_containment(traj: Trajectory, env: Envelope | Callable, epsilon: float = 1e-6,
                         per_step: int = 4) -> ContainmentResult:
    """Check ``|x(t)| <= env(t) (1 + epsilon)`` at step points and interior dense-output points."""
    grid = traj.dense_grid(per_step)
    xs = np.linalg.norm(traj.state_at(grid), axis=1)
    bound = np.asarray(env(grid), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(bound > 0, xs / bound, np.where(xs > 0, np.inf, 0.0))
    i = int(np.argmax(ratio))
    worst = float(ratio[i])
    passed = bool(worst <= 1.0 + epsilon)
    reason = ""
    if not passed:
        reason = (f"envelope is zero while |x| = {xs[i]:.3g}" if bound[i] <= 0
                  else f"|x| = {xs[i]:.6g} exceeds envelope {bound[i]:.6g}")
        reason += f" at t={grid[i]:.6g}"
    return ContainmentResult(passed, worst, float(grid[i]), len(grid), epsilon, reason)


# --------------------------------------------------------------------------
# analyses and the catalog

@dataclass(eq=False)
class Analysis:
    """One system, one certificate and the numeric settings to check them."""

    name: str
    field: el.VectorField
    cert: Certificate
    inputs: InputSignal | None = None
    t0: float = 0.0
    x0: tuple[float, ...] = (1.0,)
    tf: float = 50.0
    horizon: float = 200.0
    rtol: float = 1e-9
    atol: float = 1e-12
    seed: int = 0
    samples: int = 20_000
    box: dict = field(default_factory=dict)
    description: str = ""
    reference_envelope: Callable | None = None  # (t, t0, x0_norm) -> bound
    reference_kappa: Callable | None = None  # (t, t0) -> kappa
    iiss_variant: str = "stated"
    period: float | None = None


@dataclass
class AnalysisResult:
    status: int  # 0 pass, 1 violation, 2 inconclusive
    reasons: list[str]
    report: dict
    trajectory: Trajectory | None = None
    envelope: Envelope | None = None


def _verdict_for(a: Analysis) -> StabilityVerdict:
    mu = a.cert.mu
    t0s = sorted(set(default_t0_samples(mu, a.horizon)) | {float(a.t0)})
    t0s = [v for v in t0s if v < a.horizon]
    if a.cert.certified_pair is not None:
        alpha, beta = a.cert.certified_pair
        return verdict_from_pair(mu, alpha, beta, a.horizon, t0s, seed=a.seed)
    return classify(mu, a.horizon, t0s, period=a.period)


def _u_integral(a: Analysis, gain) -> Callable:
    u = a.inputs
    if u is None or not u.components:
        return lambda ts: np.zeros_like(np.asarray(ts, dtype=float))
    sig = ScalarSignal.from_function(lambda ts: gain(u.norm(np.ravel(ts)).reshape(np.shape(ts))), start=a.t0)

    def integral(ts):
        ts = np.asarray(ts, dtype=float)
        cum = CumulativeIntegral(sig, a.t0, float(ts.max()), tol=1e-10)
        return cum(ts)

    return integral


def _envelope_for(a: Analysis, verdict: StabilityVerdict, traj: Trajectory | None, report: dict,
                  reasons: list[str]) -> tuple[Envelope | None, int]:
    cert = a.cert
    x0n = float(np.linalg.norm(a.x0))
    th = cert.theorem
    if th is Theorem.T1:
        return envelope_T1(cert, verdict, a.t0, x0n), 0
    if th is Theorem.T2:
        kc = kappa(DriftPair(cert.mu, cert.pi), a.t0, a.horizon)
        t2 = check_T2(cert, kc, verdict)
        report["kappa"] = t2.to_dict()
        if a.reference_kappa is not None:
            ref = a.reference_kappa(kc.ts, a.t0)
            report["kappa"]["reference_max_abs_error"] = float(np.max(np.abs(kc.values - ref)))
        code = {"certified": 0, "inconclusive": 2, "failed": 1}[t2.status]
        if code:
            reasons.append(f"drift hypotheses: {t2.reason}")
        v0 = float(cert.v_fn(np.array([a.t0]), *[np.array([c]) for c in a.x0])[0])
        return drift_envelope(cert, a.t0, x0n, v0), code
    if th is Theorem.T3_ISS:
        u_sup = traj.input_sup if traj is not None else 0.0
        return iss_envelope_T3(cert, verdict, a.t0, x0n, u_sup), 0
    est = iiss_estimate_T4(cert, verdict, a.iiss_variant)
    report["iiss"] = {"variant": a.iiss_variant, "alpha": est.alpha, "beta": est.beta,
                      "kl_check": est.kl_check(np.linspace(0, 10, 21), np.linspace(0, 50, 51))}
    return iiss_envelope(est, a.t0, x0n, _u_integral(a, est.gamma2)), 0


def envelope_for(a: Analysis, traj: Trajectory | None = None) -> Envelope | None:
    """The theorem's envelope for ``a``, or ``None`` when the rate is not certified stable."""
    verdict = _verdict_for(a)
    if verdict.inconclusive or verdict.cls is StabilityClass.NONE:
        return None
    try:
        env, _ = _envelope_for(a, verdict, traj, {}, [])
    except CertificateError:
        return None
    return env


def analyze(a: Analysis, epsilon: float = 1e-6) -> AnalysisResult:
    """Classify, residual-check, build the envelope, simulate and check containment.

    Exit-style status: 0 when every check passes, 1 on any violation,
    2 when some check is inconclusive and none is violated.
    """
    reasons: list[str] = []
    codes: list[int] = []
    report: dict = {"name": a.name, "theorem": a.cert.theorem.value, "description": a.description,
                    "settings": {"t0": a.t0, "x0": list(a.x0), "tf": a.tf, "horizon": a.horizon, "rtol": a.rtol,
                                 "atol": a.atol, "seed": a.seed, "samples": a.samples, "epsilon": epsilon,
                                 "box": {k: list(v) for k, v in a.box.items()}, "iiss_variant": a.iiss_variant}}
    verdict = _verdict_for(a)
    report["verdict"] = verdict.to_dict()
    if verdict.inconclusive:
        codes.append(2)
        reasons.append(f"rate classification inconclusive: {verdict.reason}")
    elif verdict.cls is StabilityClass.NONE:
        codes.append(1)
        reasons.append(f"rate mu is not stable: {verdict.reason}")

    residuals = [residual_check(a.cert, a.field, a.box, a.samples, a.seed)]
    residuals += bounds_check(a.cert, a.box, a.samples, a.seed)
    report["residuals"] = [r.to_dict() for r in residuals]
    for r in residuals:
        if r.inconclusive:
            codes.append(2)
            reasons.append(f"{r.hypothesis}: antecedent never met in the sampling box")
        elif not r.passed:
            codes.append(1)
            reasons.append(f"{r.hypothesis}: worst residual {r.worst_residual:.3g} at {r.worst_location}")

    traj = simulate(a.field, a.inputs, a.t0, a.x0, a.tf, a.rtol, a.atol)
    report["simulation"] = traj.to_dict()
    if not traj.ok:
        codes.append(1 if traj.status == "diverged" else 2)
        reasons.append(f"simulation stopped: {traj.message}")

    env = None
    if not any(c == 1 for c in codes) and not verdict.inconclusive:
        try:
            env, code = _envelope_for(a, verdict, traj, report, reasons)
            codes.append(code)
        except CertificateError as exc:
            codes.append(1)
            reasons.append(f"envelope: {exc}")
    if env is not None:
        report["envelope"] = env.to_dict()
        cont = envelope_containment(traj, env, epsilon)
        report["containment"] = cont.to_dict()
        if not cont.passed:
            codes.append(1)
            reasons.append(f"containment: {cont.reason}")
    if a.reference_envelope is not None:
        x0n = float(np.linalg.norm(a.x0))
        ref = envelope_containment(traj, lambda ts: a.reference_envelope(ts, a.t0, x0n), epsilon)
        report["reference_containment"] = ref.to_dict()
        if not ref.passed:
            codes.append(1)
            reasons.append(f"reference envelope: {ref.reason}")
    status = 1 if 1 in codes else (2 if 2 in codes else 0)
    report["status"] = {0: "pass", 1: "violation", 2: "inconclusive"}[status]
    report["reasons"] = reasons
    return AnalysisResult(status, reasons, report, traj, env)


_MU4 = "2/(1+t)-t*abs(cos(t))"
_MU4_KINKS = (math.pi / 2, math.pi)
_MU4_PAIR = (4 / (3 * math.pi), 2 * math.log(1 + 1.5 * math.pi) + 2)


def _sig(src: str, start: float = 0.0, kinks=None) -> ScalarSignal:
    return ScalarSignal.parse(src, start=start, kink_period=kinks)


def _example1() -> Analysis:
    q = PowerForm(1.0, 2)
    cert = Certificate(el.parse("x1^2"), 1, _sig("-2/(1+t)", start=1.0), q, q, Theorem.T1)
    return Analysis(
        "example1", el.VectorField.parse(["-x1/(t+sin(x1))"]), cert, t0=2.0, x0=(1.0,), tf=50.0,
        box={"t": (1.5, 60.0), "x1": (-3.0, 3.0)},
        description="x' = -x/(t + sin x) on t > 1 with V = x^2 and mu = -2/(1+t)",
        reference_envelope=lambda t, t0, r: r * (1 + t0) / (1 + t))


def _example2(k: int, r: int) -> Analysis:
    f = [f"-x1/(1+t)+t^2*x2^{2 * k - 1}-t*x1^{2 * r - 1}", f"-x2/(1+t)-t^2*x1^{2 * k - 1}-t*x2^{2 * r - 1}"]
    lower = PowerForm(_sig(f"{2.0 ** (1 - k)!r}*(1+t)"), 2 * k)
    upper = PowerForm(_sig("1+t"), 2 * k)
    cert = Certificate(el.parse(f"(x1^{2 * k}+x2^{2 * k})*(1+t)"), 2, _sig(f"-{2 * k - 1}/(1+t)"), lower, upper)
    c = 2.0 ** ((k - 1) / (2 * k))
    return Analysis(
        f"example2_k{k}_r{r}", el.VectorField.parse(f), cert, t0=0.0, x0=(1.0, 1.0), tf=100.0,
        box={"t": (0.0, 20.0), "x1": (-3.0, 3.0), "x2": (-3.0, 3.0)},
        description=f"planar rotation-damping system with k={k}, r={r} and V = (x1^{2 * k} + x2^{2 * k})(1+t)",
        reference_envelope=lambda t, t0, x0n: c * x0n * (1 + t0) / (1 + t) ** (1 - 1 / (2 * k)))


def _example3(h: str, name: str) -> Analysis:
    q = PowerForm(1.0, 2)
    cert = Certificate(el.parse("x1^2"), 1, _sig("-2*t/(1+t^2)"), q, q, Theorem.T2, pi=_sig("2/(1+t^2)"))
    return Analysis(
        name, el.VectorField.parse([f"-(1+t)/(1+t^2)*x1+sin({h})/(1+t^2)"]), cert, t0=0.0, x0=(2.0,), tf=50.0,
        box={"t": (0.0, 50.0), "x1": (-5.0, 5.0)},
        description=f"drift example with h(x) = {h}, mu = -2t/(1+t^2), pi = 2/(1+t^2)",
        reference_envelope=lambda t, t0, r: np.sqrt(r * r * (1 + t0 * t0) / (1 + t * t) + 2 * (t - t0) / (1 + t * t)),
        reference_kappa=lambda t, t0: 2 * (t - t0) / (1 + t * t))


def _example4_free() -> Analysis:
    q = PowerForm(0.5, 2)
    cert = Certificate(el.parse("0.5*x1^2"), 1, _sig(_MU4, kinks=_MU4_KINKS), q, q, Theorem.T1,
                       certified_pair=_MU4_PAIR)
    gain = math.exp(math.log(1 + 1.5 * math.pi) + 1)
    rate = 2 / (3 * math.pi)
    return Analysis(
        "example4_free", el.VectorField.parse(["(1/(1+t+x1^2)-t*abs(cos(t)))*x1"]), cert, t0=0.0, x0=(1.0,),
        tf=60.0, box={"t": (0.0, 50.0), "x1": (-3.0, 3.0)},
        description="indefinite rate 2/(1+t) - t|cos t| with u = 0 and V = x^2/2",
        reference_envelope=lambda t, t0, r: gain * r * np.exp(-rate * (t - t0)))


def _example4_iss() -> Analysis:
    q = PowerForm(0.5, 2)
    cert = Certificate(el.parse("0.5*x1^2"), 1, _sig(_MU4, kinks=_MU4_KINKS), q, q, Theorem.T3_ISS,
                       rho=el.parse("s"), certified_pair=_MU4_PAIR)
    fld = el.VectorField.parse(["(1/(1+t+x1^2)-t*abs(cos(t)))*x1+2*t*cos(abs(t))/(1+x1^2)*u1"], m=1)
    return Analysis(
        "example4_iss", fld, cert, inputs=InputSignal.parse(["0.1*sin(t)"]), t0=0.0, x0=(1.0,), tf=60.0,
        box={"t": (0.0, 50.0), "x1": (-3.0, 3.0), "u1": (-0.5, 0.5)},
        description="same rate with input u = 0.1 sin t; ISS via V >= |u| => Vdot <= mu V")


def _remark1() -> Analysis:
    q = PowerForm(1.0, 2)
    cert = Certificate(el.parse("x1^2"), 1, _sig("-2*t/(1+t^2)"), q, q, Theorem.T2, pi=_sig("1/(1+t^2)"))
    return Analysis(
        "remark1", el.VectorField.parse(["-t*x1/(1+t^2)+x1/(2*(1+t^2)*(1+x1^2))"]), cert, t0=0.0, x0=(1.0,),
        tf=100.0, box={"t": (0.0, 50.0), "x1": (-5.0, 5.0)},
        description="drift pair mu = -2t/(1+t^2), pi = 1/(1+t^2) realised by a scalar system",
        reference_envelope=lambda t, t0, r: np.sqrt(r * r * (1 + t0 * t0) / (1 + t * t) + (t - t0) / (1 + t * t)),
        reference_kappa=lambda t, t0: (t - t0) / (1 + t * t))


def _iiss_demo() -> Analysis:
    q = PowerForm(0.5, 2)
    cert = Certificate(el.parse("0.5*x1^2"), 1, _sig(_MU4, kinks=_MU4_KINKS), q, q, Theorem.T4_IISS,
                       rho1=el.parse("s"), rho2=el.parse("0.5*s"), certified_pair=_MU4_PAIR)
    fld = el.VectorField.parse(["(1/(1+t)-0.5*t*abs(cos(t)))*x1+0.5*u1*x1+u1/(1+x1^2)"], m=1)
    return Analysis(
        "iiss_demo", fld, cert, inputs=InputSignal.parse(["0.3*exp(-0.2*t)"]), t0=0.0, x0=(1.0,), tf=60.0,
        box={"t": (0.0, 50.0), "x1": (-3.0, 3.0), "u1": (-1.0, 1.0)},
        description="two-gain integral ISS demonstration built on the indefinite rate")


def _corollary_demo() -> Analysis:
    q = PowerForm(0.5, 2)
    cert = Certificate(el.parse("0.5*x1^2"), 1, _sig(_MU4, kinks=_MU4_KINKS), q, q, Theorem.C1_IISS,
                       rho=el.parse("0.5*s"), certified_pair=_MU4_PAIR)
    fld = el.VectorField.parse(["(1/(1+t)-0.5*t*abs(cos(t)))*x1+u1/(1+x1^2)"], m=1)
    return Analysis(
        "corollary_demo", fld, cert, inputs=InputSignal.parse(["0.3*exp(-0.2*t)"]), t0=0.0, x0=(1.0,), tf=60.0,
        box={"t": (0.0, 50.0), "x1": (-3.0, 3.0), "u1": (-1.0, 1.0)},
        description="single-gain integral ISS demonstration built on the indefinite rate")


_BUILDERS = {
    "example1": _example1,
    "example2_k1_r1": lambda: _example2(1, 1),
    "example2_k2_r2": lambda: _example2(2, 2),
    "example3": lambda: _example3("x1", "example3"),
    "example3_cubic": lambda: _example3("x1^3", "example3_cubic"),
    "example4_free": _example4_free,
    "example4_iss": _example4_iss,
    "remark1": _remark1,
    "iiss_demo": _iiss_demo,
    "corollary_demo": _corollary_demo,
}


def catalog() -> list[Analysis]:
    """Every shipped example, freshly built."""
    return [build() for build in _BUILDERS.values()]


def catalog_entry(name: str, k: int | None = None, r: int | None = None) -> Analysis:
    """One catalog entry by name; ``example2`` accepts any integers ``k, r >= 1``."""
    if name == "example2" or (k is not None or r is not None):
        return _example2(k or 1, r or 1)
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}; known: {', '.join(_BUILDERS)}") from None
