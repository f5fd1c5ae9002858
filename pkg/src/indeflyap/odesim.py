"""Adaptive Dormand-Prince 5(4) integration of ``x' = f(t, x, u(t))``.

The stepping loop works on plain Python floats: systems here have a handful
of states, where per-step array overhead would dominate.  Dense output is
cubic Hermite interpolation between accepted steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import exprlang as el

__all__ = ["InputSignal", "Trajectory", "StepStats", "simulate", "sample_norm", "DIVERGENCE_LIMIT"]

DIVERGENCE_LIMIT = 1e12

# Dormand-Prince tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
# fifth-order weights minus the embedded fourth-order ones
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0


@dataclass(frozen=True, eq=False)
class InputSignal:
    """Input ``u(t)`` given by one expression in ``t`` per component."""

    components: tuple[el.Expr, ...] = ()

    def __post_init__(self):
        for c in self.components:
            extra = el.free_vars(c) - {"t"}
            if extra:
                raise el.ExprNameError(sorted(extra)[0], None, "inputs depend on t only, got")

    @classmethod
    def parse(cls, sources: Sequence[str]) -> "InputSignal":
        return cls(tuple(el.parse(s) for s in sources))

    @classmethod
    def zero(cls, m: int) -> "InputSignal":
        return cls(tuple(el.Num(0.0) for _ in range(m)))

    @property
    def m(self) -> int:
        return len(self.components)

    def compile(self):
        if not self.components:
            return lambda t: ()
        return el.compile_scalar(tuple(self.components), ["t"])

    def values(self, ts) -> np.ndarray:
        """Array of shape ``(len(ts), m)``."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        cols = [np.broadcast_to(el.compile_numpy(c, ["t"])(ts), ts.shape) for c in self.components]
        return np.column_stack(cols) if cols else np.zeros((len(ts), 0))

    def norm(self, ts) -> np.ndarray:
        return np.linalg.norm(self.values(ts), axis=1)

    def check_bounded(self, t0: float, tf: float, samples: int = 2001, limit: float = 1e12) -> float:
        """Largest sampled ``|u|`` on ``[t0, tf]``; raises when it is not finite or huge."""
        if not self.components:
            return 0.0
        peak = float(np.max(self.norm(np.linspace(t0, tf, samples))))
        if not peak <= limit:
            raise ValueError(f"input is not locally bounded on [{t0}, {tf}] (sampled |u| = {peak:.3g})")
        return peak


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    nfev: int = 0
    max_error: float = 0.0  # largest normalized error estimate of an accepted step

    def to_dict(self) -> dict:
        return {"accepted": self.accepted, "rejected": self.rejected, "nfev": self.nfev, "max_error": self.max_error}


@dataclass
class Trajectory:
    """Accepted steps with Hermite dense output.

    ``status`` is ``ok``, ``diverged``, ``nonfinite``, ``domain_error``,
    ``step_underflow`` or ``max_steps``; anything but ``ok`` means the
    trajectory stops before the requested final time.
    """

    times: np.ndarray
    states: np.ndarray
    derivs: np.ndarray
    status: str
    message: str
    stats: StepStats
    t_final: float
    inputs: InputSignal | None = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def state_at(self, ts) -> np.ndarray:
        """Interpolated states, shape ``(len(ts), n)``; exact at step points."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if ts.size and (ts.min() < self.times[0] or ts.max() > self.times[-1]):
            raise ValueError(f"grid point outside the trajectory window [{self.times[0]}, {self.times[-1]}]")
        i = np.clip(np.searchsorted(self.times, ts, side="right") - 1, 0, max(len(self.times) - 2, 0))
        if len(self.times) == 1:
            return np.repeat(self.states[:1], len(ts), axis=0)
        t_a, t_b = self.times[i], self.times[i + 1]
        h = (t_b - t_a)[:, None]
        th = ((ts - t_a) / (t_b - t_a))[:, None]
        y0, y1 = self.states[i], self.states[i + 1]
        f0, f1 = self.derivs[i], self.derivs[i + 1]
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th * th * (3 - 2 * th)
        h11 = th * th * (th - 1)
        out = h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1
        exact = ts == t_a
        out[exact] = y0[exact]
        return out

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def dense_grid(self, per_step: int = 4) -> np.ndarray:
        """Step points plus ``per_step - 1`` interior points per step."""
        if len(self.times) < 2:
            return self.times.copy()
        frac = np.arange(per_step) / per_step
        inner = self.times[:-1, None] + frac[None, :] * np.diff(self.times)[:, None]
        return np.concatenate([inner.ravel(), self.times[-1:]])

    def input_sup(self, ts) -> np.ndarray:
        """Running ``max |u|`` from ``t0`` up to each of ``ts`` (sorted), over step points and ``ts``."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if self.inputs is None or not self.inputs.components:
            return np.zeros_like(ts)
        grid = np.unique(np.concatenate([self.dense_grid(4), ts]))
        run = np.maximum.accumulate(self.inputs.norm(grid))
        return run[np.searchsorted(grid, ts)]

    def to_dict(self) -> dict:
        return {"status": self.status, "message": self.message, "t0": self.t0, "t_end": self.t_end,
                "t_final": self.t_final, "steps": self.stats.to_dict()}


_STEPPERS: dict = {}


def _stepper(n: int):
    """One Dormand-Prince step, unrolled over the ``n`` components.

    Returns ``(y_new, f(t + h, y_new), normalized error)``.
    """
    if n in _STEPPERS:
        return _STEPPERS[n]
    js = range(n)
    lines = ["def step(f, t, y, k1, h, atol, rtol):",
             f"    ({''.join(f'y{j}, ' for j in js)}) = y",
             f"    ({''.join(f'k1_{j}, ' for j in js)}) = k1"]
    for i in range(1, 7):
        terms = lambda j: " + ".join(f"{_A[i][r]!r} * k{r + 1}_{j}" for r in range(i) if _A[i][r] != 0.0)
        stage = ", ".join(f"y{j} + h * ({terms(j)})" for j in js)
        lines.append(f"    s = ({stage},)")
        lines.append(f"    ({''.join(f'k{i + 1}_{j}, ' for j in js)}) = f(t + {_C[i]!r} * h, s)")
    lines.append("    err = 0.0")
    for j in js:
        e = " + ".join(f"{_E[r]!r} * k{r + 1}_{j}" for r in range(7) if _E[r] != 0.0)
        lines.append(f"    e = abs(h * ({e})) / (atol + rtol * max(abs(y{j}), abs(s[{j}])))")
        lines.append("    if not e <= err:")
        lines.append("        err = e")
    lines.append(f"    return s, ({''.join(f'k7_{j}, ' for j in js)}), err")
    ns: dict = {}
    exec(compile("\n".join(lines) + "\n", f"<dopri5-step-{n}>", "exec"), ns)
    _STEPPERS[n] = ns["step"]
    return ns["step"]


def _initial_step(f, t0, y0, f0, rtol, atol, direction_span):
    # Hairer, Norsett & Wanner, Solving ODEs I, section II.4
    scale = [atol + rtol * abs(v) for v in y0]
    d0 = math.sqrt(sum((v / s) ** 2 for v, s in zip(y0, scale)) / len(y0))
    d1 = math.sqrt(sum((v / s) ** 2 for v, s in zip(f0, scale)) / len(y0))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, direction_span)
    y1 = [v + h0 * d for v, d in zip(y0, f0)]
    f1 = f(t0 + h0, y1)
    d2 = math.sqrt(sum(((a - b) / s) ** 2 for a, b, s in zip(f1, f0, scale)) / len(y0)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, direction_span)


def simulate(field: el.VectorField, u: InputSignal | None, t0: float, x0: Sequence[float], tf: float,
             rtol: float = 1e-9, atol: float = 1e-12, *, max_steps: int = 1_000_000,
             first_step: float | None = None, max_step: float = math.inf) -> Trajectory:
    """Integrate from ``(t0, x0)`` to ``tf``.

    The local error estimate of each accepted step satisfies
    ``|err_i| <= atol + rtol * max(|x_i|, |x_i_new|)`` componentwise.
    """
    if not tf > t0:
        raise ValueError("need tf > t0")
    x0 = [float(v) for v in x0]
    if len(x0) != field.n:
        raise ValueError(f"x0 has {len(x0)} entries, the field has {field.n} states")
    u = InputSignal.zero(field.m) if u is None else u
    if u.m != field.m:
        raise ValueError(f"input has {u.m} components, the field expects {field.m}")
    if rtol <= 0 or atol <= 0:
        raise ValueError("tolerances must be positive")
    rhs = field.compile()
    u_fn = u.compile()
    stats = StepStats()

    def f(t, y):
        stats.nfev += 1
        return rhs(t, y, u_fn(t)) if field.m else rhs(t, y)

    times, states, derivs = [float(t0)], [tuple(x0)], []
    status, message = "ok", ""
    t, y = float(t0), x0
    try:
        k1 = f(t, y)
    except el.ExprDomainError as exc:
        return _finish(times, states, [tuple([math.nan] * field.n)], "domain_error", str(exc), stats, tf, u)
    derivs.append(tuple(k1))
    if not all(math.isfinite(v) for v in k1):
        return _finish(times, states, derivs, "nonfinite", f"non-finite derivative at t={t}", stats, tf, u)
    h = first_step or _initial_step(f, t, y, k1, rtol, atol, tf - t0)
    h = min(h, max_step)
    step = _stepper(field.n)
    try:
        while t < tf:
            if stats.accepted >= max_steps:
                status, message = "max_steps", f"stopped after {max_steps} steps at t={t}"
                break
            last = False
            if t + h >= tf or t + 1.01 * h >= tf:
                h = tf - t
                last = True
            if h <= 16 * math.ulp(max(abs(t), 1.0)):
                status, message = "step_underflow", f"step size underflow at t={t}"
                break
            y_new, k7, err = step(f, t, y, k1, h, atol, rtol)
            if not math.isfinite(err):
                # overflow inside the stages: retry with a much smaller step
                stats.rejected += 1
                h *= _MIN_FACTOR
                continue
            if err <= 1.0:
                t = tf if last else t + h
                y = y_new
                k1 = k7
                stats.accepted += 1
                stats.max_error = max(stats.max_error, err)
                times.append(t)
                states.append(tuple(y))
                derivs.append(tuple(k1))
                if not all(math.isfinite(v) for v in k1):
                    status, message = "nonfinite", f"non-finite derivative at t={t}"
                    break
                if max(abs(v) for v in y) > DIVERGENCE_LIMIT:
                    status, message = "diverged", f"|x| exceeded {DIVERGENCE_LIMIT:g} at t={t}"
                    break
                factor = _MAX_FACTOR if err == 0 else min(_MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2))
                h = min(h * factor, max_step)
            else:
                stats.rejected += 1
                h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
    except el.ExprDomainError as exc:
        status, message = "domain_error", f"{exc} near t={t}"
    return _finish(times, states, derivs, status, message, stats, tf, u)


def _finish(times, states, derivs, status, message, stats, tf, u) -> Trajectory:
    return Trajectory(np.array(times), np.array(states, dtype=float), np.array(derivs, dtype=float),
                      status, message, stats, float(tf), u)


def sample_norm(traj: Trajectory, grid) -> list[tuple[float, float]]:
    """Euclidean norms of interpolated states at ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        return []
    xs = traj.state_at(grid)
    return [(float(t), float(v)) for t, v in zip(grid, np.linalg.norm(xs, axis=1))]
