"""Vectorized adaptive Gauss-Kronrod (7/15) panel quadrature.

Many independent integrals are refined together: every panel carries an
``owner`` index, panels are bisected until their Kronrod-Gauss difference is
below the owner's share of the tolerance, and the accepted panel values are
summed per owner.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["QuadratureError", "PanelResult", "gk15", "integrate_panels", "split_panels"]

# Kronrod nodes on [0, 1) in decreasing order, the last being the centre.
_XK_HALF = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WK_HALF = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG_HALF = np.array([
    0.0, 0.129484966168869693270611432679082, 0.0, 0.279705391489276667901467771423780,
    0.0, 0.381830050505118944950369775488975, 0.0, 0.417959183673469387755102040816327,
])

XK = np.concatenate([-_XK_HALF[:-1], _XK_HALF[::-1]])
WK = np.concatenate([_WK_HALF[:-1], _WK_HALF[::-1]])
WG = np.concatenate([_WG_HALF[:-1], _WG_HALF[::-1]])

_EPS = np.finfo(float).eps


class QuadratureError(ArithmeticError):
    """Adaptive refinement hit the depth limit before meeting the tolerance."""

    def __init__(self, achieved: float, tol: float):
        self.achieved = achieved
        self.tol = tol
        super().__init__(f"quadrature did not converge: error estimate {achieved:.3g} > tol {tol:.3g}")


@dataclass
class PanelResult:
    values: np.ndarray  # integral per owner
    errors: np.ndarray  # error estimate per owner
    a: np.ndarray  # accepted panels, sorted by (owner, a)
    b: np.ndarray
    panel_values: np.ndarray
    owner: np.ndarray
    converged: bool


def gk15(f: Callable, a: np.ndarray, b: np.ndarray, params: np.ndarray | None = None):
    """Kronrod estimate, |Kronrod - Gauss| and the integral of |f| on each panel."""
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c[:, None] + h[:, None] * XK[None, :]
    y = f(x) if params is None else f(x, params[:, None])
    y = np.broadcast_to(y, x.shape)
    k = h * (y @ WK)
    g = h * (y @ WG)
    resabs = np.abs(h) * (np.abs(y) @ WK)
    return k, np.abs(k - g), resabs


def split_panels(a: float, b: float, breaks=(), max_width: float | None = None) -> np.ndarray:
    """Sorted edges from ``a`` to ``b`` including interior ``breaks``, no wider than ``max_width``."""
    pts = [a, b] + [float(p) for p in breaks if a < p < b]
    edges = np.unique(np.asarray(pts, dtype=float))
    if max_width is None or len(edges) < 2:
        return edges
    lo, hi = edges[:-1], edges[1:]
    k = np.maximum(1, np.ceil((hi - lo) / max_width).astype(int))
    seg = np.repeat(np.arange(len(lo)), k)
    j = np.arange(len(seg)) - np.repeat(np.cumsum(k) - k, k) + 1
    inner = lo[seg] + (hi[seg] - lo[seg]) * (j / k[seg])
    inner[j == k[seg]] = hi[seg][j == k[seg]]  # keep the original break points exactly
    return np.concatenate([edges[:1], inner])


def integrate_panels(
    f: Callable,
    a: np.ndarray,
    b: np.ndarray,
    tol: float | np.ndarray,
    *,
    owner: np.ndarray | None = None,
    params: np.ndarray | None = None,
    max_depth: int = 60,
    strict: bool = True,
) -> PanelResult:
    """Integrate ``f`` over panels ``[a_i, b_i]`` and sum the results per owner.

    ``tol`` is an absolute tolerance per owner; each panel receives a share
    proportional to its width.  ``params`` (one value per panel) is passed as
    a second argument to ``f`` and inherited by sub-panels.
    """
    a = np.asarray(a, dtype=float).copy()
    b = np.asarray(b, dtype=float).copy()
    owner = np.zeros(len(a), dtype=int) if owner is None else np.asarray(owner, dtype=int)
    n_owner = int(owner.max()) + 1 if len(owner) else 0
    length = np.bincount(owner, weights=np.abs(b - a), minlength=n_owner)
    tol_owner = np.broadcast_to(np.asarray(tol, dtype=float), (n_owner,))
    depth = np.zeros(len(a), dtype=int)
    p = None if params is None else np.asarray(params, dtype=float)

    acc_a, acc_b, acc_v, acc_e, acc_o = [], [], [], [], []
    converged = True
    while len(a):
        k, err, resabs = gk15(f, a, b, p)
        width = np.abs(b - a)
        share = tol_owner[owner] * np.where(length[owner] > 0, width / np.maximum(length[owner], 1e-300), 1.0)
        floor = 50 * _EPS * resabs
        tiny = width <= 8 * _EPS * np.maximum(1.0, np.abs(a) + np.abs(b))
        ok = (err <= share) | (err <= floor) | tiny
        give_up = ~ok & (depth >= max_depth)
        if give_up.any():
            converged = False
        done = ok | give_up
        acc_a.append(a[done]); acc_b.append(b[done]); acc_v.append(k[done])
        acc_e.append(np.where(ok[done] & (err[done] <= floor[done]), 0.0, err[done]))
        acc_o.append(owner[done])
        rest = ~done
        if not rest.any():
            break
        ra, rb, ro, rd = a[rest], b[rest], owner[rest], depth[rest] + 1
        mid = 0.5 * (ra + rb)
        a = np.concatenate([ra, mid])
        b = np.concatenate([mid, rb])
        owner = np.concatenate([ro, ro])
        depth = np.concatenate([rd, rd])
        if p is not None:
            p = np.concatenate([p[rest], p[rest]])

    pa, pb = np.concatenate(acc_a), np.concatenate(acc_b)
    pv, pe, po = np.concatenate(acc_v), np.concatenate(acc_e), np.concatenate(acc_o)
    order = np.lexsort((pa, po))
    pa, pb, pv, pe, po = pa[order], pb[order], pv[order], pe[order], po[order]
    values = np.zeros(n_owner)
    np.add.at(values, po, pv)
    errors = np.bincount(po, weights=pe, minlength=n_owner)
    if strict and not converged:
        bad = errors > tol_owner
        if bad.any():
            raise QuadratureError(float(errors[bad].max()), float(tol_owner[bad].min()))
    return PanelResult(values, errors, pa, pb, pv, po, converged)
