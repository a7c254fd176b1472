"""Derivative-free minimization of convex extended-valued functions.

``golden_section`` is the one-dimensional workhorse; ``minimize_box`` wraps it
in a grid scan plus cyclic coordinate descent. Objectives may return
``+inf`` outside a convex domain.
"""
from __future__ import annotations

import itertools
import math
from typing import Callable, NamedTuple

import numpy as np

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Minimum(NamedTuple):
    x: np.ndarray | float
    value: float
    evaluations: int


def golden_section(
    fun: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-12,
    max_iter: int = 400,
    x_hint: float | None = None,
) -> Minimum:
    """Minimize a unimodal ``fun`` on ``[a, b]``.

    Endpoints are evaluated too, so a minimum sitting on the boundary of the
    bracket is returned exactly. ``x_hint`` is a point known to have a finite
    value; it resolves the ambiguity when both interior probes are infinite.
    """
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        return fun(x)

    best_x, best_f = a, f(a)
    fb = f(b)
    if fb < best_f:
        best_x, best_f = b, fb
    if x_hint is not None:
        fh = f(x_hint)
        if fh < best_f:
            best_x, best_f = x_hint, fh

    x1 = b - INVPHI * (b - a)
    x2 = a + INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        for x, fx in ((x1, f1), (x2, f2)):
            if fx < best_f:
                best_x, best_f = x, fx
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if f1 == math.inf and f2 == math.inf:
            if best_x <= x1:
                b = x1
            elif best_x >= x2:
                a = x2
            else:
                a, b = x1, x2
            x1 = b - INVPHI * (b - a)
            x2 = a + INVPHI * (b - a)
            f1, f2 = f(x1), f(x2)
        elif f2 > f1 or (f2 == f1 and best_x <= x1):
            b, x2, f2 = x2, x1, f1
            x1 = b - INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INVPHI * (b - a)
            f2 = f(x2)
    return Minimum(best_x, best_f, evals)


def grid_axes(lo: np.ndarray, hi: np.ndarray, points: int) -> list[np.ndarray]:
    return [np.linspace(l, h, points) for l, h in zip(lo, hi)]


def minimize_box(
    fun: Callable[[np.ndarray], float],
    lo,
    hi,
    grid_points: int = 33,
    refine_iters: int = 20,
    tol: float = 1e-12,
) -> Minimum:
    """Grid scan of the box followed by coordinate-wise golden-section sweeps.

    ``refine_iters`` caps the number of full coordinate sweeps; each line search
    spans one grid spacing either side of the current point.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    axes = grid_axes(lo, hi, grid_points)
    spacing = (hi - lo) / (grid_points - 1)
    evals = 0
    best_x, best_f = None, math.inf
    for point in itertools.product(*axes):
        x = np.array(point)
        fx = fun(x)
        evals += 1
        if best_x is None or fx < best_f:
            best_x, best_f = x, fx
    if best_f == math.inf:
        return Minimum(best_x, math.inf, evals)

    x = best_x.copy()
    fx = best_f
    for _ in range(refine_iters):
        before = fx
        for i in range(x.size):
            a = max(lo[i], x[i] - spacing[i])
            b = min(hi[i], x[i] + spacing[i])

            def line(t, i=i):
                y = x.copy()
                y[i] = t
                return fun(y)

            m = golden_section(line, a, b, tol=tol, x_hint=x[i])
            evals += m.evaluations
            if m.value <= fx:
                x[i], fx = m.x, m.value
        if fx == -math.inf or before - fx <= 1e-15 * max(1.0, abs(fx)):
            break
    return Minimum(x, fx, evals)
