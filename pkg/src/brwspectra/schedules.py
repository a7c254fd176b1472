"""Parameter schedules for inhomogeneous Mandelbrot martingales.

A schedule is a list of segments ``(q, A, dwell)``: the martingale uses
parameter ``q`` and truncation level ``A`` for ``dwell`` consecutive
generations, then moves on to the next segment.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import GradientInversionFailure, OutsideDomain
from .laws import ReproductionLaw, finite_difference_grad

INF = math.inf


@dataclass(frozen=True)
class Segment:
    q: tuple[float, ...]
    A: float  # math.inf means no truncation
    dwell: int

    def __post_init__(self):
        object.__setattr__(self, "q", tuple(float(x) for x in np.atleast_1d(self.q)))
        if self.dwell < 1:
            raise ValueError("dwell must be >= 1")
        if not self.A > 0:
            raise ValueError("truncation level must be positive")


@dataclass(frozen=True)
class ParameterSchedule:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise ValueError("a schedule needs at least one segment")

    @property
    def length(self) -> int:
        return sum(s.dwell for s in self.segments)

    @property
    def block_ends(self) -> list[int]:
        """Cumulative generation counts ``M_j`` at the end of each segment."""
        return list(np.cumsum([s.dwell for s in self.segments]))

    def levels(self) -> Iterator[tuple[int, int, Segment]]:
        """Yield ``(generation k >= 1, segment index, segment)``."""
        k = 0
        for j, seg in enumerate(self.segments):
            for _ in range(seg.dwell):
                k += 1
                yield k, j, seg

    def to_json(self) -> list[dict]:
        return [
            {"q": list(s.q), "A": None if s.A == INF else s.A, "dwell": s.dwell}
            for s in self.segments
        ]

    @classmethod
    def from_json(cls, obj) -> "ParameterSchedule":
        return cls(
            tuple(
                Segment(s["q"], INF if s.get("A") is None else float(s["A"]), int(s["dwell"]))
                for s in obj
            )
        )


def truncated_grad(law: ReproductionLaw, q, A: float) -> np.ndarray:
    """Gradient of the truncated cumulant (the plain gradient when ``A`` is infinite)."""
    if A == INF:
        return law.grad(q)
    return finite_difference_grad(lambda x: law.truncated(x, A)[0], np.atleast_1d(np.asarray(q, float)))


def running_gradient_average(law: ReproductionLaw, schedule: ParameterSchedule) -> np.ndarray:
    """Block-end values of ``n^{-1} sum_{k <= n} grad P_{A_k}(q_k)``.

    Within a block the running average moves along the straight segment
    between consecutive block-end values, so these points describe the whole
    trajectory. Row 0 is the value after the first block.
    """
    total = np.zeros(law.dim)
    n = 0
    out = []
    for seg in schedule.segments:
        g = truncated_grad(law, seg.q, seg.A)
        total = total + seg.dwell * g
        n += seg.dwell
        out.append(total / n)
    return np.array(out)


def invert_gradient(law: ReproductionLaw, alpha, q0=None, max_iter: int = 100, tol: float = 1e-10) -> np.ndarray:
    """Solve ``grad(q) = alpha`` by damped Newton with backtracking."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=np.float64))
    q = np.zeros(law.dim) if q0 is None else np.atleast_1d(np.asarray(q0, dtype=np.float64))

    def resid(x):
        try:
            return law.grad(x) - alpha
        except OutsideDomain:
            return None

    r = resid(q)
    if r is None:
        raise GradientInversionFailure("starting point outside the domain", alpha=alpha.tolist())
    for _ in range(max_iter):
        if np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(alpha)):
            return q
        try:
            step = np.linalg.solve(law.hessian(q), r)
        except (np.linalg.LinAlgError, OutsideDomain):
            break
        t = 1.0
        while t > 1e-12:
            cand = q - t * step
            rc = resid(cand)
            if rc is not None and np.linalg.norm(rc) < np.linalg.norm(r):
                q, r = cand, rc
                break
            t *= 0.5
        else:
            break
    raise GradientInversionFailure(
        f"Newton did not converge in {max_iter} iterations", alpha=alpha.tolist(), residual=float(np.linalg.norm(r))
    )


def dwell_lengths(count: int, rule: str = "geometric", base: int = 4, ratio: float = 1.5) -> list[int]:
    """Dwell lengths per block.

    ``geometric``: ``ceil(base * ratio**j)``; ``superexponential``:
    ``ceil(base * ratio**(j(j+1)/2))``, for which the last block eventually
    dominates the whole past.
    """
    if rule == "geometric":
        return [math.ceil(base * ratio**j) for j in range(count)]
    if rule == "superexponential":
        return [math.ceil(base * ratio ** (j * (j + 1) / 2)) for j in range(count)]
    if rule == "constant":
        return [int(base)] * count
    raise ValueError(f"unknown dwell rule {rule!r}")


def schedule_for_target(
    law: ReproductionLaw,
    points,
    dwell_rule: str = "geometric",
    base: int = 4,
    ratio: float = 1.5,
    cycles: int = 1,
    A: float = INF,
) -> ParameterSchedule:
    """Schedule whose running gradient average tracks the chain ``points``.

    Each target level ``alpha_m`` is mapped to ``q_m`` with
    ``grad(q_m) = alpha_m``. With ``cycles > 1`` the chain is traversed back
    and forth, so the limit points of the running average sweep the chain.
    """
    pts = [np.atleast_1d(np.asarray(p, dtype=np.float64)) for p in points]
    qs = []
    guess = None
    for p in pts:
        guess = invert_gradient(law, p, q0=guess)
        qs.append(guess)
    order = list(range(len(qs)))
    seq = list(order)
    for c in range(1, cycles):
        back = order[::-1] if c % 2 else order
        seq.extend(back[1:] if len(order) > 1 else back)
    dwells = dwell_lengths(len(seq), dwell_rule, base, ratio)
    return ParameterSchedule(tuple(Segment(tuple(qs[i]), A, L) for i, L in zip(seq, dwells)))
