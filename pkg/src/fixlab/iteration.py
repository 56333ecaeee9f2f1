"""Picard iteration x_{n+1} = T x_n with tail-bound stopping and orbit diagnostics.

Convergence is declared from a geometric tail bound, never from a small step:
with r = max of the last ``rate_window`` step ratios, the remaining path length
from x_n is at most d(x_n, x_{n+1}) (1 + r + r^2 + ...) = d(x_n, x_{n+1}) / (1 - r)
as long as future ratios stay below r.  Maps whose steps shrink while the
orbit runs off (``exp-drift``) have ratios creeping up to 1, so the bound never
drops below ``eps``.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterator, Optional, Sequence

import numpy as np

from .mappings import MappingSpec, apply, natural_domain, step_function
from .metric import (
    Point,
    RejectedInput,
    SpaceDescriptor,
    _vec_norm,
    as_point,
    contains,
    distance,
    row_norms,
    sample,
)

__all__ = [
    "StoppingConfig",
    "OrbitTrace",
    "IterationReport",
    "UniquenessResult",
    "run",
    "tail_bound",
    "boundedness_transfer_bound",
    "monotone_max_series",
    "multi_start_uniqueness",
    "strict_step_violations",
    "monotone_max_violations",
    "fixed_point_residual",
    "RATIO_FLOOR",
]

RATIO_FLOOR = 1e-14
STORE_BUDGET = 10**7


@dataclass(frozen=True)
class StoppingConfig:
    eps: float = 1e-9
    max_iter: int = 10_000
    divergence_radius: Optional[float] = None  # None: 1e6 * (1 + d(x0, T x0))
    rate_window: int = 16
    cycle_window: int = 0  # accepted for config compatibility; strict step decrease rules out cycles
    store_stride: Optional[int] = None  # None: every point unless dim*max_iter > 1e7

    def __post_init__(self):
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise RejectedInput(f"eps must be positive, got {self.eps!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise RejectedInput(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if self.divergence_radius is not None and not self.divergence_radius > 0:
            raise RejectedInput("divergence_radius must be positive")
        if int(self.rate_window) != self.rate_window or self.rate_window < 2:
            raise RejectedInput(f"rate_window must be an integer >= 2, got {self.rate_window!r}")
        if int(self.cycle_window) != self.cycle_window or self.cycle_window < 0:
            raise RejectedInput("cycle_window must be a nonnegative integer")
        if self.store_stride is not None and (int(self.store_stride) != self.store_stride or self.store_stride < 1):
            raise RejectedInput("store_stride must be a positive integer")
        object.__setattr__(self, "max_iter", int(self.max_iter))
        object.__setattr__(self, "rate_window", int(self.rate_window))
        object.__setattr__(self, "cycle_window", int(self.cycle_window))

    def stride_for(self, dim: int) -> int:
        if self.store_stride is not None:
            return int(self.store_stride)
        return max(1, math.ceil(dim * self.max_iter / STORE_BUDGET))

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "max_iter": self.max_iter,
            "divergence_radius": self.divergence_radius,
            "rate_window": self.rate_window,
            "cycle_window": self.cycle_window,
            "store_stride": self.store_stride,
        }


@dataclass
class OrbitTrace:
    """Per-step record of an orbit x_0, x_1, ..., x_N.

    ``step_distance[n] = d(x_n, x_{n+1})`` for n < N.  ``ratio[n]`` and ``gap[n]``
    relate steps n and n+1 and are NaN where undefined.  ``points`` holds the
    stored iterates, ``point_index`` their orbit indices.
    """

    step_distance: np.ndarray
    points: np.ndarray
    point_index: np.ndarray
    norm_p: float = 2.0

    def __post_init__(self):
        s = self.step_distance
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = s[1:] / s[:-1]
            ratio[s[:-1] < RATIO_FLOOR] = np.nan
            top = np.maximum(s[:-1], s[1:])
            gap = 1.0 - s[1:] / top
            gap[top == 0.0] = np.nan
        self.ratio = ratio
        self.gap = gap

    def __len__(self) -> int:
        return len(self.step_distance)

    def point(self, n: int) -> Point:
        k = np.searchsorted(self.point_index, n)
        if k >= len(self.point_index) or self.point_index[k] != n:
            raise RejectedInput(f"orbit point {n} was not stored")
        return Point(self.points[k])

    def rows(self) -> Iterator[dict]:
        stored = {int(n): k for k, n in enumerate(self.point_index)}
        for n, s in enumerate(self.step_distance):
            row: dict = {"n": n, "step_distance": float(s)}
            if n < len(self.ratio):
                if not math.isnan(self.ratio[n]):
                    row["ratio"] = float(self.ratio[n])
                if not math.isnan(self.gap[n]):
                    row["gap"] = float(self.gap[n])
            if n in stored:
                row["point"] = self.points[stored[n]].tolist()
            yield row
        last = len(self.step_distance)
        if last in stored:
            yield {"n": last, "point": self.points[stored[last]].tolist()}

    def to_jsonl(self) -> str:
        return "".join(json.dumps(row, allow_nan=False) + "\n" for row in self.rows())


@dataclass
class IterationReport:
    status: str  # converged | max_iter | diverged
    iterations: int
    final_point: Point
    estimated_rate: Optional[float]
    tail_bound: Optional[float]
    limit_proxy: Optional[Point]
    x0: Point
    max_excursion: float  # max_n d(x_n, x0) over the run
    divergence_radius: float

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "iterations": self.iterations,
            "final_point": self.final_point.tolist(),
            "estimated_rate": self.estimated_rate,
            "tail_bound": self.tail_bound,
            "limit_proxy": None if self.limit_proxy is None else self.limit_proxy.tolist(),
            "x0": self.x0.tolist(),
            "max_excursion": self.max_excursion,
            "divergence_radius": self.divergence_radius,
        }


def run(
    mapping: MappingSpec,
    space: SpaceDescriptor,
    x0,
    cfg: StoppingConfig = StoppingConfig(),
) -> tuple[IterationReport, OrbitTrace]:
    """Iterate T from x0 until the tail bound drops below eps, the orbit leaves the
    divergence ball around x0, or max_iter steps are taken."""
    x0 = as_point(x0)
    if x0.dim != space.dim:
        raise RejectedInput(f"x0 has dimension {x0.dim}, space has dimension {space.dim}")
    if not contains(space, x0):
        raise RejectedInput("x0 lies outside the space")
    apply(mapping, x0)  # domain check
    f = step_function(mapping, space.dim)
    p = space.norm_p
    start = x0.coords
    stride = cfg.stride_for(space.dim)
    W = cfg.rate_window

    radius = cfg.divergence_radius
    if radius is None:
        radius = 1e6 * (1.0 + distance(space, x0, Point(f(start))))

    steps: list[float] = []
    stored: list[np.ndarray] = [start]
    stored_at: list[int] = [0]
    window: deque = deque(maxlen=W)
    x = start
    prev = math.nan
    status = "max_iter"
    rate: Optional[float] = None
    bound: Optional[float] = None
    excursion = 0.0
    n = 0
    for n in range(cfg.max_iter):
        y = f(x)
        if not np.all(np.isfinite(y)):
            status = "diverged"
            excursion = math.inf
            break
        s = _vec_norm(y - x, p)
        steps.append(s)
        if n > 0:
            window.append(s / prev if prev >= RATIO_FLOOR else math.nan)
        prev = s
        if (n + 1) % stride == 0:
            stored.append(y)
            stored_at.append(n + 1)
        x = y
        excursion = max(excursion, _vec_norm(y - start, p))
        if excursion > radius:
            status = "diverged"
            break
        if s == 0.0:
            # x_{n+1} = x_n: an exact fixed point, nothing left of the tail
            bound = 0.0
            present = [r for r in window if not math.isnan(r)]
            rate = max(present) if present else 0.0
            status = "converged"
            break
        if len(window) == W:
            present = [r for r in window if not math.isnan(r)]
            if present:
                rate = max(present)
                bound = s / (1.0 - rate) if rate < 1.0 else None
                if bound is not None and bound <= cfg.eps:
                    status = "converged"
                    break
    iterations = len(steps)
    if stored_at[-1] != iterations:
        stored.append(x)
        stored_at.append(iterations)
    trace = OrbitTrace(
        step_distance=np.asarray(steps, dtype=np.float64),
        points=np.stack(stored),
        point_index=np.asarray(stored_at, dtype=np.int64),
        norm_p=p,
    )
    final = Point(x)
    report = IterationReport(
        status=status,
        iterations=iterations,
        final_point=final,
        estimated_rate=rate if rate is not None and 0.0 <= rate <= 1.0 else None,
        tail_bound=bound,
        limit_proxy=final if status == "converged" else None,
        x0=x0,
        max_excursion=excursion,
        divergence_radius=float(radius),
    )
    return report, trace


def tail_bound(trace: OrbitTrace, at: int, window: int) -> Optional[float]:
    """d(x_at, x_{at+1}) / (1 - r) with r the largest ratio among steps at .. at+window-1.

    Returns 0 when the step is exactly 0 and ``None`` when r >= 1 or no ratio in
    the window is defined.
    """
    if window < 1 or at < 0 or at + window > len(trace.ratio):
        raise RejectedInput(f"window [{at}, {at + window}) exceeds the {len(trace.ratio)} recorded ratios")
    s = float(trace.step_distance[at])
    if s == 0.0:
        return 0.0
    r = trace.ratio[at : at + window]
    r = r[~np.isnan(r)]
    if r.size == 0:
        return None
    rate = float(r.max())
    if rate >= 1.0:
        return None
    return s / (1.0 - rate)


def boundedness_transfer_bound(
    mapping: MappingSpec,
    x,
    x0,
    orbit_sup: float,
    space: Optional[SpaceDescriptor] = None,
) -> float:
    """Bound on sup_n d(T^n x, x) from a reference orbit of x0.

    B = max{d(x, x0), d(Tx, x), d(Tx0, x0)} + orbit_sup + d(x0, x), where
    orbit_sup bounds d(T^n x0, x0).  Holds for generalized strictly
    nonexpansive T.
    """
    x, x0 = as_point(x), as_point(x0)
    if x.dim != x0.dim:
        raise RejectedInput(f"points have dimensions {x.dim} and {x0.dim}")
    if orbit_sup < 0:
        raise RejectedInput("orbit_sup must be nonnegative")
    if space is None:
        space = SpaceDescriptor(dim=x.dim)
    tx, tx0 = apply(mapping, x), apply(mapping, x0)
    dxx0 = distance(space, x, x0)
    return max(dxx0, distance(space, tx, x), distance(space, tx0, x0)) + orbit_sup + dxx0


def monotone_max_series(
    trace: OrbitTrace,
    limit_proxy,
    space: SpaceDescriptor,
    points: Optional[np.ndarray] = None,
    point_index: Optional[np.ndarray] = None,
) -> np.ndarray:
    """M_n = max{d(x_n, x_inf), d(x_n, x_{n-1})} at every stored n >= 1.

    x_inf is the supplied proxy (the final iterate of a converged run).  The
    step distances come from the trace, so only x_n itself must be stored.
    """
    if points is None:
        points, point_index = trace.points, trace.point_index
    if points is None or len(points) == 0:
        raise RejectedInput("no orbit points stored")
    if point_index is None:
        point_index = np.arange(len(points))
    proxy = as_point(limit_proxy)
    if proxy.dim != space.dim:
        raise RejectedInput("limit proxy dimension does not match the space")
    keep = (point_index >= 1) & (point_index <= len(trace.step_distance))
    if not np.any(keep):
        raise RejectedInput("no stored orbit points with index >= 1")
    to_limit = row_norms(points[keep] - proxy.coords, space.norm_p)
    prev_step = trace.step_distance[point_index[keep] - 1]
    return np.maximum(to_limit, prev_step)


def strict_step_violations(trace: OrbitTrace, floor: float = RATIO_FLOOR) -> int:
    """Count n with d(x_n, x_{n+1}) > floor but d(x_{n+1}, x_{n+2}) >= d(x_n, x_{n+1})."""
    s = trace.step_distance
    if len(s) < 2:
        return 0
    active = s[:-1] > floor
    return int(np.count_nonzero(active & (s[1:] >= s[:-1])))


def monotone_max_violations(series: Sequence[float], rel: float = 1e-12) -> int:
    """Count n with M_{n+1} > M_n + rel * M_1."""
    m = np.asarray(series, dtype=np.float64)
    if m.size < 2:
        return 0
    return int(np.count_nonzero(m[1:] > m[:-1] + rel * m[0]))


def fixed_point_residual(mapping: MappingSpec, space: SpaceDescriptor, x) -> float:
    return distance(space, x, apply(mapping, x))


@dataclass
class UniquenessResult:
    verdict: str  # unique | inconclusive | distinct
    pairwise_max: Optional[float]
    reports: list[IterationReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "pairwise_max": self.pairwise_max,
            "runs": [
                {"status": r.status, "iterations": r.iterations, "final_point": r.final_point.tolist()}
                for r in self.reports
            ],
        }


def multi_start_uniqueness(
    mapping: MappingSpec,
    space: SpaceDescriptor,
    starts: Sequence,
    cfg: StoppingConfig = StoppingConfig(),
    tol: float = 1e-6,
) -> UniquenessResult:
    """Run from every start and compare the limits.

    ``unique``: every run converged and all final points lie pairwise within tol.
    ``inconclusive``: some run did not converge.  ``distinct``: all converged
    but two limits are farther apart than tol.
    """
    if len(starts) == 0:
        raise RejectedInput("need at least one start")
    if not tol > 0:
        raise RejectedInput("tol must be positive")
    reports = [run(mapping, space, x, cfg)[0] for x in starts]
    finals = [r.final_point for r in reports]
    pairwise = max((distance(space, a, b) for a, b in combinations(finals, 2)), default=0.0)
    if not all(r.converged for r in reports):
        verdict = "inconclusive"
    elif pairwise <= tol:
        verdict = "unique"
    else:
        verdict = "distinct"
    return UniquenessResult(verdict=verdict, pairwise_max=pairwise, reports=reports)


def seeded_starts(space: SpaceDescriptor, count: int, seed: int) -> list[Point]:
    return sample(space, count, seed)


def default_space(mapping: MappingSpec, dim: int) -> SpaceDescriptor:
    return natural_domain(mapping, dim)
