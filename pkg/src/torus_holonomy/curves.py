"""Parameter-space curves: circles/ellipses, waypoint paths, and derived curves.

A curve knows its duration, point/velocity queries, interior breakpoints
(times where smoothness may degrade), and whether it closes.  Integration
grids are always aligned with breakpoints so ordered products and RK4 never
step across a joint; that also makes the propagator group laws exact at the
discrete level for matched step counts.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatchError
from .fields import ParameterPolynomial

CLOSED_TOL = 1e-12


class ParameterCurve(abc.ABC):
    """Piecewise-smooth path ``xi : [0, T] -> R^d`` with velocity access."""

    dimension: int
    duration: float
    breakpoints: tuple[float, ...] = ()

    @abc.abstractmethod
    def point(self, t: float) -> np.ndarray: ...

    @abc.abstractmethod
    def velocity(self, t: float) -> np.ndarray: ...

    @property
    def is_closed(self) -> bool:
        gap = np.linalg.norm(self.point(0.0) - self.point(self.duration))
        return bool(gap <= CLOSED_TOL)

    def reverse(self) -> "ParameterCurve":
        return ReversedCurve(self)


@dataclass(frozen=True)
class CirclePath(ParameterCurve):
    """Circle/ellipse ``center + cos(theta) u + sin(theta) v`` traversed smoothly.

    ``theta(t) = phase + 2 pi turns t / duration``.  Integer ``turns`` close
    the loop; ``turns=0`` with any duration is the constant (zero-velocity)
    loop.
    """

    center: tuple[float, ...]
    u: tuple[float, ...]
    v: tuple[float, ...]
    duration: float
    turns: float = 1.0
    phase: float = 0.0

    def __post_init__(self):
        center = tuple(float(x) for x in self.center)
        u = tuple(float(x) for x in self.u)
        v = tuple(float(x) for x in self.v)
        if not len(center) == len(u) == len(v):
            raise DimensionMismatchError("center, u, v must have equal length")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "dimension", len(center))
        object.__setattr__(self, "breakpoints", ())

    @classmethod
    def circle(
        cls,
        center: Sequence[float],
        radius: float,
        duration: float,
        axes: tuple[int, int] = (0, 1),
        turns: float = 1.0,
        phase: float = 0.0,
    ) -> "CirclePath":
        d = len(center)
        if not all(0 <= a < d for a in axes) or axes[0] == axes[1]:
            raise DimensionMismatchError(f"circle axes {axes} invalid for dimension {d}")
        u = [0.0] * d
        v = [0.0] * d
        u[axes[0]] = radius
        v[axes[1]] = radius
        return cls(tuple(center), tuple(u), tuple(v), duration, turns, phase)

    def _theta(self, t: float) -> float:
        return self.phase + 2.0 * np.pi * self.turns * t / self.duration

    def point(self, t: float) -> np.ndarray:
        th = self._theta(t)
        return np.asarray(self.center) + np.cos(th) * np.asarray(self.u) + np.sin(th) * np.asarray(self.v)

    def velocity(self, t: float) -> np.ndarray:
        th = self._theta(t)
        rate = 2.0 * np.pi * self.turns / self.duration
        return rate * (-np.sin(th) * np.asarray(self.u) + np.cos(th) * np.asarray(self.v))


def _blend(u: float) -> float:
    # C^2 ease over [0,1]: zero velocity and acceleration at both ends.
    return u - np.sin(2.0 * np.pi * u) / (2.0 * np.pi)


def _blend_rate(u: float) -> float:
    return 1.0 - np.cos(2.0 * np.pi * u)


@dataclass(frozen=True)
class WaypointPath(ParameterCurve):
    """Piecewise-linear waypoints traversed with a smooth speed profile.

    Each segment takes an equal share of the duration; the traversal speed
    vanishes at the joints, so point and velocity are continuous across
    segments.  Segment joints are reported as breakpoints.
    """

    points: tuple[tuple[float, ...], ...]
    duration: float

    def __post_init__(self):
        pts = tuple(tuple(float(x) for x in p) for p in self.points)
        if len(pts) < 2:
            raise ValueError("need at least two waypoints")
        d = len(pts[0])
        if any(len(p) != d for p in pts):
            raise DimensionMismatchError("waypoints of unequal dimension")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        segments = len(pts) - 1
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dimension", d)
        object.__setattr__(
            self,
            "breakpoints",
            tuple(self.duration * i / segments for i in range(1, segments)),
        )

    def _locate(self, t: float) -> tuple[int, float, float]:
        segments = len(self.points) - 1
        seg_dur = self.duration / segments
        i = min(int(t / seg_dur), segments - 1) if t < self.duration else segments - 1
        return i, (t - i * seg_dur) / seg_dur, seg_dur

    def point(self, t: float) -> np.ndarray:
        i, u, _ = self._locate(t)
        a = np.asarray(self.points[i])
        b = np.asarray(self.points[i + 1])
        return a + _blend(np.clip(u, 0.0, 1.0)) * (b - a)

    def velocity(self, t: float) -> np.ndarray:
        i, u, seg_dur = self._locate(t)
        a = np.asarray(self.points[i])
        b = np.asarray(self.points[i + 1])
        return _blend_rate(np.clip(u, 0.0, 1.0)) / seg_dur * (b - a)


@dataclass(frozen=True)
class ReversedCurve(ParameterCurve):
    """The same trace walked backwards."""

    base: ParameterCurve

    def __post_init__(self):
        T = self.base.duration
        object.__setattr__(self, "dimension", self.base.dimension)
        object.__setattr__(self, "duration", T)
        object.__setattr__(self, "breakpoints", tuple(sorted(T - b for b in self.base.breakpoints)))

    def point(self, t: float) -> np.ndarray:
        return self.base.point(self.duration - t)

    def velocity(self, t: float) -> np.ndarray:
        return -self.base.velocity(self.duration - t)


@dataclass(frozen=True)
class ChainedCurve(ParameterCurve):
    """Concatenation: run ``first`` over [0, T1], then ``second``."""

    first: ParameterCurve
    second: ParameterCurve

    def __post_init__(self):
        if self.first.dimension != self.second.dimension:
            raise DimensionMismatchError("cannot chain curves of different dimensions")
        gap = np.linalg.norm(self.first.point(self.first.duration) - self.second.point(0.0))
        if gap > 1e-9:
            raise ValueError(f"curves do not connect (gap {gap:.3e})")
        t1 = self.first.duration
        object.__setattr__(self, "dimension", self.first.dimension)
        object.__setattr__(self, "duration", t1 + self.second.duration)
        object.__setattr__(
            self,
            "breakpoints",
            tuple(self.first.breakpoints) + (t1,) + tuple(t1 + b for b in self.second.breakpoints),
        )

    def point(self, t: float) -> np.ndarray:
        t1 = self.first.duration
        return self.first.point(t) if t <= t1 else self.second.point(t - t1)

    def velocity(self, t: float) -> np.ndarray:
        t1 = self.first.duration
        return self.first.velocity(t) if t <= t1 else self.second.velocity(t - t1)


def concatenate(first: ParameterCurve, second: ParameterCurve) -> ParameterCurve:
    return ChainedCurve(first, second)


@dataclass(frozen=True)
class ReparameterizedCurve(ParameterCurve):
    """``xi o tau`` for a smooth monotone clock map tau : [0, T'] -> [0, T]."""

    base: ParameterCurve
    tau: Callable[[float], float]
    tau_dot: Callable[[float], float]
    duration: float

    _CHECK_SAMPLES = 257

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        T = self.base.duration
        if abs(self.tau(0.0)) > 1e-9 * max(1.0, T) or abs(self.tau(self.duration) - T) > 1e-9 * max(1.0, T):
            raise ValueError("tau must map [0, duration] onto [0, base duration]")
        samples = np.linspace(0.0, self.duration, self._CHECK_SAMPLES)
        rates = [self.tau_dot(float(t)) for t in samples]
        if min(rates) < -1e-12:
            raise ValueError("tau must be monotone non-decreasing")
        values = [self.tau(float(t)) for t in samples]
        if np.any(np.diff(values) < -1e-12):
            raise ValueError("tau must be monotone non-decreasing")
        object.__setattr__(self, "dimension", self.base.dimension)
        # Breakpoints pull back through tau; invert by bisection (tau monotone).
        object.__setattr__(
            self,
            "breakpoints",
            tuple(self._preimage(b) for b in self.base.breakpoints),
        )

    def _preimage(self, target: float) -> float:
        lo, hi = 0.0, self.duration
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.tau(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def point(self, t: float) -> np.ndarray:
        return self.base.point(self.tau(t))

    def velocity(self, t: float) -> np.ndarray:
        return self.base.velocity(self.tau(t)) * self.tau_dot(t)


def reparameterize(
    curve: ParameterCurve,
    tau: Callable[[float], float],
    tau_dot: Callable[[float], float],
    duration: float,
) -> ParameterCurve:
    return ReparameterizedCurve(curve, tau, tau_dot, duration)


def step_intervals(curve: ParameterCurve, steps: int) -> np.ndarray:
    """Grid of steps+1 boundary times, split exactly at the curve's breakpoints.

    Steps are shared among smooth segments proportionally to their duration
    (largest-remainder rounding, at least one per segment).  Raises if there
    are more segments than steps.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    edges = [0.0] + [b for b in curve.breakpoints if 0.0 < b < curve.duration] + [curve.duration]
    edges = sorted(set(edges))
    nseg = len(edges) - 1
    if steps < nseg:
        raise ValueError(f"{steps} steps cannot cover {nseg} smooth segments")
    durations = np.diff(edges)
    ideal = steps * durations / curve.duration
    counts = np.maximum(1, np.floor(ideal).astype(int))
    while counts.sum() > steps:
        k = int(np.argmax(counts))
        counts[k] -= 1
    remainders = ideal - counts
    while counts.sum() < steps:
        k = int(np.argmax(remainders))
        counts[k] += 1
        remainders[k] = -np.inf
    times = [np.linspace(edges[i], edges[i + 1], counts[i] + 1)[:-1] for i in range(nseg)]
    return np.concatenate(times + [np.array([curve.duration])])


def line_integral(polys: Mapping[int, ParameterPolynomial], curve: ParameterCurve) -> float:
    """Exact line integral ``sum_beta int P_beta(xi) dxi^beta`` along the curve.

    Serves as the independent oracle for Abelian control phases:

    * full-turn ``CirclePath``: the integrand is a trigonometric polynomial
      over a full period, so a uniform midpoint sum with more nodes than the
      trig degree is exact;
    * ``WaypointPath``: along each straight segment the pullback is a
      polynomial in the blend variable, integrated exactly by
      Gauss-Legendre (the smooth clock drops out by substitution);
    * reversed / chained / reparameterized curves reduce to their bases,
      which is precisely the path-only character of the integral;
    * non-integer circle turns fall back to high-order panels (accurate to
      roundoff for desk-scale analytic integrands).
    """
    for beta, poly in polys.items():
        if not 0 <= beta < curve.dimension:
            raise DimensionMismatchError(f"parameter axis {beta} out of range")
        if poly.dim != curve.dimension:
            raise DimensionMismatchError("polynomial dimension differs from curve dimension")

    if isinstance(curve, ReversedCurve):
        return -line_integral(polys, curve.base)
    if isinstance(curve, ChainedCurve):
        return line_integral(polys, curve.first) + line_integral(polys, curve.second)
    if isinstance(curve, ReparameterizedCurve):
        return line_integral(polys, curve.base)

    max_deg = max((p.degree for p in polys.values()), default=0)

    if isinstance(curve, CirclePath):
        if all(x == 0.0 for x in curve.u) and all(x == 0.0 for x in curve.v):
            return 0.0
        turns = curve.turns
        if float(turns).is_integer():
            if turns == 0:
                return 0.0
            degree = (max_deg + 1) * int(abs(turns))
            nodes = max(2 * degree + 3, 16)
            ts = (np.arange(nodes) + 0.5) * curve.duration / nodes
            total = 0.0
            for t in ts:
                sigma = curve.point(float(t))
                vel = curve.velocity(float(t))
                total += sum(p.evaluate(sigma).real * vel[b] for b, p in polys.items())
            return float(total * curve.duration / nodes)
        return _panel_integral(polys, curve)

    if isinstance(curve, WaypointPath):
        total = 0.0
        gl_nodes, gl_weights = np.polynomial.legendre.leggauss(max(1, (max_deg + 2) // 2 + 1))
        for a, b in zip(curve.points[:-1], curve.points[1:]):
            a = np.asarray(a)
            delta = np.asarray(b) - a
            # int_0^1 P(a + w delta) delta dw, exact for polynomials in w.
            for x, w in zip(gl_nodes, gl_weights):
                wpt = a + 0.5 * (x + 1.0) * delta
                total += 0.5 * w * sum(p.evaluate(wpt).real * delta[bb] for bb, p in polys.items())
        return float(total)

    return _panel_integral(polys, curve)


def _panel_integral(polys: Mapping[int, ParameterPolynomial], curve: ParameterCurve) -> float:
    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(32)
    edges = [0.0] + [b for b in curve.breakpoints if 0.0 < b < curve.duration] + [curve.duration]
    edges = sorted(set(edges))
    panels = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        panels.extend(np.linspace(lo, hi, 5))
    panels = sorted(set(panels))
    total = 0.0
    for lo, hi in zip(panels[:-1], panels[1:]):
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        for x, w in zip(gl_nodes, gl_weights):
            t = mid + half * x
            sigma = curve.point(float(t))
            vel = curve.velocity(float(t))
            total += half * w * sum(p.evaluate(sigma).real * vel[b] for b, p in polys.items())
    return float(total)
