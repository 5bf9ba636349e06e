"""Parameterized Hamiltonians and paths through parameter space."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import NonFinite


def as_point(lam, d: int | None = None) -> np.ndarray:
    p = np.atleast_1d(np.asarray(lam, dtype=float))
    if p.ndim != 1:
        raise ValueError("parameter point must be a vector")
    if d is not None and p.shape[0] != d:
        raise ValueError(f"expected a {d}-dimensional parameter point, got {p.shape[0]}")
    if not np.all(np.isfinite(p)):
        raise NonFinite("parameter point has NaN or Inf entries")
    return p


@dataclass(frozen=True)
class HamiltonianFamily:
    """Map from a real parameter point (``d <= 3`` coordinates) to a ``dim x dim`` matrix."""

    func: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dim: int
    d: int
    label: str = ""
    bounds: tuple | None = None

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ValueError("parameter dimension must be 1, 2 or 3")
        if self.dim < 1:
            raise ValueError("matrix dimension must be positive")

    def __call__(self, lam) -> np.ndarray:
        p = as_point(lam, self.d)
        if self.bounds is not None:
            lo, hi = np.asarray(self.bounds, dtype=float).T
            if np.any(p < lo) or np.any(p > hi):
                raise ValueError(f"{p} outside the domain of {self.label or 'family'}")
        H = np.asarray(self.func(p), dtype=complex)
        if H.shape != (self.dim, self.dim):
            raise ValueError(f"family returned shape {H.shape}, expected {(self.dim, self.dim)}")
        if not np.all(np.isfinite(H)):
            raise NonFinite(f"non-finite Hamiltonian at {p}")
        return H

    def with_gain(self, g: float) -> "HamiltonianFamily":
        """Shift every eigenvalue by ``i g``; eigenvectors are untouched."""
        func = self.func
        dim = self.dim
        return replace(
            self,
            func=lambda p: np.asarray(func(p), dtype=complex) + 1j * g * np.eye(dim),
            label=f"{self.label}+i{g:g}",
        )

    def restricted(self, base, axes: Sequence[int], label: str | None = None) -> "HamiltonianFamily":
        """Family on the coordinates ``axes`` with the others frozen at ``base``."""
        base = as_point(base, self.d)
        axes = list(axes)
        func = self.func

        def sub(q):
            p = base.copy()
            p[axes] = q
            return func(p)

        return HamiltonianFamily(sub, self.dim, len(axes), label or f"{self.label}[{axes}]")


def constant_family(H, d: int = 2, label: str = "constant") -> HamiltonianFamily:
    H = np.array(H, dtype=complex)
    return HamiltonianFamily(lambda p: H, H.shape[0], d, label)


@dataclass(frozen=True)
class Path:
    """A curve ``lambda(s)``, ``s in [0, 1]``, parametrized proportionally to arc length.

    ``kind`` is ``"linear"`` (piecewise-linear through ``waypoints``) or
    ``"arc"`` (circle of ``radius`` around ``center`` in coordinate ``plane``,
    other coordinates frozen at ``base``, angle running ``start -> end``).
    """

    kind: str
    waypoints: np.ndarray | None = None
    center: tuple = (0.0, 0.0)
    radius: float = 1.0
    start: float = 0.0
    end: float = 0.0
    plane: tuple = (0, 1)
    base: np.ndarray | None = None
    n_steps: int = 200

    def __post_init__(self):
        if self.n_steps < 2:
            raise ValueError("n_steps must be at least 2")
        if self.kind == "linear":
            w = np.atleast_2d(np.asarray(self.waypoints, dtype=float))
            if w.shape[0] < 2:
                raise ValueError("a linear path needs at least two waypoints")
            if np.any(np.linalg.norm(np.diff(w, axis=0), axis=1) == 0):
                raise ValueError("consecutive waypoints must be distinct")
            object.__setattr__(self, "waypoints", w)
            seg = np.linalg.norm(np.diff(w, axis=0), axis=1)
            object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(seg)]))
        elif self.kind == "arc":
            if self.radius <= 0 or self.start == self.end:
                raise ValueError("an arc needs positive radius and distinct angles")
            d = max(self.plane) + 1 if self.base is None else len(self.base)
            base = np.zeros(d) if self.base is None else np.asarray(self.base, dtype=float).copy()
            object.__setattr__(self, "base", base)
        else:
            raise ValueError(f"unknown path kind {self.kind!r}")

    @classmethod
    def line(cls, *waypoints, n_steps: int = 200) -> "Path":
        return cls("linear", np.asarray(waypoints, dtype=float), n_steps=n_steps)

    @classmethod
    def arc(cls, center, radius, start, end, plane=(0, 1), base=None, n_steps: int = 200) -> "Path":
        return cls(
            "arc",
            center=tuple(float(c) for c in center),
            radius=float(radius),
            start=float(start),
            end=float(end),
            plane=tuple(plane),
            base=None if base is None else np.asarray(base, dtype=float),
            n_steps=n_steps,
        )

    @property
    def d(self) -> int:
        return self.waypoints.shape[1] if self.kind == "linear" else len(self.base)

    @property
    def _cumulative(self) -> np.ndarray:
        return self._cum

    @property
    def length(self) -> float:
        if self.kind == "linear":
            return float(self._cumulative[-1])
        return abs(self.end - self.start) * self.radius

    def position(self, s: float) -> np.ndarray:
        s = min(max(float(s), 0.0), 1.0)
        if self.kind == "linear":
            cum = self._cumulative
            target = s * cum[-1]
            k = int(np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(cum) - 2))
            frac = (target - cum[k]) / (cum[k + 1] - cum[k])
            return self.waypoints[k] + frac * (self.waypoints[k + 1] - self.waypoints[k])
        theta = self.start + s * (self.end - self.start)
        p = self.base.copy()
        i, j = self.plane
        p[i] = self.center[0] + self.radius * math.cos(theta)
        p[j] = self.center[1] + self.radius * math.sin(theta)
        return p

    def positions(self, ss) -> np.ndarray:
        """Vectorized :meth:`position` over an array of path fractions."""
        ss = np.clip(np.asarray(ss, dtype=float), 0.0, 1.0)
        if self.kind == "linear":
            cum = self._cumulative
            target = ss * cum[-1]
            k = np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(cum) - 2)
            frac = (target - cum[k]) / (cum[k + 1] - cum[k])
            w = self.waypoints
            return w[k] + frac[:, None] * (w[k + 1] - w[k])
        theta = self.start + ss * (self.end - self.start)
        p = np.repeat(self.base[None, :], len(ss), axis=0)
        i, j = self.plane
        p[:, i] = self.center[0] + self.radius * np.cos(theta)
        p[:, j] = self.center[1] + self.radius * np.sin(theta)
        return p

    def tangent(self, s: float) -> np.ndarray:
        """``d lambda / d s``; one-sided at waypoint corners (left segment wins at s=1)."""
        s = min(max(float(s), 0.0), 1.0)
        if self.kind == "linear":
            cum = self._cumulative
            target = s * cum[-1]
            k = int(np.clip(np.searchsorted(cum, target, side="right") - 1, 0, len(cum) - 2))
            seg = self.waypoints[k + 1] - self.waypoints[k]
            return seg / np.linalg.norm(seg) * cum[-1]
        theta = self.start + s * (self.end - self.start)
        t = np.zeros_like(self.base)
        i, j = self.plane
        dth = self.end - self.start
        t[i] = -self.radius * math.sin(theta) * dth
        t[j] = self.radius * math.cos(theta) * dth
        return t

    def sample(self, n: int | None = None) -> np.ndarray:
        """``n`` (default ``n_steps``) points evenly spaced in arc length, endpoints included."""
        n = self.n_steps if n is None else int(n)
        if n < 2:
            raise ValueError("need at least two samples")
        return np.array([self.position(s) for s in np.linspace(0.0, 1.0, n)])

    def breakpoints(self) -> np.ndarray:
        """Path fractions of the corners (empty for arcs)."""
        if self.kind != "linear" or len(self.waypoints) == 2:
            return np.array([])
        cum = self._cumulative
        return cum[1:-1] / cum[-1]

    @property
    def is_closed(self) -> bool:
        return bool(np.allclose(self.position(0.0), self.position(1.0), atol=1e-12))

    def reversed(self) -> "Path":
        if self.kind == "linear":
            return replace(self, waypoints=self.waypoints[::-1].copy())
        return replace(self, start=self.end, end=self.start)

    def with_steps(self, n_steps: int) -> "Path":
        return replace(self, n_steps=int(n_steps))


def rectangle(corner, width: float, height: float, plane=(0, 1), base=None, n_steps: int = 200) -> Path:
    """Closed counterclockwise rectangle in ``plane`` starting at ``corner``."""
    i, j = plane
    d = max(plane) + 1 if base is None else len(base)
    p0 = np.zeros(d) if base is None else np.asarray(base, dtype=float).copy()
    p0[i], p0[j] = corner
    pts = []
    for dx, dy in [(0, 0), (width, 0), (width, height), (0, height), (0, 0)]:
        q = p0.copy()
        q[i] += dx
        q[j] += dy
        pts.append(q)
    return Path.line(*pts, n_steps=n_steps)
