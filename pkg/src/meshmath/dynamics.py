"""Flows, maps and walks whose orbits get turned into printable tubes and beads."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .tessellate import Polyline3

DEDUP_TOL = 1e-7
PERIOD_TOL = 1e-7
PERIOD_RUN = 100
MAX_PERIOD = 64


class IntegrationError(ArithmeticError):
    pass


class DigitError(ValueError):
    pass


@dataclass(frozen=True)
class FlowField:
    fn: Callable[[np.ndarray], np.ndarray]
    name: str = "flow"
    params: dict = field(default_factory=dict)

    def __call__(self, x) -> np.ndarray:
        return np.asarray(self.fn(np.asarray(x, dtype=float)), dtype=float)


def lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 8.0 / 3.0) -> FlowField:
    def fn(p):
        x, y, z = p
        return np.array([sigma * (y - x), -x * z + rho * x - y, x * y - beta * z])

    return FlowField(fn, "lorenz", {"sigma": sigma, "rho": rho, "beta": beta})


def abc_flow(A: float = 1.0, B: float = 1.0, C: float = 1.0) -> FlowField:
    """Arnold-Beltrami-Childress flow on the 2 pi torus (divergence free)."""
    def fn(p):
        x, y, z = p
        return np.array([
            A * math.sin(z) + C * math.cos(y),
            B * math.sin(x) + A * math.cos(z),
            C * math.sin(y) + B * math.cos(x),
        ])

    return FlowField(fn, "abc", {"A": A, "B": B, "C": C})


def linear_flow(matrix) -> FlowField:
    M = np.asarray(matrix, dtype=float)
    return FlowField(lambda p: M @ p, "linear", {})


@dataclass(frozen=True)
class OrbitSample:
    points: np.ndarray
    h: float
    n: int

    def polyline(self, closed: bool = False) -> Polyline3:
        return Polyline3(self.points, closed)


def rk4_step(f: FlowField, x, h: float) -> np.ndarray:
    """One classical Runge-Kutta step, stages scaled by h up front."""
    if not h > 0:
        raise IntegrationError(f"step size must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    u = h * f(x)
    v = h * f(x + u / 2)
    w = h * f(x + v / 2)
    q = h * f(x + w)
    out = x + (u + 2 * v + 2 * w + q) / 6
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state in Runge-Kutta step")
    return out


def integrate(f: FlowField, x0, h: float, n: int) -> OrbitSample:
    if n < 1:
        raise IntegrationError(f"step count must be >= 1, got {n}")
    x = np.asarray(x0, dtype=float)
    pts = np.empty((n + 1,) + x.shape)
    pts[0] = x
    for i in range(n):
        try:
            x = rk4_step(f, x, h)
        except IntegrationError as exc:
            raise IntegrationError(f"step {i + 1}: {exc}") from None
        pts[i + 1] = x
    return OrbitSample(pts, h, n)


def wrap_torus(points: np.ndarray, period: float = 2 * np.pi) -> list[np.ndarray]:
    """Reduce coordinates mod ``period`` and split where the orbit wraps."""
    pts = np.asarray(points, float)
    cell = np.floor(pts / period)
    wrapped = pts - cell * period
    cuts = np.flatnonzero(np.any(np.diff(cell, axis=0) != 0, axis=1)) + 1
    return [piece for piece in np.split(wrapped, cuts) if len(piece)]


# -------------------------------------------------------------- sine map

def sine_map(c: float, x: float) -> float:
    return c * math.sin(math.pi * x)


@dataclass(frozen=True)
class MapAttractor:
    c: float
    samples: np.ndarray
    lyapunov: float


def dedup_sorted(values, tol: float = DEDUP_TOL) -> np.ndarray:
    """Sorted values with near-duplicates (gap <= tol to the last kept) removed."""
    v = np.sort(np.asarray(values, float))
    if not len(v):
        return v
    keep = [v[0]]
    for x in v[1:]:
        if x - keep[-1] > tol:
            keep.append(x)
    return np.array(keep)


def map_attractor(c: float, burn_in: int = 400, keep: int = 3101, x0: float = 0.3) -> MapAttractor:
    """Attractor of x -> c sin(pi x) from ``x0``.

    Iterates ``burn_in + keep`` times after the start value, keeps the last
    ``keep`` iterates, dedups them, and averages log|c pi cos(pi x)| over the
    distinct samples.  A sample at a critical point gives ``-inf``.
    """
    if not 0 < c <= 1:
        raise ValueError(f"c must lie in (0, 1], got {c}")
    if burn_in < 0 or keep < 1:
        raise ValueError("burn_in must be >= 0 and keep >= 1")
    x = x0
    orbit = [x]
    for _ in range(burn_in + keep - 1):
        x = c * math.sin(math.pi * x)
        orbit.append(x)
    samples = dedup_sorted(orbit[burn_in:])
    with np.errstate(divide="ignore"):
        lyap = float(np.mean(np.log(np.abs(c * np.pi * np.cos(np.pi * samples)))))
    return MapAttractor(c, samples, lyap)


def detect_period(c: float, burn_in: int = 20000, x0: float = 0.5,
                  max_period: int = MAX_PERIOD, tol: float = PERIOD_TOL, run: int = PERIOD_RUN) -> int | None:
    """Smallest p <= max_period with |x[i+p] - x[i]| < tol for ``run`` consecutive i."""
    x = x0
    for _ in range(burn_in):
        x = c * math.sin(math.pi * x)
    orbit = [x]
    for _ in range(run + max_period):
        x = c * math.sin(math.pi * x)
        orbit.append(x)
    o = np.array(orbit)
    for p in range(1, max_period + 1):
        if np.all(np.abs(o[p: p + run] - o[:run]) < tol):
            return p
    return None


def _cycle(c: float, p: int, x: float, iters: int = 60):
    """Newton-refine a period-p point of the sine map; returns (x, multiplier)."""
    for _ in range(iters):
        y = x
        d = 1.0
        for _ in range(p):
            d *= c * math.pi * math.cos(math.pi * y)
            y = c * math.sin(math.pi * y)
        g = y - x
        dg = d - 1.0
        if dg == 0:
            break
        step = g / dg
        x -= step
        if abs(step) < 1e-15:
            break
    mult = 1.0
    y = x
    for _ in range(p):
        mult *= c * math.pi * math.cos(math.pi * y)
        y = c * math.sin(math.pi * y)
    return x, mult


def cycle_multiplier(c: float, p: int, settle: int = 4000) -> float:
    """Multiplier of the period-p cycle the orbit of 1/2 settles near."""
    x = 0.5
    for _ in range(settle):
        x = c * math.sin(math.pi * x)
    return _cycle(c, p, x)[1]


def period_doublings(count: int = 4) -> list[float]:
    """Parameters where the sine map's 2^k cycle loses stability (multiplier -1).

    Walks up from the superstable fixed point at c = 1/2 in steps of a
    sixteenth of the previous doubling interval until multiplier + 1 changes
    sign, then polishes the bracket with brentq.
    """
    out = []
    c = 0.5
    step = 1 / 160
    for k in range(count):
        p = 2 ** k

        def g(c, p=p):
            return cycle_multiplier(c, p) + 1.0

        a, b = c, c + step
        while g(b) > 0:
            a, b = b, b + step
        out.append(brentq(g, a, b, xtol=1e-15))
        if len(out) > 1:
            step = (out[-1] - out[-2]) / 16
        c = out[-1] + 1e-3 * step
    return out


def feigenbaum_ratios(bifurcations: Sequence[float]) -> list[float]:
    c = [float(x) for x in bifurcations]
    if len(c) < 4:
        raise ValueError(f"need at least 4 bifurcation values, got {len(c)}")
    d = np.diff(c)
    if np.any(d <= 0):
        raise ValueError("bifurcation values must be strictly increasing")
    return [d[i] / d[i + 1] for i in range(len(d) - 1)]


def feigenbaum_delta(bifurcations: Sequence[float]) -> float:
    """Ratio of the last two gaps between successive period doublings."""
    return feigenbaum_ratios(bifurcations)[-1]


# ------------------------------------------------------------ digit walks

_STEPS = {
    4: np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0]], float),
    6: np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float),
}


def digit_walk(digits: Sequence[int], base: int = 6, step: float = 1.0) -> Polyline3:
    """Lattice walk from the origin; digit 2k steps along +axis k, 2k+1 along -axis k.

    Base 4 stays in the xy-plane.  Returns ``len(digits) + 1`` points.
    """
    if base not in _STEPS:
        raise DigitError(f"base must be 4 or 6, got {base}")
    d = np.asarray(list(digits), dtype=np.int64)
    bad = np.flatnonzero((d < 0) | (d >= base))
    if len(bad):
        raise DigitError(f"digit {int(d[bad[0]])} at index {int(bad[0])} out of range for base {base}")
    moves = _STEPS[base][d] * step
    return Polyline3(np.concatenate([np.zeros((1, 3)), np.cumsum(moves, axis=0)]))


def parse_digits(text: str, base: int) -> list[int]:
    out = []
    for pos, ch in enumerate(text):
        if ch.isspace():
            continue
        if not ch.isdigit() or int(ch) >= base:
            raise DigitError(f"bad digit {ch!r} at offset {pos} for base {base}")
        out.append(int(ch))
    return out


def read_digit_file(path, base: int = 6, count: int | None = None) -> list[int]:
    digits = parse_digits(Path(path).read_text(), base)
    if count is not None:
        if count > len(digits):
            raise DigitError(f"{path} holds {len(digits)} digits, {count} requested")
        digits = digits[:count]
    return digits
