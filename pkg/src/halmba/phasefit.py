"""Piecewise transmission-line fit of a frequency-dependent phase offset.

Each segment is a nondispersive line, ``phi(f) = -theta * f / f_ref``, with
``theta`` its electrical length in degrees at ``f_ref``. Per segment,
``theta`` minimizes the maximum absolute error; the segmentation minimizes
the worst segment error, with the total of segment errors as tie-break.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Segment:
    freq_lo: float
    freq_hi: float
    electrical_length_deg: float
    max_abs_error_deg: float
    start: int
    stop: int


@dataclass(frozen=True)
class PhaseFitResult:
    segments: list[Segment]
    max_abs_error_deg: float

    @property
    def breakpoints(self) -> list[int]:
        """Index of the first point of every segment after the first."""
        return [s.start for s in self.segments[1:]]


def minimax_line(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Slope ``s`` through the origin minimizing ``max |y - s x|`` for ``x > 0``.

    The error is convex and piecewise linear in ``s``; its minimum sits where
    an increasing branch ``s x_i - y_i`` meets a decreasing branch
    ``y_j - s x_j``, so enumerating those crossings is exact.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    cand = ((y[:, None] + y[None, :]) / (x[:, None] + x[None, :])).ravel()
    err = np.max(np.abs(y[None, :] - cand[:, None] * x[None, :]), axis=1)
    k = int(np.argmin(err))
    return float(cand[k]), float(err[k])


def tl_phase_fit(points, k_segments: int, ref_freq: float) -> PhaseFitResult:
    """Fit ``k_segments`` contiguous transmission-line segments to ``(freq, phi_deg)`` points."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must be a sequence of (freq, phi_deg) pairs")
    if k_segments < 1:
        raise ValueError("k_segments must be at least 1")
    n = len(pts)
    if n < k_segments + 1:
        raise ValueError(f"need at least {k_segments + 1} points for {k_segments} segments")
    if not ref_freq > 0:
        raise ValueError("ref_freq must be positive")
    f, phi = pts[:, 0], pts[:, 1]
    if np.any(f <= 0) or np.any(np.diff(f) <= 0):
        raise ValueError("frequencies must be positive and strictly increasing")
    x = f / ref_freq

    # cost[i, j]: minimax error of one segment covering points i..j-1
    cost = np.full((n + 1, n + 1), np.inf)
    slope = np.zeros((n + 1, n + 1))
    for i in range(n):
        for j in range(i + 1, n + 1):
            slope[i, j], cost[i, j] = minimax_line(x[i:j], -phi[i:j])

    # pass 1: smallest achievable worst-segment error
    worst = np.full((k_segments + 1, n + 1), np.inf)
    worst[0, 0] = 0.0
    for k in range(1, k_segments + 1):
        for j in range(k, n + 1):
            worst[k, j] = min(max(worst[k - 1, i], cost[i, j]) for i in range(k - 1, j))
    limit = worst[k_segments, n]
    cap = limit * (1 + 1e-9) + 1e-12

    # pass 2: among partitions within that bound, minimize the summed error
    total = np.full((k_segments + 1, n + 1), np.inf)
    back = np.zeros((k_segments + 1, n + 1), dtype=int)
    total[0, 0] = 0.0
    for k in range(1, k_segments + 1):
        for j in range(k, n + 1):
            for i in range(k - 1, j):
                if cost[i, j] <= cap and total[k - 1, i] + cost[i, j] < total[k, j]:
                    total[k, j] = total[k - 1, i] + cost[i, j]
                    back[k, j] = i
    bounds = []
    j = n
    for k in range(k_segments, 0, -1):
        i = back[k, j]
        bounds.append((i, j))
        j = i
    bounds.reverse()

    segments = []
    for s, (i, j) in enumerate(bounds):
        lo = f[0] if s == 0 else 0.5 * (f[i - 1] + f[i])
        hi = f[-1] if s == len(bounds) - 1 else 0.5 * (f[j - 1] + f[j])
        segments.append(Segment(float(lo), float(hi), float(slope[i, j]), float(cost[i, j]), int(i), int(j)))
    return PhaseFitResult(segments, float(max(s.max_abs_error_deg for s in segments)))
