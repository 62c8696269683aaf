"""Graded tensor-product grids aligned to material interfaces.

Cells inside a fine zone have size <= ``pitch``; outside it they grow
geometrically toward the window edge, capped at ``max_cell``. Every
breakpoint (interface) falls exactly on a cell edge, so each cell lies
wholly inside one material region.
"""

from __future__ import annotations

import math

import numpy as np


def _uniform(length, pitch):
    n = max(1, math.ceil(length / pitch - 1e-9))
    return [length / n] * n


def _graded(length, pitch, growth, max_cell):
    """Cell sizes for a segment, smallest first, summing exactly to ``length``."""
    sizes = []
    s = pitch
    total = 0.0
    while total < length - 1e-12:
        s = min(s * growth, max_cell)
        sizes.append(s)
        total += s
    # absorb the overshoot proportionally so the sizes sum to length
    scale = length / total
    return [v * scale for v in sizes]


def graded_axis(breakpoints, fine_lo, fine_hi, pitch, growth=1.2, max_cell=None):
    """Return cell edges covering ``[breakpoints[0], breakpoints[-1]]``.

    Parameters
    ----------
    breakpoints : sequence of float
        Interface coordinates including both window ends.
    fine_lo, fine_hi : float
        Bounds of the fine zone; they are added to the breakpoint set.
    pitch : float
        Maximum cell size in the fine zone.
    growth : float
        Ratio between successive cells outside the fine zone.
    max_cell : float, optional
        Cap on graded cell size (default ``4 * pitch``).
    """
    if max_cell is None:
        max_cell = 4.0 * pitch
    lo, hi = breakpoints[0], breakpoints[-1]
    fine_lo, fine_hi = max(lo, fine_lo), min(hi, fine_hi)
    pts = sorted(set(float(b) for b in breakpoints) | {fine_lo, fine_hi})
    pts = [p for p in pts if lo <= p <= hi]
    sizes = []
    for a, b in zip(pts, pts[1:]):
        length = b - a
        if length <= 1e-12:
            continue
        if a >= fine_lo - 1e-12 and b <= fine_hi + 1e-12:
            sizes.extend(_uniform(length, pitch))
        elif b <= fine_lo + 1e-12:
            # grows away from the fine zone, i.e. toward the low end
            sizes.extend(reversed(_graded_from(a, b, fine_lo, pitch, growth, max_cell)))
        else:
            sizes.extend(_graded_from(a, b, fine_hi, pitch, growth, max_cell))
    edges = np.concatenate([[lo], lo + np.cumsum(sizes)])
    edges[-1] = hi
    return edges


def _graded_from(a, b, anchor, pitch, growth, max_cell):
    # Segment [a, b] outside the fine zone; the first cell size continues
    # the grading from however far the segment sits from the anchor.
    near = min(abs(a - anchor), abs(b - anchor))
    start = pitch
    dist = 0.0
    while dist < near - 1e-12:
        start = min(start * growth, max_cell)
        dist += start
    return _graded(b - a, start, growth, max_cell)


def symmetric_axis(half_breakpoints, fine_half, pitch, growth=1.2, max_cell=None):
    """Edges symmetric about zero, built from the non-negative half.

    ``half_breakpoints`` are positive interface positions (window half-width
    last); ``fine_half`` is the half-width of the fine zone.
    """
    half = graded_axis([0.0, *sorted(half_breakpoints)], -1.0, fine_half, pitch, growth, max_cell)
    return np.concatenate([-half[:0:-1], half])


def centers(edges):
    edges = np.asarray(edges)
    return 0.5 * (edges[1:] + edges[:-1])
