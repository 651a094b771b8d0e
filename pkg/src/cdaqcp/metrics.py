"""Comparison metrics for bounds on unsolved instances (percentages)."""
from __future__ import annotations

import math
import warnings


def gap(upper: float, lower: float) -> float:
    """Relative gap (upper - lower) / |upper| in percent.

    A zero upper bound falls back to a unit denominator with a warning.
    """
    if not math.isfinite(upper):
        raise ValueError("upper bound must be finite")
    denom = abs(upper)
    if denom == 0:
        warnings.warn("zero upper bound; using denominator 1", RuntimeWarning, stacklevel=2)
        denom = 1.0
    return (upper - lower) / denom * 100.0


def additional_gap_closed(better_lb: float, worse_lb: float, best_ub: float) -> float:
    """Share of the gap left by ``worse_lb`` that ``better_lb`` closes, in percent."""
    if better_lb < worse_lb:
        raise ValueError("better_lb must be at least worse_lb")
    if not best_ub > worse_lb:
        raise ValueError("best_ub must exceed worse_lb")
    return (better_lb - worse_lb) / (best_ub - worse_lb) * 100.0
