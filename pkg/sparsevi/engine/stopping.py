"""
Stopping rule on window-averaged lower-bound estimates.

The running maximum L̄_max is tracked; a window whose average falls below it
increments a counter, a window at or above it resets the counter and raises
the maximum. The fit stops once the counter reaches the patience M.
"""

import math
from typing import Sequence

import numpy as np

from sparsevi.exceptions import ValidationError
from sparsevi.models import StopDecision


class StoppingRule:
    """Incremental form of the rule; feed one window average at a time."""

    def __init__(self, patience: int = 3):
        if patience < 1:
            raise ValidationError(f"patience M must be at least 1, got {patience}")
        self.patience = patience
        self.best = -math.inf
        self.below_best = 0

    def update(self, lbar: float) -> StopDecision:
        if lbar >= self.best:
            self.best = lbar
            self.below_best = 0
        else:
            # NaN averages count as below the maximum
            self.below_best += 1
        return StopDecision.STOP if self.below_best >= self.patience else StopDecision.CONTINUE


def stopping_check(trace: Sequence[float], current: float, patience: int = 3) -> StopDecision:
    """
    Decision after appending ``current`` to the earlier window averages ``trace``.

    Example:
        >>> stopping_check([1, 2, 3, 2.9, 2.8], 2.7)
        <StopDecision.STOP: 'stop'>
    """
    rule = StoppingRule(patience)
    for value in trace:
        rule.update(value)
    return rule.update(current)


def is_divergent(trace: Sequence[float], patience: int = 3, factor: float = 10.0) -> bool:
    """
    True when each of the last ``patience`` window-to-window changes is a drop
    larger than ``factor`` standard deviations of the changes before them.

    A non-finite average among the last ``patience`` windows counts as
    divergence; earlier non-finite windows only drop out of the spread. Needs
    at least two finite earlier changes to estimate the spread.
    """
    values = np.asarray(trace, dtype=float)
    if not np.all(np.isfinite(values[-patience:])):
        return True
    changes = np.diff(values)
    reference = changes[:-patience]
    reference = reference[np.isfinite(reference)]
    if reference.size < 2:
        return False
    spread = float(np.std(reference))
    return bool(np.all(changes[-patience:] < -factor * spread))
