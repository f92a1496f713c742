"""Generation outcome bookkeeping: did an item yield a renderable SVG?"""

from typing import Sequence

from .._rounding import round_half_up


class EmptyInput(ValueError):
    """A rate over zero items is undefined."""


def compute_success_rate(outcomes: Sequence[bool]) -> float:
    """Percentage of successful outcomes, rounded half-up to one decimal.

    An outcome is successful when the pipeline produced an SVG that survived
    extraction, sanitation, and rendering. Raises EmptyInput on no outcomes.
    """
    total = len(outcomes)
    if total == 0:
        raise EmptyInput("cannot compute a success rate over zero outcomes")
    successes = sum(1 for ok in outcomes if ok)
    return round_half_up(100.0 * successes / total, 1)
