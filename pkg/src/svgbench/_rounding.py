"""Half-up decimal rounding shared by metrics and reports.

Python's round() is banker's rounding; reported one-decimal numbers use
conventional half-up so 87.55 -> 87.6 links arithmetic to the published
table conventions deterministically.
"""

from decimal import ROUND_HALF_UP, Decimal


def round_half_up(value: float, decimals: int = 1) -> float:
    quantum = Decimal(1).scaleb(-decimals)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))
