"""Display rounding, kept out of every computation path."""

from decimal import ROUND_HALF_UP, Decimal


def round_half_away(value: float, places: int = 2) -> float:
    """Round half away from zero using the shortest decimal repr of ``value``.

    >>> round_half_away(42.625)
    42.63
    >>> round_half_away(-11.675)
    -11.68
    """
    # Decimal's ROUND_HALF_UP is half-away-from-zero for negatives too.
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def round_count(value: float) -> int:
    """Nearest integer, halves away from zero."""
    return int(Decimal(repr(float(value))).quantize(Decimal(1), rounding=ROUND_HALF_UP))
