"""Detect the size identity left behind by 1:k matching from a base group."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class RatioSignature:
    total: int
    base: int
    k: int | None
    exact: bool


def detect_ratio_signature(total: int, base: int) -> RatioSignature:
    """``exact`` when ``total == (k + 1) * base`` for an integer k >= 1."""
    if base < 1 or total < base:
        raise ValueError(f"need total >= base >= 1, got total={total}, base={base}")
    quotient, remainder = divmod(total, base)
    if remainder == 0 and quotient >= 2:
        return RatioSignature(total, base, quotient - 1, True)
    return RatioSignature(total, base, None, False)
