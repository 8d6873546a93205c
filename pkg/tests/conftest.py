"""Shared test helpers."""

from __future__ import annotations

from mpmath import mp


def mp_close(a, b, digits: int, scale=None) -> bool:
    """True when a and b agree to ``digits`` significant digits.

    ``scale`` overrides the reference magnitude (useful when the values pass
    through zero).
    """
    with mp.workdps(digits + 10):
        ref = abs(mp.mpf(scale)) if scale is not None else max(abs(a), abs(b))
        if ref == 0:
            return a == b
        return abs(a - b) <= ref * mp.mpf(10) ** (-digits)
