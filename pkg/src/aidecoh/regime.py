"""Validity-regime checks shared by the closed-form evaluators.

Checks are soft by default: they emit a ``RegimeWarning`` and return the
flag name. With ``strict=True`` they raise ``RegimeError`` instead.
"""
from __future__ import annotations

import warnings


class RegimeWarning(UserWarning):
    """A formula is being evaluated outside its stated validity regime."""

    def __init__(self, flag: str, message: str):
        super().__init__(message)
        self.flag = flag


class RegimeError(ArithmeticError):
    """Raised for regime violations in strict mode, or when a formula is undefined."""

    def __init__(self, flag: str, message: str):
        super().__init__(message)
        self.flag = flag


class SingularityError(ArithmeticError):
    """A point source sits (numerically) on top of an evaluation point."""


def check(flag: str, value: float, threshold: float, strict: bool = False,
          what: str = "") -> str | None:
    """Flag ``value > threshold``. Returns the flag name when tripped."""
    if value > threshold:
        msg = f"{flag}: {what or flag} = {value:.3g} exceeds {threshold:.3g}"
        if strict:
            raise RegimeError(flag, msg)
        warnings.warn(RegimeWarning(flag, msg), stacklevel=3)
        return flag
    return None
